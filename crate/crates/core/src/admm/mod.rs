//! The outer iteration.
//!
//! One step, starting from (x_{k−1}, y_{k−1}, γ_{k−1}):
//!
//! 1. obtain (x̃_k, u_k) from the x-oracle so that u_k ∈ ∂f(x̃_k) − Aᵀγ̃_k
//!    and the relative-error acceptance test holds, where
//!    γ̃_k = γ_{k−1} − β(A x̃_k + B y_{k−1} − b);
//! 2. γ_{k−1/2} = γ_{k−1} − τβ(A x̃_k + B y_{k−1} − b);
//! 3. y_k solves the proximal y-subproblem at γ_{k−1/2} exactly;
//! 4. x_k = x_{k−1} − G⁻¹u_k and γ_k = γ_{k−1/2} − θβ(A x̃_k + B y_k − b).
//!
//! Runs stop when ‖M(z_{k−1} − z_k)‖_∞ drops below the tolerance. Residual
//! histories, optional structural-identity checks and optional certificate
//! traces are collected into a [`RunReport`].

mod ergodic;
mod report;

pub use ergodic::{ErgodicReport, ErgodicState};
pub use report::{
    csv_string, csv_without_time, write_csv, IterationRow, RunReport, RunSummary, CSV_HEADER,
};

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::linop::{LinearOperator, OpError, OpRef, SpdOperator};
use crate::oracles::{
    InexactXOracle, OracleError, XStepInputs, YStepInputs, YSubproblemOracle, ACCEPT_SLACK,
};
use crate::region::{AccelParams, CertificateScalars, RegionError};
use crate::vecops;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("problem dimensions are inconsistent: {0}")]
    Dims(String),
    #[error("x-oracle returned a pair violating the acceptance test at iteration {k}: lhs {lhs:.3e} > rhs {rhs:.3e}")]
    AcceptanceContract { k: usize, lhs: f64, rhs: f64 },
}

/// Recomputation of the subgradient residual, (x̃, γ̃) ↦ ∇f(x̃) − Aᵀγ̃.
pub type SubgradResidualFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// The problem data: min f(x) + g(y) s.t. A x + B y = rhs, with f and g
/// reachable only through their oracles.
pub struct Problem {
    pub a: OpRef,
    pub b: OpRef,
    pub rhs: Vec<f64>,
    pub x_oracle: Arc<dyn InexactXOracle>,
    pub y_oracle: Arc<dyn YSubproblemOracle>,
    /// Optional subgradient-residual recomputation for certificate
    /// cross-checks on smooth f.
    pub f_residual: Option<SubgradResidualFn>,
}

impl Problem {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.in_dim(), self.b.in_dim(), self.rhs.len())
    }

    fn check_dims(&self) -> Result<(), SolveError> {
        if self.a.out_dim() != self.rhs.len() || self.b.out_dim() != self.rhs.len() {
            return Err(SolveError::Dims(format!(
                "A maps into R^{}, B into R^{}, but rhs has length {}",
                self.a.out_dim(),
                self.b.out_dim(),
                self.rhs.len()
            )));
        }
        Ok(())
    }
}

/// Run parameters: the validated scalars plus the proximal operators.
#[derive(Clone)]
pub struct SolverParams {
    pub accel: AccelParams,
    pub g: SpdOperator,
    pub h: SpdOperator,
}

impl SolverParams {
    /// G = I/β, H = 0 — the trivial proximal choice.
    pub fn with_identity_proximal(accel: AccelParams, n: usize, p: usize) -> Self {
        SolverParams {
            g: SpdOperator::identity_scaled(n, 1.0 / accel.beta),
            h: SpdOperator::zero(p),
            accel,
        }
    }
}

/// One outer iterate. `gamma_tilde` and `x` stay recomputable from the
/// stored pieces: γ̃ = γ_prev − β(A x̃ + B y_prev − rhs) and
/// x = x_prev − G⁻¹u.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub k: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub gamma: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub gamma_tilde: Vec<f64>,
    pub gamma_half: Vec<f64>,
    pub u: Vec<f64>,
    /// cumulative inner-solver iterations up to and including this iterate
    pub inner_total: usize,
    /// inner iterations spent on this iterate alone
    pub inner_last: usize,
}

impl IterateState {
    pub fn initial(x0: Vec<f64>, y0: Vec<f64>, gamma0: Vec<f64>) -> Self {
        let n = x0.len();
        IterateState {
            k: 0,
            x: x0,
            y: y0,
            gamma: gamma0.clone(),
            x_tilde: vec![0.0; n],
            gamma_tilde: gamma0.clone(),
            gamma_half: gamma0,
            u: vec![0.0; n],
            inner_total: 0,
            inner_last: 0,
        }
    }

    pub fn zeros(n: usize, p: usize, m: usize) -> Self {
        IterateState::initial(vec![0.0; n], vec![0.0; p], vec![0.0; m])
    }

    pub fn z(&self) -> Vec<f64> {
        vecops::concat3(&self.x, &self.y, &self.gamma)
    }

    /// z̃ = (x̃, y, γ̃)
    pub fn z_tilde(&self) -> Vec<f64> {
        vecops::concat3(&self.x_tilde, &self.y, &self.gamma_tilde)
    }
}

/// γ̃ = γ_prev − β(A x̃ + B y_prev − rhs)
pub fn gamma_tilde(
    gamma_prev: &[f64],
    x_tilde: &[f64],
    y_prev: &[f64],
    problem: &Problem,
    beta: f64,
) -> Vec<f64> {
    let mut infeas = problem.a.apply(x_tilde);
    vecops::axpy(1.0, &problem.b.apply(y_prev), &mut infeas);
    vecops::axpy(-1.0, &problem.rhs, &mut infeas);
    vecops::lincomb(1.0, gamma_prev, -beta, &infeas)
}

/// The relative-error acceptance test
/// ‖x̃ − x_prev + G⁻¹u‖²_G ≤ (σ̃/β)‖γ̃ − γ_prev‖² + σ̂‖x̃ − x_prev‖²_G,
/// with a 1e-12 absolute slack on the right-hand side.
#[allow(clippy::too_many_arguments)]
pub fn accept_inexact(
    x_tilde: &[f64],
    x_prev: &[f64],
    u: &[f64],
    gamma_tilde: &[f64],
    gamma_prev: &[f64],
    g: &SpdOperator,
    beta: f64,
    sigma_tilde: f64,
    sigma_hat: f64,
) -> Result<bool, SolveError> {
    let ginv_u = g.inverse_apply(u).map_err(|_| {
        SolveError::Oracle(OracleError::Config(
            "acceptance test requires G with an inverse".into(),
        ))
    })?;
    let mut s = vecops::sub(x_tilde, x_prev);
    vecops::axpy(1.0, &ginv_u, &mut s);
    let lhs = g.quad_form(&s);
    let dgamma = vecops::sub(gamma_tilde, gamma_prev);
    let dx = vecops::sub(x_tilde, x_prev);
    let rhs =
        sigma_tilde / beta * vecops::norm_sq(&dgamma) + sigma_hat * g.quad_form(&dx);
    Ok(lhs <= rhs + ACCEPT_SLACK)
}

/// One outer iteration. The x-oracle internally iterates until the
/// acceptance test passes; the returned pair is re-verified here (with a
/// small extra relative slack so re-evaluation rounding cannot flip a
/// decision the oracle already made).
pub fn step(
    state: &IterateState,
    problem: &Problem,
    params: &SolverParams,
    max_inner: usize,
    warm_start_inner: bool,
) -> Result<IterateState, SolveError> {
    let accel = &params.accel;
    let beta = accel.beta;
    let out = problem.x_oracle.solve_x(&XStepInputs {
        x_prev: &state.x,
        y_prev: &state.y,
        gamma_prev: &state.gamma,
        beta,
        g: &params.g,
        sigma_tilde: accel.sigma_tilde,
        sigma_hat: accel.sigma_hat,
        max_inner,
        warm_start: warm_start_inner,
    })?;

    let a_xt = problem.a.apply(&out.x_tilde);
    let mut infeas_tilde = vecops::add(&a_xt, &problem.b.apply(&state.y));
    vecops::axpy(-1.0, &problem.rhs, &mut infeas_tilde);
    let gamma_tilde = vecops::lincomb(1.0, &state.gamma, -beta, &infeas_tilde);

    {
        let ginv_u = params.g.inverse_apply(&out.u)?;
        let mut s = vecops::sub(&out.x_tilde, &state.x);
        vecops::axpy(1.0, &ginv_u, &mut s);
        let lhs = params.g.quad_form(&s);
        let dgamma = vecops::sub(&gamma_tilde, &state.gamma);
        let dx = vecops::sub(&out.x_tilde, &state.x);
        let rhs = accel.sigma_tilde / beta * vecops::norm_sq(&dgamma)
            + accel.sigma_hat * params.g.quad_form(&dx);
        if lhs > rhs + ACCEPT_SLACK + 1e-12 * (1.0 + lhs) {
            return Err(SolveError::AcceptanceContract {
                k: state.k + 1,
                lhs,
                rhs,
            });
        }
    }

    let gamma_half = vecops::lincomb(1.0, &state.gamma, -accel.tau * beta, &infeas_tilde);

    let y = problem.y_oracle.solve_y(&YStepInputs {
        y_prev: &state.y,
        a_x_tilde: &a_xt,
        gamma_half: &gamma_half,
        beta,
        h: &params.h,
    })?;

    let ginv_u = params.g.inverse_apply(&out.u)?;
    let x = vecops::sub(&state.x, &ginv_u);

    let mut infeas = vecops::add(&a_xt, &problem.b.apply(&y));
    vecops::axpy(-1.0, &problem.rhs, &mut infeas);
    let gamma = vecops::lincomb(1.0, &gamma_half, -accel.theta * beta, &infeas);

    Ok(IterateState {
        k: state.k + 1,
        x,
        y,
        gamma,
        x_tilde: out.x_tilde,
        gamma_tilde,
        gamma_half,
        u: out.u,
        inner_total: state.inner_total + out.inner_iters,
        inner_last: out.inner_iters,
    })
}

/// Residual triple of the Lagrangian system at iterate k:
/// u ∈ ∂f(x̃_k) − Aᵀγ̃_k, v ∈ ∂g(y_k) − Bᵀγ̃_k, w = A x̃_k + B y_k − b.
#[derive(Debug, Clone)]
pub struct PointwiseResiduals {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub max_norm: f64,
}

/// (u, v, w) from consecutive iterates:
/// u = G(x_{k−1} − x_k),
/// v = (H + ((τ−τθ+θ)β/(τ+θ))BᵀB)(y_{k−1} − y_k) − (τ/(τ+θ))Bᵀ(γ_{k−1} − γ_k),
/// w = −(τ/(τ+θ))B(y_{k−1} − y_k) + (1/((τ+θ)β))(γ_{k−1} − γ_k).
/// Together these equal M(z_{k−1} − z_k).
pub fn pointwise_residuals(
    prev: &IterateState,
    state: &IterateState,
    params: &SolverParams,
    problem: &Problem,
) -> PointwiseResiduals {
    let accel = &params.accel;
    let sum = accel.tau + accel.theta;
    let c_yy = (accel.tau - accel.tau * accel.theta + accel.theta) * accel.beta / sum;
    let c_cross = accel.tau / sum;
    let c_gamma = 1.0 / (sum * accel.beta);

    let dx = vecops::sub(&prev.x, &state.x);
    let dy = vecops::sub(&prev.y, &state.y);
    let dgamma = vecops::sub(&prev.gamma, &state.gamma);

    let u = params.g.apply(&dx);

    let bdy = problem.b.apply(&dy);
    let mixed = vecops::lincomb(c_yy, &bdy, -c_cross, &dgamma);
    let mut v = problem.b.adjoint_apply(&mixed);
    vecops::axpy(1.0, &params.h.apply(&dy), &mut v);

    let w = vecops::lincomb(-c_cross, &bdy, c_gamma, &dgamma);

    let max_norm = vecops::norm(&u).max(vecops::norm(&v)).max(vecops::norm(&w));
    PointwiseResiduals { u, v, w, max_norm }
}

/// ‖M(z_{k−1} − z_k)‖_∞ < tol
pub fn stopped(prev: &IterateState, state: &IterateState, m: &SpdOperator, tol: f64) -> bool {
    stop_metric(prev, state, m) < tol
}

pub fn stop_metric(prev: &IterateState, state: &IterateState, m: &SpdOperator) -> f64 {
    let dz = vecops::sub(&prev.z(), &state.z());
    vecops::norm_inf(&m.apply(&dz))
}

/// Certificate quantities carried into the solve loop; constructed by the
/// certify module.
#[derive(Clone)]
pub struct CertificateMonitor {
    pub scalars: CertificateScalars,
    pub z_ref: Vec<f64>,
}

/// Which optional per-iteration instrumentation to run. Structural and
/// certificate monitors cost extra operator applications per iteration, so
/// timed benchmark runs keep them off.
#[derive(Clone, Default)]
pub struct Monitors {
    pub structural: bool,
    pub ergodic: bool,
    pub certificate: Option<CertificateMonitor>,
}

impl Monitors {
    pub fn off() -> Self {
        Monitors::default()
    }

    pub fn structural_only() -> Self {
        Monitors {
            structural: true,
            ergodic: true,
            certificate: None,
        }
    }

    fn ergodic_on(&self) -> bool {
        self.ergodic || self.certificate.is_some()
    }
}

#[derive(Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_outer: usize,
    /// Inner-iteration cap per outer step; defaults to ⌈10·√n⌉.
    pub max_inner: Option<usize>,
    pub warm_start_inner: bool,
    /// Initial point (x₀, y₀, γ₀); zeros when absent.
    pub init: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    pub monitors: Monitors,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-2,
            max_outer: 1000,
            max_inner: None,
            warm_start_inner: false,
            init: None,
            monitors: Monitors::off(),
        }
    }
}

pub fn default_inner_cap(n: usize) -> usize {
    (10.0 * (n as f64).sqrt()).ceil() as usize
}

/// Run the method until the stopping rule or the outer cap fires.
/// Non-convergence is reported in the summary, not as an error.
pub fn solve(
    problem: &Problem,
    params: &SolverParams,
    opts: &SolveOptions,
) -> Result<RunReport, SolveError> {
    problem.check_dims()?;
    let (n, p, m_dim) = problem.dims();
    if params.g.dim() != n || params.h.dim() != p {
        return Err(SolveError::Dims(format!(
            "G is {}-dimensional and H is {}-dimensional but the problem has n={n}, p={p}",
            params.g.dim(),
            params.h.dim()
        )));
    }
    let accel = &params.accel;
    let m_op = crate::region::build_m(&params.g, &params.h, &problem.b, accel)?;
    let max_inner = opts.max_inner.unwrap_or_else(|| default_inner_cap(n));

    let mut state = match &opts.init {
        Some((x0, y0, g0)) => {
            if x0.len() != n || y0.len() != p || g0.len() != m_dim {
                return Err(SolveError::Dims("initial point dimensions".into()));
            }
            IterateState::initial(x0.clone(), y0.clone(), g0.clone())
        }
        None => IterateState::zeros(n, p, m_dim),
    };
    let z0 = state.z();

    let mut ergodic = ErgodicState::new(n, p, m_dim);
    let monitors = &opts.monitors;
    let mut eta_prev = monitors
        .certificate
        .as_ref()
        .map(|c| c.scalars.eta0)
        .unwrap_or(0.0);
    let mut running_min_resid = f64::INFINITY;

    let mut rows: Vec<IterationRow> = Vec::new();
    let mut converged = false;
    let started = Instant::now();

    for _ in 0..opts.max_outer {
        let prev = state.clone();
        state = step(&prev, problem, params, max_inner, opts.warm_start_inner)?;
        let resid = pointwise_residuals(&prev, &state, params, problem);

        let dz = vecops::sub(&prev.z(), &state.z());
        let mdz = m_op.apply(&dz);
        let metric = vecops::norm_inf(&mdz);

        let mut row = IterationRow {
            k: state.k,
            norm_u: vecops::norm(&resid.u),
            norm_v: vecops::norm(&resid.v),
            norm_w: vecops::norm(&resid.w),
            stop_metric: metric,
            inner: state.inner_last,
            ..IterationRow::empty(state.k)
        };

        let sv = (monitors.structural || monitors.certificate.is_some())
            .then(|| crate::certify::splitting_vectors(&prev, &state, problem, accel.beta));

        if monitors.structural {
            let sv = sv.as_ref().expect("splitting vectors computed");
            row.pq_rel = Some(crate::certify::lemma_identity_rel_err(
                &prev, &state, sv, accel,
            ));
            let uvw = vecops::concat3(&resid.u, &resid.v, &resid.w);
            row.m_identity_rel = Some(vecops::rel_vec_gap(&uvw, &mdz));
            let a_xt = problem.a.apply(&state.x_tilde);
            let mut w_direct = vecops::add(&a_xt, &problem.b.apply(&state.y));
            vecops::axpy(-1.0, &problem.rhs, &mut w_direct);
            row.w_direct_rel = Some(vecops::rel_vec_gap(&resid.w, &w_direct));
            row.y_opt_residual = problem.y_oracle.optimality_residual(
                &YStepInputs {
                    y_prev: &prev.y,
                    a_x_tilde: &a_xt,
                    gamma_half: &state.gamma_half,
                    beta: accel.beta,
                    h: &params.h,
                },
                &state.y,
            );
        }

        if monitors.ergodic_on() {
            ergodic.update(problem, &state, &resid);
            let rep = ergodic.report();
            row.eps_erg = Some(rep.eps);
            row.zeta_erg = Some(rep.zeta);
            row.erg_resid_max = Some(
                vecops::norm(&rep.u_mean)
                    .max(vecops::norm(&rep.v_mean))
                    .max(vecops::norm(&rep.w_mean)),
            );
        }

        if let Some(cert) = &monitors.certificate {
            let sc = &cert.scalars;
            let sv = sv.as_ref().expect("splitting vectors computed");
            let dy = vecops::sub(&state.y, &prev.y);
            let eta = crate::certify::eta_k(
                sc,
                accel,
                vecops::norm_sq(&sv.q),
                params.h.quad_form(&dy),
            );
            let zt = state.z_tilde();
            let dist_curr = m_op.quad_form(&vecops::sub(&zt, &state.z()));
            let dist_prev = m_op.quad_form(&vecops::sub(&zt, &prev.z()));
            row.eta = Some(eta);
            row.hpe_lhs = Some(dist_curr + eta);
            row.hpe_rhs = Some(sc.sigma * dist_prev + eta_prev);
            row.fejer = Some(m_op.quad_form(&vecops::sub(&cert.z_ref, &state.z())) + eta);
            eta_prev = eta;

            running_min_resid = running_min_resid.min(resid.max_norm);
            row.pointwise_min_max = Some(running_min_resid);
        }

        rows.push(row);

        if metric < opts.tol {
            converged = true;
            break;
        }
    }
    let time_s = started.elapsed().as_secs_f64();

    Ok(RunReport {
        summary: RunSummary {
            out: state.k,
            inner: state.inner_total,
            time_s,
            converged,
            tau: accel.tau,
            theta: accel.theta,
            sigma_tilde: accel.sigma_tilde,
            sigma_hat: accel.sigma_hat,
            beta: accel.beta,
            psnr_db: None,
        },
        rows,
        final_x: state.x,
        final_y: state.y,
        final_gamma: state.gamma,
        z0,
    })
}
