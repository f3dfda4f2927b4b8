//! Subproblem solvers.
//!
//! The x-step of the algorithm asks for a pair (x̃, u) with
//! u ∈ ∂f(x̃) − Aᵀγ̃(x̃) satisfying the relative-error acceptance test
//!
//! ```text
//!   ‖x̃ − x_prev + G⁻¹u‖²_G ≤ (σ̃/β)‖γ̃ − γ_prev‖² + σ̂‖x̃ − x_prev‖²_G.
//! ```
//!
//! For quadratic f(x) = ½⟨Px, x⟩ − ⟨r, x⟩ the subgradient residual is the
//! residual of the linear system S x = rhs_u with S = P + βAᵀA and
//! rhs_u = r + Aᵀ(γ_prev − β(B y_prev − b)), so u is available as a
//! by-product of any iterative solve. The CG oracle iterates on the
//! proximal normal system (S + G) x = rhs_u + G x_prev — whose solution is
//! the exact Step-1 minimizer, making the acceptance test reachable for
//! every tolerance down to σ̃ = σ̂ = 0 — and checks acceptance after every
//! iterate, returning as soon as it passes. With G = I/β and loose
//! tolerances this terminates as early as the relative-error theory allows.
//!
//! The y-step must be solved exactly; oracles here cover quadratic g, the
//! coordinatewise ℓ₁ prox, and the two-dimensional shrinkage that solves the
//! isotropic TV subproblem in closed form.


use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::linop::{materialize, DenseMatrix, LinearOperator, OpError, OpRef, SpdOperator};
use crate::vecops;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("inner solver hit its iteration cap ({cap}) without passing the acceptance test; last residual norm {last_residual:.3e}")]
    InnerCapExceeded { cap: usize, last_residual: f64 },
    #[error("oracle configuration error: {0}")]
    Config(String),
    #[error("inner linear system is singular")]
    Singular,
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Inputs handed to an x-oracle for one outer iteration.
pub struct XStepInputs<'a> {
    pub x_prev: &'a [f64],
    pub y_prev: &'a [f64],
    pub gamma_prev: &'a [f64],
    pub beta: f64,
    pub g: &'a SpdOperator,
    pub sigma_tilde: f64,
    pub sigma_hat: f64,
    pub max_inner: usize,
    /// Start the inner iteration from x_prev instead of the origin. Off by
    /// default to match the from-the-origin inner-count regime; reference
    /// solves switch it on.
    pub warm_start: bool,
}

pub struct XStepOutput {
    pub x_tilde: Vec<f64>,
    /// Subgradient residual, u ∈ ∂f(x̃) − Aᵀγ̃(x̃) by construction.
    pub u: Vec<f64>,
    pub inner_iters: usize,
    /// Norm of the inner solver's own residual (the proximal system
    /// residual), not of u.
    pub solver_residual_norm: f64,
}

pub trait InexactXOracle: Send + Sync {
    fn solve_x(&self, inputs: &XStepInputs<'_>) -> Result<XStepOutput, OracleError>;
}

/// Inputs handed to a y-oracle for one outer iteration. `a_x_tilde` is the
/// already-computed A·x̃.
pub struct YStepInputs<'a> {
    pub y_prev: &'a [f64],
    pub a_x_tilde: &'a [f64],
    pub gamma_half: &'a [f64],
    pub beta: f64,
    pub h: &'a SpdOperator,
}

pub trait YSubproblemOracle: Send + Sync {
    fn solve_y(&self, inputs: &YStepInputs<'_>) -> Result<Vec<f64>, OracleError>;

    /// First-order optimality violation of a candidate y for the Step-3
    /// objective, where the oracle knows how to measure it.
    fn optimality_residual(&self, _inputs: &YStepInputs<'_>, _y: &[f64]) -> Option<f64> {
        None
    }
}

/// Quadratic objective f(x) = ½⟨Px, x⟩ − ⟨r, x⟩ (+ constant).
#[derive(Clone)]
pub struct QuadraticObjective {
    pub hessian: OpRef,
    pub linear: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(hessian: OpRef, linear: Vec<f64>) -> Self {
        assert_eq!(hessian.in_dim(), linear.len());
        assert_eq!(hessian.in_dim(), hessian.out_dim());
        QuadraticObjective { hessian, linear }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * vecops::dot(&self.hessian.apply(x), x) - vecops::dot(&self.linear, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.hessian.apply(x);
        vecops::axpy(-1.0, &self.linear, &mut g);
        g
    }
}

/// Shared assembly of the Step-1 linear data: the operator
/// S = P + βAᵀA and right-hand side rhs_u = r + Aᵀ(γ_prev − β(B y_prev − b)),
/// whose residual at x̃ is exactly ∇f(x̃) − Aᵀγ̃(x̃).
pub struct XStepSystem<'a> {
    pub f: &'a QuadraticObjective,
    pub a: &'a OpRef,
    pub beta: f64,
    pub rhs_u: Vec<f64>,
    /// B y_prev − b, the x-independent part of the infeasibility.
    pub infeas_const: Vec<f64>,
}

impl<'a> XStepSystem<'a> {
    pub fn assemble(
        f: &'a QuadraticObjective,
        a: &'a OpRef,
        b: &OpRef,
        rhs: &[f64],
        y_prev: &[f64],
        gamma_prev: &[f64],
        beta: f64,
    ) -> Self {
        let mut infeas_const = b.apply(y_prev);
        vecops::axpy(-1.0, rhs, &mut infeas_const);
        let shifted = vecops::lincomb(1.0, gamma_prev, -beta, &infeas_const);
        let mut rhs_u = a.adjoint_apply(&shifted);
        vecops::axpy(1.0, &f.linear, &mut rhs_u);
        XStepSystem {
            f,
            a,
            beta,
            rhs_u,
            infeas_const,
        }
    }

    /// S x = P x + β Aᵀ(A x)
    pub fn apply_s(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.apply(x);
        let mut out = self.a.adjoint_apply(&ax);
        vecops::scale_in_place(self.beta, &mut out);
        vecops::axpy(1.0, &self.f.hessian.apply(x), &mut out);
        out
    }

    /// u(x̃) = S x̃ − rhs_u = ∇f(x̃) − Aᵀγ̃(x̃), recomputed from scratch.
    pub fn subgrad_residual(&self, x_tilde: &[f64]) -> Vec<f64> {
        let mut u = self.apply_s(x_tilde);
        vecops::axpy(-1.0, &self.rhs_u, &mut u);
        u
    }
}

/// Absolute slack applied to the right-hand side of the acceptance test.
pub const ACCEPT_SLACK: f64 = 1e-12;

/// Conjugate-gradient x-oracle for quadratic f, iterating on the proximal
/// normal system (S + G) x = rhs_u + G x_prev from the origin. Acceptance is
/// evaluated after every CG iterate using cached quantities (one extra A
/// apply per iterate); at σ̃ = σ̂ = 0 the loop instead runs the solve down to
/// machine precision, which is the exact Step-1 solution.
pub struct CgXOracle {
    pub f: QuadraticObjective,
    pub a: OpRef,
    pub b: OpRef,
    pub rhs: Vec<f64>,
}

impl CgXOracle {
    pub fn new(f: QuadraticObjective, a: OpRef, b: OpRef, rhs: Vec<f64>) -> Self {
        assert_eq!(f.dim(), a.in_dim());
        assert_eq!(a.out_dim(), rhs.len());
        assert_eq!(b.out_dim(), rhs.len());
        CgXOracle { f, a, b, rhs }
    }
}

impl InexactXOracle for CgXOracle {
    fn solve_x(&self, inputs: &XStepInputs<'_>) -> Result<XStepOutput, OracleError> {
        let g = inputs.g;
        if !g.has_inverse() {
            return Err(OracleError::Config(
                "the x-step acceptance test needs G positive definite with an inverse".into(),
            ));
        }
        let beta = inputs.beta;
        let sys = XStepSystem::assemble(
            &self.f,
            &self.a,
            &self.b,
            &self.rhs,
            inputs.y_prev,
            inputs.gamma_prev,
            beta,
        );
        let mut rhs_prox = g.apply(inputs.x_prev);
        vecops::axpy(1.0, &sys.rhs_u, &mut rhs_prox);
        let exact_mode = inputs.sigma_tilde == 0.0 && inputs.sigma_hat == 0.0;
        let exact_target_sq = {
            let t = 1e-13 * (1.0 + vecops::norm(&rhs_prox));
            t * t
        };

        let (mut x, mut u, mut infeas, mut r);
        if inputs.warm_start {
            x = inputs.x_prev.to_vec();
            let ax = self.a.apply(&x);
            infeas = vecops::add(&ax, &sys.infeas_const);
            u = sys.subgrad_residual(&x);
            // at x = x_prev the proximal residual rhs_prox − (S+G)x is −u
            r = u.iter().map(|v| -v).collect::<Vec<_>>();
        } else {
            x = vec![0.0; inputs.x_prev.len()];
            infeas = sys.infeas_const.clone();
            u = sys.rhs_u.iter().map(|v| -v).collect();
            r = rhs_prox.clone();
        }

        let accepted = |r: &[f64], x: &[f64], infeas: &[f64]| -> bool {
            if exact_mode {
                return vecops::norm_sq(r) <= exact_target_sq;
            }
            let ginv_r = match g.inverse_apply(r) {
                Ok(v) => v,
                Err(_) => return false,
            };
            let lhs = vecops::dot(&ginv_r, r);
            let mut rhs_acc = inputs.sigma_tilde * beta * vecops::norm_sq(infeas);
            if inputs.sigma_hat > 0.0 {
                let dx = vecops::sub(x, inputs.x_prev);
                rhs_acc += inputs.sigma_hat * g.quad_form(&dx);
            }
            lhs <= rhs_acc + ACCEPT_SLACK
        };

        if accepted(&r, &x, &infeas) {
            return Ok(XStepOutput {
                x_tilde: x,
                u,
                inner_iters: 0,
                solver_residual_norm: vecops::norm(&r),
            });
        }

        let mut p = r.clone();
        let mut rs = vecops::norm_sq(&r);
        for j in 1..=inputs.max_inner {
            let ap = self.a.apply(&p);
            let mut sp = self.a.adjoint_apply(&ap);
            vecops::scale_in_place(beta, &mut sp);
            vecops::axpy(1.0, &self.f.hessian.apply(&p), &mut sp);
            let mut q = g.apply(&p);
            vecops::axpy(1.0, &sp, &mut q);
            let pq = vecops::dot(&p, &q);
            if !(pq > 0.0) {
                // the proximal system is positive definite, so this only
                // happens at numerical stagnation
                if accepted(&r, &x, &infeas) {
                    return Ok(XStepOutput {
                        x_tilde: x,
                        u,
                        inner_iters: j - 1,
                        solver_residual_norm: vecops::norm(&r),
                    });
                }
                return Err(OracleError::InnerCapExceeded {
                    cap: inputs.max_inner,
                    last_residual: vecops::norm(&r),
                });
            }
            let alpha = rs / pq;
            vecops::axpy(alpha, &p, &mut x);
            vecops::axpy(-alpha, &q, &mut r);
            vecops::axpy(alpha, &sp, &mut u);
            vecops::axpy(alpha, &ap, &mut infeas);
            if accepted(&r, &x, &infeas) {
                return Ok(XStepOutput {
                    x_tilde: x,
                    u,
                    inner_iters: j,
                    solver_residual_norm: vecops::norm(&r),
                });
            }
            let rs_new = vecops::norm_sq(&r);
            let beta_cg = rs_new / rs;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta_cg * *pi;
            }
            rs = rs_new;
        }
        Err(OracleError::InnerCapExceeded {
            cap: inputs.max_inner,
            last_residual: vecops::norm(&r),
        })
    }
}

/// Direct dense solve of the Step-1 proximal system for desk-scale
/// references (dimension ≤ 256). Returns the exact pair, for which the
/// acceptance test holds at any tolerance.
pub struct ExactDenseXOracle {
    f: QuadraticObjective,
    a: OpRef,
    b: OpRef,
    rhs: Vec<f64>,
    p_dense: DenseMatrix,
    ata: DenseMatrix,
}

impl ExactDenseXOracle {
    pub const MAX_DIM: usize = 256;

    pub fn new(f: QuadraticObjective, a: OpRef, b: OpRef, rhs: Vec<f64>) -> Result<Self, OracleError> {
        if f.dim() > Self::MAX_DIM {
            return Err(OracleError::Config(format!(
                "exact dense x-oracle is limited to dimension {}, got {}",
                Self::MAX_DIM,
                f.dim()
            )));
        }
        let p_dense = materialize(f.hessian.as_ref());
        let a_dense = materialize(a.as_ref());
        let ata = a_dense.transposed().matmul(&a_dense);
        Ok(ExactDenseXOracle {
            f,
            a,
            b,
            rhs,
            p_dense,
            ata,
        })
    }
}

impl InexactXOracle for ExactDenseXOracle {
    fn solve_x(&self, inputs: &XStepInputs<'_>) -> Result<XStepOutput, OracleError> {
        let n = self.f.dim();
        let sys = XStepSystem::assemble(
            &self.f,
            &self.a,
            &self.b,
            &self.rhs,
            inputs.y_prev,
            inputs.gamma_prev,
            inputs.beta,
        );
        let s_dense = self.p_dense.add_matrix(&self.ata.scaled(inputs.beta));
        let g_dense = materialize(inputs.g.operator().as_ref());
        let m = s_dense.add_matrix(&g_dense).to_nalgebra();
        let mut rhs_prox = inputs.g.apply(inputs.x_prev);
        vecops::axpy(1.0, &sys.rhs_u, &mut rhs_prox);
        let chol = Cholesky::new(m.clone()).ok_or(OracleError::Singular)?;
        let x = chol.solve(&DVector::from_column_slice(&rhs_prox));
        let x_tilde: Vec<f64> = x.as_slice().to_vec();
        let u = sys.subgrad_residual(&x_tilde);
        let resid = (&m * &x - DVector::from_column_slice(&rhs_prox)).norm();
        debug_assert!(x_tilde.len() == n);
        Ok(XStepOutput {
            x_tilde,
            u,
            inner_iters: 1,
            solver_residual_norm: resid,
        })
    }
}

/// Forms of g handled by the dense y-oracle.
pub enum GObjective {
    /// g ≡ 0
    Zero,
    /// g(y) = ½⟨Ry, y⟩ − ⟨s, y⟩
    Quadratic { r_mat: DenseMatrix, s: Vec<f64> },
    /// g(y) = λ‖y‖₁, valid only with B = I and H = 0
    L1 { lambda: f64 },
}

/// Exact minimizer of the Step-3 objective
/// g(y) − ⟨γ_half, By⟩ + (β/2)‖A x̃ + B y − b‖² + ½‖y − y_prev‖²_H.
pub struct DenseProxYOracle {
    form: GObjective,
    b: OpRef,
    rhs: Vec<f64>,
    btb: DenseMatrix,
    b_dense: DenseMatrix,
}

impl DenseProxYOracle {
    pub fn new(form: GObjective, b: OpRef, rhs: Vec<f64>) -> Result<Self, OracleError> {
        if b.in_dim() > 512 {
            return Err(OracleError::Config(
                "dense y-oracle is a desk-scale reference (dimension ≤ 512)".into(),
            ));
        }
        let b_dense = materialize(b.as_ref());
        let btb = b_dense.transposed().matmul(&b_dense);
        Ok(DenseProxYOracle {
            form,
            b,
            rhs,
            btb,
            b_dense,
        })
    }

    fn smooth_multiplier(&self, inputs: &YStepInputs<'_>, y: &[f64]) -> Vec<f64> {
        // γ_half − β(A x̃ + B y − b)
        let mut infeas = self.b.apply(y);
        vecops::axpy(1.0, inputs.a_x_tilde, &mut infeas);
        vecops::axpy(-1.0, &self.rhs, &mut infeas);
        vecops::lincomb(1.0, inputs.gamma_half, -inputs.beta, &infeas)
    }
}

impl YSubproblemOracle for DenseProxYOracle {
    fn solve_y(&self, inputs: &YStepInputs<'_>) -> Result<Vec<f64>, OracleError> {
        let p = self.b.in_dim();
        match &self.form {
            GObjective::Zero | GObjective::Quadratic { .. } => {
                let mut lhs = self.btb.scaled(inputs.beta);
                let mut rhs_vec = {
                    // Bᵀγ_half − βBᵀ(A x̃ − b)
                    let shifted = {
                        let mut t = inputs.a_x_tilde.to_vec();
                        vecops::axpy(-1.0, &self.rhs, &mut t);
                        vecops::lincomb(1.0, inputs.gamma_half, -inputs.beta, &t)
                    };
                    self.b.adjoint_apply(&shifted)
                };
                if let GObjective::Quadratic { r_mat, s } = &self.form {
                    lhs = lhs.add_matrix(r_mat);
                    vecops::axpy(1.0, s, &mut rhs_vec);
                }
                if !inputs.h.is_zero() {
                    let h_dense = materialize(inputs.h.operator().as_ref());
                    lhs = lhs.add_matrix(&h_dense);
                    vecops::axpy(1.0, &inputs.h.apply(inputs.y_prev), &mut rhs_vec);
                }
                let m = lhs.to_nalgebra();
                let solved = m
                    .lu()
                    .solve(&DVector::from_column_slice(&rhs_vec))
                    .ok_or(OracleError::Singular)?;
                Ok(solved.as_slice().to_vec())
            }
            GObjective::L1 { lambda } => {
                if !inputs.h.is_zero() {
                    return Err(OracleError::Config(
                        "the l1 prox oracle requires H = 0".into(),
                    ));
                }
                // B = I: y = soft(b − A x̃ + γ_half/β, λ/β)
                let mut point = vec![0.0; p];
                for i in 0..p {
                    point[i] = self.rhs[i] - inputs.a_x_tilde[i]
                        + inputs.gamma_half[i] / inputs.beta;
                }
                Ok(point
                    .iter()
                    .map(|&v| soft_threshold(v, lambda / inputs.beta))
                    .collect())
            }
        }
    }

    fn optimality_residual(&self, inputs: &YStepInputs<'_>, y: &[f64]) -> Option<f64> {
        let mult = self.smooth_multiplier(inputs, y);
        match &self.form {
            GObjective::Zero | GObjective::Quadratic { .. } => {
                // ∂g(y) − Bᵀ·mult + H(y − y_prev) = 0
                let mut grad = {
                    let bt = self.b_dense.adjoint_apply(&mult);
                    bt.iter().map(|v| -v).collect::<Vec<_>>()
                };
                if let GObjective::Quadratic { r_mat, s } = &self.form {
                    vecops::axpy(1.0, &r_mat.apply(y), &mut grad);
                    vecops::axpy(-1.0, s, &mut grad);
                }
                if !inputs.h.is_zero() {
                    let dy = vecops::sub(y, inputs.y_prev);
                    vecops::axpy(1.0, &inputs.h.apply(&dy), &mut grad);
                }
                Some(vecops::norm(&grad))
            }
            GObjective::L1 { lambda } => {
                // λ∂|y_i| ∋ mult_i coordinatewise (B = I, H = 0)
                let mut worst = 0.0f64;
                for (yi, ci) in y.iter().zip(&mult) {
                    let v = if *yi > 0.0 {
                        (ci - lambda).abs()
                    } else if *yi < 0.0 {
                        (ci + lambda).abs()
                    } else {
                        (ci.abs() - lambda).max(0.0)
                    };
                    worst = worst.max(v);
                }
                Some(worst)
            }
        }
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Entrywise two-dimensional shrinkage: for each index i,
/// (y¹ᵢ, y²ᵢ) = max{‖(w¹ᵢ, w²ᵢ)‖ − 1/β, 0} · (w¹ᵢ, w²ᵢ)/‖(w¹ᵢ, w²ᵢ)‖,
/// with the convention 0·(0/0) = 0.
pub fn shrink2d(w1: &[f64], w2: &[f64], beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(w1.len(), w2.len());
    let threshold = 1.0 / beta;
    let mut y1 = vec![0.0; w1.len()];
    let mut y2 = vec![0.0; w2.len()];
    for i in 0..w1.len() {
        let nrm = (w1[i] * w1[i] + w2[i] * w2[i]).sqrt();
        if nrm > threshold {
            let scale = (nrm - threshold) / nrm;
            y1[i] = scale * w1[i];
            y2[i] = scale * w2[i];
        }
    }
    (y1, y2)
}

/// Largest violation of the isotropic-TV prox subdifferential
/// characterization: if yᵢ ≠ 0 then w − y = (1/β)·y/‖y‖ pairwise, and if
/// yᵢ = 0 then ‖wᵢ‖ ≤ 1/β.
pub fn shrink2d_subdiff_violation(
    w1: &[f64],
    w2: &[f64],
    y1: &[f64],
    y2: &[f64],
    beta: f64,
) -> f64 {
    let threshold = 1.0 / beta;
    let mut worst = 0.0f64;
    for i in 0..w1.len() {
        let ynorm = (y1[i] * y1[i] + y2[i] * y2[i]).sqrt();
        if ynorm > 0.0 {
            let e1 = (w1[i] - y1[i]) - threshold * y1[i] / ynorm;
            let e2 = (w2[i] - y2[i]) - threshold * y2[i] / ynorm;
            worst = worst.max(e1.abs()).max(e2.abs());
        } else {
            let wnorm = (w1[i] * w1[i] + w2[i] * w2[i]).sqrt();
            worst = worst.max((wnorm - threshold).max(0.0));
        }
    }
    worst
}

/// Closed-form y-oracle for the TV split: B = I on ℝ^{2mn}, b = 0, H = 0,
/// g the isotropic TV sum. The shrinkage point is
/// (w¹, w²) = (D¹x̃ + γ¹_half/β, D²x̃ + γ²_half/β); since A = −D the
/// precomputed A·x̃ enters with a sign flip.
pub struct Shrink2dYOracle {
    pub pixels: usize,
}

impl YSubproblemOracle for Shrink2dYOracle {
    fn solve_y(&self, inputs: &YStepInputs<'_>) -> Result<Vec<f64>, OracleError> {
        if !inputs.h.is_zero() {
            return Err(OracleError::Config(
                "the shrinkage y-oracle requires H = 0".into(),
            ));
        }
        let mn = self.pixels;
        if inputs.a_x_tilde.len() != 2 * mn || inputs.gamma_half.len() != 2 * mn {
            return Err(OracleError::Config(format!(
                "shrinkage oracle expects stacked gradient fields of length {}, got {}",
                2 * mn,
                inputs.a_x_tilde.len()
            )));
        }
        let (w1, w2): (Vec<f64>, Vec<f64>) = {
            let mut w1 = vec![0.0; mn];
            let mut w2 = vec![0.0; mn];
            for i in 0..mn {
                w1[i] = -inputs.a_x_tilde[i] + inputs.gamma_half[i] / inputs.beta;
                w2[i] = -inputs.a_x_tilde[mn + i] + inputs.gamma_half[mn + i] / inputs.beta;
            }
            (w1, w2)
        };
        let (y1, y2) = shrink2d(&w1, &w2, inputs.beta);
        let mut y = y1;
        y.extend_from_slice(&y2);
        Ok(y)
    }

    fn optimality_residual(&self, inputs: &YStepInputs<'_>, y: &[f64]) -> Option<f64> {
        let mn = self.pixels;
        let mut w1 = vec![0.0; mn];
        let mut w2 = vec![0.0; mn];
        for i in 0..mn {
            w1[i] = -inputs.a_x_tilde[i] + inputs.gamma_half[i] / inputs.beta;
            w2[i] = -inputs.a_x_tilde[mn + i] + inputs.gamma_half[mn + i] / inputs.beta;
        }
        Some(shrink2d_subdiff_violation(
            &w1,
            &w2,
            &y[..mn],
            &y[mn..],
            inputs.beta,
        ))
    }
}

/// Convenience: dense solve of a small SPD system, used by tests that need
/// an independent linear-solve oracle.
pub fn dense_spd_solve(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, OracleError> {
    let chol = Cholesky::new(m.to_nalgebra()).ok_or(OracleError::Singular)?;
    Ok(chol.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec())
}

/// Dense solve of a general square system (LU with partial pivoting).
pub fn dense_solve(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, OracleError> {
    m.clone()
        .lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|v| v.as_slice().to_vec())
        .ok_or(OracleError::Singular)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn shrinkage_is_the_tv_prox(
            w1 in proptest::collection::vec(-5.0f64..5.0, 6),
            w2 in proptest::collection::vec(-5.0f64..5.0, 6),
            beta in 0.1f64..10.0,
        ) {
            let (y1, y2) = shrink2d(&w1, &w2, beta);
            prop_assert!(shrink2d_subdiff_violation(&w1, &w2, &y1, &y2, beta) <= 1e-12);
            // shrinkage never grows a pair
            for i in 0..w1.len() {
                let before = (w1[i] * w1[i] + w2[i] * w2[i]).sqrt();
                let after = (y1[i] * y1[i] + y2[i] * y2[i]).sqrt();
                prop_assert!(after <= before + 1e-15);
            }
        }

        #[test]
        fn soft_threshold_is_monotone_and_contractive(
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
            t in 0.0f64..5.0,
        ) {
            let (sa, sb) = (soft_threshold(a, t), soft_threshold(b, t));
            prop_assert!((sa - sb).abs() <= (a - b).abs() + 1e-12 * (1.0 + a.abs() + b.abs()));
            if a <= b { prop_assert!(sa <= sb); }
        }
    }
}
