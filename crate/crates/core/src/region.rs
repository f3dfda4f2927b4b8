//! Admissible acceleration parameters and certificate matrices.
//!
//! The solver accepts (τ, θ) from the region R_σ̃ defined by the three
//! conditions
//!
//! ```text
//!   τ ∈ (−1, 1−σ̃),    τ + θ > 0,
//!   (1−τ²)(2−τ−θ−σ̃) − (1−θ)²(1−τ−σ̃) > 0,
//! ```
//!
//! which at σ̃ = 0 collapses to the classical two-parameter region
//! 1 + τ + θ − τθ − τ² − θ² > 0 (with τ < 1). This module also carries the
//! experimental default rule for σ̃, the polynomial family
//! (φ, φ̂, φ̃, φ̄) whose joint sign condition produces the contraction
//! factor σ, the scalar ϑ, and the block operator M / 2×2 kernel Q used by
//! the convergence certificates.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linop::{LinearOperator, OpRef, SpdOperator};
use crate::vecops;

/// Strict inequalities carry this slack so boundary points do not flap
/// between member/non-member under rounding.
const MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionCondition {
    /// τ > −1
    TauLowerBound,
    /// τ < 1 − σ̃
    TauUpperBound,
    /// τ + θ > 0
    SumPositive,
    /// (1−τ²)(2−τ−θ−σ̃) − (1−θ)²(1−τ−σ̃) > 0
    Discriminant,
}

impl fmt::Display for RegionCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionCondition::TauLowerBound => write!(f, "tau > -1"),
            RegionCondition::TauUpperBound => write!(f, "tau < 1 - sigma_tilde"),
            RegionCondition::SumPositive => write!(f, "tau + theta > 0"),
            RegionCondition::Discriminant => write!(
                f,
                "(1-tau^2)(2-tau-theta-sigma_tilde) - (1-theta)^2(1-tau-sigma_tilde) > 0"
            ),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("acceleration parameters outside the admissible region; violated: {}",
            .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    OutsideRegion { violations: Vec<RegionCondition> },
    #[error("sigma-tilde default rule is undefined at tau={tau}, theta={theta}: {reason}")]
    SigmaTildeDomain {
        tau: f64,
        theta: f64,
        reason: String,
    },
    #[error("no feasible contraction factor sigma found on [{sigma_hat}, 1) for tau={tau}, theta={theta}, sigma_tilde={sigma_tilde}")]
    NoFeasibleSigma {
        tau: f64,
        theta: f64,
        sigma_tilde: f64,
        sigma_hat: f64,
    },
    #[error("negative radicand in the vartheta formula (parameters outside the region)")]
    NegativeRadicand,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// Violated region conditions at (τ, θ, σ̃); empty means membership.
pub fn region_violations(tau: f64, theta: f64, sigma_tilde: f64) -> Vec<RegionCondition> {
    let mut out = Vec::new();
    if !(tau + 1.0 >= MARGIN) {
        out.push(RegionCondition::TauLowerBound);
    }
    if !((1.0 - sigma_tilde) - tau >= MARGIN) {
        out.push(RegionCondition::TauUpperBound);
    }
    if !(tau + theta >= MARGIN) {
        out.push(RegionCondition::SumPositive);
    }
    let disc = (1.0 - tau * tau) * (2.0 - tau - theta - sigma_tilde)
        - (1.0 - theta) * (1.0 - theta) * (1.0 - tau - sigma_tilde);
    if !(disc >= MARGIN) {
        out.push(RegionCondition::Discriminant);
    }
    out
}

/// Membership test for R_σ̃. Total on ℝ² × [0, 1).
pub fn in_region(tau: f64, theta: f64, sigma_tilde: f64) -> bool {
    region_violations(tau, theta, sigma_tilde).is_empty()
}

/// The experimental default for the error-tolerance parameter σ̃ at a given
/// (τ, θ): 0.99 times the largest admissible value (capped by 1−τ and 1),
/// branching on the sign of τ² − 2θ + θ².
pub fn sigma_tilde_default(tau: f64, theta: f64) -> Result<f64, RegionError> {
    if !(tau > -1.0 && tau < 1.0) {
        return Err(RegionError::SigmaTildeDomain {
            tau,
            theta,
            reason: "tau must lie in (-1, 1)".into(),
        });
    }
    let theta_max = (1.0 - tau + (5.0 + 2.0 * tau - 3.0 * tau * tau).sqrt()) / 2.0;
    if !(theta > -tau && theta < theta_max) {
        return Err(RegionError::SigmaTildeDomain {
            tau,
            theta,
            reason: format!("theta must lie in (-tau, {theta_max:.6})"),
        });
    }
    let den = tau * tau - 2.0 * theta + theta * theta;
    let cap = (1.0 - tau).min(1.0);
    let raw = if den < 0.0 {
        let numerator = (1.0 + tau + theta - tau * theta - tau * tau - theta * theta) * (tau - 1.0);
        (numerator / den).min(cap)
    } else {
        cap
    };
    Ok(0.99 * raw)
}

/// The polynomial family evaluated at a candidate contraction factor σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiFamily {
    pub phi: f64,
    pub phi_hat: f64,
    pub phi_tilde: f64,
    pub phi_bar: f64,
}

impl PhiFamily {
    /// φ ≥ 0, φ̂ ≥ 0, φ̃ > 0, φ̄ ≥ 0 — the joint sign condition under which
    /// the contraction inequality holds with factor σ.
    pub fn feasible(&self) -> bool {
        self.phi >= 0.0 && self.phi_hat >= 0.0 && self.phi_tilde > 0.0 && self.phi_bar >= 0.0
    }
}

pub fn phi_family(sigma: f64, tau: f64, theta: f64, sigma_tilde: f64) -> PhiFamily {
    let phi = (1.0 - tau) * (sigma - 1.0) + (1.0 - tau - sigma_tilde) * (tau + theta);
    let phi_hat = (1.0 - tau) * ((1.0 + theta) * sigma - 1.0 + tau) - sigma_tilde * (tau + theta);
    let phi_tilde =
        sigma - (1.0 - tau - theta) * (1.0 - tau - theta) - sigma_tilde * (tau + theta);
    let phi_bar = ((1.0 + tau) * phi_hat - 2.0 * tau * phi) * (1.0 + tau) * phi_tilde
        - (1.0 - theta) * (1.0 - theta) * phi * phi;
    PhiFamily {
        phi,
        phi_hat,
        phi_tilde,
        phi_bar,
    }
}

/// Smallest σ ∈ [σ̂, 1) satisfying the four sign conditions: a scan over the
/// 2048-point grid σ̂ + j·(1−σ̂)/2048 followed by 40 bisection steps that
/// keep the upper endpoint feasible. Smaller σ gives tighter rate constants,
/// so the minimum is preferred over the existence proof's "close to 1".
pub fn select_sigma(
    tau: f64,
    theta: f64,
    sigma_tilde: f64,
    sigma_hat: f64,
) -> Result<f64, RegionError> {
    if !(0.0..1.0).contains(&sigma_hat) {
        return Err(RegionError::InvalidParam(format!(
            "sigma_hat must lie in [0,1), got {sigma_hat}"
        )));
    }
    let feasible = |s: f64| phi_family(s, tau, theta, sigma_tilde).feasible();
    let step = (1.0 - sigma_hat) / 2048.0;
    let mut found: Option<usize> = None;
    for j in 0..2048usize {
        if feasible(sigma_hat + j as f64 * step) {
            found = Some(j);
            break;
        }
    }
    let (mut lo, mut hi) = match found {
        Some(0) => return Ok(sigma_hat),
        Some(j) => (sigma_hat + (j - 1) as f64 * step, sigma_hat + j as f64 * step),
        None => {
            // For region points near the boundary the feasible interval
            // (σ, 1) can be narrower than the grid step; approach 1
            // geometrically before declaring failure.
            let lo = sigma_hat + 2047.0 * step;
            let mut hi = None;
            let mut gap = 1.0 - lo;
            for _ in 0..64 {
                gap *= 0.5;
                let cand = 1.0 - gap;
                if feasible(cand) {
                    hi = Some(cand);
                    break;
                }
            }
            let hi = hi.ok_or(RegionError::NoFeasibleSigma {
                tau,
                theta,
                sigma_tilde,
                sigma_hat,
            })?;
            (lo, hi)
        }
    };
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// ϑ = √((3−3τ−2σ̃)(4−τ−θ−2σ̃)) − 2(1−τ−σ̃); positive on the region.
pub fn vartheta(tau: f64, theta: f64, sigma_tilde: f64) -> Result<f64, RegionError> {
    let first = 3.0 - 3.0 * tau - 2.0 * sigma_tilde;
    let second = 4.0 - tau - theta - 2.0 * sigma_tilde;
    let radicand = first * second;
    if radicand < 0.0 {
        return Err(RegionError::NegativeRadicand);
    }
    Ok(radicand.sqrt() - 2.0 * (1.0 - tau - sigma_tilde))
}

/// Validated acceleration/tolerance parameters for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelParams {
    pub tau: f64,
    pub theta: f64,
    pub sigma_tilde: f64,
    pub sigma_hat: f64,
    pub beta: f64,
}

impl AccelParams {
    pub fn new(
        tau: f64,
        theta: f64,
        sigma_tilde: f64,
        sigma_hat: f64,
        beta: f64,
    ) -> Result<Self, RegionError> {
        if !(beta > 0.0) {
            return Err(RegionError::InvalidParam(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(0.0..1.0).contains(&sigma_tilde) {
            return Err(RegionError::InvalidParam(format!(
                "sigma_tilde must lie in [0,1), got {sigma_tilde}"
            )));
        }
        if !(0.0..1.0).contains(&sigma_hat) {
            return Err(RegionError::InvalidParam(format!(
                "sigma_hat must lie in [0,1), got {sigma_hat}"
            )));
        }
        let violations = region_violations(tau, theta, sigma_tilde);
        if !violations.is_empty() {
            return Err(RegionError::OutsideRegion { violations });
        }
        Ok(AccelParams {
            tau,
            theta,
            sigma_tilde,
            sigma_hat,
            beta,
        })
    }

    /// (τ, θ) with σ̃ from the default rule and σ̂ = 0.
    pub fn with_default_sigma_tilde(tau: f64, theta: f64, beta: f64) -> Result<Self, RegionError> {
        let st = sigma_tilde_default(tau, theta)?;
        AccelParams::new(tau, theta, st, 0.0, beta)
    }

    /// Same (τ, θ, β) but exact subproblem tolerances σ̃ = σ̂ = 0.
    pub fn exact_mode(&self) -> Result<Self, RegionError> {
        AccelParams::new(self.tau, self.theta, 0.0, 0.0, self.beta)
    }
}

/// Derived scalars feeding the convergence certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateScalars {
    pub sigma: f64,
    pub vartheta: f64,
    pub phi: f64,
    pub phi_hat: f64,
    pub phi_tilde: f64,
    pub phi_bar: f64,
    pub lambda_m: f64,
    pub d0: f64,
    pub eta0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// The block operator
///
/// ```text
///       ⎡ G        0                         0            ⎤
///   M = ⎢ 0   H + ((τ−τθ+θ)β/(τ+θ))·BᵀB   −(τ/(τ+θ))·Bᵀ   ⎥
///       ⎣ 0       −(τ/(τ+θ))·B             (1/((τ+θ)β))·I ⎦
/// ```
///
/// on ℝ^{n+p+m}; symmetric PSD for parameters in the region.
pub fn build_m(
    g: &SpdOperator,
    h: &SpdOperator,
    b: &OpRef,
    params: &AccelParams,
) -> Result<SpdOperator, RegionError> {
    let sum = params.tau + params.theta;
    if sum.abs() < MARGIN {
        return Err(RegionError::InvalidParam(
            "tau + theta = 0 is excluded from the region".into(),
        ));
    }
    if h.dim() != b.in_dim() {
        return Err(RegionError::InvalidParam(format!(
            "H is {}x{0} but B takes vectors of length {}",
            h.dim(),
            b.in_dim()
        )));
    }
    let block = BlockM {
        g: g.clone(),
        h: h.clone(),
        b: b.clone(),
        yy_coeff: (params.tau - params.tau * params.theta + params.theta) * params.beta / sum,
        cross_coeff: params.tau / sum,
        gamma_coeff: 1.0 / (sum * params.beta),
    };
    SpdOperator::from_parts(Arc::new(block), None)
        .map_err(|e| RegionError::InvalidParam(e.to_string()))
}

struct BlockM {
    g: SpdOperator,
    h: SpdOperator,
    b: OpRef,
    yy_coeff: f64,
    cross_coeff: f64,
    gamma_coeff: f64,
}

impl BlockM {
    fn dims(&self) -> (usize, usize, usize) {
        (self.g.dim(), self.h.dim(), self.b.out_dim())
    }
}

impl LinearOperator for BlockM {
    fn in_dim(&self) -> usize {
        let (n, p, m) = self.dims();
        n + p + m
    }

    fn out_dim(&self) -> usize {
        self.in_dim()
    }

    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        let (n, p, m) = self.dims();
        let (x, rest) = z.split_at(n);
        let (y, gamma) = rest.split_at(p);
        let (ox, orest) = out.split_at_mut(n);
        let (oy, ogamma) = orest.split_at_mut(p);

        self.g.apply_into(x, ox);

        let by = self.b.apply(y);
        // y block: H y + yy_coeff·Bᵀ(B y) − cross_coeff·Bᵀγ
        let mut byg = vecops::lincomb(self.yy_coeff, &by, -self.cross_coeff, gamma);
        let bt = self.b.adjoint_apply(&byg);
        self.h.apply_into(y, oy);
        vecops::axpy(1.0, &bt, oy);

        // γ block: −cross_coeff·B y + gamma_coeff·γ
        byg.clear();
        for i in 0..m {
            ogamma[i] = -self.cross_coeff * by[i] + self.gamma_coeff * gamma[i];
        }
    }

    fn adjoint_apply_into(&self, z: &[f64], out: &mut [f64]) {
        // symmetric by construction
        self.apply_into(z, out)
    }
}

/// The 2×2 kernel of the quadratic form Q used in the first-iteration bound:
/// entries ((3−3τ−2σ̃)β, 2(1−τ−σ̃); 2(1−τ−σ̃), (4−τ−θ−2σ̃)/β), positive
/// definite on the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QKernel {
    pub a: f64,
    pub offdiag: f64,
    pub c: f64,
}

impl QKernel {
    pub fn det(&self) -> f64 {
        self.a * self.c - self.offdiag * self.offdiag
    }

    pub fn trace(&self) -> f64 {
        self.a + self.c
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * self.trace();
        let disc = (0.25 * (self.a - self.c) * (self.a - self.c)
            + self.offdiag * self.offdiag)
            .sqrt();
        (mid - disc, mid + disc)
    }

    /// ‖(u, v)‖²_Q = a‖u‖² + 2·offdiag·⟨u, v⟩ + c‖v‖² for same-length u, v.
    pub fn quad_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.a * vecops::norm_sq(u) + 2.0 * self.offdiag * vecops::dot(u, v)
            + self.c * vecops::norm_sq(v)
    }
}

pub fn build_q(params: &AccelParams) -> QKernel {
    QKernel {
        a: (3.0 - 3.0 * params.tau - 2.0 * params.sigma_tilde) * params.beta,
        offdiag: 2.0 * (1.0 - params.tau - params.sigma_tilde),
        c: (4.0 - params.tau - params.theta - 2.0 * params.sigma_tilde) / params.beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{self, identity, spd::dense_spd_diagnostics, DenseMatrix};
    use crate::rng::CounterRng;

    #[test]
    fn region_examples() {
        assert!(in_region(0.0, 1.0, 0.0));
        assert!(in_region(0.8, 1.12, 0.074));
        assert!(!in_region(0.0, 1.7, 0.0)); // 1·0.3 − 0.49·1 = −0.19 < 0
    }

    #[test]
    fn region_violation_names() {
        let v = region_violations(1.0, 1.0, 0.0);
        assert!(v.contains(&RegionCondition::TauUpperBound));
        let v = region_violations(0.0, 1.7, 0.0);
        assert_eq!(v, vec![RegionCondition::Discriminant]);
    }

    #[test]
    fn region_matches_published_closure_at_sigma_zero() {
        // K = {τ ≤ 1, τ+θ > 0, 1+τ+θ−τθ−τ²−θ² > 0} restricted to τ < 1.
        let mut rng = CounterRng::new(31);
        for _ in 0..1000 {
            let tau = rng.uniform_in(-1.0, 1.0);
            let theta = rng.uniform_in(0.0, 2.0);
            let ours = in_region(tau, theta, 0.0);
            let k = tau < 1.0
                && tau + theta > 0.0
                && 1.0 + tau + theta - tau * theta - tau * tau - theta * theta > 0.0;
            assert_eq!(ours, k, "disagree at tau={tau}, theta={theta}");
        }
    }

    #[test]
    fn sigma_tilde_default_reproduces_reported_values() {
        let table = [
            (0.0, 1.0, 0.990),
            (0.0, 1.6, 0.062),
            (0.9, 1.0, 0.099),
            (0.7, 1.12, 0.175),
            (0.7, 1.15, 0.142),
            (0.7, 1.18, 0.107),
            (0.8, 1.12, 0.074),
            (0.8, 1.15, 0.040),
        ];
        for (tau, theta, expected) in table {
            let st = sigma_tilde_default(tau, theta).unwrap();
            let rounded = (st * 1000.0).round() / 1000.0;
            assert!(
                (rounded - expected).abs() < 5e-4,
                "({tau},{theta}): got {st}, expected {expected}"
            );
            assert!(st > 0.0 && st <= 0.99);
            assert!(in_region(tau, theta, st), "default lands outside region");
        }
    }

    #[test]
    fn sigma_tilde_default_rejects_out_of_domain() {
        assert!(sigma_tilde_default(1.0, 1.0).is_err());
        assert!(sigma_tilde_default(0.0, 1.7).is_err());
        assert!(sigma_tilde_default(-1.0, 1.5).is_err());
        assert!(sigma_tilde_default(0.5, -0.5).is_err());
    }

    #[test]
    fn phi_family_closed_forms() {
        // At σ = 1: φ(1) = φ̂(1) = (1−τ−σ̃)(τ+θ), φ̃(1) = (2−τ−θ−σ̃)(τ+θ).
        let f = phi_family(1.0, 0.0, 1.0, 0.0);
        assert_eq!((f.phi, f.phi_hat, f.phi_tilde, f.phi_bar), (1.0, 1.0, 1.0, 1.0));

        let f = phi_family(1.0, 0.9, 1.0, 0.099);
        let expected = (1.0 - 0.9 - 0.099) * 1.9;
        assert!((f.phi - expected).abs() < 1e-6);
        assert!((f.phi_hat - expected).abs() < 1e-6);

        let f = phi_family(0.0, 0.0, 1.0, 0.0);
        assert_eq!((f.phi, f.phi_hat, f.phi_tilde, f.phi_bar), (0.0, -1.0, 0.0, 0.0));
    }

    #[test]
    fn select_sigma_standard_admm() {
        // (τ,θ,σ̃,σ̂) = (0,1,0,0): φ(σ)=σ, φ̂=2σ−1, φ̃=σ, φ̄=(2σ−1)σ → min σ = 1/2.
        let s = select_sigma(0.0, 1.0, 0.0, 0.0).unwrap();
        assert!((s - 0.5).abs() <= 1e-3, "sigma {s}");
        assert!(phi_family(s, 0.0, 1.0, 0.0).feasible());
    }

    #[test]
    fn select_sigma_moves_above_sigma_hat_when_needed() {
        // φ̂(σ) = 2σ − 1 − 0.99 needs σ ≥ 0.995.
        let s = select_sigma(0.0, 1.0, 0.99, 0.99).unwrap();
        assert!((0.995 - 1e-9..1.0).contains(&s), "sigma {s}");
        assert!(phi_family(s, 0.0, 1.0, 0.99).feasible());
    }

    fn random_region_point(rng: &mut CounterRng) -> (f64, f64, f64) {
        loop {
            let tau = rng.uniform_in(-0.99, 0.99);
            let theta = rng.uniform_in(-tau + 0.01, 2.0);
            let sigma_tilde = rng.uniform_in(0.0, 0.9);
            if in_region(tau, theta, sigma_tilde) {
                return (tau, theta, sigma_tilde);
            }
        }
    }

    #[test]
    fn select_sigma_succeeds_on_region_sample() {
        let mut rng = CounterRng::new(33);
        for _ in 0..100 {
            let (tau, theta, st) = random_region_point(&mut rng);
            let s = select_sigma(tau, theta, st, 0.0).unwrap();
            assert!((0.0..1.0).contains(&s));
            assert!(
                phi_family(s, tau, theta, st).feasible(),
                "infeasible sigma {s} at ({tau},{theta},{st})"
            );
        }
    }

    #[test]
    fn vartheta_examples() {
        assert!((vartheta(0.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let v = vartheta(0.9, 1.0, 0.099).unwrap();
        assert!((v - 0.4385).abs() < 1e-3, "vartheta {v}");
    }

    #[test]
    fn vartheta_positive_on_region_sample() {
        let mut rng = CounterRng::new(34);
        for _ in 0..200 {
            let (tau, theta, st) = random_region_point(&mut rng);
            assert!(vartheta(tau, theta, st).unwrap() > 0.0);
        }
    }

    #[test]
    fn m_is_block_diagonal_at_tau_zero() {
        let params = AccelParams::new(0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let g = SpdOperator::identity_scaled(2, 1.0);
        let h = SpdOperator::zero(3);
        let b = identity(3);
        let m = build_m(&g, &h, &b, &params).unwrap();
        let dense = linop::materialize(m.operator().as_ref());
        let expect = DenseMatrix::identity(8);
        for i in 0..8 {
            for j in 0..8 {
                assert!((dense.get(i, j) - expect.get(i, j)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn m_keeps_x_block_isolated() {
        let params = AccelParams::new(0.5, 1.1, 0.1, 0.0, 2.0).unwrap();
        let mut rng = CounterRng::new(35);
        let g = SpdOperator::identity_scaled(3, 0.5);
        let h = SpdOperator::zero(2);
        let braw = DenseMatrix::new(2, 2, rng.normal_vec(4));
        let b: OpRef = Arc::new(braw);
        let m = build_m(&g, &h, &b, &params).unwrap();
        let x = rng.normal_vec(3);
        let mut z = vec![0.0; 7];
        z[..3].copy_from_slice(&x);
        let out = m.apply(&z);
        let gx = g.apply(&x);
        assert!(crate::vecops::rel_vec_gap(&out[..3], &gx) <= 1e-14);
        assert!(out[3..].iter().all(|v| v.abs() <= 1e-14));
    }

    #[test]
    fn m_is_symmetric_psd_on_region_sample() {
        let mut rng = CounterRng::new(36);
        for _ in 0..100 {
            let (tau, theta, st) = random_region_point(&mut rng);
            let beta = rng.uniform_in(0.2, 3.0);
            let params = AccelParams::new(tau, theta, st, 0.0, beta).unwrap();
            let (n, p, m_dim) = (2, 3, 2);
            let graw = DenseMatrix::new(n, n, rng.normal_vec(n * n));
            let g_mat = graw
                .transposed()
                .matmul(&graw)
                .add_matrix(&DenseMatrix::identity(n).scaled(0.3));
            let g = SpdOperator::from_dense_spd(g_mat).unwrap();
            let hraw = DenseMatrix::new(p, p, rng.normal_vec(p * p));
            let h_mat = hraw.transposed().matmul(&hraw);
            let h = SpdOperator::from_parts(Arc::new(h_mat), None).unwrap();
            let b: OpRef = Arc::new(DenseMatrix::new(m_dim, p, rng.normal_vec(m_dim * p)));
            let m = build_m(&g, &h, &b, &params).unwrap();
            let (asym, min_eig) = dense_spd_diagnostics(&m);
            assert!(asym <= 1e-12, "asymmetry {asym}");
            assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");
        }
    }

    #[test]
    fn q_kernel_example_and_bound() {
        let params = AccelParams::new(0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let q = build_q(&params);
        assert_eq!((q.a, q.offdiag, q.c), (3.0, 2.0, 3.0));
        let (lo, hi) = q.eigenvalues();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);

        let mut rng = CounterRng::new(37);
        for _ in 0..100 {
            let (tau, theta, st) = random_region_point(&mut rng);
            let beta = rng.uniform_in(0.2, 3.0);
            let params = AccelParams::new(tau, theta, st, 0.0, beta).unwrap();
            let q = build_q(&params);
            assert!(q.det() > 0.0 && q.trace() > 0.0);
            // scalar probes of ‖(y,γ)‖²_Q ≥ −2ϑ⟨y,γ⟩
            let vt = vartheta(tau, theta, st).unwrap();
            for _ in 0..10 {
                let y = [rng.uniform_in(-2.0, 2.0)];
                let g = [rng.uniform_in(-2.0, 2.0)];
                assert!(q.quad_form(&y, &g) + 2.0 * vt * y[0] * g[0] >= -1e-10);
            }
        }
    }

    #[test]
    fn accel_params_validation() {
        assert!(AccelParams::new(0.0, 1.0, 0.0, 0.0, 1.0).is_ok());
        assert!(matches!(
            AccelParams::new(0.0, 1.0, 0.0, 0.0, 0.0),
            Err(RegionError::InvalidParam(_))
        ));
        assert!(matches!(
            AccelParams::new(0.0, 1.7, 0.0, 0.0, 1.0),
            Err(RegionError::OutsideRegion { .. })
        ));
    }
}
