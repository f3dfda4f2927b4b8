//! Ergodic means and the ε/ζ slacks.
//!
//! The ergodic iterate is the running average of (x, y, γ, x̃, γ̃) and of the
//! residual triple, and the slacks are
//!
//! ```text
//!   εᵃ_k = (1/k) Σᵢ ⟨uᵢ + Aᵀγ̃ᵢ, x̃ᵢ − x̃ᵃ_k⟩,
//!   ζᵃ_k = (1/k) Σᵢ ⟨vᵢ + Bᵀγ̃ᵢ, yᵢ − yᵃ_k⟩,
//! ```
//!
//! both nonnegative. Only O(1) state is kept: the slacks are accumulated as
//! centered cross-products (Welford update), which is algebraically equal to
//! the definition but avoids the cancellation of the naive
//! Σ⟨s, x̃⟩ − ⟨Σs, x̃ᵃ⟩ expansion.

use super::{IterateState, PointwiseResiduals, Problem};
use crate::vecops;

#[derive(Debug, Clone)]
pub struct ErgodicState {
    k: usize,
    sum_x: Vec<f64>,
    sum_y: Vec<f64>,
    sum_gamma: Vec<f64>,
    sum_x_tilde: Vec<f64>,
    sum_gamma_tilde: Vec<f64>,
    sum_u: Vec<f64>,
    sum_v: Vec<f64>,
    sum_w: Vec<f64>,
    mean_s: Vec<f64>,
    mean_xt: Vec<f64>,
    cross_eps: f64,
    mean_t: Vec<f64>,
    mean_yv: Vec<f64>,
    cross_zeta: f64,
}

#[derive(Debug, Clone)]
pub struct ErgodicReport {
    pub k: usize,
    pub x_mean: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub gamma_mean: Vec<f64>,
    pub x_tilde_mean: Vec<f64>,
    pub gamma_tilde_mean: Vec<f64>,
    pub u_mean: Vec<f64>,
    pub v_mean: Vec<f64>,
    pub w_mean: Vec<f64>,
    pub eps: f64,
    pub zeta: f64,
}

impl ErgodicState {
    pub fn new(n: usize, p: usize, m: usize) -> Self {
        ErgodicState {
            k: 0,
            sum_x: vec![0.0; n],
            sum_y: vec![0.0; p],
            sum_gamma: vec![0.0; m],
            sum_x_tilde: vec![0.0; n],
            sum_gamma_tilde: vec![0.0; m],
            sum_u: vec![0.0; n],
            sum_v: vec![0.0; p],
            sum_w: vec![0.0; m],
            mean_s: vec![0.0; n],
            mean_xt: vec![0.0; n],
            cross_eps: 0.0,
            mean_t: vec![0.0; p],
            mean_yv: vec![0.0; p],
            cross_zeta: 0.0,
        }
    }

    pub fn count(&self) -> usize {
        self.k
    }

    /// Fold in iterate k with its residual triple.
    pub fn update(&mut self, problem: &Problem, state: &IterateState, resid: &PointwiseResiduals) {
        self.k += 1;
        let kf = self.k as f64;

        vecops::axpy(1.0, &state.x, &mut self.sum_x);
        vecops::axpy(1.0, &state.y, &mut self.sum_y);
        vecops::axpy(1.0, &state.gamma, &mut self.sum_gamma);
        vecops::axpy(1.0, &state.x_tilde, &mut self.sum_x_tilde);
        vecops::axpy(1.0, &state.gamma_tilde, &mut self.sum_gamma_tilde);
        vecops::axpy(1.0, &resid.u, &mut self.sum_u);
        vecops::axpy(1.0, &resid.v, &mut self.sum_v);
        vecops::axpy(1.0, &resid.w, &mut self.sum_w);

        // s = u + Aᵀγ̃ ∈ ∂f(x̃), t = v + Bᵀγ̃ ∈ ∂g(y)
        let mut s = problem.a.adjoint_apply(&state.gamma_tilde);
        vecops::axpy(1.0, &resid.u, &mut s);
        let mut t = problem.b.adjoint_apply(&state.gamma_tilde);
        vecops::axpy(1.0, &resid.v, &mut t);

        let ds = vecops::sub(&s, &self.mean_s);
        let dxt = vecops::sub(&state.x_tilde, &self.mean_xt);
        self.cross_eps += (kf - 1.0) / kf * vecops::dot(&ds, &dxt);
        vecops::axpy(1.0 / kf, &ds, &mut self.mean_s);
        vecops::axpy(1.0 / kf, &dxt, &mut self.mean_xt);

        let dt = vecops::sub(&t, &self.mean_t);
        let dyv = vecops::sub(&state.y, &self.mean_yv);
        self.cross_zeta += (kf - 1.0) / kf * vecops::dot(&dt, &dyv);
        vecops::axpy(1.0 / kf, &dt, &mut self.mean_t);
        vecops::axpy(1.0 / kf, &dyv, &mut self.mean_yv);
    }

    pub fn report(&self) -> ErgodicReport {
        assert!(self.k >= 1, "ergodic report before any update");
        let inv = 1.0 / self.k as f64;
        let mean = |v: &[f64]| v.iter().map(|x| x * inv).collect::<Vec<_>>();
        ErgodicReport {
            k: self.k,
            x_mean: mean(&self.sum_x),
            y_mean: mean(&self.sum_y),
            gamma_mean: mean(&self.sum_gamma),
            x_tilde_mean: mean(&self.sum_x_tilde),
            gamma_tilde_mean: mean(&self.sum_gamma_tilde),
            u_mean: mean(&self.sum_u),
            v_mean: mean(&self.sum_v),
            w_mean: mean(&self.sum_w),
            eps: self.cross_eps * inv,
            zeta: self.cross_zeta * inv,
        }
    }
}
