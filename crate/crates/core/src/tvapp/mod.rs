//! TV/L2 image deblurring
//!
//! ```text
//!   min_x  (μ/2)‖Kx − c‖² + ‖x‖_TV
//! ```
//!
//! split with y = Dx into f(x) = (μ/2)‖Kx − c‖², g(y) = Σ‖(y¹,y²)_{ij}‖₂,
//! A = −D, B = I, b = 0. The x-subproblem reduces to the linear system
//! (μKᵀK + βDᵀD)x = μKᵀc + Dᵀ(βy_{k−1} − γ_{k−1}) handled by the CG oracle,
//! and the y-subproblem is the two-dimensional shrinkage. K is a periodic
//! Gaussian blur (self-adjoint), D the periodic difference stack.

mod image;

pub use image::{psnr, synthetic_piecewise_constant, Image, ImageError};

use std::sync::Arc;

use thiserror::Error;

use crate::admm::{Problem, SolverParams};
use crate::linop::{self, stencil::PeriodicDiff, stencil::SeparableConv2d, LinearOperator, OpRef};
use crate::oracles::{CgXOracle, QuadraticObjective, Shrink2dYOracle};
use crate::region::AccelParams;
use crate::rng::CounterRng;
use crate::vecops;

#[derive(Debug, Error)]
pub enum TvError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("invalid blur kernel: {0}")]
    Kernel(String),
    #[error("invalid problem spec: {0}")]
    Spec(String),
}

/// Degradation + regularization description of one TV instance.
#[derive(Debug, Clone)]
pub struct TvProblemSpec {
    pub mu: f64,
    pub kernel_size: usize,
    pub kernel_std: f64,
    pub noise_variance: f64,
    pub rng_seed: u64,
}

impl Default for TvProblemSpec {
    fn default() -> Self {
        TvProblemSpec {
            mu: 1e3,
            kernel_size: 9,
            kernel_std: 5.0,
            noise_variance: 1e-4,
            rng_seed: 1,
        }
    }
}

impl TvProblemSpec {
    pub fn validate(&self) -> Result<(), TvError> {
        if !(self.mu > 0.0) {
            return Err(TvError::Spec(format!("mu must be positive, got {}", self.mu)));
        }
        if self.kernel_size % 2 == 0 {
            return Err(TvError::Spec(format!(
                "kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        if !(self.kernel_std > 0.0) {
            return Err(TvError::Spec("kernel std must be positive".into()));
        }
        if self.noise_variance < 0.0 {
            return Err(TvError::Spec("noise variance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Stacked periodic differences D = (D¹; D²) on an m×n grid.
pub fn finite_difference_d(m: usize, n: usize) -> OpRef {
    Arc::new(PeriodicDiff::new(m, n))
}

/// Sampled 1-D Gaussian, normalized to sum 1.
pub fn gaussian_kernel_1d(size: usize, std: f64) -> Result<Vec<f64>, TvError> {
    if size % 2 == 0 || size == 0 {
        return Err(TvError::Kernel(format!("size must be odd, got {size}")));
    }
    if !(std > 0.0) {
        return Err(TvError::Kernel("standard deviation must be positive".into()));
    }
    let r = (size / 2) as isize;
    let mut w: Vec<f64> = (-r..=r)
        .map(|d| (-((d * d) as f64) / (2.0 * std * std)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Periodic Gaussian blur of the given stencil size and standard deviation.
/// The sampled 2-D Gaussian is an outer product, so the operator applies as
/// two 1-D passes; the kernel is symmetric, making K self-adjoint.
pub fn gaussian_blur_k(m: usize, n: usize, size: usize, std: f64) -> Result<OpRef, TvError> {
    let w = gaussian_kernel_1d(size, std)?;
    Ok(Arc::new(SeparableConv2d::new(m, n, w.clone(), w)))
}

/// Isotropic TV norm: Σ_{ij} ‖((D¹x)_{ij}, (D²x)_{ij})‖₂.
pub fn tv_norm_iso(img: &Image) -> f64 {
    let d = PeriodicDiff::new(img.m, img.n);
    let grads = d.apply(&img.pixels);
    let mn = img.m * img.n;
    (0..mn)
        .map(|i| (grads[i] * grads[i] + grads[mn + i] * grads[mn + i]).sqrt())
        .sum()
}

/// Blur then add seeded mean-zero Gaussian noise of the given variance.
/// Deterministic for a fixed seed; the result is intentionally unclamped.
pub fn degrade(original: &Image, spec: &TvProblemSpec) -> Result<Image, TvError> {
    spec.validate()?;
    let k = gaussian_blur_k(original.m, original.n, spec.kernel_size, spec.kernel_std)?;
    let mut pixels = k.apply(&original.pixels);
    if spec.noise_variance > 0.0 {
        let sd = spec.noise_variance.sqrt();
        let mut rng = CounterRng::new(spec.rng_seed);
        for v in &mut pixels {
            *v += sd * rng.normal();
        }
    }
    Ok(Image::new(original.m, original.n, pixels))
}

/// A TV instance assembled for the solver.
pub struct TvAssembly {
    pub problem: Problem,
    pub f: QuadraticObjective,
    pub m: usize,
    pub n: usize,
    pub degraded: Image,
    pub mu: f64,
    pub kernel_size: usize,
    pub kernel_std: f64,
}

impl TvAssembly {
    /// (μ/2)‖Kx − c‖² + ‖x‖_TV at an iterate.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let img = Image::new(self.m, self.n, x.to_vec());
        self.data_term(x) + tv_norm_iso(&img)
    }

    pub fn data_term(&self, x: &[f64]) -> f64 {
        let k = gaussian_blur_k(self.m, self.n, self.kernel_size, self.kernel_std)
            .expect("kernel validated at assembly");
        let mut resid = k.apply(x);
        vecops::axpy(-1.0, &self.degraded.pixels, &mut resid);
        0.5 * self.mu * vecops::norm_sq(&resid)
    }
}

/// Build the splitting for a degraded image: CG x-oracle on
/// μKᵀK + βDᵀD, shrinkage y-oracle, A = −D, B = I, b = 0.
pub fn assemble_tv_problem(spec: &TvProblemSpec, degraded: &Image) -> Result<TvAssembly, TvError> {
    spec.validate()?;
    let (m, n) = (degraded.m, degraded.n);
    let mn = m * n;
    let k = gaussian_blur_k(m, n, spec.kernel_size, spec.kernel_std)?;
    let d = finite_difference_d(m, n);

    // P = μKᵀK; K is self-adjoint so KᵀK = K∘K
    let ktk = linop::compose(k.clone(), k.clone()).expect("square composition");
    let hessian = linop::scale(spec.mu, ktk);
    // r = μKᵀc
    let mut r = k.adjoint_apply(&degraded.pixels);
    vecops::scale_in_place(spec.mu, &mut r);
    let f = QuadraticObjective::new(hessian, r);

    let a = linop::scale(-1.0, d.clone());
    let b = linop::identity(2 * mn);
    let rhs = vec![0.0; 2 * mn];

    let x_oracle = Arc::new(CgXOracle::new(f.clone(), a.clone(), b.clone(), rhs.clone()));
    let y_oracle = Arc::new(Shrink2dYOracle { pixels: mn });

    let f_residual = {
        let k = k.clone();
        let d = d.clone();
        let c = degraded.pixels.clone();
        let mu = spec.mu;
        Arc::new(move |x_tilde: &[f64], gamma_tilde: &[f64]| {
            // ∇f(x̃) − Aᵀγ̃ = μKᵀ(Kx̃ − c) + Dᵀγ̃
            let mut kr = k.apply(x_tilde);
            vecops::axpy(-1.0, &c, &mut kr);
            let mut out = k.adjoint_apply(&kr);
            vecops::scale_in_place(mu, &mut out);
            vecops::axpy(1.0, &d.adjoint_apply(gamma_tilde), &mut out);
            out
        }) as crate::admm::SubgradResidualFn
    };

    Ok(TvAssembly {
        problem: Problem {
            a,
            b,
            rhs,
            x_oracle,
            y_oracle,
            f_residual: Some(f_residual),
        },
        f,
        m,
        n,
        degraded: degraded.clone(),
        mu: spec.mu,
        kernel_size: spec.kernel_size,
        kernel_std: spec.kernel_std,
    })
}

/// G = I/β and H = 0, the setup the application runs with.
pub fn tv_solver_params(accel: AccelParams, m: usize, n: usize) -> SolverParams {
    SolverParams::with_identity_proximal(accel, m * n, 2 * m * n)
}
