//! Inexact symmetric proximal ADMM for linearly constrained separable
//! convex programs
//!
//! ```text
//!     min f(x) + g(y)   subject to   A x + B y = b,
//! ```
//!
//! with two acceleration parameters (τ, θ), proximal matrices (G, H) and a
//! relative-error acceptance test that lets the x-subproblem be solved
//! inexactly (tolerances σ̃, σ̂). The crate ships:
//!
//! * [`linop`] — matrix-free linear operators (dense, periodic finite
//!   differences, periodic convolution) with adjoint/materialization probes;
//! * [`region`] — the admissible (τ, θ, σ̃) parameter region, the σ̃ default
//!   rule, the φ-family / σ selection and the certificate matrices M and Q;
//! * [`oracles`] — subproblem solvers: a conjugate-gradient x-oracle driven
//!   by the acceptance test, dense exact oracles for desk-scale references,
//!   and the two-dimensional shrinkage y-oracle;
//! * [`admm`] — the outer iteration, pointwise residuals, ergodic means and
//!   CSV run reports;
//! * [`certify`] — runtime verification of the contraction (HPE) inequality,
//!   Fejér monotonicity and the O(1/√k) / O(1/k) rate bounds;
//! * [`tvapp`] — TV/L2 image deblurring assembled on top of the solver;
//! * [`fixtures`] — seeded dense QP instances for tests and benchmarks.

pub mod admm;
pub mod certify;
pub mod fixtures;
pub mod linop;
pub mod oracles;
pub mod region;
pub mod rng;
pub mod tvapp;
pub(crate) mod vecops;
