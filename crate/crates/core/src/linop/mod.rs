//! Matrix-free linear operators.
//!
//! Everything the solver touches — A, B, the finite-difference stack D, the
//! blur K, the proximal matrices G and H, and the certificate matrix M — is
//! an evaluation-only [`LinearOperator`]: an `apply` / `adjoint_apply` pair
//! with recorded dimensions. Operators are immutable after construction and
//! safe to share across threads. Dense materialization exists for tests and
//! desk-scale oracles only; image-scale operators stay matrix-free.

use std::sync::Arc;

use thiserror::Error;

use crate::rng::CounterRng;
use crate::vecops;

pub mod dense;
pub mod spd;
pub mod stencil;

pub use dense::DenseMatrix;
pub use spd::{seminorm_sq, SeminormContext, SpdOperator};

pub type OpRef = Arc<dyn LinearOperator>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error("dimension mismatch: expected vector of length {expected}, got {got} ({context})")]
    DimMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("inner dimensions do not match: left operator takes {left_in}, right operator produces {right_out}")]
    ComposeMismatch { left_in: usize, right_out: usize },
    #[error("operator shapes differ: {a_out}x{a_in} vs {b_out}x{b_in}")]
    AddMismatch {
        a_out: usize,
        a_in: usize,
        b_out: usize,
        b_in: usize,
    },
    #[error("operator is not square ({out_dim}x{in_dim})")]
    NotSquare { out_dim: usize, in_dim: usize },
    #[error("inverse application requested but no inverse is attached")]
    NoInverse,
    #[error("matrix is not positive definite (Cholesky factorization failed)")]
    NotPositiveDefinite,
    #[error("{0}")]
    Parse(String),
}

/// A linear map ℝ^in_dim → ℝ^out_dim given by its action and the action of
/// its adjoint.
pub trait LinearOperator: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.in_dim(), "apply: input length");
        let mut out = vec![0.0; self.out_dim()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint_apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.out_dim(), "adjoint_apply: input length");
        let mut out = vec![0.0; self.in_dim()];
        self.adjoint_apply_into(y, &mut out);
        out
    }
}

impl LinearOperator for Arc<dyn LinearOperator> {
    fn in_dim(&self) -> usize {
        (**self).in_dim()
    }
    fn out_dim(&self) -> usize {
        (**self).out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adjoint_apply_into(y, out)
    }
}

struct Identity {
    n: usize,
}

impl LinearOperator for Identity {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

struct ScaledIdentity {
    n: usize,
    c: f64,
}

impl LinearOperator for ScaledIdentity {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.c * xi;
        }
    }
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        self.apply_into(y, out)
    }
}

struct ZeroOp {
    n: usize,
}

impl LinearOperator for ZeroOp {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn adjoint_apply_into(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

struct Scaled {
    c: f64,
    inner: OpRef,
}

impl LinearOperator for Scaled {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.inner.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        vecops::scale_in_place(self.c, out);
    }
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.adjoint_apply_into(y, out);
        vecops::scale_in_place(self.c, out);
    }
}

/// outer ∘ inner; adjoint is innerᵀ ∘ outerᵀ.
struct Composed {
    outer: OpRef,
    inner: OpRef,
}

impl LinearOperator for Composed {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.outer.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mid = self.inner.apply(x);
        self.outer.apply_into(&mid, out);
    }
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        let mid = self.outer.adjoint_apply(y);
        self.inner.adjoint_apply_into(&mid, out);
    }
}

struct Sum {
    a: OpRef,
    b: OpRef,
}

impl LinearOperator for Sum {
    fn in_dim(&self) -> usize {
        self.a.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.a.out_dim()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.a.apply_into(x, out);
        let other = self.b.apply(x);
        vecops::axpy(1.0, &other, out);
    }
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        self.a.adjoint_apply_into(y, out);
        let other = self.b.adjoint_apply(y);
        vecops::axpy(1.0, &other, out);
    }
}

pub fn identity(n: usize) -> OpRef {
    Arc::new(Identity { n })
}

pub fn scaled_identity(n: usize, c: f64) -> OpRef {
    Arc::new(ScaledIdentity { n, c })
}

pub fn zero_square(n: usize) -> OpRef {
    Arc::new(ZeroOp { n })
}

pub fn scale(c: f64, inner: OpRef) -> OpRef {
    Arc::new(Scaled { c, inner })
}

pub fn compose(outer: OpRef, inner: OpRef) -> Result<OpRef, OpError> {
    if outer.in_dim() != inner.out_dim() {
        return Err(OpError::ComposeMismatch {
            left_in: outer.in_dim(),
            right_out: inner.out_dim(),
        });
    }
    Ok(Arc::new(Composed { outer, inner }))
}

pub fn add(a: OpRef, b: OpRef) -> Result<OpRef, OpError> {
    if a.in_dim() != b.in_dim() || a.out_dim() != b.out_dim() {
        return Err(OpError::AddMismatch {
            a_out: a.out_dim(),
            a_in: a.in_dim(),
            b_out: b.out_dim(),
            b_in: b.in_dim(),
        });
    }
    Ok(Arc::new(Sum { a, b }))
}

/// Column-by-column dense materialization. Intended for tests and
/// desk-scale oracles; image-scale operators are far too large for this.
pub fn materialize(op: &dyn LinearOperator) -> DenseMatrix {
    let (rows, cols) = (op.out_dim(), op.in_dim());
    let mut data = vec![0.0; rows * cols];
    let mut e = vec![0.0; cols];
    let mut col = vec![0.0; rows];
    for j in 0..cols {
        e[j] = 1.0;
        op.apply_into(&e, &mut col);
        e[j] = 0.0;
        for i in 0..rows {
            data[i * cols + j] = col[i];
        }
    }
    DenseMatrix::new(rows, cols, data)
}

/// Materialization of the adjoint, probe by probe.
pub fn materialize_adjoint(op: &dyn LinearOperator) -> DenseMatrix {
    let (rows, cols) = (op.in_dim(), op.out_dim());
    let mut data = vec![0.0; rows * cols];
    let mut e = vec![0.0; cols];
    let mut col = vec![0.0; rows];
    for j in 0..cols {
        e[j] = 1.0;
        op.adjoint_apply_into(&e, &mut col);
        e[j] = 0.0;
        for i in 0..rows {
            data[i * cols + j] = col[i];
        }
    }
    DenseMatrix::new(rows, cols, data)
}

/// Largest relative violation of ⟨Ax, y⟩ = ⟨x, Aᵀy⟩ over random probe pairs.
pub fn max_adjoint_rel_err(op: &dyn LinearOperator, rng: &mut CounterRng, pairs: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = rng.normal_vec(op.in_dim());
        let y = rng.normal_vec(op.out_dim());
        let lhs = vecops::dot(&op.apply(&x), &y);
        let rhs = vecops::dot(&x, &op.adjoint_apply(&y));
        worst = worst.max(vecops::rel_gap(lhs, rhs));
    }
    worst
}

/// Largest relative violation of apply(αx + βy) = α·apply(x) + β·apply(y).
pub fn max_linearity_rel_err(op: &dyn LinearOperator, rng: &mut CounterRng, pairs: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = rng.normal_vec(op.in_dim());
        let y = rng.normal_vec(op.in_dim());
        let (alpha, beta) = (rng.uniform_in(-2.0, 2.0), rng.uniform_in(-2.0, 2.0));
        let combined = op.apply(&vecops::lincomb(alpha, &x, beta, &y));
        let separate = vecops::lincomb(alpha, &op.apply(&x), beta, &op.apply(&y));
        worst = worst.max(vecops::rel_vec_gap(&combined, &separate));
    }
    worst
}

/// Fail-fast adjoint validation at the 1e-10 contract tolerance. Meant for
/// construction-time checks in validation mode; release runs skip it.
pub fn validate_adjoint(op: &dyn LinearOperator, seed: u64, pairs: usize) -> Result<(), OpError> {
    let mut rng = CounterRng::new(seed);
    let err = max_adjoint_rel_err(op, &mut rng, pairs);
    if err > 1e-10 {
        return Err(OpError::Parse(format!(
            "adjoint identity violated: relative error {err:.3e} (tolerance 1e-10)"
        )));
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration with a
/// Rayleigh-quotient stop. Power iteration approaches λ_max from below, so
/// callers that need an upper bound apply their own safety factor.
pub fn largest_eigenvalue(
    op: &dyn LinearOperator,
    iters: usize,
    tol: f64,
) -> Result<f64, OpError> {
    let n = op.in_dim();
    if op.out_dim() != n {
        return Err(OpError::NotSquare {
            out_dim: op.out_dim(),
            in_dim: n,
        });
    }
    let mut rng = CounterRng::new(0x9bde_7a31);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.05 * rng.uniform() + 1e-3 * i as f64 / n as f64).collect();
    let nv = vecops::norm(&v);
    vecops::scale_in_place(1.0 / nv, &mut v);
    let mut lambda = 0.0;
    let mut w = vec![0.0; n];
    for _ in 0..iters {
        op.apply_into(&v, &mut w);
        let rq = vecops::dot(&v, &w);
        let nw = vecops::norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if (rq - lambda).abs() <= tol * (1.0 + rq.abs()) {
            return Ok(rq.max(nw));
        }
        lambda = rq;
    }
    Ok(lambda)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn dense_strategy(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
        proptest::collection::vec(-10.0f64..10.0, rows * cols)
            .prop_map(move |data| DenseMatrix::new(rows, cols, data))
    }

    proptest! {
        #[test]
        fn adjoint_identity_for_random_dense(
            m in dense_strategy(5, 3),
            x in proptest::collection::vec(-10.0f64..10.0, 3),
            y in proptest::collection::vec(-10.0f64..10.0, 5),
        ) {
            let lhs = crate::vecops::dot(&m.apply(&x), &y);
            let rhs = crate::vecops::dot(&x, &m.adjoint_apply(&y));
            prop_assert!(crate::vecops::rel_gap(lhs, rhs) <= 1e-10);
        }

        #[test]
        fn composition_is_linear(
            a in dense_strategy(4, 4),
            b in dense_strategy(4, 4),
            x in proptest::collection::vec(-5.0f64..5.0, 4),
            y in proptest::collection::vec(-5.0f64..5.0, 4),
            alpha in -3.0f64..3.0,
        ) {
            let op = compose(Arc::new(a), Arc::new(b)).unwrap();
            let combined = op.apply(&crate::vecops::lincomb(alpha, &x, 1.0, &y));
            let separate = crate::vecops::lincomb(alpha, &op.apply(&x), 1.0, &op.apply(&y));
            prop_assert!(crate::vecops::rel_vec_gap(&combined, &separate) <= 1e-10);
        }

        #[test]
        fn spd_quadratic_form_is_nonnegative(
            raw in dense_strategy(4, 4),
            x in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            let spd = raw.transposed().matmul(&raw);
            let q = SpdOperator::from_parts(Arc::new(spd), None).unwrap();
            prop_assert!(q.quad_form(&x) >= -1e-12 * (1.0 + crate::vecops::norm_sq(&x)));
        }
    }
}
