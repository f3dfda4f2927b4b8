//! Symmetric positive semidefinite operators and the seminorms they induce.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{scaled_identity, zero_square, DenseMatrix, LinearOperator, OpError, OpRef};
use crate::vecops;

/// A square operator flagged symmetric PSD, optionally carrying an inverse
/// for positive definite instances. Proximal matrices G ∈ 𝕊ⁿ₊₊, H ∈ 𝕊ᵖ₊ and
/// the certificate matrix M all live here.
#[derive(Clone)]
pub struct SpdOperator {
    op: OpRef,
    inverse: Option<OpRef>,
    zero: bool,
}

impl SpdOperator {
    /// Wrap an operator the caller asserts is symmetric PSD.
    pub fn from_parts(op: OpRef, inverse: Option<OpRef>) -> Result<Self, OpError> {
        if op.in_dim() != op.out_dim() {
            return Err(OpError::NotSquare {
                out_dim: op.out_dim(),
                in_dim: op.in_dim(),
            });
        }
        Ok(SpdOperator {
            op,
            inverse,
            zero: false,
        })
    }

    /// c·I with c ≥ 0; an inverse is attached when c > 0.
    pub fn identity_scaled(n: usize, c: f64) -> Self {
        assert!(c >= 0.0, "scaled identity must be PSD");
        let inverse = (c > 0.0).then(|| scaled_identity(n, 1.0 / c));
        SpdOperator {
            op: scaled_identity(n, c),
            inverse,
            zero: c == 0.0,
        }
    }

    /// The zero matrix on ℝⁿ (H = 0 in the applications).
    pub fn zero(n: usize) -> Self {
        SpdOperator {
            op: zero_square(n),
            inverse: None,
            zero: true,
        }
    }

    /// Dense SPD matrix; factorized once so the inverse is available.
    pub fn from_dense_spd(m: DenseMatrix) -> Result<Self, OpError> {
        let chol = Cholesky::new(m.to_nalgebra()).ok_or(OpError::NotPositiveDefinite)?;
        let inverse: OpRef = Arc::new(CholeskySolve {
            n: m.rows(),
            factor: chol,
        });
        Ok(SpdOperator {
            op: Arc::new(m),
            inverse: Some(inverse),
            zero: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.in_dim()
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn operator(&self) -> &OpRef {
        &self.op
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.op.apply(x)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply_into(x, out)
    }

    pub fn inverse_apply(&self, x: &[f64]) -> Result<Vec<f64>, OpError> {
        let inv = self.inverse.as_ref().ok_or(OpError::NoInverse)?;
        Ok(inv.apply(x))
    }

    /// ⟨Qx, x⟩, the squared seminorm ‖x‖²_Q.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        if self.zero {
            return 0.0;
        }
        vecops::dot(&self.op.apply(x), x)
    }
}

struct CholeskySolve {
    n: usize,
    factor: Cholesky<f64, Dyn>,
}

impl LinearOperator for CholeskySolve {
    fn in_dim(&self) -> usize {
        self.n
    }
    fn out_dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let sol = self.factor.solve(&DVector::from_column_slice(x));
        out.copy_from_slice(sol.as_slice());
    }
    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        // inverse of a symmetric matrix is symmetric
        self.apply_into(y, out)
    }
}

/// ‖x‖²_Q = ⟨Qx, x⟩ with a structured dimension error.
pub fn seminorm_sq(q: &SpdOperator, x: &[f64]) -> Result<f64, OpError> {
    if x.len() != q.dim() {
        return Err(OpError::DimMismatch {
            expected: q.dim(),
            got: x.len(),
            context: "seminorm_sq operand",
        });
    }
    Ok(q.quad_form(x))
}

/// A seminorm ‖·‖_Q carried around as a value.
#[derive(Clone)]
pub struct SeminormContext {
    pub operator: SpdOperator,
}

impl SeminormContext {
    pub fn new(operator: SpdOperator) -> Self {
        SeminormContext { operator }
    }

    pub fn eval_sq(&self, x: &[f64]) -> Result<f64, OpError> {
        seminorm_sq(&self.operator, x)
    }
}

/// Materialize an SPD candidate and report symmetry / eigenvalue diagnostics.
/// Test-support for small dimensions.
pub fn dense_spd_diagnostics(q: &SpdOperator) -> (f64, f64) {
    let m = super::materialize(q.operator().as_ref());
    let n = m.rows();
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    let eig = DMatrix::from_row_slice(n, n, m.data())
        .symmetric_eigen()
        .eigenvalues;
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    (asym, min_eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::identity;
    use crate::rng::CounterRng;

    #[test]
    fn euclidean_norm_squared() {
        let q = SpdOperator::from_parts(identity(3), Some(identity(3))).unwrap();
        assert_eq!(seminorm_sq(&q, &[1.0, 2.0, 2.0]).unwrap(), 9.0);
    }

    #[test]
    fn zero_vector_gives_zero() {
        let q = SpdOperator::identity_scaled(4, 3.7);
        assert_eq!(seminorm_sq(&q, &[0.0; 4]).unwrap(), 0.0);
        let h = SpdOperator::zero(4);
        assert_eq!(seminorm_sq(&h, &[1.0, -2.0, 0.5, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn scaled_identity_hand_value() {
        let q = SpdOperator::identity_scaled(2, 2.0);
        assert_eq!(seminorm_sq(&q, &[3.0, 4.0]).unwrap(), 50.0);
    }

    #[test]
    fn dimension_mismatch_names_dims() {
        let q = SpdOperator::identity_scaled(3, 1.0);
        let err = seminorm_sq(&q, &[1.0, 2.0]).unwrap_err();
        match err {
            OpError::DimMismatch { expected, got, .. } => {
                assert_eq!((expected, got), (3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dense_spd_inverse_round_trip() {
        let mut rng = CounterRng::new(21);
        let n = 6;
        let raw = DenseMatrix::new(n, n, rng.normal_vec(n * n));
        let spd_mat = raw.transposed().matmul(&raw).add_matrix(&DenseMatrix::identity(n).scaled(0.5));
        let q = SpdOperator::from_dense_spd(spd_mat).unwrap();
        for _ in 0..5 {
            let x = rng.normal_vec(n);
            let back = q.apply(&q.inverse_apply(&x).unwrap());
            assert!(crate::vecops::rel_vec_gap(&back, &x) <= 1e-8);
            assert!(q.quad_form(&x) >= -1e-12 * crate::vecops::norm_sq(&x));
        }
    }

    #[test]
    fn zero_operator_has_no_inverse() {
        let h = SpdOperator::zero(3);
        assert!(h.inverse_apply(&[1.0, 1.0, 1.0]).is_err());
        assert!(h.is_zero());
    }
}
