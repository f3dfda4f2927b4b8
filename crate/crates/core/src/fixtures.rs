//! Seeded dense QP fixtures: strongly convex quadratics on both blocks with
//! random coupling, used by tests, the certificate suite and the CLI's
//! `qp-fixture` problem kind.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::admm::{Problem, SolverParams, SubgradResidualFn};
use crate::linop::{DenseMatrix, LinearOperator, OpRef};
use crate::oracles::{
    dense_solve, CgXOracle, ExactDenseXOracle, DenseProxYOracle, GObjective, OracleError,
    QuadraticObjective,
};
use crate::region::AccelParams;
use crate::rng::CounterRng;
use crate::vecops;

/// min ½⟨Px,x⟩ − ⟨r,x⟩ + ½⟨Ry,y⟩ − ⟨s,y⟩  s.t.  Ax + By = b.
#[derive(Clone)]
pub struct QpFixture {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub p_mat: DenseMatrix,
    pub r: Vec<f64>,
    pub r_mat: DenseMatrix,
    pub s: Vec<f64>,
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub rhs: Vec<f64>,
}

fn random_spd(rng: &mut CounterRng, n: usize, shift: f64) -> DenseMatrix {
    let raw = DenseMatrix::new(n, n, rng.normal_vec(n * n));
    raw.transposed()
        .matmul(&raw)
        .add_matrix(&DenseMatrix::identity(n).scaled(shift))
}

impl QpFixture {
    pub fn generate(n: usize, p: usize, m: usize, seed: u64) -> Self {
        let mut rng = CounterRng::new(seed);
        QpFixture {
            n,
            p,
            m,
            p_mat: random_spd(&mut rng, n, 0.5),
            r: rng.normal_vec(n),
            r_mat: random_spd(&mut rng, p, 0.5),
            s: rng.normal_vec(p),
            a: DenseMatrix::new(m, n, rng.normal_vec(m * n)),
            b: DenseMatrix::new(m, p, rng.normal_vec(m * p)),
            rhs: rng.normal_vec(m),
        }
    }

    /// The z = (x, y, γ) dimension n + p + m.
    pub fn z_dim(&self) -> usize {
        self.n + self.p + self.m
    }

    pub fn f(&self) -> QuadraticObjective {
        QuadraticObjective::new(Arc::new(self.p_mat.clone()), self.r.clone())
    }

    pub fn g_value(&self, y: &[f64]) -> f64 {
        0.5 * vecops::dot(&self.r_mat.apply(y), y) - vecops::dot(&self.s, y)
    }

    fn ops(&self) -> (OpRef, OpRef) {
        (
            Arc::new(self.a.clone()) as OpRef,
            Arc::new(self.b.clone()) as OpRef,
        )
    }

    fn f_residual_closure(&self) -> SubgradResidualFn {
        let p_mat = self.p_mat.clone();
        let r = self.r.clone();
        let a = self.a.clone();
        Arc::new(move |x_tilde: &[f64], gamma_tilde: &[f64]| {
            let mut out = p_mat.apply(x_tilde);
            vecops::axpy(-1.0, &r, &mut out);
            vecops::axpy(-1.0, &a.adjoint_apply(gamma_tilde), &mut out);
            out
        })
    }

    fn y_oracle(&self) -> Result<DenseProxYOracle, OracleError> {
        let (_, b_op) = self.ops();
        DenseProxYOracle::new(
            GObjective::Quadratic {
                r_mat: self.r_mat.clone(),
                s: self.s.clone(),
            },
            b_op,
            self.rhs.clone(),
        )
    }

    /// Problem wired with the exact dense x-oracle.
    pub fn problem_exact(&self) -> Result<Problem, OracleError> {
        let (a_op, b_op) = self.ops();
        Ok(Problem {
            x_oracle: Arc::new(ExactDenseXOracle::new(
                self.f(),
                a_op.clone(),
                b_op.clone(),
                self.rhs.clone(),
            )?),
            y_oracle: Arc::new(self.y_oracle()?),
            f_residual: Some(self.f_residual_closure()),
            a: a_op,
            b: b_op,
            rhs: self.rhs.clone(),
        })
    }

    /// Problem wired with the conjugate-gradient x-oracle.
    pub fn problem_cg(&self) -> Result<Problem, OracleError> {
        let (a_op, b_op) = self.ops();
        Ok(Problem {
            x_oracle: Arc::new(CgXOracle::new(
                self.f(),
                a_op.clone(),
                b_op.clone(),
                self.rhs.clone(),
            )),
            y_oracle: Arc::new(self.y_oracle()?),
            f_residual: Some(self.f_residual_closure()),
            a: a_op,
            b: b_op,
            rhs: self.rhs.clone(),
        })
    }

    /// G = I/β, H = 0.
    pub fn solver_params(&self, accel: AccelParams) -> SolverParams {
        SolverParams::with_identity_proximal(accel, self.n, self.p)
    }

    /// Direct dense solve of the Lagrangian (KKT) system
    /// Px − Aᵀγ = r, Ry − Bᵀγ = s, Ax + By = b.
    pub fn kkt_solution(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), OracleError> {
        let (n, p, m) = (self.n, self.p, self.m);
        let dim = n + p + m;
        let mut kkt = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = self.p_mat.get(i, j);
            }
        }
        for i in 0..p {
            for j in 0..p {
                kkt[(n + i, n + j)] = self.r_mat.get(i, j);
            }
        }
        // −Aᵀ and −Bᵀ blocks
        for i in 0..n {
            for j in 0..m {
                kkt[(i, n + p + j)] = -self.a.get(j, i);
            }
        }
        for i in 0..p {
            for j in 0..m {
                kkt[(n + i, n + p + j)] = -self.b.get(j, i);
            }
        }
        // A and B blocks
        for i in 0..m {
            for j in 0..n {
                kkt[(n + p + i, j)] = self.a.get(i, j);
            }
        }
        for i in 0..m {
            for j in 0..p {
                kkt[(n + p + i, n + j)] = self.b.get(i, j);
            }
        }
        let rhs = vecops::concat3(&self.r, &self.s, &self.rhs);
        let z = dense_solve(&kkt, &rhs)?;
        Ok((
            z[..n].to_vec(),
            z[n..n + p].to_vec(),
            z[n + p..].to_vec(),
        ))
    }
}
