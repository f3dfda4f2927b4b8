#![allow(dead_code)]

//! Test-support: independently coded reference iterations for the reduction
//! checks, written directly against the dense fixture matrices with
//! nalgebra solves — no shared code with the solver's own step.

use nalgebra::{DMatrix, DVector};
use sympadmm::fixtures::QpFixture;

pub struct DenseQpData {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub p_mat: DMatrix<f64>,
    pub r: DVector<f64>,
    pub r_mat: DMatrix<f64>,
    pub s: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl DenseQpData {
    pub fn from_fixture(fx: &QpFixture) -> Self {
        DenseQpData {
            n: fx.n,
            p: fx.p,
            m: fx.m,
            p_mat: fx.p_mat.to_nalgebra(),
            r: DVector::from_column_slice(&fx.r),
            r_mat: fx.r_mat.to_nalgebra(),
            s: DVector::from_column_slice(&fx.s),
            a: fx.a.to_nalgebra(),
            b: fx.b.to_nalgebra(),
            rhs: DVector::from_column_slice(&fx.rhs),
        }
    }

    /// Exact proximal x-update: argmin of
    /// f(x) − ⟨γ, Ax⟩ + (β/2)‖Ax + By − b‖² + (1/(2β))‖x − x_prev‖².
    fn x_update(&self, x_prev: &DVector<f64>, y: &DVector<f64>, gamma: &DVector<f64>, beta: f64) -> DVector<f64> {
        let lhs = &self.p_mat
            + beta * self.a.transpose() * &self.a
            + DMatrix::identity(self.n, self.n) / beta;
        let rhs = &self.r + self.a.transpose() * gamma
            - beta * self.a.transpose() * (&self.b * y - &self.rhs)
            + x_prev / beta;
        lhs.lu().solve(&rhs).expect("x-update system")
    }

    /// Exact y-update (H = 0): argmin of
    /// g(y) − ⟨γ, By⟩ + (β/2)‖target + By − b‖².
    fn y_update(&self, target: &DVector<f64>, gamma: &DVector<f64>, beta: f64) -> DVector<f64> {
        let lhs = &self.r_mat + beta * self.b.transpose() * &self.b;
        let rhs = &self.s + self.b.transpose() * gamma
            - beta * self.b.transpose() * (target - &self.rhs);
        lhs.lu().solve(&rhs).expect("y-update system")
    }
}

pub type Trajectory = Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>;

/// Textbook proximal ADMM (G = I/β, H = 0): x-step, y-step at γ_{k−1},
/// multiplier step γ ← γ − β(Ax + By − b).
pub fn textbook_proximal_admm(data: &DenseQpData, beta: f64, iters: usize) -> Trajectory {
    let mut x = DVector::zeros(data.n);
    let mut y = DVector::zeros(data.p);
    let mut gamma = DVector::zeros(data.m);
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        x = data.x_update(&x, &y, &gamma, beta);
        let ax = &data.a * &x;
        y = data.y_update(&ax, &gamma, beta);
        gamma -= beta * (&ax + &data.b * &y - &data.rhs);
        out.push((
            x.as_slice().to_vec(),
            y.as_slice().to_vec(),
            gamma.as_slice().to_vec(),
        ));
    }
    out
}

/// Fortin–Glowinski accelerated proximal ADMM: like the textbook method but
/// with the multiplier stepsize θβ.
pub fn fg_p_admm(data: &DenseQpData, beta: f64, theta: f64, iters: usize) -> Trajectory {
    let mut x = DVector::zeros(data.n);
    let mut y = DVector::zeros(data.p);
    let mut gamma = DVector::zeros(data.m);
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        x = data.x_update(&x, &y, &gamma, beta);
        let ax = &data.a * &x;
        y = data.y_update(&ax, &gamma, beta);
        gamma -= theta * beta * (&ax + &data.b * &y - &data.rhs);
        out.push((
            x.as_slice().to_vec(),
            y.as_slice().to_vec(),
            gamma.as_slice().to_vec(),
        ));
    }
    out
}

/// Generalized proximal ADMM with relaxation factor α: the y- and γ-steps
/// see the relaxed quantity αAx + (1−α)(b − By_prev) in place of Ax.
pub fn g_p_admm(data: &DenseQpData, beta: f64, alpha: f64, iters: usize) -> Trajectory {
    let mut x = DVector::zeros(data.n);
    let mut y = DVector::zeros(data.p);
    let mut gamma = DVector::zeros(data.m);
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        x = data.x_update(&x, &y, &gamma, beta);
        let relaxed = alpha * (&data.a * &x) + (1.0 - alpha) * (&data.rhs - &data.b * &y);
        y = data.y_update(&relaxed, &gamma, beta);
        gamma -= beta * (&relaxed + &data.b * &y - &data.rhs);
        out.push((
            x.as_slice().to_vec(),
            y.as_slice().to_vec(),
            gamma.as_slice().to_vec(),
        ));
    }
    out
}

/// Engine trajectory over a fixed number of steps, recorded as (x, y, γ).
pub fn engine_trajectory(
    problem: &sympadmm::admm::Problem,
    params: &sympadmm::admm::SolverParams,
    iters: usize,
    max_inner: usize,
) -> Trajectory {
    let (n, p, m) = problem.dims();
    let mut state = sympadmm::admm::IterateState::zeros(n, p, m);
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        state = sympadmm::admm::step(&state, problem, params, max_inner, false).expect("step");
        out.push((state.x.clone(), state.y.clone(), state.gamma.clone()));
    }
    out
}

pub fn max_trajectory_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut worst = 0.0f64;
    for ((xa, ya, ga), (xb, yb, gb)) in a.iter().zip(b) {
        for (u, v) in [(xa, xb), (ya, yb), (ga, gb)] {
            let scale = 1.0
                + u.iter().map(|t| t * t).sum::<f64>().sqrt().max(
                    v.iter().map(|t| t * t).sum::<f64>().sqrt(),
                );
            let gap = u
                .iter()
                .zip(v)
                .fold(0.0f64, |acc, (s, t)| acc.max((s - t).abs()));
            worst = worst.max(gap / scale);
        }
    }
    worst
}
