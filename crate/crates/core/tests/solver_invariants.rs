//! Cross-module integration checks: reduction equivalences against
//! independently coded references, structural identities over whole runs,
//! and certificate machinery on the QP fixture.

mod common;

use common::{
    engine_trajectory, fg_p_admm, g_p_admm, max_trajectory_gap, textbook_proximal_admm,
    DenseQpData,
};
use sympadmm::admm::{solve, Monitors, SolveOptions, SolverParams};
use sympadmm::certify::{
    eps_subgradient_gap_quadratic, estimate_d0, CertificateContext, ReferenceBudget,
};
use sympadmm::fixtures::QpFixture;
use sympadmm::linop::LinearOperator;
use sympadmm::region::AccelParams;

fn exact_accel(tau: f64, theta: f64, beta: f64) -> AccelParams {
    AccelParams::new(tau, theta, 0.0, 0.0, beta).unwrap()
}

#[test]
fn exact_engine_matches_textbook_proximal_admm() {
    let fx = QpFixture::generate(5, 4, 3, 7);
    let data = DenseQpData::from_fixture(&fx);
    let beta = 1.0;
    let problem = fx.problem_exact().unwrap();
    let params = fx.solver_params(exact_accel(0.0, 1.0, beta));
    let engine = engine_trajectory(&problem, &params, 50, 400);
    let reference = textbook_proximal_admm(&data, beta, 50);
    let gap = max_trajectory_gap(&engine, &reference);
    assert!(gap <= 1e-10, "trajectory gap {gap}");
}

#[test]
fn cg_at_zero_tolerance_matches_exact_engine() {
    let fx = QpFixture::generate(5, 4, 3, 7);
    let beta = 1.0;
    let accel = exact_accel(0.4, 1.2, beta);
    let exact = engine_trajectory(
        &fx.problem_exact().unwrap(),
        &fx.solver_params(accel),
        50,
        400,
    );
    let cg = engine_trajectory(&fx.problem_cg().unwrap(), &fx.solver_params(accel), 50, 400);
    let gap = max_trajectory_gap(&exact, &cg);
    assert!(gap <= 1e-8, "trajectory gap {gap}");
}

#[test]
fn tau_zero_reduces_to_fg_p_admm() {
    let fx = QpFixture::generate(5, 4, 3, 7);
    let data = DenseQpData::from_fixture(&fx);
    let beta = 1.0;
    let theta = 1.6;
    let engine = engine_trajectory(
        &fx.problem_exact().unwrap(),
        &fx.solver_params(exact_accel(0.0, theta, beta)),
        50,
        400,
    );
    let reference = fg_p_admm(&data, beta, theta, 50);
    let gap = max_trajectory_gap(&engine, &reference);
    assert!(gap <= 1e-8, "trajectory gap {gap}");
}

#[test]
fn theta_one_reduces_to_g_p_admm_with_shifted_relaxation() {
    let fx = QpFixture::generate(5, 4, 3, 7);
    let data = DenseQpData::from_fixture(&fx);
    let beta = 1.0;
    let tau = 0.9;
    let engine = engine_trajectory(
        &fx.problem_exact().unwrap(),
        &fx.solver_params(exact_accel(tau, 1.0, beta)),
        50,
        400,
    );
    let reference = g_p_admm(&data, beta, tau + 1.0, 50);
    let gap = max_trajectory_gap(&engine, &reference);
    assert!(gap <= 1e-8, "trajectory gap {gap}");
}

#[test]
fn structural_identities_hold_on_inexact_qp_runs() {
    let fx = QpFixture::generate(5, 4, 3, 11);
    let problem = fx.problem_cg().unwrap();
    for (tau, theta) in [(0.0, 1.0), (0.9, 1.0), (0.0, 1.6), (0.8, 1.12)] {
        let st = sympadmm::region::sigma_tilde_default(tau, theta).unwrap();
        let params = fx.solver_params(AccelParams::new(tau, theta, st, 0.0, 1.0).unwrap());
        let opts = SolveOptions {
            tol: 1e-8,
            max_outer: 5000,
            monitors: Monitors::structural_only(),
            ..SolveOptions::default()
        };
        let report = solve(&problem, &params, &opts).unwrap();
        assert!(report.summary.converged, "({tau},{theta}) did not converge");
        for row in &report.rows {
            assert!(row.pq_rel.unwrap() <= 1e-10, "p/q identity at k={}", row.k);
            assert!(
                row.m_identity_rel.unwrap() <= 1e-10,
                "M identity at k={}",
                row.k
            );
            assert!(
                row.w_direct_rel.unwrap() <= 1e-10,
                "w recomputation at k={}",
                row.k
            );
            assert!(row.eps_erg.unwrap() >= -1e-10);
            assert!(row.zeta_erg.unwrap() >= -1e-10);
        }
    }
}

#[test]
fn stopping_index_matches_a_replayed_oracle() {
    // replay the same deterministic run twice and by hand with step();
    // the stopping index must agree
    let fx = QpFixture::generate(5, 4, 3, 13);
    let problem = fx.problem_cg().unwrap();
    let st = sympadmm::region::sigma_tilde_default(0.7, 1.15).unwrap();
    let params = fx.solver_params(AccelParams::new(0.7, 1.15, st, 0.0, 1.0).unwrap());
    let opts = SolveOptions {
        tol: 1e-6,
        max_outer: 4000,
        ..SolveOptions::default()
    };
    let report = solve(&problem, &params, &opts).unwrap();
    assert!(report.summary.converged);

    let m = sympadmm::region::build_m(&params.g, &params.h, &problem.b, &params.accel).unwrap();
    let (n, p, mm) = problem.dims();
    let mut state = sympadmm::admm::IterateState::zeros(n, p, mm);
    let mut stop_at = None;
    for k in 1..=4000usize {
        let prev = state.clone();
        state = sympadmm::admm::step(&prev, &problem, &params, 400, false).unwrap();
        if sympadmm::admm::stopped(&prev, &state, &m, 1e-6) {
            stop_at = Some(k);
            break;
        }
    }
    assert_eq!(stop_at, Some(report.summary.out));
}

#[test]
fn d0_estimate_matches_dense_kkt_distance() {
    let fx = QpFixture::generate(3, 2, 1, 21);
    let problem = fx.problem_exact().unwrap();
    let params = fx.solver_params(exact_accel(0.3, 1.1, 1.0));
    let est = estimate_d0(
        &problem,
        &params,
        &ReferenceBudget {
            tol: 1e-12,
            max_outer: 200_000,
            max_inner: 4000,
        },
    )
    .unwrap();
    let (xs, ys, gs) = fx.kkt_solution().unwrap();
    let zs = [xs, ys, gs].concat();
    let m = sympadmm::region::build_m(&params.g, &params.h, &problem.b, &params.accel).unwrap();
    let d0_kkt = {
        let diff: Vec<f64> = zs.iter().map(|v| -v).collect(); // z0 = 0
        m.quad_form(&diff)
    };
    assert!(est.d0 >= 0.0);
    assert!(
        (est.d0 - d0_kkt).abs() <= 1e-6 * (1.0 + d0_kkt),
        "estimate {} vs kkt {}",
        est.d0,
        d0_kkt
    );
}

#[test]
fn d0_estimate_vanishes_when_the_origin_solves_the_problem() {
    // zero linear terms and zero rhs make z* = 0 = z0
    let mut fx = QpFixture::generate(3, 2, 1, 22);
    fx.r = vec![0.0; fx.n];
    fx.s = vec![0.0; fx.p];
    fx.rhs = vec![0.0; fx.m];
    let problem = fx.problem_exact().unwrap();
    let params = fx.solver_params(exact_accel(0.0, 1.0, 1.0));
    let est = estimate_d0(&problem, &params, &ReferenceBudget::default()).unwrap();
    assert!(est.d0 <= 1e-12, "d0 {}", est.d0);
}

#[test]
fn certificates_hold_on_qp_runs_with_h_nonzero_g_dense() {
    // exercise the full certificate chain on a fixture with a dense SPD G
    // and a nonzero H, so the η-sequence's H-term is live
    use sympadmm::linop::{DenseMatrix, SpdOperator};

    let fx = QpFixture::generate(4, 3, 2, 33);
    let problem = fx.problem_exact().unwrap();
    let beta = 1.2;
    let accel = AccelParams::new(0.5, 1.1, 0.2, 0.1, beta).unwrap();
    // G: SPD with a diagonal shift; H: scaled identity
    let mut rng = sympadmm::rng::CounterRng::new(5);
    let raw = DenseMatrix::new(4, 4, rng.normal_vec(16));
    let g_mat = {
        let gt = raw.transposed().matmul(&raw);
        gt.add_matrix(&DenseMatrix::identity(4).scaled(0.6))
    };
    let params = SolverParams {
        accel,
        g: SpdOperator::from_dense_spd(g_mat).unwrap(),
        h: SpdOperator::from_parts(sympadmm::linop::scaled_identity(3, 0.4), None).unwrap(),
    };
    let budget = ReferenceBudget {
        tol: 1e-11,
        max_outer: 100_000,
        max_inner: 2000,
    };
    let ctx = CertificateContext::prepare(&problem, &params, &budget).unwrap();
    let opts = SolveOptions {
        tol: 1e-7,
        max_outer: 10_000,
        monitors: Monitors {
            structural: true,
            ergodic: true,
            certificate: Some(ctx.monitor()),
        },
        ..SolveOptions::default()
    };
    let report = solve(&problem, &params, &opts).unwrap();
    assert!(report.summary.converged);
    let outcome = sympadmm::certify::verify_report(&report, &ctx.scalars).unwrap();
    assert!(
        outcome.passed,
        "certificate failures: {:?}",
        outcome.failures
    );
}

#[test]
fn ergodic_eps_subgradient_inclusion_holds_for_quadratic_f() {
    let fx = QpFixture::generate(4, 3, 2, 44);
    let problem = fx.problem_cg().unwrap();
    let st = sympadmm::region::sigma_tilde_default(0.6, 1.1).unwrap();
    let params = fx.solver_params(AccelParams::new(0.6, 1.1, st, 0.0, 1.0).unwrap());
    let (n, p, m) = problem.dims();
    let mut state = sympadmm::admm::IterateState::zeros(n, p, m);
    let mut erg = sympadmm::admm::ErgodicState::new(n, p, m);
    for _ in 0..40 {
        let prev = state.clone();
        state = sympadmm::admm::step(&prev, &problem, &params, 400, false).unwrap();
        let res = sympadmm::admm::pointwise_residuals(&prev, &state, &params, &problem);
        erg.update(&problem, &state, &res);
        let rep = erg.report();
        // s = uᵃ + Aᵀγ̃ᵃ must be an εᵃ-subgradient of f at x̃ᵃ
        let mut s = problem.a.adjoint_apply(&rep.gamma_tilde_mean);
        sympadmm_axpy(&rep.u_mean, &mut s);
        let gap =
            eps_subgradient_gap_quadratic(&fx.f(), &s, &rep.x_tilde_mean, rep.eps).unwrap();
        assert!(
            gap >= -1e-8 * (1.0 + gap.abs()),
            "eps-subgradient gap {gap} at k={}",
            rep.k
        );
    }
}

fn sympadmm_axpy(x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi;
    }
}

#[test]
fn exact_mode_identifies_x_tilde_with_x() {
    let fx = QpFixture::generate(5, 4, 3, 55);
    let problem = fx.problem_cg().unwrap();
    let params = fx.solver_params(exact_accel(0.5, 1.1, 1.0));
    let (n, p, m) = problem.dims();
    let mut state = sympadmm::admm::IterateState::zeros(n, p, m);
    for _ in 0..30 {
        let prev = state.clone();
        state = sympadmm::admm::step(&prev, &problem, &params, 400, false).unwrap();
        let gap = state
            .x_tilde
            .iter()
            .zip(&state.x)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(gap <= 1e-12, "x-tilde and x differ by {gap:.3e} in exact mode");
    }
}

#[test]
fn tv32_exact_mode_restoration_regression() {
    use sympadmm::tvapp::{
        assemble_tv_problem, degrade, psnr, synthetic_piecewise_constant, tv_solver_params,
        Image, TvProblemSpec,
    };
    let (m, n) = (32, 32);
    let original = synthetic_piecewise_constant(m, n);
    let spec = TvProblemSpec::default();
    let degraded = degrade(&original, &spec).unwrap();
    let asm = assemble_tv_problem(&spec, &degraded).unwrap();
    let params = tv_solver_params(AccelParams::new(0.0, 1.0, 0.0, 0.0, 1.0).unwrap(), m, n);
    let opts = SolveOptions {
        tol: 1e-2,
        max_outer: 2000,
        max_inner: Some(4000),
        monitors: Monitors::off(),
        ..SolveOptions::default()
    };
    let report = solve(&asm.problem, &params, &opts).unwrap();
    assert!(report.summary.converged);
    let restored = Image::new(m, n, report.final_x);
    let before = psnr(&original, &degraded).unwrap();
    let after = psnr(&original, &restored).unwrap();
    assert!(after > before, "psnr {after:.2} vs degraded {before:.2}");
}

#[test]
fn tv_engine_u_matches_the_smooth_gradient_residual() {
    use sympadmm::tvapp::{
        assemble_tv_problem, degrade, synthetic_piecewise_constant, tv_solver_params,
        TvProblemSpec,
    };
    let (m, n) = (16, 16);
    let original = synthetic_piecewise_constant(m, n);
    let spec = TvProblemSpec::default();
    let degraded = degrade(&original, &spec).unwrap();
    let asm = assemble_tv_problem(&spec, &degraded).unwrap();
    let st = sympadmm::region::sigma_tilde_default(0.8, 1.12).unwrap();
    let params = tv_solver_params(AccelParams::new(0.8, 1.12, st, 0.0, 1.0).unwrap(), m, n);
    let mut state = sympadmm::admm::IterateState::zeros(m * n, 2 * m * n, 2 * m * n);
    let recompute = asm.problem.f_residual.as_ref().unwrap().clone();
    for _ in 0..10 {
        let prev = state.clone();
        state = sympadmm::admm::step(&prev, &asm.problem, &params, 4000, false).unwrap();
        let fresh = recompute(&state.x_tilde, &state.gamma_tilde);
        let scale = 1.0
            + fresh.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gap = state
            .u
            .iter()
            .zip(&fresh)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(gap / scale <= 1e-8, "u drifted from the gradient residual by {gap:.3e}");
    }
}

#[test]
fn dimension_mismatches_are_structured_errors() {
    use sympadmm::admm::{SolveError, SolverParams};
    use sympadmm::linop::SpdOperator;
    let fx = QpFixture::generate(5, 4, 3, 7);
    let problem = fx.problem_exact().unwrap();
    let accel = exact_accel(0.0, 1.0, 1.0);
    // G sized for the wrong block
    let params = SolverParams {
        accel,
        g: SpdOperator::identity_scaled(7, 1.0),
        h: SpdOperator::zero(4),
    };
    match solve(&problem, &params, &SolveOptions::default()) {
        Err(SolveError::Dims(msg)) => assert!(msg.contains("G is 7")),
        other => panic!("expected a dimension error, got {:?}", other.map(|r| r.summary.out)),
    }
}

#[test]
fn shrinkage_oracle_requires_h_zero() {
    use sympadmm::linop::SpdOperator;
    use sympadmm::oracles::{Shrink2dYOracle, YStepInputs, YSubproblemOracle};
    let oracle = Shrink2dYOracle { pixels: 4 };
    let h = SpdOperator::identity_scaled(8, 0.5);
    let err = oracle
        .solve_y(&YStepInputs {
            y_prev: &[0.0; 8],
            a_x_tilde: &[0.0; 8],
            gamma_half: &[0.0; 8],
            beta: 1.0,
            h: &h,
        })
        .err()
        .unwrap();
    assert!(err.to_string().contains("H = 0"), "{err}");
}

#[test]
fn acceptance_without_an_invertible_g_is_a_configuration_error() {
    use sympadmm::admm::accept_inexact;
    use sympadmm::linop::SpdOperator;
    let g = SpdOperator::zero(3);
    let err = accept_inexact(
        &[1.0, 0.0, 0.0],
        &[0.0; 3],
        &[0.1, 0.0, 0.0],
        &[0.0; 2],
        &[0.0; 2],
        &g,
        1.0,
        0.5,
        0.0,
    )
    .err()
    .unwrap();
    assert!(err.to_string().contains("G"), "{err}");
}
