use gcma::diagnostics::{compatibility_constant, verify_solved_state, SOLVED_TOL};
use gcma::expr::TrigExpr;
use gcma::grid::{HermitianField, ScalarField, TorusGrid};
use gcma::operator::{reference_density_phi, residual, ProblemData};
use gcma::solver::{homotopy_solve, newton_correct, two_stage_solve, write_history, SolverConfig, SolverState};
use gcma::symfunc::{CoefficientSet, HermitianMatrix};
use gcma::Error;

fn expr(s: &str) -> TrigExpr {
    s.parse().unwrap()
}

const RHO: &str = "0.02*sin(2*pi*x1)*cos(2*pi*y1) + 0.015*cos(2*pi*x2)";

fn kahler(points: usize, rho: Option<&str>, psi: &str) -> ProblemData {
    let grid = TorusGrid::new(2, points).unwrap();
    ProblemData::kahler(
        &grid,
        &HermitianMatrix::identity(2),
        &HermitianMatrix::scaled_identity(2, 2.0),
        rho.map(|r| expr(r).sample(&grid).unwrap()),
        expr(psi).sample(&grid).unwrap(),
        &CoefficientSet::donaldson(2).unwrap(),
    )
    .unwrap()
}

fn solved() -> (ProblemData, SolverState) {
    let data = kahler(8, Some(RHO), "2.3 + 0.1*sin(2*pi*x1)*cos(2*pi*y2)");
    let state = homotopy_solve(&data, &SolverConfig::default()).unwrap();
    (data, state)
}

#[test]
fn homotopy_is_bitwise_deterministic() {
    let (_, a) = solved();
    let (_, b) = solved();
    assert_eq!(a.b.to_bits(), b.b.to_bits());
    assert!(a.u.values().iter().zip(b.u.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.history, b.history);
}

#[test]
fn solved_state_passes_verification() {
    let (data, state) = solved();
    assert_eq!(state.t, 1.0);
    let report = verify_solved_state(&state.u, state.b, &data).unwrap();
    assert!(report.passed(), "failures: {:?}", report.failures());
    assert!(report.solved_equation.unwrap().max_violation <= SOLVED_TOL);
    let r = residual(&state.u, state.b, data.psi(), &data).unwrap();
    assert!(r.norm_inf <= SolverConfig::default().newton_tol_inf);
    // sup-normalized output
    let sup = state.u.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(sup, 0.0);
}

#[test]
fn normalized_density_stays_below_majorant() {
    let (data, state) = solved();
    let phi = reference_density_phi(&data, &ScalarField::zeros(data.grid())).unwrap();
    for (p, &psi) in data.psi().values().iter().enumerate() {
        assert!(state.b.exp() * psi <= phi.values()[p].max(psi) + 1e-8);
    }
}

#[test]
fn two_stage_agrees_with_homotopy() {
    let (data, a) = solved();
    let b = two_stage_solve(&data, &SolverConfig::default()).unwrap();
    assert!((a.b - b.b).abs() < 1e-8);
    for (x, y) in a.u.values().iter().zip(b.u.values()) {
        assert!((x - y).abs() < 1e-8);
    }
    let c = compatibility_constant(&data).unwrap();
    assert!(b.b <= 1e-10);
    assert!(data.psi().values().iter().all(|&v| v >= c));
}

#[test]
fn newton_recovers_manufactured_solution() {
    let data = kahler(8, Some(RHO), "1.0");
    let u_star = expr("0.03*sin(2*pi*x1)*sin(2*pi*y2) + 0.02*cos(2*pi*y1)").sample(data.grid()).unwrap();
    let psi_star = reference_density_phi(&data, &u_star).unwrap();
    let s = newton_correct(SolverState::initial(data.grid()), &psi_star, &data, &SolverConfig::default()).unwrap();
    assert!(s.b.abs() < 1e-9);
    let mean = u_star.mean();
    for (a, b) in s.u.values().iter().zip(u_star.values()) {
        assert!((a - (b - mean)).abs() < 1e-9);
    }
    assert!(s.history[0].newton_iters >= 1);
}

#[test]
fn two_stage_trivial_when_psi_equals_phi() {
    let data = kahler(4, None, "1.0");
    let phi = reference_density_phi(&data, &ScalarField::zeros(data.grid())).unwrap();
    let data = data.with_psi(phi).unwrap();
    let s = two_stage_solve(&data, &SolverConfig::default()).unwrap();
    assert_eq!(s.b, 0.0);
    assert_eq!(s.total_newton_iterations(), 0);
    assert!(s.u.max_abs() == 0.0);
}

#[test]
fn two_stage_rejects_non_kahler_data() {
    let grid = TorusGrid::new(2, 4).unwrap();
    let mats: Vec<HermitianMatrix> = (0..grid.len())
        .map(|p| HermitianMatrix::diagonal(&[2.0, 2.0 + 0.1 * (p % 2) as f64]))
        .collect();
    let data = ProblemData::new(
        &grid,
        &HermitianMatrix::identity(2),
        HermitianField::from_matrices(&grid, &mats).unwrap(),
        ScalarField::constant(&grid, 1.0),
        &CoefficientSet::donaldson(2).unwrap(),
    )
    .unwrap();
    assert!(matches!(two_stage_solve(&data, &SolverConfig::default()), Err(Error::NotKahler)));
    // the plain homotopy accepts general data
    homotopy_solve(&data, &SolverConfig::default()).unwrap();
}

#[test]
fn two_stage_rejects_density_below_constant() {
    let data = kahler(4, Some(RHO), "1.0");
    let c = compatibility_constant(&data).unwrap();
    let low = ScalarField::from_fn(data.grid(), |x| c * (1.0 + 0.1 * (std::f64::consts::TAU * x[0]).sin())).unwrap();
    let data = data.with_psi(low).unwrap();
    assert!(matches!(
        two_stage_solve(&data, &SolverConfig::default()),
        Err(Error::HypothesisViolated { .. })
    ));
}

#[test]
fn exhausted_step_budget_reports_stall() {
    let data = kahler(4, Some(RHO), "1.6");
    let cfg = SolverConfig {
        max_newton: 1,
        t_step_init: 1.0,
        t_step_min: 0.6,
        ..SolverConfig::default()
    };
    assert!(matches!(homotopy_solve(&data, &cfg), Err(Error::HomotopyStalled { .. })));
}

#[test]
fn linear_budget_failure_is_reported() {
    let data = kahler(8, Some(RHO), "1.6");
    let cfg = SolverConfig {
        max_linear_iters: 1,
        ..SolverConfig::default()
    };
    let phi = reference_density_phi(&data, &ScalarField::zeros(data.grid())).unwrap();
    let target = phi.map(|v| v * 0.8).unwrap();
    assert!(matches!(
        newton_correct(SolverState::initial(data.grid()), &target, &data, &cfg),
        Err(Error::LinearSolveFailed { .. })
    ));
}

#[test]
fn non_admissible_start_is_rejected() {
    let data = kahler(4, None, "1.0");
    let bad = expr("0.5*sin(2*pi*x1)").sample(data.grid()).unwrap();
    let state = SolverState {
        u: bad,
        ..SolverState::initial(data.grid())
    };
    assert!(matches!(
        newton_correct(state, data.psi(), &data, &SolverConfig::default()),
        Err(Error::NotAdmissible { .. })
    ));
}

#[test]
fn invalid_config_is_rejected_before_solving() {
    let data = kahler(4, None, "1.0");
    let cfg = SolverConfig {
        growth: 0.0,
        ..SolverConfig::default()
    };
    assert!(matches!(homotopy_solve(&data, &cfg), Err(Error::Config(_))));
}

#[test]
fn history_csv_has_one_row_per_accepted_step() {
    let (_, state) = solved();
    let mut buf = Vec::new();
    write_history(&mut buf, &state.history).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,newton_iters,residual_inf,margin,b"));
    assert_eq!(lines.count(), state.history.len());
    let ts: Vec<f64> = state.history.iter().map(|r| r.t).collect();
    assert_eq!(ts[0], 0.0);
    assert_eq!(*ts.last().unwrap(), 1.0);
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
}
