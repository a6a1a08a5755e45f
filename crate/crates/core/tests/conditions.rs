use std::sync::Arc;

use switchopt::benchmark::{mass_spring_damper, BenchmarkParams};
use switchopt::sim::{check_necessary_conditions, ConditionTolerances};
use switchopt::solver::solve_meocp;
use switchopt::{LtiMode, Matrix, SolveOptions, SwitchedProblem, Vector};

#[test]
fn analytic_bang_bang_example_passes() {
    let mode = |c: f64| LtiMode::new(Matrix::zeros(1, 1), Matrix::zeros(1, 0)).with_constant_cost(c);
    let p = SwitchedProblem::new(0.0, 10.0, Vector::zeros(1), Arc::new(mode(0.0)), Arc::new(mode(1.0)))
        .unwrap()
        .with_aux_coeff(1.0)
        .unwrap();
    let sol = solve_meocp(&p, &SolveOptions { grid_nodes: 101, ..SolveOptions::default() }).unwrap();
    let report = check_necessary_conditions(&p, &sol, &ConditionTolerances::default());
    assert_eq!(report.minimality_pass_fraction, 1.0);
    assert_eq!(report.terminal_residual, 0.0);
    assert!(report.passed(), "{report:?}");
}

#[test]
fn relaxed_benchmark_satisfies_the_necessary_conditions() {
    let p = mass_spring_damper(&BenchmarkParams { b_aux: 0.0, ..BenchmarkParams::default() }).unwrap();
    let sol = solve_meocp(&p, &SolveOptions::default()).unwrap();
    let report = check_necessary_conditions(&p, &sol, &ConditionTolerances::default());
    assert!(report.passed(), "{report:?}");
    assert!(report.costate_residual <= 1e-3);
}
