mod common;

use switchopt::sim::{evaluate_cost, integrate_state, schedule_trajectories};
use switchopt::{ControlInput, Grid, Matrix, Mode, ModeControls, Schedule, Vector};

use common::benchmark;

/// `x(t) = e^{At} x₀ + ∫₀ᵗ e^{As} ds · c` via the exponential of the
/// augmented matrix `[[A, c], [0, 0]]`.
fn affine_flow(a: &Matrix, c: &Vector, x0: &Vector, t: f64) -> Vector {
    let n = a.nrows();
    let mut aug = Matrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, 1)).copy_from(c);
    let e = (aug * t).exp();
    let mut z = Vector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x0);
    z[n] = 1.0;
    (e * z).rows(0, n).into_owned()
}

fn benchmark_matrices() -> (Matrix, Vector) {
    let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -0.1, -0.1]);
    (a, Vector::from_vec(vec![0.0, 0.2]))
}

fn terminal_error(nodes: usize) -> f64 {
    let p = benchmark(0.0);
    let (a, c) = benchmark_matrices();
    let exact = affine_flow(&a, &c, p.x0(), 10.0);
    let s = Schedule::constant(0.0, 10.0, Mode::One);
    let controls = ModeControls::midpoint(&p);
    let grid = Grid::uniform(0.0, 10.0, nodes).unwrap();
    let traj = integrate_state(&p, ControlInput::Schedule { schedule: &s, controls: &controls }, &grid).unwrap();
    (traj.final_state() - exact).amax()
}

#[test]
fn rk4_is_fourth_order() {
    for nodes in [41, 81, 161] {
        let ratio = terminal_error(nodes) / terminal_error(2 * nodes - 1);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} at {nodes} nodes");
    }
}

#[test]
fn rk4_matches_the_closed_form() {
    assert!(terminal_error(10_001) <= 1e-6);
}

#[test]
fn costate_matches_the_exponential_adjoint() {
    // With z = (x, p, 1), ż = M z is linear; p(0) follows from p(tf) = 0.
    let p = benchmark(0.0);
    let (a, c) = benchmark_matrices();
    let q = Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 4.0]));
    let r = Vector::from_vec(vec![1.0, 0.0]);
    let mut m = Matrix::zeros(5, 5);
    m.view_mut((0, 0), (2, 2)).copy_from(&a);
    m.view_mut((0, 4), (2, 1)).copy_from(&c);
    m.view_mut((2, 0), (2, 2)).copy_from(&(&q * -2.0));
    m.view_mut((2, 2), (2, 2)).copy_from(&(-a.transpose()));
    m.view_mut((2, 4), (2, 1)).copy_from(&(&q * &r * 2.0));

    let e = (&m * 10.0).exp();
    // p(tf) = E_px x0 + E_pp p0 + E_p1 = 0
    let known = e.view((2, 0), (2, 2)) * p.x0() + e.view((2, 4), (2, 1));
    let p0 = e.view((2, 2), (2, 2)).into_owned().lu().solve(&(-known)).unwrap();
    let mut z0 = Vector::zeros(5);
    z0.rows_mut(0, 2).copy_from(p.x0());
    z0.rows_mut(2, 2).copy_from(&p0);
    z0[4] = 1.0;

    let s = Schedule::constant(0.0, 10.0, Mode::One);
    let controls = ModeControls::midpoint(&p);
    let grid = Grid::uniform(0.0, 10.0, 10_001).unwrap();
    let traj = schedule_trajectories(&p, &s, &controls, &grid).unwrap();
    let costates = traj.costates.as_ref().unwrap();
    assert_eq!(costates.last().unwrap().amax(), 0.0);
    let mut worst = 0.0f64;
    for k in (0..grid.len()).step_by(250) {
        let t = grid.nodes()[k];
        let exact = ((&m * t).exp() * &z0).rows(2, 2).into_owned();
        worst = worst.max((&costates[k] - exact).amax());
    }
    assert!(worst <= 1e-6, "max costate error {worst:.2e}");
}

#[test]
fn costate_gives_the_switching_time_gradient() {
    let p = benchmark(0.0);
    let controls = ModeControls::midpoint(&p);
    let grid = Grid::uniform(0.0, 10.0, 10_001).unwrap();
    for (first, tau) in [(Mode::One, 3.7), (Mode::Zero, 6.2), (Mode::One, 8.05)] {
        let at = |t: f64| Schedule::new(0.0, 10.0, vec![first, first.other()], vec![t]).unwrap();
        let delta = 1e-4;
        let fd = (evaluate_cost(&p, &at(tau + delta), &controls, &grid).unwrap()
            - evaluate_cost(&p, &at(tau - delta), &controls, &grid).unwrap())
            / (2.0 * delta);
        let traj = schedule_trajectories(&p, &at(tau), &controls, &grid).unwrap();
        let x = traj.state_at(tau);
        let u = Vector::zeros(0);
        let jump = p.dynamics(first, tau, &x, &u) - p.dynamics(first.other(), tau, &x, &u);
        let analytic = traj.costate_at(tau).unwrap().dot(&jump);
        assert!((fd - analytic).abs() <= 0.01 * analytic.abs(), "fd {fd}, analytic {analytic}");
    }
}

#[test]
fn cost_converges_under_grid_refinement() {
    let p = benchmark(0.0);
    let controls = ModeControls::midpoint(&p);
    let s = Schedule::new(
        0.0,
        10.0,
        vec![Mode::One, Mode::Zero, Mode::One, Mode::Zero],
        vec![2.13, 4.07, 4.71],
    )
    .unwrap();
    let coarse = evaluate_cost(&p, &s, &controls, &Grid::uniform(0.0, 10.0, 501).unwrap()).unwrap();
    let fine = evaluate_cost(&p, &s, &controls, &Grid::uniform(0.0, 10.0, 1001).unwrap()).unwrap();
    assert!((coarse - fine).abs() / fine.abs() < 1e-4, "{coarse} vs {fine}");
}
