use crate::error::Result;
use crate::model::{Schedule, SwitchedProblem};

use super::{
    aux_cost, embedded_running_cost_unchecked, integrate_state, ControlInput, EmbeddedControl,
    Grid, ModeControls, Trajectory,
};

/// Running and cumulative cost along a schedule.
#[derive(Debug, Clone)]
pub struct CostProfile {
    /// State trajectory with `cumulative_cost` filled in.
    pub trajectory: Trajectory,
    /// Running cost at each node, taken with the mode active from that node
    /// on (right-continuous).
    pub running: Vec<f64>,
    pub integral: f64,
    pub terminal: f64,
    pub total: f64,
}

/// Simulates `schedule` and integrates its running cost with the
/// trapezoidal rule. Each interval uses its own mode at both ends, so the
/// jump of the integrand at a switch is not smeared.
pub fn schedule_cost_profile(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    grid: &Grid,
) -> Result<CostProfile> {
    let mut trajectory =
        integrate_state(problem, ControlInput::Schedule { schedule, controls }, grid)?;
    let nodes = trajectory.grid.nodes();
    let xs = &trajectory.states;

    let mut cumulative = Vec::with_capacity(nodes.len());
    cumulative.push(0.0);
    let mut acc = 0.0;
    for k in 0..trajectory.grid.intervals() {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let mode = schedule.mode_at_unchecked(0.5 * (a + b));
        let la = problem.running_cost(mode, a, &xs[k], &controls.at(mode, a));
        let lb = problem.running_cost(mode, b, &xs[k + 1], &controls.at(mode, b));
        acc += 0.5 * (b - a) * (la + lb);
        cumulative.push(acc);
    }
    let running = nodes
        .iter()
        .zip(xs)
        .map(|(&t, x)| {
            let mode = schedule.mode_at_unchecked(t);
            problem.running_cost(mode, t, x, &controls.at(mode, t))
        })
        .collect();
    let terminal = problem.terminal_value(trajectory.final_state());
    trajectory.cumulative_cost = Some(cumulative);
    Ok(CostProfile {
        trajectory,
        running,
        integral: acc,
        terminal,
        total: acc + terminal,
    })
}

/// Total cost `J = ∫ l_{v̄(t)} dt + K` of a schedule.
pub fn evaluate_cost(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    grid: &Grid,
) -> Result<f64> {
    Ok(schedule_cost_profile(problem, schedule, controls, grid)?.total)
}

/// Modified embedded cost, split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddedCost {
    /// `∫ (L + L_v) dt + K`
    pub total: f64,
    /// `∫ L_v dt`
    pub aux: f64,
    pub terminal: f64,
}

/// Simulates an embedded control on its own grid and evaluates
/// `∫ {L + L_v(v)} dt + K` by the trapezoidal rule.
pub fn evaluate_embedded_cost(
    problem: &SwitchedProblem,
    control: &EmbeddedControl,
) -> Result<EmbeddedCost> {
    let grid = control.grid();
    let traj = integrate_state(problem, ControlInput::Embedded(control), grid)?;
    let weights = grid.trapezoid_weights();
    let (mut running, mut aux) = (0.0, 0.0);
    for (k, (&t, x)) in grid.nodes().iter().zip(&traj.states).enumerate() {
        let v = control.v()[k];
        running += weights[k]
            * embedded_running_cost_unchecked(problem, t, x, &control.u0()[k], &control.u1()[k], v);
        aux += weights[k] * aux_cost(problem.aux_coeff(), v);
    }
    let terminal = problem.terminal_value(traj.final_state());
    Ok(EmbeddedCost {
        total: running + aux + terminal,
        aux,
        terminal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LtiMode, Matrix, Mode, TerminalCost, Vector};
    use std::sync::Arc;

    fn constant_cost_problem(l0: f64, l1: f64) -> SwitchedProblem {
        let m0 = LtiMode::new(Matrix::zeros(1, 1), Matrix::zeros(1, 0)).with_constant_cost(l0);
        let m1 = LtiMode::new(Matrix::zeros(1, 1), Matrix::zeros(1, 0)).with_constant_cost(l1);
        SwitchedProblem::new(0.0, 10.0, Vector::zeros(1), Arc::new(m0), Arc::new(m1)).unwrap()
    }

    #[test]
    fn cost_reduces_to_terminal_or_horizon() {
        let grid = Grid::uniform(0.0, 10.0, 21).unwrap();
        let s = Schedule::new(0.0, 10.0, vec![Mode::Zero, Mode::One], vec![3.7]).unwrap();

        let p = constant_cost_problem(0.0, 0.0).with_terminal_cost(TerminalCost::Constant(7.0));
        let c = ModeControls::midpoint(&p);
        assert_eq!(evaluate_cost(&p, &s, &c, &grid).unwrap(), 7.0);

        let p = constant_cost_problem(1.0, 1.0);
        assert!((evaluate_cost(&p, &s, &c, &grid).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn switch_between_nodes_is_integrated_exactly() {
        // Constant costs 2 and 4 with the switch at 3.7, off the coarse grid.
        let p = constant_cost_problem(2.0, 4.0);
        let grid = Grid::uniform(0.0, 10.0, 11).unwrap();
        let s = Schedule::new(0.0, 10.0, vec![Mode::Zero, Mode::One], vec![3.7]).unwrap();
        let prof = schedule_cost_profile(&p, &s, &ModeControls::midpoint(&p), &grid).unwrap();
        assert!((prof.total - (2.0 * 3.7 + 4.0 * 6.3)).abs() < 1e-12);
        let idx = prof.trajectory.grid.nodes().iter().position(|&t| t == 3.7).unwrap();
        assert_eq!(prof.running[idx], 4.0);
        assert_eq!(prof.running[idx - 1], 2.0);
    }

    #[test]
    fn embedded_aux_part() {
        let p = constant_cost_problem(1.0, 1.0).with_aux_coeff(1.0).unwrap();
        let grid = Grid::uniform(0.0, 10.0, 51).unwrap();
        let half = EmbeddedControl::constant(&p, grid.clone(), 0.5).unwrap();
        assert!((evaluate_embedded_cost(&p, &half).unwrap().aux - 2.5).abs() < 1e-12);
        let v: Vec<f64> = (0..51).map(|k| (k % 2) as f64).collect();
        let e = Vector::zeros(0);
        let bang = EmbeddedControl::new(grid, vec![e.clone(); 51], vec![e; 51], v).unwrap();
        assert_eq!(evaluate_embedded_cost(&p, &bang).unwrap().aux, 0.0);
    }

    #[test]
    fn embedded_endpoint_equals_schedule_cost() {
        let p = crate::benchmark::mass_spring_damper(&Default::default()).unwrap();
        let grid = Grid::uniform(0.0, 10.0, 101).unwrap();
        let zero = EmbeddedControl::constant(&p, grid.clone(), 0.0).unwrap();
        let emb = evaluate_embedded_cost(&p, &zero).unwrap();
        let sched = evaluate_cost(
            &p,
            &Schedule::constant(0.0, 10.0, Mode::Zero),
            &ModeControls::from_embedded(&zero),
            &grid,
        )
        .unwrap();
        assert!((emb.total - sched).abs() <= 1e-12 * sched.abs());
    }
}
