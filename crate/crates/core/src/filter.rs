//! Dwell-time filter for bang-bang schedules.
//!
//! Starting from the first pair of switches closer than the dwell time
//! `T`, the filter forces a single mode on `[τ_j, τ_j + T)`. The mode is the
//! one with the smaller integrated insertion gradient over that window,
//! evaluated along the current schedule. The scan then resumes at the first
//! switch at or after `τ_j + T`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Mode, Schedule, SwitchedProblem, Vector};
use crate::sim::{evaluate_cost, integrate_state, schedule_trajectories, ControlInput, Grid, ModeControls, Trajectory};
use crate::solver::{resolve_tail, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterOptions {
    /// Sub-intervals of the trapezoidal rule over each dwell window.
    pub n_sub: usize,
    /// Re-solve the embedded problem on `[τ_j + T, tf]` after each
    /// replacement.
    pub resolve_tail: bool,
    /// Nodes of the base simulation grid (refined at switches).
    pub grid_nodes: usize,
    /// Used for tail re-solves only.
    pub solver: SolveOptions,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            n_sub: 20,
            resolve_tail: false,
            grid_nodes: 501,
            solver: SolveOptions::default(),
        }
    }
}

/// One pass of the filter loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterStep {
    /// 0-based index of `τ_j` in the schedule being filtered at this step.
    pub index: usize,
    pub window: (f64, f64),
    /// Switch times strictly inside the window.
    pub removed: Vec<f64>,
    /// Integrated insertion gradient of mode 0 and mode 1.
    pub scores: [f64; 2],
    pub alpha: Mode,
    pub resolved_tail: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FilterReport {
    pub dwell_time: f64,
    pub input_schedule: Schedule,
    pub output_schedule: Schedule,
    pub steps: Vec<FilterStep>,
    pub input_cost: f64,
    pub output_cost: f64,
    pub resolve_used: bool,
    /// Per-mode controls that go with `output_schedule`.
    #[serde(skip)]
    pub output_controls: Option<ModeControls>,
}

/// End of the dwell window starting at `start`, nudged up so that
/// `end − start ≥ dwell` holds in floating point, then clamped to `tf`.
pub fn dwell_window_end(start: f64, dwell: f64, tf: f64) -> f64 {
    let mut end = start + dwell;
    while end - start < dwell {
        end = end.next_up();
    }
    end.min(tf)
}

/// `D = p(s)ᵀ (f_α − f_{v(s)})` along a trajectory with costate.
///
/// Each mode is evaluated with its own control.
pub fn insertion_gradient(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    trajectory: &Trajectory,
    s: f64,
    alpha: Mode,
) -> Result<f64> {
    let active = schedule.mode_at(s)?;
    if active == alpha {
        return Ok(0.0);
    }
    let p = trajectory
        .costate_at(s)
        .ok_or_else(|| Error::Structure("trajectory has no costate".into()))?;
    let x = trajectory.state_at(s);
    let f_alpha = problem.dynamics(alpha, s, &x, &controls.at(alpha, s));
    let f_active = problem.dynamics(active, s, &x, &controls.at(active, s));
    Ok(p.dot(&(f_alpha - f_active)))
}

/// Trapezoidal integral of the insertion gradient of `alpha` over
/// `[start, start + dwell)`, clamped to the horizon.
#[allow(clippy::too_many_arguments)]
pub fn mode_score(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    trajectory: &Trajectory,
    start: f64,
    dwell: f64,
    alpha: Mode,
    n_sub: usize,
) -> Result<f64> {
    if n_sub == 0 {
        return Err(Error::InvalidProblem("n_sub must be at least 1".into()));
    }
    let end = dwell_window_end(start, dwell, problem.tf());
    let h = (end - start) / n_sub as f64;
    let mut total = 0.0;
    for i in 0..=n_sub {
        let s = if i == n_sub { end } else { start + i as f64 * h };
        let w = if i == 0 || i == n_sub { 0.5 } else { 1.0 };
        total += w * insertion_gradient(problem, schedule, controls, trajectory, s, alpha)?;
    }
    Ok(total * h)
}

/// Mode with the smaller score on the window; ties keep the mode active at
/// `start`.
#[allow(clippy::too_many_arguments)]
pub fn select_mode(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    trajectory: &Trajectory,
    start: f64,
    dwell: f64,
    n_sub: usize,
) -> Result<(Mode, [f64; 2])> {
    let mut scores = [0.0; 2];
    for mode in Mode::ALL {
        scores[mode.index()] =
            mode_score(problem, schedule, controls, trajectory, start, dwell, mode, n_sub)?;
    }
    let alpha = if scores[0] < scores[1] {
        Mode::Zero
    } else if scores[1] < scores[0] {
        Mode::One
    } else {
        schedule.mode_at(start)?
    };
    Ok((alpha, scores))
}

/// Forces `alpha` on `[τ_j, τ_j + T)`, dropping the switches inside.
pub fn apply_replacement(schedule: &Schedule, j: usize, dwell: f64, alpha: Mode) -> Result<Schedule> {
    let start = *schedule
        .switch_times()
        .get(j)
        .ok_or_else(|| Error::Structure(format!("no switch with index {j}")))?;
    schedule.overwrite(start, dwell_window_end(start, dwell, schedule.tf()), alpha)
}

fn state_at_node(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    grid: &Grid,
    t: f64,
) -> Result<Vector> {
    let grid = grid.refined(&[t]);
    let traj = integrate_state(problem, ControlInput::Schedule { schedule, controls }, &grid)?;
    Ok(traj.states[traj.grid.locate(t)].clone())
}

/// Removes every dwell-time violation of `schedule` for the dwell time
/// stored in `problem`.
pub fn filter_schedule(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    options: &FilterOptions,
) -> Result<FilterReport> {
    if options.n_sub == 0 {
        return Err(Error::InvalidProblem("n_sub must be at least 1".into()));
    }
    let dwell = problem.dwell_time();
    let tf = problem.tf();
    let grid = Grid::uniform(problem.t0(), tf, options.grid_nodes)?;
    let input_cost = evaluate_cost(problem, schedule, controls, &grid)?;

    let mut sigma = schedule.clone();
    let mut controls = controls.clone();
    let mut steps = Vec::new();
    let mut scan = 0;
    while let Some(violation) = sigma.first_violation(dwell, scan) {
        let j = violation.index;
        let start = sigma.switch_times()[j];
        let end = dwell_window_end(start, dwell, tf);
        let trajectory = schedule_trajectories(problem, &sigma, &controls, &grid)?;
        let (alpha, scores) =
            select_mode(problem, &sigma, &controls, &trajectory, start, dwell, options.n_sub)?;
        let removed = sigma
            .switch_times()
            .iter()
            .copied()
            .filter(|&t| t > start && t < end)
            .collect();
        let mut next = apply_replacement(&sigma, j, dwell, alpha)?;

        let resolved_tail = options.resolve_tail && end < tf;
        if resolved_tail {
            let x_end = state_at_node(problem, &next, &controls, &grid, end)?;
            let tail = resolve_tail(problem, end, x_end, &options.solver)?;
            next = next.splice(end, &tail.schedule)?;
            controls = controls.splice(end, tail.mode_controls());
        }
        log::debug!("dwell window [{start}, {end}): alpha {alpha}, scores {scores:?}");
        steps.push(FilterStep {
            index: j,
            window: (start, end),
            removed,
            scores,
            alpha,
            resolved_tail,
        });
        sigma = next;
        scan = sigma.first_switch_at_or_after(end);
    }

    let output_cost = evaluate_cost(problem, &sigma, &controls, &grid)?;
    Ok(FilterReport {
        dwell_time: dwell,
        input_schedule: schedule.clone(),
        output_schedule: sigma,
        steps,
        input_cost,
        output_cost,
        resolve_used: options.resolve_tail,
        output_controls: Some(controls),
    })
}
