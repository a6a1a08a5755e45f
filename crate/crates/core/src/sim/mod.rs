//! Forward/backward integration, cost evaluation and Hamiltonian
//! diagnostics.

mod conditions;
mod controls;
mod cost;
mod grid;
mod integrate;

use crate::error::{check_range, Result};
use crate::model::{Mode, Schedule, SwitchedProblem, Vector};

pub use conditions::{check_necessary_conditions, ConditionReport, ConditionTolerances};
pub use controls::{EmbeddedControl, ModeControls};
pub use cost::{
    evaluate_cost, evaluate_embedded_cost, schedule_cost_profile, CostProfile,
    EmbeddedCost,
};
pub use grid::Grid;
pub use integrate::{
    integrate_costate, integrate_embedded_costate, integrate_state, schedule_trajectories,
};

pub(crate) use controls::lerp;

/// What drives the dynamics during a forward integration.
#[derive(Debug, Clone, Copy)]
pub enum ControlInput<'a> {
    Schedule {
        schedule: &'a Schedule,
        controls: &'a ModeControls,
    },
    Embedded(&'a EmbeddedControl),
}

/// Time samples of the state and, optionally, the costate and cumulative
/// running cost.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub states: Vec<Vector>,
    pub costates: Option<Vec<Vector>>,
    pub cumulative_cost: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &Vector {
        self.states.last().expect("trajectory has samples")
    }

    /// Linear interpolation of the state.
    pub fn state_at(&self, t: f64) -> Vector {
        let (k, w) = self.grid.bracket(t);
        lerp(&self.states[k], &self.states[k + 1], w)
    }

    /// Linear interpolation of the costate, if present.
    pub fn costate_at(&self, t: f64) -> Option<Vector> {
        let p = self.costates.as_ref()?;
        let (k, w) = self.grid.bracket(t);
        Some(lerp(&p[k], &p[k + 1], w))
    }
}

/// `f(t, x, U) = (1 − v) f₀(t, x, u₀) + v f₁(t, x, u₁)`.
///
/// At `v = 0` and `v = 1` the single mode is evaluated directly, so the
/// result is bitwise that mode's dynamics.
pub fn embedded_rhs(
    problem: &SwitchedProblem,
    t: f64,
    x: &Vector,
    u0: &Vector,
    u1: &Vector,
    v: f64,
) -> Result<Vector> {
    check_range("v", v, 0.0, 1.0)?;
    Ok(embedded_rhs_unchecked(problem, t, x, u0, u1, v))
}

pub(crate) fn embedded_rhs_unchecked(
    problem: &SwitchedProblem,
    t: f64,
    x: &Vector,
    u0: &Vector,
    u1: &Vector,
    v: f64,
) -> Vector {
    if v == 0.0 {
        problem.dynamics(Mode::Zero, t, x, u0)
    } else if v == 1.0 {
        problem.dynamics(Mode::One, t, x, u1)
    } else {
        problem.dynamics(Mode::Zero, t, x, u0) * (1.0 - v) + problem.dynamics(Mode::One, t, x, u1) * v
    }
}

/// `L(t, x, U) = (1 − v) l₀(t, x, u₀) + v l₁(t, x, u₁)`.
pub fn embedded_running_cost(
    problem: &SwitchedProblem,
    t: f64,
    x: &Vector,
    u0: &Vector,
    u1: &Vector,
    v: f64,
) -> Result<f64> {
    check_range("v", v, 0.0, 1.0)?;
    Ok(embedded_running_cost_unchecked(problem, t, x, u0, u1, v))
}

pub(crate) fn embedded_running_cost_unchecked(
    problem: &SwitchedProblem,
    t: f64,
    x: &Vector,
    u0: &Vector,
    u1: &Vector,
    v: f64,
) -> f64 {
    if v == 0.0 {
        problem.running_cost(Mode::Zero, t, x, u0)
    } else if v == 1.0 {
        problem.running_cost(Mode::One, t, x, u1)
    } else {
        (1.0 - v) * problem.running_cost(Mode::Zero, t, x, u0)
            + v * problem.running_cost(Mode::One, t, x, u1)
    }
}

/// Concave auxiliary cost `b·(v − v²)`; zero at both modes, `b/4` at
/// `v = 1/2`.
pub fn aux_cost(b_aux: f64, v: f64) -> f64 {
    b_aux * (v - v * v)
}

pub(crate) fn aux_cost_derivative(b_aux: f64, v: f64) -> f64 {
    b_aux * (1.0 - 2.0 * v)
}

/// `H = ⟨p, f(t, x, U)⟩ + L(t, x, U) + L_v(v)`.
pub fn hamiltonian(
    problem: &SwitchedProblem,
    t: f64,
    x: &Vector,
    p: &Vector,
    u0: &Vector,
    u1: &Vector,
    v: f64,
) -> f64 {
    let f = embedded_rhs_unchecked(problem, t, x, u0, u1, v);
    p.dot(&f)
        + embedded_running_cost_unchecked(problem, t, x, u0, u1, v)
        + aux_cost(problem.aux_coeff(), v)
}
