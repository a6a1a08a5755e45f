use crate::error::{Error, Result};
use crate::model::{Matrix, Mode, Schedule, SwitchedProblem, Vector};

use super::{embedded_rhs_unchecked, ControlInput, EmbeddedControl, Grid, ModeControls, Trajectory};

fn rk4_step<F>(rhs: F, t: f64, x: &Vector, h: f64) -> Vector
where
    F: Fn(f64, &Vector) -> Vector,
{
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = rhs(t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = rhs(t + h, &(x + &k3 * h));
    x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

fn check_finite(x: &Vector, node: usize, t: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::IntegrationDiverged { node, t })
    }
}

pub(crate) fn check_schedule_horizon(problem: &SwitchedProblem, schedule: &Schedule) -> Result<()> {
    if schedule.t0() != problem.t0() || schedule.tf() != problem.tf() {
        return Err(Error::Structure(format!(
            "schedule horizon [{}, {}] differs from problem horizon [{}, {}]",
            schedule.t0(),
            schedule.tf(),
            problem.t0(),
            problem.tf()
        )));
    }
    Ok(())
}

/// Fixed-step classical RK4 from `x(t0) = x0`.
///
/// For a schedule the grid is first refined so every switch time is a node,
/// and each interval is integrated with its own mode. Embedded controls are
/// linearly interpolated between their nodes.
pub fn integrate_state(
    problem: &SwitchedProblem,
    input: ControlInput<'_>,
    grid: &Grid,
) -> Result<Trajectory> {
    if grid.t0() != problem.t0() || grid.tf() != problem.tf() {
        return Err(Error::InvalidGrid(format!(
            "grid spans [{}, {}], problem spans [{}, {}]",
            grid.t0(),
            grid.tf(),
            problem.t0(),
            problem.tf()
        )));
    }
    let grid = match input {
        ControlInput::Schedule { schedule, .. } => {
            check_schedule_horizon(problem, schedule)?;
            grid.refined(schedule.switch_times())
        }
        ControlInput::Embedded(_) => grid.clone(),
    };

    let nodes = grid.nodes();
    let mut states = Vec::with_capacity(nodes.len());
    states.push(problem.x0().clone());
    for k in 0..grid.intervals() {
        let (t, h) = (nodes[k], grid.step(k));
        let x = &states[k];
        let next = match input {
            ControlInput::Schedule { schedule, controls } => {
                let mode = schedule.mode_at_unchecked(t + 0.5 * h);
                rk4_step(
                    |s, y| problem.dynamics(mode, s, y, &controls.at(mode, s)),
                    t,
                    x,
                    h,
                )
            }
            ControlInput::Embedded(control) => rk4_step(
                |s, y| {
                    let (u0, u1, v) = control.at(s);
                    embedded_rhs_unchecked(problem, s, y, &u0, &u1, v)
                },
                t,
                x,
                h,
            ),
        };
        check_finite(&next, k + 1, nodes[k + 1])?;
        states.push(next);
    }
    Ok(Trajectory {
        grid,
        states,
        costates: None,
        cumulative_cost: None,
    })
}

/// Backward RK4 for `ṗ = −(∂F_R/∂x)ᵀ p − (∂L_R/∂x)ᵀ` along a schedule.
///
/// The terminal value is `∂K/∂x_f`, i.e. `p(tf) = 0` whenever the terminal
/// cost does not depend on the final state. Between nodes the state is
/// reconstructed by cubic Hermite interpolation, which keeps the scheme
/// fourth order.
pub fn integrate_costate(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    state: &Trajectory,
) -> Result<Trajectory> {
    check_schedule_horizon(problem, schedule)?;
    let grid = &state.grid;
    if let Some(&tau) = schedule.switch_times().iter().find(|&&t| !grid.has_node(t)) {
        return Err(Error::InvalidGrid(format!(
            "switch time {tau} is not a node of the state grid"
        )));
    }
    backward_costate(problem, state, |t, mid| {
        let mode = schedule.mode_at_unchecked(mid);
        let m = problem.mode(mode);
        let u = controls.at(mode, t);
        let (ua, ub) = (u.clone(), u.clone());
        LocalModel {
            dynamics: Box::new(move |t, x| m.dynamics(t, x, &u)),
            jacobian: Box::new(move |t, x| m.dynamics_jacobian_x(t, x, &ua)),
            cost_gradient: Box::new(move |t, x| m.running_cost_grad_x(t, x, &ub)),
        }
    })
}

/// Backward RK4 for the costate along an embedded control,
/// `F = (1 − v) f₀ + v f₁` and `L = (1 − v) l₀ + v l₁`.
pub fn integrate_embedded_costate(
    problem: &SwitchedProblem,
    control: &EmbeddedControl,
    state: &Trajectory,
) -> Result<Trajectory> {
    if state.grid != *control.grid() {
        return Err(Error::InvalidGrid("state and control grids differ".into()));
    }
    backward_costate(problem, state, |t, _| {
        let (u0, u1, v) = control.at(t);
        let modes = [problem.mode(Mode::Zero), problem.mode(Mode::One)];
        let share = [1.0 - v, v];
        let u = [u0, u1];
        let (ua, ub) = (u.clone(), u.clone());
        LocalModel {
            dynamics: Box::new(move |t, x| embedded_rhs_unchecked(problem, t, x, &u[0], &u[1], v)),
            jacobian: Box::new(move |t, x| {
                let mut j = Matrix::zeros(x.len(), x.len());
                for i in 0..2 {
                    if share[i] != 0.0 {
                        j += modes[i].dynamics_jacobian_x(t, x, &ua[i]) * share[i];
                    }
                }
                j
            }),
            cost_gradient: Box::new(move |t, x| {
                let mut g = Vector::zeros(x.len());
                for i in 0..2 {
                    if share[i] != 0.0 {
                        g += modes[i].running_cost_grad_x(t, x, &ub[i]) * share[i];
                    }
                }
                g
            }),
        }
    })
}

type StateFn<'a, T> = Box<dyn Fn(f64, &Vector) -> T + 'a>;

/// Dynamics, state Jacobian and running-cost gradient at one time point.
struct LocalModel<'a> {
    dynamics: StateFn<'a, Vector>,
    jacobian: StateFn<'a, Matrix>,
    cost_gradient: StateFn<'a, Vector>,
}

/// Shared backward sweep. `local(t, mid)` gives the model at time `t` on
/// the interval with midpoint `mid`.
fn backward_costate<'a, M>(problem: &SwitchedProblem, state: &Trajectory, local: M) -> Result<Trajectory>
where
    M: Fn(f64, f64) -> LocalModel<'a>,
{
    let grid = &state.grid;
    let nodes = grid.nodes();
    let xs = &state.states;
    let last = nodes.len() - 1;

    let mut costates = vec![Vector::zeros(problem.state_dim()); nodes.len()];
    costates[last] = problem.terminal_gradient(&xs[last]);

    for k in (0..last).rev() {
        let (t0, t1) = (nodes[k], nodes[k + 1]);
        let h = t1 - t0;
        let tm = t0 + 0.5 * h;
        let (m0, mm, m1) = (local(t0, tm), local(tm, tm), local(t1, tm));

        let f0 = (m0.dynamics)(t0, &xs[k]);
        let f1 = (m1.dynamics)(t1, &xs[k + 1]);
        let xm = (&xs[k] + &xs[k + 1]) * 0.5 + (f0 - f1) * (h / 8.0);

        let slope = |m: &LocalModel, t: f64, x: &Vector| {
            let a = (m.jacobian)(t, x);
            let gl = (m.cost_gradient)(t, x);
            move |p: &Vector| -(a.tr_mul(p)) - &gl
        };
        let g1 = slope(&m1, t1, &xs[k + 1]);
        let gm = slope(&mm, tm, &xm);
        let g0 = slope(&m0, t0, &xs[k]);

        let p = &costates[k + 1];
        let k1 = g1(p);
        let k2 = gm(&(p - &k1 * (0.5 * h)));
        let k3 = gm(&(p - &k2 * (0.5 * h)));
        let k4 = g0(&(p - &k3 * h));
        let next = p - (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        check_finite(&next, k, t0)?;
        costates[k] = next;
    }

    Ok(Trajectory {
        grid: grid.clone(),
        states: xs.clone(),
        costates: Some(costates),
        cumulative_cost: state.cumulative_cost.clone(),
    })
}

/// State and costate along `schedule` on `grid` (refined at the switches).
pub fn schedule_trajectories(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    grid: &Grid,
) -> Result<Trajectory> {
    let state = integrate_state(problem, ControlInput::Schedule { schedule, controls }, grid)?;
    integrate_costate(problem, schedule, controls, &state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LtiMode, Matrix, Mode};
    use crate::sim::EmbeddedControl;
    use std::sync::Arc;

    fn zero_dynamics(cost: f64) -> SwitchedProblem {
        let m = LtiMode::new(Matrix::zeros(2, 2), Matrix::zeros(2, 0)).with_constant_cost(cost);
        SwitchedProblem::new(
            0.0,
            10.0,
            Vector::from_vec(vec![1.0, -2.0]),
            Arc::new(m.clone()),
            Arc::new(m),
        )
        .unwrap()
    }

    #[test]
    fn zero_dynamics_keep_initial_state() {
        let p = zero_dynamics(0.0);
        let s = Schedule::new(0.0, 10.0, vec![Mode::Zero, Mode::One], vec![3.3]).unwrap();
        let c = ModeControls::midpoint(&p);
        let grid = Grid::uniform(0.0, 10.0, 11).unwrap();
        let tr = integrate_state(&p, ControlInput::Schedule { schedule: &s, controls: &c }, &grid).unwrap();
        assert_eq!(tr.grid.len(), 12);
        assert!(tr.states.iter().all(|x| x == p.x0()));
    }

    #[test]
    fn zero_source_gives_zero_costate() {
        let p = crate::benchmark::mass_spring_damper(&crate::benchmark::BenchmarkParams {
            cost_coeff: 0.0,
            ..Default::default()
        })
        .unwrap();
        let s = Schedule::new(0.0, 10.0, vec![Mode::Zero, Mode::One], vec![4.0]).unwrap();
        let c = ModeControls::midpoint(&p);
        let grid = Grid::uniform(0.0, 10.0, 101).unwrap();
        let tr = schedule_trajectories(&p, &s, &c, &grid).unwrap();
        let costates = tr.costates.unwrap();
        assert!(costates.iter().all(|q| q.amax() == 0.0));
    }

    #[test]
    fn embedded_endpoint_matches_constant_schedule() {
        let p = crate::benchmark::mass_spring_damper(&Default::default()).unwrap();
        let grid = Grid::uniform(0.0, 10.0, 201).unwrap();
        let emb = EmbeddedControl::constant(&p, grid.clone(), 1.0).unwrap();
        let s = Schedule::constant(0.0, 10.0, Mode::One);
        let c = ModeControls::midpoint(&p);
        let a = integrate_state(&p, ControlInput::Embedded(&emb), &grid).unwrap();
        let b = integrate_state(&p, ControlInput::Schedule { schedule: &s, controls: &c }, &grid).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn divergence_is_reported_with_node() {
        let m = LtiMode::new(Matrix::from_element(1, 1, 1.0e9), Matrix::zeros(1, 0));
        let p = SwitchedProblem::new(0.0, 10.0, Vector::from_element(1, 1.0), Arc::new(m.clone()), Arc::new(m)).unwrap();
        let grid = Grid::uniform(0.0, 10.0, 11).unwrap();
        let s = Schedule::constant(0.0, 10.0, Mode::Zero);
        let c = ModeControls::midpoint(&p);
        let err = integrate_state(&p, ControlInput::Schedule { schedule: &s, controls: &c }, &grid).unwrap_err();
        assert!(matches!(err, Error::IntegrationDiverged { node, .. } if node > 0));
    }

    #[test]
    fn costate_requires_switches_on_grid() {
        let p = zero_dynamics(1.0);
        let s = Schedule::new(0.0, 10.0, vec![Mode::Zero, Mode::One], vec![3.3]).unwrap();
        let c = ModeControls::midpoint(&p);
        let coarse = Grid::uniform(0.0, 10.0, 11).unwrap();
        let tr = integrate_state(&p, ControlInput::Embedded(&EmbeddedControl::constant(&p, coarse.clone(), 0.0).unwrap()), &coarse).unwrap();
        assert!(integrate_costate(&p, &s, &c, &tr).is_err());
    }
}
