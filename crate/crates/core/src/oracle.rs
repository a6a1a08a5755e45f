//! Brute-force references for the first-order machinery.

use crate::error::{Error, Result};
use crate::filter::apply_replacement;
use crate::model::{Mode, Schedule, SwitchedProblem};
use crate::sim::{evaluate_cost, Grid, ModeControls};

/// Largest candidate set accepted by [`enumerate_schedules`].
pub const MAX_CANDIDATES: usize = 8;
/// Largest switch count accepted by [`enumerate_schedules`].
pub const MAX_SWITCHES: usize = 4;

/// One-sided difference `(J(λ) − J(0)) / λ` for inserting `alpha` on
/// `[s, s + λ)`.
///
/// Both costs are evaluated on `grid` doubled and refined at `s` and
/// `s + λ`.
pub fn fd_insertion_gradient(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    grid: &Grid,
    s: f64,
    alpha: Mode,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) || !(s >= problem.t0() && s + lambda <= problem.tf()) {
        return Err(Error::Domain {
            what: "insertion window",
            value: s + lambda,
            lo: problem.t0(),
            hi: problem.tf(),
        });
    }
    let fine = grid.doubled().refined(&[s, s + lambda]);
    let inserted = schedule.overwrite(s, s + lambda, alpha)?;
    let base = evaluate_cost(problem, schedule, controls, &fine)?;
    let perturbed = evaluate_cost(problem, &inserted, controls, &fine)?;
    Ok((perturbed - base) / lambda)
}

/// Simulates both replacements of violation `j` and returns the cheaper
/// mode with both total costs. Ties keep the mode active at `τ_j`.
pub fn exhaustive_mode_choice(
    problem: &SwitchedProblem,
    schedule: &Schedule,
    controls: &ModeControls,
    grid: &Grid,
    j: usize,
    dwell: f64,
) -> Result<(Mode, [f64; 2])> {
    let fine = grid.doubled();
    let mut costs = [0.0; 2];
    for mode in Mode::ALL {
        let replaced = apply_replacement(schedule, j, dwell, mode)?;
        costs[mode.index()] = evaluate_cost(problem, &replaced, controls, &fine)?;
    }
    let mode = if costs[0] < costs[1] {
        Mode::Zero
    } else if costs[1] < costs[0] {
        Mode::One
    } else {
        schedule.mode_at(schedule.switch_times()[j])?
    };
    Ok((mode, costs))
}

/// Cheapest schedule with switches drawn from `candidates`, at most
/// `max_switches` switches and every gap at least `dwell`.
///
/// Candidates are visited by switch count, then lexicographically by
/// switch times, then by initial mode; the first schedule with the lowest
/// cost wins.
pub fn enumerate_schedules(
    problem: &SwitchedProblem,
    controls: &ModeControls,
    grid: &Grid,
    candidates: &[f64],
    max_switches: usize,
    dwell: f64,
) -> Result<(Schedule, f64)> {
    if candidates.len() > MAX_CANDIDATES || max_switches > MAX_SWITCHES {
        return Err(Error::BudgetExceeded(format!(
            "{} candidates and {max_switches} switches exceed the limits of {MAX_CANDIDATES} and {MAX_SWITCHES}",
            candidates.len()
        )));
    }
    let (t0, tf) = (problem.t0(), problem.tf());
    if candidates.windows(2).any(|w| w[1] <= w[0]) || candidates.iter().any(|&t| !(t > t0 && t < tf)) {
        return Err(Error::InvalidProblem(
            "candidate times must be strictly increasing and inside the horizon".into(),
        ));
    }
    let fine = grid.doubled();
    let mut best: Option<(Schedule, f64)> = None;
    for count in 0..=max_switches.min(candidates.len()) {
        for subset in combinations(candidates.len(), count) {
            let times: Vec<f64> = subset.iter().map(|&i| candidates[i]).collect();
            if times.windows(2).any(|w| w[1] - w[0] < dwell) {
                continue;
            }
            for first in Mode::ALL {
                let modes: Vec<Mode> = (0..=count)
                    .map(|i| if i % 2 == 0 { first } else { first.other() })
                    .collect();
                let schedule = Schedule::new(t0, tf, modes, times.clone())?;
                let cost = evaluate_cost(problem, &schedule, controls, &fine)?;
                if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                    best = Some((schedule, cost));
                }
            }
        }
    }
    Ok(best.expect("the constant schedules are always admissible"))
}

/// `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(current.clone());
        let Some(i) = (0..k).rev().find(|&i| current[i] < n - k + i) else {
            return out;
        };
        current[i] += 1;
        for l in i + 1..k {
            current[l] = current[l - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LtiMode, Matrix, TerminalCost, Vector};
    use std::sync::Arc;
    use Mode::{One, Zero};

    fn constant_costs(l0: f64, l1: f64) -> SwitchedProblem {
        let m0 = LtiMode::new(Matrix::zeros(1, 1), Matrix::zeros(1, 0)).with_constant_cost(l0);
        let m1 = LtiMode::new(Matrix::zeros(1, 1), Matrix::zeros(1, 0)).with_constant_cost(l1);
        SwitchedProblem::new(0.0, 10.0, Vector::zeros(1), Arc::new(m0), Arc::new(m1)).unwrap()
    }

    #[test]
    fn combinations_are_lexicographic() {
        assert_eq!(combinations(4, 2), vec![
            vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]
        ]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(8, 4).len(), 70);
    }

    #[test]
    fn dominated_mode_is_chosen() {
        let p = constant_costs(0.0, 1.0);
        let c = ModeControls::midpoint(&p);
        let grid = Grid::uniform(0.0, 10.0, 101).unwrap();
        let s = Schedule::new(0.0, 10.0, vec![One, Zero, One], vec![3.0, 3.1]).unwrap();
        assert_eq!(exhaustive_mode_choice(&p, &s, &c, &grid, 0, 0.5).unwrap().0, Zero);
    }

    #[test]
    fn symmetric_costs_tie_to_the_mode_at_the_switch() {
        let p = constant_costs(1.0, 1.0);
        let c = ModeControls::midpoint(&p);
        let grid = Grid::uniform(0.0, 10.0, 101).unwrap();
        let s = Schedule::new(0.0, 10.0, vec![Zero, One, Zero], vec![3.0, 3.1]).unwrap();
        assert_eq!(exhaustive_mode_choice(&p, &s, &c, &grid, 0, 0.5).unwrap().0, One);
    }

    #[test]
    fn enumeration_order_and_budget() {
        let p = constant_costs(0.0, 0.0).with_terminal_cost(TerminalCost::Constant(3.0));
        let c = ModeControls::midpoint(&p);
        let grid = Grid::uniform(0.0, 10.0, 51).unwrap();
        let (best, cost) = enumerate_schedules(&p, &c, &grid, &[2.0, 4.0, 6.0], 2, 0.0).unwrap();
        assert_eq!(cost, 3.0);
        assert_eq!(best, Schedule::constant(0.0, 10.0, Zero));

        let p = constant_costs(2.0, 1.0);
        let (best, cost) = enumerate_schedules(&p, &c, &grid, &[2.0], 0, 0.0).unwrap();
        assert_eq!(best, Schedule::constant(0.0, 10.0, One));
        assert!((cost - 10.0).abs() < 1e-12);

        let many: Vec<f64> = (1..=9).map(f64::from).collect();
        assert!(matches!(
            enumerate_schedules(&p, &c, &grid, &many, 2, 0.0),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(enumerate_schedules(&p, &c, &grid, &[1.0], 5, 0.0).is_err());
    }

    #[test]
    fn inserting_the_active_mode_changes_nothing() {
        let p = constant_costs(1.0, 3.0);
        let c = ModeControls::midpoint(&p);
        let grid = Grid::uniform(0.0, 10.0, 101).unwrap();
        let s = Schedule::new(0.0, 10.0, vec![Zero, One], vec![5.0]).unwrap();
        assert_eq!(fd_insertion_gradient(&p, &s, &c, &grid, 2.0, Zero, 1e-3).unwrap(), 0.0);
        let d = fd_insertion_gradient(&p, &s, &c, &grid, 2.0, One, 1e-3).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }
}
