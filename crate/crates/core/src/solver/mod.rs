//! Direct transcription of the modified embedded problem and its solution
//! by projected-gradient iterations.

mod extract;
mod pgd;
mod transcription;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Schedule, SwitchedProblem, Vector};
use crate::sim::{schedule_trajectories, EmbeddedControl, Grid, ModeControls, Trajectory};

pub use extract::extract_schedule;
pub use transcription::Transcription;

use pgd::{PgSettings, projected_gradient_norm};

/// How the collocation equations are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// States are eliminated by solving the collocation equations for every
    /// control iterate; gradients come from the discrete adjoint.
    #[default]
    Reduced,
    /// States stay decision variables; defects are driven to zero by
    /// augmented Lagrangian rounds.
    Penalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub method: Method,
    pub grid_nodes: usize,
    /// Inner iterations per penalty round.
    pub max_iterations: usize,
    /// Tolerance on the projected-gradient norm of the Lagrangian.
    pub kkt_tol: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub v_init: f64,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    pub outer_rounds: usize,
    /// First-order multiplier update between rounds (augmented Lagrangian).
    pub multiplier_updates: bool,
    /// After the gradient phase, flip bang-bang nodes whose switching
    /// function favours the other mode while this lowers the cost.
    pub polish: bool,
    /// Upper bound on accepted flip rounds.
    pub polish_rounds: usize,
    /// Fractions of `b_aux` solved in turn, each warm-starting the next,
    /// before the problem itself.
    pub aux_continuation: Vec<f64>,
    /// Rounding threshold used to extract the schedule.
    pub switch_threshold: f64,
    /// Record the objective after every accepted step.
    pub keep_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Reduced,
            grid_nodes: 501,
            max_iterations: 2000,
            kkt_tol: 1e-6,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            v_init: 0.5,
            penalty_initial: 10.0,
            penalty_growth: 10.0,
            outer_rounds: 5,
            multiplier_updates: true,
            aux_continuation: vec![0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3],
            polish: true,
            polish_rounds: 500,
            switch_threshold: 0.5,
            keep_trace: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidProblem(format!("solve options: {msg}")));
        if self.grid_nodes < 2 {
            return bad("grid_nodes must be at least 2");
        }
        if !(self.kkt_tol > 0.0) {
            return bad("kkt_tol must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.v_init) {
            return bad("v_init must lie in [0, 1]");
        }
        if !(self.penalty_initial > 0.0 && self.penalty_growth >= 1.0) {
            return bad("penalty weights must be positive and non-decreasing");
        }
        if self.outer_rounds == 0 {
            return bad("outer_rounds must be at least 1");
        }
        if self.aux_continuation.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("aux_continuation fractions must lie in [0, 1]");
        }
        if !(self.switch_threshold > 0.0 && self.switch_threshold < 1.0) {
            return bad("switch_threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundSummary {
    pub penalty: f64,
    pub iterations: usize,
    pub pg_norm: f64,
    pub max_defect: f64,
}

/// Result of a modified-embedded solve.
#[derive(Debug, Clone)]
pub struct EmbeddedSolution {
    pub control: EmbeddedControl,
    /// Collocation states on the solver grid.
    pub state: Trajectory,
    /// State and costate along the extracted schedule.
    pub costate: Trajectory,
    pub schedule: Schedule,
    /// Trapezoidal `∫ (L + L_v) dt + K` at the returned point.
    pub objective: f64,
    pub aux_integral: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Largest defect divided by its interval length.
    pub max_defect: f64,
    pub rounds: Vec<RoundSummary>,
    /// Penalized objective after every accepted step, per round.
    pub trace: Vec<Vec<f64>>,
}

impl EmbeddedSolution {
    pub fn mode_controls(&self) -> ModeControls {
        ModeControls::from_embedded(&self.control)
    }
}

/// Solves the modified embedded problem on a uniform grid.
///
/// Both methods minimize by projected gradient with Barzilai–Borwein trial
/// steps and Armijo backtracking. In either case the returned states solve
/// the collocation equations for the returned controls to Newton precision.
pub fn solve_meocp(problem: &SwitchedProblem, options: &SolveOptions) -> Result<EmbeddedSolution> {
    options.validate()?;
    let grid = Grid::uniform(problem.t0(), problem.tf(), options.grid_nodes)?;
    let tr = Transcription::new(problem, grid.clone())?;
    let settings = PgSettings {
        max_iterations: options.max_iterations,
        tolerance: options.kkt_tol,
        armijo_c: options.armijo_c,
        shrink: options.armijo_shrink,
        max_backtracks: 60,
    };

    let mut z = tr.initial_guess(options.v_init)?;
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    for &fraction in &options.aux_continuation {
        let staged = problem.clone().with_aux_coeff(fraction * problem.aux_coeff())?;
        let staged_tr = Transcription::new(&staged, grid.clone())?;
        iterations += run_method(&staged_tr, &mut z, &settings, options, &mut rounds, &mut trace)?.0;
    }
    let (final_iterations, mut kkt_residual) =
        run_method(&tr, &mut z, &settings, options, &mut rounds, &mut trace)?;
    iterations += final_iterations;
    if options.polish && problem.aux_coeff() > 0.0 {
        let flips = polish_bang_bang(&tr, &mut z, options)?;
        debug!("bang-bang polish: {flips} flip rounds");
        if flips > 0 {
            let (more, kkt) = run_method(&tr, &mut z, &settings, options, &mut rounds, &mut trace)?;
            iterations += more;
            kkt_residual = kkt;
        }
    }
    let objective = tr.objective(&z);
    if !objective.is_finite() {
        return Err(Error::SolverDiverged("non-finite objective".into()));
    }

    let control = tr.control(&z)?;
    let schedule = extract_schedule(&control, options.switch_threshold)?;
    let controls = ModeControls::from_embedded(&control);
    let costate = schedule_trajectories(problem, &schedule, &controls, &grid)?;

    Ok(EmbeddedSolution {
        state: Trajectory {
            grid,
            states: tr.states(&z),
            costates: None,
            cumulative_cost: None,
        },
        aux_integral: tr.aux_integral(&z),
        max_defect: tr.max_scaled_defect(&z),
        control,
        costate,
        schedule,
        objective,
        iterations,
        converged: kkt_residual <= options.kkt_tol,
        kkt_residual,
        rounds,
        trace,
    })
}

/// Greedy pointwise minimization of the Hamiltonian over `v ∈ {0, 1}`.
///
/// Only nodes already at `0` or `1` are touched, where the auxiliary cost
/// vanishes on both sides of a flip. The nodes whose switching function
/// favours the other mode are flipped, most promising first; the number of
/// flips is halved until the true objective decreases. Returns the number
/// of accepted rounds.
fn polish_bang_bang(tr: &Transcription, z: &mut Vec<f64>, options: &SolveOptions) -> Result<usize> {
    tr.restore_states(z)?;
    let (mut value, mut grad, _) = tr.reduced(z);
    let mut trial = z.clone();
    let mut accepted_rounds = 0;
    for _ in 0..options.polish_rounds {
        let phi = tr.switching_function(z, &grad);
        let mut candidates: Vec<(f64, usize)> = phi
            .iter()
            .enumerate()
            .filter_map(|(k, &p)| {
                let v = z[tr.v_index(k)];
                let gain = if v == 0.0 && p < 0.0 {
                    -p
                } else if v == 1.0 && p > 0.0 {
                    p
                } else {
                    return None;
                };
                Some((gain * tr.weight(k), k))
            })
            .collect();
        if candidates.is_empty() {
            break;
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut count = candidates.len();
        let mut accepted = false;
        while count > 0 {
            trial.copy_from_slice(z);
            let mut predicted = 0.0;
            for &(gain, k) in &candidates[..count] {
                let vi = tr.v_index(k);
                trial[vi] = 1.0 - trial[vi];
                predicted += gain;
            }
            if tr.restore_states(&mut trial).is_ok() {
                let candidate = tr.objective(&trial);
                if candidate < value - options.armijo_c * predicted {
                    std::mem::swap(z, &mut trial);
                    accepted = true;
                    break;
                }
            }
            count /= 2;
        }
        if !accepted {
            break;
        }
        accepted_rounds += 1;
        (value, grad, _) = tr.reduced(z);
    }
    Ok(accepted_rounds)
}

fn run_method(
    tr: &Transcription,
    z: &mut Vec<f64>,
    settings: &PgSettings,
    options: &SolveOptions,
    rounds: &mut Vec<RoundSummary>,
    trace: &mut Vec<Vec<f64>>,
) -> Result<(usize, f64)> {
    match options.method {
        Method::Reduced => solve_reduced(tr, z, settings, options, rounds, trace),
        Method::Penalty => solve_penalty(tr, z, settings, options, rounds, trace),
    }
}

fn solve_reduced(
    tr: &Transcription,
    z: &mut Vec<f64>,
    settings: &PgSettings,
    options: &SolveOptions,
    rounds: &mut Vec<RoundSummary>,
    trace: &mut Vec<Vec<f64>>,
) -> Result<(usize, f64)> {
    let (lo, hi) = tr.control_bounds();
    let mut work = z.clone();
    let eval = |w: &[f64]| match tr.expand_into(w, &mut work) {
        Ok(()) => {
            let (value, grad, _) = tr.reduced(&work);
            (value, tr.compress(&grad))
        }
        Err(_) => (f64::INFINITY, vec![0.0; w.len()]),
    };
    let outcome = pgd::minimize(eval, tr.compress(z), &lo, &hi, settings, options.keep_trace)?;
    tr.expand_into(&outcome.z, z)?;
    debug!(
        "reduced solve: {} iterations, pg {:.2e}, value {:.6}, converged {}",
        outcome.iterations, outcome.pg_norm, outcome.value, outcome.converged
    );
    rounds.push(RoundSummary {
        penalty: 0.0,
        iterations: outcome.iterations,
        pg_norm: outcome.pg_norm,
        max_defect: tr.max_scaled_defect(z),
    });
    if options.keep_trace {
        trace.push(outcome.trace);
    }
    Ok((outcome.iterations, outcome.pg_norm))
}

fn solve_penalty(
    tr: &Transcription,
    z: &mut Vec<f64>,
    settings: &PgSettings,
    options: &SolveOptions,
    rounds: &mut Vec<RoundSummary>,
    trace: &mut Vec<Vec<f64>>,
) -> Result<(usize, f64)> {
    let (lo, hi) = tr.bounds();
    let mut multipliers = vec![0.0; tr.defect_count()];
    let mut weight = options.penalty_initial;
    let mut iterations = 0;

    for round in 0..options.outer_rounds {
        let lam = multipliers.clone();
        let outcome = pgd::minimize(
            |zz| tr.augmented(zz, weight, Some(&lam)),
            std::mem::take(z),
            &lo,
            &hi,
            settings,
            options.keep_trace,
        )?;
        *z = outcome.z;
        iterations += outcome.iterations;
        let defects = tr.defects(z);
        let max_defect = tr.max_scaled_defect(z);
        debug!(
            "round {round}: penalty {weight:.1e}, {} iterations, pg {:.2e}, defect {:.2e}, value {:.6}",
            outcome.iterations, outcome.pg_norm, max_defect, outcome.value
        );
        rounds.push(RoundSummary {
            penalty: weight,
            iterations: outcome.iterations,
            pg_norm: outcome.pg_norm,
            max_defect,
        });
        if options.keep_trace {
            trace.push(outcome.trace);
        }
        // The estimate λ + ρ d is always formed after the last round, for
        // the stationarity measure below.
        if options.multiplier_updates || round + 1 == options.outer_rounds {
            for (l, d) in multipliers.iter_mut().zip(&defects) {
                *l += weight * d;
            }
        }
        weight *= options.penalty_growth;
    }

    tr.restore_states(z)?;
    let (_, lagrangian_grad) = tr.augmented(z, 0.0, Some(&multipliers));
    Ok((iterations, projected_gradient_norm(z, &lagrangian_grad, &lo, &hi)))
}

/// Re-solves the problem on `[t_start, tf]` from `x_start`, keeping the
/// original grid density.
pub fn resolve_tail(
    problem: &SwitchedProblem,
    t_start: f64,
    x_start: Vector,
    options: &SolveOptions,
) -> Result<EmbeddedSolution> {
    let tail = problem.restricted(t_start, x_start)?;
    let intervals = (options.grid_nodes.max(2) - 1) as f64;
    let fraction = tail.horizon() / problem.horizon();
    let nodes = ((intervals * fraction).round() as usize).max(1) + 1;
    let tail_options = SolveOptions {
        grid_nodes: nodes,
        ..options.clone()
    };
    solve_meocp(&tail, &tail_options)
}
