//! solve → extract → filter → report.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use switchopt::filter::filter_schedule;
use switchopt::sim::{schedule_cost_profile, CostProfile};
use switchopt::solver::solve_meocp;
use switchopt::{
    EmbeddedSolution, FilterOptions, FilterReport, Grid, ModeControls, Schedule, SwitchedProblem,
};

use crate::config::RunConfig;
use crate::output::{dwell_label, state_columns, write_csv, write_json};
use crate::{AtStage, Stage, StageResult};

/// Distance from `{0, 1}` below which a node counts as bang-bang.
pub const NEAR_BINARY: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub objective: f64,
    pub aux_integral: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub max_defect: f64,
    /// Fraction of nodes with `v` within 0.05 of 0 or 1.
    pub near_binary_fraction: f64,
    pub schedule: Schedule,
    pub switch_count: usize,
    /// `null` with fewer than two switches.
    pub min_gap: Option<f64>,
    pub final_state: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub dwell_time: f64,
    /// Cost of the rounded, unfiltered schedule.
    pub input_cost: f64,
    pub filtered_cost: f64,
    pub switch_count: usize,
    pub min_gap: Option<f64>,
    pub final_state: Vec<f64>,
    pub schedule: Schedule,
    /// Absent for `T = 0`, where the filter is skipped.
    pub filter: Option<FilterReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub config: RunConfig,
    pub solver: SolveSummary,
    pub stages: Vec<StageSummary>,
}

/// The filtered schedule for one dwell time with its simulated cost.
pub struct FilteredStage {
    pub summary: StageSummary,
    pub controls: ModeControls,
    pub profile: CostProfile,
}

fn finite_gap(schedule: &Schedule) -> Option<f64> {
    Some(schedule.min_gap()).filter(|g| g.is_finite())
}

pub fn near_binary_fraction(solution: &EmbeddedSolution) -> f64 {
    let v = solution.control.v();
    let close = v.iter().filter(|&&x| x.min(1.0 - x) <= NEAR_BINARY).count();
    close as f64 / v.len() as f64
}

pub fn summarize_solution(solution: &EmbeddedSolution) -> SolveSummary {
    SolveSummary {
        objective: solution.objective,
        aux_integral: solution.aux_integral,
        iterations: solution.iterations,
        converged: solution.converged,
        kkt_residual: solution.kkt_residual,
        max_defect: solution.max_defect,
        near_binary_fraction: near_binary_fraction(solution),
        schedule: solution.schedule.clone(),
        switch_count: solution.schedule.switch_count(),
        min_gap: finite_gap(&solution.schedule),
        final_state: solution.state.final_state().iter().copied().collect(),
    }
}

/// Builds the problem and solves the modified embedded problem.
pub fn solve_problem(config: &RunConfig) -> StageResult<(SwitchedProblem, EmbeddedSolution)> {
    let problem = config.build_problem().at(Stage::Config)?;
    let solution = solve_meocp(&problem, &config.solver).at(Stage::Solve)?;
    log::info!(
        "solved: objective {:.6}, {} switches, {} iterations",
        solution.objective,
        solution.schedule.switch_count(),
        solution.iterations
    );
    Ok((problem, solution))
}

/// Filters the solution's schedule with dwell time `dwell`; `0` keeps the
/// rounded schedule as is.
pub fn filter_stage(
    config: &RunConfig,
    problem: &SwitchedProblem,
    solution: &EmbeddedSolution,
    dwell: f64,
) -> StageResult<FilteredStage> {
    let problem = problem.clone().with_dwell_time(dwell).at(Stage::Config)?;
    let controls = solution.mode_controls();
    let grid = Grid::uniform(problem.t0(), problem.tf(), config.grid_nodes()).at(Stage::Config)?;
    let input = schedule_cost_profile(&problem, &solution.schedule, &controls, &grid).at(Stage::Filter)?;

    let (schedule, controls, report) = if dwell > 0.0 {
        let options = FilterOptions {
            n_sub: config.filter.n_sub,
            resolve_tail: config.filter.resolve_tail,
            grid_nodes: config.grid_nodes(),
            solver: config.solver.clone(),
        };
        let mut report = filter_schedule(&problem, &solution.schedule, &controls, &options).at(Stage::Filter)?;
        let filtered_controls = report.output_controls.take().unwrap_or(controls);
        (report.output_schedule.clone(), filtered_controls, Some(report))
    } else {
        (solution.schedule.clone(), controls, None)
    };
    let profile = schedule_cost_profile(&problem, &schedule, &controls, &grid).at(Stage::Filter)?;
    log::info!(
        "T = {dwell}: {} switches, cost {:.6}",
        schedule.switch_count(),
        profile.total
    );
    let summary = StageSummary {
        dwell_time: dwell,
        input_cost: input.total,
        filtered_cost: profile.total,
        switch_count: schedule.switch_count(),
        min_gap: finite_gap(&schedule),
        final_state: profile.trajectory.final_state().iter().copied().collect(),
        schedule,
        filter: report,
    };
    Ok(FilteredStage {
        summary,
        controls,
        profile,
    })
}

fn create_dir(out: &Path) -> StageResult<()> {
    fs::create_dir_all(out).at(Stage::Output)
}

fn write_embedded(out: &Path, solution: &EmbeddedSolution) -> StageResult<()> {
    let nodes = solution.control.grid().nodes();
    let v = solution.control.v();
    write_csv(
        &out.join("v_embedded.csv"),
        &["t".into(), "v".into()],
        nodes.iter().zip(v).map(|(&t, &v)| vec![t, v]),
    )
    .at(Stage::Output)?;
    let states = &solution.state.states;
    let n = states.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string()];
    header.extend(state_columns(n));
    write_csv(
        &out.join("x_embedded.csv"),
        &header,
        nodes.iter().zip(states).map(|(&t, x)| {
            let mut row = vec![t];
            row.extend(x.iter());
            row
        }),
    )
    .at(Stage::Output)
}

fn write_stage(out: &Path, stage: &FilteredStage) -> StageResult<()> {
    let label = dwell_label(stage.summary.dwell_time);
    let traj = &stage.profile.trajectory;
    let nodes = traj.grid.nodes();
    let v = stage.summary.schedule.sample(nodes);
    write_csv(
        &out.join(format!("v_filtered_{label}.csv")),
        &["t".into(), "v".into()],
        nodes.iter().zip(&v).map(|(&t, &v)| vec![t, v]),
    )
    .at(Stage::Output)?;

    let n = traj.states.first().map_or(0, |x| x.len());
    let mut header = vec!["t".to_string()];
    header.extend(state_columns(n));
    write_csv(
        &out.join(format!("x_{label}.csv")),
        &header,
        nodes.iter().zip(&traj.states).map(|(&t, x)| {
            let mut row = vec![t];
            row.extend(x.iter());
            row
        }),
    )
    .at(Stage::Output)?;

    let cumulative = traj.cumulative_cost.as_deref().unwrap_or_default();
    write_csv(
        &out.join(format!("cost_{label}.csv")),
        &["t".into(), "L".into(), "J".into()],
        nodes
            .iter()
            .zip(&stage.profile.running)
            .zip(cumulative)
            .map(|((&t, &l), &j)| vec![t, l, j]),
    )
    .at(Stage::Output)
}

/// `solve`: writes `v_embedded.csv`, `x_embedded.csv` and `solve.json`.
pub fn run_solve(config: &RunConfig, out: &Path) -> StageResult<SolveSummary> {
    let (_, solution) = solve_problem(config)?;
    create_dir(out)?;
    write_embedded(out, &solution)?;
    let summary = summarize_solution(&solution);
    write_json(&out.join("solve.json"), &summary).at(Stage::Output)?;
    Ok(summary)
}

/// `filter`: solves, filters with `config.dwell_time` and writes the
/// per-stage CSVs plus `filter.json`.
pub fn run_filter(config: &RunConfig, out: &Path) -> StageResult<StageSummary> {
    let (problem, solution) = solve_problem(config)?;
    let stage = filter_stage(config, &problem, &solution, config.dwell_time)?;
    create_dir(out)?;
    write_stage(out, &stage)?;
    write_json(&out.join("filter.json"), &stage.summary).at(Stage::Output)?;
    Ok(stage.summary)
}

/// `pipeline`: one solve, then every dwell time of `config.dwell_sweep` in
/// parallel, then `report.json`.
pub fn run_pipeline(config: &RunConfig, out: &Path) -> StageResult<PipelineReport> {
    let (problem, solution) = solve_problem(config)?;
    create_dir(out)?;
    write_embedded(out, &solution)?;
    let stages = config
        .dwell_sweep
        .par_iter()
        .map(|&dwell| {
            let stage = filter_stage(config, &problem, &solution, dwell)?;
            write_stage(out, &stage)?;
            Ok(stage.summary)
        })
        .collect::<StageResult<Vec<_>>>()?;
    let report = PipelineReport {
        config: config.clone(),
        solver: summarize_solution(&solution),
        stages,
    };
    write_json(&out.join("report.json"), &report).at(Stage::Output)?;
    Ok(report)
}
