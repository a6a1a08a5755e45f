//! Switched optimal control with dwell-time constraints.
//!
//! The pipeline has three stages:
//!
//! 1. the binary switching signal of a two-mode switched system is embedded
//!    into a continuous signal `v ∈ [0, 1]`, turning the switched problem into
//!    a conventional optimal control problem;
//! 2. a concave auxiliary running cost `b·(v − v²)` is added so that the
//!    Hamiltonian is concave in `v` and the optimum is bang-bang
//!    ([`solver::solve_meocp`]);
//! 3. the resulting schedule is post-processed by a filter that removes
//!    switches violating the dwell time, choosing the replacement mode by
//!    integrating insertion gradients ([`filter::filter_schedule`]).
//!
//! [`oracle`] holds brute-force references (finite-difference insertion
//! gradients, exhaustive mode choice and schedule enumeration) used to check
//! the first-order machinery.

pub mod benchmark;
pub mod error;
pub mod filter;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use filter::{FilterOptions, FilterReport, FilterStep};
pub use model::{
    DwellViolation, FnMode, LtiMode, Matrix, Mode, ModeModel, Schedule, SwitchedProblem,
    TerminalCost, Vector,
};
pub use sim::{ControlInput, EmbeddedControl, Grid, ModeControls, Trajectory};
pub use solver::{EmbeddedSolution, Method, SolveOptions};
