//! Shared fixtures for the benchmarks.

use switchopt::benchmark::{mass_spring_damper, BenchmarkParams};
use switchopt::SwitchedProblem;

/// The benchmark problem with the given dwell time and horizon.
pub fn benchmark_problem(dwell: f64, tf: f64) -> SwitchedProblem {
    let params = BenchmarkParams {
        dwell_time: dwell,
        tf,
        ..BenchmarkParams::default()
    };
    mass_spring_damper(&params).expect("benchmark parameters are valid")
}
