#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use switchopt::benchmark::{mass_spring_damper, BenchmarkParams};
use switchopt::{LtiMode, Matrix, Mode, Schedule, SwitchedProblem, Vector};

pub fn benchmark(dwell: f64) -> SwitchedProblem {
    mass_spring_damper(&BenchmarkParams {
        dwell_time: dwell,
        ..BenchmarkParams::default()
    })
    .unwrap()
}

/// Two stable-ish affine modes on `[0, 10]` with a quadratic tracking cost
/// and no continuous control.
pub fn random_lti(rng: &mut impl Rng, dwell: f64) -> SwitchedProblem {
    let mut mode = || {
        let a = Matrix::from_fn(2, 2, |i, j| {
            let r = rng.random_range(-0.5..0.5);
            if i == j { r - 0.3 } else { r }
        });
        let c = Vector::from_fn(2, |_, _| rng.random_range(-0.5..0.5));
        LtiMode::new(a, Matrix::zeros(2, 0))
            .with_offset(c)
            .with_state_cost(Matrix::identity(2, 2), Vector::from_vec(vec![1.0, 0.0]))
    };
    let (m0, m1) = (mode(), mode());
    SwitchedProblem::new(0.0, 10.0, Vector::zeros(2), Arc::new(m0), Arc::new(m1))
        .unwrap()
        .with_dwell_time(dwell)
        .unwrap()
}

/// Random normalized schedule on `[0, 10]` with up to `max_switches`
/// switches.
pub fn random_schedule(rng: &mut impl Rng, max_switches: usize) -> Schedule {
    let count = rng.random_range(0..=max_switches);
    let mut times: Vec<f64> = (0..count).map(|_| rng.random_range(0.01..9.99)).collect();
    times.sort_by(f64::total_cmp);
    let first = if rng.random_bool(0.5) { Mode::Zero } else { Mode::One };
    let modes = (0..=count)
        .map(|i| if i % 2 == 0 { first } else { first.other() })
        .collect::<Vec<_>>();
    Schedule::normalize(0.0, 10.0, &modes, &times).unwrap()
}
