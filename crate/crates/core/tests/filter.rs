mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use switchopt::filter::{apply_replacement, filter_schedule, insertion_gradient};
use switchopt::oracle::fd_insertion_gradient;
use switchopt::sim::schedule_trajectories;
use switchopt::{FilterOptions, Grid, Mode, ModeControls, Schedule};

use common::{benchmark, random_lti, random_schedule};
use Mode::{One, Zero};

fn options(grid_nodes: usize) -> FilterOptions {
    FilterOptions {
        grid_nodes,
        ..FilterOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_respects_dwell_and_is_a_fixed_point(seed in any::<u64>(), dwell in 0.05f64..2.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_lti(&mut rng, dwell);
        let s = random_schedule(&mut rng, 12);
        let c = ModeControls::midpoint(&p);
        let report = filter_schedule(&p, &s, &c, &options(201)).unwrap();
        let out = &report.output_schedule;
        prop_assert!(out.min_gap() >= dwell, "min gap {} < {dwell}", out.min_gap());
        prop_assert!(report.steps.len() <= s.switch_count());
        prop_assert!(out.switch_count() <= s.switch_count());

        let again = filter_schedule(&p, out, &c, &options(201)).unwrap();
        prop_assert_eq!(&again.output_schedule, out);
        prop_assert!(again.steps.is_empty());
    }
}

#[test]
fn single_violation_takes_one_of_the_two_outcomes() {
    let p = benchmark(0.6);
    let c = ModeControls::midpoint(&p);
    let s = Schedule::new(0.0, 10.0, vec![Zero, One, Zero], vec![4.5, 5.0]).unwrap();

    let keep = apply_replacement(&s, 0, 0.6, One).unwrap();
    assert_eq!(keep.modes(), &[Zero, One, Zero]);
    assert_eq!(keep.switch_times()[0], 4.5);
    assert!((keep.switch_times()[1] - 5.1).abs() < 1e-12);
    let drop = apply_replacement(&s, 0, 0.6, Zero).unwrap();
    assert_eq!(drop, Schedule::constant(0.0, 10.0, Zero));

    let report = filter_schedule(&p, &s, &c, &options(501)).unwrap();
    assert_eq!(report.steps.len(), 1);
    let expected = match report.steps[0].alpha {
        One => keep,
        Zero => drop,
    };
    assert_eq!(report.output_schedule, expected);
    assert!(report.output_schedule.min_gap() >= 0.6);
}

#[test]
fn insertion_gradient_matches_finite_differences() {
    let p = benchmark(0.0);
    let c = ModeControls::midpoint(&p);
    let grid = Grid::uniform(0.0, 10.0, 501).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mode in Mode::ALL {
        let s = Schedule::constant(0.0, 10.0, mode);
        let traj = schedule_trajectories(&p, &s, &c, &grid).unwrap();
        for _ in 0..10 {
            let t = rng.random_range(0.0..9.99);
            let d = insertion_gradient(&p, &s, &c, &traj, t, mode.other()).unwrap();
            let fd = fd_insertion_gradient(&p, &s, &c, &grid, t, mode.other(), 1e-3).unwrap();
            assert!((d - fd).abs() <= 0.05 * d.abs().max(1e-8), "s = {t}: D {d}, fd {fd}");
            assert_eq!(insertion_gradient(&p, &s, &c, &traj, t, mode).unwrap(), 0.0);
        }
    }
}

#[test]
fn difference_quotient_error_is_first_order() {
    // Close to a zero of D, where the relative test is meaningless.
    let p = benchmark(0.0);
    let c = ModeControls::midpoint(&p);
    let s = Schedule::new(0.0, 10.0, vec![One, Zero, One, Zero], vec![3.1, 4.4, 6.25]).unwrap();
    let grid = Grid::uniform(0.0, 10.0, 501).unwrap();
    let traj = schedule_trajectories(&p, &s, &c, &grid).unwrap();
    let (t, alpha) = (3.7005, One);
    let d = insertion_gradient(&p, &s, &c, &traj, t, alpha).unwrap();
    let err = |lambda| (fd_insertion_gradient(&p, &s, &c, &grid, t, alpha, lambda).unwrap() - d).abs();
    let ratio = err(1e-3) / err(5e-4);
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
    assert!(err(1e-5) <= 1e-3 * d.abs());
}

#[test]
fn dwell_longer_than_the_horizon() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = random_lti(&mut rng, 20.0);
    let c = ModeControls::midpoint(&p);
    let s = Schedule::new(0.0, 10.0, vec![Zero, One, Zero, One], vec![1.0, 2.0, 3.0]).unwrap();
    let out = filter_schedule(&p, &s, &c, &options(201)).unwrap().output_schedule;
    assert!(out.switch_count() <= 1);
    assert!(out.min_gap() >= 20.0);
}
