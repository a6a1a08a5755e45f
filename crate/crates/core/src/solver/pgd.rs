//! Projected gradient descent on a box with Barzilai–Borwein trial steps
//! and Armijo backtracking along the projection arc.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct PgSettings {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub armijo_c: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct PgOutcome {
    pub z: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// `‖P(z − ∇Φ) − z‖_∞` at the returned point.
    pub pg_norm: f64,
    pub converged: bool,
    /// Objective after every accepted step (first entry: start point).
    pub trace: Vec<f64>,
}

pub(crate) fn project(z: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..z.len() {
        z[i] = z[i].clamp(lo[i], hi[i]);
    }
}

pub(crate) fn projected_gradient_norm(z: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    z.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (zi, gi))| ((zi - gi).clamp(lo[i], hi[i]) - zi).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn minimize<F>(
    mut eval: F,
    z0: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    settings: &PgSettings,
    keep_trace: bool,
) -> Result<PgOutcome>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut z = z0;
    project(&mut z, lo, hi);
    let (mut f, mut g) = eval(&z);
    if !f.is_finite() {
        return Err(Error::SolverDiverged("non-finite objective at start".into()));
    }
    let mut trace = if keep_trace { vec![f] } else { Vec::new() };
    let mut pg = projected_gradient_norm(&z, &g, lo, hi);
    let mut step = 1.0 / pg.max(1e-12);
    let mut iterations = 0;

    while iterations < settings.max_iterations && pg > settings.tolerance {
        iterations += 1;
        let mut alpha = step.clamp(1e-12, 1e12);
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let mut trial: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - alpha * gi).collect();
            project(&mut trial, lo, hi);
            let decrease: f64 = trial.iter().zip(&z).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            let (ft, gt) = eval(&trial);
            if ft.is_finite() && ft <= f + settings.armijo_c * decrease {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= settings.shrink;
        }
        let Some((next, f_next, g_next)) = accepted else {
            // No sufficient decrease at any trial step: stationary to
            // working precision.
            break;
        };

        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..z.len() {
            let s = next[i] - z[i];
            let y = g_next[i] - g[i];
            ss += s * s;
            sy += s * y;
        }
        step = if sy > 0.0 { ss / sy } else { 1e3 * alpha.max(1e-6) };

        z = next;
        f = f_next;
        g = g_next;
        if keep_trace {
            trace.push(f);
        }
        pg = projected_gradient_norm(&z, &g, lo, hi);
    }

    Ok(PgOutcome {
        z,
        value: f,
        iterations,
        pg_norm: pg,
        converged: pg <= settings.tolerance,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> PgSettings {
        PgSettings {
            max_iterations: 5000,
            tolerance: 1e-10,
            armijo_c: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }

    #[test]
    fn solves_bound_constrained_quadratic() {
        // min (x-2)^2 + 10 (y+1)^2 on [0,1]^2 -> (1, 0)
        let eval = |z: &[f64]| {
            let f = (z[0] - 2.0).powi(2) + 10.0 * (z[1] + 1.0).powi(2);
            (f, vec![2.0 * (z[0] - 2.0), 20.0 * (z[1] + 1.0)])
        };
        let out = minimize(eval, vec![0.5, 0.5], &[0.0, 0.0], &[1.0, 1.0], &settings(), true).unwrap();
        assert!(out.converged);
        assert_eq!(out.z, vec![1.0, 0.0]);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ill_conditioned_interior_minimum() {
        let eval = |z: &[f64]| {
            let f = 0.5 * (z[0] * z[0] + 1e4 * z[1] * z[1]) - z[0] - z[1];
            (f, vec![z[0] - 1.0, 1e4 * z[1] - 1.0])
        };
        let inf = f64::INFINITY;
        let out = minimize(eval, vec![5.0, 5.0], &[-inf, -inf], &[inf, inf], &settings(), true).unwrap();
        assert!(out.converged, "pg = {}", out.pg_norm);
        assert!((out.z[0] - 1.0).abs() < 1e-8 && (out.z[1] - 1e-4).abs() < 1e-12);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn concave_objective_goes_to_a_vertex() {
        let eval = |z: &[f64]| (z[0] - z[0] * z[0] + 0.01 * z[0], vec![1.01 - 2.0 * z[0]]);
        let out = minimize(eval, vec![0.5], &[0.0], &[1.0], &settings(), false).unwrap();
        assert_eq!(out.z, vec![0.0]);
    }
}
