//! The mass-spring-damper benchmark: a unit mass on a spring and damper
//! driven by a force that can only take the values `±F`.
//!
//! Each force level is one mode, so the modes carry no continuous control:
//!
//! ```text
//! ẋ₁ = x₂
//! ẋ₂ = (−k x₁ − b x₂ + F_v) / m,   F₀ = −F, F₁ = +F
//! ```
//!
//! The running cost tracks `x₁ = 1` at rest. It is available as printed
//! (`a{(x₁ − 1)² − x₂²}`, which rewards velocity) and in a regularized form
//! with `+x₂²`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{LtiMode, Matrix, SwitchedProblem, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostVariant {
    /// `a{(x₁ − 1)² − x₂²}` exactly as stated.
    PaperVerbatim,
    /// `a{(x₁ − 1)² + x₂²}`
    #[default]
    Regularized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkParams {
    pub mass: f64,
    pub spring: f64,
    pub b_damper: f64,
    /// Magnitude of the two admissible forces.
    pub force: f64,
    /// Weight `a` of the tracking cost.
    pub cost_coeff: f64,
    pub b_aux: f64,
    pub target_position: f64,
    pub x0: [f64; 2],
    pub t0: f64,
    pub tf: f64,
    pub dwell_time: f64,
    pub variant: CostVariant,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            spring: 0.1,
            b_damper: 0.1,
            force: 0.2,
            cost_coeff: 4.0,
            b_aux: 1.0,
            target_position: 1.0,
            x0: [0.0, 0.0],
            t0: 0.0,
            tf: 10.0,
            dwell_time: 0.0,
            variant: CostVariant::Regularized,
        }
    }
}

impl BenchmarkParams {
    pub fn system_matrix(&self) -> Matrix {
        Matrix::from_row_slice(
            2,
            2,
            &[0.0, 1.0, -self.spring / self.mass, -self.b_damper / self.mass],
        )
    }

    pub fn input_vector(&self) -> Vector {
        Vector::from_vec(vec![0.0, 1.0 / self.mass])
    }
}

pub fn mass_spring_damper(params: &BenchmarkParams) -> Result<SwitchedProblem> {
    let a = params.system_matrix();
    let velocity_sign = match params.variant {
        CostVariant::PaperVerbatim => -1.0,
        CostVariant::Regularized => 1.0,
    };
    let weight = Matrix::from_diagonal(&Vector::from_vec(vec![
        params.cost_coeff,
        velocity_sign * params.cost_coeff,
    ]));
    let target = Vector::from_vec(vec![params.target_position, 0.0]);
    let mode = |force: f64| {
        LtiMode::new(a.clone(), Matrix::zeros(2, 0))
            .with_offset(params.input_vector() * force)
            .with_state_cost(weight.clone(), target.clone())
    };
    SwitchedProblem::new(
        params.t0,
        params.tf,
        Vector::from_vec(params.x0.to_vec()),
        Arc::new(mode(-params.force)),
        Arc::new(mode(params.force)),
    )?
    .with_aux_coeff(params.b_aux)?
    .with_dwell_time(params.dwell_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;

    #[test]
    fn modes_push_in_opposite_directions() {
        let p = mass_spring_damper(&BenchmarkParams::default()).unwrap();
        let x = Vector::zeros(2);
        let u = Vector::zeros(0);
        assert_eq!(p.dynamics(Mode::Zero, 0.0, &x, &u).as_slice(), &[0.0, -0.2]);
        assert_eq!(p.dynamics(Mode::One, 0.0, &x, &u).as_slice(), &[0.0, 0.2]);
        assert_eq!(p.control_dim(), 0);
        assert_eq!(p.aux_coeff(), 1.0);
    }

    #[test]
    fn cost_variants_differ_in_velocity_sign() {
        let x = Vector::from_vec(vec![1.0, 2.0]);
        let u = Vector::zeros(0);
        let reg = mass_spring_damper(&BenchmarkParams::default()).unwrap();
        let raw = mass_spring_damper(&BenchmarkParams {
            variant: CostVariant::PaperVerbatim,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(reg.running_cost(Mode::Zero, 0.0, &x, &u), 16.0);
        assert_eq!(raw.running_cost(Mode::One, 0.0, &x, &u), -16.0);
    }
}
