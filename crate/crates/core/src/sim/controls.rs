use crate::error::{Error, Result};
use crate::model::{Mode, Schedule, SwitchedProblem, Vector};

use super::Grid;

pub(crate) fn lerp(a: &Vector, b: &Vector, w: f64) -> Vector {
    if w == 0.0 {
        a.clone()
    } else if w == 1.0 {
        b.clone()
    } else {
        a * (1.0 - w) + b * w
    }
}

/// The continuous control each mode uses while a schedule is being
/// followed.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeControls {
    /// One fixed control per mode.
    Constant([Vector; 2]),
    /// Per-mode samples on common nodes, linearly interpolated.
    Sampled {
        grid: Grid,
        values: [Vec<Vector>; 2],
    },
    /// `head` before `at`, `tail` from `at` on.
    Spliced {
        at: f64,
        head: Box<ModeControls>,
        tail: Box<ModeControls>,
    },
}

impl ModeControls {
    /// Both modes held at the centre of the control box.
    pub fn midpoint(problem: &SwitchedProblem) -> Self {
        let mid = problem.control_midpoint();
        ModeControls::Constant([mid.clone(), mid])
    }

    /// Per-mode controls `u₀(·)`, `u₁(·)` of an embedded solution.
    pub fn from_embedded(control: &EmbeddedControl) -> Self {
        if control.u0.iter().all(|u| u.is_empty()) {
            return ModeControls::Constant([Vector::zeros(0), Vector::zeros(0)]);
        }
        ModeControls::Sampled {
            grid: control.grid.clone(),
            values: [control.u0.clone(), control.u1.clone()],
        }
    }

    pub fn at(&self, mode: Mode, t: f64) -> Vector {
        match self {
            ModeControls::Constant(u) => u[mode.index()].clone(),
            ModeControls::Sampled { grid, values } => {
                let (k, w) = grid.bracket(t);
                let v = &values[mode.index()];
                lerp(&v[k], &v[k + 1], w)
            }
            ModeControls::Spliced { at, head, tail } => {
                if t < *at {
                    head.at(mode, t)
                } else {
                    tail.at(mode, t)
                }
            }
        }
    }

    pub fn splice(&self, at: f64, tail: ModeControls) -> ModeControls {
        if *self == tail {
            return tail;
        }
        ModeControls::Spliced {
            at,
            head: Box::new(self.clone()),
            tail: Box::new(tail),
        }
    }
}

/// Sampled augmented control `U = (u₀, u₁, v)` of the embedded problem.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedControl {
    grid: Grid,
    u0: Vec<Vector>,
    u1: Vec<Vector>,
    v: Vec<f64>,
}

impl EmbeddedControl {
    pub fn new(grid: Grid, u0: Vec<Vector>, u1: Vec<Vector>, v: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if u0.len() != n || u1.len() != n || v.len() != n {
            return Err(Error::Structure(format!(
                "embedded control needs {n} samples per signal"
            )));
        }
        for &value in &v {
            crate::error::check_range("v", value, 0.0, 1.0)?;
        }
        Ok(Self { grid, u0, u1, v })
    }

    /// Constant `v` with both mode controls at the box centre.
    pub fn constant(problem: &SwitchedProblem, grid: Grid, v: f64) -> Result<Self> {
        let mid = problem.control_midpoint();
        let n = grid.len();
        Self::new(grid, vec![mid.clone(); n], vec![mid; n], vec![v; n])
    }

    /// The binary signal of `schedule` sampled on `grid`, controls from
    /// `controls`.
    pub fn from_schedule(schedule: &Schedule, controls: &super::ModeControls, grid: Grid) -> Self {
        let v = schedule.sample(grid.nodes());
        let u0 = grid.nodes().iter().map(|&t| controls.at(Mode::Zero, t)).collect();
        let u1 = grid.nodes().iter().map(|&t| controls.at(Mode::One, t)).collect();
        Self { grid, u0, u1, v }
    }

    pub fn check_bounds(&self, problem: &SwitchedProblem) -> Result<()> {
        for (k, (a, b)) in self.u0.iter().zip(&self.u1).enumerate() {
            if !problem.control_in_bounds(a) || !problem.control_in_bounds(b) {
                return Err(Error::Domain {
                    what: "control node",
                    value: k as f64,
                    lo: 0.0,
                    hi: (self.grid.len() - 1) as f64,
                });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn u0(&self) -> &[Vector] {
        &self.u0
    }

    pub fn u1(&self) -> &[Vector] {
        &self.u1
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn mode_control(&self, mode: Mode) -> &[Vector] {
        match mode {
            Mode::Zero => &self.u0,
            Mode::One => &self.u1,
        }
    }

    /// Linearly interpolated `(u₀, u₁, v)` at `t`.
    pub fn at(&self, t: f64) -> (Vector, Vector, f64) {
        let (k, w) = self.grid.bracket(t);
        let v = if w == 0.0 {
            self.v[k]
        } else if w == 1.0 {
            self.v[k + 1]
        } else {
            (1.0 - w) * self.v[k] + w * self.v[k + 1]
        };
        (
            lerp(&self.u0[k], &self.u0[k + 1], w),
            lerp(&self.u1[k], &self.u1[k + 1], w),
            v.clamp(0.0, 1.0),
        )
    }
}
