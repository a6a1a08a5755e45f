//! Problem definition: mode dynamics, costs, the switched problem and
//! schedules.

mod lti;
mod schedule;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use lti::{FnMode, LtiMode};
pub use schedule::{DwellViolation, Schedule, Segment};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// One of the two subsystems of the switched system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Zero,
    One,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Zero, Mode::One];

    pub fn index(self) -> usize {
        match self {
            Mode::Zero => 0,
            Mode::One => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Mode> {
        match index {
            0 => Some(Mode::Zero),
            1 => Some(Mode::One),
            _ => None,
        }
    }

    pub fn other(self) -> Mode {
        match self {
            Mode::Zero => Mode::One,
            Mode::One => Mode::Zero,
        }
    }

    /// The value of the embedded signal `v` that selects this mode.
    pub fn as_embedded(self) -> f64 {
        self.index() as f64
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl Serialize for Mode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.index() as u8)
    }
}

impl<'de> Deserialize<'de> for Mode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = u8::deserialize(d)?;
        Mode::from_index(raw as usize)
            .ok_or_else(|| serde::de::Error::custom(format!("mode must be 0 or 1, got {raw}")))
    }
}

/// Dynamics and running cost of a single mode.
///
/// Derivatives default to central finite differences with step
/// `1e-6·(1 + |x_i|)`; implementors with closed forms should override them.
pub trait ModeModel: Send + Sync {
    fn state_dim(&self) -> usize;

    fn control_dim(&self) -> usize;

    fn dynamics(&self, t: f64, x: &Vector, u: &Vector) -> Vector;

    fn running_cost(&self, t: f64, x: &Vector, u: &Vector) -> f64;

    fn dynamics_jacobian_x(&self, t: f64, x: &Vector, u: &Vector) -> Matrix {
        fd_jacobian(|xx| self.dynamics(t, xx, u), x, self.state_dim())
    }

    fn dynamics_jacobian_u(&self, t: f64, x: &Vector, u: &Vector) -> Matrix {
        fd_jacobian(|uu| self.dynamics(t, x, uu), u, self.state_dim())
    }

    fn running_cost_grad_x(&self, t: f64, x: &Vector, u: &Vector) -> Vector {
        fd_gradient(|xx| self.running_cost(t, xx, u), x)
    }

    fn running_cost_grad_u(&self, t: f64, x: &Vector, u: &Vector) -> Vector {
        fd_gradient(|uu| self.running_cost(t, x, uu), u)
    }
}

pub(crate) fn fd_step(value: f64) -> f64 {
    1e-6 * (1.0 + value.abs())
}

/// Central-difference Jacobian of `f` at `at`, `rows` outputs.
pub fn fd_jacobian<F>(f: F, at: &Vector, rows: usize) -> Matrix
where
    F: Fn(&Vector) -> Vector,
{
    let mut jac = Matrix::zeros(rows, at.len());
    let mut probe = at.clone();
    for i in 0..at.len() {
        let h = fd_step(at[i]);
        probe[i] = at[i] + h;
        let plus = f(&probe);
        probe[i] = at[i] - h;
        let minus = f(&probe);
        probe[i] = at[i];
        jac.set_column(i, &((plus - minus) / (2.0 * h)));
    }
    jac
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, at: &Vector) -> Vector
where
    F: Fn(&Vector) -> f64,
{
    let mut grad = Vector::zeros(at.len());
    let mut probe = at.clone();
    for i in 0..at.len() {
        let h = fd_step(at[i]);
        probe[i] = at[i] + h;
        let plus = f(&probe);
        probe[i] = at[i] - h;
        let minus = f(&probe);
        probe[i] = at[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    grad
}

pub type TerminalFn = Arc<dyn Fn(f64, &Vector, f64, &Vector) -> f64 + Send + Sync>;

/// Terminal cost `K(t0, x0, tf, xf)`.
#[derive(Clone, Default)]
pub enum TerminalCost {
    #[default]
    Zero,
    Constant(f64),
    /// `(xf − target)ᵀ W (xf − target)`
    Quadratic { weight: Matrix, target: Vector },
    Custom(TerminalFn),
}

impl TerminalCost {
    pub fn value(&self, t0: f64, x0: &Vector, tf: f64, xf: &Vector) -> f64 {
        match self {
            TerminalCost::Zero => 0.0,
            TerminalCost::Constant(c) => *c,
            TerminalCost::Quadratic { weight, target } => {
                let e = xf - target;
                e.dot(&(weight * &e))
            }
            TerminalCost::Custom(k) => k(t0, x0, tf, xf),
        }
    }

    /// Gradient with respect to the final state.
    pub fn gradient(&self, t0: f64, x0: &Vector, tf: f64, xf: &Vector) -> Vector {
        match self {
            TerminalCost::Zero | TerminalCost::Constant(_) => Vector::zeros(xf.len()),
            TerminalCost::Quadratic { weight, target } => {
                let e = xf - target;
                (weight + weight.transpose()) * e
            }
            TerminalCost::Custom(k) => fd_gradient(|x| k(t0, x0, tf, x), xf),
        }
    }
}

impl fmt::Debug for TerminalCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalCost::Zero => write!(f, "Zero"),
            TerminalCost::Constant(c) => write!(f, "Constant({c})"),
            TerminalCost::Quadratic { weight, target } => f
                .debug_struct("Quadratic")
                .field("weight", weight)
                .field("target", target)
                .finish(),
            TerminalCost::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A two-mode switched optimal control problem with fixed horizon, fixed
/// initial state and free final state.
#[derive(Clone)]
pub struct SwitchedProblem {
    t0: f64,
    tf: f64,
    x0: Vector,
    modes: [Arc<dyn ModeModel>; 2],
    terminal: TerminalCost,
    control_lo: Vector,
    control_hi: Vector,
    aux_coeff: f64,
    dwell_time: f64,
}

impl SwitchedProblem {
    /// Builds a problem with zero terminal cost, unbounded controls,
    /// `b_aux = 0` and no dwell time.
    pub fn new(
        t0: f64,
        tf: f64,
        x0: Vector,
        mode0: Arc<dyn ModeModel>,
        mode1: Arc<dyn ModeModel>,
    ) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && t0 < tf) {
            return Err(Error::InvalidProblem(format!(
                "horizon must satisfy t0 < tf, got [{t0}, {tf}]"
            )));
        }
        let n = mode0.state_dim();
        let m = mode0.control_dim();
        if mode1.state_dim() != n || mode1.control_dim() != m {
            return Err(Error::InvalidProblem(format!(
                "modes disagree on dimensions: ({n}, {m}) vs ({}, {})",
                mode1.state_dim(),
                mode1.control_dim()
            )));
        }
        if x0.len() != n {
            return Err(Error::InvalidProblem(format!(
                "x0 has dimension {}, expected {n}",
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("x0 must be finite".into()));
        }
        Ok(Self {
            t0,
            tf,
            x0,
            modes: [mode0, mode1],
            terminal: TerminalCost::Zero,
            control_lo: Vector::from_element(m, f64::NEG_INFINITY),
            control_hi: Vector::from_element(m, f64::INFINITY),
            aux_coeff: 0.0,
            dwell_time: 0.0,
        })
    }

    pub fn with_terminal_cost(mut self, terminal: TerminalCost) -> Self {
        self.terminal = terminal;
        self
    }

    pub fn with_control_bounds(mut self, lo: Vector, hi: Vector) -> Result<Self> {
        let m = self.control_dim();
        if lo.len() != m || hi.len() != m {
            return Err(Error::InvalidProblem(format!(
                "control bounds must have dimension {m}"
            )));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidProblem(
                "control bounds must satisfy lo <= hi".into(),
            ));
        }
        self.control_lo = lo;
        self.control_hi = hi;
        Ok(self)
    }

    pub fn with_aux_coeff(mut self, b_aux: f64) -> Result<Self> {
        if !(b_aux.is_finite() && b_aux >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "auxiliary coefficient must be finite and >= 0, got {b_aux}"
            )));
        }
        self.aux_coeff = b_aux;
        Ok(self)
    }

    pub fn with_dwell_time(mut self, dwell: f64) -> Result<Self> {
        if !(dwell.is_finite() && dwell >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "dwell time must be finite and >= 0, got {dwell}"
            )));
        }
        self.dwell_time = dwell;
        Ok(self)
    }

    /// Copy of the problem on `[t_start, tf]` starting from `x_start`.
    pub fn restricted(&self, t_start: f64, x_start: Vector) -> Result<Self> {
        if !(t_start >= self.t0 && t_start < self.tf) {
            return Err(Error::Domain {
                what: "t_start",
                value: t_start,
                lo: self.t0,
                hi: self.tf,
            });
        }
        if x_start.len() != self.state_dim() {
            return Err(Error::InvalidProblem("x_start has wrong dimension".into()));
        }
        let mut copy = self.clone();
        copy.t0 = t_start;
        copy.x0 = x_start;
        Ok(copy)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn horizon(&self) -> f64 {
        self.tf - self.t0
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn mode(&self, mode: Mode) -> &dyn ModeModel {
        self.modes[mode.index()].as_ref()
    }

    pub fn terminal_cost(&self) -> &TerminalCost {
        &self.terminal
    }

    pub fn control_lo(&self) -> &Vector {
        &self.control_lo
    }

    pub fn control_hi(&self) -> &Vector {
        &self.control_hi
    }

    pub fn aux_coeff(&self) -> f64 {
        self.aux_coeff
    }

    pub fn dwell_time(&self) -> f64 {
        self.dwell_time
    }

    pub fn state_dim(&self) -> usize {
        self.modes[0].state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.modes[0].control_dim()
    }

    pub fn dynamics(&self, mode: Mode, t: f64, x: &Vector, u: &Vector) -> Vector {
        self.mode(mode).dynamics(t, x, u)
    }

    pub fn running_cost(&self, mode: Mode, t: f64, x: &Vector, u: &Vector) -> f64 {
        self.mode(mode).running_cost(t, x, u)
    }

    pub fn terminal_value(&self, xf: &Vector) -> f64 {
        self.terminal.value(self.t0, &self.x0, self.tf, xf)
    }

    pub fn terminal_gradient(&self, xf: &Vector) -> Vector {
        self.terminal.gradient(self.t0, &self.x0, self.tf, xf)
    }

    /// Centre of the control box; infinite sides fall back to zero.
    pub fn control_midpoint(&self) -> Vector {
        Vector::from_iterator(
            self.control_dim(),
            self.control_lo
                .iter()
                .zip(self.control_hi.iter())
                .map(|(&lo, &hi)| match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo.max(0.0),
                    (false, true) => hi.min(0.0),
                    (false, false) => 0.0,
                }),
        )
    }

    pub fn clamp_control(&self, u: &mut Vector) {
        for i in 0..u.len() {
            u[i] = u[i].clamp(self.control_lo[i], self.control_hi[i]);
        }
    }

    pub fn control_in_bounds(&self, u: &Vector) -> bool {
        u.len() == self.control_dim()
            && u.iter()
                .zip(self.control_lo.iter().zip(self.control_hi.iter()))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

impl fmt::Debug for SwitchedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SwitchedProblem")
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .field("x0", &self.x0.as_slice())
            .field("state_dim", &self.state_dim())
            .field("control_dim", &self.control_dim())
            .field("terminal", &self.terminal)
            .field("aux_coeff", &self.aux_coeff)
            .field("dwell_time", &self.dwell_time)
            .finish()
    }
}
