//! Run configuration, read from a JSON file.
//!
//! Every section is optional; omitted fields take the defaults below. An
//! empty object `{}` runs the mass-spring-damper benchmark.
//!
//! ```json
//! {
//!   "problem": { "builtin": { "name": "mass_spring_damper", "variant": "regularized" } },
//!   "tf": 10.0,
//!   "grid_nodes": 501,
//!   "cost_coeff": 4.0,
//!   "b_aux": 1.0,
//!   "dwell_time": 0.1,
//!   "dwell_sweep": [0.0, 0.1, 0.2],
//!   "solver": { "max_iterations": 2000 },
//!   "filter": { "n_sub": 20, "resolve_tail": false },
//!   "output_dir": "out"
//! }
//! ```
//!
//! An inline problem replaces the builtin with two affine modes
//! `ẋ = A x + b u_q` sharing the running cost
//! `cost_coeff · (x − target)ᵀ W (x − target)`:
//!
//! ```json
//! { "problem": { "lti": {
//!     "a": [[0, 1], [-0.1, -0.1]], "b": [0, 1], "mode_inputs": [-0.2, 0.2],
//!     "x0": [0, 0], "state_weight": [[1, 0], [0, 1]], "target": [1, 0],
//!     "terminal": { "weight": [[1, 0], [0, 1]], "target": [1, 0] } } } }
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use switchopt::benchmark::{mass_spring_damper, BenchmarkParams, CostVariant};
use switchopt::{LtiMode, Matrix, SolveOptions, SwitchedProblem, TerminalCost, Vector};

pub const DEFAULT_TF: f64 = 10.0;
pub const DEFAULT_GRID_NODES: usize = 501;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Builtin(BuiltinSpec),
    Lti(LtiSpec),
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec::Builtin(BuiltinSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinName {
    #[default]
    MassSpringDamper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuiltinSpec {
    pub name: BuiltinName,
    pub variant: CostVariant,
    pub mass: f64,
    pub spring: f64,
    pub b_damper: f64,
    pub force: f64,
    pub target_position: f64,
    pub x0: [f64; 2],
}

impl Default for BuiltinSpec {
    fn default() -> Self {
        let p = BenchmarkParams::default();
        Self {
            name: BuiltinName::MassSpringDamper,
            variant: p.variant,
            mass: p.mass,
            spring: p.spring,
            b_damper: p.b_damper,
            force: p.force,
            target_position: p.target_position,
            x0: p.x0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalSpec {
    pub weight: Vec<Vec<f64>>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LtiSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Constant input of mode 0 and mode 1.
    pub mode_inputs: [f64; 2],
    pub x0: Vec<f64>,
    /// Defaults to the identity.
    #[serde(default)]
    pub state_weight: Option<Vec<Vec<f64>>>,
    /// Defaults to the origin.
    #[serde(default)]
    pub target: Option<Vec<f64>>,
    #[serde(default)]
    pub terminal: Option<TerminalSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub n_sub: usize,
    pub resolve_tail: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_sub: 20,
            resolve_tail: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Final time; the start time is always 0.
    pub tf: Option<f64>,
    /// Shorthand for `solver.grid_nodes`, also used by the filter.
    pub grid_nodes: Option<usize>,
    /// Weight `a` of the running cost.
    pub cost_coeff: f64,
    pub b_aux: f64,
    /// Dwell time for `filter` and `check`.
    pub dwell_time: f64,
    /// Dwell times filtered by `pipeline`; 0 skips the filter.
    pub dwell_sweep: Vec<f64>,
    pub solver: SolveOptions,
    pub filter: FilterConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            tf: None,
            grid_nodes: None,
            cost_coeff: 4.0,
            b_aux: 1.0,
            dwell_time: 0.1,
            dwell_sweep: vec![0.0, 0.1, 0.2],
            solver: SolveOptions::default(),
            filter: FilterConfig::default(),
            output_dir: None,
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parses and validates a config; a missing `tf` is filled in with a
/// logged notice.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.resolve()?;
    Ok(config)
}

fn check_finite(field: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn check_all_finite<'a>(field: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<(), ConfigError> {
    values.into_iter().try_for_each(|&v| check_finite(field, v))
}

impl RunConfig {
    /// Fills defaults that depend on other fields and validates.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        if self.tf.is_none() {
            log::info!("tf not given, using the default of {DEFAULT_TF} s");
            self.tf = Some(DEFAULT_TF);
        }
        match self.grid_nodes {
            Some(n) if self.solver.grid_nodes != DEFAULT_GRID_NODES && self.solver.grid_nodes != n => {
                return Err(invalid("grid_nodes", "conflicts with solver.grid_nodes"));
            }
            Some(n) => self.solver.grid_nodes = n,
            None => self.grid_nodes = Some(self.solver.grid_nodes),
        }
        self.validate()
    }

    pub fn tf(&self) -> f64 {
        self.tf.unwrap_or(DEFAULT_TF)
    }

    pub fn grid_nodes(&self) -> usize {
        self.grid_nodes.unwrap_or(self.solver.grid_nodes)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let tf = self.tf();
        check_finite("tf", tf)?;
        if tf <= 0.0 {
            return Err(invalid("tf", "must be positive"));
        }
        if self.grid_nodes() < 2 {
            return Err(invalid("grid_nodes", "must be at least 2"));
        }
        check_finite("cost_coeff", self.cost_coeff)?;
        check_finite("b_aux", self.b_aux)?;
        if self.b_aux < 0.0 {
            return Err(invalid("b_aux", "must be non-negative"));
        }
        check_finite("dwell_time", self.dwell_time)?;
        if self.dwell_time < 0.0 {
            return Err(invalid("dwell_time", "must be non-negative"));
        }
        check_all_finite("dwell_sweep", &self.dwell_sweep)?;
        if self.dwell_sweep.is_empty() || self.dwell_sweep.iter().any(|&t| t < 0.0) {
            return Err(invalid("dwell_sweep", "must be a non-empty list of non-negative times"));
        }
        if self.filter.n_sub == 0 {
            return Err(invalid("filter.n_sub", "must be at least 1"));
        }
        self.solver
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        match &self.problem {
            ProblemSpec::Builtin(spec) => {
                let fields = [
                    ("problem.builtin.mass", spec.mass),
                    ("problem.builtin.spring", spec.spring),
                    ("problem.builtin.b_damper", spec.b_damper),
                    ("problem.builtin.force", spec.force),
                    ("problem.builtin.target_position", spec.target_position),
                    ("problem.builtin.x0", spec.x0[0]),
                    ("problem.builtin.x0", spec.x0[1]),
                ];
                for (field, value) in fields {
                    check_finite(field, value)?;
                }
                if spec.mass <= 0.0 {
                    return Err(invalid("problem.builtin.mass", "must be positive"));
                }
            }
            ProblemSpec::Lti(spec) => spec.validate()?,
        }
        Ok(())
    }

    /// The switched problem with this config's horizon, weights and dwell
    /// time.
    pub fn build_problem(&self) -> Result<SwitchedProblem, ConfigError> {
        let built = match &self.problem {
            ProblemSpec::Builtin(spec) => mass_spring_damper(&BenchmarkParams {
                mass: spec.mass,
                spring: spec.spring,
                b_damper: spec.b_damper,
                force: spec.force,
                cost_coeff: self.cost_coeff,
                b_aux: self.b_aux,
                target_position: spec.target_position,
                x0: spec.x0,
                t0: 0.0,
                tf: self.tf(),
                dwell_time: self.dwell_time,
                variant: spec.variant,
            }),
            ProblemSpec::Lti(spec) => spec.build(self.tf(), self.cost_coeff).and_then(|p| {
                p.with_aux_coeff(self.b_aux)?.with_dwell_time(self.dwell_time)
            }),
        };
        built.map_err(|e| invalid("problem", e.to_string()))
    }
}

fn matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<Matrix, ConfigError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(field, format!("must be a {n}×{n} matrix")));
    }
    check_all_finite(field, rows.iter().flatten())?;
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector(field: &str, values: &[f64], n: usize) -> Result<Vector, ConfigError> {
    if values.len() != n {
        return Err(invalid(field, format!("must have {n} entries")));
    }
    check_all_finite(field, values)?;
    Ok(Vector::from_column_slice(values))
}

impl LtiSpec {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let n = self.dim();
        if n == 0 {
            return Err(invalid("problem.lti.a", "must not be empty"));
        }
        matrix("problem.lti.a", &self.a, n)?;
        vector("problem.lti.b", &self.b, n)?;
        vector("problem.lti.x0", &self.x0, n)?;
        check_all_finite("problem.lti.mode_inputs", &self.mode_inputs)?;
        if let Some(w) = &self.state_weight {
            matrix("problem.lti.state_weight", w, n)?;
        }
        if let Some(r) = &self.target {
            vector("problem.lti.target", r, n)?;
        }
        if let Some(t) = &self.terminal {
            matrix("problem.lti.terminal.weight", &t.weight, n)?;
            vector("problem.lti.terminal.target", &t.target, n)?;
        }
        Ok(())
    }

    fn build(&self, tf: f64, cost_coeff: f64) -> switchopt::Result<SwitchedProblem> {
        let n = self.dim();
        let fail = |e: ConfigError| switchopt::Error::InvalidProblem(e.to_string());
        let a = matrix("problem.lti.a", &self.a, n).map_err(fail)?;
        let b = vector("problem.lti.b", &self.b, n).map_err(fail)?;
        let weight = match &self.state_weight {
            Some(w) => matrix("problem.lti.state_weight", w, n).map_err(fail)?,
            None => Matrix::identity(n, n),
        } * cost_coeff;
        let target = match &self.target {
            Some(r) => Vector::from_column_slice(r),
            None => Vector::zeros(n),
        };
        let mode = |input: f64| {
            LtiMode::new(a.clone(), Matrix::zeros(n, 0))
                .with_offset(&b * input)
                .with_state_cost(weight.clone(), target.clone())
        };
        let mut problem = SwitchedProblem::new(
            0.0,
            tf,
            Vector::from_column_slice(&self.x0),
            Arc::new(mode(self.mode_inputs[0])),
            Arc::new(mode(self.mode_inputs[1])),
        )?;
        if let Some(t) = &self.terminal {
            problem = problem.with_terminal_cost(TerminalCost::Quadratic {
                weight: matrix("problem.lti.terminal.weight", &t.weight, n).map_err(fail)?,
                target: Vector::from_column_slice(&t.target),
            });
        }
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_benchmark() {
        let c = parse_config("{}").unwrap();
        assert_eq!(c.tf, Some(DEFAULT_TF));
        assert_eq!(c.grid_nodes(), 501);
        assert_eq!(c.problem, ProblemSpec::default());
        let p = c.build_problem().unwrap();
        assert_eq!(p.aux_coeff(), 1.0);
        assert_eq!(p.dwell_time(), 0.1);
    }

    #[test]
    fn grid_nodes_shorthand() {
        let c = parse_config(r#"{"grid_nodes": 101}"#).unwrap();
        assert_eq!(c.solver.grid_nodes, 101);
        let c = parse_config(r#"{"solver": {"grid_nodes": 201}}"#).unwrap();
        assert_eq!(c.grid_nodes(), 201);
        assert!(parse_config(r#"{"grid_nodes": 101, "solver": {"grid_nodes": 201}}"#).is_err());
    }

    #[test]
    fn lti_problem_is_built() {
        let text = r#"{"problem": {"lti": {"a": [[0, 1], [-0.1, -0.1]], "b": [0, 1],
            "mode_inputs": [-0.2, 0.2], "x0": [0, 0], "target": [1, 0]}}, "cost_coeff": 2}"#;
        let p = parse_config(text).unwrap().build_problem().unwrap();
        let x = Vector::from_vec(vec![0.0, 0.0]);
        let u = Vector::zeros(0);
        assert_eq!(p.dynamics(switchopt::Mode::One, 0.0, &x, &u).as_slice(), &[0.0, 0.2]);
        assert_eq!(p.running_cost(switchopt::Mode::Zero, 0.0, &x, &u), 2.0);
    }

    #[test]
    fn lti_dimension_errors_name_the_field() {
        let text = r#"{"problem": {"lti": {"a": [[0, 1], [0, 0]], "b": [0, 1, 2],
            "mode_inputs": [0, 1], "x0": [0, 0]}}}"#;
        match parse_config(text) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "problem.lti.b"),
            other => panic!("{other:?}"),
        }
    }
}
