//! Trapezoidal direct collocation of the modified embedded problem.
//!
//! Decision vector, node by node: `[u₀ (m), u₁ (m), v, x (n)]`. The
//! objective is the trapezoidal quadrature of `L + L_v` plus `K(x_M)`; the
//! equality constraints are the collocation defects
//! `d_k = x_{k+1} − x_k − (h_k/2)(f_k + f_{k+1})`.

use crate::error::{Error, Result};
use crate::model::{Matrix, Mode, SwitchedProblem, Vector};
use crate::sim::{
    aux_cost, aux_cost_derivative, embedded_rhs_unchecked, EmbeddedControl, Grid,
};

pub struct Transcription<'a> {
    problem: &'a SwitchedProblem,
    grid: Grid,
    weights: Vec<f64>,
    n: usize,
    m: usize,
}

/// Per-node values and first derivatives.
struct NodeEval {
    f: Vector,
    df_dv: Vector,
    jac_x: Matrix,
    /// ∂f/∂u₀ and ∂f/∂u₁ (already scaled by 1 − v and v)
    jac_u: [Matrix; 2],
    cost: f64,
    dl_dv: f64,
    dl_dx: Vector,
    dl_du: [Vector; 2],
}

pub(crate) struct Decoded {
    pub u: [Vector; 2],
    pub v: f64,
    pub x: Vector,
}

impl<'a> Transcription<'a> {
    pub fn new(problem: &'a SwitchedProblem, grid: Grid) -> Result<Self> {
        if grid.t0() != problem.t0() || grid.tf() != problem.tf() {
            return Err(Error::InvalidGrid("grid does not span the problem horizon".into()));
        }
        Ok(Self {
            weights: grid.trapezoid_weights(),
            n: problem.state_dim(),
            m: problem.control_dim(),
            problem,
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn problem(&self) -> &SwitchedProblem {
        self.problem
    }

    /// Variables per node: `2m + 1 + n`.
    pub fn block(&self) -> usize {
        2 * self.m + 1 + self.n
    }

    pub fn decision_dim(&self) -> usize {
        self.grid.len() * self.block()
    }

    pub fn defect_count(&self) -> usize {
        self.grid.intervals() * self.n
    }

    pub fn v_index(&self, k: usize) -> usize {
        k * self.block() + 2 * self.m
    }

    pub fn x_index(&self, k: usize) -> usize {
        k * self.block() + 2 * self.m + 1
    }

    fn u_index(&self, k: usize, mode: Mode) -> usize {
        k * self.block() + mode.index() * self.m
    }

    pub(crate) fn decode(&self, z: &[f64], k: usize) -> Decoded {
        let (m, n) = (self.m, self.n);
        let u0 = self.u_index(k, Mode::Zero);
        let u1 = self.u_index(k, Mode::One);
        let xi = self.x_index(k);
        Decoded {
            u: [
                Vector::from_column_slice(&z[u0..u0 + m]),
                Vector::from_column_slice(&z[u1..u1 + m]),
            ],
            v: z[self.v_index(k)],
            x: Vector::from_column_slice(&z[xi..xi + n]),
        }
    }

    pub fn state(&self, z: &[f64], k: usize) -> Vector {
        let xi = self.x_index(k);
        Vector::from_column_slice(&z[xi..xi + self.n])
    }

    /// Box bounds: `v ∈ [0, 1]`, controls in the problem's box, `x_0` pinned
    /// to the initial state, other states free.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.decision_dim();
        let mut lo = vec![f64::NEG_INFINITY; dim];
        let mut hi = vec![f64::INFINITY; dim];
        for k in 0..self.grid.len() {
            for mode in Mode::ALL {
                let base = self.u_index(k, mode);
                for i in 0..self.m {
                    lo[base + i] = self.problem.control_lo()[i];
                    hi[base + i] = self.problem.control_hi()[i];
                }
            }
            lo[self.v_index(k)] = 0.0;
            hi[self.v_index(k)] = 1.0;
        }
        let x0 = self.x_index(0);
        for i in 0..self.n {
            lo[x0 + i] = self.problem.x0()[i];
            hi[x0 + i] = self.problem.x0()[i];
        }
        (lo, hi)
    }

    fn eval_node(&self, z: &[f64], k: usize, derivatives: bool) -> NodeEval {
        let p = self.problem;
        let t = self.grid.nodes()[k];
        let d = self.decode(z, k);
        let v = d.v;
        let f = embedded_rhs_unchecked(p, t, &d.x, &d.u[0], &d.u[1], v);
        if !derivatives {
            let l0 = p.running_cost(Mode::Zero, t, &d.x, &d.u[0]);
            let l1 = p.running_cost(Mode::One, t, &d.x, &d.u[1]);
            return NodeEval {
                f,
                df_dv: Vector::zeros(0),
                jac_x: Matrix::zeros(0, 0),
                jac_u: [Matrix::zeros(0, 0), Matrix::zeros(0, 0)],
                cost: (1.0 - v) * l0 + v * l1 + aux_cost(p.aux_coeff(), v),
                dl_dv: 0.0,
                dl_dx: Vector::zeros(0),
                dl_du: [Vector::zeros(0), Vector::zeros(0)],
            };
        }
        let modes = [p.mode(Mode::Zero), p.mode(Mode::One)];
        let share = [1.0 - v, v];
        let f_mode: Vec<Vector> = (0..2).map(|i| modes[i].dynamics(t, &d.x, &d.u[i])).collect();
        let l_mode: Vec<f64> = (0..2).map(|i| modes[i].running_cost(t, &d.x, &d.u[i])).collect();
        let mut jac_x = Matrix::zeros(self.n, self.n);
        let mut dl_dx = Vector::zeros(self.n);
        for i in 0..2 {
            if share[i] != 0.0 {
                jac_x += modes[i].dynamics_jacobian_x(t, &d.x, &d.u[i]) * share[i];
                dl_dx += modes[i].running_cost_grad_x(t, &d.x, &d.u[i]) * share[i];
            }
        }
        let (jac_u, dl_du) = if self.m == 0 {
            (
                [Matrix::zeros(self.n, 0), Matrix::zeros(self.n, 0)],
                [Vector::zeros(0), Vector::zeros(0)],
            )
        } else {
            let ju = |i: usize| modes[i].dynamics_jacobian_u(t, &d.x, &d.u[i]) * share[i];
            let lu = |i: usize| modes[i].running_cost_grad_u(t, &d.x, &d.u[i]) * share[i];
            ([ju(0), ju(1)], [lu(0), lu(1)])
        };
        NodeEval {
            f,
            df_dv: &f_mode[1] - &f_mode[0],
            jac_x,
            jac_u,
            cost: share[0] * l_mode[0] + share[1] * l_mode[1] + aux_cost(p.aux_coeff(), v),
            dl_dv: l_mode[1] - l_mode[0] + aux_cost_derivative(p.aux_coeff(), v),
            dl_dx,
            dl_du,
        }
    }

    fn terminal_state(&self, z: &[f64]) -> Vector {
        self.state(z, self.grid.len() - 1)
    }

    /// Trapezoidal `∫ (L + L_v) dt + K`.
    pub fn objective(&self, z: &[f64]) -> f64 {
        let running: f64 = (0..self.grid.len())
            .map(|k| self.weights[k] * self.eval_node(z, k, false).cost)
            .sum();
        running + self.problem.terminal_value(&self.terminal_state(z))
    }

    /// Isolated trapezoidal `∫ L_v dt`.
    pub fn aux_integral(&self, z: &[f64]) -> f64 {
        (0..self.grid.len())
            .map(|k| self.weights[k] * aux_cost(self.problem.aux_coeff(), z[self.v_index(k)]))
            .sum()
    }

    fn defects_from(&self, z: &[f64], f: &[Vector]) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.defect_count());
        for k in 0..self.grid.intervals() {
            let h = self.grid.step(k);
            let (xa, xb) = (self.x_index(k), self.x_index(k + 1));
            for i in 0..self.n {
                d.push(z[xb + i] - z[xa + i] - 0.5 * h * (f[k][i] + f[k + 1][i]));
            }
        }
        d
    }

    pub fn defects(&self, z: &[f64]) -> Vec<f64> {
        let f: Vec<Vector> = (0..self.grid.len())
            .map(|k| self.eval_node(z, k, false).f)
            .collect();
        self.defects_from(z, &f)
    }

    /// Largest defect, scaled by the interval length (a rate residual).
    pub fn max_scaled_defect(&self, z: &[f64]) -> f64 {
        let d = self.defects(z);
        d.chunks(self.n.max(1))
            .enumerate()
            .map(|(k, c)| c.iter().fold(0.0f64, |a, v| a.max(v.abs())) / self.grid.step(k))
            .fold(0.0, f64::max)
    }

    pub fn objective_gradient(&self, z: &[f64]) -> Vec<f64> {
        self.augmented(z, 0.0, None).1
    }

    /// Value and gradient of
    /// `Φ(z) = J(z) + Σ λ_kᵀ d_k + (ρ/2) Σ ‖d_k‖²`.
    pub fn augmented(&self, z: &[f64], weight: f64, multipliers: Option<&[f64]>) -> (f64, Vec<f64>) {
        let nodes: Vec<NodeEval> = (0..self.grid.len()).map(|k| self.eval_node(z, k, true)).collect();
        self.augmented_with(&nodes, z, weight, multipliers)
    }

    fn augmented_with(
        &self,
        nodes: &[NodeEval],
        z: &[f64],
        weight: f64,
        multipliers: Option<&[f64]>,
    ) -> (f64, Vec<f64>) {
        let (n, m) = (self.n, self.m);
        let f: Vec<Vector> = nodes.iter().map(|e| e.f.clone()).collect();
        let d = self.defects_from(z, &f);

        let mut value = 0.0;
        let mut grad = vec![0.0; z.len()];
        for (k, e) in nodes.iter().enumerate() {
            let w = self.weights[k];
            value += w * e.cost;
            grad[self.v_index(k)] += w * e.dl_dv;
            let xi = self.x_index(k);
            for i in 0..n {
                grad[xi + i] += w * e.dl_dx[i];
            }
            for mode in Mode::ALL {
                let ui = self.u_index(k, mode);
                for i in 0..m {
                    grad[ui + i] += w * e.dl_du[mode.index()][i];
                }
            }
        }
        let last = self.grid.len() - 1;
        let xf = self.terminal_state(z);
        value += self.problem.terminal_value(&xf);
        let gk = self.problem.terminal_gradient(&xf);
        for i in 0..n {
            grad[self.x_index(last) + i] += gk[i];
        }

        // μ_k = λ_k + ρ d_k drives every defect term of the gradient.
        let mu: Vec<f64> = match multipliers {
            Some(lam) => d.iter().zip(lam).map(|(di, li)| li + weight * di).collect(),
            None => d.iter().map(|di| weight * di).collect(),
        };
        value += match multipliers {
            Some(lam) => d.iter().zip(lam).map(|(di, li)| li * di).sum::<f64>(),
            None => 0.0,
        };
        value += 0.5 * weight * d.iter().map(|di| di * di).sum::<f64>();
        if mu.iter().all(|v| *v == 0.0) {
            return (value, grad);
        }

        for (k, e) in nodes.iter().enumerate() {
            // ν_k = Σ over adjacent intervals of (h/2) μ
            let mut nu = Vector::zeros(n);
            let xi = self.x_index(k);
            if k > 0 {
                let h = self.grid.step(k - 1);
                let mu_prev = &mu[(k - 1) * n..k * n];
                for i in 0..n {
                    nu[i] += 0.5 * h * mu_prev[i];
                    grad[xi + i] += mu_prev[i];
                }
            }
            if k < last {
                let h = self.grid.step(k);
                let mu_next = &mu[k * n..(k + 1) * n];
                for i in 0..n {
                    nu[i] += 0.5 * h * mu_next[i];
                    grad[xi + i] -= mu_next[i];
                }
            }
            let jx = e.jac_x.tr_mul(&nu);
            for i in 0..n {
                grad[xi + i] -= jx[i];
            }
            grad[self.v_index(k)] -= e.df_dv.dot(&nu);
            for mode in Mode::ALL {
                let ju = e.jac_u[mode.index()].tr_mul(&nu);
                let ui = self.u_index(k, mode);
                for i in 0..m {
                    grad[ui + i] -= ju[i];
                }
            }
        }
        (value, grad)
    }

    /// Variables per node once the states are eliminated: `2m + 1`.
    pub fn control_block(&self) -> usize {
        2 * self.m + 1
    }

    pub fn control_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.bounds();
        (self.compress(&lo), self.compress(&hi))
    }

    /// Control part of a full decision vector.
    pub fn compress(&self, z: &[f64]) -> Vec<f64> {
        let (cb, b) = (self.control_block(), self.block());
        (0..self.grid.len())
            .flat_map(|k| z[k * b..k * b + cb].iter().copied())
            .collect()
    }

    /// Writes the controls `w` into `z` and re-solves the states.
    pub fn expand_into(&self, w: &[f64], z: &mut [f64]) -> Result<()> {
        let (cb, b) = (self.control_block(), self.block());
        for k in 0..self.grid.len() {
            z[k * b..k * b + cb].copy_from_slice(&w[k * cb..(k + 1) * cb]);
        }
        self.restore_states(z)
    }

    /// Objective, reduced gradient (full layout, state entries zero up to
    /// round-off) and discrete adjoint multipliers, for a point whose
    /// states satisfy the collocation equations.
    pub fn reduced(&self, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let nodes: Vec<NodeEval> = (0..self.grid.len()).map(|k| self.eval_node(z, k, true)).collect();
        let last = self.grid.len() - 1;
        let identity = Matrix::identity(n, n);
        let mut lambda = vec![0.0; self.defect_count()];
        // Stationarity in x_k, walking backwards:
        // (I − h_{k−1}/2 F_k)ᵀ λ_{k−1} = (I + h_k/2 F_k)ᵀ λ_k − g_k.
        let mut next = Vector::zeros(n);
        for k in (1..=last).rev() {
            let e = &nodes[k];
            let mut g = &e.dl_dx * self.weights[k];
            if k == last {
                g += self.problem.terminal_gradient(&self.state(z, k));
            }
            let mut rhs = -g;
            if k < last {
                let h = self.grid.step(k);
                rhs += &next + e.jac_x.tr_mul(&next) * (0.5 * h);
            }
            let h_prev = self.grid.step(k - 1);
            let lhs = (&identity - &e.jac_x * (0.5 * h_prev)).transpose();
            let lam = lhs.lu().solve(&rhs).unwrap_or_else(|| Vector::from_element(n, f64::NAN));
            lambda[(k - 1) * n..k * n].copy_from_slice(lam.as_slice());
            next = lam;
        }
        let (value, grad) = self.augmented_with(&nodes, z, 0.0, Some(&lambda));
        (value, grad, lambda)
    }

    /// Switching function `φ_k = ∂(L + ⟨λ, f⟩)/∂v` at every node, recovered
    /// from a reduced gradient by removing the quadrature weight and the
    /// auxiliary term.
    pub fn switching_function(&self, z: &[f64], reduced_grad: &[f64]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| {
                let v = z[self.v_index(k)];
                reduced_grad[self.v_index(k)] / self.weights[k]
                    - aux_cost_derivative(self.problem.aux_coeff(), v)
            })
            .collect()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    /// Controls at box midpoints, `v = v_init`, states by solving the
    /// collocation equations forward.
    pub fn initial_guess(&self, v_init: f64) -> Result<Vec<f64>> {
        let mut z = vec![0.0; self.decision_dim()];
        let mid = self.problem.control_midpoint();
        for k in 0..self.grid.len() {
            for mode in Mode::ALL {
                let ui = self.u_index(k, mode);
                z[ui..ui + self.m].copy_from_slice(mid.as_slice());
            }
            z[self.v_index(k)] = v_init;
        }
        self.restore_states(&mut z)?;
        Ok(z)
    }

    /// Overwrites the states so that every defect vanishes for the current
    /// controls (Newton on each implicit trapezoidal step).
    pub fn restore_states(&self, z: &mut [f64]) -> Result<()> {
        let n = self.n;
        let x0 = self.x_index(0);
        z[x0..x0 + n].copy_from_slice(self.problem.x0().as_slice());
        let nodes = self.grid.nodes();
        let identity = Matrix::identity(n, n);
        for k in 0..self.grid.intervals() {
            let h = self.grid.step(k);
            let a = self.decode(z, k);
            let b = self.decode(z, k + 1);
            let fa = embedded_rhs_unchecked(self.problem, nodes[k], &a.x, &a.u[0], &a.u[1], a.v);
            let rhs_b = |x: &Vector| {
                embedded_rhs_unchecked(self.problem, nodes[k + 1], x, &b.u[0], &b.u[1], b.v)
            };
            // Explicit Heun predictor.
            let pred = &a.x + &fa * h;
            let mut x = &a.x + (&fa + rhs_b(&pred)) * (0.5 * h);
            for _ in 0..30 {
                let residual = &x - &a.x - (&fa + rhs_b(&x)) * (0.5 * h);
                if residual.amax() <= 1e-14 * (1.0 + x.amax()) {
                    break;
                }
                let jac = self.embedded_jacobian_x(nodes[k + 1], &x, &b);
                let step = (&identity - jac * (0.5 * h))
                    .lu()
                    .solve(&residual)
                    .ok_or_else(|| Error::SolverDiverged(format!("singular collocation step {k}")))?;
                x -= step;
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverDiverged(format!(
                    "non-finite state while restoring node {}",
                    k + 1
                )));
            }
            let xi = self.x_index(k + 1);
            z[xi..xi + n].copy_from_slice(x.as_slice());
        }
        Ok(())
    }

    fn embedded_jacobian_x(&self, t: f64, x: &Vector, d: &Decoded) -> Matrix {
        let p = self.problem;
        let mut j = Matrix::zeros(self.n, self.n);
        if d.v != 1.0 {
            j += p.mode(Mode::Zero).dynamics_jacobian_x(t, x, &d.u[0]) * (1.0 - d.v);
        }
        if d.v != 0.0 {
            j += p.mode(Mode::One).dynamics_jacobian_x(t, x, &d.u[1]) * d.v;
        }
        j
    }

    pub fn control(&self, z: &[f64]) -> Result<EmbeddedControl> {
        let len = self.grid.len();
        let (mut u0, mut u1, mut v) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        for k in 0..len {
            let d = self.decode(z, k);
            let [a, b] = d.u;
            u0.push(a);
            u1.push(b);
            v.push(d.v.clamp(0.0, 1.0));
        }
        EmbeddedControl::new(self.grid.clone(), u0, u1, v)
    }

    pub fn states(&self, z: &[f64]) -> Vec<Vector> {
        (0..self.grid.len()).map(|k| self.state(z, k)).collect()
    }
}
