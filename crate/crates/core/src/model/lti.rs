use std::sync::Arc;

use super::{fd_gradient, fd_jacobian, Matrix, ModeModel, Vector};

/// Affine dynamics `ẋ = A x + B u + c` with quadratic running cost
/// `(x − r)ᵀ Q (x − r) + uᵀ R u + l₀`.
///
/// `Q` need not be definite.
#[derive(Debug, Clone)]
pub struct LtiMode {
    a: Matrix,
    b: Matrix,
    offset: Vector,
    state_weight: Matrix,
    target: Vector,
    control_weight: Matrix,
    constant_cost: f64,
}

impl LtiMode {
    pub fn new(a: Matrix, b: Matrix) -> Self {
        assert!(a.is_square(), "A must be square");
        assert_eq!(a.nrows(), b.nrows(), "A and B row counts differ");
        let n = a.nrows();
        let m = b.ncols();
        Self {
            a,
            b,
            offset: Vector::zeros(n),
            state_weight: Matrix::zeros(n, n),
            target: Vector::zeros(n),
            control_weight: Matrix::zeros(m, m),
            constant_cost: 0.0,
        }
    }

    pub fn with_offset(mut self, offset: Vector) -> Self {
        assert_eq!(offset.len(), self.a.nrows());
        self.offset = offset;
        self
    }

    pub fn with_state_cost(mut self, weight: Matrix, target: Vector) -> Self {
        assert_eq!(weight.shape(), self.a.shape());
        assert_eq!(target.len(), self.a.nrows());
        self.state_weight = weight;
        self.target = target;
        self
    }

    pub fn with_control_cost(mut self, weight: Matrix) -> Self {
        assert_eq!(weight.shape(), (self.b.ncols(), self.b.ncols()));
        self.control_weight = weight;
        self
    }

    pub fn with_constant_cost(mut self, cost: f64) -> Self {
        self.constant_cost = cost;
        self
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn state_weight(&self) -> &Matrix {
        &self.state_weight
    }

    pub fn target(&self) -> &Vector {
        &self.target
    }
}

impl ModeModel for LtiMode {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn dynamics(&self, _t: f64, x: &Vector, u: &Vector) -> Vector {
        let mut dx = &self.a * x + &self.offset;
        if u.len() > 0 {
            dx += &self.b * u;
        }
        dx
    }

    fn running_cost(&self, _t: f64, x: &Vector, u: &Vector) -> f64 {
        let e = x - &self.target;
        let mut cost = e.dot(&(&self.state_weight * &e)) + self.constant_cost;
        if u.len() > 0 {
            cost += u.dot(&(&self.control_weight * u));
        }
        cost
    }

    fn dynamics_jacobian_x(&self, _t: f64, _x: &Vector, _u: &Vector) -> Matrix {
        self.a.clone()
    }

    fn dynamics_jacobian_u(&self, _t: f64, _x: &Vector, _u: &Vector) -> Matrix {
        self.b.clone()
    }

    fn running_cost_grad_x(&self, _t: f64, x: &Vector, _u: &Vector) -> Vector {
        let e = x - &self.target;
        (&self.state_weight + self.state_weight.transpose()) * e
    }

    fn running_cost_grad_u(&self, _t: f64, _x: &Vector, u: &Vector) -> Vector {
        (&self.control_weight + self.control_weight.transpose()) * u
    }
}

pub type DynamicsFn = Arc<dyn Fn(f64, &Vector, &Vector) -> Vector + Send + Sync>;
pub type CostFn = Arc<dyn Fn(f64, &Vector, &Vector) -> f64 + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(f64, &Vector, &Vector) -> Matrix + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, &Vector, &Vector) -> Vector + Send + Sync>;

/// A mode given by closures. Missing derivatives fall back to finite
/// differences.
#[derive(Clone)]
pub struct FnMode {
    n: usize,
    m: usize,
    f: DynamicsFn,
    l: CostFn,
    jac_x: Option<JacobianFn>,
    grad_lx: Option<GradientFn>,
}

impl FnMode {
    pub fn new<F, L>(state_dim: usize, control_dim: usize, f: F, l: L) -> Self
    where
        F: Fn(f64, &Vector, &Vector) -> Vector + Send + Sync + 'static,
        L: Fn(f64, &Vector, &Vector) -> f64 + Send + Sync + 'static,
    {
        Self {
            n: state_dim,
            m: control_dim,
            f: Arc::new(f),
            l: Arc::new(l),
            jac_x: None,
            grad_lx: None,
        }
    }

    pub fn with_jacobian_x<J>(mut self, jac: J) -> Self
    where
        J: Fn(f64, &Vector, &Vector) -> Matrix + Send + Sync + 'static,
    {
        self.jac_x = Some(Arc::new(jac));
        self
    }

    pub fn with_cost_gradient_x<G>(mut self, grad: G) -> Self
    where
        G: Fn(f64, &Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        self.grad_lx = Some(Arc::new(grad));
        self
    }
}

impl ModeModel for FnMode {
    fn state_dim(&self) -> usize {
        self.n
    }

    fn control_dim(&self) -> usize {
        self.m
    }

    fn dynamics(&self, t: f64, x: &Vector, u: &Vector) -> Vector {
        (self.f)(t, x, u)
    }

    fn running_cost(&self, t: f64, x: &Vector, u: &Vector) -> f64 {
        (self.l)(t, x, u)
    }

    fn dynamics_jacobian_x(&self, t: f64, x: &Vector, u: &Vector) -> Matrix {
        match &self.jac_x {
            Some(j) => j(t, x, u),
            None => fd_jacobian(|xx| (self.f)(t, xx, u), x, self.n),
        }
    }

    fn running_cost_grad_x(&self, t: f64, x: &Vector, u: &Vector) -> Vector {
        match &self.grad_lx {
            Some(g) => g(t, x, u),
            None => fd_gradient(|xx| (self.l)(t, xx, u), x),
        }
    }
}
