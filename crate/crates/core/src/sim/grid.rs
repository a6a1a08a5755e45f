use crate::error::{Error, Result};

/// Strictly increasing time nodes `t0 = s₀ < s₁ < … < s_M = tf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("nodes must be finite".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("nodes must increase strictly".into()));
        }
        Ok(Self { nodes })
    }

    /// `count` equally spaced nodes; the last one is exactly `tf`.
    pub fn uniform(t0: f64, tf: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {count}"
            )));
        }
        if !(t0 < tf) {
            return Err(Error::InvalidGrid(format!("empty horizon [{t0}, {tf}]")));
        }
        let intervals = (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count)
            .map(|k| t0 + (tf - t0) * (k as f64) / intervals)
            .collect();
        nodes[count - 1] = tf;
        Self::new(nodes)
    }

    /// Like [`Grid::uniform`] with the node count chosen so the step is at
    /// most `max_step`.
    pub fn with_max_step(t0: f64, tf: f64, max_step: f64) -> Result<Self> {
        let intervals = ((tf - t0) / max_step).ceil().max(1.0) as usize;
        Self::uniform(t0, tf, intervals + 1)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.nodes[0]
    }

    pub fn tf(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    pub fn max_step(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        for k in 0..self.intervals() {
            let h = 0.5 * self.step(k);
            w[k] += h;
            w[k + 1] += h;
        }
        w
    }

    fn snap_tolerance(&self) -> f64 {
        1e-11 * (self.tf() - self.t0())
    }

    /// Whether `t` coincides with a node (up to a tiny relative tolerance).
    pub fn has_node(&self, t: f64) -> bool {
        let tol = self.snap_tolerance();
        let i = self.nodes.partition_point(|&s| s < t);
        (i < self.nodes.len() && (self.nodes[i] - t).abs() <= tol)
            || (i > 0 && (t - self.nodes[i - 1]).abs() <= tol)
    }

    /// Grid with each time in `times` inserted as a node. Times outside the
    /// open horizon or already on the grid are ignored.
    pub fn refined(&self, times: &[f64]) -> Grid {
        let (t0, tf) = (self.t0(), self.tf());
        let mut extra: Vec<f64> = times
            .iter()
            .copied()
            .filter(|&t| t > t0 && t < tf && !self.has_node(t))
            .collect();
        if extra.is_empty() {
            return self.clone();
        }
        extra.sort_by(f64::total_cmp);
        let tol = self.snap_tolerance();
        let mut merged = Vec::with_capacity(self.len() + extra.len());
        let (mut i, mut j) = (0, 0);
        while i < self.nodes.len() || j < extra.len() {
            let next = if j >= extra.len() || (i < self.nodes.len() && self.nodes[i] <= extra[j]) {
                i += 1;
                self.nodes[i - 1]
            } else {
                j += 1;
                extra[j - 1]
            };
            match merged.last() {
                Some(&last) if next - last <= tol => {}
                _ => merged.push(next),
            }
        }
        // Keep tf exact even if an inserted time landed within tolerance of it.
        *merged.last_mut().expect("non-empty") = tf;
        Grid { nodes: merged }
    }

    /// Grid with the midpoint of every interval inserted.
    pub fn doubled(&self) -> Grid {
        let mut nodes = Vec::with_capacity(2 * self.len() - 1);
        for k in 0..self.intervals() {
            nodes.push(self.nodes[k]);
            nodes.push(0.5 * (self.nodes[k] + self.nodes[k + 1]));
        }
        nodes.push(self.tf());
        Grid { nodes }
    }

    /// Index `k` of the interval `[s_k, s_{k+1}]` containing `t` (clamped).
    pub fn locate(&self, t: f64) -> usize {
        let i = self.nodes.partition_point(|&s| s <= t);
        i.clamp(1, self.intervals()) - 1
    }

    /// Linear interpolation weight: `t = (1 − w)·s_k + w·s_{k+1}`.
    pub(crate) fn bracket(&self, t: f64) -> (usize, f64) {
        let k = self.locate(t);
        let w = ((t - self.nodes[k]) / self.step(k)).clamp(0.0, 1.0);
        (k, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_endpoints_exact() {
        let g = Grid::uniform(0.0, 10.0, 501).unwrap();
        assert_eq!(g.len(), 501);
        assert_eq!(g.t0(), 0.0);
        assert_eq!(g.tf(), 10.0);
        assert!((g.step(3) - 0.02).abs() < 1e-15);
        assert!(Grid::uniform(0.0, 1.0, 1).is_err());
        assert!(Grid::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn refinement_inserts_interior_times_once() {
        let g = Grid::uniform(0.0, 1.0, 5).unwrap();
        let r = g.refined(&[0.3, 0.3, 0.5, -1.0, 1.0, 0.0]);
        assert_eq!(r.nodes(), &[0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert!(r.has_node(0.3));
        assert_eq!(r.refined(&[0.3]), r);
    }

    #[test]
    fn locate_and_bracket() {
        let g = Grid::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(g.locate(0.0), 0);
        assert_eq!(g.locate(0.25), 1);
        assert_eq!(g.locate(1.0), 3);
        let (k, w) = g.bracket(0.375);
        assert_eq!(k, 1);
        assert!((w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_weights_sum_to_horizon() {
        let g = Grid::new(vec![0.0, 0.1, 0.5, 2.0]).unwrap();
        let sum: f64 = g.trapezoid_weights().iter().sum();
        assert!((sum - 2.0).abs() < 1e-15);
        assert_eq!(g.doubled().len(), 7);
    }
}
