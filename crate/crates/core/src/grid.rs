//! Space–time grids and functions tabulated on grid nodes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;

/// Spatial nodes `0 = x_0 < ... < x_J = 1` together with the largest time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub dt: f64,
}

impl Grid {
    pub const MIN_INTERVALS: usize = 8;

    pub fn uniform(intervals: usize, dt: f64) -> Result<Self> {
        let nodes = (0..=intervals).map(|j| j as f64 / intervals as f64).collect();
        Self::new(nodes, dt)
    }

    /// Chebyshev–Lobatto nodes `x_j = sin²(πj/(2J))`, clustered at both
    /// boundaries with spacing `O(J⁻²)` there.
    pub fn chebyshev(intervals: usize, dt: f64) -> Result<Self> {
        let jf = intervals as f64;
        let half = |j: usize| (std::f64::consts::FRAC_PI_2 * j as f64 / jf).sin().powi(2);
        let nodes = (0..=intervals)
            .map(|j| if 2 * j <= intervals { half(j) } else { 1.0 - half(intervals - j) })
            .collect();
        Self::new(nodes, dt)
    }

    pub fn new(nodes: Vec<f64>, dt: f64) -> Result<Self> {
        let g = Self { nodes, dt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n < Self::MIN_INTERVALS + 1 {
            return Err(invalid(format!("grid needs at least {} intervals", Self::MIN_INTERVALS)));
        }
        if self.nodes[0] != 0.0 || self.nodes[n - 1] != 1.0 {
            return Err(invalid("grid endpoints must be exactly 0 and 1"));
        }
        if self.nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("grid nodes must be strictly increasing"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of time steps needed to reach `t` without exceeding `dt`.
    pub fn steps_for(&self, t: f64) -> usize {
        if t <= 0.0 {
            0
        } else {
            ((t / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
        }
    }

    /// Tabulate a closed-form function on the nodes.
    pub fn tabulate<F: Fn(f64) -> f64>(&self, f: F) -> GridFn {
        GridFn::new(self.nodes.clone(), self.nodes.iter().map(|&x| f(x)).collect())
    }
}

/// Placement of the spatial nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    /// Chebyshev–Lobatto nodes; payoffs that disagree with the zero boundary
    /// data then cost `O(J⁻²)` instead of `O(J⁻¹)`.
    Chebyshev,
}

/// Solver resolution settings; a [`Grid`] is produced per time horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub spacing: Spacing,
    /// Number of uniform space intervals `J`.
    pub intervals: usize,
    /// Upper bound on the time step.
    pub dt_max: f64,
    /// Lower bound on the number of time steps for any horizon.
    pub min_steps: usize,
    /// Implicit-Euler substeps replacing the first Crank–Nicolson step.
    pub startup_substeps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            spacing: Spacing::Chebyshev,
            intervals: 800,
            dt_max: 1e-3,
            min_steps: 200,
            startup_substeps: 4,
        }
    }
}

impl GridConfig {
    pub fn coarse() -> Self {
        Self {
            spacing: Spacing::Chebyshev,
            intervals: 200,
            dt_max: 4e-3,
            min_steps: 50,
            startup_substeps: 4,
        }
    }

    /// The same configuration with spacing and time step halved.
    pub fn refined(self) -> Self {
        Self {
            intervals: self.intervals * 2,
            dt_max: self.dt_max / 2.0,
            min_steps: self.min_steps * 2,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals < Grid::MIN_INTERVALS {
            return Err(invalid(format!("intervals must be >= {}", Grid::MIN_INTERVALS)));
        }
        if !(self.dt_max > 0.0) || self.min_steps == 0 {
            return Err(invalid("dt_max must be > 0 and min_steps >= 1"));
        }
        Ok(())
    }

    /// Time step used for horizon `t`: `min(dt_max, t / min_steps)`.
    pub fn dt_for(&self, t: f64) -> f64 {
        if t > 0.0 {
            self.dt_max.min(t / self.min_steps as f64)
        } else {
            self.dt_max
        }
    }

    pub fn grid_for(&self, t: f64) -> Result<Grid> {
        self.validate()?;
        match self.spacing {
            Spacing::Uniform => Grid::uniform(self.intervals, self.dt_for(t)),
            Spacing::Chebyshev => Grid::chebyshev(self.intervals, self.dt_for(t)),
        }
    }
}

/// Values of a function on grid nodes with local cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl GridFn {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), values.len());
        assert!(nodes.len() >= 4, "cubic interpolation needs at least four nodes");
        Self { nodes, values }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> GridFn {
        let values = self.nodes.iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        GridFn::new(self.nodes.clone(), values)
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &GridFn, f: F) -> GridFn {
        debug_assert_eq!(self.nodes.len(), other.nodes.len());
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        GridFn::new(self.nodes.clone(), values)
    }

    /// `u(x) / x`, with the value at `x = 0` taken as the one-sided
    /// second-order derivative. Requires `u(0) = 0`.
    pub fn over_x(&self) -> GridFn {
        let mut out = self.values.clone();
        for j in 1..out.len() {
            out[j] = self.values[j] / self.nodes[j];
        }
        out[0] = left_derivative(&self.nodes[..3], &self.values[..3]);
        GridFn::new(self.nodes.clone(), out)
    }

    /// `u(x) / (1 - x)`, with the value at `x = 1` taken as minus the
    /// one-sided derivative. Requires `u(1) = 0`.
    pub fn over_one_minus_x(&self) -> GridFn {
        let n = self.values.len();
        let mut out = self.values.clone();
        for j in 0..n - 1 {
            out[j] = self.values[j] / (1.0 - self.nodes[j]);
        }
        // mirror the last three nodes so the same stencil applies
        let xs = [0.0, 1.0 - self.nodes[n - 2], 1.0 - self.nodes[n - 3]];
        let vs = [self.values[n - 1], self.values[n - 2], self.values[n - 3]];
        out[n - 1] = left_derivative(&xs, &vs);
        GridFn::new(self.nodes.clone(), out)
    }

    fn cell_of(&self, x: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(j) => j.min(n - 2),
            Err(j) => j.saturating_sub(1).min(n - 2),
        }
    }

    /// Cubic Lagrange interpolation through the four nodes around `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let cell = self.cell_of(x);
        let start = cell.saturating_sub(1).min(n - 4);
        let xs = &self.nodes[start..start + 4];
        let vs = &self.values[start..start + 4];
        let mut acc = 0.0;
        for i in 0..4 {
            let mut basis = 1.0;
            for k in 0..4 {
                if k != i {
                    basis *= (x - xs[k]) / (xs[i] - xs[k]);
                }
            }
            acc += basis * vs[i];
        }
        acc
    }

    /// `int_a^b u(x) w(x) dx` with a 4-point Gauss–Legendre rule on every
    /// grid cell (or part of a cell) inside `[a, b]`.
    pub fn integrate_range<W: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut weight: W) -> f64 {
        let rule = GaussLegendre::new(4);
        let mut breaks = vec![a];
        breaks.extend(self.nodes.iter().copied().filter(|&x| x > a && x < b));
        breaks.push(b);
        rule.integrate_panels(&breaks, |x| self.eval(x) * weight(x))
    }

    /// `int_0^1 u(x) w(x) dx`.
    pub fn integrate<W: FnMut(f64) -> f64>(&self, weight: W) -> f64 {
        self.integrate_range(0.0, 1.0, weight)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Derivative at `xs[0]` of the quadratic through three points.
fn left_derivative(xs: &[f64], vs: &[f64]) -> f64 {
    let (x0, x1, x2) = (xs[0], xs[1], xs[2]);
    let (h1, h2) = (x1 - x0, x2 - x0);
    // d/dx of Lagrange basis at x0
    let d0 = -(h1 + h2) / (h1 * h2);
    let d1 = h2 / (h1 * (h2 - h1));
    let d2 = -h1 / (h2 * (h2 - h1));
    d0 * vs[0] + d1 * vs[1] + d2 * vs[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_nodes_are_symmetric_and_clustered() {
        let g = Grid::chebyshev(800, 1e-3).unwrap();
        for j in 0..=800 {
            assert!((g.nodes[j] + g.nodes[800 - j] - 1.0).abs() < 1e-15);
        }
        assert!(g.nodes[1] < 4e-6 && (g.nodes[400] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::uniform(4, 1e-3).is_err());
        assert!(Grid::uniform(8, 0.0).is_err());
        assert!(Grid::new(vec![0.0, 0.1, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 1.0], 1e-3).is_err());
        let g = Grid::uniform(8, 1e-3).unwrap();
        assert_eq!(g.nodes[8], 1.0);
        assert_eq!(g.steps_for(0.0), 0);
        assert_eq!(g.steps_for(1e-3), 1);
        assert_eq!(g.steps_for(0.0105), 11);
    }

    #[test]
    fn dt_rule() {
        let c = GridConfig::default();
        assert_eq!(c.dt_for(5.0), 1e-3);
        assert!((c.dt_for(0.05) - 0.05 / 200.0).abs() < 1e-18);
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g = Grid::uniform(10, 1e-3).unwrap();
        let f = g.tabulate(|x| 1.0 - 2.0 * x + x * x * x);
        for &x in &[0.0, 0.033, 0.5, 0.77, 0.999, 1.0] {
            assert!((f.eval(x) - (1.0 - 2.0 * x + x * x * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn ratio_endpoints_are_second_order() {
        let g = Grid::uniform(100, 1e-3).unwrap();
        let u = g.tabulate(|x| x.sin() * (1.0 - x));
        let r = u.over_x();
        assert!((r.values()[0] - 1.0).abs() < 1e-3);
        let v = u.over_one_minus_x();
        assert!((v.values()[100] - 1f64.sin()).abs() < 1e-3);
    }

    #[test]
    fn integration_of_smooth_functions() {
        let g = Grid::uniform(50, 1e-3).unwrap();
        let u = g.tabulate(|x| x.exp());
        let got = u.integrate(|x| x);
        assert!((got - 1.0).abs() < 1e-8, "{got}");
        let part = u.integrate_range(0.25, 0.6, |_| 1.0);
        assert!((part - (0.6f64.exp() - 0.25f64.exp())).abs() < 1e-8);
    }
}
