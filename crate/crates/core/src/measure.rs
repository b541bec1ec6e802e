//! The ancestral measure `ν(dx)` on allele frequencies.

use serde::{Deserialize, Serialize};

use crate::diffusion::ScaleSpeed;
use crate::error::{invalid, Result};
use crate::quadrature::integrate_refined;
use crate::special::exprel;

/// Initial measure, stored through the bounded product `x ν'(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialMeasure {
    Zero,
    /// The stationary measure `θ e^{γx}(s(1)-s(x)) / (x(1-x)s(1)) dx`.
    Equilibrium { theta: f64, gamma: f64 },
    /// Values of `x ν'(x)` on increasing nodes spanning `[0,1]`, linearly
    /// interpolated.
    Tabulated { nodes: Vec<f64>, density_over_x: Vec<f64> },
}

impl InitialMeasure {
    pub fn equilibrium(theta: f64, gamma: f64) -> Result<Self> {
        let m = InitialMeasure::Equilibrium { theta, gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialMeasure::Zero => Ok(()),
            InitialMeasure::Equilibrium { theta, gamma } => {
                if !(*theta >= 0.0 && theta.is_finite()) {
                    return Err(invalid(format!("theta must be finite and >= 0, got {theta}")));
                }
                if !gamma.is_finite() {
                    return Err(invalid("gamma must be finite"));
                }
                Ok(())
            }
            InitialMeasure::Tabulated { nodes, density_over_x } => {
                if nodes.len() < 2 || nodes.len() != density_over_x.len() {
                    return Err(invalid("tabulated measure needs matching nodes and values (>= 2)"));
                }
                if nodes[0] != 0.0 || nodes[nodes.len() - 1] != 1.0 {
                    return Err(invalid("tabulated measure nodes must span [0,1]"));
                }
                if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(invalid("tabulated measure nodes must be strictly increasing"));
                }
                if density_over_x.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(invalid("tabulated measure values must be finite and >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            InitialMeasure::Zero => true,
            InitialMeasure::Equilibrium { theta, .. } => *theta == 0.0,
            InitialMeasure::Tabulated { density_over_x, .. } => density_over_x.iter().all(|v| *v == 0.0),
        }
    }

    /// The same measure multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            InitialMeasure::Zero => InitialMeasure::Zero,
            InitialMeasure::Equilibrium { theta, gamma } => InitialMeasure::Equilibrium {
                theta: theta * factor,
                gamma: *gamma,
            },
            InitialMeasure::Tabulated { nodes, density_over_x } => InitialMeasure::Tabulated {
                nodes: nodes.clone(),
                density_over_x: density_over_x.iter().map(|v| v * factor).collect(),
            },
        }
    }

    /// `x ν'(x)` for `x` in `[0,1]`.
    pub fn x_density(&self, x: f64) -> f64 {
        match self {
            InitialMeasure::Zero => 0.0,
            InitialMeasure::Equilibrium { theta, gamma } => {
                // θ e^{γx}(s(1)-s(x))/((1-x)s(1)) simplifies to θ exprel(-γ(1-x))/s(1)
                theta * exprel(-gamma * (1.0 - x)) / ScaleSpeed::new(*gamma).s1()
            }
            InitialMeasure::Tabulated { nodes, density_over_x } => {
                let x = x.clamp(0.0, 1.0);
                let j = nodes.partition_point(|&n| n <= x).clamp(1, nodes.len() - 1);
                let (a, b) = (nodes[j - 1], nodes[j]);
                let w = (x - a) / (b - a);
                density_over_x[j - 1] * (1.0 - w) + density_over_x[j] * w
            }
        }
    }

    /// Lebesgue density `ν'(x)` on `(0,1)`.
    pub fn density(&self, x: f64) -> f64 {
        self.x_density(x) / x
    }

    /// Density of `ν` with respect to the speed measure of selection `gamma`:
    /// `x(1-x) e^{-γx} ν'(x)`, bounded on `[0,1]`.
    pub fn density_against_speed(&self, x: f64, gamma: f64) -> f64 {
        self.x_density(x) * (1.0 - x) * (-gamma * x).exp()
    }

    /// `∫ φ dν` given `φ(x)/x`, which must be bounded near 0.
    pub fn integrate_over_x<F: Fn(f64) -> f64>(&self, phi_over_x: F) -> f64 {
        if matches!(self, InitialMeasure::Zero) {
            return 0.0;
        }
        integrate_refined(0.0, 1.0, |x| phi_over_x(x) * self.x_density(x))
    }

    /// `∫ x ν(dx)`, finite for every admissible measure.
    pub fn first_moment(&self) -> f64 {
        self.integrate_over_x(|_| 1.0)
    }
}
