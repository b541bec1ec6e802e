//! Scale function, speed measure and Green kernels of the limiting diffusion
//! `L = x(1-x) d²/dx² + γ x(1-x) d/dx` and of its fixation-conditioned dual.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::special::exprel;

/// Scale `s(x) = (1 - e^{-γx})/γ` and speed density `e^{γx}/(x(1-x))`.
///
/// All formulas go through [`exprel`], which carries the neutral branch
/// `s(x) = x` without cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpeed {
    pub gamma: f64,
}

impl ScaleSpeed {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    pub fn s(&self, x: f64) -> f64 {
        x * exprel(-self.gamma * x)
    }

    pub fn s1(&self) -> f64 {
        self.s(1.0)
    }

    /// `s'(x) = e^{-γx}`.
    pub fn s_prime(&self, x: f64) -> f64 {
        (-self.gamma * x).exp()
    }

    /// `s(x)/x`, bounded and equal to 1 at the origin.
    pub fn s_over_x(&self, x: f64) -> f64 {
        exprel(-self.gamma * x)
    }

    /// `s(1) - s(x)`, computed without cancellation near `x = 1`.
    pub fn s_complement(&self, x: f64) -> f64 {
        let y = 1.0 - x;
        (-self.gamma).exp() * y * exprel(self.gamma * y)
    }

    /// `(s(1) - s(x)) / (1 - x)`.
    pub fn s_complement_over_one_minus_x(&self, x: f64) -> f64 {
        (-self.gamma).exp() * exprel(self.gamma * (1.0 - x))
    }

    /// Speed density `e^{γx}/(x(1-x))` on the open interval.
    pub fn speed_density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(invalid(format!("speed density is defined on (0,1), got x = {x}")));
        }
        Ok(self.speed_density_unchecked(x))
    }

    pub(crate) fn speed_density_unchecked(&self, x: f64) -> f64 {
        (self.gamma * x).exp() / (x * (1.0 - x))
    }

    /// `P_x(T_1 < T_0) = s(x)/s(1)`.
    pub fn ultimate_fixation(&self, x: f64) -> f64 {
        self.s(x) / self.s1()
    }

    /// Green kernel `(s(1) - s(x∨y)) (s(x∧y) - s(0)) / (s(1) - s(0))`.
    pub fn green_kernel(&self, x: f64, y: f64) -> f64 {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        self.s_complement(hi) * self.s(lo) / self.s1()
    }

    /// Dual scale `-1/s(x)`.
    pub fn dual_scale(&self, x: f64) -> f64 {
        -1.0 / self.s(x)
    }

    /// Dual speed density `s(x)^2 e^{γx}/(x(1-x))`, bounded near 0.
    pub fn dual_speed_density(&self, x: f64) -> f64 {
        let r = self.s_over_x(x);
        r * r * x * (self.gamma * x).exp() / (1.0 - x)
    }

    /// Dual Green kernel `1/s(x∨y) - 1/s(1)`.
    pub fn dual_green_kernel(&self, x: f64, y: f64) -> f64 {
        1.0 / self.s(x.max(y)) - 1.0 / self.s1()
    }

    /// Drift of the conditioned process, `γx(1-x)(1+e^{-γx})/(1-e^{-γx})`,
    /// with the limit 2 at `x = 0`. Kept as a cross-check on the dual.
    pub fn dual_drift(&self, x: f64) -> f64 {
        let g = self.gamma;
        if x == 0.0 {
            return 2.0;
        }
        // γx / (1 - e^{-γx}) = 1 / exprel(-γx)
        (1.0 - x) * (1.0 + (-g * x).exp()) / exprel(-g * x)
    }
}

/// `s(x)` for selection coefficient `gamma`.
pub fn scale_fn(x: f64, gamma: f64) -> f64 {
    ScaleSpeed::new(gamma).s(x)
}

/// Speed density `e^{γx}/(x(1-x))`; rejects the endpoints.
pub fn speed_density(x: f64, gamma: f64) -> Result<f64> {
    ScaleSpeed::new(gamma).speed_density(x)
}

/// `s(x)/s(1)`.
pub fn ultimate_fixation(x: f64, gamma: f64) -> f64 {
    ScaleSpeed::new(gamma).ultimate_fixation(x)
}

pub fn green_kernel(x: f64, y: f64, gamma: f64) -> f64 {
    ScaleSpeed::new(gamma).green_kernel(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neutral_scale_is_identity() {
        for &x in &[0.0, 0.1, 0.5, 1.0] {
            assert_eq!(scale_fn(x, 0.0), x);
        }
        assert!((scale_fn(0.5, 1e-10) - 0.5).abs() < 1e-10);
        assert!((scale_fn(0.5, -1e-10) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn scale_at_one() {
        assert!((scale_fn(1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((scale_fn(1.0, 1.0) - 0.632121).abs() < 1e-6);
    }

    #[test]
    fn scale_properties() {
        for &g in &[-5.0, -1.0, 0.0, 0.3, 8.0] {
            let ss = ScaleSpeed::new(g);
            assert_eq!(ss.s(0.0), 0.0);
            // s'(0) = 1
            let h = 1e-6;
            assert!(((ss.s(h) - ss.s(0.0)) / h - 1.0).abs() < 1e-4 * (1.0 + g.abs()));
            let mut prev = -1.0;
            for j in 0..=100 {
                let v = ss.s(j as f64 / 100.0);
                assert!(v > prev);
                prev = v;
            }
            for &x in &[0.0, 0.2, 0.9, 1.0] {
                assert!((ss.s_complement(x) - (ss.s1() - ss.s(x))).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn speed_density_rejects_endpoints() {
        assert!(speed_density(0.0, 1.0).is_err());
        assert!(speed_density(1.0, 1.0).is_err());
        assert!((speed_density(0.5, 0.0).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn fixation_probabilities() {
        assert_eq!(ultimate_fixation(0.3, 0.0), 0.3);
        assert!((ultimate_fixation(1.0, 3.0) - 1.0).abs() < 1e-15);
        let expected = (1.0 - (-1.0f64).exp()) / (1.0 - (-2.0f64).exp());
        assert!((ultimate_fixation(0.5, 2.0) - expected).abs() < 1e-15);
        assert!((expected - 0.731059).abs() < 1e-6);
    }

    #[test]
    fn green_kernel_values() {
        assert!((green_kernel(0.5, 0.5, 0.0) - 0.25).abs() < 1e-15);
        assert!((green_kernel(0.3, 0.7, 2.0) - green_kernel(0.7, 0.3, 2.0)).abs() < 1e-16);
        // (s(1)-s(0.7)) s(0.3) / s(1) at γ = 2
        let s = |x: f64| (1.0 - (-2.0 * x).exp()) / 2.0;
        let expected = (s(1.0) - s(0.7)) * s(0.3) / s(1.0);
        assert!((green_kernel(0.3, 0.7, 2.0) - expected).abs() < 1e-15);
        assert!((expected - 0.029029).abs() < 1e-6);
    }

    #[test]
    fn dual_green_is_scaled_primal_green() {
        let ss = ScaleSpeed::new(1.5);
        for &(x, y) in &[(0.2, 0.6), (0.7, 0.1), (0.5, 0.5)] {
            let lhs = ss.dual_green_kernel(x, y);
            let rhs = ss.green_kernel(x, y) / (ss.s(x) * ss.s(y));
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_drift_limit_at_zero() {
        for &g in &[-3.0, 0.0, 2.0] {
            let ss = ScaleSpeed::new(g);
            assert!((ss.dual_drift(1e-9) - 2.0).abs() < 1e-6);
        }
        // γ = 0: b(x) = 2(1-x)
        assert!((ScaleSpeed::new(0.0).dual_drift(0.25) - 1.5).abs() < 1e-12);
    }
}
