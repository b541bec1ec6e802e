//! Diffusion-scale and finite-population parameter sets.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Diffusion-scale parameters: elapsed time `t`, scaled mutation rate `theta`
/// and selection coefficient `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub t: f64,
    pub theta: f64,
    pub gamma: f64,
}

impl ScaledParams {
    pub fn new(t: f64, theta: f64, gamma: f64) -> Result<Self> {
        let p = Self { t, theta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(invalid(format!("t must be finite and >= 0, got {}", self.t)));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(invalid(format!("theta must be finite and >= 0, got {}", self.theta)));
        }
        if !self.gamma.is_finite() {
            return Err(invalid("gamma must be finite"));
        }
        Ok(())
    }

    /// Same parameters at a different mutation rate.
    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }
}

/// Moran-chain parameters for a haploid population of size `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteParams {
    #[serde(rename = "N")]
    pub n: usize,
    /// Per-step fitness advantage; the mutant has fitness `1 + sigma`.
    pub sigma: f64,
    /// Expected number of new mutant sites per step.
    pub mu: f64,
    /// Number of chain steps.
    pub k: u64,
}

impl FiniteParams {
    pub fn new(n: usize, sigma: f64, mu: f64, k: u64) -> Result<Self> {
        let p = Self { n, sigma, mu, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("N must be >= 2, got {}", self.n)));
        }
        if !(1.0 + self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(invalid(format!("1 + sigma must be > 0, got sigma = {}", self.sigma)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(invalid(format!("mu must be >= 0, got {}", self.mu)));
        }
        Ok(())
    }

    /// Finite-population parameters that map onto `scaled` at size `n`;
    /// `k` is rounded to the nearest integer.
    pub fn from_scaled(n: usize, scaled: &ScaledParams) -> Result<Self> {
        let nf = n as f64;
        Self::new(
            n,
            scaled.gamma / nf,
            scaled.theta / nf,
            (scaled.t * nf * nf).round() as u64,
        )
    }
}

/// `gamma = N sigma`, `theta = N mu`, `t = k / N^2`.
pub fn scale_map(fp: &FiniteParams) -> ScaledParams {
    let n = fp.n as f64;
    ScaledParams {
        t: fp.k as f64 / (n * n),
        theta: n * fp.mu,
        gamma: n * fp.sigma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn scale_map_examples() {
        let s = scale_map(&FiniteParams::new(100, 0.01, 0.02, 10_000).unwrap());
        assert!(close(s.t, 1.0) && close(s.theta, 2.0) && close(s.gamma, 1.0));

        let s = scale_map(&FiniteParams::new(2, 0.0, 0.0, 0).unwrap());
        assert_eq!((s.t, s.theta, s.gamma), (0.0, 0.0, 0.0));

        let s = scale_map(&FiniteParams::new(200, 0.005, 0.005, 8000).unwrap());
        assert!(close(s.t, 0.2) && close(s.theta, 1.0) && close(s.gamma, 1.0));
    }

    #[test]
    fn finite_params_reject_bad_values() {
        assert!(FiniteParams::new(1, 0.0, 0.0, 0).is_err());
        assert!(FiniteParams::new(10, -1.0, 0.0, 0).is_err());
        assert!(FiniteParams::new(10, 0.0, -0.1, 0).is_err());
        assert!(ScaledParams::new(-0.1, 1.0, 0.0).is_err());
        assert!(ScaledParams::new(0.1, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn json_field_names() {
        let fp = FiniteParams::new(10, 0.1, 0.2, 5).unwrap();
        let v: serde_json::Value = serde_json::to_value(fp).unwrap();
        for key in ["N", "sigma", "mu", "k"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let sp = ScaledParams::new(0.5, 1.0, -2.0).unwrap();
        let back: ScaledParams = serde_json::from_str(&serde_json::to_string(&sp).unwrap()).unwrap();
        assert_eq!(sp, back);
    }

    proptest! {
        #[test]
        fn round_trip_through_scaled(n in 2usize..500, g in -20.0f64..20.0, th in 0.0f64..10.0, t in 0.0f64..3.0) {
            let scaled = ScaledParams::new(t, th, g).unwrap();
            prop_assume!(1.0 + g / n as f64 > 0.0);
            let fp = FiniteParams::from_scaled(n, &scaled).unwrap();
            let back = scale_map(&fp);
            prop_assert!(close(back.gamma, g));
            prop_assert!(close(back.theta, th));
            // k is rounded to an integer number of steps
            prop_assert!((back.t - t).abs() <= 0.5 / (n * n) as f64 + 1e-12);
        }
    }
}
