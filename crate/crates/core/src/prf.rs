//! Population-level mean measures: the density of segregating mutant sites
//! and the expected number of fixed mutant sites after time `t`.

use serde::{Deserialize, Serialize};

use crate::diffusion::{DiffusionKernel, ScaleSpeed};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFn};
use crate::measure::InitialMeasure;
use crate::params::ScaledParams;

/// Equilibrium density `θ(s(1) - s(y))/s(1)` with respect to `m(dy)`.
pub fn equilibrium_density(y: f64, theta: f64, gamma: f64) -> f64 {
    let sc = ScaleSpeed::new(gamma);
    theta * sc.s_complement(y) / sc.s1()
}

/// Lebesgue form `θ e^{γy}(s(1) - s(y)) / (y(1-y)s(1))` on `(0,1)`.
pub fn equilibrium_lebesgue_density(y: f64, theta: f64, gamma: f64) -> f64 {
    InitialMeasure::Equilibrium { theta, gamma }.density(y)
}

/// Mean density of segregating sites at time `t`, split into sites already
/// polymorphic at time 0 (`legacy`) and sites that arose later (`new`).
/// Values are densities with respect to `m(dy)` at the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfDensity {
    pub beta: ScaledParams,
    pub nu: InitialMeasure,
    pub nodes: Vec<f64>,
    pub legacy: Vec<f64>,
    pub new: Vec<f64>,
}

impl PrfDensity {
    pub fn total(&self) -> Vec<f64> {
        self.legacy.iter().zip(&self.new).map(|(a, b)| a + b).collect()
    }

    pub fn legacy_fn(&self) -> GridFn {
        GridFn::new(self.nodes.clone(), self.legacy.clone())
    }

    pub fn new_fn(&self) -> GridFn {
        GridFn::new(self.nodes.clone(), self.new.clone())
    }

    pub fn total_fn(&self) -> GridFn {
        GridFn::new(self.nodes.clone(), self.total())
    }

    /// `∫_a^b g(t,θ,γ,y) m(dy)` for `0 < a < b < 1`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        if !(a > 0.0 && a < b && b < 1.0) {
            return Err(invalid(format!("need 0 < a < b < 1, got [{a}, {b}]")));
        }
        let sc = ScaleSpeed::new(self.beta.gamma);
        Ok(self.total_fn().integrate_range(a, b, |y| sc.speed_density_unchecked(y)))
    }
}

/// `f_L(y) = ∫ p(t,x,y) ν(dx)` and `f_N(y)` on the grid nodes.
///
/// By symmetry of `p` with respect to `m`, `f_L = N(t, w)` where
/// `w = dν/dm` is bounded, and `f_N(y) = θ P_y(T_0 <= t)`.
pub fn prf_density(beta: &ScaledParams, nu: &InitialMeasure, grid: &Grid) -> Result<PrfDensity> {
    beta.validate()?;
    nu.validate()?;
    let kernel = DiffusionKernel::new(beta.gamma, grid.clone())?;
    let sc = *kernel.scale();
    let s1 = sc.s1();
    let gamma = beta.gamma;
    let out = kernel.killed(
        &[&|x| sc.s_complement(x), &|x| nu.density_against_speed(x, gamma)],
        beta.t,
    )?;
    let new = out[0]
        .map(|y, v| beta.theta * (sc.s_complement(y) - v) / s1)
        .into_values();
    let legacy = out[1].values().to_vec();
    Ok(PrfDensity {
        beta: *beta,
        nu: nu.clone(),
        nodes: grid.nodes.clone(),
        legacy,
        new,
    })
}

/// Expected number of sites fixed for the mutant by time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationMean {
    pub legacy: f64,
    pub new: f64,
    pub total: f64,
    /// False if the entrance-boundary CDF was not monotone on this grid.
    pub entrance_monotone: bool,
}

impl FixationMean {
    fn new(legacy: f64, new: f64, entrance_monotone: bool) -> Self {
        Self { legacy, new, total: legacy + new, entrance_monotone }
    }
}

/// `G_L = ∫ P_x(T_1 <= t) ν(dx)` and `G_N = (θ/s(1)) ∫_0^t P̃_0(T_1 <= u) du`,
/// the time integral taken over the solver's own levels.
pub fn fixation_mean(beta: &ScaledParams, nu: &InitialMeasure, grid: &Grid) -> Result<FixationMean> {
    beta.validate()?;
    nu.validate()?;
    if beta.t == 0.0 {
        return Ok(FixationMean::new(0.0, 0.0, true));
    }
    let kernel = DiffusionKernel::new(beta.gamma, grid.clone())?;
    let s1 = kernel.scale().s1();
    let path = kernel.entrance_path(beta.t)?;
    let new = beta.theta / s1 * path.integral();
    let legacy = if nu.is_zero() {
        0.0
    } else {
        let fixed = kernel.absorption(beta.t)?.fixed.over_x();
        fixed.integrate(|x| nu.x_density(x))
    };
    Ok(FixationMean::new(legacy, new, path.monotone))
}

/// The same means through the transition density alone:
/// `G_L = (∫ s dν - ∫ s(y) f_L(y) m(dy)) / s(1)` and
/// `G_N = (θ/s(1)) (t - ∫ (s(1) - s(y)) P_y(T_1 <= t) m(dy))`.
pub fn fixation_mean_by_density(beta: &ScaledParams, nu: &InitialMeasure, grid: &Grid) -> Result<FixationMean> {
    beta.validate()?;
    nu.validate()?;
    let kernel = DiffusionKernel::new(beta.gamma, grid.clone())?;
    let sc = *kernel.scale();
    let s1 = sc.s1();
    let gamma = beta.gamma;
    let out = kernel.killed(&[&|x| sc.s(x), &|x| nu.density_against_speed(x, gamma)], beta.t)?;
    let fixed = out[0].map(|x, v| (sc.s(x) - v) / s1);
    let flux = fixed
        .over_x()
        .integrate(|y| sc.s_complement_over_one_minus_x(y) * (gamma * y).exp());
    let new = beta.theta / s1 * (beta.t - flux);
    let legacy = if nu.is_zero() {
        0.0
    } else {
        let initial = nu.integrate_over_x(|x| sc.s_over_x(x));
        let remaining = out[1]
            .over_one_minus_x()
            .integrate(|y| sc.s_over_x(y) * (gamma * y).exp());
        (initial - remaining) / s1
    };
    Ok(FixationMean::new(legacy, new, true))
}
