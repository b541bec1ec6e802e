//! The limiting diffusion: scale and speed, the killed semigroup
//! `N(t,f)(x) = ∫ p(t,x,y) f(y) m(dy)`, absorption probabilities, the
//! fixation-conditioned dual and a neutral spectral reference.

pub mod scale;
pub mod solver;
pub mod spectral;

pub use scale::{green_kernel, scale_fn, speed_density, ultimate_fixation, ScaleSpeed};
pub use solver::{heat_apply, BackwardSolver, Dirichlet, Surface};
pub use spectral::{spectral_apply, spectral_density, EigenSystem};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PrfError, Result};
use crate::grid::{Grid, GridConfig, GridFn};

/// Killed-semigroup evaluations for one selection coefficient on one grid.
#[derive(Debug, Clone)]
pub struct DiffusionKernel {
    scale: ScaleSpeed,
    solver: BackwardSolver,
}

/// Absorption probabilities by time `t` at every grid node.
#[derive(Debug, Clone)]
pub struct Absorption {
    /// `P_x(T_0 <= t)`.
    pub lost: GridFn,
    /// `N(t,1)(x)`, the probability of still segregating.
    pub surviving: GridFn,
    /// `P_x(T_1 <= t)`.
    pub fixed: GridFn,
}

/// `P̃_0(T_1 <= u)` on every solver time level in `[0, t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrancePath {
    pub times: Vec<f64>,
    pub cdf: Vec<f64>,
    /// False when the extrapolated values decrease anywhere, which means the
    /// grid is too coarse near the origin.
    pub monotone: bool,
}

impl EntrancePath {
    pub fn final_value(&self) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0)
    }

    /// `∫_0^t P̃_0(T_1 <= u) du` by the trapezoid rule on the solver levels.
    pub fn integral(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.cdf.windows(2))
            .map(|(t, c)| 0.5 * (t[1] - t[0]) * (c[0] + c[1]))
            .sum()
    }
}

/// Entrance-boundary CDF at a single horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntranceCdf {
    pub value: f64,
    pub monotone: bool,
}

const MONOTONE_SLACK: f64 = 1e-6;

impl DiffusionKernel {
    pub fn new(gamma: f64, grid: Grid) -> Result<Self> {
        Ok(Self {
            scale: ScaleSpeed::new(gamma),
            solver: BackwardSolver::new(grid, gamma)?,
        })
    }

    /// Kernel on the grid that `config` prescribes for horizon `t`.
    pub fn for_horizon(gamma: f64, t: f64, config: &GridConfig) -> Result<Self> {
        let grid = config.grid_for(t)?;
        Ok(Self {
            scale: ScaleSpeed::new(gamma),
            solver: BackwardSolver::new(grid, gamma)?.with_startup_substeps(config.startup_substeps),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.scale.gamma
    }

    pub fn scale(&self) -> &ScaleSpeed {
        &self.scale
    }

    pub fn grid(&self) -> &Grid {
        self.solver.grid()
    }

    pub fn solver(&self) -> &BackwardSolver {
        &self.solver
    }

    /// `N(t, f)` for each payoff, in one batched solve.
    pub fn killed(&self, payoffs: &[&dyn Fn(f64) -> f64], t: f64) -> Result<Vec<GridFn>> {
        let tabulated = payoffs
            .iter()
            .map(|f| self.grid().nodes.iter().map(|&x| f(x)).collect())
            .collect();
        self.solver.evolve(tabulated, &vec![Dirichlet::KILLED; payoffs.len()], t)
    }

    /// `N(t, f)` for payoffs already tabulated on the grid nodes.
    pub fn killed_tabulated(&self, payoffs: Vec<Vec<f64>>, t: f64) -> Result<Vec<GridFn>> {
        let n = payoffs.len();
        self.solver.evolve(payoffs, &vec![Dirichlet::KILLED; n], t)
    }

    /// Loss, survival and fixation probabilities by time `t`.
    ///
    /// Fixation is `(s(x) - N(t,s)(x))/s(1)` and loss is computed the same way
    /// from the payoff `s(1) - s`, so conservation is a genuine check.
    pub fn absorption(&self, t: f64) -> Result<Absorption> {
        let sc = self.scale;
        let s1 = sc.s1();
        let out = self.killed(&[&|_| 1.0, &|x| sc.s(x), &|x| sc.s_complement(x)], t)?;
        let fixed = out[1].map(|x, v| (sc.s(x) - v) / s1);
        let lost = out[2].map(|x, v| (sc.s_complement(x) - v) / s1);
        let mut it = out.into_iter();
        let surviving = it.next().expect("three payoffs");
        Ok(Absorption { lost, surviving, fixed })
    }

    /// `P̃_0(T_1 <= u) = 1 - lim_{x→0} N(u,s)(x)/s(x)` on every time level,
    /// extrapolated linearly in `x` from the first two interior nodes.
    pub fn entrance_path(&self, t: f64) -> Result<EntrancePath> {
        let sc = self.scale;
        let nodes = &self.grid().nodes;
        let (x1, x2) = (nodes[1], nodes[2]);
        let (s1, s2) = (sc.s(x1), sc.s(x2));
        let payoff = nodes.iter().map(|&x| sc.s(x)).collect();
        let mut times = Vec::new();
        let mut cdf = Vec::new();
        self.solver.evolve_observed(vec![payoff], &[Dirichlet::KILLED], t, |u, v| {
            let (r1, r2) = (v[0][1] / s1, v[0][2] / s2);
            let limit = (x2 * r1 - x1 * r2) / (x2 - x1);
            times.push(u);
            cdf.push(if u == 0.0 { 0.0 } else { (1.0 - limit).clamp(0.0, 1.0) });
        })?;
        if cdf.iter().any(|c| !c.is_finite()) {
            return Err(PrfError::Numerical("entrance CDF is not finite".into()));
        }
        let monotone = cdf.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK);
        Ok(EntrancePath { times, cdf, monotone })
    }
}

/// `(P_x(T_0 <= t), P_x(T_1 <= t))` at a point.
pub fn absorption_cdf(x: f64, t: f64, gamma: f64, grid: &Grid) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("x must lie in [0,1], got {x}")));
    }
    if x == 0.0 {
        return Ok((1.0, 0.0));
    }
    if x == 1.0 {
        return Ok((0.0, 1.0));
    }
    let a = DiffusionKernel::new(gamma, grid.clone())?.absorption(t)?;
    Ok((a.lost.eval(x), a.fixed.eval(x)))
}

/// `P̃_0(T_1 <= t)` for the fixation-conditioned process started at 0.
pub fn dual_entrance_cdf(t: f64, gamma: f64, grid: &Grid) -> Result<EntranceCdf> {
    let path = DiffusionKernel::new(gamma, grid.clone())?.entrance_path(t)?;
    Ok(EntranceCdf { value: path.final_value(), monotone: path.monotone })
}
