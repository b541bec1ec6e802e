//! Crank–Nicolson solver for the backward equation
//! `∂v/∂u = x(1-x) v'' + γ x(1-x) v'` on `(0,1)` with constant Dirichlet data.
//!
//! The first step is replaced by implicit-Euler substeps so that payoffs that
//! disagree with the boundary data do not excite the undamped CN mode.

use crate::error::{invalid, PrfError, Result};
use crate::grid::{Grid, GridFn};

/// Constant boundary values `v(u,0) = left`, `v(u,1) = right` for `u > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dirichlet {
    pub left: f64,
    pub right: f64,
}

impl Dirichlet {
    /// Zero boundary data: the killed semigroup.
    pub const KILLED: Dirichlet = Dirichlet { left: 0.0, right: 0.0 };
}

/// Tridiagonal generator on the interior nodes.
#[derive(Debug, Clone)]
struct Generator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl Generator {
    fn new(grid: &Grid, gamma: f64) -> Self {
        let x = &grid.nodes;
        let interior = x.len() - 2;
        let mut lower = vec![0.0; interior];
        let mut diag = vec![0.0; interior];
        let mut upper = vec![0.0; interior];
        for i in 0..interior {
            let j = i + 1;
            let hm = x[j] - x[j - 1];
            let hp = x[j + 1] - x[j];
            let a = x[j] * (1.0 - x[j]);
            let b = gamma * a;
            let sum = hm + hp;
            let (a2, c2) = (2.0 / (hm * sum), 2.0 / (hp * sum));
            let (a1, b1, c1) = (-hp / (hm * sum), (hp - hm) / (hm * hp), hm / (hp * sum));
            lower[i] = a * a2 + b * a1;
            diag[i] = -a * (a2 + c2) + b * b1;
            upper[i] = a * c2 + b * c1;
        }
        Self { lower, diag, upper }
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    /// `out = v + weight * tau * L v` on interior nodes with boundary values.
    fn explicit(&self, v: &[f64], bc: Dirichlet, weight_tau: f64, out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let left = if i == 0 { bc.left } else { v[i] };
            let right = if i + 1 == n { bc.right } else { v[i + 2] };
            let lv = self.lower[i] * left + self.diag[i] * v[i + 1] + self.upper[i] * right;
            out[i] = v[i + 1] + weight_tau * lv;
        }
    }
}

/// LU factors of `I - w τ L` for one step size.
#[derive(Debug, Clone)]
struct Factored {
    weight_tau: f64,
    lower: Vec<f64>,
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl Factored {
    fn new(gen: &Generator, weight_tau: f64) -> Result<Self> {
        let n = gen.len();
        let lower: Vec<f64> = gen.lower.iter().map(|l| -weight_tau * l).collect();
        let diag: Vec<f64> = gen.diag.iter().map(|d| 1.0 - weight_tau * d).collect();
        let upper: Vec<f64> = gen.upper.iter().map(|u| -weight_tau * u).collect();
        let mut c_prime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        for i in 0..n {
            let denom = if i == 0 { diag[0] } else { diag[i] - lower[i] * c_prime[i - 1] };
            if denom.abs() < 1e-300 || !denom.is_finite() {
                return Err(PrfError::Numerical("singular implicit system".into()));
            }
            inv_denom[i] = 1.0 / denom;
            c_prime[i] = upper[i] * inv_denom[i];
        }
        Ok(Self { weight_tau, lower, c_prime, inv_denom })
    }
}

/// Backward solver for one selection coefficient on one grid.
#[derive(Debug, Clone)]
pub struct BackwardSolver {
    grid: Grid,
    gamma: f64,
    startup_substeps: usize,
    gen: Generator,
}

impl BackwardSolver {
    pub fn new(grid: Grid, gamma: f64) -> Result<Self> {
        grid.validate()?;
        if !gamma.is_finite() {
            return Err(invalid("gamma must be finite"));
        }
        let gen = Generator::new(&grid, gamma);
        Ok(Self { grid, gamma, startup_substeps: 4, gen })
    }

    pub fn with_startup_substeps(mut self, substeps: usize) -> Self {
        self.startup_substeps = substeps;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Evolve every payoff to time `t`, calling `observer(time, values)` at
    /// `u = 0` and after every (sub)step. Payoff values at the boundary nodes
    /// are replaced by the Dirichlet data.
    pub fn evolve_observed<F>(
        &self,
        payoffs: Vec<Vec<f64>>,
        bcs: &[Dirichlet],
        t: f64,
        mut observer: F,
    ) -> Result<Vec<GridFn>>
    where
        F: FnMut(f64, &[Vec<f64>]),
    {
        let nodes = self.grid.nodes.len();
        if bcs.len() != payoffs.len() {
            return Err(invalid("one boundary condition per payoff is required"));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid(format!("horizon must be finite and >= 0, got {t}")));
        }
        let mut state = payoffs;
        for (v, bc) in state.iter_mut().zip(bcs) {
            if v.len() != nodes {
                return Err(invalid("payoff length does not match the grid"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("payoff has non-finite values"));
            }
            v[0] = bc.left;
            v[nodes - 1] = bc.right;
        }
        observer(0.0, &state);

        let steps = self.grid.steps_for(t);
        if steps > 0 {
            let tau = t / steps as f64;
            let sub = self.startup_substeps;
            let mut time = 0.0;
            let mut rhs = vec![0.0; nodes - 2];
            let mut first = 0;
            if sub > 0 {
                let ie = Factored::new(&self.gen, tau / sub as f64)?;
                for s in 0..sub {
                    for (v, bc) in state.iter_mut().zip(bcs) {
                        rhs.copy_from_slice(&v[1..nodes - 1]);
                        self.implicit_rhs_boundary(&mut rhs, *bc, &ie);
                        ie.solve_interior(&mut rhs);
                        v[1..nodes - 1].copy_from_slice(&rhs);
                    }
                    time = tau * (s + 1) as f64 / sub as f64;
                    observer(time, &state);
                }
                first = 1;
            }
            let cn = Factored::new(&self.gen, 0.5 * tau)?;
            for step in first..steps {
                for (v, bc) in state.iter_mut().zip(bcs) {
                    self.gen.explicit(v, *bc, 0.5 * tau, &mut rhs);
                    self.implicit_rhs_boundary(&mut rhs, *bc, &cn);
                    cn.solve_interior(&mut rhs);
                    v[1..nodes - 1].copy_from_slice(&rhs);
                }
                time = if step + 1 == steps { t } else { tau * (step + 1) as f64 };
                observer(time, &state);
            }
            debug_assert!((time - t).abs() < 1e-9 * t.max(1.0));
        }
        let nodes_vec = self.grid.nodes.clone();
        Ok(state.into_iter().map(|v| GridFn::new(nodes_vec.clone(), v)).collect())
    }

    /// Evolve and return only the final time level.
    pub fn evolve(&self, payoffs: Vec<Vec<f64>>, bcs: &[Dirichlet], t: f64) -> Result<Vec<GridFn>> {
        self.evolve_observed(payoffs, bcs, t, |_, _| {})
    }

    /// Killed semigroup `N(t,f)` for several payoffs given as closures.
    pub fn killed<F: Fn(f64) -> f64>(&self, payoffs: &[F], t: f64) -> Result<Vec<GridFn>> {
        let tabulated = payoffs
            .iter()
            .map(|f| self.grid.nodes.iter().map(|&x| f(x)).collect())
            .collect();
        self.evolve(tabulated, &vec![Dirichlet::KILLED; payoffs.len()], t)
    }

    /// Implicit-side boundary contributions `+ wτ L_{1,0} v_0` and
    /// `+ wτ L_{J-1,J} v_J`.
    fn implicit_rhs_boundary(&self, rhs: &mut [f64], bc: Dirichlet, f: &Factored) {
        let n = rhs.len();
        rhs[0] += f.weight_tau * self.gen.lower[0] * bc.left;
        rhs[n - 1] += f.weight_tau * self.gen.upper[n - 1] * bc.right;
    }
}

impl Factored {
    fn solve_interior(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

/// All time levels of `N(u, f)` for `0 <= u <= t`.
#[derive(Debug, Clone)]
pub struct Surface {
    pub gamma: f64,
    pub nodes: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[k][j] = N(times[k], f)(nodes[j])`.
    pub values: Vec<Vec<f64>>,
}

impl Surface {
    pub fn final_level(&self) -> GridFn {
        GridFn::new(self.nodes.clone(), self.values.last().cloned().unwrap_or_default())
    }

    pub fn at(&self, level: usize) -> GridFn {
        GridFn::new(self.nodes.clone(), self.values[level].clone())
    }
}

/// `N(u, f)(x) = ∫ p(u,x,y) f(y) m(dy)` on every solver time level up to `t`.
pub fn heat_apply<F: Fn(f64) -> f64>(f: F, t: f64, gamma: f64, grid: &Grid) -> Result<Surface> {
    let solver = BackwardSolver::new(grid.clone(), gamma)?;
    let payoff: Vec<f64> = grid.nodes.iter().map(|&x| f(x)).collect();
    let mut times = Vec::new();
    let mut values = Vec::new();
    solver.evolve_observed(vec![payoff], &[Dirichlet::KILLED], t, |u, v| {
        times.push(u);
        values.push(v[0].clone());
    })?;
    Ok(Surface { gamma, nodes: grid.nodes.clone(), times, values })
}
