//! Eigenfunction expansion of the neutral transition density.
//!
//! For `γ = 0` the generator has eigenvalues `n(n+1)` with eigenfunctions
//! `x(1-x) C^{(3/2)}_{n-1}(1-2x)`, normalized here in `L²(m)` with
//! `m(dx) = dx/(x(1-x))`.

use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;

/// Gegenbauer polynomials `C^{(3/2)}_k(z)` for `k = 0..len`.
pub fn gegenbauer_three_halves(z: f64, len: usize) -> Vec<f64> {
    let lambda = 1.5;
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(1.0);
    if len > 1 {
        out.push(2.0 * lambda * z);
    }
    for k in 1..len.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 * z * (kf + lambda) * out[k] - (kf + 2.0 * lambda - 1.0) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Truncated neutral eigen-system with `nmax` terms.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    nmax: usize,
    quad: GaussLegendre,
}

impl EigenSystem {
    pub fn new(nmax: usize) -> Result<Self> {
        if nmax == 0 {
            return Err(invalid("nmax must be >= 1"));
        }
        Ok(Self { nmax, quad: GaussLegendre::new((nmax + 40).max(64)) })
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// `λ_n = n(n+1)`.
    pub fn eigenvalue(n: usize) -> f64 {
        (n * (n + 1)) as f64
    }

    fn norm(n: usize) -> f64 {
        let nf = n as f64;
        (4.0 * (2.0 * nf + 1.0) / (nf * (nf + 1.0))).sqrt()
    }

    /// `α_1(x), ..., α_nmax(x)`.
    pub fn eigenfunctions(&self, x: f64) -> Vec<f64> {
        let c = gegenbauer_three_halves(1.0 - 2.0 * x, self.nmax);
        (1..=self.nmax).map(|n| Self::norm(n) * x * (1.0 - x) * c[n - 1]).collect()
    }

    /// `α_n(x) / (x(1-x))`, the polynomial part, for the `m`-inner products.
    fn reduced(&self, x: f64) -> Vec<f64> {
        let c = gegenbauer_three_halves(1.0 - 2.0 * x, self.nmax);
        (1..=self.nmax).map(|n| Self::norm(n) * c[n - 1]).collect()
    }

    /// `⟨α_n, f⟩_m = ∫ α_n(y) f(y) m(dy)` for `n = 1..nmax`.
    pub fn coefficients<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut acc = vec![0.0; self.nmax];
        for (&z, &w) in self.quad.nodes().iter().zip(self.quad.weights()) {
            let y = 0.5 * (z + 1.0);
            let fy = f(y) * 0.5 * w;
            for (a, r) in acc.iter_mut().zip(self.reduced(y)) {
                *a += r * fy;
            }
        }
        acc
    }

    /// `Σ e^{-λ_n t} α_n(x) c_n` for precomputed coefficients.
    pub fn evolve_coefficients(&self, coefficients: &[f64], t: f64, x: f64) -> f64 {
        self.eigenfunctions(x)
            .iter()
            .zip(coefficients)
            .enumerate()
            .map(|(i, (a, c))| (-Self::eigenvalue(i + 1) * t).exp() * a * c)
            .sum()
    }

    /// Transition density with respect to `m(dy)`.
    pub fn density(&self, t: f64, x: f64, y: f64) -> f64 {
        let ax = self.eigenfunctions(x);
        let ay = self.eigenfunctions(y);
        (0..self.nmax)
            .map(|i| (-Self::eigenvalue(i + 1) * t).exp() * ax[i] * ay[i])
            .sum()
    }

    /// `N(t,f)(x) = ∫ p(t,x,y) f(y) m(dy)`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, t: f64, x: f64) -> f64 {
        self.evolve_coefficients(&self.coefficients(f), t, x)
    }
}

fn check(gamma: f64, t: f64) -> Result<()> {
    if gamma != 0.0 {
        return Err(invalid("the spectral reference is only available for gamma = 0"));
    }
    if !(t > 0.0) {
        return Err(invalid("the spectral reference needs t > 0"));
    }
    Ok(())
}

/// Neutral transition density `p(t,x,y)` truncated at `nmax` terms.
pub fn spectral_density(t: f64, x: f64, y: f64, gamma: f64, nmax: usize) -> Result<f64> {
    check(gamma, t)?;
    Ok(EigenSystem::new(nmax)?.density(t, x, y))
}

/// Neutral `N(t,f)(x)` truncated at `nmax` terms.
pub fn spectral_apply<F: Fn(f64) -> f64>(f: F, t: f64, x: f64, gamma: f64, nmax: usize) -> Result<f64> {
    check(gamma, t)?;
    Ok(EigenSystem::new(nmax)?.apply(f, t, x))
}
