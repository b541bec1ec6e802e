//! Exact finite-population quantities for the Moran chain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measure::InitialMeasure;
use crate::params::FiniteParams;
use crate::quadrature::GaussLegendre;

/// Below this `|σ|` the neutral closed forms are used.
pub const NEUTRAL_SIGMA: f64 = 1e-12;

/// Tridiagonal one-step transition matrix on `0..=N` with traps at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranMatrix {
    #[serde(rename = "N")]
    pub n: usize,
    pub sigma: f64,
    /// `p(i, i+1)`.
    pub up: Vec<f64>,
    /// `p(i, i-1)`.
    pub down: Vec<f64>,
}

impl MoranMatrix {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        FiniteParams::new(n, sigma, 0.0, 0)?;
        let nf = n as f64;
        let mut up = vec![0.0; n + 1];
        let mut down = vec![0.0; n + 1];
        for i in 1..n {
            let x = i as f64 / nf;
            let base = x * (1.0 - x) / (1.0 + sigma * x);
            up[i] = (1.0 + sigma) * base;
            down[i] = base;
        }
        Ok(Self { n, sigma, up, down })
    }

    pub fn stay(&self, i: usize) -> f64 {
        1.0 - self.up[i] - self.down[i]
    }

    /// Entry `p(i, j)`.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        if j == i {
            self.stay(i)
        } else if j == i + 1 {
            self.up[i]
        } else if i > 0 && j == i - 1 {
            self.down[i]
        } else {
            0.0
        }
    }

    /// Dense rows, for inspection and small-N checks.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..=self.n).map(|i| (0..=self.n).map(|j| self.prob(i, j)).collect()).collect()
    }

    /// Row vector times matrix: `out[j] = Σ_i v[i] p(i,j)`.
    pub fn forward(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for j in 0..=n {
            let mut acc = v[j] * self.stay(j);
            if j > 0 {
                acc += v[j - 1] * self.up[j - 1];
            }
            if j < n {
                acc += v[j + 1] * self.down[j + 1];
            }
            out[j] = acc;
        }
    }

    /// Matrix times column vector: `out[i] = Σ_j p(i,j) v[j]`.
    pub fn backward(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        out[0] = v[0];
        out[n] = v[n];
        for i in 1..n {
            out[i] = self.down[i] * v[i - 1] + self.stay(i) * v[i] + self.up[i] * v[i + 1];
        }
    }
}

pub fn moran_step_matrix(fp: &FiniteParams) -> Result<MoranMatrix> {
    fp.validate()?;
    MoranMatrix::new(fp.n, fp.sigma)
}

/// `P_i(T_m < T_0)` for the chain started at `i`, gambler's-ruin form.
pub fn absorption_profile(fp: &FiniteParams, i: usize, m: usize) -> Result<f64> {
    fp.validate()?;
    if i < 1 || i > m || m > fp.n {
        return Err(invalid(format!("need 1 <= i <= m <= N, got i={i}, m={m}, N={}", fp.n)));
    }
    Ok(gamblers_ruin(fp.sigma, i, m))
}

fn gamblers_ruin(sigma: f64, i: usize, m: usize) -> f64 {
    if sigma.abs() < NEUTRAL_SIGMA {
        return i as f64 / m as f64;
    }
    let l = -sigma.ln_1p();
    (i as f64 * l).exp_m1() / (m as f64 * l).exp_m1()
}

/// Green matrix of the chain killed at `0` and `N`, with the ingredients of
/// its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGreen {
    #[serde(rename = "N")]
    pub n: usize,
    /// `g[i-1][j-1] = Σ_k p^k(i,j)` for interior `i, j`.
    pub g: Vec<Vec<f64>>,
    /// `α_j = Π_{k<=j} p(k,k-1)/p(k,k+1)`, `α_0 = 1`, for `j = 0..N-1`.
    pub alpha: Vec<f64>,
    /// Partial sums `A_i = Σ_{j<i} α_j` for `i = 0..=N`.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    /// `h_i = A_i/A_N = P_i(T_N < T_0)`.
    pub h: Vec<f64>,
}

impl ChainGreen {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.g[i - 1][j - 1]
    }

    /// Green matrix of the fixation-conditioned chain, `g(i,j) h_j / h_i`.
    pub fn dual_entry(&self, i: usize, j: usize) -> f64 {
        self.entry(i, j) * self.h[j] / self.h[i]
    }

    /// Expected steps to absorption from `i` for the conditioned chain.
    pub fn dual_absorption_steps(&self, i: usize) -> f64 {
        (1..self.n).map(|j| self.dual_entry(i, j)).sum()
    }
}

pub fn chain_green(fp: &FiniteParams) -> Result<ChainGreen> {
    let p = moran_step_matrix(fp)?;
    let n = fp.n;
    let mut alpha = vec![1.0; n];
    for j in 1..n {
        alpha[j] = alpha[j - 1] * p.down[j] / p.up[j];
    }
    let mut a = vec![0.0; n + 1];
    for i in 1..=n {
        a[i] = a[i - 1] + alpha[i - 1];
    }
    let an = a[n];
    let h: Vec<f64> = a.iter().map(|v| v / an).collect();
    let mut g = vec![vec![0.0; n - 1]; n - 1];
    for i in 1..n {
        for j in 1..n {
            let (lo, hi) = (i.min(j), i.max(j));
            g[i - 1][j - 1] = an * h[lo] * (1.0 - h[hi]) / (alpha[j] * p.up[j]);
        }
    }
    Ok(ChainGreen { n, g, alpha, a, h })
}

/// Expected site counts `E(N_k(j))` for the field of mutant sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCountField {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: u64,
    /// Entry `j-1` is the mean number of sites with `j` mutant copies,
    /// `j = 1..N-1`.
    pub expected: Vec<f64>,
    /// Mean number of sites fixed for the mutant, `E(N_k(N))`.
    pub fixed_mean: f64,
    pub omega0: Vec<f64>,
    /// Sample variances of the counts, present for simulated fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_variance: Option<f64>,
}

/// `E(N_k(j)) = Σ_i ω_i p^k(i,j) + μ Σ_{r=0}^{k-1} p^r(1,j)` by `k` sparse
/// row-vector products.
pub fn expected_site_counts(fp: &FiniteParams, omega0: &[f64]) -> Result<SiteCountField> {
    let p = moran_step_matrix(fp)?;
    let n = fp.n;
    check_omega(n, omega0)?;
    let mut cur = vec![0.0; n + 1];
    cur[1..n].copy_from_slice(omega0);
    let mut next = vec![0.0; n + 1];
    for _ in 0..fp.k {
        p.forward(&cur, &mut next);
        next[1] += fp.mu;
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(SiteCountField {
        n,
        k: fp.k,
        expected: cur[1..n].to_vec(),
        fixed_mean: cur[n],
        omega0: omega0.to_vec(),
        variance: None,
        fixed_variance: None,
    })
}

pub(crate) fn check_omega(n: usize, omega0: &[f64]) -> Result<()> {
    if omega0.len() != n - 1 {
        return Err(invalid(format!("omega0 must have N-1 = {} entries, got {}", n - 1, omega0.len())));
    }
    if omega0.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(invalid("omega0 entries must be finite and >= 0"));
    }
    Ok(())
}

/// Initial Poisson means `ω_j = ν([(j-½)/N, (j+½)/N])` for `j = 1..N-1`.
pub fn discretize_measure(nu: &InitialMeasure, n: usize) -> Vec<f64> {
    let quad = GaussLegendre::new(16);
    let nf = n as f64;
    (1..n)
        .map(|j| {
            let a = (j as f64 - 0.5) / nf;
            let b = (j as f64 + 0.5) / nf;
            quad.integrate(a, b, |x| nu.density(x))
        })
        .collect()
}

/// Stationary means of the chain with immigration at state 1:
/// `ω_j = μ g(1,j)`.
pub fn stationary_site_counts(fp: &FiniteParams) -> Result<Vec<f64>> {
    let green = chain_green(fp)?;
    Ok(green.g[0].iter().map(|g| fp.mu * g).collect())
}

/// `P_1(T_N <= k) / h_1`: the conditioned chain started at 1 has reached `N`
/// within `k` steps. Returned for every step count `0..=k`.
pub fn dual_hitting_cdf(fp: &FiniteParams) -> Result<Vec<f64>> {
    let p = moran_step_matrix(fp)?;
    let n = fp.n;
    let h1 = gamblers_ruin(fp.sigma, 1, n);
    let mut cur = vec![0.0; n + 1];
    cur[1] = 1.0;
    let mut next = vec![0.0; n + 1];
    let mut out = Vec::with_capacity(fp.k as usize + 1);
    out.push(0.0);
    for _ in 0..fp.k {
        p.forward(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        out.push(cur[n] / h1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(n: usize, sigma: f64) -> FiniteParams {
        FiniteParams::new(n, sigma, 0.0, 0).unwrap()
    }

    #[test]
    fn neutral_midpoint_row() {
        let p = moran_step_matrix(&fp(4, 0.0)).unwrap();
        assert_eq!(p.prob(2, 1), 0.25);
        assert_eq!(p.prob(2, 3), 0.25);
        assert_eq!(p.prob(2, 2), 0.5);
        assert_eq!(p.prob(0, 0), 1.0);
        assert_eq!(p.prob(4, 4), 1.0);
    }

    #[test]
    fn rows_are_stochastic() {
        for &(n, s) in &[(5, 0.3), (40, -0.5), (17, 2.0)] {
            for row in moran_step_matrix(&fp(n, s)).unwrap().rows() {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                assert!(row.iter().all(|v| *v >= 0.0));
            }
        }
    }

    #[test]
    fn rejects_nonpositive_fitness() {
        assert!(MoranMatrix::new(10, -1.0).is_err());
    }

    #[test]
    fn neutral_ruin_is_linear() {
        assert_eq!(absorption_profile(&fp(10, 0.0), 3, 7).unwrap(), 3.0 / 7.0);
        assert_eq!(absorption_profile(&fp(10, 0.2), 4, 4).unwrap(), 1.0);
        assert!(absorption_profile(&fp(10, 0.0), 0, 4).is_err());
        assert!(absorption_profile(&fp(10, 0.0), 2, 11).is_err());
    }

    #[test]
    fn green_for_two_states() {
        let g = chain_green(&fp(2, 0.0)).unwrap();
        assert!((g.entry(1, 1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn green_h_matches_ruin() {
        let f = fp(50, 0.02);
        let g = chain_green(&f).unwrap();
        assert_eq!(g.h[0], 0.0);
        assert!((g.h[50] - 1.0).abs() < 1e-15);
        for i in 1..50 {
            let r = absorption_profile(&f, i, 50).unwrap();
            assert!((g.h[i] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_and_empty_fields() {
        let f = FiniteParams::new(6, 0.1, 0.0, 25).unwrap();
        let z = expected_site_counts(&f, &[0.0; 5]).unwrap();
        assert!(z.expected.iter().all(|v| *v == 0.0) && z.fixed_mean == 0.0);
        let f0 = FiniteParams::new(6, 0.1, 0.3, 0).unwrap();
        let w = [0.5, 1.0, 0.0, 2.0, 0.1];
        assert_eq!(expected_site_counts(&f0, &w).unwrap().expected, w.to_vec());
    }

    #[test]
    fn one_step_of_two_state_chain() {
        let f = FiniteParams::new(2, 0.0, 0.0, 1).unwrap();
        let e = expected_site_counts(&f, &[1.0]).unwrap();
        assert!((e.expected[0] - 0.5).abs() < 1e-15);
        assert!((e.fixed_mean - 0.25).abs() < 1e-15);
    }

    #[test]
    fn stationary_means_are_fixed_by_the_recurrence() {
        let f = FiniteParams::new(20, 0.05, 0.3, 50).unwrap();
        let w = stationary_site_counts(&f).unwrap();
        let e = expected_site_counts(&f, &w).unwrap();
        for (a, b) in e.expected.iter().zip(&w) {
            assert!((a - b).abs() < 1e-10 * b.max(1.0));
        }
    }

    #[test]
    fn dual_cdf_is_a_distribution_function() {
        let f = FiniteParams::new(20, 0.1, 0.0, 20_000).unwrap();
        let c = dual_hitting_cdf(&f).unwrap();
        assert!(c.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!((c.last().unwrap() - 1.0).abs() < 1e-6);
    }
}
