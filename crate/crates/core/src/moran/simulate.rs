//! Monte Carlo realisations of the Moran site-count field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{check_omega, chain_green, moran_step_matrix, MoranMatrix};
use crate::error::{invalid, Result};
use crate::params::FiniteParams;
use crate::table::{CountTable, Layout};

/// Independent random stream `index` of the run seeded by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Jump chain of a birth–death chain with holding times skipped in one draw.
#[derive(Debug, Clone)]
pub struct JumpChain {
    n: usize,
    /// Per-state waiting-time law (steps until the next move, minus one).
    wait: Vec<Option<Geometric>>,
    /// Probability that a move goes up.
    up: Vec<f64>,
}

impl JumpChain {
    pub fn new(n: usize, up: &[f64], down: &[f64]) -> Result<Self> {
        let mut wait = Vec::with_capacity(n + 1);
        let mut upf = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mv = up[i] + down[i];
            if mv > 0.0 {
                let g = Geometric::new(mv.min(1.0)).map_err(|e| invalid(format!("move probability: {e}")))?;
                wait.push(Some(g));
                upf.push(up[i] / mv);
            } else {
                wait.push(None);
                upf.push(0.0);
            }
        }
        Ok(Self { n, wait, up: upf })
    }

    pub fn moran(p: &MoranMatrix) -> Result<Self> {
        Self::new(p.n, &p.up, &p.down)
    }

    /// The fixation-conditioned chain `q(i,j) = p(i,j) h_j / h_i`.
    pub fn conditioned(p: &MoranMatrix, h: &[f64]) -> Result<Self> {
        let n = p.n;
        let mut up = vec![0.0; n + 1];
        let mut down = vec![0.0; n + 1];
        for i in 1..n {
            up[i] = p.up[i] * h[i + 1] / h[i];
            down[i] = p.down[i] * h[i - 1] / h[i];
        }
        Self::new(n, &up, &down)
    }

    /// State after `steps` steps from `start`.
    pub fn run<R: Rng + ?Sized>(&self, start: usize, steps: u64, rng: &mut R) -> usize {
        self.run_until(start, steps, None, rng).0
    }

    /// Run until `steps` are used or `target` is hit; returns the final state
    /// and the step count at which it was reached.
    pub fn run_until<R: Rng + ?Sized>(&self, start: usize, steps: u64, target: Option<usize>, rng: &mut R) -> (usize, u64) {
        let mut i = start;
        let mut used = 0u64;
        loop {
            if Some(i) == target {
                return (i, used);
            }
            let Some(w) = &self.wait[i] else { return (i, used) };
            let jump_at = used.saturating_add(w.sample(rng)).saturating_add(1);
            if jump_at > steps {
                return (i, steps);
            }
            used = jump_at;
            i = if rng.random::<f64>() < self.up[i] { i + 1 } else { i - 1 };
            debug_assert!(i <= self.n);
        }
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// One realisation of `N_k(·)` over states `0..=N`.
fn realise_field<R: Rng + ?Sized>(chain: &JumpChain, fp: &FiniteParams, omega0: &[f64], rng: &mut R) -> Vec<u64> {
    let n = fp.n;
    let mut counts = vec![0u64; n + 1];
    for (idx, &w) in omega0.iter().enumerate() {
        for _ in 0..poisson_count(w, rng) {
            counts[chain.run(idx + 1, fp.k, rng)] += 1;
        }
    }
    if fp.k > 0 {
        for _ in 0..poisson_count(fp.mu * fp.k as f64, rng) {
            // a site arriving at step r has k - r steps left, r uniform on 1..=k
            let remaining = rng.random_range(0..fp.k);
            counts[chain.run(1, remaining, rng)] += 1;
        }
    }
    counts
}

/// Replicated realisations of the field; returns sample means and variances.
///
/// Replicate `r` uses its own stream of `seed`, so the output does not depend
/// on scheduling.
pub fn simulate_field(fp: &FiniteParams, omega0: &[f64], seed: u64, reps: usize) -> Result<super::SiteCountField> {
    let p = moran_step_matrix(fp)?;
    check_omega(fp.n, omega0)?;
    if reps == 0 {
        return Err(invalid("reps must be >= 1"));
    }
    let chain = JumpChain::moran(&p)?;
    let n = fp.n;
    let fields: Vec<Vec<u64>> = (0..reps)
        .into_par_iter()
        .map(|r| realise_field(&chain, fp, omega0, &mut stream_rng(seed, r as u64)))
        .collect();
    let mut mean = vec![0.0; n + 1];
    for f in &fields {
        for (m, &c) in mean.iter_mut().zip(f) {
            *m += c as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= reps as f64);
    let mut var = vec![0.0; n + 1];
    if reps > 1 {
        for f in &fields {
            for ((v, &c), m) in var.iter_mut().zip(f).zip(&mean) {
                *v += (c as f64 - m).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v /= (reps - 1) as f64);
    }
    Ok(super::SiteCountField {
        n,
        k: fp.k,
        expected: mean[1..n].to_vec(),
        fixed_mean: mean[n],
        omega0: omega0.to_vec(),
        variance: Some(var[1..n].to_vec()),
        fixed_variance: Some(var[n]),
    })
}

/// Monte Carlo estimate of `P̃_1(T_N <= k)` for the conditioned chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
}

pub fn simulate_dual_hitting(fp: &FiniteParams, paths: usize, seed: u64) -> Result<HittingEstimate> {
    let p = moran_step_matrix(fp)?;
    if paths == 0 {
        return Err(invalid("paths must be >= 1"));
    }
    let green = chain_green(fp)?;
    let chain = JumpChain::conditioned(&p, &green.h)?;
    let n = fp.n;
    let hits: usize = (0..paths)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            usize::from(chain.run_until(1, fp.k, Some(n), &mut rng).0 == n)
        })
        .sum();
    let est = hits as f64 / paths as f64;
    Ok(HittingEstimate {
        estimate: est,
        std_error: (est * (1.0 - est) / paths as f64).sqrt(),
        paths,
    })
}

/// Fraction of paths from `i` that reach `m` before 0.
pub fn simulate_absorption(fp: &FiniteParams, i: usize, m: usize, paths: usize, seed: u64) -> Result<HittingEstimate> {
    let p = moran_step_matrix(fp)?;
    if i < 1 || i > m || m > fp.n || paths == 0 {
        return Err(invalid("need 1 <= i <= m <= N and paths >= 1"));
    }
    // trap at m as well as 0
    let mut up = p.up.clone();
    let mut down = p.down.clone();
    up[m] = 0.0;
    down[m] = 0.0;
    let chain = JumpChain::new(fp.n, &up, &down)?;
    let hits: usize = (0..paths)
        .into_par_iter()
        .map(|r| usize::from(chain.run(i, u64::MAX, &mut stream_rng(seed, r as u64)) == m))
        .sum();
    let est = hits as f64 / paths as f64;
    Ok(HittingEstimate {
        estimate: est,
        std_error: (est * (1.0 - est) / paths as f64).sqrt(),
        paths,
    })
}

/// Parameters of a two-species divergence simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSim {
    /// Haploid size of the ancestor and of each daughter population.
    #[serde(rename = "N")]
    pub n_pop: usize,
    pub t: f64,
    pub theta_s: f64,
    pub theta_r: f64,
    pub gamma: f64,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    fixed: u64,
    one_sided: u64,
    shared: u64,
}

struct ClassSim {
    fp: FiniteParams,
    chain: JumpChain,
    ancestor: Vec<f64>,
}

impl ClassSim {
    fn new(n_pop: usize, t: f64, theta: f64, gamma: f64) -> Result<Self> {
        let nf = n_pop as f64;
        let fp = FiniteParams::new(n_pop, gamma / nf, theta / nf, (t * nf * nf).round() as u64)?;
        let chain = JumpChain::moran(&moran_step_matrix(&fp)?)?;
        let ancestor = super::chain::stationary_site_counts(&fp)?;
        Ok(Self { fp, chain, ancestor })
    }

    fn simulate<R: Rng + ?Sized>(&self, m: usize, n: usize, rng: &mut R) -> Tally {
        let big_n = self.fp.n;
        let k = self.fp.k;
        let sample = |state: usize, size: usize, rng: &mut R| -> u64 {
            Binomial::new(size as u64, state as f64 / big_n as f64)
                .map(|b| b.sample(rng))
                .unwrap_or(0)
        };
        let mut tally = Tally::default();
        for (idx, &w) in self.ancestor.iter().enumerate() {
            for _ in 0..poisson_count(w, rng) {
                let a = self.chain.run(idx + 1, k, rng);
                let b = self.chain.run(idx + 1, k, rng);
                let (c1, c2) = (sample(a, m, rng), sample(b, n, rng));
                let poly1 = c1 > 0 && c1 < m as u64;
                let poly2 = c2 > 0 && c2 < n as u64;
                if poly1 && poly2 {
                    tally.shared += 1;
                } else if poly1 || poly2 {
                    tally.one_sided += 1;
                } else if (c1 == m as u64 && c2 == 0) || (c1 == 0 && c2 == n as u64) {
                    tally.fixed += 1;
                }
            }
        }
        if k > 0 {
            for size in [m, n] {
                for _ in 0..poisson_count(self.fp.mu * k as f64, rng) {
                    let remaining = rng.random_range(0..k);
                    let c = sample(self.chain.run(1, remaining, rng), size, rng);
                    if c == size as u64 {
                        tally.fixed += 1;
                    } else if c > 0 {
                        tally.one_sided += 1;
                    }
                }
            }
        }
        tally
    }
}

/// Simulate `loci` independent loci: an ancestral population at the chain's
/// stationary state splits into two daughters that evolve for `t N²` steps;
/// each daughter is sampled binomially and the sites classified into a 2×3
/// table. The silent class is neutral.
pub fn simulate_divergence_tables(sim: &DivergenceSim, loci: usize, seed: u64) -> Result<Vec<CountTable>> {
    if sim.m == 0 || sim.n == 0 {
        return Err(invalid("sample sizes must be >= 1"));
    }
    if !(sim.t >= 0.0) {
        return Err(invalid("t must be >= 0"));
    }
    let silent = ClassSim::new(sim.n_pop, sim.t, sim.theta_s, 0.0)?;
    let replacement = ClassSim::new(sim.n_pop, sim.t, sim.theta_r, sim.gamma)?;
    (0..loci)
        .into_par_iter()
        .map(|l| {
            let mut rng = stream_rng(seed, l as u64);
            let s = silent.simulate(sim.m, sim.n, &mut rng);
            let r = replacement.simulate(sim.m, sim.n, &mut rng);
            CountTable::observed(
                Layout::Dohrs,
                sim.m,
                sim.n,
                &[s.fixed, s.one_sided, s.shared, r.fixed, r.one_sided, r.shared],
            )
            .map(|t| t.with_locus(format!("locus{}", l + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field() {
        let fp = FiniteParams::new(20, 0.05, 0.1, 300).unwrap();
        let w = vec![0.2; 19];
        let a = simulate_field(&fp, &w, 7, 50).unwrap();
        let b = simulate_field(&fp, &w, 7, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_field_stays_empty() {
        let fp = FiniteParams::new(20, 0.05, 0.0, 300).unwrap();
        let f = simulate_field(&fp, &[0.0; 19], 1, 20).unwrap();
        assert!(f.expected.iter().all(|v| *v == 0.0) && f.fixed_mean == 0.0);
    }

    #[test]
    fn jump_chain_respects_step_budget() {
        let p = MoranMatrix::new(10, 0.0).unwrap();
        let c = JumpChain::moran(&p).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..100 {
            assert_eq!(c.run(4, 0, &mut rng), 4);
        }
    }

    #[test]
    fn divergence_tables_are_reproducible() {
        let sim = DivergenceSim { n_pop: 30, t: 0.2, theta_s: 1.0, theta_r: 1.0, gamma: 1.0, m: 3, n: 4 };
        let a = simulate_divergence_tables(&sim, 5, 11).unwrap();
        assert_eq!(a, simulate_divergence_tables(&sim, 5, 11).unwrap());
        assert_eq!(a.len(), 5);
    }
}
