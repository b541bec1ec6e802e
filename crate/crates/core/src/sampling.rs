//! Poisson means for samples of size `m` and `n` from two daughter species:
//! the fate of a legacy site, legacy and new-mutation contributions, and
//! the expected 2×3 table.

use serde::{Deserialize, Serialize};

use crate::diffusion::{DiffusionKernel, Dirichlet, ScaleSpeed};
use crate::error::{invalid, Result};
use crate::grid::{Grid, GridFn};
use crate::measure::InitialMeasure;
use crate::params::ScaledParams;
use crate::special::binomial;
use crate::table::{CountTable, Layout};

/// Relative tolerance used to flag the two forms of the one-sided mean.
pub const C2_TOLERANCE: f64 = 1e-6;

/// Probabilities that a legacy site at frequency `x` is monomorphic
/// wild-type (`i`), polymorphic (`j`) or monomorphic mutant (`k`) in a
/// sample of size `n` taken at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleFate {
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

/// `I`, `J`, `K` as functions of the initial frequency on the grid.
#[derive(Debug, Clone)]
pub struct FateFns {
    pub n: usize,
    pub i: GridFn,
    pub j: GridFn,
    pub k: GridFn,
}

impl FateFns {
    pub fn at(&self, x: f64) -> SampleFate {
        SampleFate { i: self.i.eval(x), j: self.j.eval(x), k: self.k.eval(x) }
    }
}

/// Legacy contributions: fixed differences, one-sided and shared
/// polymorphisms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegacyMeans {
    #[serde(rename = "C1")]
    pub c1: f64,
    /// `∫ [J_m (I_n + K_n) + J_n (I_m + K_m)] dν`.
    #[serde(rename = "C2")]
    pub c2: f64,
    /// `∫ (J_m + J_n - 2 J_m J_n) dν`.
    #[serde(rename = "C2_symmetric")]
    pub c2_symmetric: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    /// False if the two forms of `C2` disagree beyond [`C2_TOLERANCE`].
    pub c2_consistent: bool,
}

/// New-mutation contributions for one sample of size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewSpectrum {
    pub n: usize,
    /// `F_N(β,n,k)` for `k = 1..=n`.
    pub spectrum: Vec<f64>,
    /// `E_N(β,n)`: polymorphic in the sample.
    pub polymorphic: f64,
    /// `E_N` computed directly against `1 - yⁿ - (1-y)ⁿ`.
    pub polymorphic_direct: f64,
    /// `D_N(β,n) = G_N(β) + F_N(β,n,n)`: monomorphic for the mutant.
    pub monomorphic_mutant: f64,
    /// `G_N(β)`: fixed in the population.
    pub fixed: f64,
}

/// Components of the expected table for one site class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassComponents {
    pub beta: ScaledParams,
    pub legacy: LegacyMeans,
    pub new_m: NewSpectrum,
    pub new_n: NewSpectrum,
}

impl ClassComponents {
    /// `(E K, E O, E H)`.
    pub fn means(&self) -> [f64; 3] {
        [
            self.legacy.c1 + self.new_m.monomorphic_mutant + self.new_n.monomorphic_mutant,
            self.legacy.c2 + self.new_m.polymorphic + self.new_n.polymorphic,
            self.legacy.c3,
        ]
    }

    /// The same components at a different mutation rate, for an ancestral
    /// measure proportional to θ.
    pub fn rescaled(&self, theta: f64) -> Self {
        let f = if self.beta.theta > 0.0 { theta / self.beta.theta } else { 0.0 };
        let l = &self.legacy;
        let scale_new = |s: &NewSpectrum| NewSpectrum {
            n: s.n,
            spectrum: s.spectrum.iter().map(|v| v * f).collect(),
            polymorphic: s.polymorphic * f,
            polymorphic_direct: s.polymorphic_direct * f,
            monomorphic_mutant: s.monomorphic_mutant * f,
            fixed: s.fixed * f,
        };
        Self {
            beta: self.beta.with_theta(theta),
            legacy: LegacyMeans {
                c1: l.c1 * f,
                c2: l.c2 * f,
                c2_symmetric: l.c2_symmetric * f,
                c3: l.c3 * f,
                c2_consistent: l.c2_consistent,
            },
            new_m: scale_new(&self.new_m),
            new_n: scale_new(&self.new_n),
        }
    }
}

/// Poisson means of the 2×3 table with its per-class components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTable {
    pub m: usize,
    pub n: usize,
    pub silent: ClassComponents,
    pub replacement: ClassComponents,
}

impl ExpectedTable {
    /// Means in the order `K_s, O_s, H_s, K_r, O_r, H_r`.
    pub fn means(&self) -> [f64; 6] {
        let [a, b, c] = self.silent.means();
        let [d, e, f] = self.replacement.means();
        [a, b, c, d, e, f]
    }

    pub fn to_table(&self) -> CountTable {
        CountTable::expected(Layout::Dohrs, self.m, self.n, &self.means()).expect("means are nonnegative")
    }

    /// 2×2 view with `V = O + H`, or `V = O + 2H` when `double_count_shared`.
    pub fn to_dprs(&self, double_count_shared: bool) -> CountTable {
        self.to_table().to_dprs(double_count_shared)
    }
}

/// Solver output shared by every quantity of one class.
struct ClassSolution {
    scale: ScaleSpeed,
    beta: ScaledParams,
    fixed: GridFn,
    lost: GridFn,
    /// `N(t,yⁿ)` and `N(t,(1-y)ⁿ)` per requested size.
    powers: Vec<(usize, GridFn, GridFn)>,
    surviving: GridFn,
    legacy_density: Option<GridFn>,
    entrance_integral: f64,
}

impl ClassSolution {
    fn solve(beta: &ScaledParams, nu: Option<&InitialMeasure>, sizes: &[usize], grid: &Grid) -> Result<Self> {
        beta.validate()?;
        if let Some(nu) = nu {
            nu.validate()?;
        }
        if sizes.contains(&0) {
            return Err(invalid("sample sizes must be >= 1"));
        }
        let kernel = DiffusionKernel::new(beta.gamma, grid.clone())?;
        let sc = *kernel.scale();
        let s1 = sc.s1();
        let nodes = &grid.nodes;
        let tab = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { nodes.iter().map(|&x| f(x)).collect() };
        let mut payoffs = vec![tab(&|_| 1.0), tab(&|x| sc.s(x)), tab(&|x| sc.s_complement(x))];
        for &n in sizes {
            payoffs.push(tab(&|y| y.powi(n as i32)));
            payoffs.push(tab(&|y| (1.0 - y).powi(n as i32)));
        }
        let gamma = beta.gamma;
        let with_nu = nu.filter(|nu| !nu.is_zero());
        if let Some(nu) = with_nu {
            payoffs.push(tab(&|x| nu.density_against_speed(x, gamma)));
        }
        let count = payoffs.len();
        let (x1, x2) = (nodes[1], nodes[2]);
        let (sx1, sx2) = (sc.s(x1), sc.s(x2));
        let mut last = (0.0, 0.0);
        let mut entrance_integral = 0.0;
        let out = kernel.solver().evolve_observed(payoffs, &vec![Dirichlet::KILLED; count], beta.t, |u, v| {
            let limit = (x2 * v[1][1] / sx1 - x1 * v[1][2] / sx2) / (x2 - x1);
            let cdf = if u == 0.0 { 0.0 } else { 1.0 - limit };
            entrance_integral += 0.5 * (u - last.0) * (cdf + last.1);
            last = (u, cdf);
        })?;
        let mut it = out.into_iter();
        let surviving = it.next().expect("payoff");
        let ns = it.next().expect("payoff");
        let nc = it.next().expect("payoff");
        let fixed = ns.map(|x, v| (sc.s(x) - v) / s1);
        let lost = nc.map(|x, v| (sc.s_complement(x) - v) / s1);
        let mut powers = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let up = it.next().expect("payoff");
            let down = it.next().expect("payoff");
            powers.push((n, up, down));
        }
        let legacy_density = with_nu.map(|_| it.next().expect("payoff"));
        Ok(Self {
            scale: sc,
            beta: *beta,
            fixed,
            lost,
            powers,
            surviving,
            legacy_density,
            entrance_integral,
        })
    }

    fn fates(&self, n: usize) -> FateFns {
        let (_, up, down) = self.powers.iter().find(|(k, _, _)| *k == n).expect("size was solved");
        let i = self.lost.zip_with(down, |a, b| a + b);
        let k = self.fixed.zip_with(up, |a, b| a + b);
        let rest = self.surviving.zip_with(up, |a, b| a - b);
        let j = rest.zip_with(down, |a, b| a - b);
        FateFns { n, i, j, k }
    }

    fn legacy(&self, m: usize, n: usize, nu: &InitialMeasure) -> LegacyMeans {
        if nu.is_zero() {
            return LegacyMeans { c1: 0.0, c2: 0.0, c2_symmetric: 0.0, c3: 0.0, c2_consistent: true };
        }
        let fm = self.fates(m);
        let fn_ = self.fates(n);
        let nodes = fm.i.nodes().to_vec();
        let build = |f: &dyn Fn(usize) -> f64| GridFn::new(nodes.clone(), (0..nodes.len()).map(f).collect());
        let (im, jm, km) = (fm.i.values(), fm.j.values(), fm.k.values());
        let (in_, jn, kn) = (fn_.i.values(), fn_.j.values(), fn_.k.values());
        let integrate = |g: GridFn| g.over_x().integrate(|x| nu.x_density(x));
        let c1 = integrate(build(&|a| im[a] * kn[a] + in_[a] * km[a]));
        let c2 = integrate(build(&|a| jm[a] * (in_[a] + kn[a]) + jn[a] * (im[a] + km[a])));
        let c2_symmetric = integrate(build(&|a| jm[a] + jn[a] - 2.0 * jm[a] * jn[a]));
        let c3 = integrate(build(&|a| jm[a] * jn[a]));
        let c2_consistent = (c2 - c2_symmetric).abs() <= C2_TOLERANCE * c2.abs().max(1e-300) + 1e-15;
        LegacyMeans { c1, c2, c2_symmetric, c3, c2_consistent }
    }

    /// `f_N / (1-y)` on the grid, bounded since `f_N(1) = 0`.
    fn new_density_over_one_minus_y(&self) -> GridFn {
        let theta = self.beta.theta;
        self.lost.map(|_, v| theta * v).over_one_minus_x()
    }

    fn new_spectrum(&self, n: usize) -> NewSpectrum {
        let gamma = self.scale.gamma;
        let g = self.new_density_over_one_minus_y();
        let spectrum = sample_spectrum(&g, n, gamma);
        let polymorphic = spectrum[..n - 1].iter().sum();
        let polymorphic_direct = g.integrate(|y| polymorphic_weight_over_y(y, n) * (gamma * y).exp());
        let fixed = self.beta.theta / self.scale.s1() * self.entrance_integral;
        NewSpectrum {
            n,
            monomorphic_mutant: fixed + spectrum[n - 1],
            spectrum,
            polymorphic,
            polymorphic_direct,
            fixed,
        }
    }

    fn legacy_spectrum(&self, n: usize) -> Vec<f64> {
        match &self.legacy_density {
            Some(f) => sample_spectrum(&f.over_one_minus_x(), n, self.scale.gamma),
            None => vec![0.0; n],
        }
    }
}

/// `∫ g(y) (1-y) C(n,k) y^k (1-y)^{n-k} m(dy)` for `k = 1..=n`, given
/// `g = density/(1-y)`.
fn sample_spectrum(g: &GridFn, n: usize, gamma: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            let c = binomial(n, k);
            g.integrate(|y| c * y.powi(k as i32 - 1) * (1.0 - y).powi((n - k) as i32) * (gamma * y).exp())
        })
        .collect()
}

/// `(1 - yⁿ - (1-y)ⁿ) / y`, bounded at 0.
fn polymorphic_weight_over_y(y: f64, n: usize) -> f64 {
    let q = 1.0 - y;
    let geometric: f64 = (0..n).map(|i| q.powi(i as i32)).sum();
    geometric - y.powi(n as i32 - 1)
}

/// `(I, J, K)` at initial frequency `x` for a sample of size `n`.
pub fn sample_fate(x: f64, n: usize, beta: &ScaledParams, grid: &Grid) -> Result<SampleFate> {
    if !(x > 0.0 && x < 1.0) {
        return Err(invalid(format!("x must lie in (0,1), got {x}")));
    }
    Ok(sample_fates(n, beta, grid)?.at(x))
}

/// `I`, `J`, `K` on the whole grid.
pub fn sample_fates(n: usize, beta: &ScaledParams, grid: &Grid) -> Result<FateFns> {
    Ok(ClassSolution::solve(beta, None, &[n], grid)?.fates(n))
}

/// `I` and `K` computed as expectations `E_x f(X_t)` of the non-killed
/// process, with the absorbing values entering as boundary data.
pub fn sample_fates_unkilled(n: usize, beta: &ScaledParams, grid: &Grid) -> Result<(GridFn, GridFn)> {
    let kernel = DiffusionKernel::new(beta.gamma, grid.clone())?;
    let nodes = &grid.nodes;
    let i0: Vec<f64> = nodes.iter().map(|y| (1.0 - y).powi(n as i32)).collect();
    let k0: Vec<f64> = nodes.iter().map(|y| y.powi(n as i32)).collect();
    let bcs = [Dirichlet { left: 1.0, right: 0.0 }, Dirichlet { left: 0.0, right: 1.0 }];
    let mut out = kernel.solver().evolve(vec![i0, k0], &bcs, beta.t)?.into_iter();
    Ok((out.next().expect("payoff"), out.next().expect("payoff")))
}

/// `(C1, C2, C3)` for samples of sizes `m` and `n`.
pub fn legacy_means(m: usize, n: usize, beta: &ScaledParams, nu: &InitialMeasure, grid: &Grid) -> Result<LegacyMeans> {
    let sol = ClassSolution::solve(beta, Some(nu), &[m, n], grid)?;
    Ok(sol.legacy(m, n, nu))
}

/// New-mutation spectrum, `E_N` and `D_N` for a sample of size `n`.
pub fn new_spectrum(n: usize, beta: &ScaledParams, grid: &Grid) -> Result<NewSpectrum> {
    Ok(ClassSolution::solve(beta, None, &[n], grid)?.new_spectrum(n))
}

/// Expected sample spectrum of sites polymorphic at time 0.
pub fn legacy_spectrum(n: usize, beta: &ScaledParams, nu: &InitialMeasure, grid: &Grid) -> Result<Vec<f64>> {
    Ok(ClassSolution::solve(beta, Some(nu), &[n], grid)?.legacy_spectrum(n))
}

/// All components of one site class in a single batched solve.
pub fn class_components(
    m: usize,
    n: usize,
    beta: &ScaledParams,
    nu: &InitialMeasure,
    grid: &Grid,
) -> Result<ClassComponents> {
    let sol = ClassSolution::solve(beta, Some(nu), &[m, n], grid)?;
    Ok(ClassComponents {
        beta: *beta,
        legacy: sol.legacy(m, n, nu),
        new_m: sol.new_spectrum(m),
        new_n: sol.new_spectrum(n),
    })
}

/// Expected 2×3 table; the silent class must be neutral.
pub fn table_means(
    m: usize,
    n: usize,
    beta_s: &ScaledParams,
    beta_r: &ScaledParams,
    nu_s: &InitialMeasure,
    nu_r: &InitialMeasure,
    grid: &Grid,
) -> Result<ExpectedTable> {
    if beta_s.gamma != 0.0 {
        return Err(invalid("the silent class must have gamma = 0"));
    }
    if beta_s.t != beta_r.t {
        return Err(invalid("both classes must share the divergence time t"));
    }
    Ok(ExpectedTable {
        m,
        n,
        silent: class_components(m, n, beta_s, nu_s, grid)?,
        replacement: class_components(m, n, beta_r, nu_r, grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::chebyshev(200, 2e-3).unwrap()
    }

    #[test]
    fn fates_sum_to_one() {
        let beta = ScaledParams::new(0.4, 1.0, 1.5).unwrap();
        let f = sample_fates(6, &beta, &grid()).unwrap();
        for &x in &[0.01, 0.3, 0.77, 0.99] {
            let s = f.at(x);
            assert!((s.i + s.j + s.k - 1.0).abs() < 1e-10);
            assert!(s.i >= 0.0 && s.j >= 0.0 && s.k >= 0.0);
        }
    }

    #[test]
    fn single_sample_cannot_be_polymorphic() {
        let beta = ScaledParams::new(0.3, 1.0, 0.0).unwrap();
        let f = sample_fates(1, &beta, &grid()).unwrap();
        assert!(f.j.sup_norm() < 1e-12);
    }

    #[test]
    fn zero_measure_gives_no_legacy_sites() {
        let beta = ScaledParams::new(0.3, 1.0, 1.0).unwrap();
        let l = legacy_means(3, 4, &beta, &InitialMeasure::Zero, &grid()).unwrap();
        assert_eq!((l.c1, l.c2, l.c3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn polymorphic_weight_is_exact() {
        for &y in &[1e-9f64, 0.2, 0.9] {
            for n in 1..8 {
                let direct = (1.0 - y.powi(n) - (1.0 - y).powi(n)) / y;
                assert!((polymorphic_weight_over_y(y, n as usize) - direct).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn silent_class_must_be_neutral() {
        let b = ScaledParams::new(0.3, 1.0, 1.0).unwrap();
        let nu = InitialMeasure::Zero;
        assert!(table_means(2, 2, &b, &b, &nu, &nu, &grid()).is_err());
    }
}
