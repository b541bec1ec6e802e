//! Maximum-likelihood fitting of `(t, θ_s, θ_r, γ)` over one or more loci.
//!
//! Every expected count is linear in θ at fixed `(t, γ)`, so θ is profiled
//! in closed form and the simplex search only runs over `ln t` and `γ`.
//! Unit-θ means are cached per `(t, γ, m, n)`.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::cell_loglik;
use super::nelder_mead::{minimize, NelderMeadOptions};
use crate::error::{invalid, PrfError, Result};
use crate::grid::GridConfig;
use crate::measure::InitialMeasure;
use crate::params::ScaledParams;
use crate::sampling::class_components;
use crate::table::{CountTable, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sharing {
    Shared,
    PerLocus,
}

/// Which parameters are common to all loci; `t` is always shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamMap {
    pub gamma: Sharing,
    pub theta_s: Sharing,
    pub theta_r: Sharing,
}

impl Default for ParamMap {
    fn default() -> Self {
        Self { gamma: Sharing::PerLocus, theta_s: Sharing::PerLocus, theta_r: Sharing::PerLocus }
    }
}

impl ParamMap {
    pub fn all_shared() -> Self {
        Self { gamma: Sharing::Shared, theta_s: Sharing::Shared, theta_r: Sharing::Shared }
    }
}

/// Open box constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub t: (f64, f64),
    pub theta: (f64, f64),
    pub gamma: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self { t: (1e-4, 20.0), theta: (1e-6, 1e3), gamma: (-50.0, 50.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub bounds: Bounds,
    pub initial_t: f64,
    pub initial_gamma: f64,
    pub map: ParamMap,
    /// Number of simplex starts; at least 5 are used.
    pub starts: usize,
    pub seed: u64,
    pub optimizer: NelderMeadOptions,
    pub grid: GridConfig,
    /// Collapse shared polymorphisms as two sites when fitting 2×2 tables.
    pub double_count_shared: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            bounds: Bounds::default(),
            initial_t: 0.5,
            initial_gamma: 0.0,
            map: ParamMap::default(),
            starts: 5,
            seed: 0,
            optimizer: NelderMeadOptions { f_tol: 1e-6, x_tol: 1e-4, max_evals: 400 },
            grid: GridConfig::coarse(),
            double_count_shared: false,
        }
    }
}

impl FitConfig {
    pub const MIN_STARTS: usize = 5;

    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        for (name, (lo, hi)) in [("t", b.t), ("theta", b.theta), ("gamma", b.gamma)] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid(format!("bounds for {name} must be finite and ordered")));
            }
        }
        if !(b.t.0 > 0.0 && b.theta.0 > 0.0) {
            return Err(invalid("lower bounds for t and theta must be > 0"));
        }
        if !(self.initial_t > b.t.0 && self.initial_t < b.t.1) {
            return Err(invalid("initial t lies outside its bounds"));
        }
        if !(self.initial_gamma > b.gamma.0 && self.initial_gamma < b.gamma.1) {
            return Err(invalid("initial gamma lies outside its bounds"));
        }
        let o = &self.optimizer;
        if !(o.f_tol > 0.0 && o.x_tol > 0.0) || o.max_evals == 0 {
            return Err(invalid("optimizer tolerances must be > 0"));
        }
        self.grid.validate()
    }
}

/// One fitted parameter, or its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", content = "locus", rename_all = "snake_case")]
pub enum Parameter {
    T,
    /// Locus index; 0 when the parameter is shared.
    Gamma(usize),
    ThetaS(usize),
    ThetaR(usize),
}

impl std::str::FromStr for Parameter {
    type Err = PrfError;

    /// `t`, `gamma`, `theta_s`, `theta_r`, optionally suffixed `:<locus index>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, idx) = match s.split_once(':') {
            Some((n, i)) => (n, i.parse::<usize>().map_err(|_| invalid(format!("bad locus index in {s:?}")))?),
            None => (s, 0),
        };
        match name {
            "t" if idx == 0 => Ok(Parameter::T),
            "gamma" => Ok(Parameter::Gamma(idx)),
            "theta_s" => Ok(Parameter::ThetaS(idx)),
            "theta_r" => Ok(Parameter::ThetaR(idx)),
            _ => Err(invalid(format!("unknown parameter {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub t: Option<f64>,
    pub gamma: Vec<Option<f64>>,
    pub theta_s: Vec<Option<f64>>,
    pub theta_r: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub t0: f64,
    pub gamma0: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub map: ParamMap,
    pub loci: Vec<String>,
    pub t: f64,
    /// One entry when shared, one per locus otherwise.
    pub gamma: Vec<f64>,
    pub theta_s: Vec<f64>,
    pub theta_r: Vec<f64>,
    pub log_likelihood: f64,
    pub std_errors: StdErrors,
    pub converged: bool,
    pub status: String,
    /// Likelihood evaluations over all starts.
    pub evaluations: usize,
    /// Distinct `(t, γ, m, n)` solves.
    pub solves: usize,
    pub starts: Vec<StartSummary>,
}

impl FitResult {
    pub fn value(&self, p: Parameter) -> Option<f64> {
        let pick = |v: &Vec<f64>, i: usize| if v.len() == 1 { v.first().copied() } else { v.get(i).copied() };
        match p {
            Parameter::T => Some(self.t),
            Parameter::Gamma(i) => pick(&self.gamma, i),
            Parameter::ThetaS(i) => pick(&self.theta_s, i),
            Parameter::ThetaR(i) => pick(&self.theta_r, i),
        }
    }

    fn point(&self) -> Point {
        Point { t: self.t, gamma: self.gamma.clone(), theta_s: self.theta_s.clone(), theta_r: self.theta_r.clone() }
    }
}

/// Profile-likelihood interval for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileInterval {
    pub parameter: Parameter,
    pub level: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// The likelihood stays above the cut-off up to the box constraint.
    pub lower_unbounded: bool,
    pub upper_unbounded: bool,
    pub log_likelihood: f64,
    pub threshold: f64,
}

/// Closed-form Poisson MLE of a rate multiplying known unit means, clamped
/// to `bounds`.
pub fn theta_hat(count_sum: f64, unit_sum: f64, bounds: (f64, f64)) -> f64 {
    if unit_sum <= 0.0 {
        return bounds.0;
    }
    (count_sum / unit_sum).clamp(bounds.0, bounds.1)
}

#[derive(Debug, Clone, PartialEq)]
struct Point {
    t: f64,
    gamma: Vec<f64>,
    theta_s: Vec<f64>,
    theta_r: Vec<f64>,
}

/// Cell counts of one locus split by class.
struct Locus {
    m: usize,
    n: usize,
    layout: Layout,
    silent: Vec<f64>,
    replacement: Vec<f64>,
}

type Key = (u64, u64, usize, usize);

/// Reusable likelihood surface for a fixed data set and configuration.
pub struct Estimator {
    config: FitConfig,
    names: Vec<String>,
    loci: Vec<Locus>,
    cache: Mutex<HashMap<Key, [f64; 3]>>,
    evaluations: Mutex<usize>,
}

impl Estimator {
    pub fn new(tables: &[CountTable], config: &FitConfig) -> Result<Self> {
        config.validate()?;
        if tables.is_empty() {
            return Err(invalid("at least one table is required"));
        }
        let mut loci = Vec::with_capacity(tables.len());
        let mut names = Vec::with_capacity(tables.len());
        for (i, t) in tables.iter().enumerate() {
            t.validate()?;
            let v = t.values();
            let half = v.len() / 2;
            names.push(t.locus.clone().unwrap_or_else(|| format!("locus{}", i + 1)));
            loci.push(Locus {
                m: t.m,
                n: t.n,
                layout: t.layout,
                silent: v[..half].to_vec(),
                replacement: v[half..].to_vec(),
            });
        }
        Ok(Self {
            config: config.clone(),
            names,
            loci,
            cache: Mutex::new(HashMap::new()),
            evaluations: Mutex::new(0),
        })
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    pub fn solves(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    fn n_loci(&self) -> usize {
        self.loci.len()
    }

    fn group_len(&self, s: Sharing) -> usize {
        match s {
            Sharing::Shared => 1,
            Sharing::PerLocus => self.n_loci(),
        }
    }

    fn group(s: Sharing, locus: usize) -> usize {
        match s {
            Sharing::Shared => 0,
            Sharing::PerLocus => locus,
        }
    }

    /// Unit-θ means `(K, O, H)` for every requested key, solving the
    /// missing ones in parallel.
    fn ensure(&self, keys: &[Key]) -> Result<()> {
        let missing: Vec<Key> = {
            let cache = self.cache.lock().expect("cache lock");
            let mut m: Vec<Key> = keys.iter().filter(|k| !cache.contains_key(k)).copied().collect();
            m.sort_unstable();
            m.dedup();
            m
        };
        if missing.is_empty() {
            return Ok(());
        }
        let grid_cfg = self.config.grid;
        let solved: Vec<Result<(Key, [f64; 3])>> = missing
            .par_iter()
            .map(|&key| {
                let (tb, gb, m, n) = key;
                let (t, gamma) = (f64::from_bits(tb), f64::from_bits(gb));
                let beta = ScaledParams::new(t, 1.0, gamma)?;
                let nu = InitialMeasure::equilibrium(1.0, gamma)?;
                let grid = grid_cfg.grid_for(t)?;
                Ok((key, class_components(m, n, &beta, &nu, &grid)?.means()))
            })
            .collect();
        let mut cache = self.cache.lock().expect("cache lock");
        for r in solved {
            let (k, v) = r?;
            cache.insert(k, v);
        }
        Ok(())
    }

    fn unit(&self, key: Key) -> [f64; 3] {
        self.cache.lock().expect("cache lock")[&key]
    }

    fn collapse(&self, layout: Layout, u: [f64; 3]) -> Vec<f64> {
        match layout {
            Layout::Dohrs => u.to_vec(),
            Layout::Dprs => {
                let w = if self.config.double_count_shared { 2.0 } else { 1.0 };
                vec![u[0], u[1] + w * u[2]]
            }
        }
    }

    fn key(t: f64, gamma: f64, l: &Locus) -> Key {
        (t.to_bits(), (gamma + 0.0).to_bits(), l.m, l.n)
    }

    /// Unit means per locus for the silent class and for the replacement
    /// class at the given per-locus γ.
    fn units(&self, t: f64, gammas: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let mut keys = Vec::with_capacity(2 * self.n_loci());
        for (l, g) in self.loci.iter().zip(gammas) {
            keys.push(Self::key(t, 0.0, l));
            keys.push(Self::key(t, *g, l));
        }
        self.ensure(&keys)?;
        let mut us = Vec::with_capacity(self.n_loci());
        let mut ur = Vec::with_capacity(self.n_loci());
        for (l, g) in self.loci.iter().zip(gammas) {
            us.push(self.collapse(l.layout, self.unit(Self::key(t, 0.0, l))));
            ur.push(self.collapse(l.layout, self.unit(Self::key(t, *g, l))));
        }
        Ok((us, ur))
    }

    fn per_locus(&self, v: &[f64], s: Sharing) -> Vec<f64> {
        (0..self.n_loci()).map(|l| v[Self::group(s, l)]).collect()
    }

    /// Log-likelihood at a full parameter point.
    fn loglik_at(&self, p: &Point) -> Result<f64> {
        let gammas = self.per_locus(&p.gamma, self.config.map.gamma);
        let (us, ur) = self.units(p.t, &gammas)?;
        let mut acc = 0.0;
        for (l, locus) in self.loci.iter().enumerate() {
            let ts = p.theta_s[Self::group(self.config.map.theta_s, l)];
            let tr = p.theta_r[Self::group(self.config.map.theta_r, l)];
            for (u, z) in us[l].iter().zip(&locus.silent) {
                acc += cell_loglik(ts * u, *z);
            }
            for (u, z) in ur[l].iter().zip(&locus.replacement) {
                acc += cell_loglik(tr * u, *z);
            }
        }
        Ok(acc)
    }

    /// Closed-form θ for each group given unit means; a fixed group keeps
    /// its value.
    fn profile_thetas(&self, units: &[Vec<f64>], silent: bool, fixed: Option<(usize, f64)>) -> Vec<f64> {
        let sharing = if silent { self.config.map.theta_s } else { self.config.map.theta_r };
        let mut z = vec![0.0; self.group_len(sharing)];
        let mut u = vec![0.0; self.group_len(sharing)];
        for (l, locus) in self.loci.iter().enumerate() {
            let g = Self::group(sharing, l);
            let counts = if silent { &locus.silent } else { &locus.replacement };
            z[g] += counts.iter().sum::<f64>();
            u[g] += units[l].iter().sum::<f64>();
        }
        let mut out: Vec<f64> = z.iter().zip(&u).map(|(&z, &u)| theta_hat(z, u, self.config.bounds.theta)).collect();
        if let Some((g, v)) = fixed {
            out[g] = v;
        }
        out
    }

    fn count_eval(&self) {
        *self.evaluations.lock().expect("counter lock") += 1;
    }

    /// Maximise over θ (closed form) and per-locus γ (inner search) at fixed
    /// `t` and, when shared, fixed γ.
    fn inner(&self, t: f64, gamma_start: &[f64], fixed: Option<Parameter>, fixed_value: f64) -> Result<(f64, Point)> {
        self.count_eval();
        let map = self.config.map;
        let fix_s = match fixed {
            Some(Parameter::ThetaS(i)) => Some((Self::group(map.theta_s, i), fixed_value)),
            _ => None,
        };
        let fix_r = match fixed {
            Some(Parameter::ThetaR(i)) => Some((Self::group(map.theta_r, i), fixed_value)),
            _ => None,
        };
        let mut gamma = gamma_start.to_vec();
        if let Some(Parameter::Gamma(i)) = fixed {
            gamma[Self::group(map.gamma, i)] = fixed_value;
        }
        if map.gamma == Sharing::Shared {
            let (us, ur) = self.units(t, &vec![gamma[0]; self.n_loci()])?;
            let p = Point {
                t,
                gamma,
                theta_s: self.profile_thetas(&us, true, fix_s),
                theta_r: self.profile_thetas(&ur, false, fix_r),
            };
            return Ok((self.loglik_at(&p)?, p));
        }

        let fixed_gamma_locus = match fixed {
            Some(Parameter::Gamma(i)) => Some(i),
            _ => None,
        };
        let (us, _) = self.units(t, &gamma)?;
        let theta_s = self.profile_thetas(&us, true, fix_s);
        let bounds = self.config.bounds;
        let opts = NelderMeadOptions { f_tol: self.config.optimizer.f_tol, x_tol: 1e-3, max_evals: 200 };
        let mut theta_r = {
            let (_, ur) = self.units(t, &gamma)?;
            self.profile_thetas(&ur, false, fix_r)
        };
        let mut prev = f64::NEG_INFINITY;
        for _round in 0..50 {
            for (l, locus) in self.loci.iter().enumerate() {
                if fixed_gamma_locus == Some(l) {
                    continue;
                }
                let shared_tr = map.theta_r == Sharing::Shared || fix_r.map(|(g, _)| g) == Some(l);
                let tr_fixed = theta_r[Self::group(map.theta_r, l)];
                let objective = |x: &[f64]| -> f64 {
                    let g = x[0];
                    if !(g > bounds.gamma.0 && g < bounds.gamma.1) {
                        return f64::INFINITY;
                    }
                    let key = Self::key(t, g, locus);
                    if self.ensure(&[key]).is_err() {
                        return f64::INFINITY;
                    }
                    let u = self.collapse(locus.layout, self.unit(key));
                    let tr = if shared_tr {
                        tr_fixed
                    } else {
                        theta_hat(locus.replacement.iter().sum(), u.iter().sum(), bounds.theta)
                    };
                    -u.iter().zip(&locus.replacement).map(|(u, z)| cell_loglik(tr * u, *z)).sum::<f64>()
                };
                let r = minimize(objective, &[gamma[l]], &[0.5], &opts);
                gamma[l] = r.x[0];
            }
            let (_, ur) = self.units(t, &gamma)?;
            theta_r = self.profile_thetas(&ur, false, fix_r);
            let p = Point { t, gamma: gamma.clone(), theta_s: theta_s.clone(), theta_r: theta_r.clone() };
            let ll = self.loglik_at(&p)?;
            let separable = map.theta_r == Sharing::PerLocus;
            if separable || (ll - prev).abs() <= self.config.optimizer.f_tol {
                return Ok((ll, p));
            }
            prev = ll;
        }
        let p = Point { t, gamma, theta_s, theta_r };
        Ok((self.loglik_at(&p)?, p))
    }

    /// Best point with `fixed` held at `value`, searched from `start`.
    fn maximize(&self, start: &Point, fixed: Option<Parameter>, value: f64) -> Result<(f64, Point, usize, bool)> {
        let b = self.config.bounds;
        let t_free = fixed != Some(Parameter::T);
        let g_free = self.config.map.gamma == Sharing::Shared && !matches!(fixed, Some(Parameter::Gamma(_)));
        let t0 = if t_free { start.t } else { value };
        let unpack = |x: &[f64]| -> (f64, f64) {
            let mut i = 0;
            let t = if t_free {
                i += 1;
                x[0].exp()
            } else {
                t0
            };
            let g = if g_free { x[i] } else { start.gamma[0] };
            (t, g)
        };
        let mut x0 = Vec::new();
        let mut step = Vec::new();
        if t_free {
            x0.push(start.t.ln());
            step.push(0.3);
        }
        if g_free {
            x0.push(start.gamma[0]);
            step.push(0.5);
        }
        let error: Mutex<Option<PrfError>> = Mutex::new(None);
        let objective = |x: &[f64]| -> f64 {
            let (t, g) = unpack(x);
            if !(t > b.t.0 && t < b.t.1 && g > b.gamma.0 && g < b.gamma.1) {
                return f64::INFINITY;
            }
            let mut gs = start.gamma.clone();
            if g_free {
                gs[0] = g;
            }
            match self.inner(t, &gs, fixed, value) {
                Ok((ll, _)) => -ll,
                Err(e) => {
                    error.lock().expect("error lock").get_or_insert(e);
                    f64::INFINITY
                }
            }
        };
        let r = minimize(objective, &x0, &step, &self.config.optimizer);
        if let Some(e) = error.into_inner().expect("error lock") {
            if !r.f.is_finite() {
                return Err(e);
            }
        }
        let (t, g) = unpack(&r.x);
        let mut gs = start.gamma.clone();
        if g_free {
            gs[0] = g;
        }
        let (ll, p) = self.inner(t, &gs, fixed, value)?;
        Ok((ll, p, r.evals, r.converged))
    }

    fn start_points(&self) -> Vec<(f64, f64)> {
        let c = &self.config;
        let b = c.bounds;
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let lt = (b.t.0.max(1e-2).ln(), b.t.1.min(2.0).ln());
        let gr = (b.gamma.0.max(-5.0), b.gamma.1.min(5.0));
        let mut out = vec![(c.initial_t, c.initial_gamma)];
        while out.len() < c.starts.max(FitConfig::MIN_STARTS) {
            let t = rng.random_range(lt.0..lt.1).exp();
            let g = rng.random_range(gr.0..gr.1);
            out.push((t, g));
        }
        out
    }

    pub fn fit(&self) -> Result<FitResult> {
        let mut best: Option<(f64, Point, bool)> = None;
        let mut starts = Vec::new();
        let ng = self.group_len(self.config.map.gamma);
        for (t0, g0) in self.start_points() {
            let start = Point { t: t0, gamma: vec![g0; ng], theta_s: vec![], theta_r: vec![] };
            let (ll, p, evals, converged) = self.maximize(&start, None, 0.0)?;
            starts.push(StartSummary { t0, gamma0: g0, log_likelihood: ll, converged, evaluations: evals });
            if best.as_ref().is_none_or(|(b, _, _)| ll > *b) {
                best = Some((ll, p, converged));
            }
        }
        let (ll, p, converged) = best.expect("at least one start");
        if !ll.is_finite() {
            return Err(PrfError::Numerical("log-likelihood is not finite at the optimum".into()));
        }
        let std_errors = self.std_errors(&p)?;
        let status = if converged {
            "converged".to_string()
        } else {
            format!("simplex did not converge within {} evaluations", self.config.optimizer.max_evals)
        };
        Ok(FitResult {
            map: self.config.map,
            loci: self.names.clone(),
            t: p.t,
            gamma: p.gamma,
            theta_s: p.theta_s,
            theta_r: p.theta_r,
            log_likelihood: ll,
            std_errors,
            converged,
            status,
            evaluations: *self.evaluations.lock().expect("counter lock"),
            solves: self.solves(),
            starts,
        })
    }

    /// Observed-information standard errors from a central-difference
    /// Hessian in the natural parameters.
    fn std_errors(&self, p: &Point) -> Result<StdErrors> {
        let ng = p.gamma.len();
        let ns = p.theta_s.len();
        let nr = p.theta_r.len();
        let dim = 1 + ng + ns + nr;
        let flat = |p: &Point| -> Vec<f64> {
            let mut v = vec![p.t];
            v.extend(&p.gamma);
            v.extend(&p.theta_s);
            v.extend(&p.theta_r);
            v
        };
        let unflat = |v: &[f64]| Point {
            t: v[0],
            gamma: v[1..1 + ng].to_vec(),
            theta_s: v[1 + ng..1 + ng + ns].to_vec(),
            theta_r: v[1 + ng + ns..].to_vec(),
        };
        let x = flat(p);
        let h: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == 0 || i > ng { 1e-2 * v.abs().max(1e-6) } else { 2e-2 })
            .collect();
        let f = |v: &[f64]| self.loglik_at(&unflat(v));
        let f0 = f(&x)?;
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let val = if i == j {
                    let mut a = x.clone();
                    a[i] += h[i];
                    let mut b = x.clone();
                    b[i] -= h[i];
                    (f(&a)? - 2.0 * f0 + f(&b)?) / (h[i] * h[i])
                } else {
                    let mut acc = 0.0;
                    for (si, sj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        let mut a = x.clone();
                        a[i] += si * h[i];
                        a[j] += sj * h[j];
                        acc += sign * f(&a)?;
                    }
                    acc / (4.0 * h[i] * h[j])
                };
                hess[(i, j)] = val;
                hess[(j, i)] = val;
            }
        }
        let info = -hess;
        let diag: Vec<Option<f64>> = match info.clone().cholesky() {
            Some(ch) => {
                let cov = ch.inverse();
                (0..dim).map(|i| Some(cov[(i, i)].sqrt()).filter(|v| v.is_finite())).collect()
            }
            None => vec![None; dim],
        };
        Ok(StdErrors {
            t: diag[0],
            gamma: diag[1..1 + ng].to_vec(),
            theta_s: diag[1 + ng..1 + ng + ns].to_vec(),
            theta_r: diag[1 + ng + ns..].to_vec(),
        })
    }

    fn check_parameter(&self, p: Parameter) -> Result<()> {
        let map = self.config.map;
        let ok = |s: Sharing, i: usize| match s {
            Sharing::Shared => i == 0,
            Sharing::PerLocus => i < self.n_loci(),
        };
        let valid = match p {
            Parameter::T => true,
            Parameter::Gamma(i) => ok(map.gamma, i),
            Parameter::ThetaS(i) => ok(map.theta_s, i),
            Parameter::ThetaR(i) => ok(map.theta_r, i),
        };
        if valid {
            Ok(())
        } else {
            Err(invalid(format!("parameter {p:?} does not exist under the parameter map")))
        }
    }

    /// Profile log-likelihood with `p` held at `value`.
    pub fn profile_loglik(&self, fit: &FitResult, p: Parameter, value: f64) -> Result<f64> {
        self.check_parameter(p)?;
        Ok(self.maximize(&fit.point(), Some(p), value)?.0)
    }

    /// Profile-likelihood interval at confidence `level`.
    pub fn profile(&self, fit: &FitResult, p: Parameter, level: f64) -> Result<ProfileInterval> {
        self.check_parameter(p)?;
        if !(0.0..1.0).contains(&level) {
            return Err(invalid("level must lie in [0, 1)"));
        }
        let estimate = fit.value(p).expect("checked parameter");
        let q = if level == 0.0 {
            0.0
        } else {
            use statrs::distribution::{ChiSquared, ContinuousCDF};
            ChiSquared::new(1.0).expect("one degree of freedom").inverse_cdf(level)
        };
        let threshold = fit.log_likelihood - q / 2.0;
        let mut out = ProfileInterval {
            parameter: p,
            level,
            estimate,
            lower: estimate,
            upper: estimate,
            lower_unbounded: false,
            upper_unbounded: false,
            log_likelihood: fit.log_likelihood,
            threshold,
        };
        if q == 0.0 {
            return Ok(out);
        }
        let b = self.config.bounds;
        let (log_scale, (lo, hi)) = match p {
            Parameter::T => (true, b.t),
            Parameter::Gamma(_) => (false, b.gamma),
            Parameter::ThetaS(_) | Parameter::ThetaR(_) => (true, b.theta),
        };
        let to = |v: f64| if log_scale { v.ln() } else { v };
        let from = |u: f64| if log_scale { u.exp() } else { u };
        let (ulo, uhi) = (to(lo), to(hi));
        let u0 = to(estimate);
        let start = fit.point();
        let above = |u: f64| -> Result<bool> {
            Ok(self.maximize(&start, Some(p), from(u))?.0 >= threshold)
        };
        for dir in [-1.0, 1.0] {
            let edge = if dir < 0.0 { ulo } else { uhi };
            let mut inside = u0;
            let mut delta = if log_scale { 0.1 } else { 0.25 };
            let outside = loop {
                let cand = u0 + dir * delta;
                let clipped = if dir < 0.0 { cand.max(edge) } else { cand.min(edge) };
                let at_edge = clipped == edge;
                let probe = if at_edge { edge - dir * 1e-9 * (1.0 + edge.abs()) } else { clipped };
                if !above(probe)? {
                    break Some(probe);
                }
                inside = probe;
                if at_edge {
                    break None;
                }
                delta *= 2.0;
            };
            let endpoint = match outside {
                None => inside,
                Some(mut out_u) => {
                    let mut in_u = inside;
                    for _ in 0..40 {
                        if (out_u - in_u).abs() <= 1e-4 {
                            break;
                        }
                        let mid = 0.5 * (in_u + out_u);
                        if above(mid)? {
                            in_u = mid;
                        } else {
                            out_u = mid;
                        }
                    }
                    0.5 * (in_u + out_u)
                }
            };
            if dir < 0.0 {
                out.lower = from(endpoint);
                out.lower_unbounded = outside.is_none();
            } else {
                out.upper = from(endpoint);
                out.upper_unbounded = outside.is_none();
            }
        }
        Ok(out)
    }
}

/// Maximum-likelihood fit over all tables.
pub fn fit_mle(tables: &[CountTable], config: &FitConfig) -> Result<FitResult> {
    Estimator::new(tables, config)?.fit()
}

/// Fit, then profile one parameter.
pub fn profile_ci(tables: &[CountTable], config: &FitConfig, p: Parameter, level: f64) -> Result<ProfileInterval> {
    let est = Estimator::new(tables, config)?;
    let fit = est.fit()?;
    est.profile(&fit, p, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_rate() {
        assert_eq!(theta_hat(7.0, 2.0, (1e-6, 1e3)), 3.5);
        assert_eq!(theta_hat(0.0, 2.0, (1e-6, 1e3)), 1e-6);
        assert_eq!(theta_hat(1e9, 1.0, (1e-6, 1e3)), 1e3);
    }

    #[test]
    fn parameter_names() {
        assert_eq!("t".parse::<Parameter>().unwrap(), Parameter::T);
        assert_eq!("gamma:3".parse::<Parameter>().unwrap(), Parameter::Gamma(3));
        assert!("delta".parse::<Parameter>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        let mut c = FitConfig::default();
        c.bounds.t = (1.0, 0.5);
        assert!(c.validate().is_err());
        let mut c = FitConfig::default();
        c.optimizer.f_tol = 0.0;
        assert!(c.validate().is_err());
    }
}
