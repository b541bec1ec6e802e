use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use prf_core::diffusion::DiffusionKernel;
use prf_core::grid::Spacing;
use prf_core::inference::{Estimator, ParamMap, Parameter, Sharing};
use prf_core::ingest::{tables_from_fasta, SpeciesMap};
use prf_core::moran::{
    discretize_measure, expected_site_counts, simulate_divergence_tables, stationary_site_counts, DivergenceSim,
};
use prf_core::prf::{fixation_mean, prf_density};
use prf_core::sampling::table_means;
use prf_core::table::{parse_tables_json, parse_tables_tsv};
use prf_core::{inference, CountTable, FiniteParams, FitConfig, GridConfig, InitialMeasure, ScaledParams};

use crate::output::{tsv_header, Format, Sink};

/// Time-dependent Poisson random field model of polymorphism and divergence.
#[derive(Debug, Parser)]
#[command(name = "prf", version, arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Directory for result files and manifest.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "PRF_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Space intervals of the solver grid.
    #[arg(long, global = true)]
    pub intervals: Option<usize>,
    #[arg(long, global = true)]
    pub dt_max: Option<f64>,
    #[arg(long, global = true)]
    pub min_steps: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub spacing: Option<SpacingArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpacingArg {
    Uniform,
    Chebyshev,
}

impl GridArgs {
    fn apply(&self, mut g: GridConfig) -> GridConfig {
        if let Some(v) = self.intervals {
            g.intervals = v;
        }
        if let Some(v) = self.dt_max {
            g.dt_max = v;
        }
        if let Some(v) = self.min_steps {
            g.min_steps = v;
        }
        if let Some(s) = self.spacing {
            g.spacing = match s {
                SpacingArg::Uniform => Spacing::Uniform,
                SpacingArg::Chebyshev => Spacing::Chebyshev,
            };
        }
        g
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact expected site counts of the finite Moran chain.
    Oracle(OracleArgs),
    /// Absorption probabilities and survival of the diffusion on the grid.
    Density(DensityArgs),
    /// Population frequency density of mutant sites and fixation means.
    Prf(PrfArgs),
    /// Expected tables from parameters, or observed tables from an alignment.
    Tables(TablesArgs),
    /// Maximum-likelihood fit of count tables.
    Fit(FitArgs),
    /// Simulated count tables.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Ancestor {
    Zero,
    /// Stationary means of the chain itself.
    Stationary,
    /// Equilibrium diffusion density binned onto the chain states.
    Equilibrium,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Haploid population size.
    #[arg(short = 'N', long = "pop-size")]
    pub n: usize,
    #[arg(short, long)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "zero")]
    pub ancestor: Ancestor,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(short, long)]
    pub t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Nu {
    Zero,
    Equilibrium,
}

#[derive(Debug, Args)]
pub struct PrfArgs {
    #[arg(short, long)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Ancestral measure; the equilibrium one uses `theta` and `gamma`.
    #[arg(long, value_enum, default_value = "equilibrium")]
    pub nu: Nu,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    Dohrs,
    Dprs,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    /// Expected tables from parameters.
    #[arg(long, conflicts_with = "count", required_unless_present = "count")]
    pub expected: bool,
    /// Observed tables counted from a FASTA alignment.
    #[arg(long)]
    pub count: bool,
    #[arg(short, long, required_if_eq("expected", "true"))]
    pub t: Option<f64>,
    #[arg(long, required_if_eq("expected", "true"))]
    pub theta_s: Option<f64>,
    #[arg(long, required_if_eq("expected", "true"))]
    pub theta_r: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(short, required_if_eq("expected", "true"))]
    pub m: Option<usize>,
    #[arg(short, required_if_eq("expected", "true"))]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "dohrs")]
    pub layout: LayoutArg,
    /// Count shared polymorphisms twice when collapsing to 2×2.
    #[arg(long)]
    pub double_count_shared: bool,
    #[arg(long, required_if_eq("count", "true"))]
    pub fasta: Option<PathBuf>,
    /// Comma-separated record ids of species 1.
    #[arg(long, value_delimiter = ',')]
    pub species1: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub species2: Vec<String>,
    /// Two-column file of record id and species (1 or 2).
    #[arg(long, conflicts_with_all = ["species1", "species2"])]
    pub species_map: Option<PathBuf>,
    /// Leading sites before the first codon.
    #[arg(long, default_value_t = 0)]
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SharingArg {
    Shared,
    PerLocus,
}

impl From<SharingArg> for Sharing {
    fn from(s: SharingArg) -> Self {
        match s {
            SharingArg::Shared => Sharing::Shared,
            SharingArg::PerLocus => Sharing::PerLocus,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Table file, TSV or JSON (by extension).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "per-locus")]
    pub gamma_map: SharingArg,
    #[arg(long, value_enum, default_value = "per-locus")]
    pub theta_s_map: SharingArg,
    #[arg(long, value_enum, default_value = "per-locus")]
    pub theta_r_map: SharingArg,
    #[arg(long, default_value_t = 5)]
    pub starts: usize,
    #[arg(long, default_value_t = 0.5)]
    pub initial_t: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub initial_gamma: f64,
    /// Parameters to profile: t, gamma, theta_s, theta_r, with `:locus`
    /// for per-locus ones.
    #[arg(long, value_delimiter = ',')]
    pub profile: Vec<String>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub double_count_shared: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimKind {
    /// Two daughter Moran populations from a common ancestor.
    Moran,
    /// Independent Poisson counts around the expected table.
    Poisson,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "moran")]
    pub kind: SimKind,
    #[arg(short = 'N', long = "pop-size", default_value_t = 100)]
    pub n_pop: usize,
    #[arg(short, long)]
    pub t: f64,
    #[arg(long)]
    pub theta_s: f64,
    #[arg(long)]
    pub theta_r: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(short)]
    pub m: usize,
    #[arg(short)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub loci: usize,
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            bail!(prf_core::PrfError::InvalidParameter("threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
    }
    let common = &cli.common;
    let mut sink = Sink::new(common.out.clone());
    let (name, settings) = match &cli.command {
        Command::Oracle(a) => ("oracle", oracle(a, common, &mut sink)?),
        Command::Density(a) => ("density", density(a, common, &mut sink)?),
        Command::Prf(a) => ("prf", prf(a, common, &mut sink)?),
        Command::Tables(a) => ("tables", tables(a, common, &mut sink)?),
        Command::Fit(a) => ("fit", fit(a, common, &mut sink)?),
        Command::Simulate(a) => ("simulate", simulate(a, common, &mut sink)?),
    };
    sink.finish(name, common.seed, &settings)
}

fn columns_tsv(settings: &Value, header: &[&str], cols: &[&[f64]]) -> String {
    let mut out = tsv_header(settings);
    out.push_str(&header.join("\t"));
    out.push('\n');
    let rows = cols.first().map_or(0, |c| c.len());
    for i in 0..rows {
        let row: Vec<String> = cols.iter().map(|c| c[i].to_string()).collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

fn oracle(a: &OracleArgs, c: &Common, sink: &mut Sink) -> Result<Value> {
    let scaled = ScaledParams::new(a.t, a.theta, a.gamma)?;
    let fp = FiniteParams::from_scaled(a.n, &scaled)?;
    let omega0 = match a.ancestor {
        Ancestor::Zero => vec![0.0; a.n.saturating_sub(1)],
        Ancestor::Stationary => stationary_site_counts(&fp)?,
        Ancestor::Equilibrium => discretize_measure(&InitialMeasure::equilibrium(a.theta, a.gamma)?, a.n),
    };
    let field = expected_site_counts(&fp, &omega0)?;
    let settings = json!({ "finite_params": fp, "scaled_params": scaled, "ancestor": format!("{:?}", a.ancestor).to_lowercase() });
    match c.format {
        Format::Json => sink.json("oracle", &field)?,
        Format::Tsv => {
            let copies: Vec<f64> = (1..a.n).map(|j| j as f64).collect();
            let freq: Vec<f64> = copies.iter().map(|j| j / a.n as f64).collect();
            let mut text = columns_tsv(&settings, &["copies", "frequency", "expected"], &[&copies, &freq, &field.expected]);
            text.push_str(&format!("{}\t1\t{}\n", a.n, field.fixed_mean));
            sink.text("oracle.tsv", text);
        }
    }
    Ok(settings)
}

fn density(a: &DensityArgs, c: &Common, sink: &mut Sink) -> Result<Value> {
    let grid = c.grid.apply(GridConfig::default());
    let kernel = DiffusionKernel::for_horizon(a.gamma, a.t, &grid)?;
    let abs = kernel.absorption(a.t)?;
    let settings = json!({ "grid": grid, "t": a.t, "gamma": a.gamma });
    #[derive(Serialize)]
    struct Out<'a> {
        t: f64,
        gamma: f64,
        nodes: &'a [f64],
        lost: &'a [f64],
        surviving: &'a [f64],
        fixed: &'a [f64],
    }
    let out = Out {
        t: a.t,
        gamma: a.gamma,
        nodes: abs.surviving.nodes(),
        lost: abs.lost.values(),
        surviving: abs.surviving.values(),
        fixed: abs.fixed.values(),
    };
    match c.format {
        Format::Json => sink.json("density", &out)?,
        Format::Tsv => sink.text(
            "density.tsv",
            columns_tsv(&settings, &["x", "lost", "surviving", "fixed"], &[out.nodes, out.lost, out.surviving, out.fixed]),
        ),
    }
    Ok(settings)
}

fn prf(a: &PrfArgs, c: &Common, sink: &mut Sink) -> Result<Value> {
    let grid_cfg = c.grid.apply(GridConfig::default());
    let grid = grid_cfg.grid_for(a.t)?;
    let beta = ScaledParams::new(a.t, a.theta, a.gamma)?;
    let nu = match a.nu {
        Nu::Zero => InitialMeasure::Zero,
        Nu::Equilibrium => InitialMeasure::equilibrium(a.theta, a.gamma)?,
    };
    let dens = prf_density(&beta, &nu, &grid)?;
    let fix = fixation_mean(&beta, &nu, &grid)?;
    let settings = json!({ "grid": grid_cfg, "beta": beta, "nu": format!("{:?}", a.nu).to_lowercase() });
    match c.format {
        Format::Json => sink.json("prf", &json!({ "density": dens, "fixation": fix }))?,
        Format::Tsv => {
            let total = dens.total();
            sink.text(
                "prf.tsv",
                columns_tsv(&settings, &["y", "legacy", "new", "total"], &[&dens.nodes, &dens.legacy, &dens.new, &total]),
            );
            sink.json("fixation", &fix)?;
        }
    }
    Ok(settings)
}

fn species_map(a: &TablesArgs) -> Result<SpeciesMap> {
    if let Some(path) = &a.species_map {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(SpeciesMap::from_tsv(&text)?);
    }
    if a.species1.is_empty() || a.species2.is_empty() {
        bail!(prf_core::PrfError::InvalidParameter(
            "give --species-map or both --species1 and --species2".into()
        ));
    }
    Ok(SpeciesMap::from_lists(&a.species1, &a.species2)?)
}

fn tables(a: &TablesArgs, c: &Common, sink: &mut Sink) -> Result<Value> {
    if a.count {
        let path = a.fasta.as_ref().expect("required by clap");
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let obs = tables_from_fasta(&text, &species_map(a)?, a.offset)?;
        let settings = json!({ "fasta": path, "offset": a.offset, "polarization": obs.polarization });
        match c.format {
            Format::Json => sink.json("observed", &obs)?,
            Format::Tsv => {
                let table = match a.layout {
                    LayoutArg::Dohrs => &obs.dohrs,
                    LayoutArg::Dprs => &obs.dprs,
                };
                sink.text("observed.tsv", table.to_tsv());
            }
        }
        return Ok(settings);
    }
    let (t, m, n) = (a.t.expect("required"), a.m.expect("required"), a.n.expect("required"));
    let (ts, tr) = (a.theta_s.expect("required"), a.theta_r.expect("required"));
    let grid_cfg = c.grid.apply(GridConfig::default());
    let grid = grid_cfg.grid_for(t)?;
    let beta_s = ScaledParams::new(t, ts, 0.0)?;
    let beta_r = ScaledParams::new(t, tr, a.gamma)?;
    let e = table_means(
        m,
        n,
        &beta_s,
        &beta_r,
        &InitialMeasure::equilibrium(ts, 0.0)?,
        &InitialMeasure::equilibrium(tr, a.gamma)?,
        &grid,
    )?;
    let settings = json!({ "grid": grid_cfg });
    match c.format {
        Format::Json => sink.json("expected", &e)?,
        Format::Tsv => {
            let table = match a.layout {
                LayoutArg::Dohrs => e.to_table(),
                LayoutArg::Dprs => e.to_dprs(a.double_count_shared),
            };
            sink.text("expected.tsv", tsv_header(&settings) + &table.to_tsv());
        }
    }
    Ok(settings)
}

fn read_tables(path: &PathBuf) -> Result<Vec<CountTable>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with(['{', '[']);
    Ok(if json { parse_tables_json(&text)? } else { parse_tables_tsv(&text)? })
}

fn fit(a: &FitArgs, c: &Common, sink: &mut Sink) -> Result<Value> {
    let tables = read_tables(&a.input)?;
    let config = FitConfig {
        map: ParamMap { gamma: a.gamma_map.into(), theta_s: a.theta_s_map.into(), theta_r: a.theta_r_map.into() },
        starts: a.starts,
        seed: c.seed,
        initial_t: a.initial_t,
        initial_gamma: a.initial_gamma,
        grid: c.grid.apply(GridConfig::coarse()),
        double_count_shared: a.double_count_shared,
        ..FitConfig::default()
    };
    let params = a
        .profile
        .iter()
        .map(|s| s.parse::<Parameter>())
        .collect::<prf_core::Result<Vec<_>>>()?;
    let est = Estimator::new(&tables, &config)?;
    let result = est.fit()?;
    let intervals = params
        .iter()
        .map(|&p| est.profile(&result, p, a.level))
        .collect::<prf_core::Result<Vec<_>>>()?;
    sink.json("fit", &result)?;
    if !intervals.is_empty() {
        sink.json("profile", &intervals)?;
    }
    Ok(json!({ "config": config, "input": a.input }))
}

fn simulate(a: &SimulateArgs, c: &Common, sink: &mut Sink) -> Result<Value> {
    let (tables, settings) = match a.kind {
        SimKind::Moran => {
            let sim = DivergenceSim {
                n_pop: a.n_pop,
                t: a.t,
                theta_s: a.theta_s,
                theta_r: a.theta_r,
                gamma: a.gamma,
                m: a.m,
                n: a.n,
            };
            (simulate_divergence_tables(&sim, a.loci, c.seed)?, json!({ "simulation": sim }))
        }
        SimKind::Poisson => {
            let grid_cfg = c.grid.apply(GridConfig::default());
            let grid = grid_cfg.grid_for(a.t)?;
            let e = table_means(
                a.m,
                a.n,
                &ScaledParams::new(a.t, a.theta_s, 0.0)?,
                &ScaledParams::new(a.t, a.theta_r, a.gamma)?,
                &InitialMeasure::equilibrium(a.theta_s, 0.0)?,
                &InitialMeasure::equilibrium(a.theta_r, a.gamma)?,
                &grid,
            )?;
            let means = e.to_table();
            (
                inference::poisson_tables(&means, a.loci, c.seed)?,
                json!({ "grid": grid_cfg, "means": means.values() }),
            )
        }
    };
    match c.format {
        Format::Json => sink.json("tables", &tables)?,
        Format::Tsv => {
            let text: Vec<String> = tables.iter().map(CountTable::to_tsv).collect();
            sink.text("tables.tsv", text.join("\n"));
        }
    }
    Ok(settings)
}
