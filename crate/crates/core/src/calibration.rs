//! Monte Carlo estimation of
//! `H(M) = E M / √(p (1 ∨ log A₀D_Ω))`, the quantity that calibrates `C₀`.
//!
//! Each replication draws a design, simulates one process realization jointly
//! on the design and a Halton grid, fits the GP on the design and records the
//! grid surrogate `M₁` of the sup statistic.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::designs::{halton, latin_hypercube, uniform_random, DEFAULT_MAXIMIN_CANDIDATES};
use crate::error::{Error, Result};
use crate::gp::{sup_statistic_m, Dataset, GpPosterior, GridSimulator};
use crate::kernels::{kernel_for_target, Domain, Family};
use crate::points::Points;
use crate::rng::child_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    MaximinLhs,
    UniformRandom,
}

impl DesignKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::MaximinLhs => "maximin_lhs",
            DesignKind::UniformRandom => "uniform_random",
        }
    }
}

pub fn default_grid_size(p: usize) -> usize {
    match p {
        1 => 100,
        2 => 1000,
        _ => 2000,
    }
}

pub fn default_replications(p: usize) -> usize {
    if p == 1 {
        1000
    } else {
        100
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub p: usize,
    pub family: Family,
    /// Matérn smoothness; ignored for the Gaussian family.
    pub nu: Option<f64>,
    pub a0_d_omega: f64,
    pub n_design: usize,
    pub design_kind: DesignKind,
    pub grid_size: usize,
    pub n_replications: usize,
    pub seed: u64,
    /// Reuse one design for every replication instead of redrawing it.
    pub fixed_design: bool,
    pub maximin_candidates: usize,
}

impl CalibrationConfig {
    /// A config with grid size and replication count defaulted from `p`.
    pub fn new(
        p: usize,
        family: Family,
        nu: Option<f64>,
        a0_d_omega: f64,
        n_design: usize,
        design_kind: DesignKind,
        seed: u64,
    ) -> Self {
        CalibrationConfig {
            p,
            family,
            nu,
            a0_d_omega,
            n_design,
            design_kind,
            grid_size: default_grid_size(p),
            n_replications: default_replications(p),
            seed,
            fixed_design: false,
            maximin_candidates: DEFAULT_MAXIMIN_CANDIDATES,
        }
    }

    /// `√(p · max(1, log A₀D_Ω))`.
    pub fn normalizer(&self) -> f64 {
        (self.p as f64 * self.a0_d_omega.ln().max(1.0)).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n_design == 0 || self.grid_size == 0 || self.n_replications == 0 {
            return Err(Error::Config(
                "p, n_design, grid_size and n_replications must be positive".to_string(),
            ));
        }
        if self.design_kind == DesignKind::MaximinLhs && self.n_design < 2 {
            return Err(Error::Config("a Latin hypercube needs at least 2 points".to_string()));
        }
        Ok(())
    }

    fn design(&self, seed: u64) -> Result<Points> {
        let ps = match self.design_kind {
            DesignKind::MaximinLhs => latin_hypercube(self.n_design, self.p, seed, self.maximin_candidates)?,
            DesignKind::UniformRandom => uniform_random(self.n_design, self.p, seed)?,
        };
        Ok(ps.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    pub config: CalibrationConfig,
    pub h_estimate: f64,
    pub mc_standard_error: f64,
    /// `M₁` per replication, in replication order.
    pub m_values: Vec<f64>,
}

/// The row's kernel and a simulator on its Halton grid.
pub fn row_simulator(cfg: &CalibrationConfig) -> Result<GridSimulator> {
    let kernel = kernel_for_target(cfg.family, cfg.nu, cfg.a0_d_omega, &Domain::unit(cfg.p), 1.0)?;
    GridSimulator::new(&kernel, &halton(cfg.grid_size, cfg.p)?.points)
}

/// `M₁` for one replication on the given design and the simulator's grid.
pub fn replicate_m1(sim: &GridSimulator, design: &Points, seed: u64) -> Result<f64> {
    let (on_design, on_grid) = sim.draw(design, seed)?;
    let data = Dataset::new(design.clone(), on_design)?;
    let post = GpPosterior::fit(sim.kernel().clone(), data)?;
    let m = sup_statistic_m(&post, &on_grid, sim.grid())?;
    if !m.is_finite() {
        return Err(Error::InvalidArgument("non-finite sup statistic".to_string()));
    }
    Ok(m)
}

/// Runs every replication of `cfg`. Replication `r` uses
/// `child_seed(seed, r)`; its design and simulation streams derive from that.
/// A failure while setting up the row is reported against replication 0.
pub fn estimate_h(cfg: &CalibrationConfig) -> Result<CalibrationRecord> {
    cfg.validate()?;
    let at = |replication: usize| {
        move |e: Error| Error::Replication {
            replication,
            source: Box::new(e),
        }
    };
    let sim = row_simulator(cfg).map_err(at(0))?;
    let fixed = if cfg.fixed_design {
        Some(cfg.design(child_seed(cfg.seed, u64::MAX))?)
    } else {
        None
    };
    let one = |r: usize| -> Result<f64> {
        let rep_seed = child_seed(cfg.seed, r as u64);
        let design = match &fixed {
            Some(d) => d.clone(),
            None => cfg.design(child_seed(rep_seed, 0))?,
        };
        replicate_m1(&sim, &design, child_seed(rep_seed, 1)).map_err(at(r))
    };
    let results = run_indexed(cfg.n_replications, one);
    let m_values = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let (mean, sd) = mean_sd(&m_values);
    let norm = cfg.normalizer();
    Ok(CalibrationRecord {
        config: cfg.clone(),
        h_estimate: mean / norm,
        mc_standard_error: sd / (m_values.len() as f64).sqrt() / norm,
        m_values,
    })
}

#[cfg(feature = "parallel")]
pub(crate) fn run_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn run_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// One manifest entry: the config plus labels carried into the output.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub group: String,
    pub config: CalibrationConfig,
    pub reference_h: Option<f64>,
}

/// Outcome of one suite row; failures do not stop the suite.
#[derive(Debug)]
pub struct SuiteOutcome {
    pub row: SuiteRow,
    pub result: Result<CalibrationRecord>,
}

pub const SUITE_HEADER: [&str; 10] = [
    "family",
    "nu",
    "p",
    "n_design",
    "a0_d_omega",
    "design_kind",
    "h_estimate",
    "mc_se",
    "n_reps",
    "seed",
];

pub fn run_suite(rows: &[SuiteRow]) -> Vec<SuiteOutcome> {
    rows.iter()
        .map(|row| SuiteOutcome {
            row: row.clone(),
            result: estimate_h(&row.config),
        })
        .collect()
}

/// Writes suite outcomes as CSV. Failed rows keep their config columns, leave
/// the estimate columns empty and are listed in trailing comments.
pub fn write_suite_csv<W: Write>(outcomes: &[SuiteOutcome], comments: &[String], out: W) -> Result<()> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(SUITE_HEADER)?;
    for o in outcomes {
        let c = &o.row.config;
        let (h, se) = match &o.result {
            Ok(rec) => (fmt_f64(rec.h_estimate), fmt_f64(rec.mc_standard_error)),
            Err(_) => (String::new(), String::new()),
        };
        w.write_record([
            c.family.as_str().to_string(),
            c.nu.map(fmt_f64).unwrap_or_default(),
            c.p.to_string(),
            c.n_design.to_string(),
            fmt_f64(c.a0_d_omega),
            c.design_kind.as_str().to_string(),
            h,
            se,
            c.n_replications.to_string(),
            c.seed.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    for (i, o) in outcomes.iter().enumerate() {
        if let Err(e) = &o.result {
            writeln!(out, "# row {i} failed: {e}")?;
        }
    }
    Ok(())
}

/// Runs `rows` and writes the CSV to `path`; returns the outcomes.
pub fn calibration_suite(rows: &[SuiteRow], path: &Path) -> Result<Vec<SuiteOutcome>> {
    let outcomes = run_suite(rows);
    let file = std::fs::File::create(path)?;
    write_suite_csv(&outcomes, &[], std::io::BufWriter::new(file))?;
    Ok(outcomes)
}

/// Shortest representation that round-trips.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default, rename = "row")]
    rows: Vec<ManifestRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestRow {
    #[serde(default)]
    group: String,
    family: Family,
    #[serde(default)]
    nu: Option<f64>,
    p: usize,
    n_design: usize,
    a0_d_omega: f64,
    #[serde(default = "default_design")]
    design: DesignKind,
    #[serde(default)]
    grid_size: Option<usize>,
    #[serde(default)]
    n_reps: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    fixed_design: bool,
    #[serde(default)]
    reference_h: Option<f64>,
}

fn default_design() -> DesignKind {
    DesignKind::MaximinLhs
}

pub const DEFAULT_SUITE_SEED: u64 = 20_170_707;

/// Parses a TOML manifest of `[[row]]` tables. Rows without their own seed
/// get `child_seed(seed, row_index)` from the top-level seed.
pub fn parse_manifest(text: &str) -> Result<Vec<SuiteRow>> {
    let file: ManifestFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let base = file.seed.unwrap_or(DEFAULT_SUITE_SEED);
    file.rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.family == Family::Matern && r.nu.is_none() {
                return Err(Error::Config(format!("row {i}: matern rows need nu")));
            }
            let nu = if r.family == Family::Gaussian { None } else { r.nu };
            let mut cfg = CalibrationConfig::new(
                r.p,
                r.family,
                nu,
                r.a0_d_omega,
                r.n_design,
                r.design,
                r.seed.unwrap_or_else(|| child_seed(base, i as u64)),
            );
            if let Some(g) = r.grid_size {
                cfg.grid_size = g;
            }
            if let Some(n) = r.n_reps {
                cfg.n_replications = n;
            }
            cfg.fixed_design = r.fixed_design;
            cfg.validate().map_err(|e| Error::Config(format!("row {i}: {e}")))?;
            Ok(SuiteRow {
                group: r.group,
                config: cfg,
                reference_h: r.reference_h,
            })
        })
        .collect()
}

/// Replaces every row seed with `child_seed(seed, row_index)`.
pub fn reseed(rows: &mut [SuiteRow], seed: u64) {
    for (i, r) in rows.iter_mut().enumerate() {
        r.config.seed = child_seed(seed, i as u64);
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<SuiteRow>> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

/// The bundled manifest of reference configurations.
pub const REFERENCE_MANIFEST: &str = include_str!("../data/calibration_manifest.toml");

pub fn reference_rows() -> Vec<SuiteRow> {
    parse_manifest(REFERENCE_MANIFEST).expect("bundled manifest parses")
}
