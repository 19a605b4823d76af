//! Coverage study of the sequential interval for the maximum against the
//! naive pointwise interval.
//!
//! Each repetition simulates a truth on a tensor mesh, runs UCB over the mesh
//! from a snapped maximin Latin hypercube, and at each checkpoint checks
//! whether the interval contains the mesh maximum.

use std::io::Write;

use crate::abo::{run_abo, Acquisition, AcquisitionPolicy, BetaSchedule, FixedBudget, Information, Problem, Trace};
use crate::calibration::{fmt_f64, run_indexed};
use crate::designs::{mesh_axis, tensor_points};
use crate::error::{Error, Result};
use crate::gp::{simulate_on_mesh, GpPosterior};
use crate::kernels::{kernel_for_target, Domain, Family};
use crate::points::Points;
use crate::rng::child_seed;
use crate::uq::{confidence_interval, naive_interval, t_for_level, Interval, Maximizer, UqConstants};

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub p: usize,
    pub nus: Vec<f64>,
    pub a0_d_omega: f64,
    /// Mesh nodes per axis; the mesh doubles as the UCB candidate set.
    pub mesh_size: usize,
    pub n_initial: usize,
    /// Numbers of UCB iterations after the initial design.
    pub checkpoints: Vec<usize>,
    pub n_repetitions: usize,
    pub alpha: f64,
    pub c0: f64,
    pub beta: BetaSchedule,
    pub maximin_candidates: usize,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            p: 2,
            nus: vec![1.5, 2.5, 3.5],
            a0_d_omega: 25.0,
            mesh_size: 51,
            n_initial: 5,
            checkpoints: vec![5, 10, 15, 20, 25, 30],
            n_repetitions: 100,
            alpha: 0.05,
            c0: 1.0,
            beta: BetaSchedule::default(),
            maximin_candidates: crate::designs::DEFAULT_MAXIMIN_CANDIDATES,
            seed: 2017,
        }
    }
}

impl CoverageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.nus.is_empty() || self.checkpoints.is_empty() {
            return Err(Error::Config(
                "p, nu list and checkpoints must be non-empty".to_string(),
            ));
        }
        if self.mesh_size < 2 || self.n_initial == 0 || self.n_repetitions == 0 {
            return Err(Error::Config(
                "mesh_size >= 2, n_initial >= 1 and n_repetitions >= 1 are required".to_string(),
            ));
        }
        let total = self.mesh_size.pow(self.p as u32);
        if self.n_initial + self.max_checkpoint() > total {
            return Err(Error::Config("more evaluations than mesh nodes".to_string()));
        }
        t_for_level(self.alpha)?;
        Ok(())
    }

    pub fn max_checkpoint(&self) -> usize {
        self.checkpoints.iter().copied().max().unwrap_or(0)
    }

    pub fn domain(&self) -> Domain {
        Domain::unit(self.p)
    }

    pub fn axes(&self) -> Vec<Vec<f64>> {
        vec![mesh_axis(self.mesh_size); self.p]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Sequential,
    Naive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sequential => "ci_t",
            Method::Naive => "ci_g",
        }
    }
}

/// Both intervals at one checkpoint of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointResult {
    pub iterations: usize,
    pub sequential: Interval,
    pub naive: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repetition {
    pub nu: f64,
    pub index: usize,
    pub true_max: f64,
    pub checkpoints: Vec<CheckpointResult>,
}

/// Aggregated row of the output.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub nu: f64,
    pub iterations: usize,
    pub method: Method,
    pub coverage_rate: f64,
    pub mean_width: f64,
    pub n_used: usize,
}

#[derive(Debug)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub repetitions: Vec<Repetition>,
    /// `(nu, repetition, error)` for excluded repetitions.
    pub failures: Vec<(f64, usize, Error)>,
}

/// The UCB policy used by the study.
pub fn ucb_policy(cfg: &CoverageConfig, candidates: Points) -> AcquisitionPolicy {
    let mut policy = AcquisitionPolicy::new(Acquisition::Ucb(cfg.beta), cfg.n_initial, candidates).on_candidates();
    policy.maximin_candidates = cfg.maximin_candidates;
    policy
}

/// Sequential and naive intervals on the first `1 + k` iterations of `info`
/// for each checkpoint `k`.
pub fn checkpoint_intervals(
    info: &Information,
    checkpoints: &[usize],
    problem: &Problem,
    consts: &UqConstants,
    maximizer: &Maximizer,
) -> Result<Vec<CheckpointResult>> {
    checkpoints
        .iter()
        .map(|&k| {
            let data = info.prefix(1 + k).dataset()?;
            let post = GpPosterior::fit(problem.kernel.clone(), data)?;
            Ok(CheckpointResult {
                iterations: k,
                sequential: confidence_interval(consts, &post, maximizer)?,
                naive: naive_interval(&post, maximizer)?,
            })
        })
        .collect()
}

struct NuSetup {
    problem: Problem,
    consts: UqConstants,
    maximizer: Maximizer,
    mesh: Points,
}

fn setup(cfg: &CoverageConfig, nu: f64) -> Result<NuSetup> {
    let domain = cfg.domain();
    let kernel = kernel_for_target(Family::Matern, Some(nu), cfg.a0_d_omega, &domain, 1.0)?;
    let consts = UqConstants::for_kernel(&kernel, &domain, cfg.c0, t_for_level(cfg.alpha)?)?;
    let mesh = tensor_points(&cfg.axes());
    let maximizer = Maximizer::sweep_only(domain.clone(), mesh.clone())?;
    Ok(NuSetup {
        problem: Problem { kernel, domain },
        consts,
        maximizer,
        mesh,
    })
}

/// Index of `x` in the mesh (the point must be a mesh node).
fn mesh_index(x: &[f64], k: usize) -> usize {
    x.iter()
        .fold(0, |acc, &c| acc * k + (c * (k - 1) as f64).round() as usize)
}

/// One repetition: returns the UCB trace and the checkpoint intervals.
pub fn run_repetition(cfg: &CoverageConfig, nu: f64, index: usize) -> Result<(Trace, Repetition)> {
    let s = setup(cfg, nu)?;
    run_with_setup(cfg, &s, nu, index)
}

fn run_with_setup(cfg: &CoverageConfig, s: &NuSetup, nu: f64, index: usize) -> Result<(Trace, Repetition)> {
    let rep_seed = child_seed(child_seed(cfg.seed, nu.to_bits()), index as u64);
    let truth = simulate_on_mesh(&s.problem.kernel, &cfg.axes(), child_seed(rep_seed, 0))?;
    let true_max = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = cfg.mesh_size;
    let objective = |x: &[f64]| truth[mesh_index(x, k)];
    let policy = ucb_policy(cfg, s.mesh.clone());
    let budget = 1 + cfg.max_checkpoint();
    let trace = run_abo(
        &policy,
        &FixedBudget(budget),
        &objective,
        &s.problem,
        child_seed(rep_seed, 1),
        budget,
    )?;
    let checkpoints = checkpoint_intervals(&trace.info, &cfg.checkpoints, &s.problem, &s.consts, &s.maximizer)?;
    Ok((
        trace,
        Repetition {
            nu,
            index,
            true_max,
            checkpoints,
        },
    ))
}

pub fn coverage_experiment(cfg: &CoverageConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut repetitions = Vec::new();
    let mut failures = Vec::new();
    for &nu in &cfg.nus {
        let s = setup(cfg, nu)?;
        let results = run_indexed(cfg.n_repetitions, |r| {
            run_with_setup(cfg, &s, nu, r).map(|(_, rep)| rep)
        });
        let mut ok = Vec::new();
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok(rep) => ok.push(rep),
                Err(e) => failures.push((nu, r, e)),
            }
        }
        for (ci, &k) in cfg.checkpoints.iter().enumerate() {
            for method in [Method::Sequential, Method::Naive] {
                let pick = |rep: &Repetition| -> Interval {
                    let c = &rep.checkpoints[ci];
                    match method {
                        Method::Sequential => c.sequential.clone(),
                        Method::Naive => c.naive.clone(),
                    }
                };
                let n = ok.len();
                let covered = ok.iter().filter(|rep| pick(rep).contains(rep.true_max)).count();
                let width: f64 = ok.iter().map(|rep| pick(rep).width()).sum();
                rows.push(CoverageRow {
                    nu,
                    iterations: k,
                    method,
                    coverage_rate: if n > 0 { covered as f64 / n as f64 } else { f64::NAN },
                    mean_width: if n > 0 { width / n as f64 } else { f64::NAN },
                    n_used: n,
                });
            }
        }
        repetitions.extend(ok);
    }
    rows.sort_by(|a, b| {
        a.nu.total_cmp(&b.nu)
            .then(a.iterations.cmp(&b.iterations))
            .then(a.method.cmp(&b.method))
    });
    Ok(CoverageReport {
        rows,
        repetitions,
        failures,
    })
}

pub const COVERAGE_HEADER: [&str; 5] = ["nu", "iterations", "method", "coverage_rate", "mean_width"];

pub fn write_coverage_csv<W: Write>(report: &CoverageReport, comments: &[String], out: W) -> Result<()> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "# failed_repetitions = {}", report.failures.len())?;
    for (nu, r, e) in &report.failures {
        writeln!(out, "# failed nu = {nu} repetition = {r}: {e}")?;
    }
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(COVERAGE_HEADER)?;
    for row in &report.rows {
        w.write_record([
            fmt_f64(row.nu),
            row.iterations.to_string(),
            row.method.as_str().to_string(),
            fmt_f64(row.coverage_rate),
            fmt_f64(row.mean_width),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> CoverageConfig {
        CoverageConfig {
            nus: vec![2.5],
            a0_d_omega: 5.0,
            mesh_size: 11,
            checkpoints: vec![1, 3],
            n_repetitions: 4,
            maximin_candidates: 20,
            ..CoverageConfig::default()
        }
    }

    #[test]
    fn mesh_index_round_trip() {
        let k = 7;
        let mesh = tensor_points(&[mesh_axis(k), mesh_axis(k)]);
        for (i, x) in mesh.rows().enumerate() {
            assert_eq!(mesh_index(x, k), i);
        }
    }

    #[test]
    fn repetition_matches_library_intervals() {
        let cfg = tiny();
        let (trace, rep) = run_repetition(&cfg, 2.5, 1).unwrap();
        assert_eq!(trace.iterations, 4);
        assert_eq!(trace.info.batches()[0].values.len(), 5);
        let s = setup(&cfg, 2.5).unwrap();
        for cp in &rep.checkpoints {
            let post = GpPosterior::fit(
                s.problem.kernel.clone(),
                trace.info.prefix(1 + cp.iterations).dataset().unwrap(),
            )
            .unwrap();
            assert_eq!(
                cp.sequential,
                confidence_interval(&s.consts, &post, &s.maximizer).unwrap()
            );
            assert_eq!(cp.naive, naive_interval(&post, &s.maximizer).unwrap());
            assert_eq!(cp.sequential.lo, post.data().best().unwrap().1);
            assert!(cp.sequential.hi >= cp.naive.hi);
        }
    }

    #[test]
    fn report_is_deterministic_and_bounded() {
        let cfg = tiny();
        let a = coverage_experiment(&cfg).unwrap();
        let b = coverage_experiment(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.rows.len(), 4);
        for r in &a.rows {
            assert!((0.0..=1.0).contains(&r.coverage_rate));
            assert!(r.mean_width >= 0.0);
            assert_eq!(r.n_used, 4);
        }
        let mut buf = Vec::new();
        write_coverage_csv(&a, &["x = 1".into()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "# x = 1\n# failed_repetitions = 0\nnu,iterations,method,coverage_rate,mean_width\n2.5,1,ci_t,"
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = tiny();
        cfg.checkpoints = vec![200];
        assert!(coverage_experiment(&cfg).is_err());
        let mut cfg = tiny();
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
    }
}
