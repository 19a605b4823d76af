//! The one-shot `UpperCL` query and the optimize-then-quantify run, built
//! from an [`ExperimentConfig`].

use crate::abo::{run_abo, AcquisitionPolicy, FixedBudget, Problem, StoppingRule, Trace};
use crate::calibration::fmt_f64;
use crate::config::{ExperimentConfig, StopKind};
use crate::csvio::{coord_names, Table};
use crate::designs::{grid_mesh, halton, map_to_domain, uniform_random};
use crate::error::{Error, Result};
use crate::gp::{Dataset, GpPosterior};
use crate::kernels::Domain;
use crate::objectives::Objective;
use crate::points::Points;
use crate::rng::child_seed;
use crate::search::Polish;
use crate::uq::{quantify, upper_cl_from_prediction, Maximizer, UqOutput};

/// `x₁…x_p, mu, s, upper_cl` for each query point.
pub fn upper_cl_table(cfg: &ExperimentConfig, data: Dataset, queries: &Points) -> Result<Table> {
    let domain = cfg.domain()?;
    let p = domain.dim();
    if data.points().dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: data.points().dim(),
        });
    }
    if queries.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: queries.dim(),
        });
    }
    data.check_domain(&domain)?;
    let kernel = cfg.kernel(&domain)?;
    let consts = cfg.uq_constants(&kernel, &domain)?;
    let post = GpPosterior::fit(kernel, data)?;
    let mut header = coord_names(p);
    header.extend(["mu", "s", "upper_cl"].map(String::from));
    let mut table = Table::new(header);
    for (x, pred) in queries.rows().zip(post.predict_batch(queries)) {
        let mut row: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(pred.mean));
        row.push(fmt_f64(pred.sd()));
        row.push(fmt_f64(upper_cl_from_prediction(pred, &consts)));
        table.rows.push(row);
    }
    Ok(table)
}

pub struct OptimizeOutput {
    pub domain: Domain,
    pub trace: Trace,
    pub uq: UqOutput,
    /// Points on which the confidence region was evaluated.
    pub region_points: Points,
}

/// Halton points mapped to `domain`.
pub fn halton_on(domain: &Domain, n: usize) -> Result<Points> {
    Ok(map_to_domain(&halton(n.max(1), domain.dim())?, domain)?.points)
}

pub const REGION_MESH_SIZE: usize = 51;
pub const REGION_RANDOM_POINTS: usize = 4096;

/// Candidate set for the region mask and the interval sweep.
pub fn region_candidates(cfg: &ExperimentConfig, domain: &Domain) -> Result<Points> {
    let p = domain.dim();
    let unit = match cfg.uq.candidates {
        Some(n) => halton(n.max(1), p)?,
        None if p <= 2 => grid_mesh(REGION_MESH_SIZE, p)?,
        None => uniform_random(REGION_RANDOM_POINTS, p, child_seed(cfg.seed, 0x7265_6769))?,
    };
    Ok(map_to_domain(&unit, domain)?.points)
}

pub fn run_optimize(cfg: &ExperimentConfig, objective_name: &str) -> Result<OptimizeOutput> {
    let probe_domain = cfg.domain()?;
    let probe_kernel = cfg.kernel(&probe_domain)?;
    let objective = Objective::by_name(objective_name, &probe_kernel, cfg.seed)?;
    let domain = match (&cfg.domain, objective.natural_domain()) {
        (None, Some(d)) => d,
        _ => probe_domain,
    };
    if let Some(p) = objective.dim() {
        if p != domain.dim() {
            return Err(Error::Config(format!(
                "objective {objective_name:?} needs a {p}-dimensional domain"
            )));
        }
    }
    let kernel = cfg.kernel(&domain)?;
    let consts = cfg.uq_constants(&kernel, &domain)?;
    let o = &cfg.optimize;
    let mut policy = AcquisitionPolicy::new(cfg.acquisition()?, o.n_initial, halton_on(&domain, o.candidates)?);
    policy.maximin_candidates = o.maximin_candidates;
    let stop: Box<dyn StoppingRule> = match o.stop {
        StopKind::Budget => Box::new(FixedBudget(o.budget.max(1))),
        StopKind::NoImprovement => {
            Box::new(crate::abo::stop_no_improvement(o.window, o.epsilon).map_err(|e| Error::Config(e.to_string()))?)
        }
    };
    let problem = Problem {
        kernel: kernel.clone(),
        domain: domain.clone(),
    };
    let trace = run_abo(
        &policy,
        stop.as_ref(),
        &|x| objective.eval(x),
        &problem,
        cfg.seed,
        o.hard_cap,
    )?;

    let data = trace.info.dataset()?;
    let mut region_points = region_candidates(cfg, &domain)?;
    region_points.extend(data.points())?;
    let polish = cfg.uq.polish.then(Polish::default);
    let maximizer = Maximizer::new(domain.clone(), region_points.clone(), polish)?;
    let post = GpPosterior::fit(kernel, data)?;
    let uq = quantify(&consts, &post, &region_points, &maximizer)?;
    Ok(OptimizeOutput {
        domain,
        trace,
        uq,
        region_points,
    })
}

/// `iteration, x₁…x_p, response, best_so_far, policy_name`.
pub fn trace_table(trace: &Trace) -> Table {
    let p = trace.info.dim();
    let mut header = vec!["iteration".to_string()];
    header.extend(coord_names(p));
    header.extend(["response", "best_so_far", "policy_name"].map(String::from));
    let mut table = Table::new(header);
    let mut best = f64::NEG_INFINITY;
    for (i, b) in trace.info.batches().iter().enumerate() {
        for (x, &y) in b.points.rows().zip(&b.values) {
            best = best.max(y);
            let mut row = vec![(i + 1).to_string()];
            row.extend(x.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(y));
            row.push(fmt_f64(best));
            row.push(trace.policy_name.clone());
            table.rows.push(row);
        }
    }
    table
}

/// `x₁…x_p, in_region`.
pub fn region_table(points: &Points, mask: &[bool]) -> Table {
    let mut header = coord_names(points.dim());
    header.push("in_region".to_string());
    let mut table = Table::new(header);
    for (x, &m) in points.rows().zip(mask) {
        let mut row: Vec<String> = x.iter().map(|&v| fmt_f64(v)).collect();
        row.push(m.to_string());
        table.rows.push(row);
    }
    table
}

/// One row per quantity: `quantity, value`.
pub fn uq_table(out: &OptimizeOutput) -> Table {
    let mut table = Table::new(vec!["quantity".into(), "value".into()]);
    let mut push = |k: String, v: String| table.rows.push(vec![k, v]);
    let uq = &out.uq;
    push("iterations".into(), out.trace.iterations.to_string());
    push("truncated".into(), out.trace.truncated.to_string());
    push("best_observed".into(), fmt_f64(uq.best_observed));
    for (i, v) in uq.argbest.iter().enumerate() {
        push(format!("argbest_x{}", i + 1), fmt_f64(*v));
    }
    push("ci_lo".into(), fmt_f64(uq.interval.lo));
    push("ci_hi".into(), fmt_f64(uq.interval.hi));
    for (i, v) in uq.interval.argmax.iter().enumerate() {
        push(format!("ci_hi_at_x{}", i + 1), fmt_f64(*v));
    }
    push("ci_g_lo".into(), fmt_f64(uq.naive_interval.lo));
    push("ci_g_hi".into(), fmt_f64(uq.naive_interval.hi));
    let inside = uq.region_mask.iter().filter(|&&m| m).count();
    push("region_points".into(), uq.region_mask.len().to_string());
    push("region_inside".into(), inside.to_string());
    table
}
