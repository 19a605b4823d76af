//! Browser demo on `[0, 1]`: confidence envelopes for hand-entered data, a UCB
//! run on a simulated truth with both intervals per iteration, and a kernel
//! explorer.
//!
//! The exported functions return JSON strings; the plain functions behind
//! them carry the logic and are what the tests exercise.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use bouq::abo::{run_abo, Acquisition, AcquisitionPolicy, BetaSchedule, FixedBudget, Problem};
use bouq::coverage::checkpoint_intervals;
use bouq::designs::mesh_axis;
use bouq::gp::simulate_on_mesh;
use bouq::kernels::kernel_for_target;
use bouq::uq::{
    confidence_region, naive_upper_from_prediction, quantify, t_for_level, upper_cl_from_prediction, Maximizer,
};
use bouq::{Dataset, Domain, Family, GpPosterior, Points, ProductKernel, UqConstants};

const MAX_GRID: usize = 2001;

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub upper_cl: Vec<f64>,
    pub naive_upper: Vec<f64>,
    pub in_region: Vec<bool>,
    pub best: f64,
    pub ci: [f64; 2],
    pub ci_argmax: f64,
    pub ci_g: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Step {
    pub n_points: usize,
    pub ci: [f64; 2],
    pub ci_g: [f64; 2],
    pub covered: bool,
    pub covered_g: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct UcbRun {
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub true_max: f64,
    /// Evaluated inputs and responses in order.
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `steps[k]` uses the initial design plus `k` UCB points.
    pub steps: Vec<Step>,
    /// Envelope after the final iteration.
    pub last: Envelope,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelProfile {
    pub theta: f64,
    pub a0: f64,
    pub h: Vec<f64>,
    pub correlation: Vec<f64>,
    pub omega: Vec<f64>,
    pub spectral_density: Vec<f64>,
}

fn family(name: &str) -> Result<Family, String> {
    name.parse::<Family>().map_err(|e| e.to_string())
}

fn kernel_1d(fam: Family, nu: f64, a0_d: f64) -> Result<ProductKernel, String> {
    let nu = (fam == Family::Matern).then_some(nu);
    kernel_for_target(fam, nu, a0_d, &Domain::unit(1), 1.0).map_err(|e| e.to_string())
}

fn check_grid(n_grid: usize) -> Result<(), String> {
    if !(2..=MAX_GRID).contains(&n_grid) {
        return Err(format!("grid size must lie in 2..={MAX_GRID}"));
    }
    Ok(())
}

fn envelope_for(post: &GpPosterior, consts: &UqConstants, grid: &[f64]) -> Result<Envelope, String> {
    let pts = Points::from_flat(1, grid.to_vec()).map_err(|e| e.to_string())?;
    let preds = post.predict_batch(&pts);
    let maximizer = Maximizer::sweep_only(Domain::unit(1), pts.clone()).map_err(|e| e.to_string())?;
    let uq = quantify(consts, post, &pts, &maximizer).map_err(|e| e.to_string())?;
    Ok(Envelope {
        grid: grid.to_vec(),
        mean: preds.iter().map(|p| p.mean).collect(),
        sd: preds.iter().map(|p| p.sd()).collect(),
        upper_cl: preds.iter().map(|&p| upper_cl_from_prediction(p, consts)).collect(),
        naive_upper: preds.iter().map(|&p| naive_upper_from_prediction(p)).collect(),
        in_region: uq.region_mask,
        best: uq.best_observed,
        ci: [uq.interval.lo, uq.interval.hi],
        ci_argmax: uq.interval.argmax[0],
        ci_g: [uq.naive_interval.lo, uq.naive_interval.hi],
    })
}

/// Posterior, UpperCL, naive bound and confidence region on a uniform grid.
#[allow(clippy::too_many_arguments)]
pub fn envelope(
    xs: &[f64],
    ys: &[f64],
    family_name: &str,
    nu: f64,
    a0_d: f64,
    alpha: f64,
    c0: f64,
    n_grid: usize,
) -> Result<Envelope, String> {
    check_grid(n_grid)?;
    if xs.len() != ys.len() || xs.is_empty() {
        return Err("need the same positive number of x and y values".to_string());
    }
    let kernel = kernel_1d(family(family_name)?, nu, a0_d)?;
    let domain = Domain::unit(1);
    let t = t_for_level(alpha).map_err(|e| e.to_string())?;
    let consts = UqConstants::for_kernel(&kernel, &domain, c0, t).map_err(|e| e.to_string())?;
    let pts = Points::from_flat(1, xs.to_vec()).map_err(|e| e.to_string())?;
    let data = Dataset::new(pts, ys.to_vec()).map_err(|e| e.to_string())?;
    data.check_domain(&domain).map_err(|e| e.to_string())?;
    let post = GpPosterior::fit(kernel, data).map_err(|e| e.to_string())?;
    envelope_for(&post, &consts, &mesh_axis(n_grid))
}

/// Simulates a truth on the grid, runs UCB from `n_initial` points and
/// reports both intervals after every iteration.
#[allow(clippy::too_many_arguments)]
pub fn ucb_run(
    seed: u64,
    nu: f64,
    a0_d: f64,
    n_initial: usize,
    iterations: usize,
    alpha: f64,
    c0: f64,
    n_grid: usize,
) -> Result<UcbRun, String> {
    check_grid(n_grid)?;
    if n_initial < 1 || n_initial + iterations > n_grid {
        return Err("need 1 <= n_initial and n_initial + iterations <= grid size".to_string());
    }
    let kernel = kernel_1d(Family::Matern, nu, a0_d)?;
    let domain = Domain::unit(1);
    let t = t_for_level(alpha).map_err(|e| e.to_string())?;
    let consts = UqConstants::for_kernel(&kernel, &domain, c0, t).map_err(|e| e.to_string())?;
    let grid = mesh_axis(n_grid);
    let truth = simulate_on_mesh(&kernel, std::slice::from_ref(&grid), seed).map_err(|e| e.to_string())?;
    let true_max = truth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cands = Points::from_flat(1, grid.clone()).map_err(|e| e.to_string())?;
    let policy = AcquisitionPolicy::new(
        Acquisition::Ucb(BetaSchedule::Srinivas { delta: 0.1 }),
        n_initial,
        cands.clone(),
    )
    .on_candidates();
    let problem = Problem {
        kernel: kernel.clone(),
        domain: domain.clone(),
    };
    let scale = (n_grid - 1) as f64;
    let objective = |x: &[f64]| truth[(x[0] * scale).round() as usize];
    let budget = 1 + iterations;
    let trace = run_abo(
        &policy,
        &FixedBudget(budget),
        &objective,
        &problem,
        seed ^ 0x5eed,
        budget,
    )
    .map_err(|e| e.to_string())?;
    let maximizer = Maximizer::sweep_only(domain, cands).map_err(|e| e.to_string())?;
    let ks: Vec<usize> = (0..=iterations).collect();
    let steps = checkpoint_intervals(&trace.info, &ks, &problem, &consts, &maximizer)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|c| Step {
            n_points: n_initial + c.iterations,
            ci: [c.sequential.lo, c.sequential.hi],
            ci_g: [c.naive.lo, c.naive.hi],
            covered: c.sequential.contains(true_max),
            covered_g: c.naive.contains(true_max),
        })
        .collect();
    let data = trace.info.dataset().map_err(|e| e.to_string())?;
    let post = GpPosterior::fit(kernel, data).map_err(|e| e.to_string())?;
    let last = envelope_for(&post, &consts, &grid)?;
    Ok(UcbRun {
        xs: trace.info.points().into_flat(),
        ys: trace.info.responses(),
        grid,
        truth,
        true_max,
        steps,
        last,
    })
}

/// Correlation on `[0, 1]`, spectral density on `[0, ω_max]` and `A₀` of the
/// kernel scaled to the given `A₀D_Ω`.
pub fn kernel_profile(family_name: &str, nu: f64, a0_d: f64, n: usize) -> Result<KernelProfile, String> {
    let n = n.clamp(2, MAX_GRID);
    let kernel = kernel_1d(family(family_name)?, nu, a0_d)?;
    let k = &kernel.components()[0];
    let h = mesh_axis(n);
    let omega_max = 8.0 / k.theta();
    let omega: Vec<f64> = h.iter().map(|u| u * omega_max).collect();
    Ok(KernelProfile {
        theta: k.theta(),
        a0: k.a0_moment().map_err(|e| e.to_string())?,
        correlation: h.iter().map(|&x| k.correlation(x)).collect(),
        spectral_density: omega.iter().map(|&w| k.spectral_density(w)).collect(),
        h,
        omega,
    })
}

/// Fraction of grid points inside the confidence region.
pub fn region_fraction(env: &Envelope) -> f64 {
    env.in_region.iter().filter(|&&b| b).count() as f64 / env.in_region.len() as f64
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, String> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
}

#[wasm_bindgen(js_name = envelope)]
#[allow(clippy::too_many_arguments)]
pub fn envelope_js(
    xs: Vec<f64>,
    ys: Vec<f64>,
    family: &str,
    nu: f64,
    a0_d: f64,
    alpha: f64,
    c0: f64,
    n_grid: usize,
) -> Result<String, String> {
    to_json(envelope(&xs, &ys, family, nu, a0_d, alpha, c0, n_grid))
}

#[wasm_bindgen(js_name = ucbRun)]
#[allow(clippy::too_many_arguments)]
pub fn ucb_run_js(
    seed: u32,
    nu: f64,
    a0_d: f64,
    n_initial: usize,
    iterations: usize,
    alpha: f64,
    c0: f64,
    n_grid: usize,
) -> Result<String, String> {
    to_json(ucb_run(
        u64::from(seed),
        nu,
        a0_d,
        n_initial,
        iterations,
        alpha,
        c0,
        n_grid,
    ))
}

#[wasm_bindgen(js_name = kernelProfile)]
pub fn kernel_profile_js(family: &str, nu: f64, a0_d: f64, n: usize) -> Result<String, String> {
    to_json(kernel_profile(family, nu, a0_d, n))
}

/// Region membership for arbitrary points given the same inputs as `envelope`.
#[wasm_bindgen(js_name = regionMask)]
#[allow(clippy::too_many_arguments)]
pub fn region_mask_js(
    xs: Vec<f64>,
    ys: Vec<f64>,
    family_name: &str,
    nu: f64,
    a0_d: f64,
    alpha: f64,
    c0: f64,
    query: Vec<f64>,
) -> Result<Vec<u8>, String> {
    let kernel = kernel_1d(family(family_name)?, nu, a0_d)?;
    let t = t_for_level(alpha).map_err(|e| e.to_string())?;
    let consts = UqConstants::for_kernel(&kernel, &Domain::unit(1), c0, t).map_err(|e| e.to_string())?;
    let data =
        Dataset::new(Points::from_flat(1, xs).map_err(|e| e.to_string())?, ys.clone()).map_err(|e| e.to_string())?;
    let post = GpPosterior::fit(kernel, data).map_err(|e| e.to_string())?;
    let best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q = Points::from_flat(1, query).map_err(|e| e.to_string())?;
    let mask = confidence_region(&q, &consts, &post, best).map_err(|e| e.to_string())?;
    Ok(mask.into_iter().map(u8::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_pins_data() {
        let e = envelope(&[0.0, 0.5, 1.0], &[0.2, 1.0, -0.3], "matern", 2.5, 5.0, 0.05, 1.0, 101).unwrap();
        assert_eq!(e.grid.len(), 101);
        assert_eq!(e.upper_cl[50], 1.0);
        assert_eq!(e.sd[0], 0.0);
        assert!(e.in_region[50]);
        assert_eq!(e.ci[0], 1.0);
        assert!(e.ci[1] >= e.ci_g[1]);
        for i in 0..101 {
            assert!(e.upper_cl[i] >= e.mean[i] - 1e-12);
        }
        assert!(region_fraction(&e) > 0.0 && region_fraction(&e) <= 1.0);
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"upper_cl\""));
    }

    #[test]
    fn envelope_rejects_bad_input() {
        assert!(envelope(&[0.1], &[], "matern", 2.5, 5.0, 0.05, 1.0, 50).is_err());
        assert!(envelope(&[0.1], &[1.0], "cubic", 2.5, 5.0, 0.05, 1.0, 50).is_err());
        assert!(envelope(&[1.5], &[1.0], "gaussian", 2.5, 5.0, 0.05, 1.0, 50).is_err());
        assert!(envelope(&[0.1], &[1.0], "matern", 0.5, 5.0, 0.05, 1.0, 50).is_err());
        assert!(envelope(&[0.1], &[1.0], "matern", 1.5, 5.0, 0.05, 1.0, 1).is_err());
    }

    #[test]
    fn ucb_run_is_reproducible() {
        let a = ucb_run(7, 1.5, 10.0, 3, 6, 0.05, 1.0, 201).unwrap();
        let b = ucb_run(7, 1.5, 10.0, 3, 6, 0.05, 1.0, 201).unwrap();
        assert_eq!(a.xs, b.xs);
        assert_eq!(a.xs.len(), 9);
        assert_eq!(a.steps.len(), 7);
        assert_eq!(a.steps[6].n_points, 9);
        let best = a.ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.steps[6].ci[0], best);
        assert!(a.steps.iter().all(|s| s.ci[1] >= s.ci_g[1]));
        assert!(a.true_max >= best);
        assert!(ucb_run(7, 1.5, 10.0, 0, 6, 0.05, 1.0, 201).is_err());
    }

    #[test]
    fn kernel_profile_shapes() {
        let k = kernel_profile("gaussian", 0.0, 1.0, 64).unwrap();
        assert_eq!(k.correlation[0], 1.0);
        assert!((k.a0 - 1.0).abs() < 1e-12);
        assert!(k.correlation.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(k.h.len(), 64);
        let m = kernel_profile("matern", 1.5, 25.0, 10).unwrap();
        assert!((m.a0 - 25.0).abs() < 1e-9);
    }
}
