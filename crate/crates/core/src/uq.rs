//! Uniform confidence upper limit (UpperCL) and the confidence region /
//! interval for the maximizer and maximum value built from it.
//!
//! ```text
//! UpperCL(x) = μ(x) + s(x) √log(eσ/s(x)) · (C √(p (1 ∨ log(A₀ D_Ω))) + t)
//! CR_t = { x : UpperCL(x) ≥ maxᵢ f(xᵢ) }
//! CI_t = [ maxᵢ f(xᵢ), max_x UpperCL(x) ]
//! ```
//!
//! The confidence level is `1 − exp(−t²/2)`. Fixed designs and data from a
//! sequential run (any policy with a stopping time) use the same formulas.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpPosterior, Prediction};
use crate::kernels::{Domain, ProductKernel};
use crate::points::{sq_dist, Points};
use crate::search::{maximize_with_values, Polish};

/// Default universal constant.
pub const DEFAULT_C0: f64 = 1.0;

/// 0.95 quantile of the standard normal distribution.
pub const NAIVE_QUANTILE: f64 = 1.644_853_626_951_472_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UqConstants {
    pub c0: f64,
    pub t: f64,
    pub a0: f64,
    pub d_omega: f64,
    pub p: usize,
    pub sigma: f64,
}

impl UqConstants {
    pub fn new(c0: f64, t: f64, a0: f64, d_omega: f64, p: usize, sigma: f64) -> Result<Self> {
        for (name, v) in [("c0", c0), ("t", t), ("a0", a0), ("d_omega", d_omega), ("sigma", sigma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if p == 0 {
            return Err(Error::InvalidArgument("p must be at least 1".to_string()));
        }
        Ok(UqConstants {
            c0,
            t,
            a0,
            d_omega,
            p,
            sigma,
        })
    }

    /// Constants matching `kernel` on `domain`.
    pub fn for_kernel(kernel: &ProductKernel, domain: &Domain, c0: f64, t: f64) -> Result<Self> {
        if kernel.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: kernel.dim(),
            });
        }
        UqConstants::new(
            c0,
            t,
            kernel.a0_moment()?,
            domain.diameter(),
            domain.dim(),
            kernel.sigma(),
        )
    }

    /// `C √(p (1 ∨ log(A₀ D_Ω)))`.
    pub fn bound_factor(&self) -> f64 {
        self.c0 * (self.p as f64 * (self.a0 * self.d_omega).ln().max(1.0)).sqrt()
    }

    /// Multiplier of `s √log(eσ/s)` in UpperCL.
    pub fn inflation(&self) -> f64 {
        self.bound_factor() + self.t
    }

    /// Confidence level `1 − exp(−t²/2)`.
    pub fn level(&self) -> f64 {
        1.0 - (-self.t * self.t / 2.0).exp()
    }

    pub fn with_t(self, t: f64) -> Self {
        UqConstants { t, ..self }
    }

    pub fn with_c0(self, c0: f64) -> Self {
        UqConstants { c0, ..self }
    }
}

/// `t = √(−2 ln α)`, so that `exp(−t²/2) = α`.
pub fn t_for_level(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok((-2.0 * alpha.ln()).sqrt())
}

/// UpperCL from a posterior prediction. `s` is clamped to `[0, σ]` and the
/// inflation vanishes at `s = 0`.
#[inline]
pub fn upper_cl_from_prediction(pred: Prediction, consts: &UqConstants) -> f64 {
    let sigma = consts.sigma;
    let s = pred.sd().min(sigma);
    if s <= 0.0 {
        return pred.mean;
    }
    pred.mean + s * (E * sigma / s).ln().sqrt() * consts.inflation()
}

pub fn upper_cl(x: &[f64], consts: &UqConstants, post: &GpPosterior) -> f64 {
    upper_cl_from_prediction(post.predict(x), consts)
}

/// `μ + q σ` with `q` the 0.95 normal quantile.
#[inline]
pub fn naive_upper_from_prediction(pred: Prediction) -> f64 {
    pred.mean + NAIVE_QUANTILE * pred.sd()
}

fn require_data(post: &GpPosterior) -> Result<f64> {
    post.data()
        .best()
        .map(|(_, y)| y)
        .ok_or_else(|| Error::InvalidArgument("needs at least one observation".to_string()))
}

/// Membership of each candidate in CR_t.
pub fn confidence_region(
    candidates: &Points,
    consts: &UqConstants,
    post: &GpPosterior,
    observed_max: f64,
) -> Result<Vec<bool>> {
    require_data(post)?;
    Ok(post
        .predict_batch(candidates)
        .into_iter()
        .map(|p| upper_cl_from_prediction(p, consts) >= observed_max)
        .collect())
}

/// Search set used to approximate a maximum over Ω.
#[derive(Debug, Clone)]
pub struct Maximizer {
    pub domain: Domain,
    pub candidates: Points,
    pub polish: Option<Polish>,
}

impl Maximizer {
    pub fn new(domain: Domain, candidates: Points, polish: Option<Polish>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("maximizer needs candidates".to_string()));
        }
        if candidates.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: candidates.dim(),
            });
        }
        Ok(Maximizer {
            domain,
            candidates,
            polish,
        })
    }

    /// Sweep only; the maximum is exactly over the candidate set.
    pub fn sweep_only(domain: Domain, candidates: Points) -> Result<Self> {
        Maximizer::new(domain, candidates, None)
    }

    fn run<G>(&self, post: &GpPosterior, transform: G) -> (Vec<f64>, f64)
    where
        G: Fn(Prediction) -> f64,
    {
        let values: Vec<f64> = post
            .predict_batch(&self.candidates)
            .into_iter()
            .map(&transform)
            .collect();
        let r = maximize_with_values(
            &values,
            |x| transform(post.predict(x)),
            &self.candidates,
            &self.domain,
            self.polish.as_ref(),
        );
        (r.argmax, r.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Where the upper endpoint was attained.
    pub argmax: Vec<f64>,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

fn interval_from(post: &GpPosterior, lo: f64, (argmax, hi): (Vec<f64>, f64)) -> Interval {
    // the best design point lies in Ω and attains `lo` exactly
    if hi >= lo {
        Interval { lo, hi, argmax }
    } else {
        let (i, _) = post.data().best().expect("checked non-empty");
        Interval {
            lo,
            hi: lo,
            argmax: post.data().points().row(i).to_vec(),
        }
    }
}

/// CI_t = [best observed, max UpperCL].
pub fn confidence_interval(consts: &UqConstants, post: &GpPosterior, maximizer: &Maximizer) -> Result<Interval> {
    let lo = require_data(post)?;
    let found = maximizer.run(post, |p| upper_cl_from_prediction(p, consts));
    Ok(interval_from(post, lo, found))
}

/// CI_G = [best observed, max μ + q₀.₀₅ σ], the pointwise baseline.
pub fn naive_interval(post: &GpPosterior, maximizer: &Maximizer) -> Result<Interval> {
    let lo = require_data(post)?;
    let found = maximizer.run(post, naive_upper_from_prediction);
    Ok(interval_from(post, lo, found))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UqOutput {
    pub region_mask: Vec<bool>,
    pub interval: Interval,
    pub naive_interval: Interval,
    pub best_observed: f64,
    pub argbest: Vec<f64>,
}

/// Region over `region_candidates`, both intervals over `maximizer`.
pub fn quantify(
    consts: &UqConstants,
    post: &GpPosterior,
    region_candidates: &Points,
    maximizer: &Maximizer,
) -> Result<UqOutput> {
    let (ibest, best) = post
        .data()
        .best()
        .ok_or_else(|| Error::InvalidArgument("needs at least one observation".to_string()))?;
    Ok(UqOutput {
        region_mask: confidence_region(region_candidates, consts, post, best)?,
        interval: confidence_interval(consts, post, maximizer)?,
        naive_interval: naive_interval(post, maximizer)?,
        best_observed: best,
        argbest: post.data().points().row(ibest).to_vec(),
    })
}

/// k-nearest-neighbour membership predictor for a confidence region sampled
/// on a finite candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnRegion {
    dim: usize,
    k: usize,
    points: Vec<f64>,
    labels: Vec<bool>,
}

impl KnnRegion {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Majority vote among the `k` nearest candidates (Euclidean, lower index
    /// first on equal distance). An exact tie counts as inside.
    pub fn contains(&self, x: &[f64]) -> bool {
        assert_eq!(x.len(), self.dim, "query dimension mismatch");
        let mut d: Vec<(f64, usize)> = self
            .points
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, p)| (sq_dist(p, x), i))
            .collect();
        let k = self.k;
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
        }
        let inside = d.iter().filter(|(_, i)| self.labels[*i]).count();
        2 * inside >= k
    }
}

pub fn region_knn_summary(candidates: &Points, mask: &[bool], k: usize) -> Result<KnnRegion> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates".to_string()));
    }
    if mask.len() != candidates.len() {
        return Err(Error::DimensionMismatch {
            expected: candidates.len(),
            got: mask.len(),
        });
    }
    if k == 0 || k > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "k must lie in 1..={}, got {k}",
            candidates.len()
        )));
    }
    Ok(KnnRegion {
        dim: candidates.dim(),
        k,
        points: candidates.as_flat().to_vec(),
        labels: mask.to_vec(),
    })
}
