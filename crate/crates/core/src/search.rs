//! Maximization over a box: a sweep over candidate points followed by a
//! derivative-free coordinate search from the best few candidates.

use crate::kernels::Domain;
use crate::points::Points;

/// Coordinate-search settings for polishing the best sweep candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polish {
    /// Number of best candidates to polish.
    pub top_k: usize,
    /// Function evaluations per polished start.
    pub evaluations: usize,
    /// Initial step as a fraction of each domain width.
    pub initial_step: f64,
    /// Stop once every step falls below this fraction of the width.
    pub min_step: f64,
}

impl Default for Polish {
    fn default() -> Self {
        Polish {
            top_k: 5,
            evaluations: 100,
            initial_step: 0.05,
            min_step: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxResult {
    pub argmax: Vec<f64>,
    pub value: f64,
    /// Best candidate of the sweep (before polishing).
    pub candidate_index: usize,
    pub evaluations: usize,
}

/// Sweeps `f` over `candidates`, then polishes.
///
/// Ties in the sweep go to the lowest candidate index, and polishing only
/// replaces the sweep winner on a strict improvement.
pub fn maximize<F>(f: F, candidates: &Points, domain: &Domain, polish: Option<&Polish>) -> MaxResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values = sweep(&f, candidates);
    maximize_with_values(&values, f, candidates, domain, polish)
}

#[cfg(feature = "parallel")]
fn sweep<F: Fn(&[f64]) -> f64 + Sync>(f: &F, candidates: &Points) -> Vec<f64> {
    use rayon::prelude::*;
    (0..candidates.len())
        .into_par_iter()
        .map(|i| f(candidates.row(i)))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn sweep<F: Fn(&[f64]) -> f64 + Sync>(f: &F, candidates: &Points) -> Vec<f64> {
    candidates.rows().map(f).collect()
}

/// As [`maximize`], with the sweep values already computed (e.g. by a
/// batched evaluation).
pub fn maximize_with_values<F>(
    values: &[f64],
    f: F,
    candidates: &Points,
    domain: &Domain,
    polish: Option<&Polish>,
) -> MaxResult
where
    F: Fn(&[f64]) -> f64,
{
    assert!(!candidates.is_empty(), "maximize needs at least one candidate");
    assert_eq!(values.len(), candidates.len());
    let best_idx = argmax_first(values);
    let mut result = MaxResult {
        argmax: candidates.row(best_idx).to_vec(),
        value: values[best_idx],
        candidate_index: best_idx,
        evaluations: values.len(),
    };
    let Some(polish) = polish else {
        return result;
    };
    for start in top_k_indices(values, polish.top_k) {
        let (x, v, used) = coordinate_search(&f, candidates.row(start), values[start], domain, polish);
        result.evaluations += used;
        if v > result.value {
            result.value = v;
            result.argmax = x;
        }
    }
    result
}

/// Index of the largest value, lowest index on ties; NaN never wins.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    best
}

fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn coordinate_search<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    start_value: f64,
    domain: &Domain,
    polish: &Polish,
) -> (Vec<f64>, f64, usize) {
    let p = start.len();
    let mut x = start.to_vec();
    let mut fx = start_value;
    let mut steps: Vec<f64> = (0..p).map(|d| polish.initial_step * domain.width(d)).collect();
    let mut used = 0;
    let mut trial = x.clone();
    'outer: while used < polish.evaluations {
        let mut improved = false;
        for d in 0..p {
            for sign in [1.0, -1.0] {
                if used >= polish.evaluations {
                    break 'outer;
                }
                trial.copy_from_slice(&x);
                trial[d] = (x[d] + sign * steps[d]).clamp(domain.lower()[d], domain.upper()[d]);
                if trial[d] == x[d] {
                    continue;
                }
                let v = f(&trial);
                used += 1;
                if v > fx {
                    x.copy_from_slice(&trial);
                    fx = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for (d, s) in steps.iter_mut().enumerate() {
                *s *= 0.5;
                if *s < polish.min_step * domain.width(d) {
                    break 'outer;
                }
            }
        }
    }
    (x, fx, used)
}
