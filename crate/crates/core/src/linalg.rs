//! Factorizations used by the GP code.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Jitter ladder for correlation matrices (unit diagonal): 1e-10, 1e-9, …, 1e-6.
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-6;

/// Relative truncation threshold for [`pivoted_cholesky`] when used to draw
/// process realizations.
pub const SIMULATION_RANK_TOL: f64 = 1e-14;

/// Cholesky of `k + jitter·I`, escalating jitter ×10 from `JITTER_START`
/// (scaled by `diag_scale`) up to `JITTER_MAX`.
pub fn cholesky_with_jitter(k: &DMatrix<f64>, diag_scale: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let mut jitter = JITTER_START * diag_scale;
    let max = JITTER_MAX * diag_scale * (1.0 + 1e-9);
    loop {
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Ok((chol, jitter));
        }
        let next = jitter * 10.0;
        if next > max {
            return Err(Error::Singular { n, jitter });
        }
        jitter = next;
    }
}

/// Low-rank factor `L` (row-major `n × rank`) with `L Lᵀ ≈ K`, produced by
/// diagonally pivoted Cholesky without any jitter.
///
/// Elimination stops once the largest remaining diagonal entry falls to
/// `rel_tol · max diag(K)`, so the neglected part of `K` has trace at most
/// `n · rel_tol · max diag(K)`. Works for singular PSD matrices, including
/// exact duplicates.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    n: usize,
    rank: usize,
    // row i occupies [i*stride, i*stride + rank)
    stride: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl LowRankFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.stride..i * self.stride + self.rank]
    }

    /// Rows chosen as pivots, in elimination order. Row `pivots[k]` is zero
    /// past column `k`, so these rows form a lower triangular block.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// `L · z` for `z` of length `rank`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.rank);
        (0..self.n).map(|i| dot(self.row(i), z)).collect()
    }
}

/// Pivoted Cholesky of a symmetric PSD matrix given by an entry oracle.
pub fn pivoted_cholesky<F>(n: usize, entry: F, rel_tol: f64) -> LowRankFactor
where
    F: Fn(usize, usize) -> f64,
{
    let scale = (0..n).map(|i| entry(i, i)).fold(0.0, f64::max);
    pivoted_cholesky_above(n, entry, rel_tol * scale)
}

/// As [`pivoted_cholesky`], stopping once no remaining diagonal entry
/// exceeds the absolute `threshold`.
pub fn pivoted_cholesky_above<F>(n: usize, entry: F, threshold: f64) -> LowRankFactor
where
    F: Fn(usize, usize) -> f64,
{
    let stride = n;
    let mut data = vec![0.0; n * stride];
    let mut diag: Vec<f64> = (0..n).map(|i| entry(i, i)).collect();
    // perm[..k] are the pivots chosen so far; factor rows stay in original order.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..n {
        let (best, &best_val) =
            perm[k..]
                .iter()
                .enumerate()
                .map(|(j, &i)| (j, &diag[i]))
                .fold(
                    (0, &f64::NEG_INFINITY),
                    |acc, cur| if cur.1 > acc.1 { cur } else { acc },
                );
        if best_val.is_nan() || best_val <= threshold {
            break;
        }
        perm.swap(k, k + best);
        let piv = perm[k];
        let lkk = best_val.sqrt();
        data[piv * stride + k] = lkk;
        let (piv_row_start, piv_row_end) = (piv * stride, piv * stride + k);
        let piv_row: Vec<f64> = data[piv_row_start..piv_row_end].to_vec();
        for &i in &perm[k + 1..] {
            let row = &data[i * stride..i * stride + k];
            let v = (entry(i, piv) - dot(row, &piv_row)) / lkk;
            data[i * stride + k] = v;
            diag[i] -= v * v;
        }
        rank = k + 1;
    }
    perm.truncate(rank);
    LowRankFactor {
        n,
        rank,
        stride,
        data,
        pivots: perm,
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
