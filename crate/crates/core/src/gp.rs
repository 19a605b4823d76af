//! Noiseless Gaussian process regression.
//!
//! With correlation vector `r(x) = (Ψ(x − xᵢ))ᵢ` and correlation matrix
//! `K = (Ψ(xⱼ − xₖ))ⱼₖ`:
//!
//! ```text
//! μ(x)  = r(x)ᵀ K⁻¹ Y
//! σ²(x) = σ² (1 − r(x)ᵀ K⁻¹ r(x))
//! ```
//!
//! The same code serves fixed designs and the data accumulated by a
//! sequential run; only the origin of the points differs.

use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{Domain, ProductKernel};
use crate::linalg::{self, cholesky_with_jitter, pivoted_cholesky, SIMULATION_RANK_TOL};
use crate::points::{sq_dist, Points};
use crate::rng::rng_from_seed;

/// Design points and their observed responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Points,
    responses: Vec<f64>,
}

impl Dataset {
    pub const DEFAULT_DUPLICATE_TOL: f64 = 1e-12;

    pub fn new(points: Points, responses: Vec<f64>) -> Result<Self> {
        Dataset::with_tolerance(points, responses, Self::DEFAULT_DUPLICATE_TOL)
    }

    /// Rejects any two points closer than `tol` in Euclidean distance.
    pub fn with_tolerance(points: Points, responses: Vec<f64>, tol: f64) -> Result<Self> {
        if points.len() != responses.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: responses.len(),
            });
        }
        if let Some(i) = responses.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidArgument(format!("response {i} is not finite")));
        }
        let tol2 = tol * tol;
        for i in 0..points.len() {
            for j in 0..i {
                if sq_dist(points.row(i), points.row(j)) <= tol2 {
                    return Err(Error::DuplicatePoint {
                        first: j,
                        second: i,
                        tolerance: tol,
                    });
                }
            }
        }
        Ok(Dataset { points, responses })
    }

    pub fn empty(dim: usize) -> Self {
        Dataset {
            points: Points::new(dim),
            responses: Vec::new(),
        }
    }

    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        match self.points.rows().position(|x| !domain.contains(x)) {
            Some(index) => Err(Error::OutOfDomain { index }),
            None => Ok(()),
        }
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Index and value of the largest response; first index on ties.
    pub fn best(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &y) in self.responses.iter().enumerate() {
            if best.is_none_or(|(_, b)| y > b) {
                best = Some((i, y));
            }
        }
        best
    }
}

/// Posterior mean and variance at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Fitted posterior state. Immutable; an empty dataset represents the prior.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: ProductKernel,
    data: Dataset,
    // lower-triangular factor of K + jitter·I
    chol_l: DMatrix<f64>,
    kinv_y: DVector<f64>,
    jitter: f64,
}

/// Queries within this distance of a design point return the observed value
/// with zero variance.
const EXACT_HIT_TOL: f64 = Dataset::DEFAULT_DUPLICATE_TOL;

const BATCH: usize = 512;

impl GpPosterior {
    pub fn prior(kernel: ProductKernel) -> Self {
        let dim = kernel.dim();
        GpPosterior {
            kernel,
            data: Dataset::empty(dim),
            chol_l: DMatrix::zeros(0, 0),
            kinv_y: DVector::zeros(0),
            jitter: 0.0,
        }
    }

    pub fn fit(kernel: ProductKernel, data: Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument(
                "fit needs at least one design point; use GpPosterior::prior".to_string(),
            ));
        }
        if data.points().dim() != kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: data.points().dim(),
            });
        }
        let n = data.len();
        let pts = data.points();
        let k = DMatrix::from_fn(n, n, |i, j| kernel.corr_between(pts.row(i), pts.row(j)));
        let (chol, jitter) = cholesky_with_jitter(&k, 1.0)?;
        let y = DVector::from_column_slice(data.responses());
        let kinv_y = chol.solve(&y);
        let chol_l = chol.unpack();
        Ok(GpPosterior {
            kernel,
            data,
            chol_l,
            kinv_y,
            jitter,
        })
    }

    pub fn kernel(&self) -> &ProductKernel {
        &self.kernel
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn is_prior(&self) -> bool {
        self.data.is_empty()
    }

    /// Jitter that was added to the diagonal of K.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular factor of `K + jitter·I`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    /// `K⁻¹ Y`.
    pub fn kinv_y(&self) -> &DVector<f64> {
        &self.kinv_y
    }

    fn exact_hit(&self, x: &[f64]) -> Option<usize> {
        let tol2 = EXACT_HIT_TOL * EXACT_HIT_TOL;
        self.data.points().rows().position(|xi| sq_dist(xi, x) <= tol2)
    }

    fn correlation_vector(&self, x: &[f64]) -> DVector<f64> {
        let pts = self.data.points();
        DVector::from_iterator(pts.len(), pts.rows().map(|xi| self.kernel.corr_between(x, xi)))
    }

    /// Posterior mean and variance at `x`, variance clamped to `[0, σ²]`.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        assert_eq!(x.len(), self.kernel.dim(), "query dimension mismatch");
        let s2 = self.kernel.variance();
        if self.is_prior() {
            return Prediction {
                mean: 0.0,
                variance: s2,
            };
        }
        if let Some(i) = self.exact_hit(x) {
            return Prediction {
                mean: self.data.responses()[i],
                variance: 0.0,
            };
        }
        let mut r = self.correlation_vector(x);
        let mean = r.dot(&self.kinv_y);
        self.chol_l.solve_lower_triangular_mut(&mut r);
        let variance = (s2 * (1.0 - r.norm_squared())).clamp(0.0, s2);
        Prediction { mean, variance }
    }

    /// Unclamped `σ²(1 − r(x)ᵀK⁻¹r(x))`, for diagnostics.
    pub fn raw_variance(&self, x: &[f64]) -> f64 {
        let s2 = self.kernel.variance();
        if self.is_prior() {
            return s2;
        }
        let mut r = self.correlation_vector(x);
        self.chol_l.solve_lower_triangular_mut(&mut r);
        s2 * (1.0 - r.norm_squared())
    }

    /// [`predict`](Self::predict) over many points, with one triangular solve
    /// per block of queries.
    pub fn predict_batch(&self, queries: &Points) -> Vec<Prediction> {
        assert_eq!(queries.dim(), self.kernel.dim(), "query dimension mismatch");
        let s2 = self.kernel.variance();
        let m = queries.len();
        if self.is_prior() {
            return vec![
                Prediction {
                    mean: 0.0,
                    variance: s2
                };
                m
            ];
        }
        let n = self.data.len();
        let pts = self.data.points();
        let mut out = Vec::with_capacity(m);
        let mut start = 0;
        while start < m {
            let end = (start + BATCH).min(m);
            let mut rmat = DMatrix::from_fn(n, end - start, |i, j| {
                self.kernel.corr_between(pts.row(i), queries.row(start + j))
            });
            let means = rmat.tr_mul(&self.kinv_y);
            self.chol_l.solve_lower_triangular_mut(&mut rmat);
            for j in 0..end - start {
                let q = queries.row(start + j);
                let p = match self.exact_hit(q) {
                    Some(i) => Prediction {
                        mean: self.data.responses()[i],
                        variance: 0.0,
                    },
                    None => Prediction {
                        mean: means[j],
                        variance: (s2 * (1.0 - rmat.column(j).norm_squared())).clamp(0.0, s2),
                    },
                };
                out.push(p);
            }
            start = end;
        }
        out
    }

    /// Posterior covariance `σ²(Ψ(x − x′) − r(x)ᵀK⁻¹r(x′))`.
    pub fn covariance(&self, x: &[f64], xp: &[f64]) -> f64 {
        let s2 = self.kernel.variance();
        let prior = self.kernel.corr_between(x, xp);
        if self.is_prior() {
            return s2 * prior;
        }
        let mut r = self.correlation_vector(x);
        let mut rp = self.correlation_vector(xp);
        self.chol_l.solve_lower_triangular_mut(&mut r);
        self.chol_l.solve_lower_triangular_mut(&mut rp);
        s2 * (prior - r.dot(&rp))
    }

    /// A posterior function draw: a random-feature prior draw `h` plus the
    /// GP interpolation of the residuals `Y − h(X)`, so that the draw
    /// reproduces the data.
    pub fn posterior_draw(&self, n_features: usize, seed: u64) -> Result<PosteriorDraw> {
        let prior = spectral_sample(&self.kernel, n_features, seed)?;
        let pts = self.data.points();
        let weights = if self.is_prior() {
            DVector::zeros(0)
        } else {
            let resid = DVector::from_iterator(
                pts.len(),
                pts.rows().zip(self.data.responses()).map(|(x, y)| y - prior.eval(x)),
            );
            let mut w = resid;
            self.chol_l.solve_lower_triangular_mut(&mut w);
            self.chol_l.tr_solve_lower_triangular_mut(&mut w);
            w
        };
        Ok(PosteriorDraw {
            prior,
            kernel: self.kernel.clone(),
            data: self.data.clone(),
            weights,
        })
    }
}

/// Draws one realization of the zero-mean process on the rows of `grid`.
///
/// The covariance `σ²Ψ` is factored by pivoted Cholesky truncated at a
/// relative tolerance of [`SIMULATION_RANK_TOL`]; no diagonal jitter is
/// added, so the draw carries no artificial white noise.
pub fn simulate_on_grid(kernel: &ProductKernel, grid: &Points, seed: u64) -> Result<Vec<f64>> {
    check_grid(kernel, grid)?;
    let factor = pivoted_cholesky(
        grid.len(),
        |i, j| kernel.corr_between(grid.row(i), grid.row(j)),
        SIMULATION_RANK_TOL,
    );
    let mut rng = rng_from_seed(seed);
    let z: Vec<f64> = (0..factor.rank())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let sigma = kernel.sigma();
    Ok(factor.apply(&z).into_iter().map(|v| sigma * v).collect())
}

/// Joint draws on `design ∪ grid` for a fixed grid and varying designs.
///
/// The grid covariance is factored once. Each draw takes the grid values
/// from that factor and then the design values from their conditional law
/// given the pivot grid points, which yields the same joint distribution as
/// factoring the whole `(n + m)`-point covariance while costing `O(r²n)`
/// instead of `O((n + m)³)` per draw, `r` being the numerical rank of the grid
/// covariance.
#[derive(Debug, Clone)]
pub struct GridSimulator {
    kernel: ProductKernel,
    grid: Points,
    factor: linalg::LowRankFactor,
    // pivot block of the factor, lower triangular in pivot order
    pivot_block: DMatrix<f64>,
}

impl GridSimulator {
    pub fn new(kernel: &ProductKernel, grid: &Points) -> Result<Self> {
        check_grid(kernel, grid)?;
        let factor = pivoted_cholesky(
            grid.len(),
            |i, j| kernel.corr_between(grid.row(i), grid.row(j)),
            SIMULATION_RANK_TOL,
        );
        let r = factor.rank();
        let piv = factor.pivots();
        let pivot_block = DMatrix::from_fn(r, r, |k, j| factor.row(piv[k])[j]);
        Ok(GridSimulator {
            kernel: kernel.clone(),
            grid: grid.clone(),
            factor,
            pivot_block,
        })
    }

    pub fn kernel(&self) -> &ProductKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &Points {
        &self.grid
    }

    /// Numerical rank of the grid correlation matrix.
    pub fn rank(&self) -> usize {
        self.factor.rank()
    }

    /// One joint realization: values at `design`, then values on the grid.
    pub fn draw(&self, design: &Points, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        if design.dim() != self.kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim(),
                got: design.dim(),
            });
        }
        let mut rng = rng_from_seed(seed);
        let xi: Vec<f64> = (0..self.rank()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let sigma = self.kernel.sigma();
        let on_grid: Vec<f64> = self.factor.apply(&xi).into_iter().map(|v| sigma * v).collect();
        let n = design.len();
        if n == 0 {
            return Ok((Vec::new(), on_grid));
        }
        // V = Ψ_DP L₁⁻ᵀ, stored transposed (r × n)
        let piv = self.factor.pivots();
        let mut v = DMatrix::from_fn(self.rank(), n, |k, d| {
            self.kernel.corr_between(design.row(d), self.grid.row(piv[k]))
        });
        self.pivot_block.solve_lower_triangular_mut(&mut v);
        let cols: Vec<Vec<f64>> = (0..n).map(|d| v.column(d).iter().copied().collect()).collect();
        let residual = linalg::pivoted_cholesky_above(
            n,
            |i, j| kernel_residual(&self.kernel, design, &cols, i, j),
            SIMULATION_RANK_TOL,
        );
        let eta: Vec<f64> = (0..residual.rank())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let noise = residual.apply(&eta);
        let on_design = (0..n)
            .map(|d| sigma * (linalg::dot(&cols[d], &xi) + noise[d]))
            .collect();
        Ok((on_design, on_grid))
    }
}

/// Entry of `Ψ_DD − V Vᵀ`, the design correlation left after conditioning.
fn kernel_residual(kernel: &ProductKernel, design: &Points, cols: &[Vec<f64>], i: usize, j: usize) -> f64 {
    kernel.corr_between(design.row(i), design.row(j)) - linalg::dot(&cols[i], &cols[j])
}

fn check_grid(kernel: &ProductKernel, grid: &Points) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("simulation grid is empty".to_string()));
    }
    if grid.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: grid.dim(),
        });
    }
    Ok(())
}

/// Draws one realization on the tensor mesh `axes[0] × … × axes[p−1]`,
/// enumerated with the first coordinate varying slowest.
///
/// A product kernel on a mesh has covariance `σ² ⊗ᵢ Ψᵢ`, so a square root is
/// the Kronecker product of per-axis factors and the draw costs a few small
/// factorizations instead of one of size `∏ |axesᵢ|`.
pub fn simulate_on_mesh(kernel: &ProductKernel, axes: &[Vec<f64>], seed: u64) -> Result<Vec<f64>> {
    if axes.len() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: axes.len(),
        });
    }
    if axes.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("mesh axis is empty".to_string()));
    }
    let factors: Vec<_> = axes
        .iter()
        .zip(kernel.components())
        .map(|(ax, k)| pivoted_cholesky(ax.len(), |i, j| k.correlation(ax[i] - ax[j]), SIMULATION_RANK_TOL))
        .collect();
    let mut rng = rng_from_seed(seed);
    let mut shape: Vec<usize> = factors.iter().map(|f| f.rank()).collect();
    let total: usize = shape.iter().product();
    let mut tensor: Vec<f64> = (0..total).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    for (mode, f) in factors.iter().enumerate() {
        tensor = mode_product(&tensor, &shape, mode, f);
        shape[mode] = f.n();
    }
    let sigma = kernel.sigma();
    tensor.iter_mut().for_each(|v| *v *= sigma);
    Ok(tensor)
}

/// Multiplies a row-major tensor along `mode` by the `n × rank` factor.
fn mode_product(t: &[f64], shape: &[usize], mode: usize, f: &linalg::LowRankFactor) -> Vec<f64> {
    let outer: usize = shape[..mode].iter().product();
    let inner: usize = shape[mode + 1..].iter().product();
    let r = shape[mode];
    let n = f.n();
    let mut out = vec![0.0; outer * n * inner];
    for o in 0..outer {
        for i in 0..n {
            let row = f.row(i);
            let dst = &mut out[(o * n + i) * inner..(o * n + i + 1) * inner];
            for (k, &c) in row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let src = &t[(o * r + k) * inner..(o * r + k + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }
    out
}

/// A random-feature approximation of a prior draw:
/// `h(x) = σ √(2/J) Σⱼ cos(ωⱼᵀx + bⱼ)` with `ωⱼ ~ Ψ̃`, `bⱼ ~ U[0, 2π)`.
#[derive(Debug, Clone)]
pub struct SpectralDraw {
    dim: usize,
    omegas: Vec<f64>,
    phases: Vec<f64>,
    amplitude: f64,
}

impl SpectralDraw {
    pub fn n_features(&self) -> usize {
        self.phases.len()
    }

    pub fn frequency(&self, j: usize) -> &[f64] {
        &self.omegas[j * self.dim..(j + 1) * self.dim]
    }

    pub fn phase(&self, j: usize) -> f64 {
        self.phases[j]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, b) in self.omegas.chunks_exact(self.dim).zip(&self.phases) {
            acc += (linalg::dot(w, x) + b).cos();
        }
        self.amplitude * acc
    }
}

pub fn spectral_sample(kernel: &ProductKernel, n_features: usize, seed: u64) -> Result<SpectralDraw> {
    if n_features == 0 {
        return Err(Error::InvalidArgument("n_features must be at least 1".to_string()));
    }
    let dim = kernel.dim();
    let mut rng = rng_from_seed(seed);
    let mut omegas = Vec::with_capacity(n_features * dim);
    let mut phases = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        for k in kernel.components() {
            omegas.push(k.sample_frequency(&mut rng));
        }
        phases.push(rng.random_range(0.0..2.0 * PI));
    }
    Ok(SpectralDraw {
        dim,
        omegas,
        phases,
        amplitude: kernel.sigma() * (2.0 / n_features as f64).sqrt(),
    })
}

/// Posterior function draw returned by [`GpPosterior::posterior_draw`].
#[derive(Debug, Clone)]
pub struct PosteriorDraw {
    prior: SpectralDraw,
    kernel: ProductKernel,
    data: Dataset,
    weights: DVector<f64>,
}

impl PosteriorDraw {
    pub fn prior_draw(&self) -> &SpectralDraw {
        &self.prior
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let tol2 = EXACT_HIT_TOL * EXACT_HIT_TOL;
        let pts = self.data.points();
        let mut correction = 0.0;
        for (i, xi) in pts.rows().enumerate() {
            if sq_dist(xi, x) <= tol2 {
                return self.data.responses()[i];
            }
            correction += self.kernel.corr_between(x, xi) * self.weights[i];
        }
        self.prior.eval(x) + correction
    }
}

/// One normalized term of the sup statistic; `0/0 = 0` when `s = 0`.
#[inline]
pub fn normalized_error(truth: f64, pred: Prediction, sigma: f64) -> f64 {
    let s = pred.sd().min(sigma);
    if s <= 0.0 {
        return 0.0;
    }
    (truth - pred.mean) / (s * (E * sigma / s).ln().sqrt())
}

/// `max_i (truth[i] − μ(gᵢ)) / (σ(gᵢ) √log(eσ/σ(gᵢ)))` over the rows of `grid`.
pub fn sup_statistic_m(post: &GpPosterior, truth: &[f64], grid: &Points) -> Result<f64> {
    if truth.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: truth.len(),
        });
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid is empty".to_string()));
    }
    let sigma = post.kernel().sigma();
    Ok(post
        .predict_batch(grid)
        .into_iter()
        .zip(truth)
        .map(|(p, &z)| normalized_error(z, p, sigma))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel1d;
    use approx::assert_relative_eq;

    fn gauss1(theta: f64, var: f64) -> ProductKernel {
        ProductKernel::isotropic(Kernel1d::gaussian(theta).unwrap(), 1, var).unwrap()
    }

    /// θ such that Ψ(1) = 1/2 for the unit-θ Gaussian, i.e. exp(−1/θ²) = 1/2.
    fn half_at_one() -> ProductKernel {
        gauss1(1.0 / 2f64.ln().sqrt(), 1.0)
    }

    fn data1(xs: &[f64], ys: &[f64]) -> Dataset {
        let pts = Points::from_flat(1, xs.to_vec()).unwrap();
        Dataset::new(pts, ys.to_vec()).unwrap()
    }

    #[test]
    fn single_point_fit() {
        let post = GpPosterior::fit(gauss1(0.3, 1.0), data1(&[0.2], &[1.7])).unwrap();
        assert_eq!(post.chol_factor().nrows(), 1);
        assert_relative_eq!(post.kinv_y()[0], 1.7, epsilon = 1e-9);
    }

    #[test]
    fn two_point_fit_inverts_by_hand() {
        let k = half_at_one();
        assert_relative_eq!(k.correlation(&[1.0]).unwrap(), 0.5, epsilon = 1e-15);
        let post = GpPosterior::fit(k, data1(&[0.0, 1.0], &[1.0, 0.0])).unwrap();
        assert_relative_eq!(post.kinv_y()[0], 4.0 / 3.0, epsilon = 1e-8);
        assert_relative_eq!(post.kinv_y()[1], -2.0 / 3.0, epsilon = 1e-8);
    }

    #[test]
    fn duplicate_point_is_rejected() {
        let pts = Points::from_flat(1, vec![0.3, 0.3]).unwrap();
        assert!(matches!(
            Dataset::new(pts, vec![1.0, 2.0]),
            Err(Error::DuplicatePoint {
                first: 0,
                second: 1,
                ..
            })
        ));
    }

    #[test]
    fn hand_posterior_single_point() {
        let post = GpPosterior::fit(half_at_one(), data1(&[0.0], &[2.0])).unwrap();
        let p = post.predict(&[1.0]);
        assert_relative_eq!(p.mean, 1.0, epsilon = 1e-9);
        assert_relative_eq!(p.variance, 0.75, epsilon = 1e-9);
        let at_design = post.predict(&[0.0]);
        assert_eq!(at_design.mean, 2.0);
        assert_eq!(at_design.variance, 0.0);
    }

    #[test]
    fn prior_prediction() {
        let post = GpPosterior::prior(gauss1(1.0, 4.0));
        let p = post.predict(&[0.3]);
        assert_eq!((p.mean, p.variance), (0.0, 4.0));
        assert!(GpPosterior::fit(gauss1(1.0, 4.0), Dataset::empty(1)).is_err());
    }

    #[test]
    fn batch_agrees_with_pointwise() {
        let post = GpPosterior::fit(gauss1(0.25, 2.0), data1(&[0.1, 0.4, 0.55, 0.9], &[0.3, -1.0, 0.2, 1.5])).unwrap();
        let q = Points::from_flat(1, (0..1100).map(|i| i as f64 / 1099.0).collect()).unwrap();
        let batch = post.predict_batch(&q);
        for (i, x) in q.rows().enumerate() {
            let p = post.predict(x);
            assert_relative_eq!(batch[i].mean, p.mean, epsilon = 1e-12);
            assert_relative_eq!(batch[i].variance, p.variance, epsilon = 1e-12);
        }
    }

    #[test]
    fn sup_statistic_hand_values() {
        let post = GpPosterior::fit(half_at_one(), data1(&[0.0], &[2.0])).unwrap();
        // grid = design points: 0/0 = 0
        let on_design = Points::from_flat(1, vec![0.0]).unwrap();
        assert_eq!(sup_statistic_m(&post, &[2.0], &on_design).unwrap(), 0.0);
        // one off-design point
        let g = Points::from_flat(1, vec![1.0]).unwrap();
        let truth = 2.5;
        let s = 0.75f64.sqrt();
        let expected = (truth - 1.0) / (s * (E / s).ln().sqrt());
        assert_relative_eq!(sup_statistic_m(&post, &[truth], &g).unwrap(), expected, epsilon = 1e-9);
        // prior: M = max truth
        let prior = GpPosterior::prior(gauss1(1.0, 1.0));
        let g2 = Points::from_flat(1, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(sup_statistic_m(&prior, &[0.3, -0.2, 1.1], &g2).unwrap(), 1.1);
    }

    #[test]
    fn spectral_single_feature_is_a_cosine() {
        let k = ProductKernel::isotropic(Kernel1d::matern(2.5, 0.4).unwrap(), 2, 3.0).unwrap();
        let h = spectral_sample(&k, 1, 17).unwrap();
        let x = [0.3, -0.8];
        let w = h.frequency(0);
        let expected = 3f64.sqrt() * 2f64.sqrt() * (w[0] * x[0] + w[1] * x[1] + h.phase(0)).cos();
        assert_relative_eq!(h.eval(&x), expected, epsilon = 1e-12);
    }

    #[test]
    fn mesh_order_matches_grid_order() {
        // the mesh draw must have the covariance of the flattened grid;
        // check through the deterministic factor structure on a tiny mesh
        let k = ProductKernel::isotropic(Kernel1d::matern(1.5, 0.5).unwrap(), 2, 1.0).unwrap();
        let axes = vec![vec![0.0, 0.5, 1.0], vec![0.0, 1.0]];
        let z = simulate_on_mesh(&k, &axes, 3).unwrap();
        assert_eq!(z.len(), 6);
        assert_eq!(z, simulate_on_mesh(&k, &axes, 3).unwrap());
    }
}
