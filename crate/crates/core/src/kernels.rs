//! Stationary correlation functions, their spectral densities, and the first
//! ℓ₁-moment A₀ of the spectral density.
//!
//! All correlations use the convention `Ψ(h) = ∫ cos(ωh) Ψ̃(ω) dω` with `Ψ̃` a
//! probability density. Multivariate kernels are products of one-dimensional
//! components, so `Ψ̃` factorizes and A₀ is the sum of the marginal moments.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Matern,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Matern => "matern",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "matern" => Ok(Family::Matern),
            other => Err(Error::InvalidKernel(format!(
                "unknown family {other:?} (expected \"gaussian\" or \"matern\")"
            ))),
        }
    }
}

/// Matérn smoothness values with closed-form correlations.
pub const SUPPORTED_NU: [f64; 4] = [0.5, 1.5, 2.5, 3.5];

/// A one-dimensional stationary correlation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel1d {
    family: Family,
    theta: f64,
    // ν − 1/2 for Matérn; unused for Gaussian.
    order: u8,
}

impl Kernel1d {
    pub fn gaussian(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Kernel1d {
            family: Family::Gaussian,
            theta,
            order: 0,
        })
    }

    pub fn matern(nu: f64, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let order = matern_order(nu)?;
        Ok(Kernel1d {
            family: Family::Matern,
            theta,
            order,
        })
    }

    /// `nu` is ignored for the Gaussian family.
    pub fn new(family: Family, nu: Option<f64>, theta: f64) -> Result<Self> {
        match family {
            Family::Gaussian => Kernel1d::gaussian(theta),
            Family::Matern => {
                let nu = nu.ok_or_else(|| Error::InvalidKernel("Matern kernel requires nu".to_string()))?;
                Kernel1d::matern(nu, theta)
            }
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn nu(&self) -> Option<f64> {
        match self.family {
            Family::Gaussian => None,
            Family::Matern => Some(self.order as f64 + 0.5),
        }
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Kernel1d { theta, ..*self })
    }

    /// Ψ(h), in (0, 1] and symmetric in `h`.
    #[inline]
    pub fn correlation(&self, h: f64) -> f64 {
        match self.family {
            Family::Gaussian => {
                let u = h / self.theta;
                (-u * u).exp()
            }
            Family::Matern => {
                let nu = self.order as f64 + 0.5;
                let a = 2.0 * nu.sqrt() * h.abs() / self.theta;
                let poly = match self.order {
                    0 => 1.0,
                    1 => 1.0 + a,
                    2 => 1.0 + a + a * a / 3.0,
                    _ => 1.0 + a + 2.0 * a * a / 5.0 + a * a * a / 15.0,
                };
                poly * (-a).exp()
            }
        }
    }

    /// Spectral density Ψ̃(ω).
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let theta = self.theta;
        match self.family {
            Family::Gaussian => theta / (2.0 * PI.sqrt()) * (-omega * omega * theta * theta / 4.0).exp(),
            Family::Matern => {
                let nu = self.order as f64 + 0.5;
                let c = 4.0 * nu / (theta * theta);
                gamma_ratio(nu) / PI.sqrt() * c.powf(nu) * (omega * omega + c).powf(-(nu + 0.5))
            }
        }
    }

    /// A₀ = ∫|ω| Ψ̃(ω) dω.
    pub fn a0_moment(&self) -> Result<f64> {
        match self.family {
            Family::Gaussian => Ok(2.0 / (PI.sqrt() * self.theta)),
            Family::Matern => {
                let nu = self.order as f64 + 0.5;
                if self.order == 0 {
                    return Err(Error::A0Diverges { nu });
                }
                Ok(4.0 * nu.sqrt() * gamma_ratio(nu) / (PI.sqrt() * (2.0 * nu - 1.0) * self.theta))
            }
        }
    }

    /// Draws a frequency ω from Ψ̃.
    ///
    /// Gaussian: ω ~ N(0, 2/θ²). Matérn: ω = (√2/θ)·T with T Student-t on 2ν
    /// degrees of freedom.
    pub fn sample_frequency<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let scale = std::f64::consts::SQRT_2 / self.theta;
        match self.family {
            Family::Gaussian => {
                let normal = Normal::new(0.0, scale).expect("positive scale");
                normal.sample(rng)
            }
            Family::Matern => {
                let nu = self.order as f64 + 0.5;
                let t = StudentT::new(2.0 * nu).expect("positive degrees of freedom");
                scale * t.sample(rng)
            }
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!(
            "length scale must be positive and finite, got {theta}"
        )))
    }
}

fn matern_order(nu: f64) -> Result<u8> {
    SUPPORTED_NU
        .iter()
        .position(|&v| (v - nu).abs() < 1e-12)
        .map(|i| i as u8)
        .ok_or_else(|| {
            Error::InvalidKernel(format!(
                "Matern nu = {nu} is not supported (expected one of 0.5, 1.5, 2.5, 3.5)"
            ))
        })
}

/// Γ(ν + 1/2) / Γ(ν) for half-integer ν = k + 1/2.
///
/// Γ(k + 1) = k! and Γ(k + 1/2) = (2k)! √π / (4ᵏ k!).
fn gamma_ratio(nu: f64) -> f64 {
    let k = (nu - 0.5).round() as u32;
    let factorial = |m: u32| (1..=m).map(f64::from).product::<f64>();
    let numerator = factorial(k);
    let denominator = factorial(2 * k) * PI.sqrt() / (4f64.powi(k as i32) * factorial(k));
    numerator / denominator
}

/// A product correlation `Ψ(h) = ∏ Ψᵢ(hᵢ)` with process variance σ².
#[derive(Debug, Clone, PartialEq)]
pub struct ProductKernel {
    components: Vec<Kernel1d>,
    variance: f64,
}

impl ProductKernel {
    pub fn new(components: Vec<Kernel1d>, variance: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidKernel(
                "a product kernel needs at least one component".to_string(),
            ));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "variance must be positive and finite, got {variance}"
            )));
        }
        Ok(ProductKernel { components, variance })
    }

    /// `p` copies of the same one-dimensional kernel.
    pub fn isotropic(component: Kernel1d, p: usize, variance: f64) -> Result<Self> {
        ProductKernel::new(vec![component; p], variance)
    }

    pub fn components(&self) -> &[Kernel1d] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Prior standard deviation σ.
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn correlation(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: h.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .zip(h)
            .map(|(k, &hi)| k.correlation(hi))
            .product())
    }

    /// Ψ(a − b) without a length check.
    #[inline]
    pub(crate) fn corr_between(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 1.0;
        for ((k, x), y) in self.components.iter().zip(a).zip(b) {
            acc *= k.correlation(x - y);
        }
        acc
    }

    pub fn a0_moment(&self) -> Result<f64> {
        self.components.iter().map(Kernel1d::a0_moment).sum()
    }
}

/// An axis-aligned box Ω ⊂ ℝᵖ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidDomain(format!(
                    "coordinate {i}: lower {l} must be below upper {u}"
                )));
            }
        }
        Ok(Domain { lower, upper })
    }

    /// The unit cube [0, 1]ᵖ.
    pub fn unit(p: usize) -> Self {
        Domain {
            lower: vec![0.0; p],
            upper: vec![1.0; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Euclidean diameter D_Ω.
    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// Length scale θ, shared by all `domain.dim()` components, such that
/// `A₀ · D_Ω = target_a0_d`.
pub fn theta_for_target(family: Family, nu: Option<f64>, target_a0_d: f64, domain: &Domain) -> Result<f64> {
    if !(target_a0_d.is_finite() && target_a0_d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target A0*D must be positive, got {target_a0_d}"
        )));
    }
    // A₀ is proportional to 1/θ, so evaluate at θ = 1 and invert.
    let unit = Kernel1d::new(family, nu, 1.0)?;
    let a0_unit = unit.a0_moment()? * domain.dim() as f64;
    Ok(a0_unit * domain.diameter() / target_a0_d)
}

/// Convenience: an isotropic product kernel on `domain` calibrated to
/// `A₀ · D_Ω = a0_d`.
pub fn kernel_for_target(
    family: Family,
    nu: Option<f64>,
    a0_d: f64,
    domain: &Domain,
    variance: f64,
) -> Result<ProductKernel> {
    let theta = theta_for_target(family, nu, a0_d, domain)?;
    ProductKernel::isotropic(Kernel1d::new(family, nu, theta)?, domain.dim(), variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_values() {
        let k = Kernel1d::gaussian(1.0).unwrap();
        assert_eq!(k.correlation(0.0), 1.0);
        assert_relative_eq!(k.correlation(1.0), 0.367_879_441_171_442_3, epsilon = 1e-15);
        assert_eq!(k.correlation(0.7), k.correlation(-0.7));
    }

    #[test]
    fn matern_15_at_unit_scaled_distance() {
        // a = 2√ν|h|/θ = 1
        let theta = 2.0 * 1.5f64.sqrt();
        let k = Kernel1d::matern(1.5, theta).unwrap();
        assert_relative_eq!(k.correlation(1.0), 2.0 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(k.correlation(1.0), 0.735_758_882_342_884_6, epsilon = 1e-15);
    }

    #[test]
    fn matern_rejects_unsupported_nu() {
        assert!(Kernel1d::matern(2.0, 1.0).is_err());
        assert!(Kernel1d::matern(1.5, 0.0).is_err());
        assert!(Kernel1d::matern(1.5, -1.0).is_err());
        assert!(Kernel1d::new(Family::Matern, None, 1.0).is_err());
    }

    #[test]
    fn product_correlation() {
        let g = Kernel1d::gaussian(1.0).unwrap();
        let k = ProductKernel::isotropic(g, 2, 1.0).unwrap();
        assert_eq!(k.correlation(&[0.0, 0.0]).unwrap(), 1.0);
        assert_relative_eq!(k.correlation(&[1.0, 1.0]).unwrap(), (-2.0f64).exp(), epsilon = 1e-15);
        assert_eq!(k.correlation(&[1.0, 0.0]).unwrap(), g.correlation(1.0));
        assert!(matches!(
            k.correlation(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn a0_closed_forms() {
        let g = Kernel1d::gaussian(1.0).unwrap();
        assert_relative_eq!(
            g.a0_moment().unwrap(),
            std::f64::consts::FRAC_2_SQRT_PI,
            epsilon = 1e-14
        );
        let m = Kernel1d::matern(1.5, 1.0).unwrap();
        // 4√1.5·Γ(2) / (√π·2·Γ(1.5)) = 2√6/π
        assert_relative_eq!(m.a0_moment().unwrap(), 2.0 * 6f64.sqrt() / PI, epsilon = 1e-14);
        assert_relative_eq!(m.a0_moment().unwrap(), 1.559_398_7, epsilon = 1e-5);
        let half = Kernel1d::matern(0.5, 1.0).unwrap();
        assert!(matches!(half.a0_moment(), Err(Error::A0Diverges { .. })));
        // correlation still evaluable for ν = 1/2
        assert_relative_eq!(half.correlation(0.5), (-2f64.sqrt() * 0.5).exp(), epsilon = 1e-15);
    }

    #[test]
    fn a0_is_additive() {
        let g = Kernel1d::gaussian(1.0).unwrap();
        let two = ProductKernel::isotropic(g, 2, 1.0).unwrap();
        assert_relative_eq!(two.a0_moment().unwrap(), 2.256_758_334_191_025, epsilon = 1e-14);
        let one = ProductKernel::isotropic(g, 1, 1.0).unwrap();
        assert_eq!(one.a0_moment().unwrap(), g.a0_moment().unwrap());
        let mixed = ProductKernel::new(vec![g, Kernel1d::matern(0.5, 1.0).unwrap()], 1.0).unwrap();
        assert!(mixed.a0_moment().is_err());
    }

    #[test]
    fn theta_inversion() {
        let unit = Domain::unit(1);
        let t = theta_for_target(Family::Gaussian, None, 1.0, &unit).unwrap();
        assert_relative_eq!(t, 2.0 / PI.sqrt(), epsilon = 1e-14);
        let t = theta_for_target(Family::Matern, Some(1.5), 25.0, &unit).unwrap();
        assert_relative_eq!(t, 0.062_376, epsilon = 1e-6);
        assert!(theta_for_target(Family::Matern, Some(0.5), 1.0, &unit).is_err());
        assert!(theta_for_target(Family::Gaussian, None, 0.0, &unit).is_err());
    }

    #[test]
    fn theta_round_trip_in_higher_dimension() {
        let dom = Domain::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 2.5]).unwrap();
        for &(family, nu) in &[
            (Family::Gaussian, None),
            (Family::Matern, Some(1.5)),
            (Family::Matern, Some(3.5)),
        ] {
            for &v in &[1.0, 3.0, 5.0, 10.0, 25.0] {
                let k = kernel_for_target(family, nu, v, &dom, 2.0).unwrap();
                let got = k.a0_moment().unwrap() * dom.diameter();
                assert!((got - v).abs() <= 1e-10 * v, "{family:?} {nu:?} {v}: {got}");
            }
        }
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let d = Domain::new(vec![0.0, 0.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(d.diameter(), 5.0);
        assert!(d.contains(&[3.0, 0.0]));
        assert!(!d.contains(&[3.1, 0.0]));
    }

    #[test]
    fn gamma_ratio_matches_known_values() {
        // Γ(2)/Γ(1.5) = 2/√π, Γ(3)/Γ(2.5) = 8/(3√π), Γ(4)/Γ(3.5) = 16/(5√π)
        let sp = PI.sqrt();
        assert_relative_eq!(gamma_ratio(1.5), 2.0 / sp, epsilon = 1e-15);
        assert_relative_eq!(gamma_ratio(2.5), 8.0 / (3.0 * sp), epsilon = 1e-15);
        assert_relative_eq!(gamma_ratio(3.5), 16.0 / (5.0 * sp), epsilon = 1e-15);
        assert_relative_eq!(gamma_ratio(0.5), 1.0 / sp, epsilon = 1e-15);
    }
}
