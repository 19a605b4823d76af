//! Kernel quantities checked against independent numerical oracles.

use std::f64::consts::PI;

use bouq::kernels::{theta_for_target, Domain, Family, Kernel1d, ProductKernel};
use bouq::rng::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;
use statrs::function::gamma::gamma;

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Spectral density written from the textbook Matérn and Gaussian forms.
fn density_oracle(family: Family, nu: f64, theta: f64, omega: f64) -> f64 {
    match family {
        Family::Gaussian => theta / (2.0 * PI.sqrt()) * (-(omega * theta).powi(2) / 4.0).exp(),
        Family::Matern => {
            let kappa2 = 4.0 * nu / (theta * theta);
            gamma(nu + 0.5) / (gamma(nu) * PI.sqrt()) * kappa2.powf(nu) / (omega * omega + kappa2).powf(nu + 0.5)
        }
    }
}

/// ∫|ω| Ψ̃(ω) dω over the real line, by quadrature on ω = tan(u).
fn a0_quadrature(family: Family, nu: f64, theta: f64) -> f64 {
    let scale = 1.0 / theta;
    let f = |u: f64| {
        if u >= PI / 2.0 {
            return 0.0;
        }
        let w = scale * u.tan();
        let jac = scale / u.cos().powi(2);
        w * density_oracle(family, nu, theta, w) * jac
    };
    2.0 * integrate(&f, 0.0, PI / 2.0, 1e-13)
}

/// K_ν(x) = ∫₀^∞ exp(−x cosh t) cosh(νt) dt, by the trapezoid rule (the
/// integrand decays double-exponentially, so the rule converges fast).
fn bessel_k(nu: f64, x: f64) -> f64 {
    let h = 1e-3;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let term = (-x * t.cosh() + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        t += h;
    }
    sum * h
}

fn matern_via_bessel(nu: f64, theta: f64, h: f64) -> f64 {
    let a = 2.0 * nu.sqrt() * h.abs() / theta;
    if a == 0.0 {
        return 1.0;
    }
    2f64.powf(1.0 - nu) / gamma(nu) * a.powf(nu) * bessel_k(nu, a)
}

#[test]
fn a0_matches_quadrature_on_random_configs() {
    let mut rng = rng_from_seed(41);
    for _ in 0..20 {
        let theta = rng.random_range(0.05..5.0);
        let (family, nu) = if rng.random_bool(0.25) {
            (Family::Gaussian, 0.0)
        } else {
            (Family::Matern, [1.5, 2.5, 3.5][rng.random_range(0..3)])
        };
        let k = Kernel1d::new(family, (family == Family::Matern).then_some(nu), theta).unwrap();
        let closed = k.a0_moment().unwrap();
        let quad = a0_quadrature(family, nu, theta);
        assert!(
            (closed - quad).abs() <= 1e-6 * closed.max(1.0),
            "{family:?} nu={nu} theta={theta}: closed {closed}, quadrature {quad}"
        );
    }
}

#[test]
fn spectral_density_matches_textbook_form() {
    for &(family, nu) in &[
        (Family::Gaussian, 0.0),
        (Family::Matern, 0.5),
        (Family::Matern, 1.5),
        (Family::Matern, 2.5),
        (Family::Matern, 3.5),
    ] {
        let k = Kernel1d::new(family, (family == Family::Matern).then_some(nu), 0.7).unwrap();
        for i in 0..40 {
            let w = i as f64 * 0.37;
            let (a, b) = (k.spectral_density(w), density_oracle(family, nu, 0.7, w));
            assert!(
                (a - b).abs() <= 1e-12 * b.max(1e-300),
                "{family:?} {nu} ω={w}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn spectral_density_inverts_to_correlation() {
    // Ψ(h) = ∫ cos(ωh) Ψ̃(ω) dω
    for &(family, nu) in &[
        (Family::Gaussian, 0.0),
        (Family::Matern, 1.5),
        (Family::Matern, 2.5),
        (Family::Matern, 3.5),
    ] {
        let theta = 0.8;
        let k = Kernel1d::new(family, (family == Family::Matern).then_some(nu), theta).unwrap();
        for &h in &[0.0, 0.1, 0.4, 1.0] {
            let f = |u: f64| {
                if u >= PI / 2.0 {
                    return 0.0;
                }
                let w = u.tan() / theta;
                (w * h).cos() * density_oracle(family, nu, theta, w) / (theta * u.cos().powi(2))
            };
            let inv = 2.0 * integrate(&f, 0.0, PI / 2.0, 1e-12);
            assert!(
                (inv - k.correlation(h)).abs() < 1e-6,
                "{family:?} {nu} h={h}: {inv} vs {}",
                k.correlation(h)
            );
        }
    }
}

#[test]
fn half_integer_matern_matches_bessel_form() {
    let mut rng = rng_from_seed(7);
    for i in 0..100 {
        let nu = [0.5, 1.5, 2.5, 3.5][i % 4];
        let theta = rng.random_range(0.1..3.0);
        let h = rng.random_range(0.001..2.0) * theta;
        let k = Kernel1d::matern(nu, theta).unwrap();
        let got = k.correlation(h);
        let want = matern_via_bessel(nu, theta, h);
        assert!(
            (got - want).abs() <= 1e-10,
            "nu={nu} theta={theta} h={h}: {got} vs {want}"
        );
    }
}

#[test]
fn sampled_frequencies_reproduce_correlation() {
    let n = 200_000;
    for (idx, &(family, nu)) in [
        (Family::Gaussian, 0.0),
        (Family::Matern, 1.5),
        (Family::Matern, 2.5),
        (Family::Matern, 3.5),
    ]
    .iter()
    .enumerate()
    {
        let k = Kernel1d::new(family, (family == Family::Matern).then_some(nu), 0.5).unwrap();
        let mut rng = rng_from_seed(100 + idx as u64);
        let ws: Vec<f64> = (0..n).map(|_| k.sample_frequency(&mut rng)).collect();
        for &h in &[0.05, 0.2, 0.5, 1.0] {
            let mc = ws.iter().map(|w| (w * h).cos()).sum::<f64>() / n as f64;
            // sd of cos(ωh) is at most 1/√2
            let tol = 5.0 / (2.0 * n as f64).sqrt();
            assert!(
                (mc - k.correlation(h)).abs() < tol,
                "{family:?} {nu} h={h}: {mc} vs {}",
                k.correlation(h)
            );
        }
    }
}

#[test]
fn nu_one_half_has_no_a0() {
    assert!(Kernel1d::matern(0.5, 1.0).unwrap().a0_moment().is_err());
    assert!(Kernel1d::matern(3.0, 1.0).is_err());
}

fn any_kernel() -> impl Strategy<Value = Kernel1d> {
    (0usize..5, 0.05f64..5.0).prop_map(|(i, theta)| match i {
        0 => Kernel1d::gaussian(theta).unwrap(),
        i => Kernel1d::matern([0.5, 1.5, 2.5, 3.5][i - 1], theta).unwrap(),
    })
}

fn a0_kernel() -> impl Strategy<Value = Kernel1d> {
    any_kernel().prop_filter("finite A0", |k| k.a0_moment().is_ok())
}

proptest! {
    #[test]
    fn correlation_in_unit_interval_and_symmetric(k in any_kernel(), h in -3.0f64..3.0) {
        let r = k.correlation(h);
        prop_assert!(r > 0.0 || (h.abs() / k.theta() > 5.0 && r >= 0.0));
        prop_assert!(r <= 1.0);
        prop_assert_eq!(r, k.correlation(-h));
        prop_assert_eq!(k.correlation(0.0), 1.0);
    }

    #[test]
    fn correlation_decreases_with_distance(k in any_kernel(), h in 0.0f64..2.0, dh in 1e-3f64..1.0) {
        prop_assert!(k.correlation(h + dh) <= k.correlation(h));
    }

    #[test]
    fn product_a0_is_sum(ks in prop::collection::vec(a0_kernel(), 1..5)) {
        let sum: f64 = ks.iter().map(|k| k.a0_moment().unwrap()).sum();
        let prod = ProductKernel::new(ks, 1.0).unwrap();
        let a0 = prod.a0_moment().unwrap();
        prop_assert!((a0 - sum).abs() <= 1e-12 * sum);
    }

    #[test]
    fn product_correlation_is_product(ks in prop::collection::vec(any_kernel(), 1..4), seed in 0u64..1000) {
        let mut rng = rng_from_seed(seed);
        let h: Vec<f64> = ks.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let want: f64 = ks.iter().zip(&h).map(|(k, &x)| k.correlation(x)).product();
        let prod = ProductKernel::new(ks, 2.0).unwrap();
        prop_assert!((prod.correlation(&h).unwrap() - want).abs() <= 1e-14);
    }

    #[test]
    fn theta_for_target_round_trips(
        i in 0usize..4,
        target in 0.5f64..100.0,
        p in 1usize..4,
        width in 0.2f64..5.0,
    ) {
        let (family, nu) = match i {
            0 => (Family::Gaussian, None),
            i => (Family::Matern, Some([1.5, 2.5, 3.5][i - 1])),
        };
        let domain = Domain::new(vec![0.0; p], vec![width; p]).unwrap();
        let theta = theta_for_target(family, nu, target, &domain).unwrap();
        let k = ProductKernel::isotropic(Kernel1d::new(family, nu, theta).unwrap(), p, 1.0).unwrap();
        let got = k.a0_moment().unwrap() * domain.diameter();
        prop_assert!((got - target).abs() <= 1e-10 * target);
    }
}
