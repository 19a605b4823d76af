//! Point sets on the unit cube and their affine images on a domain.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Domain;
use crate::points::Points;
use crate::rng::{child_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSetKind {
    Halton,
    LatinHypercube,
    UniformRandom,
    GridMesh,
    Mapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Points,
    pub kind: PointSetKind,
}

/// Maximin candidates drawn by default when selecting a Latin hypercube.
pub const DEFAULT_MAXIMIN_CANDIDATES: usize = 1000;

const PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let b = u64::from(b);
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// First `n` Halton points (indices 1..=n) in `p ≤ 25` dimensions.
pub fn halton(n: usize, p: usize) -> Result<PointSet> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidArgument("halton needs n >= 1 and p >= 1".to_string()));
    }
    if p > PRIMES.len() {
        return Err(Error::InvalidArgument(format!(
            "halton supports at most {} dimensions, got {p}",
            PRIMES.len()
        )));
    }
    let mut data = Vec::with_capacity(n * p);
    for i in 1..=n as u64 {
        for &b in &PRIMES[..p] {
            data.push(radical_inverse(i, b));
        }
    }
    Ok(PointSet {
        points: Points::from_flat(p, data)?,
        kind: PointSetKind::Halton,
    })
}

/// One random Latin hypercube: each axis is a permutation of the `n` strata
/// with a uniform offset inside each cell.
fn random_lhs<R: Rng>(n: usize, p: usize, rng: &mut R) -> Points {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..p {
        perm.shuffle(rng);
        columns.push(
            perm.iter()
                .map(|&k| in_stratum(k, n, (k as f64 + rng.random::<f64>()) / n as f64))
                .collect(),
        );
    }
    let mut data = Vec::with_capacity(n * p);
    for i in 0..n {
        for col in &columns {
            data.push(col[i]);
        }
    }
    Points::from_flat(p, data).expect("consistent shape")
}

// rounding in (k + u)/n can land on the upper edge of stratum k
fn in_stratum(k: usize, n: usize, mut v: f64) -> f64 {
    while (v * n as f64).floor() as usize > k {
        v = f64::from_bits(v.to_bits() - 1);
    }
    v
}

/// Maximin Latin hypercube: the best of `maximin_candidates` random Latin
/// hypercubes by minimum pairwise distance (first on ties).
pub fn latin_hypercube(n: usize, p: usize, seed: u64, maximin_candidates: usize) -> Result<PointSet> {
    if n < 2 || p == 0 {
        return Err(Error::InvalidArgument(
            "latin hypercube needs n >= 2 and p >= 1".to_string(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut best = random_lhs(n, p, &mut rng);
    let mut best_d = best.min_pairwise_distance();
    for _ in 1..maximin_candidates.max(1) {
        let cand = random_lhs(n, p, &mut rng);
        let d = cand.min_pairwise_distance();
        if d > best_d {
            best = cand;
            best_d = d;
        }
    }
    Ok(PointSet {
        points: best,
        kind: PointSetKind::LatinHypercube,
    })
}

/// The first random Latin hypercube that [`latin_hypercube`] would consider.
pub fn first_lhs_candidate(n: usize, p: usize, seed: u64) -> Points {
    random_lhs(n, p, &mut rng_from_seed(seed))
}

/// I.i.d. Uniform[0,1)ᵖ points.
pub fn uniform_random(n: usize, p: usize, seed: u64) -> Result<PointSet> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be >= 1".to_string()));
    }
    let mut rng = rng_from_seed(child_seed(seed, 0x756e_6966));
    let data = (0..n * p).map(|_| rng.random::<f64>()).collect();
    Ok(PointSet {
        points: Points::from_flat(p, data)?,
        kind: PointSetKind::UniformRandom,
    })
}

/// `k` equally spaced values covering `[0, 1]` inclusive (`0.5` when `k = 1`).
pub fn mesh_axis(k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
    }
}

/// Tensor mesh with `k` levels per axis, first coordinate varying slowest.
/// Unlike the other generators this includes the upper face of the cube.
pub fn grid_mesh(k: usize, p: usize) -> Result<PointSet> {
    if k == 0 || p == 0 {
        return Err(Error::InvalidArgument("mesh needs k >= 1 and p >= 1".to_string()));
    }
    let axes = vec![mesh_axis(k); p];
    Ok(PointSet {
        points: tensor_points(&axes),
        kind: PointSetKind::GridMesh,
    })
}

/// All points of `axes[0] × … × axes[p−1]`, first coordinate varying slowest.
pub fn tensor_points(axes: &[Vec<f64>]) -> Points {
    let p = axes.len();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut pts = Points::with_capacity(p, total);
    let mut idx = vec![0usize; p];
    let mut row = vec![0.0; p];
    for _ in 0..total {
        for d in 0..p {
            row[d] = axes[d][idx[d]];
        }
        pts.push(&row).expect("consistent shape");
        for d in (0..p).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    pts
}

/// Affine per-coordinate map from `[0,1]ᵖ` onto `domain`.
pub fn map_to_domain(ps: &PointSet, domain: &Domain) -> Result<PointSet> {
    let p = ps.points.dim();
    if p != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: p,
        });
    }
    let mut out = ps.points.clone();
    for i in 0..out.len() {
        for (d, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = domain.lower()[d] + *v * domain.width(d);
        }
    }
    Ok(PointSet {
        points: out,
        kind: if domain == &Domain::unit(p) {
            ps.kind
        } else {
            PointSetKind::Mapped
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halton_base_two() {
        let h = halton(4, 1).unwrap();
        assert_eq!(h.points.as_flat(), &[0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn halton_two_dims() {
        let h = halton(2, 2).unwrap();
        assert_eq!(h.points.row(0), &[0.5, 1.0 / 3.0]);
        assert_eq!(h.points.row(1), &[0.25, 2.0 / 3.0]);
        assert_eq!(h, halton(2, 2).unwrap());
    }

    #[test]
    fn halton_limits() {
        assert!(halton(3, 26).is_err());
        assert!(halton(0, 1).is_err());
        assert!(halton(3, 25).is_ok());
    }

    #[test]
    fn lhs_two_points_one_dim() {
        for seed in 0..20 {
            let d = latin_hypercube(2, 1, seed, 10).unwrap().points;
            let mut v = d.as_flat().to_vec();
            v.sort_by(f64::total_cmp);
            assert!(v[0] >= 0.0 && v[0] < 0.5, "{v:?}");
            assert!(v[1] >= 0.5 && v[1] < 1.0, "{v:?}");
        }
    }

    #[test]
    fn maximin_not_worse_than_first_candidate() {
        for seed in 0..10 {
            let best = latin_hypercube(8, 3, seed, 50).unwrap().points;
            let first = first_lhs_candidate(8, 3, seed);
            assert!(best.min_pairwise_distance() >= first.min_pairwise_distance());
        }
    }

    #[test]
    fn uniform_mean_and_determinism() {
        let u = uniform_random(100_000, 2, 5).unwrap().points;
        for d in 0..2 {
            let mean: f64 = u.rows().map(|r| r[d]).sum::<f64>() / u.len() as f64;
            assert!((mean - 0.5).abs() < 0.01, "{mean}");
        }
        assert_eq!(uniform_random(50, 2, 5).unwrap(), uniform_random(50, 2, 5).unwrap());
        assert_ne!(uniform_random(50, 2, 5).unwrap(), uniform_random(50, 2, 6).unwrap());
    }

    #[test]
    fn domain_mapping() {
        let unit = Domain::unit(2);
        let h = halton(10, 2).unwrap();
        assert_eq!(map_to_domain(&h, &unit).unwrap(), h);
        let dom = Domain::new(vec![-2.0, 1.0], vec![2.0, 5.0]).unwrap();
        let corners = PointSet {
            points: Points::from_rows(2, &[[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]]).unwrap(),
            kind: PointSetKind::GridMesh,
        };
        let m = map_to_domain(&corners, &dom).unwrap().points;
        assert_eq!(m.row(0), &[-2.0, 1.0]);
        assert_eq!(m.row(1), &[2.0, 5.0]);
        assert_eq!(m.row(2), &[0.0, 3.0]);
    }

    #[test]
    fn mesh_layout() {
        let m = grid_mesh(3, 2).unwrap().points;
        assert_eq!(m.len(), 9);
        assert_eq!(m.row(1), &[0.0, 0.5]);
        assert_eq!(m.row(3), &[0.5, 0.0]);
    }

    proptest! {
        #[test]
        fn halton_prefix_property(n in 1usize..200, m in 1usize..200, p in 1usize..6) {
            let (small, big) = (n.min(m), n.max(m));
            let a = halton(small, p).unwrap().points;
            let b = halton(big, p).unwrap().points;
            prop_assert_eq!(a, b.prefix(small));
        }

        #[test]
        fn halton_in_unit_interval(n in 1usize..300, p in 1usize..25) {
            let h = halton(n, p).unwrap().points;
            prop_assert!(h.as_flat().iter().all(|&v| (0.0..1.0).contains(&v)));
        }

        #[test]
        fn lhs_projection_property(n in 2usize..40, p in 1usize..5, seed in any::<u64>()) {
            let d = latin_hypercube(n, p, seed, 5).unwrap().points;
            for dim in 0..p {
                let mut counts = vec![0; n];
                for r in d.rows() {
                    prop_assert!((0.0..1.0).contains(&r[dim]));
                    counts[(r[dim] * n as f64).floor() as usize] += 1;
                }
                prop_assert!(counts.iter().all(|&c| c == 1));
            }
        }
    }
}
