//! Synthetic samples, the TWO-NN intrinsic-dimension estimator and labeled
//! subset sampling.
//!
//! All randomness flows from `ChaCha8Rng::seed_from_u64`, so every generator
//! is reproducible bit for bit across platforms.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::LabeledDataset;
use crate::error::{FermatError, Result};
use crate::point_graph::{squared_euclidean, PointCloud};

/// Ambient dimension of the two high-dimensional lifts.
pub const LIFT_DIM: usize = 500;

/// How the two-moon angles are lifted into the ambient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwoMoonVariant {
    /// `(sin t cos p, sin t sin p, cos t)` on the unit sphere in `R^3`.
    Sphere,
    /// `x_j = phi t_j^2 + theta sin(t_j)` over 500 equispaced `t_j` in `[0, 1]`.
    NonlinearLift,
    /// `(phi + z1, theta + z2, z3, ..., z500)`, `z ~ N(0, 0.01^2)`.
    NoisyPad,
}

impl TwoMoonVariant {
    pub fn ambient_dim(&self) -> usize {
        match self {
            TwoMoonVariant::Sphere => 3,
            _ => LIFT_DIM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoMoonModel {
    pub variant: TwoMoonVariant,
    pub n0: usize,
    pub n1: usize,
    pub seed: u64,
}

/// Moon angles `(phi, theta)` for a class given the two latent normals.
pub fn moon_angles(class: usize, u: f64, v: f64) -> (f64, f64) {
    if class == 0 {
        let phi = PI * u;
        (phi, (PI - 1.0) * phi.sin() + v)
    } else {
        let phi = PI * u + PI / 2.0;
        (phi, -(PI - 1.0) * (phi - PI / 2.0).sin() + 0.8 * PI - v)
    }
}

/// Lifts moon angles into the variant's ambient space.
pub fn lift<R: Rng + ?Sized>(
    variant: TwoMoonVariant,
    phi: f64,
    theta: f64,
    rng: &mut R,
) -> Vec<f64> {
    match variant {
        TwoMoonVariant::Sphere => vec![
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ],
        TwoMoonVariant::NonlinearLift => (0..LIFT_DIM)
            .map(|j| {
                let t = j as f64 / (LIFT_DIM - 1) as f64;
                phi * t * t + theta * t.sin()
            })
            .collect(),
        TwoMoonVariant::NoisyPad => {
            let z = Normal::new(0.0, 0.01).expect("valid normal");
            let mut x: Vec<f64> = (0..LIFT_DIM).map(|_| z.sample(rng)).collect();
            x[0] += phi;
            x[1] += theta;
            x
        }
    }
}

/// Two-moon sample: `n0` class-0 points followed by `n1` class-1 points,
/// every point labeled. Latent `U, V ~ N(0.5, 0.2^2)` are drawn fresh per
/// point and are not truncated.
pub fn generate_two_moon(model: &TwoMoonModel) -> Result<LabeledDataset> {
    if model.n0 == 0 || model.n1 == 0 {
        return Err(FermatError::InvalidParameter(
            "two-moon class counts must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let latent = Normal::new(0.5, 0.2).expect("valid normal");
    let dim = model.variant.ambient_dim();
    let n = model.n0 + model.n1;
    let mut coords = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (class, count) in [(0usize, model.n0), (1, model.n1)] {
        for _ in 0..count {
            let u = latent.sample(&mut rng);
            let v = latent.sample(&mut rng);
            let (phi, theta) = moon_angles(class, u, v);
            coords.extend(lift(model.variant, phi, theta, &mut rng));
            labels.push(class);
        }
    }
    LabeledDataset::fully_labeled(PointCloud::new(dim, coords)?, labels)
}

/// Two von Mises-Fisher components on the unit sphere in `R^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmfClusterModel {
    pub mu0: [f64; 3],
    pub mu1: [f64; 3],
    pub concentration: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl Default for VmfClusterModel {
    fn default() -> Self {
        Self {
            mu0: [0.0, 0.0, 1.0],
            mu1: [0.0, 0.0, -1.0],
            concentration: 5.0,
            n_per_class: 100,
            seed: 0,
        }
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Two unit vectors completing `mu` to an orthonormal basis.
fn tangent_basis(mu: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let axis = (0..3)
        .min_by(|&a, &b| mu[a].abs().total_cmp(&mu[b].abs()))
        .unwrap();
    let mut helper = [0.0; 3];
    helper[axis] = 1.0;
    let e1 = cross(mu, &helper);
    let n1 = norm3(&e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    (e1, cross(mu, &e1))
}

/// One draw from vMF(mu, kappa) on S^2 by inverting the polar-angle CDF.
fn sample_vmf<R: Rng + ?Sized>(
    mu: &[f64; 3],
    kappa: f64,
    basis: &([f64; 3], [f64; 3]),
    rng: &mut R,
) -> [f64; 3] {
    let u: f64 = rng.random();
    let w = if kappa > 0.0 {
        (1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0)
    } else {
        2.0 * u - 1.0
    };
    let angle = 2.0 * PI * rng.random::<f64>();
    let r = (1.0 - w * w).max(0.0).sqrt();
    let (e1, e2) = basis;
    let mut x = [0.0; 3];
    for a in 0..3 {
        x[a] = w * mu[a] + r * (angle.cos() * e1[a] + angle.sin() * e2[a]);
    }
    let nx = norm3(&x);
    [x[0] / nx, x[1] / nx, x[2] / nx]
}

/// Class-0 points from vMF(mu0), then class-1 points from vMF(mu1).
pub fn generate_vmf_clusters(model: &VmfClusterModel) -> Result<LabeledDataset> {
    for mu in [&model.mu0, &model.mu1] {
        if (norm3(mu) - 1.0).abs() > 1e-12 {
            return Err(FermatError::InvalidParameter(format!(
                "mean direction {mu:?} is not a unit vector"
            )));
        }
    }
    if !(model.concentration >= 0.0) || !model.concentration.is_finite() {
        return Err(FermatError::InvalidParameter(format!(
            "concentration must be >= 0, got {}",
            model.concentration
        )));
    }
    if model.n_per_class == 0 {
        return Err(FermatError::InvalidParameter(
            "need at least one point per class".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut coords = Vec::with_capacity(6 * model.n_per_class);
    let mut labels = Vec::with_capacity(2 * model.n_per_class);
    for (class, mu) in [(0usize, &model.mu0), (1, &model.mu1)] {
        let basis = tangent_basis(mu);
        for _ in 0..model.n_per_class {
            coords.extend(sample_vmf(mu, model.concentration, &basis, &mut rng));
            labels.push(class);
        }
    }
    LabeledDataset::fully_labeled(PointCloud::new(3, coords)?, labels)
}

/// Fraction of the largest neighbor-distance ratios treated as censored.
pub const TWO_NN_DISCARD: f64 = 0.1;

/// TWO-NN intrinsic dimension.
///
/// With `r1, r2` the first and second nearest-neighbor distances, the ratio
/// `mu = r2 / r1` is Pareto with index `d`, so `ln mu ~ Exp(d)`. The top 10%
/// of ratios are treated as right-censored at the smallest discarded ratio,
/// giving the censored maximum-likelihood estimate
/// `d = n_kept / (sum_kept ln mu + n_discarded ln mu_cut)`.
/// Points with `r1 = 0` are skipped.
pub fn estimate_intrinsic_dim(cloud: &PointCloud) -> Result<f64> {
    let n = cloud.len();
    if n < 10 {
        return Err(FermatError::TooFewPoints(n));
    }
    let mut ratios = Vec::with_capacity(n);
    let mut zero = 0usize;
    for i in 0..n {
        let pi = cloud.point(i);
        let (mut r1, mut r2) = (f64::INFINITY, f64::INFINITY);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = squared_euclidean(pi, cloud.point(j));
            if d < r1 {
                r2 = r1;
                r1 = d;
            } else if d < r2 {
                r2 = d;
            }
        }
        if r1 == 0.0 {
            zero += 1;
        } else {
            ratios.push((r2 / r1).sqrt().ln());
        }
    }
    if 2 * zero > n {
        return Err(FermatError::DuplicatesDominate { zero, n });
    }
    ratios.sort_by(f64::total_cmp);
    let m = ratios.len();
    let kept = (((1.0 - TWO_NN_DISCARD) * m as f64).floor() as usize).clamp(1, m);
    let cut = if kept < m { ratios[kept] } else { 0.0 };
    let total: f64 = ratios[..kept].iter().sum::<f64>() + (m - kept) as f64 * cut;
    if !(total > 0.0) {
        return Err(FermatError::InvalidParameter(
            "all neighbor-distance ratios equal 1; dimension undefined".into(),
        ));
    }
    Ok(kept as f64 / total)
}

/// `per_class` indices drawn uniformly without replacement from every class,
/// returned ascending.
pub fn sample_labeled_indices(labels: &[usize], per_class: usize, seed: u64) -> Result<Vec<usize>> {
    if per_class == 0 {
        return Err(FermatError::InvalidParameter(
            "per-class labeled count must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = Vec::with_capacity(per_class * n_classes);
    for c in 0..n_classes {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < per_class {
            return Err(FermatError::ClassTooSmall {
                class: c,
                available: members.len(),
                requested: per_class,
            });
        }
        out.extend(
            index::sample(&mut rng, members.len(), per_class)
                .into_iter()
                .map(|m| members[m]),
        );
    }
    out.sort_unstable();
    Ok(out)
}

/// Uniform points on an axis-aligned unit cube of dimension `d`, embedded in
/// `R^ambient` by zero padding. Useful as a known-dimension test manifold.
pub fn uniform_cube(d: usize, ambient: usize, n: usize, seed: u64) -> Result<PointCloud> {
    if d == 0 || d > ambient {
        return Err(FermatError::InvalidParameter(format!(
            "cube dimension {d} must lie in [1, {ambient}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![0.0; n * ambient];
    for row in coords.chunks_exact_mut(ambient) {
        for v in &mut row[..d] {
            *v = rng.random();
        }
    }
    PointCloud::new(ambient, coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_angles() {
        let (phi, theta) = moon_angles(0, 0.5, 0.5);
        assert!((phi - PI / 2.0).abs() < 1e-15);
        assert!((theta - (PI - 0.5)).abs() < 1e-15);
        assert!((theta - 2.641_592_653_589_793).abs() < 1e-12);
    }

    #[test]
    fn sphere_points_are_unit() {
        let d = generate_two_moon(&TwoMoonModel {
            variant: TwoMoonVariant::Sphere,
            n0: 40,
            n1: 30,
            seed: 3,
        })
        .unwrap();
        assert_eq!(d.cloud().len(), 70);
        assert_eq!(d.labels().iter().filter(|&&y| y == 1).count(), 30);
        for p in d.cloud().points() {
            let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lifts_have_500_columns() {
        for variant in [TwoMoonVariant::NonlinearLift, TwoMoonVariant::NoisyPad] {
            let d = generate_two_moon(&TwoMoonModel {
                variant,
                n0: 3,
                n1: 3,
                seed: 1,
            })
            .unwrap();
            assert_eq!(d.cloud().dim(), 500);
        }
    }

    #[test]
    fn nonlinear_lift_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = lift(TwoMoonVariant::NonlinearLift, 2.0, 3.0, &mut rng);
        assert_eq!(x[0], 0.0);
        assert!((x[499] - (2.0 + 3.0 * 1f64.sin())).abs() < 1e-14);
    }

    #[test]
    fn generators_are_seeded() {
        let m = TwoMoonModel {
            variant: TwoMoonVariant::NoisyPad,
            n0: 5,
            n1: 5,
            seed: 11,
        };
        assert_eq!(
            generate_two_moon(&m).unwrap(),
            generate_two_moon(&m).unwrap()
        );
        let other = TwoMoonModel { seed: 12, ..m };
        assert_ne!(
            generate_two_moon(&m).unwrap(),
            generate_two_moon(&other).unwrap()
        );
        let v = VmfClusterModel::default();
        assert_eq!(
            generate_vmf_clusters(&v).unwrap(),
            generate_vmf_clusters(&v).unwrap()
        );
    }

    #[test]
    fn vmf_rejects_non_unit_mean() {
        let m = VmfClusterModel {
            mu0: [0.0, 0.0, 2.0],
            ..Default::default()
        };
        assert!(generate_vmf_clusters(&m).is_err());
    }

    #[test]
    fn vmf_unit_norm() {
        let d = generate_vmf_clusters(&VmfClusterModel {
            mu0: [0.6, 0.0, 0.8],
            n_per_class: 500,
            ..Default::default()
        })
        .unwrap();
        for p in d.cloud().points() {
            let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_indices_per_class() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2];
        let idx = sample_labeled_indices(&labels, 4, 9).unwrap();
        assert_eq!(idx.len(), 12);
        assert_eq!(idx, (0..12).collect::<Vec<_>>());
        let two = sample_labeled_indices(&labels, 2, 9).unwrap();
        assert_eq!(two, sample_labeled_indices(&labels, 2, 9).unwrap());
        for c in 0..3 {
            assert_eq!(two.iter().filter(|&&i| labels[i] == c).count(), 2);
        }
        assert!(matches!(
            sample_labeled_indices(&labels, 5, 0),
            Err(FermatError::ClassTooSmall { class: 0, .. })
        ));
    }

    #[test]
    fn two_nn_rejects_duplicates() {
        let c = PointCloud::new(1, vec![0.0; 12]).unwrap();
        assert!(matches!(
            estimate_intrinsic_dim(&c),
            Err(FermatError::DuplicatesDominate { .. })
        ));
        let small = PointCloud::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(estimate_intrinsic_dim(&small).is_err());
    }
}
