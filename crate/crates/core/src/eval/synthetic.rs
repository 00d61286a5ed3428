use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{DaDataset, FeatureMatrix};
use crate::error::{DaError, Result};

/// A generated task: the dataset handed to the solver and the target truth
/// kept aside for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub dataset: DaDataset,
    pub target_truth: Vec<usize>,
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Rotation by `angle` in the plane of the orthonormal pair `(u, v)`.
fn plane_rotation(u: &DVector<f64>, v: &DVector<f64>, angle: f64) -> DMatrix<f64> {
    let dim = u.len();
    let (s, c) = angle.sin_cos();
    DMatrix::identity(dim, dim) + (u * u.transpose() + v * v.transpose()) * (c - 1.0) + (v * u.transpose() - u * v.transpose()) * s
}

/// Gaussian blobs with class `c` centred on `±e_c`, and a target domain
/// whose centres are rotated by `rotation_degrees` in a random 2-plane.
///
/// The plane is spanned by a random unit vector in the span of the class
/// centres and a random unit vector orthogonal to it, so the rotation always
/// moves the classes. Both domains have `n_per_class` samples per class,
/// interleaved by class, with isotropic noise of standard deviation
/// `noise_sigma`.
pub fn make_synthetic(
    seed: u64,
    n_per_class: usize,
    class_count: usize,
    dim: usize,
    rotation_degrees: f64,
    noise_sigma: f64,
) -> Result<SyntheticTask> {
    if class_count < 2 {
        return Err(DaError::config(format!("need at least 2 classes, got {class_count}")));
    }
    if dim < 2 {
        return Err(DaError::config(format!("need dimension ≥ 2, got {dim}")));
    }
    if class_count > 2 * dim {
        return Err(DaError::config(format!(
            "{class_count} classes do not fit on the ± axes of dimension {dim}"
        )));
    }
    if n_per_class == 0 {
        return Err(DaError::config("n_per_class must be at least 1"));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() || !rotation_degrees.is_finite() {
        return Err(DaError::config("noise and rotation must be finite, noise non-negative"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<DVector<f64>> = (0..class_count)
        .map(|c| {
            let mut v = DVector::zeros(dim);
            v[c % dim] = if c < dim { 1.0 } else { -1.0 };
            v
        })
        .collect();

    let mut u = DVector::zeros(dim);
    for c in &centers {
        let w: f64 = StandardNormal.sample(&mut rng);
        u += c * w;
    }
    u /= u.norm();
    let mut v = gaussian_vector(&mut rng, dim);
    v -= &u * u.dot(&v);
    v /= v.norm();
    let rotation = plane_rotation(&u, &v, rotation_degrees * PI / 180.0);

    let n = n_per_class * class_count;
    let mut x = DMatrix::zeros(dim, 2 * n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let c = j % class_count;
        let p = &centers[c] + gaussian_vector(&mut rng, dim) * noise_sigma;
        x.set_column(j, &p);
        labels.push(c + 1);
    }
    let rotated: Vec<DVector<f64>> = centers.iter().map(|c| &rotation * c).collect();
    for j in 0..n {
        let c = j % class_count;
        let p = &rotated[c] + gaussian_vector(&mut rng, dim) * noise_sigma;
        x.set_column(n + j, &p);
    }
    let dataset = DaDataset::new(FeatureMatrix::new(x)?, n, labels.clone())?;
    Ok(SyntheticTask { dataset, target_truth: labels })
}

/// Two interleaving half-moons in the plane; the target domain is the same
/// shape rotated by `rotation_degrees` about the origin. Not linearly
/// separable.
pub fn make_two_moons(seed: u64, n_per_class: usize, rotation_degrees: f64, noise_sigma: f64) -> Result<SyntheticTask> {
    if n_per_class == 0 {
        return Err(DaError::config("n_per_class must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, c) = (rotation_degrees * PI / 180.0).sin_cos();
    let n = 2 * n_per_class;
    let mut x = DMatrix::zeros(2, 2 * n);
    let mut labels = Vec::with_capacity(n);
    for domain in 0..2 {
        for j in 0..n {
            let class = j % 2;
            let t = PI * (j / 2) as f64 / (n_per_class.max(2) - 1) as f64;
            let (px, py) = if class == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            let nx: f64 = StandardNormal.sample(&mut rng);
            let ny: f64 = StandardNormal.sample(&mut rng);
            let (px, py) = (px - 0.5 + noise_sigma * nx, py - 0.25 + noise_sigma * ny);
            let col = domain * n + j;
            if domain == 0 {
                x[(0, col)] = px;
                x[(1, col)] = py;
                labels.push(class + 1);
            } else {
                x[(0, col)] = c * px - s * py;
                x[(1, col)] = s * px + c * py;
            }
        }
    }
    let dataset = DaDataset::new(FeatureMatrix::new(x)?, n, labels.clone())?;
    Ok(SyntheticTask { dataset, target_truth: labels })
}
