use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::KernelSpec;
use crate::error::{DaError, Result};

/// Largest `|K_ij − K_ji|` accepted for a Gram matrix.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// A symmetric `n × n` kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    pub fn new(k: DMatrix<f64>) -> Result<Self> {
        if !k.is_square() {
            return Err(DaError::data(format!("Gram matrix must be square, got {:?}", k.shape())));
        }
        let n = k.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (k[(i, j)] - k[(j, i)]).abs();
                if !(gap <= SYMMETRY_TOL) {
                    return Err(DaError::data(format!(
                        "Gram matrix is not symmetric: |K[{i},{j}] − K[{j},{i}]| = {gap:e}"
                    )));
                }
            }
        }
        Ok(GramMatrix(k))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// A kernel with its bandwidth resolved, enough to evaluate it on new data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResolvedKernel {
    Linear,
    Rbf { bandwidth: f64 },
}

impl ResolvedKernel {
    /// Resolves `auto` bandwidths against the columns of `x`.
    pub fn resolve(x: &DMatrix<f64>, spec: KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::None => Err(DaError::config("kernel mode requested without a kernel")),
            KernelSpec::Linear => Ok(ResolvedKernel::Linear),
            KernelSpec::Rbf { bandwidth: Some(b) } => {
                if !(b > 0.0) || !b.is_finite() {
                    return Err(DaError::config(format!("RBF bandwidth must be positive, got {b}")));
                }
                Ok(ResolvedKernel::Rbf { bandwidth: b })
            }
            KernelSpec::Rbf { bandwidth: None } => {
                let b = median_pairwise_distance(x);
                if !(b > 0.0) {
                    return Err(DaError::data("median pairwise distance is zero; set the RBF bandwidth explicitly"));
                }
                Ok(ResolvedKernel::Rbf { bandwidth: b })
            }
        }
    }

    /// `K[i, j] = κ(aᵢ, bⱼ)` over the columns of `a` and `b`.
    pub fn cross(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        match *self {
            ResolvedKernel::Linear => a.tr_mul(b),
            ResolvedKernel::Rbf { bandwidth } => {
                let denom = 2.0 * bandwidth * bandwidth;
                DMatrix::from_fn(a.ncols(), b.ncols(), |i, j| {
                    let d2: f64 = a
                        .column(i)
                        .iter()
                        .zip(b.column(j).iter())
                        .map(|(p, q)| (p - q) * (p - q))
                        .sum();
                    (-d2 / denom).exp()
                })
            }
        }
    }

    pub fn gram(&self, x: &DMatrix<f64>) -> Result<GramMatrix> {
        let mut k = self.cross(x, x);
        crate::linalg::symmetrize(&mut k);
        GramMatrix::new(k)
    }
}

/// Median of `‖xᵢ − xⱼ‖` over all pairs `i < j`.
pub fn median_pairwise_distance(x: &DMatrix<f64>) -> f64 {
    let n = x.ncols();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push((x.column(i) - x.column(j)).norm());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    }
}

/// Gram matrix of the columns of `x` under `spec`.
pub fn kernel_gram(x: &DMatrix<f64>, spec: KernelSpec) -> Result<GramMatrix> {
    ResolvedKernel::resolve(x, spec)?.gram(x)
}
