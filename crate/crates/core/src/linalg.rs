//! Dense linear-algebra helpers shared by the solver modules.
//!
//! Everything here is deterministic: eigenvectors and singular vectors are
//! returned in a fixed order with a fixed sign convention, so two runs on the
//! same input produce bit-identical output.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{DaError, Result};

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

/// `I - (1/n) 11ᵀ`.
pub fn centering_matrix(n: usize) -> DMatrix<f64> {
    let off = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - off } else { -off })
}

/// Subtracts the column mean from every column: returns `X H`.
pub(crate) fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols() as f64;
    let mean = x.column_sum() / n;
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= &mean;
    }
    out
}

/// Subtracts the column means of `y` from each of its rows: returns `H Y`.
pub(crate) fn center_rows(y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = y.nrows() as f64;
    let mean = y.row_sum() / n;
    let mut out = y.clone();
    for mut row in out.row_iter_mut() {
        row -= &mean;
    }
    out
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn check_finite(m: &DMatrix<f64>, name: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % m.nrows(), pos / m.nrows());
        return Err(DaError::numerical(format!(
            "non-finite entry in {name} at ({r}, {c})"
        )));
    }
    Ok(())
}

/// Flips column signs so that the largest-magnitude entry of every column is
/// positive (first such entry on ties).
pub fn orient_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if best_abs > 0.0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Symmetric eigendecomposition with eigenvalues ascending and oriented
/// eigenvectors.
pub fn sym_eigen_ascending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    orient_columns(&mut vectors);
    (values, vectors)
}

/// Thin SVD truncated to numerical rank: `m ≈ u diag(s) vᵀ` keeping singular
/// values `s_i > rcond * s_max`.
#[derive(Debug, Clone)]
pub struct RankSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl RankSvd {
    pub fn new(m: &DMatrix<f64>, rcond: f64) -> Result<Self> {
        let svd = SVD::try_new(m.clone(), true, true, SVD_EPS, SVD_MAX_ITER)
            .ok_or_else(|| DaError::numerical("SVD did not converge"))?;
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested Vᵀ");
        let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cutoff = rcond * s_max;
        let rank = svd
            .singular_values
            .iter()
            .take_while(|&&s| s > cutoff && s > 0.0)
            .count();
        let mut u_r = u.columns(0, rank).into_owned();
        let mut v_r = v_t.rows(0, rank).transpose();
        // Fix the sign ambiguity jointly on u and v.
        for j in 0..rank {
            let col = u_r.column(j);
            let (idx, _) = col
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            if col[idx] < 0.0 {
                u_r.column_mut(j).neg_mut();
                v_r.column_mut(j).neg_mut();
            }
        }
        Ok(RankSvd {
            u: u_r,
            s: svd.singular_values.rows(0, rank).into_owned(),
            v: v_r,
        })
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Moore–Penrose pseudo-inverse `v diag(1/s) uᵀ`.
    pub fn pinv(&self) -> DMatrix<f64> {
        let mut vs = self.v.clone();
        for (j, mut col) in vs.column_iter_mut().enumerate() {
            col /= self.s[j];
        }
        vs * self.u.transpose()
    }
}

/// Moore–Penrose pseudo-inverse with relative singular-value cutoff `rcond`.
pub fn pinv(m: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>> {
    Ok(RankSvd::new(m, rcond)?.pinv())
}

/// Orthogonal polar factor `U Vᵀ` of a tall matrix `z = U S Vᵀ`.
///
/// On SVD failure the input is perturbed by `1e-12 ‖z‖` along its leading
/// diagonal and the decomposition retried once.
pub fn polar_factor(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let attempt = |m: DMatrix<f64>| -> Option<DMatrix<f64>> {
        let svd = SVD::try_new(m, true, true, SVD_EPS, SVD_MAX_ITER)?;
        let out = svd.u? * svd.v_t?;
        out.iter().all(|v| v.is_finite()).then_some(out)
    };
    if let Some(out) = attempt(z.clone()) {
        return Ok(out);
    }
    let scale = 1e-12 * z.norm().max(f64::MIN_POSITIVE);
    let mut perturbed = z.clone();
    for i in 0..z.nrows().min(z.ncols()) {
        perturbed[(i, i)] += scale;
    }
    attempt(perturbed).ok_or_else(|| DaError::numerical("SVD of GPI update matrix failed after perturbation"))
}

/// Modified Gram–Schmidt over the columns of `candidates`, keeping the first
/// `k` columns that are not (numerically) in the span of those already kept.
pub(crate) fn orthonormal_completion(candidates: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = candidates.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    for col in candidates.column_iter() {
        if basis.len() == k {
            break;
        }
        let original = col.norm();
        if original == 0.0 {
            continue;
        }
        let mut v = col.into_owned();
        for _ in 0..2 {
            for b in &basis {
                let d = b.dot(&v);
                v.axpy(-d, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-10 * original {
            basis.push(v / norm);
        }
    }
    if basis.len() < k {
        return Err(DaError::numerical(format!(
            "could only build {} of {k} orthonormal directions in dimension {n}",
            basis.len()
        )));
    }
    Ok(DMatrix::from_columns(&basis))
}

/// `‖Mᵀ M − I‖_F`.
pub fn stiefel_defect(w: &DMatrix<f64>) -> f64 {
    let gram = w.transpose() * w;
    (gram - DMatrix::identity(w.ncols(), w.ncols())).norm()
}
