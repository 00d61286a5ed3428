//! The projection update: eigen initialization, the generalized power
//! iteration (GPI) on the Stiefel manifold, and the closed-form updates of
//! the bias `e` and the ℓ2,1 reweighting diagonal `G`.
//!
//! With `h hᵀ = H + δI` and `P = X h`, the substitution `W = Pᵀ A` turns the
//! constraint `Aᵀ X (H + δI) Xᵀ A = I` into `Wᵀ W = I` and the A-subproblem
//! into `min tr(Wᵀ B W − 2 Wᵀ C)` with
//!
//! ```text
//! Q = X H Xᵀ + β G + α I + X M* Xᵀ
//! B = P⁺ Q (P⁺)ᵀ,   C = h⁻¹ H Y
//! ```
//!
//! Only `W` in the range of `Pᵀ` maps back to an `A` with `Pᵀ A = W`, so the
//! iteration runs in an orthonormal basis `V` of that range (the right
//! singular vectors of `P`) and the linear term is projected onto it. When
//! `P` is square and invertible this is exactly the unrestricted iteration.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{DaError, Result};
use crate::linalg::{
    center_columns, center_rows, centering_matrix, check_finite, orient_columns, orthonormal_completion,
    polar_factor, stiefel_defect, sym_eigen_ascending, symmetrize, RankSvd,
};

/// Singular-value cutoff used by the standalone wrappers.
pub const DEFAULT_PINV_RCOND: f64 = 1e-12;

/// Tolerance on `‖W₀ᵀ W₀ − I‖_F` accepted as a GPI starting point.
pub const STIEFEL_TOL: f64 = 1e-8;

/// Lower-triangular `h` with `h hᵀ = H + δI`.
#[derive(Debug, Clone)]
pub struct CenteringFactor {
    pub n: usize,
    pub h: DMatrix<f64>,
    pub delta: f64,
}

/// Cholesky factor of the regularized centering matrix `H + δI`.
///
/// `H` itself has the all-ones vector in its null space, so `δ > 0` is
/// required.
pub fn factor_centering(n: usize, delta: f64) -> Result<CenteringFactor> {
    if n < 2 {
        return Err(DaError::config(format!("centering needs n ≥ 2 samples, got {n}")));
    }
    if !(delta > 0.0) {
        return Err(DaError::config(format!("centering_delta must be positive, got {delta}")));
    }
    let mut m = centering_matrix(n);
    for i in 0..n {
        m[(i, i)] += delta;
    }
    let chol = Cholesky::new(m).ok_or_else(|| DaError::numerical("Cholesky factorization of H + δI failed"))?;
    Ok(CenteringFactor { n, h: chol.l(), delta })
}

impl CenteringFactor {
    /// `h⁻¹ rhs` by forward substitution.
    pub fn solve_lower(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.h
            .solve_lower_triangular(rhs)
            .ok_or_else(|| DaError::numerical("singular centering factor"))
    }
}

/// Quadratic-plus-linear problem on the Stiefel manifold.
#[derive(Debug, Clone)]
pub struct GpiProblem {
    /// `n × n`, symmetric.
    pub b: DMatrix<f64>,
    /// `n × k`.
    pub c: DMatrix<f64>,
    pub mu: f64,
    /// `μ I − B`.
    pub b_prime: DMatrix<f64>,
    reduced: Option<Reduced>,
}

/// The same problem expressed in an orthonormal basis of the feasible range.
#[derive(Debug, Clone)]
struct Reduced {
    basis: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

/// Gershgorin bound on `λ_max(B)` plus a relative margin.
fn gershgorin_shift(b: &DMatrix<f64>) -> f64 {
    let bound = b
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    bound + 1e-6 * (1.0 + bound)
}

impl GpiProblem {
    /// Unrestricted problem over all `n × k` matrices with orthonormal
    /// columns. `b` is symmetrized.
    pub fn new(mut b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() || b.nrows() != c.nrows() {
            return Err(DaError::numerical(format!(
                "GPI shapes disagree: B is {:?}, C is {:?}",
                b.shape(),
                c.shape()
            )));
        }
        symmetrize(&mut b);
        check_finite(&b, "B")?;
        check_finite(&c, "C")?;
        let mu = gershgorin_shift(&b);
        let b_prime = DMatrix::identity(b.nrows(), b.nrows()) * mu - &b;
        Ok(GpiProblem { b, c, mu, b_prime, reduced: None })
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn k(&self) -> usize {
        self.c.ncols()
    }

    /// `tr(Wᵀ B W − 2 Wᵀ C)`.
    pub fn objective(&self, w: &DMatrix<f64>) -> f64 {
        let bw = &self.b * w;
        w.component_mul(&bw).sum() - 2.0 * w.component_mul(&self.c).sum()
    }

    /// Orthonormal basis of the feasible range of `W`, if restricted.
    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        self.reduced.as_ref().map(|r| &r.basis)
    }
}

/// Outcome of one GPI run.
#[derive(Debug, Clone)]
pub struct GpiRun {
    pub w: DMatrix<f64>,
    /// Objective at the start and after every accepted step; non-increasing.
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn quad_linear(b: &DMatrix<f64>, c: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let bw = b * w;
    w.component_mul(&bw).sum() - 2.0 * w.component_mul(c).sum()
}

/// Generalized power iteration: `Z = 2 B' W + 2 C`, `W ← U Vᵀ` from the thin
/// SVD `Z = U S Vᵀ`, until the relative objective change is at most `tol` or
/// `max_iter` steps have run.
pub fn gpi_iterate(problem: &GpiProblem, w0: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<GpiRun> {
    let (n, k) = (problem.n(), problem.k());
    if w0.shape() != (n, k) {
        return Err(DaError::numerical(format!(
            "initial W is {:?}, expected {n}x{k}",
            w0.shape()
        )));
    }
    let defect = stiefel_defect(w0);
    if !(defect <= STIEFEL_TOL) {
        return Err(DaError::numerical(format!(
            "initial W is not orthonormal (‖WᵀW − I‖ = {defect:e})"
        )));
    }

    let (b, c, mut w, basis) = match &problem.reduced {
        Some(red) => {
            if k > red.basis.ncols() {
                return Err(DaError::config(format!(
                    "subspace dimension k = {k} exceeds the rank {} of the constraint",
                    red.basis.ncols()
                )));
            }
            let mut omega = red.basis.tr_mul(w0);
            if stiefel_defect(&omega) > STIEFEL_TOL {
                omega = polar_factor(&omega)?;
            }
            (red.b.clone(), red.c.clone(), omega, Some(&red.basis))
        }
        None => (problem.b.clone(), problem.c.clone(), w0.clone(), None),
    };
    let m = b.nrows();
    let b_prime = DMatrix::identity(m, m) * problem.mu - &b;

    let mut f = quad_linear(&b, &c, &w);
    let mut trace = vec![f];
    let mut converged = false;
    for _ in 0..max_iter {
        let z = (&b_prime * &w + &c) * 2.0;
        let next = polar_factor(&z)?;
        let f_next = quad_linear(&b, &c, &next);
        if !f_next.is_finite() {
            return Err(DaError::numerical("GPI objective became non-finite"));
        }
        if f_next > f {
            // Only round-off can raise the objective: the fixed point is reached.
            converged = true;
            break;
        }
        let change = f - f_next;
        w = next;
        f = f_next;
        trace.push(f);
        if change <= tol * f.abs() || change == 0.0 {
            converged = true;
            break;
        }
    }
    let w = match basis {
        Some(v) => v * w,
        None => w,
    };
    Ok(GpiRun { w, trace, converged })
}

/// Everything about `P = X h` that stays fixed during a fit: its truncated
/// SVD `P ≈ U Σ Vᵀ` and the centered data.
#[derive(Debug, Clone)]
pub struct ConstraintGeometry {
    factor: CenteringFactor,
    x: DMatrix<f64>,
    xc: DMatrix<f64>,
    svd: RankSvd,
}

impl ConstraintGeometry {
    pub fn new(x: &DMatrix<f64>, factor: CenteringFactor, rcond: f64) -> Result<Self> {
        if x.ncols() != factor.n {
            return Err(DaError::numerical(format!(
                "data has {} samples but the centering factor is {}x{}",
                x.ncols(),
                factor.n,
                factor.n
            )));
        }
        let p = x * &factor.h;
        check_finite(&p, "Xh")?;
        let svd = RankSvd::new(&p, rcond)?;
        if svd.rank() == 0 {
            return Err(DaError::data("centered data matrix is numerically zero"));
        }
        Ok(ConstraintGeometry {
            xc: center_columns(x),
            x: x.clone(),
            factor,
            svd,
        })
    }

    pub fn factor(&self) -> &CenteringFactor {
        &self.factor
    }

    /// Numerical rank of `X h`; the largest admissible `k`.
    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    /// `X (H + δI) Xᵀ`.
    pub fn constraint_matrix(&self) -> DMatrix<f64> {
        let mut s = &self.xc * self.xc.transpose() + &self.x * self.x.transpose() * self.factor.delta;
        symmetrize(&mut s);
        s
    }

    /// `W = Pᵀ A`.
    pub fn to_w(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        // Pᵀ A = V Σ Uᵀ A on the retained subspace.
        let mut coords = self.svd.u.tr_mul(a);
        for (i, mut row) in coords.row_iter_mut().enumerate() {
            row *= self.svd.s[i];
        }
        &self.svd.v * coords
    }

    /// Minimum-norm solution of `Pᵀ A = W`: `A = (Pᵀ)⁺ W`.
    pub fn recover_a(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut coords = self.svd.v.tr_mul(w);
        for (i, mut row) in coords.row_iter_mut().enumerate() {
            row /= self.svd.s[i];
        }
        &self.svd.u * coords
    }

    fn omega_to_w(&self, omega: &DMatrix<f64>) -> DMatrix<f64> {
        let mut coords = omega.clone();
        for (i, mut row) in coords.row_iter_mut().enumerate() {
            row /= self.svd.s[i];
        }
        &self.svd.u * coords
    }

    /// Builds the GPI problem for fixed `M*`, `G` (diagonal) and `Y`.
    pub fn assemble(&self, m_star: &DMatrix<f64>, g: &DVector<f64>, y: &DMatrix<f64>, alpha: f64, beta: f64) -> Result<GpiProblem> {
        let (d, n) = self.x.shape();
        if m_star.shape() != (n, n) || g.len() != d || y.nrows() != n {
            return Err(DaError::numerical(format!(
                "GPI assembly shapes: X {d}x{n}, M* {:?}, G {}, Y {:?}",
                m_star.shape(),
                g.len(),
                y.shape()
            )));
        }
        let mut q = &self.xc * self.xc.transpose() + (&self.x * m_star) * self.x.transpose();
        for i in 0..d {
            q[(i, i)] += alpha + beta * g[i];
        }
        symmetrize(&mut q);
        check_finite(&q, "Q")?;

        // B_r = Σ⁻¹ Uᵀ Q U Σ⁻¹, B = V B_r Vᵀ.
        let mut b_r = self.svd.u.tr_mul(&q) * &self.svd.u;
        let r = self.rank();
        for i in 0..r {
            for j in 0..r {
                b_r[(i, j)] /= self.svd.s[i] * self.svd.s[j];
            }
        }
        symmetrize(&mut b_r);
        check_finite(&b_r, "B")?;
        let mut b = &self.svd.v * &b_r * self.svd.v.transpose();
        symmetrize(&mut b);

        let c = self.factor.solve_lower(&center_rows(y))?;
        check_finite(&c, "C")?;
        let c_r = self.svd.v.tr_mul(&c);

        let mu = gershgorin_shift(&b);
        let b_prime = DMatrix::identity(n, n) * mu - &b;
        Ok(GpiProblem {
            b,
            c,
            mu,
            b_prime,
            reduced: Some(Reduced {
                basis: self.svd.v.clone(),
                b: b_r,
                c: c_r,
            }),
        })
    }

    /// `k` smallest generalized eigenvectors of
    /// `(X M Xᵀ + αI) A = X (H + δI) Xᵀ A Φ`, normalized so that the constraint
    /// holds.
    pub fn init_eigen(&self, m: &DMatrix<f64>, alpha: f64, k: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        eigen_in_basis(&self.svd.u, &self.svd.s, &self.x, m, alpha, k)
    }

    /// Feasible projection whose first columns follow `guess` as closely as
    /// Gram–Schmidt allows, completed with the leading directions of `P`.
    pub fn init_from_guess(&self, guess: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
        let r = self.rank();
        if k > r {
            return Err(DaError::config(format!(
                "subspace dimension k = {k} exceeds the rank {r} of the centered data"
            )));
        }
        // ω = Σ Uᵀ A are the coordinates of Pᵀ A in the basis V.
        let mut omega = self.svd.u.tr_mul(guess);
        for (i, mut row) in omega.row_iter_mut().enumerate() {
            row *= self.svd.s[i];
        }
        let mut candidates = DMatrix::zeros(r, omega.ncols() + r);
        candidates.columns_mut(0, omega.ncols()).copy_from(&omega);
        candidates.columns_mut(omega.ncols(), r).fill_with_identity();
        let omega = orthonormal_completion(&candidates, k)?;
        Ok(self.omega_to_w(&omega))
    }
}

fn eigen_in_basis(
    u: &DMatrix<f64>,
    s: &DVector<f64>,
    x: &DMatrix<f64>,
    m: &DMatrix<f64>,
    alpha: f64,
    k: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let r = s.len();
    if k > r {
        return Err(DaError::config(format!(
            "subspace dimension k = {k} exceeds the rank {r} of the constraint matrix"
        )));
    }
    if m.shape() != (x.ncols(), x.ncols()) {
        return Err(DaError::numerical("MMD matrix does not match the sample count"));
    }
    let xm = x * m;
    let mut lhs = &xm * x.transpose();
    for i in 0..lhs.nrows() {
        lhs[(i, i)] += alpha;
    }
    symmetrize(&mut lhs);
    check_finite(&lhs, "X M Xᵀ + αI")?;
    let mut t = u.tr_mul(&lhs) * u;
    for i in 0..r {
        for j in 0..r {
            t[(i, j)] /= s[i] * s[j];
        }
    }
    symmetrize(&mut t);
    let (values, vectors) = sym_eigen_ascending(&t);
    let mut omega = vectors.columns(0, k).into_owned();
    for (i, mut row) in omega.row_iter_mut().enumerate() {
        row /= s[i];
    }
    let mut a = u * omega;
    orient_columns(&mut a);
    check_finite(&a, "A")?;
    Ok((a, values.rows(0, k).into_owned()))
}

/// `k` eigenvectors with the smallest eigenvalues of
/// `(X M Xᵀ + αI) A = X H̃ Xᵀ A Φ` where `H̃ = h_mat`, eigenvalues ascending.
///
/// Directions where `X H̃ Xᵀ` is numerically singular are excluded.
pub fn init_a_eigen(x: &DMatrix<f64>, m: &DMatrix<f64>, h_mat: &DMatrix<f64>, alpha: f64, k: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut rhs = x * h_mat * x.transpose();
    symmetrize(&mut rhs);
    check_finite(&rhs, "X H Xᵀ")?;
    let (vals, vecs) = sym_eigen_ascending(&rhs);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len())
        .rev()
        .filter(|&i| vals[i] > DEFAULT_PINV_RCOND * top && vals[i] > 0.0)
        .collect();
    let u = DMatrix::from_columns(&keep.iter().map(|&i| vecs.column(i)).collect::<Vec<_>>());
    let s = DVector::from_iterator(keep.len(), keep.iter().map(|&i| vals[i].sqrt()));
    if keep.is_empty() {
        return Err(DaError::numerical("X H Xᵀ is numerically zero"));
    }
    eigen_in_basis(&u, &s, x, m, alpha, k)
}

/// Builds the GPI problem from raw inputs; see [`ConstraintGeometry::assemble`].
pub fn assemble_gpi(
    x: &DMatrix<f64>,
    h: &CenteringFactor,
    m_star: &DMatrix<f64>,
    g: &DVector<f64>,
    y: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
) -> Result<GpiProblem> {
    ConstraintGeometry::new(x, h.clone(), DEFAULT_PINV_RCOND)?.assemble(m_star, g, y, alpha, beta)
}

/// `A = ((X h)ᵀ)⁺ W`.
pub fn recover_a(w: &DMatrix<f64>, x: &DMatrix<f64>, h: &CenteringFactor) -> Result<DMatrix<f64>> {
    Ok(ConstraintGeometry::new(x, h.clone(), DEFAULT_PINV_RCOND)?.recover_a(w))
}

/// Optimal bias `e = (Yᵀ 1 − Aᵀ X 1) / n` of `‖Xᵀ A + 1 eᵀ − Y‖_F²`.
pub fn update_e(x: &DMatrix<f64>, a: &DMatrix<f64>, y: &DMatrix<f64>) -> DVector<f64> {
    let n = x.ncols() as f64;
    let y_sum = y.row_sum().transpose();
    let xa_sum = a.tr_mul(&x.column_sum());
    (y_sum - xa_sum) / n
}

/// Reweighting diagonal for the smoothed squared ℓ2,1 norm over the rows
/// `aʲ` of `A`: `g_jj = (Σᵢ √(‖aⁱ‖² + ε)) / √(‖aʲ‖² + ε)`.
pub fn update_g(a: &DMatrix<f64>, epsilon: f64) -> DVector<f64> {
    let r: Vec<f64> = a.row_iter().map(|row| (row.norm_squared() + epsilon).sqrt()).collect();
    let total: f64 = r.iter().sum();
    DVector::from_iterator(r.len(), r.iter().map(|ri| total / ri))
}

/// `(Σⱼ √(‖aʲ‖² + ε))²`, the smooth surrogate majorized by `tr(Aᵀ G A)`.
pub fn smoothed_l21_squared(a: &DMatrix<f64>, epsilon: f64) -> f64 {
    let s: f64 = a.row_iter().map(|row| (row.norm_squared() + epsilon).sqrt()).sum();
    s * s
}
