//! The alternating solver: pseudo-labels drive the MMD matrix, the MMD
//! matrix and the label matrix drive the projection, and the projection
//! produces new labels.
//!
//! Which blocks run depends on the [`Variant`]. JDA and CDDA_PLUS solve the
//! alignment eigenproblem and label the target by a base classifier in the
//! projected space; OLR, JOLR_DA and DOLL_DA regress soft labels with the
//! GPI-based projection update.

mod kernel;
mod result;

pub use kernel::{kernel_gram, median_pairwise_distance, GramMatrix, ResolvedKernel, SYMMETRY_TOL};
pub use result::{FitResult, RESULT_FILE};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitLabels, KernelSpec, SolverConfig, Variant};
use crate::data::{embed_labels, DaDataset, EmbeddedLabels, Preprocessor};
use crate::error::{DaError, Result};
use crate::eval::{BaseClassifier, NearestNeighbor};
use crate::gpi::{factor_centering, gpi_iterate, update_e, update_g, ConstraintGeometry, STIEFEL_TOL};
use crate::linalg::{center_columns, pinv, polar_factor, stiefel_defect};
use crate::mmd::{trace_form, MmdAssembly};

/// Fits `config.variant` on `dataset`. A configured kernel switches to
/// kernel mode.
pub fn fit(dataset: &DaDataset, config: &SolverConfig) -> Result<FitResult> {
    fit_with_classifier(dataset, config, &NearestNeighbor)
}

/// Kernel mode: the pipeline of [`fit`] with the features replaced by the
/// Gram matrix of the preprocessed samples.
pub fn fit_kernel(dataset: &DaDataset, config: &SolverConfig) -> Result<FitResult> {
    if config.kernel == KernelSpec::None {
        return Err(DaError::config("fit_kernel needs a kernel (linear or rbf)"));
    }
    fit(dataset, config)
}

/// [`fit`] with a custom classifier for the initial pseudo-labels and for
/// the labelling step of JDA and CDDA_PLUS.
pub fn fit_with_classifier(dataset: &DaDataset, config: &SolverConfig, classifier: &dyn BaseClassifier) -> Result<FitResult> {
    config.validate(dataset.class_count())?;
    let n_s = dataset.n_source();
    let preprocessor = Preprocessor::fit(dataset.x(), config.normalize);
    let xn = preprocessor.apply(dataset.x()).into_matrix();
    let initial = initial_labels(&xn, dataset, config, classifier)?;

    let (features, kernel) = match config.kernel {
        KernelSpec::None => (xn.clone(), None),
        spec => {
            let resolved = ResolvedKernel::resolve(&xn, spec)?;
            (resolved.gram(&xn)?.into_matrix(), Some(resolved))
        }
    };
    let state = solve(&features, dataset, initial, config, classifier)?;
    let source_embedding = state.a.tr_mul(&features.columns(0, n_s));
    Ok(FitResult {
        variant: config.variant,
        config: config.clone(),
        class_count: dataset.class_count(),
        n_source: n_s,
        source_labels: dataset.source_labels().to_vec(),
        target_labels: state.labels,
        a: state.a,
        e: state.e,
        y: state.y,
        objective_trace: state.objective_trace,
        iterations_run: state.iterations_run,
        skipped_classes_log: state.skipped_classes_log,
        label_history: state.label_history,
        constraint_defect: state.constraint_defect,
        preprocessor,
        kernel,
        kernel_basis: kernel.map(|_| xn),
        source_embedding,
    })
}

fn initial_labels(xn: &DMatrix<f64>, dataset: &DaDataset, config: &SolverConfig, classifier: &dyn BaseClassifier) -> Result<Vec<usize>> {
    let (n_s, n_t) = (dataset.n_source(), dataset.n_target());
    match config.init_labels {
        InitLabels::NearestNeighbor => classifier.classify(
            &xn.columns(0, n_s).into_owned(),
            dataset.source_labels(),
            &xn.columns(n_s, n_t).into_owned(),
        ),
        InitLabels::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n_t).map(|_| rng.gen_range(1..=dataset.class_count())).collect())
        }
    }
}

struct SolverState {
    a: DMatrix<f64>,
    e: DVector<f64>,
    y: EmbeddedLabels,
    labels: Vec<usize>,
    objective_trace: Vec<f64>,
    iterations_run: usize,
    skipped_classes_log: Vec<std::collections::BTreeSet<usize>>,
    label_history: Vec<Vec<usize>>,
    constraint_defect: f64,
}

fn with_context(t: usize, stage: &str) -> impl Fn(DaError) -> DaError + '_ {
    move |err| match err {
        DaError::Numerical(msg) => DaError::Numerical(format!("outer iteration {}, {stage}: {msg}", t + 1)),
        other => other,
    }
}

fn solve(
    features: &DMatrix<f64>,
    dataset: &DaDataset,
    initial: Vec<usize>,
    config: &SolverConfig,
    classifier: &dyn BaseClassifier,
) -> Result<SolverState> {
    let (n, n_s, n_t) = (features.ncols(), dataset.n_source(), dataset.n_target());
    let c = dataset.class_count();
    let k = config.k;
    let variant = config.variant;
    let source = dataset.source_labels();

    let factor = factor_centering(n, config.centering_delta)?;
    let geometry = ConstraintGeometry::new(features, factor, config.rank_rcond)?;
    if k > geometry.rank() {
        return Err(DaError::config(format!(
            "subspace dimension k = {k} exceeds the numerical rank {} of the centered features",
            geometry.rank()
        )));
    }
    let constraint = geometry.constraint_matrix();

    let mut labels = initial;
    let mut y = initial_label_matrix(source, n_t, c, k)?;
    let mut a = if variant == Variant::Olr {
        ridge_init(features, &geometry, y.as_matrix(), config)?
    } else {
        // The alignment eigenproblem on the initial pseudo-labels, without
        // the repulsive terms.
        let init = MmdAssembly::build(source, Some(&labels), n_t, c, Variant::Jda)?;
        geometry.init_eigen(&init.m_star, config.alpha, k)?.0
    };
    let mut defect = constraint_defect(&constraint, &a);
    let mut e = update_e(features, &a, y.as_matrix());

    let mut state_trace = Vec::with_capacity(config.outer_iters);
    let mut skipped_log = Vec::with_capacity(config.outer_iters);
    let mut history = Vec::with_capacity(config.outer_iters);
    let mut iterations_run = 0;
    for t in 0..config.outer_iters {
        let asm = MmdAssembly::build(source, Some(&labels), n_t, c, variant)?;
        skipped_log.push(asm.skipped_classes.clone());

        let new_labels = if variant.uses_regression() {
            let mut g = DVector::from_element(features.nrows(), 1.0);
            for _ in 0..config.inner_iters {
                let problem = geometry
                    .assemble(&asm.m_star, &g, y.as_matrix(), config.alpha, config.beta)
                    .map_err(with_context(t, "assembly"))?;
                let mut w0 = geometry.to_w(&a);
                if stiefel_defect(&w0) > STIEFEL_TOL {
                    w0 = polar_factor(&w0)?;
                }
                let run = gpi_iterate(&problem, &w0, config.gpi_tol, config.gpi_max_iter).map_err(with_context(t, "GPI"))?;
                a = geometry.recover_a(&run.w);
                defect = defect.max(constraint_defect(&constraint, &a));
                g = update_g(&a, config.epsilon);
            }
            e = update_e(features, &a, y.as_matrix());
            y = update_y_target(features, &a, &e, c, &y, n_s);
            y.hard_labels_range(n_s, n_t)
        } else {
            a = geometry
                .init_eigen(&asm.m_star, config.alpha, k)
                .map_err(with_context(t, "alignment eigenproblem"))?
                .0;
            defect = defect.max(constraint_defect(&constraint, &a));
            let z = a.tr_mul(features);
            let predicted = classifier.classify(
                &z.columns(0, n_s).into_owned(),
                source,
                &z.columns(n_s, n_t).into_owned(),
            )?;
            y = embed_labels(&[source, predicted.as_slice()].concat(), c, k)?;
            e = update_e(features, &a, y.as_matrix());
            predicted
        };

        let f = objective_value(features, &asm.m_star, &a, &e, &y, config);
        if !f.is_finite() {
            return Err(DaError::numerical(format!("objective is not finite at outer iteration {}", t + 1)));
        }
        state_trace.push(f);
        history.push(new_labels.clone());
        iterations_run = t + 1;
        let unchanged = new_labels == labels;
        labels = new_labels;
        if config.early_stop && unchanged {
            break;
        }
    }

    Ok(SolverState {
        a,
        e,
        y,
        labels,
        objective_trace: state_trace,
        iterations_run,
        skipped_classes_log: skipped_log,
        label_history: history,
        constraint_defect: defect,
    })
}

/// Source rows one-hot; target rows uniform over the `C` classes, so the
/// first regression step is driven by the source labels alone.
fn initial_label_matrix(source: &[usize], n_t: usize, c: usize, k: usize) -> Result<EmbeddedLabels> {
    let y = embed_labels(source, c, k)?;
    let n_s = source.len();
    let mut values = DMatrix::zeros(n_s + n_t, k);
    values.rows_mut(0, n_s).copy_from(y.as_matrix());
    values.view_mut((n_s, 0), (n_t, c)).fill(1.0 / c as f64);
    EmbeddedLabels::from_matrix(values, c)
}

/// Ridge regression of `Y` on the centered features (`G = I`), mapped to
/// the nearest feasible projection.
fn ridge_init(features: &DMatrix<f64>, geometry: &ConstraintGeometry, y: &DMatrix<f64>, config: &SolverConfig) -> Result<DMatrix<f64>> {
    let xc = center_columns(features);
    let mut lhs = &xc * xc.transpose();
    for i in 0..lhs.nrows() {
        lhs[(i, i)] += config.alpha + config.beta;
    }
    let rhs = &xc * y;
    let guess = match lhs.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => pinv(&lhs, config.rank_rcond)? * rhs,
    };
    geometry.init_from_guess(&guess, config.k)
}

/// `‖Aᵀ S A − I‖_F` for the constraint matrix `S = X (H + δI) Xᵀ`.
pub fn constraint_defect(s: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let gram = a.tr_mul(&(s * a));
    (gram - DMatrix::identity(a.ncols(), a.ncols())).norm()
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&vi| (vi - theta).max(0.0)).collect()
}

/// Replaces every target row of `y` by the simplex projection of the first
/// `C` entries of `Aᵀ xᵢ + e`, zero-padded. Source rows are copied.
pub fn update_y_target(
    x: &DMatrix<f64>,
    a: &DMatrix<f64>,
    e: &DVector<f64>,
    class_count: usize,
    y: &EmbeddedLabels,
    n_source: usize,
) -> EmbeddedLabels {
    let mut values = y.as_matrix().clone();
    let scores = a.tr_mul(&x.columns(n_source, x.ncols() - n_source));
    for (j, col) in scores.column_iter().enumerate() {
        let r: Vec<f64> = (0..class_count).map(|c| col[c] + e[c]).collect();
        let p = project_simplex(&r);
        let mut row = values.row_mut(n_source + j);
        row.fill(0.0);
        for (c, v) in p.into_iter().enumerate() {
            row[c] = v;
        }
    }
    EmbeddedLabels::from_matrix_unchecked(values, class_count)
}

/// `‖A‖_{2,1}`: the sum of the Euclidean norms of the rows of `A`.
pub fn l21_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.norm()).sum()
}

/// `‖Xᵀ A + 1 eᵀ − Y‖_F²`.
pub fn regression_residual(x: &DMatrix<f64>, a: &DMatrix<f64>, e: &DVector<f64>, y: &DMatrix<f64>) -> f64 {
    let mut r = x.tr_mul(a) - y;
    for mut row in r.row_iter_mut() {
        row += e.transpose();
    }
    r.norm_squared()
}

/// Model objective at the given state, with the exact ℓ2,1 norm:
///
/// ```text
/// tr(Aᵀ X M* Xᵀ A) + α‖A‖_F² + β‖A‖_{2,1}² + ‖Xᵀ A + 1 eᵀ − Y‖_F²
/// ```
///
/// The last two terms are dropped for the variants without label
/// regression.
pub fn objective_value(
    x: &DMatrix<f64>,
    m_star: &DMatrix<f64>,
    a: &DMatrix<f64>,
    e: &DVector<f64>,
    y: &EmbeddedLabels,
    config: &SolverConfig,
) -> f64 {
    let mut f = trace_form(x, m_star, a) + config.alpha * a.norm_squared();
    if config.variant.uses_regression() {
        let l21 = l21_norm(a);
        f += config.beta * l21 * l21 + regression_residual(x, a, e, y.as_matrix());
    }
    f
}

/// Gradient in `A` of the objective with `β‖A‖_{2,1}²` replaced by its
/// ε-smoothed form `β (Σⱼ √(‖aʲ‖² + ε))²`:
/// `2 (X M* Xᵀ A + α A + β G A + X (Xᵀ A + 1 eᵀ − Y))` with `G` from
/// [`update_g`] at `A`.
pub fn smoothed_gradient(
    x: &DMatrix<f64>,
    m_star: &DMatrix<f64>,
    a: &DMatrix<f64>,
    e: &DVector<f64>,
    y: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
    epsilon: f64,
) -> DMatrix<f64> {
    let g = update_g(a, epsilon);
    let mut resid = x.tr_mul(a) - y;
    for mut row in resid.row_iter_mut() {
        row += e.transpose();
    }
    let mut ga = a.clone();
    for (j, mut row) in ga.row_iter_mut().enumerate() {
        row *= g[j];
    }
    let xm = x * m_star;
    (xm * x.tr_mul(a) + a * alpha + ga * beta + x * resid) * 2.0
}
