use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use dollda::data::embed_labels;
use dollda::eval::nn_classify;
use dollda::gpi::{gpi_iterate, update_e, GpiProblem};
use dollda::linalg::{polar_factor, stiefel_defect, sym_eigen_ascending};
use dollda::mmd::{direct_mmd_oracle, elementary_terms, trace_form, MmdAssembly};
use dollda::pipeline::{project_simplex, regression_residual, update_y_target};
use dollda::Variant;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// `(class_count, source labels, target labels)` with every class present in
/// the source.
fn labelling() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (2usize..=4, 0usize..8, 1usize..12).prop_flat_map(|(c, extra_s, n_t)| {
        (
            Just(c),
            prop::collection::vec(1..=c, extra_s),
            prop::collection::vec(1..=c, n_t),
        )
            .prop_map(|(c, extra, t)| {
                let mut s: Vec<usize> = (1..=c).collect();
                s.extend(extra);
                (c, s, t)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mmd_terms_match_direct_means((c, ys, yt) in labelling(), l in 1usize..6, k in 1usize..4, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = ys.len() + yt.len();
        let x = DMatrix::from_fn(l, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = DMatrix::from_fn(l, k, |_, _| rng.gen_range(-1.0..1.0));
        for term in elementary_terms(&ys, &yt, c).unwrap() {
            let m = term.matrix(n);
            let direct = direct_mmd_oracle(&x, &a, &term.group_a, &term.group_b).unwrap();
            prop_assert!((trace_form(&x, &m, &a) - direct).abs() <= 1e-10 * direct.max(1e-12));
            prop_assert!(m.sum().abs() <= 1e-12);
            prop_assert!(sym_eigen_ascending(&m).0[0] >= -1e-12);
        }
    }

    #[test]
    fn m_star_is_symmetric_with_zero_row_sums((c, ys, yt) in labelling()) {
        for v in Variant::ALL {
            let asm = MmdAssembly::build(&ys, Some(&yt), yt.len(), c, v).unwrap();
            prop_assert_eq!(&asm.m_star, &asm.m_star.transpose());
            for row in asm.m_star.row_iter() {
                prop_assert!(row.sum().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn gpi_trace_is_monotone_and_stays_on_stiefel(b in matrix(8, 8), c in matrix(8, 3), w in matrix(8, 3)) {
        let b = (&b + b.transpose()) * 0.5;
        let problem = GpiProblem::new(b, c).unwrap();
        let w0 = polar_factor(&w).unwrap();
        let run = gpi_iterate(&problem, &w0, 1e-12, 500).unwrap();
        prop_assert!(run.trace.windows(2).all(|p| p[1] <= p[0]));
        prop_assert!(stiefel_defect(&run.w) <= 1e-8);
    }

    #[test]
    fn bias_update_minimizes_the_residual(x in matrix(3, 9), a in matrix(3, 2), y in matrix(9, 2), d in matrix(2, 1)) {
        let e = update_e(&x, &a, &y);
        let best = regression_residual(&x, &a, &e, &y);
        let moved = DVector::from_column_slice((&e + d.column(0)).as_slice());
        prop_assert!(regression_residual(&x, &a, &moved, &y) >= best - 1e-10);
    }

    #[test]
    fn simplex_projection_is_feasible_and_optimal(v in prop::collection::vec(-3.0..3.0f64, 1..8), q in prop::collection::vec(0.0..1.0f64, 1..8)) {
        let p = project_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        // Any other simplex point is at least as far from v.
        let len = v.len().min(q.len());
        let total: f64 = q[..len].iter().sum::<f64>() + 1e-9;
        let mut other: Vec<f64> = q[..len].iter().map(|x| (x + 1e-9 / len as f64) / total).collect();
        other.resize(v.len(), 0.0);
        let dist = |x: &[f64]| x.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        prop_assert!(dist(&p) <= dist(&other) + 1e-12);
    }

    #[test]
    fn y_update_touches_only_target_rows(x in matrix(4, 10), a in matrix(4, 5), e in matrix(5, 1), labels in prop::collection::vec(1usize..=3, 10)) {
        let y = embed_labels(&labels, 3, 5).unwrap();
        let e = DVector::from_column_slice(e.as_slice());
        let updated = update_y_target(&x, &a, &e, 3, &y, 6);
        prop_assert_eq!(updated.as_matrix().rows(0, 6), y.as_matrix().rows(0, 6));
        updated.validate(1e-12).unwrap();
    }

    #[test]
    fn nearest_neighbor_matches_brute_force(train in matrix(3, 12), test in matrix(3, 7), labels in prop::collection::vec(1usize..=4, 12)) {
        let predicted = nn_classify(&train, &labels, &test).unwrap();
        for (j, col) in test.column_iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for i in 0..train.ncols() {
                let d = (train.column(i) - col).norm_squared();
                if d < best.0 {
                    best = (d, i);
                }
            }
            prop_assert_eq!(predicted[j], labels[best.1]);
        }
    }
}
