//! MMD constraint matrices.
//!
//! Every elementary term compares the means of two index groups `a` and `b`
//! of the packed sample matrix; its matrix is `v vᵀ` with
//! `v = 1_a / |a| − 1_b / |b|`, so that `tr(Aᵀ X (v vᵀ) Xᵀ A)` is the squared
//! distance between the projected group means. The builders fill the entries
//! from the case tables (`1/|a|²`, `1/|b|²`, `−1/(|a||b|)`) directly.
//!
//! Samples are indexed `0..n_s` for the source and `n_s..n_s + n_t` for the
//! target; class labels are 1-based.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::config::Variant;
use crate::error::{DaError, Result};

/// Which family an elementary term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Marginal,
    Conditional { class: usize },
    SourceToTarget { source_class: usize, target_class: usize },
    TargetToSource { target_class: usize, source_class: usize },
    SourceToSource { class: usize, other: usize },
}

/// One mean-difference term between two sample groups.
#[derive(Debug, Clone)]
pub struct ElementaryTerm {
    pub kind: TermKind,
    pub group_a: Vec<usize>,
    pub group_b: Vec<usize>,
}

impl ElementaryTerm {
    /// Dense `n × n` matrix of this term.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        add_pair_term(&mut m, &self.group_a, &self.group_b, 1.0);
        m
    }
}

/// `m += sign * v vᵀ` for `v = 1_a/|a| − 1_b/|b|`, written entry by entry.
fn add_pair_term(m: &mut DMatrix<f64>, a: &[usize], b: &[usize], sign: f64) {
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let aa = sign / (na * na);
    let bb = sign / (nb * nb);
    let ab = -sign / (na * nb);
    for &i in a {
        for &j in a {
            m[(i, j)] += aa;
        }
    }
    for &i in b {
        for &j in b {
            m[(i, j)] += bb;
        }
    }
    for &i in a {
        for &j in b {
            m[(i, j)] += ab;
            m[(j, i)] += ab;
        }
    }
}

/// Per-class sample indices in the packed ordering.
#[derive(Debug, Clone)]
struct ClassGroups {
    source: Vec<Vec<usize>>,
    target: Vec<Vec<usize>>,
}

impl ClassGroups {
    fn new(source_labels: &[usize], target_labels: &[usize], class_count: usize) -> Result<Self> {
        let n_s = source_labels.len();
        let mut source = vec![Vec::new(); class_count];
        let mut target = vec![Vec::new(); class_count];
        for (i, &l) in source_labels.iter().enumerate() {
            check_label(l, class_count)?;
            source[l - 1].push(i);
        }
        for (j, &l) in target_labels.iter().enumerate() {
            check_label(l, class_count)?;
            target[l - 1].push(n_s + j);
        }
        Ok(ClassGroups { source, target })
    }
}

fn check_label(l: usize, class_count: usize) -> Result<()> {
    if l == 0 || l > class_count {
        return Err(DaError::data(format!("label {l} outside 1..={class_count}")));
    }
    Ok(())
}

/// Marginal MMD matrix: `1/n_s²` on source pairs, `1/n_t²` on target pairs,
/// `−1/(n_s n_t)` across.
pub fn build_m0(n_s: usize, n_t: usize) -> Result<DMatrix<f64>> {
    if n_s == 0 || n_t == 0 {
        return Err(DaError::config(format!(
            "marginal MMD needs non-empty domains, got n_s = {n_s}, n_t = {n_t}"
        )));
    }
    let n = n_s + n_t;
    let mut m = DMatrix::zeros(n, n);
    let s: Vec<usize> = (0..n_s).collect();
    let t: Vec<usize> = (n_s..n).collect();
    add_pair_term(&mut m, &s, &t, 1.0);
    Ok(m)
}

/// Conditional MMD matrix of class `c`. Returns the zero matrix and `true`
/// when the target pseudo-class `c` is empty.
pub fn build_mc(source_labels: &[usize], target_labels: &[usize], c: usize) -> Result<(DMatrix<f64>, bool)> {
    let class_count = source_labels
        .iter()
        .chain(target_labels)
        .copied()
        .max()
        .unwrap_or(0)
        .max(c);
    let groups = ClassGroups::new(source_labels, target_labels, class_count)?;
    let n = source_labels.len() + target_labels.len();
    let mut m = DMatrix::zeros(n, n);
    let (s, t) = (&groups.source[c - 1], &groups.target[c - 1]);
    if s.is_empty() {
        return Err(DaError::data(format!("class {c} has no source sample")));
    }
    if t.is_empty() {
        return Ok((m, true));
    }
    add_pair_term(&mut m, s, t, 1.0);
    Ok((m, false))
}

/// The three repulsive matrices `(M_{S→T}, M_{T→S}, M_{S→S})`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepulsiveMatrices {
    pub s2t: DMatrix<f64>,
    pub t2s: DMatrix<f64>,
    pub s2s: DMatrix<f64>,
}

impl RepulsiveMatrices {
    pub fn total(&self) -> DMatrix<f64> {
        &self.s2t + &self.t2s + &self.s2s
    }
}

/// Sums of the cross-class terms over ordered pairs `(c, r ≠ c)`; pairs that
/// touch an empty sub-domain contribute nothing.
pub fn build_repulsive(source_labels: &[usize], target_labels: &[usize], class_count: usize) -> Result<RepulsiveMatrices> {
    let n = source_labels.len() + target_labels.len();
    let mut s2t = DMatrix::zeros(n, n);
    let mut t2s = DMatrix::zeros(n, n);
    let mut s2s = DMatrix::zeros(n, n);
    for term in elementary_terms(source_labels, target_labels, class_count)? {
        let target = match term.kind {
            TermKind::SourceToTarget { .. } => &mut s2t,
            TermKind::TargetToSource { .. } => &mut t2s,
            TermKind::SourceToSource { .. } => &mut s2s,
            _ => continue,
        };
        add_pair_term(target, &term.group_a, &term.group_b, 1.0);
    }
    Ok(RepulsiveMatrices { s2t, t2s, s2s })
}

/// Every non-degenerate elementary term for the given labelling, in a fixed
/// order: marginal, conditional by class, then `S→T`, `T→S`, `S→S` by
/// ordered class pair.
pub fn elementary_terms(source_labels: &[usize], target_labels: &[usize], class_count: usize) -> Result<Vec<ElementaryTerm>> {
    let groups = ClassGroups::new(source_labels, target_labels, class_count)?;
    let n_s = source_labels.len();
    let n = n_s + target_labels.len();
    let mut terms = vec![ElementaryTerm {
        kind: TermKind::Marginal,
        group_a: (0..n_s).collect(),
        group_b: (n_s..n).collect(),
    }];
    let pair = |kind, a: &Vec<usize>, b: &Vec<usize>| -> Option<ElementaryTerm> {
        (!a.is_empty() && !b.is_empty()).then(|| ElementaryTerm {
            kind,
            group_a: a.clone(),
            group_b: b.clone(),
        })
    };
    for c in 0..class_count {
        terms.extend(pair(TermKind::Conditional { class: c + 1 }, &groups.source[c], &groups.target[c]));
    }
    for c in 0..class_count {
        for r in (0..class_count).filter(|&r| r != c) {
            terms.extend(pair(
                TermKind::SourceToTarget { source_class: c + 1, target_class: r + 1 },
                &groups.source[c],
                &groups.target[r],
            ));
        }
    }
    for c in 0..class_count {
        for r in (0..class_count).filter(|&r| r != c) {
            terms.extend(pair(
                TermKind::TargetToSource { target_class: c + 1, source_class: r + 1 },
                &groups.target[c],
                &groups.source[r],
            ));
        }
    }
    for c in 0..class_count {
        for r in (0..class_count).filter(|&r| r != c) {
            terms.extend(pair(
                TermKind::SourceToSource { class: c + 1, other: r + 1 },
                &groups.source[c],
                &groups.source[r],
            ));
        }
    }
    Ok(terms)
}

/// All MMD matrices for one labelling, combined for a variant.
#[derive(Debug, Clone)]
pub struct MmdAssembly {
    pub m0: DMatrix<f64>,
    pub mc_sum: DMatrix<f64>,
    pub repulsive: RepulsiveMatrices,
    /// `M_{S→T} + M_{T→S} + M_{S→S}`.
    pub m_rep: DMatrix<f64>,
    pub m_star: DMatrix<f64>,
    /// Classes whose target pseudo-class was empty.
    pub skipped_classes: BTreeSet<usize>,
}

impl MmdAssembly {
    /// Builds every component. `target_labels = None` means no pseudo-labels
    /// exist yet: only the marginal term is available.
    pub fn build(source_labels: &[usize], target_labels: Option<&[usize]>, n_t: usize, class_count: usize, variant: Variant) -> Result<Self> {
        let n_s = source_labels.len();
        let n = n_s + n_t;
        let m0 = build_m0(n_s, n_t)?;
        let mut mc_sum = DMatrix::zeros(n, n);
        let mut skipped_classes = BTreeSet::new();
        let repulsive = match target_labels {
            Some(t) => {
                if t.len() != n_t {
                    return Err(DaError::data(format!("{} pseudo-labels for {n_t} target samples", t.len())));
                }
                let groups = ClassGroups::new(source_labels, t, class_count)?;
                for c in 0..class_count {
                    if groups.target[c].is_empty() {
                        skipped_classes.insert(c + 1);
                    } else if !groups.source[c].is_empty() {
                        add_pair_term(&mut mc_sum, &groups.source[c], &groups.target[c], 1.0);
                    }
                }
                build_repulsive(source_labels, t, class_count)?
            }
            None => RepulsiveMatrices {
                s2t: DMatrix::zeros(n, n),
                t2s: DMatrix::zeros(n, n),
                s2s: DMatrix::zeros(n, n),
            },
        };
        let m_rep = repulsive.total();
        let mut asm = MmdAssembly {
            m0,
            mc_sum,
            repulsive,
            m_rep,
            m_star: DMatrix::zeros(n, n),
            skipped_classes,
        };
        asm.m_star = assemble_m_star(&asm, variant)?;
        Ok(asm)
    }
}

/// `M* = M0 + ΣMc − M_REP` for the repulsive variants, `M0 + ΣMc` for the
/// plain alignment variants, zero for label regression alone.
pub fn assemble_m_star(components: &MmdAssembly, variant: Variant) -> Result<DMatrix<f64>> {
    let n = components.m0.nrows();
    for (name, m) in [("mc_sum", &components.mc_sum), ("m_rep", &components.m_rep)] {
        if m.shape() != (n, n) {
            return Err(DaError::numerical(format!(
                "{name} is {:?}, expected {n}x{n}",
                m.shape()
            )));
        }
    }
    Ok(match variant {
        Variant::Olr => DMatrix::zeros(n, n),
        Variant::Jda | Variant::JolrDa => &components.m0 + &components.mc_sum,
        Variant::CddaPlus | Variant::DollDa => &components.m0 + &components.mc_sum - &components.m_rep,
    })
}

/// `‖mean(AᵀX[:, a]) − mean(AᵀX[:, b])‖²`, computed directly.
pub fn direct_mmd_oracle(x: &DMatrix<f64>, a: &DMatrix<f64>, group_a: &[usize], group_b: &[usize]) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(DaError::data("MMD groups must be non-empty"));
    }
    let k = a.ncols();
    let mean = |g: &[usize]| {
        let mut acc = nalgebra::DVector::zeros(k);
        for &i in g {
            acc += a.tr_mul(&x.column(i));
        }
        acc / g.len() as f64
    };
    Ok((mean(group_a) - mean(group_b)).norm_squared())
}

/// `tr(Aᵀ X M Xᵀ A)`.
pub fn trace_form(x: &DMatrix<f64>, m: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let z = a.tr_mul(x);
    (&z * m).component_mul(&z).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Second, naive oracle: double loop over the raw samples.
    fn double_loop_mmd(x: &DMatrix<f64>, a: &DMatrix<f64>, ga: &[usize], gb: &[usize]) -> f64 {
        let mut total = 0.0;
        for r in 0..a.ncols() {
            let mut ma = 0.0;
            for &i in ga {
                for f in 0..x.nrows() {
                    ma += a[(f, r)] * x[(f, i)];
                }
            }
            let mut mb = 0.0;
            for &i in gb {
                for f in 0..x.nrows() {
                    mb += a[(f, r)] * x[(f, i)];
                }
            }
            let d = ma / ga.len() as f64 - mb / gb.len() as f64;
            total += d * d;
        }
        total
    }

    #[test]
    fn m0_single_pair() {
        let m = build_m0(1, 1).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn m0_two_by_two_blocks() {
        let m = build_m0(2, 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i < 2) == (j < 2) { 0.25 } else { -0.25 };
                assert_eq!(m[(i, j)], expected);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(&mut rng, 3, 4);
        let a = random(&mut rng, 3, 2);
        let direct = direct_mmd_oracle(&x, &a, &[0, 1], &[2, 3]).unwrap();
        assert!((trace_form(&x, &m, &a) - direct).abs() < 1e-12);
    }

    #[test]
    fn m0_entries_sum_to_zero() {
        for (ns, nt) in [(1, 5), (7, 3), (10, 10)] {
            assert!(build_m0(ns, nt).unwrap().sum().abs() < 1e-12);
        }
        assert!(build_m0(0, 3).is_err());
    }

    #[test]
    fn mc_single_pair_and_empty_class() {
        let (m, skipped) = build_mc(&[1], &[1], 1).unwrap();
        assert!(!skipped);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let (m, skipped) = build_mc(&[1, 2], &[1, 1], 2).unwrap();
        assert!(skipped);
        assert!(m.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mc_trace_identity_on_random_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let src = [1, 2, 1, 2, 2];
        let tgt = [2, 1, 1, 2, 1];
        let x = random(&mut rng, 4, 10);
        let a = random(&mut rng, 4, 3);
        let (m, _) = build_mc(&src, &tgt, 1).unwrap();
        let direct = direct_mmd_oracle(&x, &a, &[0, 2], &[6, 7, 9]).unwrap();
        assert!((trace_form(&x, &m, &a) - direct).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn repulsive_single_class_is_zero() {
        let r = build_repulsive(&[1, 1], &[1], 1).unwrap();
        assert!(r.total().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn repulsive_two_class_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(&mut rng, 3, 4);
        let a = random(&mut rng, 3, 2);
        // source: idx0 class1, idx1 class2; target: idx2 class1, idx3 class2
        let r = build_repulsive(&[1, 2], &[1, 2], 2).unwrap();
        let expected = direct_mmd_oracle(&x, &a, &[0], &[3]).unwrap() + direct_mmd_oracle(&x, &a, &[1], &[2]).unwrap();
        assert!((trace_form(&x, &r.s2t, &a) - expected).abs() < 1e-12);
    }

    #[test]
    fn source_repulsion_touches_only_source() {
        let r = build_repulsive(&[1, 2, 3, 1], &[2, 3, 1], 3).unwrap();
        for i in 0..4 {
            for j in 4..7 {
                assert_eq!(r.s2s[(i, j)], 0.0);
                assert_eq!(r.s2s[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn m_star_by_variant() {
        let asm = MmdAssembly::build(&[1, 2], None, 3, 2, Variant::Jda).unwrap();
        assert_eq!(asm.m_star, asm.m0);
        let olr = assemble_m_star(&asm, Variant::Olr).unwrap();
        assert_eq!(olr.shape(), (5, 5));
        assert!(olr.iter().all(|&v| v == 0.0));
        let full = MmdAssembly::build(&[1, 2, 2], Some(&[2, 2, 1]), 3, 2, Variant::DollDa).unwrap();
        assert_eq!(full.m_star, full.m_star.transpose());
        assert_eq!(full.m_star, &full.m0 + &full.mc_sum - &full.m_rep);
    }

    #[test]
    fn empty_pseudo_class_is_recorded_and_finite() {
        let asm = MmdAssembly::build(&[1, 2, 3], Some(&[1, 1]), 2, 3, Variant::DollDa).unwrap();
        assert_eq!(asm.skipped_classes.iter().copied().collect::<Vec<_>>(), vec![2, 3]);
        assert!(asm.m_star.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn oracle_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random(&mut rng, 3, 10);
        let a = random(&mut rng, 3, 2);
        assert_eq!(direct_mmd_oracle(&x, &a, &[4], &[4]).unwrap(), 0.0);
        assert!(direct_mmd_oracle(&x, &a, &[], &[1]).is_err());
        let mut sym = x.clone();
        sym.set_column(1, &x.column(0));
        assert!(direct_mmd_oracle(&sym, &a, &[0], &[1]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn oracle_agrees_with_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random(&mut rng, 5, 10);
            let a = random(&mut rng, 5, 3);
            let ga = [0, 3, 4, 8];
            let gb = [1, 2, 9];
            let o = direct_mmd_oracle(&x, &a, &ga, &gb).unwrap();
            let d = double_loop_mmd(&x, &a, &ga, &gb);
            assert!((o - d).abs() <= 1e-12 * d.max(1.0));
            let term = ElementaryTerm { kind: TermKind::Marginal, group_a: ga.to_vec(), group_b: gb.to_vec() };
            assert!((trace_form(&x, &term.matrix(10), &a) - d).abs() <= 1e-10 * d.max(1.0));
        }
    }

    #[test]
    fn builders_are_bitwise_deterministic() {
        let a = MmdAssembly::build(&[1, 2, 3, 1], Some(&[3, 2, 1]), 3, 3, Variant::DollDa).unwrap();
        let b = MmdAssembly::build(&[1, 2, 3, 1], Some(&[3, 2, 1]), 3, 3, Variant::DollDa).unwrap();
        let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.m_star), bits(&b.m_star));
    }
}
