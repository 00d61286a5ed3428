//! Builds the MMD matrices for a small labelled problem and checks each
//! quadratic form against the squared distance of projected group means.

use dollda::mmd::{direct_mmd_oracle, elementary_terms, trace_form, MmdAssembly, TermKind};
use dollda::Variant;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = [1, 1, 2, 2, 3];
    let target = [1, 2, 2, 3];
    let n = source.len() + target.len();
    let x = DMatrix::from_fn(3, n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
    let a = DMatrix::from_fn(3, 2, |i, j| if i == j { 1.0 } else { 0.5 });

    for term in elementary_terms(&source, &target, 3)? {
        let quad = trace_form(&x, &term.matrix(n), &a);
        let direct = direct_mmd_oracle(&x, &a, &term.group_a, &term.group_b)?;
        let label = match term.kind {
            TermKind::Marginal => "marginal".to_string(),
            TermKind::Conditional { class } => format!("class {class}"),
            TermKind::SourceToTarget { source_class, target_class } => format!("S{source_class} -> T{target_class}"),
            TermKind::TargetToSource { target_class, source_class } => format!("T{target_class} -> S{source_class}"),
            TermKind::SourceToSource { class, other } => format!("S{class} -> S{other}"),
        };
        println!("{label:<12} trace {quad:>9.5}  means {direct:>9.5}");
    }

    for v in Variant::ALL {
        let asm = MmdAssembly::build(&source, Some(&target), target.len(), 3, v)?;
        println!("{v:<10} tr(AᵀXM*XᵀA) = {:.5}", trace_form(&x, &asm.m_star, &a));
    }
    Ok(())
}
