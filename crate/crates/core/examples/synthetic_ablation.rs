//! Runs the five variants on rotated-Gaussian tasks and prints mean target
//! accuracy per variant next to the plain 1-NN baseline.
//!
//! ```text
//! cargo run --release --example synthetic_ablation -- [seeds] [noise] [k]
//! ```

use dollda::eval::{accuracy, make_synthetic, nn_classify};
use dollda::{fit, SolverConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let noise: f64 = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(0.6);
    let k: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(8);

    let mut totals = [0.0; Variant::ALL.len()];
    let mut baseline = 0.0;
    for seed in 0..seeds {
        let task = make_synthetic(seed, 50, 3, 20, 30.0, noise)?;
        let d = &task.dataset;
        let nn = nn_classify(d.source_x().as_matrix(), d.source_labels(), d.target_x().as_matrix())?;
        baseline += accuracy(&nn, &task.target_truth)?;
        let mut line = format!("seed {seed:2}  nn {:.3}", accuracy(&nn, &task.target_truth)?);
        for (i, v) in Variant::ALL.iter().enumerate() {
            let config = SolverConfig { k, seed, ..SolverConfig::default() }.with_variant(*v);
            let result = fit(d, &config)?;
            let acc = accuracy(&result.target_labels, &task.target_truth)?;
            totals[i] += acc;
            line += &format!("  {v} {acc:.3} ({})", result.iterations_run);
        }
        println!("{line}");
    }
    println!("mean 1-NN baseline: {:.4}", baseline / seeds as f64);
    for (i, v) in Variant::ALL.iter().enumerate() {
        println!("mean {v:<10} {:.4}", totals[i] / seeds as f64);
    }
    Ok(())
}
