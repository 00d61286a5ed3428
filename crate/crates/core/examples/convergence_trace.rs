//! Prints the per-iteration target accuracy and objective of one fit, with
//! early stopping disabled.

use dollda::eval::{make_synthetic, run_task};
use dollda::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let task = make_synthetic(2, 50, 3, 20, 30.0, 0.6)?;
    let config = SolverConfig { k: 8, early_stop: false, ..SolverConfig::default() };
    let report = run_task("synthetic", &task.dataset, &config, Some(&task.target_truth));
    if let Some(err) = &report.error {
        return Err(err.clone().into());
    }
    println!("iteration,accuracy,objective");
    for (t, (acc, f)) in report.per_iteration_accuracy.iter().zip(&report.objective_trace).enumerate() {
        println!("{},{acc:.4},{f:.6}", t + 1);
    }
    Ok(())
}
