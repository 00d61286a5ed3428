//! Compares nearest-neighbour and random initial pseudo-labels.

use dollda::eval::{accuracy, make_synthetic};
use dollda::{fit, InitLabels, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for seed in 0..5 {
        let task = make_synthetic(seed, 50, 3, 20, 30.0, 0.6)?;
        let nn = SolverConfig { k: 8, ..SolverConfig::default() };
        let random = SolverConfig { init_labels: InitLabels::Random { seed: 100 + seed }, ..nn.clone() };
        let a = fit(&task.dataset, &nn)?;
        let b = fit(&task.dataset, &random)?;
        println!(
            "seed {seed}: nn init {:.3} ({} iterations), random init {:.3} ({} iterations)",
            accuracy(&a.target_labels, &task.target_truth)?,
            a.iterations_run,
            accuracy(&b.target_labels, &task.target_truth)?,
            b.iterations_run
        );
    }
    Ok(())
}
