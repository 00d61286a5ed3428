//! Linear versus RBF-kernel DOLL_DA on rotated two-moons, which no linear
//! projection separates.
//!
//! ```text
//! cargo run --release --example kernel_two_moons -- [rotation_degrees] [k]
//! ```

use dollda::eval::{accuracy, make_two_moons};
use dollda::{fit, fit_kernel, KernelSpec, Normalization, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let rotation: f64 = args.first().map(|s| s.parse()).transpose()?.unwrap_or(20.0);
    let k: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(10);

    for seed in 0..5 {
        let task = make_two_moons(seed, 75, rotation, 0.1)?;
        let base = SolverConfig {
            k: 2,
            normalize: Normalization::Zscore,
            ..SolverConfig::default()
        };
        let linear = fit(&task.dataset, &base)?;
        let rbf_config = SolverConfig {
            k,
            kernel: KernelSpec::Rbf { bandwidth: None },
            ..base
        };
        let rbf = fit_kernel(&task.dataset, &rbf_config)?;
        println!(
            "seed {seed}: linear {:.3}  rbf {:.3} ({} iterations)",
            accuracy(&linear.target_labels, &task.target_truth)?,
            accuracy(&rbf.target_labels, &task.target_truth)?,
            rbf.iterations_run
        );
    }
    Ok(())
}
