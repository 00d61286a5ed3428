//! Writes a few synthetic tasks to disk, describes them in a manifest, and
//! runs the manifest in parallel.
//!
//! ```text
//! cargo run --release --example benchmark_manifest -- [out_dir]
//! ```

use std::fs;
use std::path::PathBuf;

use dollda::data::{save_labels, save_matrix, MatrixFormat};
use dollda::eval::{make_synthetic, run_suite, summary_csv, TaskSpec};
use dollda::{SolverConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("dollda_benchmark"));
    fs::create_dir_all(&out)?;

    let mut manifest = Vec::new();
    for seed in 0..3 {
        let task = make_synthetic(seed, 40, 3, 20, 30.0, 0.6)?;
        let dir = format!("task{seed}");
        fs::create_dir_all(out.join(&dir))?;
        save_matrix(&task.dataset.source_x(), out.join(&dir).join("xs.fbin"), MatrixFormat::Fbin)?;
        save_matrix(&task.dataset.target_x(), out.join(&dir).join("xt.fbin"), MatrixFormat::Fbin)?;
        save_labels(task.dataset.source_labels(), out.join(&dir).join("ys.txt"))?;
        save_labels(&task.target_truth, out.join(&dir).join("yt.txt"))?;
        for v in Variant::ALL {
            manifest.push(TaskSpec {
                name: format!("seed{seed}"),
                source_features: format!("{dir}/xs.fbin").into(),
                source_labels: format!("{dir}/ys.txt").into(),
                target_features: format!("{dir}/xt.fbin").into(),
                target_truth_labels: Some(format!("{dir}/yt.txt").into()),
                config: SolverConfig { k: 8, ..SolverConfig::default() }.with_variant(v),
            });
        }
    }
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;

    let report = run_suite(&path, 4)?;
    print!("{}", summary_csv(&report));
    println!("manifest: {}", path.display());
    Ok(())
}
