use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{SolverConfig, Variant};
use crate::data::{load_labels, load_matrix_auto, DaDataset};
use crate::error::{DaError, Result};
use crate::eval::{run_task, TaskReport};

/// One manifest entry. Relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    pub source_features: PathBuf,
    pub source_labels: PathBuf,
    pub target_features: PathBuf,
    #[serde(default)]
    pub target_truth_labels: Option<PathBuf>,
    #[serde(default)]
    pub config: SolverConfig,
}

pub type Manifest = Vec<TaskSpec>;

/// Per-variant mean over the tasks that produced an accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantMean {
    pub variant: Variant,
    pub mean_accuracy: f64,
    pub tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    /// In manifest order.
    pub reports: Vec<TaskReport>,
    pub summary: Vec<VariantMean>,
}

impl SuiteReport {
    pub fn from_reports(reports: Vec<TaskReport>) -> Self {
        let mut acc: BTreeMap<&'static str, (Variant, f64, usize)> = BTreeMap::new();
        for r in &reports {
            if let Some(a) = r.accuracy {
                let entry = acc.entry(r.variant.name()).or_insert((r.variant, 0.0, 0));
                entry.1 += a;
                entry.2 += 1;
            }
        }
        let summary = Variant::ALL
            .iter()
            .filter_map(|v| acc.get(v.name()))
            .map(|&(variant, sum, tasks)| VariantMean {
                variant,
                mean_accuracy: sum / tasks as f64,
                tasks,
            })
            .collect();
        SuiteReport { reports, summary }
    }

    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.succeeded()).count()
    }
}

/// Reads a manifest. A missing or malformed manifest is a configuration
/// error.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DaError::config(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| DaError::config(format!("invalid manifest {}: {e}", path.display())))
}

fn load_task(spec: &TaskSpec, base: &Path) -> Result<(DaDataset, Option<Vec<usize>>)> {
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let xs = load_matrix_auto(resolve(&spec.source_features))?;
    let ys = load_labels(resolve(&spec.source_labels))?;
    let xt = load_matrix_auto(resolve(&spec.target_features))?;
    let truth = spec.target_truth_labels.as_deref().map(|p| load_labels(resolve(p))).transpose()?;
    Ok((DaDataset::from_domains(&xs, &xt, ys)?, truth))
}

fn failed_report(spec: &TaskSpec, err: DaError) -> TaskReport {
    TaskReport {
        task_name: spec.name.clone(),
        variant: spec.config.variant,
        accuracy: None,
        per_iteration_accuracy: Vec::new(),
        objective_trace: Vec::new(),
        iterations_run: 0,
        wall_time_seconds: 0.0,
        config_echo: spec.config.clone(),
        seed: spec.config.seed,
        dataset_hash: String::new(),
        error: Some(err.to_string()),
    }
}

/// Runs every task of `manifest`, `jobs` at a time. Per-task failures are
/// recorded in the reports; the suite keeps going.
pub fn run_manifest(manifest: &Manifest, base: &Path, jobs: usize) -> Result<SuiteReport> {
    let run_one = |spec: &TaskSpec| match load_task(spec, base) {
        Ok((dataset, truth)) => run_task(&spec.name, &dataset, &spec.config, truth.as_deref()),
        Err(e) => failed_report(spec, e),
    };
    let reports = if jobs <= 1 {
        manifest.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| DaError::config(format!("cannot start {jobs} worker threads: {e}")))?;
        pool.install(|| manifest.par_iter().map(run_one).collect())
    };
    Ok(SuiteReport::from_reports(reports))
}

/// [`run_manifest`] on the manifest at `manifest_path`.
pub fn run_suite(manifest_path: impl AsRef<Path>, jobs: usize) -> Result<SuiteReport> {
    let path = manifest_path.as_ref();
    let manifest = load_manifest(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_manifest(&manifest, &base, jobs)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `task,variant,accuracy` rows, then one `mean,<variant>,<mean>` row per
/// variant. Failed tasks have an empty accuracy.
pub fn summary_csv(report: &SuiteReport) -> String {
    let mut out = String::from("task,variant,accuracy\n");
    for r in &report.reports {
        let acc = r.accuracy.map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", csv_field(&r.task_name), r.variant, acc);
    }
    for m in &report.summary {
        let _ = writeln!(out, "mean,{},{}", m.variant, m.mean_accuracy);
    }
    out
}

pub fn write_summary_csv(report: &SuiteReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, summary_csv(report)).map_err(|e| DaError::io(path, e))
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes `<index>_<task>_convergence.csv` (`iteration,accuracy,objective`)
/// per task into `dir` and returns the paths.
pub fn write_convergence_csv(report: &SuiteReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| DaError::io(dir, e))?;
    let mut paths = Vec::new();
    for (i, r) in report.reports.iter().enumerate() {
        let mut out = String::from("iteration,accuracy,objective\n");
        for t in 0..r.iterations_run {
            let acc = r.per_iteration_accuracy.get(t).map(|a| a.to_string()).unwrap_or_default();
            let obj = r.objective_trace.get(t).map(|f| f.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{acc},{obj}", t + 1);
        }
        let path = dir.join(format!("{:03}_{}_convergence.csv", i + 1, file_stem(&r.task_name)));
        fs::write(&path, out).map_err(|e| DaError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
