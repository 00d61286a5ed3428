//! The `dollda` command line: `fit`, `predict`, `benchmark` and `synth`.
//!
//! Exit codes: 0 success, 1 every benchmark task failed, 2 configuration or
//! usage error, 3 data or I/O error, 4 numerical error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{InitLabels, KernelSpec, SolverConfig, Variant};
use crate::data::{load_labels, load_matrix_auto, save_labels, save_matrix, DaDataset, MatrixFormat, Normalization};
use crate::error::{DaError, Result};
use crate::eval::{accuracy, make_synthetic, run_suite, summary_csv, write_convergence_csv, SuiteReport};
use crate::pipeline::{fit, FitResult};

#[derive(Debug, Parser)]
#[command(name = "dollda", version, about = "Unsupervised domain adaptation by discriminative label-consistent regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit on labelled source and unlabelled target samples.
    Fit(FitArgs),
    /// Label new samples with a saved model.
    Predict(PredictArgs),
    /// Run every task of a JSON manifest.
    Benchmark(BenchmarkArgs),
    /// Write a rotated-Gaussian synthetic task.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    None,
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormalizeArg {
    None,
    Zscore,
    ZscoreUnit,
}

impl From<NormalizeArg> for Normalization {
    fn from(v: NormalizeArg) -> Self {
        match v {
            NormalizeArg::None => Normalization::None,
            NormalizeArg::Zscore => Normalization::Zscore,
            NormalizeArg::ZscoreUnit => Normalization::ZscoreUnit,
        }
    }
}

fn parse_init_labels(s: &str) -> std::result::Result<InitLabels, String> {
    match s {
        "nn" => Ok(InitLabels::NearestNeighbor),
        _ => match s.strip_prefix("random:") {
            Some(seed) => seed
                .parse()
                .map(|seed| InitLabels::Random { seed })
                .map_err(|_| format!("invalid seed in {s:?}")),
            None => Err(format!("expected `nn` or `random:SEED`, got {s:?}")),
        },
    }
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: DaError| e.to_string())
}

/// Solver flags; each one overrides the `--config` file.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// JSON file with `SolverConfig` fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Outer iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// RBF bandwidth; the median pairwise distance when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// `nn` or `random:SEED`.
    #[arg(long, value_parser = parse_init_labels)]
    pub init_labels: Option<InitLabels>,
    #[arg(long, value_enum)]
    pub normalize: Option<NormalizeArg>,
}

impl SolverArgs {
    pub fn resolve(&self) -> Result<SolverConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| DaError::config(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| DaError::config(format!("invalid config {}: {e}", path.display())))?
            }
            None => SolverConfig::default(),
        };
        if let Some(v) = self.variant {
            config.variant = v;
        }
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(a) = self.alpha {
            config.alpha = a;
        }
        if let Some(b) = self.beta {
            config.beta = b;
        }
        if let Some(t) = self.iters {
            config.outer_iters = t;
        }
        if let Some(init) = self.init_labels {
            config.init_labels = init;
        }
        if let Some(n) = self.normalize {
            config.normalize = n.into();
        }
        match (self.kernel, self.bandwidth) {
            (Some(KernelArg::None), None) => config.kernel = KernelSpec::None,
            (Some(KernelArg::Linear), None) => config.kernel = KernelSpec::Linear,
            (Some(KernelArg::Rbf), bandwidth) => config.kernel = KernelSpec::Rbf { bandwidth },
            (None, Some(b)) if matches!(config.kernel, KernelSpec::Rbf { .. }) => {
                config.kernel = KernelSpec::Rbf { bandwidth: Some(b) }
            }
            (_, Some(_)) => return Err(DaError::config("--bandwidth only applies to the rbf kernel")),
            (None, None) => {}
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub source_x: PathBuf,
    #[arg(long)]
    pub source_y: PathBuf,
    #[arg(long)]
    pub target_x: PathBuf,
    /// Target truth labels, read only after fitting to report accuracy.
    #[arg(long)]
    pub truth_y: Option<PathBuf>,
    /// Output directory for the fit result.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub target_x: PathBuf,
    #[arg(long)]
    pub truth_y: Option<PathBuf>,
    /// Label file to write; labels go to standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// JSON manifest of tasks.
    pub manifest: PathBuf,
    /// Output directory for the reports.
    #[arg(long)]
    pub out: PathBuf,
    /// Tasks run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write per-iteration accuracy CSVs.
    #[arg(long)]
    pub emit_convergence: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Fbin,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub per_class: usize,
    /// Target rotation in degrees.
    #[arg(long, default_value_t = 30.0)]
    pub rotation: f64,
    #[arg(long, default_value_t = 0.6)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| DaError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| DaError::io(path, e))
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let config = args.solver.resolve()?;
    let xs = load_matrix_auto(&args.source_x)?;
    let ys = load_labels(&args.source_y)?;
    let xt = load_matrix_auto(&args.target_x)?;
    let dataset = DaDataset::from_domains(&xs, &xt, ys)?;
    let result = fit(&dataset, &config)?;
    result.save(&args.out)?;
    save_labels(&result.target_labels, args.out.join("target_labels.txt"))?;
    println!(
        "variant {} iterations {} final objective {}",
        result.variant,
        result.iterations_run,
        result.objective_trace.last().copied().unwrap_or(f64::NAN)
    );
    if let Some(path) = &args.truth_y {
        let truth = load_labels(path)?;
        println!("target accuracy {:.4}", accuracy(&result.target_labels, &truth)?);
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let model = FitResult::load(&args.model)?;
    let x = load_matrix_auto(&args.target_x)?;
    let labels = model.predict(&x)?;
    match &args.out {
        Some(path) => save_labels(&labels, path)?,
        None => {
            for l in &labels {
                println!("{l}");
            }
        }
    }
    if let Some(path) = &args.truth_y {
        let truth = load_labels(path)?;
        eprintln!("accuracy {:.4}", accuracy(&labels, &truth)?);
    }
    Ok(())
}

fn print_summary(report: &SuiteReport) {
    println!("{:<32} {:<10} {:>9}", "task", "variant", "accuracy");
    for r in &report.reports {
        let acc = match (r.accuracy, &r.error) {
            (Some(a), _) => format!("{a:.4}"),
            (None, Some(_)) => "FAILED".into(),
            (None, None) => "-".into(),
        };
        println!("{:<32} {:<10} {:>9}", r.task_name, r.variant.name(), acc);
    }
    for m in &report.summary {
        println!("{:<32} {:<10} {:>9.4}", format!("mean ({} tasks)", m.tasks), m.variant.name(), m.mean_accuracy);
    }
}

/// Returns whether at least one task succeeded (or there were none).
fn cmd_benchmark(args: &BenchmarkArgs) -> Result<bool> {
    if args.jobs == 0 {
        return Err(DaError::config("--jobs must be at least 1"));
    }
    let report = run_suite(&args.manifest, args.jobs)?;
    create_dir(&args.out)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| DaError::numerical(format!("cannot serialize report: {e}")))?;
    write_text(&args.out.join("report.json"), &json)?;
    write_text(&args.out.join("summary.csv"), &summary_csv(&report))?;
    if args.emit_convergence {
        write_convergence_csv(&report, args.out.join("convergence"))?;
    }
    print_summary(&report);
    for r in report.reports.iter().filter(|r| !r.succeeded()) {
        eprintln!("task {} failed: {}", r.task_name, r.error.as_deref().unwrap_or(""));
    }
    Ok(report.reports.is_empty() || report.failures() < report.reports.len())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let task = make_synthetic(args.seed, args.per_class, args.classes, args.dim, args.rotation, args.noise)?;
    create_dir(&args.out)?;
    let (format, ext) = match args.format {
        FormatArg::Csv => (MatrixFormat::Csv, "csv"),
        FormatArg::Fbin => (MatrixFormat::Fbin, "fbin"),
    };
    let d = &task.dataset;
    save_matrix(&d.source_x(), args.out.join(format!("source_x.{ext}")), format)?;
    save_matrix(&d.target_x(), args.out.join(format!("target_x.{ext}")), format)?;
    save_labels(d.source_labels(), args.out.join("source_y.txt"))?;
    save_labels(&task.target_truth, args.out.join("target_truth.txt"))?;
    println!("wrote {} source and {} target samples to {}", d.n_source(), d.n_target(), args.out.display());
    Ok(())
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Fit(a) => cmd_fit(a).map(|_| 0),
        Command::Predict(a) => cmd_predict(a).map(|_| 0),
        Command::Benchmark(a) => cmd_benchmark(a).map(|any_ok| if any_ok { 0 } else { 1 }),
        Command::Synth(a) => cmd_synth(a).map(|_| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}
