//! Command-line entry points: `fit`, `sweep`, `ablate`, `synth`, `select`,
//! and `evaluate`, driven by a JSON run configuration with flag overrides.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure (the
//! message carries the outer iteration), 4 missing ground-truth labels.
//! Outputs are byte-reproducible for a fixed config and seed; wall-clock
//! timing and timestamps go to `meta.json`, which is excluded from that
//! guarantee.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{load_multiview, save_multiview, synth_generate, SynthSpec};
use crate::error::{Result, ShineError};
use crate::eval::{default_ratios, evaluate_selection, random_baseline, restart_seed, sweep};
use crate::io::{
    export_graphs, export_state, read_json, write_ablate_csv, write_json, write_sweep_csv,
    write_trace_csv, FitSummary, ReportRow,
};
use crate::model::{FeatureRef, HyperParams, MultiViewDataset};
use crate::optim::{fit, FitResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NO_LABELS: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    None,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmitKind {
    Trace,
    Graphs,
    State,
}

/// JSON run configuration. Hyperparameter keys mirror [`HyperParams`]
/// field for field; exactly one of `manifest` / `synth` must be present.
/// Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub manifest: Option<PathBuf>,
    pub synth: Option<SynthSpec>,

    pub gamma: f64,
    pub beta: f64,
    pub eta: f64,
    pub k: usize,
    pub m: usize,
    pub c: usize,
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub rel_tol: f64,
    pub gpi_max_iters: usize,
    pub gpi_tol: f64,
    pub seed: u64,
    pub disable_second_order: bool,
    pub standardize: bool,

    pub ratios: Vec<f64>,
    pub restarts: usize,
    pub baseline: Baseline,
    /// Random subsets averaged into the baseline rows.
    pub baseline_draws: usize,
    /// Paired seeds used by the ablation command.
    pub ablate_seeds: usize,
    /// Selection ratio evaluated by the ablation command.
    pub ablate_ratio: f64,
    pub emit: Vec<EmitKind>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hp = HyperParams::default();
        RunConfig {
            name: String::new(),
            manifest: None,
            synth: None,
            gamma: hp.gamma,
            beta: hp.beta,
            eta: hp.eta,
            k: hp.k,
            m: hp.m,
            c: hp.c,
            epsilon: hp.epsilon,
            max_outer_iters: hp.max_outer_iters,
            rel_tol: hp.rel_tol,
            gpi_max_iters: hp.gpi_max_iters,
            gpi_tol: hp.gpi_tol,
            seed: hp.seed,
            disable_second_order: hp.disable_second_order,
            standardize: hp.standardize,
            ratios: default_ratios(),
            restarts: 30,
            baseline: Baseline::None,
            baseline_draws: 10,
            ablate_seeds: 10,
            ablate_ratio: 0.2,
            emit: vec![EmitKind::Trace],
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: RunConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(m) = &config.manifest {
            if m.is_relative() {
                config.manifest = Some(base.join(m));
            }
        }
        if config.out.is_relative() {
            config.out = base.join(&config.out);
        }
        Ok(config)
    }

    pub fn hyperparams(&self) -> HyperParams {
        HyperParams {
            gamma: self.gamma,
            beta: self.beta,
            eta: self.eta,
            k: self.k,
            m: self.m,
            c: self.c,
            epsilon: self.epsilon,
            max_outer_iters: self.max_outer_iters,
            rel_tol: self.rel_tol,
            gpi_max_iters: self.gpi_max_iters,
            gpi_tol: self.gpi_tol,
            seed: self.seed,
            disable_second_order: self.disable_second_order,
            standardize: self.standardize,
        }
    }

    /// Loads or generates the dataset; exactly one source may be configured.
    pub fn dataset(&self) -> Result<MultiViewDataset> {
        match (&self.manifest, &self.synth) {
            (Some(path), None) => load_multiview(path),
            (None, Some(spec)) => synth_generate(spec),
            (Some(_), Some(_)) => Err(ShineError::Config {
                reason: "config must set exactly one of manifest/synth, found both".into(),
            }),
            (None, None) => Err(ShineError::Config {
                reason: "config must set one of manifest/synth".into(),
            }),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "shine-fs",
    about = "Multi-view unsupervised feature selection via hybrid-order similarity learning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the optimizer and write the fit artifacts.
    Fit(RunArgs),
    /// Fit once, then evaluate selections over a ratio grid.
    Sweep(RunArgs),
    /// Compare the full model against the frozen-second-order variant on
    /// paired seeds.
    Ablate(RunArgs),
    /// Generate the configured synthetic dataset and save it.
    Synth(RunArgs),
    /// Cut a saved ranking at a ratio or count.
    Select(SelectArgs),
    /// Evaluate a saved selection with repeated k-means.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config ratios (comma-separated).
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Adds a baseline to sweep tables.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// Extra artifacts to write (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Option<Vec<EmitKind>>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// `fit_result.json` produced by the fit command.
    #[arg(long)]
    fit: PathBuf,
    /// Fraction of the ranking to keep.
    #[arg(long)]
    ratio: Option<f64>,
    /// Exact number of features to keep (alternative to --ratio).
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Run configuration providing the dataset, c, restarts, and seed.
    #[arg(long)]
    config: PathBuf,
    /// `selected.json` produced by the select command.
    #[arg(long)]
    selection: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &ShineError) -> i32 {
    match err {
        ShineError::LabelsMissing => EXIT_NO_LABELS,
        // non-finite entries in *input* data are a data problem, not a
        // numerical failure, and fall through to the config exit code
        ShineError::IterationFailed { .. }
        | ShineError::NonFinite { .. }
        | ShineError::NotPositiveDefinite
        | ShineError::IllConditioned { .. }
        | ShineError::DegenerateViewResidual { .. }
        | ShineError::NotSymmetric { .. }
        | ShineError::NotOrthonormal { .. }
        | ShineError::NegativeEntry { .. }
        | ShineError::BadGraphRow { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn apply_overrides(config: &mut RunConfig, args: &RunArgs) {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(ratios) = &args.ratios {
        config.ratios = ratios.clone();
    }
    if let Some(baseline) = args.baseline {
        config.baseline = baseline;
    }
    if let Some(emit) = &args.emit {
        config.emit = emit.clone();
    }
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
}

#[derive(Serialize)]
struct RunMeta {
    command: String,
    name: String,
    seed: u64,
    wallclock_secs: f64,
    unix_timestamp: u64,
}

fn write_meta(dir: &Path, command: &str, config: &RunConfig, started: Instant) -> Result<()> {
    let meta = RunMeta {
        command: command.to_string(),
        name: config.name.clone(),
        seed: config.seed,
        wallclock_secs: started.elapsed().as_secs_f64(),
        unix_timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&dir.join("meta.json"), &meta)
}

fn emit_fit_artifacts(config: &RunConfig, result: &FitResult, params: &HyperParams) -> Result<()> {
    let out = &config.out;
    write_json(&out.join("fit_result.json"), &FitSummary::from_result(result))?;
    if config.emit.contains(&EmitKind::Trace) {
        write_trace_csv(&out.join("trace.csv"), &result.objective_trace)?;
    }
    if config.emit.contains(&EmitKind::Graphs) {
        export_graphs(&out.join("graphs"), &result.state, params.eta)?;
    }
    if config.emit.contains(&EmitKind::State) {
        export_state(&out.join("state"), &result.state, params)?;
    }
    Ok(())
}

fn cmd_fit(config: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let dataset = config.dataset()?;
    let params = config.hyperparams();
    let result = fit(&dataset, &params)?;
    emit_fit_artifacts(config, &result, &params)?;
    write_meta(&config.out, "fit", config, started)?;
    println!(
        "fit: {} in {} iterations, objective {:.6e} -> {:.6e}; artifacts in {}",
        if result.converged { "converged" } else { "stopped" },
        result.iterations,
        result.objective_trace.first().unwrap_or(&f64::NAN),
        result.objective_trace.last().unwrap_or(&f64::NAN),
        config.out.display()
    );
    Ok(())
}

fn cmd_sweep(config: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let dataset = config.dataset()?;
    let params = config.hyperparams();
    let (result, reports) = sweep(&dataset, &params, &config.ratios, config.restarts)?;
    let mut rows: Vec<ReportRow> = reports
        .iter()
        .map(|r| ReportRow::from_report(r, "shine-fs", None))
        .collect();
    if config.baseline == Baseline::Random {
        for report in &reports {
            let base = random_baseline(
                &dataset,
                report.ratio,
                params.c,
                config.restarts,
                params.seed,
                config.baseline_draws,
            )?;
            rows.push(ReportRow::from_report(&base, "random", None));
        }
        rows.sort_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.method.cmp(&b.method)));
    }
    write_sweep_csv(&config.out.join("sweep.csv"), &rows)?;
    write_json(&config.out.join("sweep.json"), &rows)?;
    emit_fit_artifacts(config, &result, &params)?;
    write_meta(&config.out, "sweep", config, started)?;
    println!(
        "sweep: {} ratios x {} restarts; table in {}",
        reports.len(),
        config.restarts,
        config.out.join("sweep.csv").display()
    );
    Ok(())
}

fn cmd_ablate(config: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let dataset = config.dataset()?;
    if dataset.labels.is_none() {
        return Err(ShineError::LabelsMissing);
    }
    let base_params = config.hyperparams();
    let mut rows = Vec::new();
    for variant in ["full", "no-second-order"] {
        for i in 0..config.ablate_seeds.max(1) {
            let seed = restart_seed(config.seed, i);
            let mut params = base_params.clone();
            params.seed = seed;
            params.disable_second_order = variant == "no-second-order";
            let result = fit(&dataset, &params)?;
            let h = ((config.ablate_ratio * dataset.total_features() as f64).ceil() as usize)
                .clamp(1, dataset.total_features());
            let selected = &result.ranking[..h];
            let mut report =
                evaluate_selection(&dataset, selected, params.c, config.restarts, seed)?;
            report.ratio = config.ablate_ratio;
            rows.push(ReportRow::from_report(&report, variant, Some(seed)));
        }
    }
    write_ablate_csv(&config.out.join("ablate.csv"), &rows)?;
    write_json(&config.out.join("ablate.json"), &rows)?;
    write_meta(&config.out, "ablate", config, started)?;
    let mean = |method: &str| -> f64 {
        let xs: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.acc_mean)
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    println!(
        "ablate: full acc {:.4} vs no-second-order acc {:.4} over {} seeds; table in {}",
        mean("full"),
        mean("no-second-order"),
        config.ablate_seeds,
        config.out.join("ablate.csv").display()
    );
    Ok(())
}

fn cmd_synth(config: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let spec = config.synth.as_ref().ok_or(ShineError::Config {
        reason: "synth command needs a synth section in the config".into(),
    })?;
    let dataset = synth_generate(spec)?;
    let name = if config.name.is_empty() {
        "synthetic"
    } else {
        &config.name
    };
    let manifest = save_multiview(&dataset, &config.out.join("dataset"), name)?;
    write_meta(&config.out, "synth", config, started)?;
    println!("synth: dataset written, manifest at {}", manifest.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SelectionFile {
    selected: Vec<FeatureRef>,
}

fn cmd_select(args: &SelectArgs) -> Result<()> {
    let summary: FitSummary = read_json(&args.fit)?;
    let total = summary.ranking.len();
    let h = match (args.ratio, args.top) {
        (Some(ratio), None) => {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(ShineError::BadRatio { ratio });
            }
            (ratio * total as f64).ceil() as usize
        }
        (None, Some(top)) => {
            if top == 0 || top > total {
                return Err(ShineError::BadFeatureCount { h: top, total });
            }
            top
        }
        _ => {
            return Err(ShineError::Config {
                reason: "select needs exactly one of --ratio/--top".into(),
            })
        }
    };
    let selected: Vec<FeatureRef> = summary.ranking[..h.min(total)]
        .iter()
        .map(|r| FeatureRef::new(r.view, r.index))
        .collect();
    let mut csv = String::from("view,index\n");
    for f in &selected {
        csv.push_str(&format!("{},{}\n", f.view, f.index));
    }
    crate::io::write_string(&args.out.join("selected.csv"), &csv)?;
    write_json(&args.out.join("selected.json"), &SelectionFile { selected })?;
    println!(
        "select: kept {h}/{total} features; files in {}",
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = RunConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    let dataset = config.dataset()?;
    let selection: SelectionFile = read_json(&args.selection)?;
    let report = evaluate_selection(
        &dataset,
        &selection.selected,
        config.c,
        config.restarts,
        config.seed,
    )?;
    let rows = vec![ReportRow::from_report(&report, "selection", None)];
    write_sweep_csv(&config.out.join("evaluation.csv"), &rows)?;
    write_json(&config.out.join("evaluation.json"), &rows)?;
    write_meta(&config.out, "evaluate", &config, started)?;
    println!(
        "evaluate: acc {:.4} +/- {:.4}, nmi {:.4} +/- {:.4}",
        report.acc_mean, report.acc_std, report.nmi_mean, report.nmi_std
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => {
            let mut config = RunConfig::load(&args.config)?;
            apply_overrides(&mut config, &args);
            cmd_fit(&config)
        }
        Command::Sweep(args) => {
            let mut config = RunConfig::load(&args.config)?;
            apply_overrides(&mut config, &args);
            cmd_sweep(&config)
        }
        Command::Ablate(args) => {
            let mut config = RunConfig::load(&args.config)?;
            apply_overrides(&mut config, &args);
            cmd_ablate(&config)
        }
        Command::Synth(args) => {
            let mut config = RunConfig::load(&args.config)?;
            apply_overrides(&mut config, &args);
            cmd_synth(&config)
        }
        Command::Select(args) => cmd_select(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success exits
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            exit_code_for(&e)
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_with_args(std::env::args_os())
}
