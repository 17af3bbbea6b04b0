use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use losocv::data::{save_study_csv, OutcomeKind, StudyCollection};
use losocv::error::{Error, Result};
use losocv::experiment::{self, ExperimentConfig, Mode, ResultTable, SchemeName, SweepAxis};
use losocv::learners::ModelFamily;
use losocv::metrics::MetricName;
use losocv::plot;
use losocv::sim::{simulate_collection, SimTruth};

#[derive(Parser)]
#[command(name = "losocv", version, about = "Compare leave-one-study-out and K-fold cross-validation on multi-trial data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic multi-trial CSV and a JSON truth sidecar.
    Simulate(Common),
    /// Replicated simulation experiment.
    Run(Common),
    /// Replicated experiments across values of one simulation parameter.
    Sweep(Common),
    /// Evaluate on a user-supplied multi-study CSV with one study held back as the future trial.
    Eval(Common),
    /// Re-render figures from an existing results CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Reduced profile: 300 samples per trial, 100 forest trees, 30 replicates.
    #[arg(long)]
    fast: bool,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[arg(long)]
    sweep_axis: Option<String>,
    #[arg(long, value_delimiter = ',')]
    sweep_values: Option<Vec<f64>>,
    #[arg(long)]
    outcome_kind: Option<String>,
    #[arg(long)]
    kfold_k: Option<usize>,
    #[arg(long)]
    forest_trees: Option<usize>,
    /// Multi-study CSV for `eval`.
    #[arg(long)]
    external_path: Option<PathBuf>,
    /// Study id used as the future trial in `eval`.
    #[arg(long)]
    future: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartKind {
    Box,
    Line,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV written by run, sweep or eval.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metric to draw; every metric in the table when absent.
    #[arg(long)]
    metric: Option<String>,
    /// Chart type; line for sweep tables, box otherwise.
    #[arg(long, value_enum)]
    kind: Option<ChartKind>,
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>> {
    items.iter().map(|s| s.trim().parse()).collect()
}

impl Common {
    fn config(&self, mode: Mode) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        cfg.fast |= self.fast;
        if let Some(v) = self.replicates {
            cfg.replicates = v;
        }
        if let Some(v) = &self.schemes {
            cfg.schemes = parse_list::<SchemeName>(v)?;
        }
        if let Some(v) = &self.models {
            cfg.models = parse_list::<ModelFamily>(v)?;
        }
        if let Some(v) = &self.metrics {
            cfg.metrics = Some(parse_list::<MetricName>(v)?);
        }
        if let Some(v) = &self.sweep_axis {
            cfg.sweep_axis = Some(v.parse::<SweepAxis>()?);
        }
        if let Some(v) = &self.sweep_values {
            cfg.sweep_values = Some(v.clone());
        }
        if let Some(v) = &self.outcome_kind {
            cfg.sim.outcome_kind = v.parse::<OutcomeKind>()?;
        }
        if let Some(v) = self.kfold_k {
            cfg.kfold_k = v;
        }
        if let Some(v) = self.forest_trees {
            cfg.forest_trees = Some(v);
        }
        if let Some(v) = &self.external_path {
            cfg.external_path = Some(v.clone());
        }
        if let Some(v) = &self.future {
            cfg.future = Some(v.clone());
        }
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn metrics_in(table: &ResultTable) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in table.aggregates() {
        if !names.contains(&r.metric) {
            names.push(r.metric.clone());
        }
    }
    names
}

fn draw(table: &ResultTable, dir: &Path, metrics: &[String], kind: ChartKind) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for m in metrics {
        let path = match kind {
            ChartKind::Box => dir.join(format!("boxplot_{m}.svg")),
            ChartKind::Line => dir.join(format!("linechart_{m}.svg")),
        };
        match kind {
            ChartKind::Box => plot::emit_svg_boxplot(table, m, &path)?,
            ChartKind::Line => plot::emit_svg_linechart(table, m, &path)?,
        }
        written.push(path);
    }
    Ok(written)
}

fn simulate(args: &Common) -> Result<()> {
    let mut cfg = args.config(Mode::Sim)?;
    cfg.sim.seed = args.seed.unwrap_or(cfg.sim.seed);
    let cfg = cfg.effective();
    let study = simulate_collection(&cfg.sim)?;
    create_dir(&cfg.output_dir)?;
    let mut all = study.legacy.studies().to_vec();
    all.push(study.future.clone());
    let csv_path = cfg.output_dir.join("studies.csv");
    save_study_csv(&StudyCollection::new(all), &csv_path)?;
    let truth_path = cfg.output_dir.join("truth.json");
    let truth: &SimTruth = &study.truth;
    let json = serde_json::to_string_pretty(truth)? + "\n";
    fs::write(&truth_path, json).map_err(|e| Error::io(&truth_path, e))?;
    println!("wrote {} and {}", csv_path.display(), truth_path.display());
    Ok(())
}

fn experiment(args: &Common, mode: Mode) -> Result<()> {
    let cfg = args.config(mode)?;
    let table = experiment::run(&cfg)?;
    create_dir(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join("results.csv");
    experiment::emit_csv(&table, &csv_path)?;
    let chart = if mode == Mode::Sweep { ChartKind::Line } else { ChartKind::Box };
    let figures = draw(&table, &cfg.output_dir, &metrics_in(&table), chart)?;
    println!("wrote {} ({} rows)", csv_path.display(), table.rows.len());
    for f in figures {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn replot(args: &PlotArgs) -> Result<()> {
    let table = experiment::read_csv(&args.input)?;
    let dir = args
        .out
        .clone()
        .or_else(|| args.input.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    create_dir(&dir)?;
    let kind = args.kind.unwrap_or(if table.rows.iter().any(|r| r.sweep_value.is_some()) {
        ChartKind::Line
    } else {
        ChartKind::Box
    });
    let metrics = match &args.metric {
        Some(m) => vec![m.clone()],
        None => metrics_in(&table),
    };
    for f in draw(&table, &dir, &metrics, kind)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Run(a) => experiment(a, Mode::Sim),
        Command::Sweep(a) => experiment(a, Mode::Sweep),
        Command::Eval(a) => experiment(a, Mode::External),
        Command::Plot(a) => replot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
