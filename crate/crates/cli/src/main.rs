//! `tal` command-line interface: synthetic data generation, training,
//! transfer prediction, the leave-one-task-out benchmark, ablation
//! sweeps, gradient checking, and prediction plots.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tal_core::data::{
    benchmark_config, generate_synthetic, load_aux_csv, load_csv, normalize_with, save_csv,
    GeneratorConfig,
};
use tal_core::harness::{
    emit_plots, load_dataset, run_experiment, run_oracle_baselines, run_transfer,
    save_predictions_csv, sweep, ExperimentConfig, SweepAxis,
};
use tal_core::models::{load_bundle, save_bundle, ModelBundle, ModelVariant};
use tal_core::tal::{TalConfig, TaskSetSpec, Weighting};
use tal_core::training::{gradcheck_model, save_training_log, train, Batch, TrainConfig};

#[derive(Parser)]
#[command(name = "tal", about = "Cold-hardiness transfer via auxiliary phenology labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-cultivar season dataset as CSV.
    Generate(GenerateArgs),
    /// Train a multi-task model on a season CSV.
    Train(TrainArgs),
    /// Predict LTE for a phenology-only target CSV using a trained model.
    Transfer(TransferArgs),
    /// Run the leave-one-task-out benchmark from an experiment config.
    Evaluate(EvaluateArgs),
    /// Sweep one ablation axis of the averaging scheme.
    Sweep(SweepArgs),
    /// Check analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Plot per-entry LTE50 prediction curves for one season.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator config (TOML). Omit to use the built-in benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark preset: number of tasks.
    #[arg(long, default_value_t = 6)]
    tasks: usize,
    /// Benchmark preset: seasons per task.
    #[arg(long, default_value_t = 8)]
    seasons: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the generator config actually used.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Season CSV.
    #[arg(long)]
    data: PathBuf,
    /// Training config (TOML). Omit for desk-scale defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model variant override.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Train only on these tasks (comma separated). Default: all tasks.
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<String>>,
    /// Output model bundle (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Multihead,
    Embedding,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> ModelVariant {
        match v {
            VariantArg::Multihead => ModelVariant::MultiHead,
            VariantArg::Embedding => ModelVariant::Embedding,
        }
    }
}

#[derive(Args)]
struct TransferArgs {
    /// Trained model bundle.
    #[arg(long)]
    model: PathBuf,
    /// Target phenology CSV (LTE columns ignored if present).
    #[arg(long)]
    target_data: PathBuf,
    /// Transfer config (TOML). Omit for weighted S+CR averaging.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory for predictions.csv and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Run directory for report.csv/report.txt/meta.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Append the oracle baseline columns.
    #[arg(long)]
    oracles: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config (TOML); its methods list is replaced by the axis.
    #[arg(long)]
    config: PathBuf,
    /// Axis to sweep.
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Axis values, comma separated (e.g. "5,10,20,50" for tau).
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    SetType,
    NRandom,
    Tau,
    Weighting,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Random seeds to check.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Coordinates sampled per run.
    #[arg(long, default_value_t = 250)]
    coords: usize,
    /// Failure threshold on the max relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// Trained model bundle (Embedding variant for CR/LR sets).
    #[arg(long)]
    model: PathBuf,
    /// Season CSV holding the season to plot.
    #[arg(long)]
    data: PathBuf,
    /// Task id of the season.
    #[arg(long)]
    task: String,
    /// Season label (start year).
    #[arg(long)]
    season: String,
    /// Embedding-set types to plot.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["s".to_string(), "cr".to_string()])]
    sets: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::Train(args) => train_cmd(args),
        Command::Transfer(args) => transfer_cmd(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Sweep(args) => sweep_cmd(args),
        Command::Gradcheck(args) => gradcheck_cmd(args),
        Command::Plot(args) => plot_cmd(args),
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn generate(args: GenerateArgs) -> Result<()> {
    let config: GeneratorConfig = match &args.config {
        Some(path) => read_toml(path)?,
        None => {
            let mut c = benchmark_config(args.tasks, args.seasons, args.seed);
            c.rng_seed = args.seed;
            c
        }
    };
    let dataset = generate_synthetic(&config)?;
    save_csv(&dataset, &args.out)?;
    if let Some(out) = &args.config_out {
        std::fs::write(out, toml::to_string_pretty(&config)?)?;
    }
    println!(
        "wrote {} tasks, {} seasons to {}",
        dataset.tasks.len(),
        dataset.total_seasons(),
        args.out.display()
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let mut config: TrainConfig = match &args.config {
        Some(path) => read_toml(path)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = args.variant {
        config.variant = v.into();
    }
    let dataset = load_csv(&args.data)?;
    let tasks = match args.tasks {
        Some(t) => t,
        None => dataset.task_ids(),
    };
    let stats = dataset.compute_feature_stats();
    let normalized = normalize_with(&dataset, &stats)?;
    let outcome = train(&normalized, &tasks, &config)?;
    if let Some(log_path) = &args.log {
        save_training_log(&outcome.log, log_path)?;
    }
    let bundle = ModelBundle::new(outcome.model, stats, serde_json::to_value(&config)?);
    save_bundle(&bundle, &args.out)?;
    println!(
        "trained {} on {} tasks; final joint loss {:.5}; bundle {}",
        config.variant,
        tasks.len(),
        outcome.log.last().map(|s| s.joint_loss).unwrap_or(f64::NAN),
        args.out.display()
    );
    Ok(())
}

fn transfer_cmd(args: TransferArgs) -> Result<()> {
    let bundle = load_bundle(&args.model)?;
    let aux = load_aux_csv(&args.target_data)?;
    let config: TalConfig = match &args.config {
        Some(path) => read_toml(path)?,
        None => TalConfig::default(),
    };
    let outcome = run_transfer(&bundle, &aux, &config)?;
    std::fs::create_dir_all(&args.out_dir)?;
    save_predictions_csv(&outcome.predictions, args.out_dir.join("predictions.csv"))?;
    let manifest = std::fs::File::create(args.out_dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(manifest), &outcome.manifest)?;
    println!(
        "predicted {} seasons; outputs in {}",
        outcome.predictions.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let config: ExperimentConfig = read_toml(&args.config)?;
    let report = if args.oracles {
        run_oracle_baselines(&config)?
    } else {
        run_experiment(&config)?
    };
    report.save(&args.out_dir)?;
    print!("{}", report.to_text_table());
    println!("audit: {} records, ok", report.meta.audit.records);
    println!("report written to {}", args.out_dir.display());
    Ok(())
}

fn parse_set_type(s: &str) -> Result<TaskSetSpec> {
    Ok(match s.to_lowercase().as_str() {
        "s" => TaskSetSpec::S,
        "cr" => TaskSetSpec::Cr,
        "lr-all" | "lr_all" | "lrall" => TaskSetSpec::LrAll,
        "lr-3" | "lr_3" | "lr3" => TaskSetSpec::Lr3,
        "s+cr" | "s_cr" | "scr" => TaskSetSpec::SCr,
        "s+lr-all" | "s_lr_all" | "slrall" => TaskSetSpec::SLrAll,
        "s+lr-3" | "s_lr_3" | "slr3" => TaskSetSpec::SLr3,
        other => bail!("unknown set type `{other}`"),
    })
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    let config: ExperimentConfig = read_toml(&args.config)?;
    if args.values.is_empty() {
        bail!("--values is required");
    }
    let axis = match args.axis {
        AxisArg::SetType => SweepAxis::SetType {
            values: args
                .values
                .iter()
                .map(|v| parse_set_type(v))
                .collect::<Result<_>>()?,
        },
        AxisArg::NRandom => SweepAxis::NRandom {
            values: args
                .values
                .iter()
                .map(|v| v.parse::<usize>().context("n_random value"))
                .collect::<Result<_>>()?,
        },
        AxisArg::Tau => SweepAxis::Tau {
            values: args
                .values
                .iter()
                .map(|v| v.parse::<f64>().context("tau value"))
                .collect::<Result<_>>()?,
        },
        AxisArg::Weighting => SweepAxis::Weighting {
            values: args
                .values
                .iter()
                .map(|v| {
                    Ok(match v.to_lowercase().as_str() {
                        "uniform" => Weighting::Uniform,
                        "linear" => Weighting::Linear,
                        "linear-literal" | "linear_literal" => Weighting::LinearLiteral,
                        "exp" | "exponential" => Weighting::Exponential,
                        other => bail!("unknown weighting `{other}`"),
                    })
                })
                .collect::<Result<_>>()?,
        },
    };
    let base = TalConfig::default();
    let outcome = sweep(&config, &base, &axis)?;
    outcome.combined.save(&args.out_dir)?;
    for (name, report) in &outcome.per_value {
        let sub = args
            .out_dir
            .join(name.to_lowercase().replace([' ', '+', '='], "_"));
        report.save(&sub)?;
    }
    print!("{}", outcome.combined.to_text_table());
    println!("sweep reports written to {}", args.out_dir.display());
    Ok(())
}

fn gradcheck_cmd(args: GradcheckArgs) -> Result<()> {
    use rand::Rng;
    use tal_core::data::{DayRecord, SeasonSeries, NUM_EVENTS, NUM_FEATURES};
    use tal_core::models::{init_model, ModelWidths};
    use tal_core::seed::derive_rng;

    let start = chrono::NaiveDate::from_ymd_opt(2005, 9, 7).expect("valid date");
    let mut worst: f64 = 0.0;
    for seed in 0..args.seeds {
        for variant in [ModelVariant::MultiHead, ModelVariant::Embedding] {
            let mut rng = derive_rng(seed, &[101]);
            let mut mk_season = |task: &str, days: usize, lte_days: &[usize]| {
                let records: Vec<DayRecord> = (0..days)
                    .map(|i| {
                        let mut weather = [0.0; NUM_FEATURES];
                        for w in &mut weather {
                            *w = rng.random_range(-1.5..1.5);
                        }
                        let lte = lte_days.contains(&i).then(|| {
                            let v = rng.random_range(-1.5..1.5);
                            [v + 0.5, v, v - 0.5]
                        });
                        let mut pheno = [false; NUM_EVENTS];
                        for (e, p) in pheno.iter_mut().enumerate() {
                            *p = i >= days / 2 + 2 * e;
                        }
                        DayRecord {
                            date: start + chrono::Days::new(i as u64),
                            weather,
                            lte,
                            pheno,
                        }
                    })
                    .collect();
                SeasonSeries {
                    task_id: task.into(),
                    season_label: "2005".into(),
                    event_dates: [start; NUM_EVENTS],
                    days: records,
                }
            };
            let s1 = mk_season("a", 20, &[3, 9, 16]);
            let s2 = mk_season("b", 14, &[5, 11]);
            let mut mrng = derive_rng(seed, &[102]);
            let model = init_model(
                variant,
                &["a".into(), "b".into()],
                ModelWidths { h1: 16, h2: 16 },
                &mut mrng,
            );
            let batch: Batch = vec![("a".into(), &s1), ("b".into(), &s2)];
            let report = gradcheck_model(&model, &batch, args.step, args.coords, seed)?;
            println!(
                "seed {seed} {variant}: max rel err {:.3e} ({} checked, {} skipped)",
                report.max_rel_err, report.checked, report.skipped
            );
            worst = worst.max(report.max_rel_err);
        }
    }
    println!("worst: {worst:.3e} (tolerance {:.1e})", args.tolerance);
    if worst >= args.tolerance {
        bail!("gradient check failed: {worst:.3e} >= {:.1e}", args.tolerance);
    }
    Ok(())
}

fn plot_cmd(args: PlotArgs) -> Result<()> {
    let bundle = load_bundle(&args.model)?;
    let dataset = load_dataset(&tal_core::harness::DatasetSource::Csv {
        path: args.data.clone(),
    })?;
    let season = dataset
        .seasons(&args.task)?
        .iter()
        .find(|s| s.season_label == args.season)
        .with_context(|| format!("season {} not found for task {}", args.season, args.task))?
        .clone();
    let specs: Vec<TaskSetSpec> = args
        .sets
        .iter()
        .map(|s| parse_set_type(s))
        .collect::<Result<_>>()?;
    let written = emit_plots(&bundle, &specs, &season, args.seed, &args.out_dir)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
