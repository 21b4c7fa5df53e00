//! Leave-one-task-out benchmark orchestration.
//!
//! For each trial, a fixed per-task holdout split is drawn. For each
//! target task, a base model is trained on all other tasks' training
//! seasons; every configured transfer method then predicts the target's
//! held-out seasons using only the target's training-split phenology
//! (LTE stripped) as auxiliary data, and is scored by LTE50 RMSE. The
//! same base model serves all methods of a cell, verified by fingerprint.
//!
//! (trial x target) cells are independent and run on parallel workers;
//! every random stream derives from the master seed, so reports are
//! byte-identical across runs and worker schedules.

mod plots;
mod report;
mod transfer;

pub use plots::emit_plots;
pub use report::{audit, AuditRecord, AuditSummary, ExperimentReport, ReportMeta};
pub use transfer::{run_transfer, save_predictions_csv, SeasonPrediction, TransferOutcome};

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::index::sample as index_sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    generate_synthetic, load_csv, normalize_season, normalize_with, Dataset, GeneratorConfig,
    SeasonSeries,
};
use crate::models::{fingerprint_of, ModelParams, ModelVariant};
use crate::seed::{mix, stream};
use crate::tal::{fit, fit_lte_oracle, FittedTal, TalConfig, TalScheme, TaskSetSpec, Weighting};
use crate::training::{eval_rmse, train, TrainConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv { path: PathBuf },
    Generator { config: GeneratorConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodKind {
    /// A transfer scheme fitted on target auxiliary data.
    Tal { config: TalConfig },
    /// Embedding optimization driven by the target's LTE training data.
    /// Oracle: uses information unavailable in the transfer setting.
    LteOracle { config: TalConfig },
    /// Model trained with the target's LTE included, predicting via the
    /// target's own head or embedding. Oracle upper bound.
    Supervised,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub kind: MethodKind,
}

impl MethodSpec {
    pub fn tal(name: &str, config: TalConfig) -> MethodSpec {
        MethodSpec {
            name: name.to_string(),
            kind: MethodKind::Tal { config },
        }
    }

    fn uses_random_embeddings(&self) -> bool {
        match &self.kind {
            MethodKind::Tal { config } => {
                config.scheme == TalScheme::Averaging && config.task_set.uses_random_embeddings()
            }
            _ => false,
        }
    }

    fn needs_embedding_variant(&self) -> bool {
        match &self.kind {
            MethodKind::Tal { config } => {
                self.uses_random_embeddings() || config.scheme == TalScheme::OptEmbedding
            }
            MethodKind::LteOracle { .. } => true,
            MethodKind::Supervised => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Independent training/test splits averaged in the report.
    pub trials: usize,
    /// Seasons removed per task for the test set.
    pub holdout_per_task: usize,
    pub train: TrainConfig,
    pub methods: Vec<MethodSpec>,
    pub master_seed: u64,
}

impl ExperimentConfig {
    fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods configured".into()));
        }
        if dataset.tasks.len() < 3 {
            return Err(Error::InvalidConfig(
                "leave-one-task-out needs at least 3 tasks".into(),
            ));
        }
        for (task, seasons) in &dataset.tasks {
            if seasons.len() <= self.holdout_per_task {
                return Err(Error::InvalidConfig(format!(
                    "task `{task}` has {} seasons, cannot hold out {}",
                    seasons.len(),
                    self.holdout_per_task
                )));
            }
        }
        if self.train.variant == ModelVariant::MultiHead {
            if let Some(m) = self.methods.iter().find(|m| m.needs_embedding_variant()) {
                return Err(Error::InvalidConfig(format!(
                    "method `{}` requires the Embedding variant",
                    m.name
                )));
            }
        }
        Ok(())
    }
}

/// The Table-2-style method roster for a model variant. Oracle columns
/// are appended by [`oracle_methods`].
pub fn default_methods(variant: ModelVariant) -> Vec<MethodSpec> {
    let mut methods = vec![
        MethodSpec::tal(
            "Uniform (S)",
            TalConfig::averaging(TaskSetSpec::S, Weighting::Uniform, 10.0),
        ),
        MethodSpec::tal(
            "Weighted (S)",
            TalConfig::averaging(TaskSetSpec::S, Weighting::Exponential, 10.0),
        ),
    ];
    if variant == ModelVariant::Embedding {
        methods.push(MethodSpec::tal(
            "Uniform (S+CR)",
            TalConfig::averaging(TaskSetSpec::SCr, Weighting::Uniform, 10.0),
        ));
        methods.push(MethodSpec::tal(
            "Weighted (S+CR)",
            TalConfig::averaging(TaskSetSpec::SCr, Weighting::Exponential, 10.0),
        ));
    }
    methods.push(MethodSpec::tal("Best Source", TalConfig::best_source()));
    if variant == ModelVariant::Embedding {
        methods.push(MethodSpec::tal("Pheno. Optim.", TalConfig::opt_embedding()));
    }
    methods
}

/// Oracle columns: LTE-driven embedding optimization and the supervised
/// upper bound. Names carry an asterisk, marking methods that use target
/// LTE data.
pub fn oracle_methods(variant: ModelVariant) -> Vec<MethodSpec> {
    let mut methods = Vec::new();
    if variant == ModelVariant::Embedding {
        methods.push(MethodSpec {
            name: "LTE Optim.*".into(),
            kind: MethodKind::LteOracle {
                config: TalConfig::opt_embedding(),
            },
        });
    }
    methods.push(MethodSpec {
        name: "Supervised*".into(),
        kind: MethodKind::Supervised,
    });
    methods
}

struct Split {
    train: BTreeMap<String, Vec<SeasonSeries>>,
    holdout: BTreeMap<String, Vec<SeasonSeries>>,
}

/// Seeded per-task holdout sampling without replacement; identical for
/// every target within a trial.
fn split_holdout(dataset: &Dataset, per_task: usize, master_seed: u64, trial: usize) -> Split {
    let mut train = BTreeMap::new();
    let mut holdout = BTreeMap::new();
    for (t_idx, (task, seasons)) in dataset.tasks.iter().enumerate() {
        let mut rng = crate::seed::derive_rng(
            master_seed,
            &[stream::HOLDOUT, trial as u64, t_idx as u64],
        );
        let mut held: Vec<usize> = index_sample(&mut rng, seasons.len(), per_task).into_vec();
        held.sort_unstable();
        let mut tr = Vec::new();
        let mut ho = Vec::new();
        for (i, season) in seasons.iter().enumerate() {
            if held.binary_search(&i).is_ok() {
                ho.push(season.clone());
            } else {
                tr.push(season.clone());
            }
        }
        train.insert(task.clone(), tr);
        holdout.insert(task.clone(), ho);
    }
    Split { train, holdout }
}

struct CellResult {
    rmses: Vec<f64>,
    fingerprint: String,
    audit: AuditRecord,
}

fn season_keys(seasons: &[SeasonSeries]) -> Vec<(String, String)> {
    seasons
        .iter()
        .map(|s| (s.task_id.clone(), s.season_label.clone()))
        .collect()
}

/// One (trial, target) cell: train the base model, run every method.
fn run_cell(
    dataset: &Dataset,
    tasks: &[String],
    cfg: &ExperimentConfig,
    trial: usize,
    target_idx: usize,
) -> Result<CellResult> {
    let split = split_holdout(dataset, cfg.holdout_per_task, cfg.master_seed, trial);
    let target = &tasks[target_idx];
    let sources: Vec<String> = tasks.iter().filter(|t| *t != target).cloned().collect();

    let mut train_ds = Dataset::default();
    for s in &sources {
        train_ds.tasks.insert(s.clone(), split.train[s].clone());
    }
    let stats = train_ds.compute_feature_stats();
    let train_norm = normalize_with(&train_ds, &stats)?;

    // Target auxiliary data: training-split seasons, LTE stripped.
    let aux: Vec<SeasonSeries> = split.train[target]
        .iter()
        .map(|s| normalize_season(&s.strip_lte(), &stats))
        .collect();
    // Oracle-only view of the same seasons with LTE intact.
    let aux_with_lte: Vec<SeasonSeries> = split.train[target]
        .iter()
        .map(|s| normalize_season(s, &stats))
        .collect();
    let eval: Vec<SeasonSeries> = split.holdout[target]
        .iter()
        .map(|s| normalize_season(s, &stats))
        .collect();

    let audit_rec = AuditRecord {
        trial,
        target: target.clone(),
        train_keys: train_norm
            .tasks
            .values()
            .flat_map(|v| season_keys(v))
            .collect(),
        aux_keys: season_keys(&aux),
        holdout_keys: season_keys(&eval),
        aux_lte_cells: aux.iter().map(|s| s.lte_day_count()).sum(),
    };

    let base_cfg = TrainConfig {
        rng_seed: mix(
            cfg.master_seed,
            &[stream::BASE_TRAIN, trial as u64, target_idx as u64],
        ),
        ..cfg.train.clone()
    };
    let outcome = train(&train_norm, &sources, &base_cfg)?;
    let model = outcome.model;
    let fingerprint = fingerprint_of(&model, &serde_json::to_value(&base_cfg)?);

    let aux_refs: Vec<&SeasonSeries> = aux.iter().collect();
    let eval_refs: Vec<&SeasonSeries> = eval.iter().collect();
    let tal_seed = mix(
        cfg.master_seed,
        &[stream::TAL_RUN, trial as u64, target_idx as u64],
    );

    let mut rmses = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let context = |e: Error| {
            Error::Other(format!(
                "trial {trial}, target {target}, method `{}`: {e}",
                method.name
            ))
        };
        let rmse = match &method.kind {
            MethodKind::Tal { config } => {
                let mut tc = config.clone();
                tc.rng_seed = tal_seed;
                let fitted = fit(&model, &aux_refs, &tc).map_err(context)?;
                score(&fitted, &model, &eval_refs).map_err(context)?
            }
            MethodKind::LteOracle { config } => {
                let lte_refs: Vec<&SeasonSeries> = aux_with_lte.iter().collect();
                let fitted = fit_lte_oracle(&model, &lte_refs, config).map_err(context)?;
                score(&fitted, &model, &eval_refs).map_err(context)?
            }
            MethodKind::Supervised => {
                supervised_rmse(cfg, &split, &sources, target, trial, target_idx)
                    .map_err(context)?
            }
        };
        rmses.push(rmse);
    }

    Ok(CellResult {
        rmses,
        fingerprint,
        audit: audit_rec,
    })
}

fn score(fitted: &FittedTal, model: &ModelParams, eval: &[&SeasonSeries]) -> Result<f64> {
    eval_rmse(
        |s| {
            let lte = fitted.predict_lte(model, s)?;
            // eval_rmse reads the LTE50 column of a 7-wide prediction;
            // pad the 3-wide mixture output accordingly.
            let days = lte.rows();
            let mut out = crate::numerics::Tensor::zeros(&[days, 7]);
            for d in 0..days {
                out.data_mut()[d * 7..d * 7 + 3].copy_from_slice(lte.row(d));
            }
            Ok(out)
        },
        eval,
    )
}

/// Upper bound: train with the target's LTE-labeled training seasons
/// included and predict via the target's own handle.
fn supervised_rmse(
    cfg: &ExperimentConfig,
    split: &Split,
    sources: &[String],
    target: &str,
    trial: usize,
    target_idx: usize,
) -> Result<f64> {
    let mut sup_ds = Dataset::default();
    for s in sources {
        sup_ds.tasks.insert(s.clone(), split.train[s].clone());
    }
    sup_ds
        .tasks
        .insert(target.to_string(), split.train[target].clone());
    let stats = sup_ds.compute_feature_stats();
    let sup_norm = normalize_with(&sup_ds, &stats)?;
    let all_tasks: Vec<String> = sup_norm.tasks.keys().cloned().collect();
    let sup_cfg = TrainConfig {
        rng_seed: mix(
            cfg.master_seed,
            &[stream::SUPERVISED_TRAIN, trial as u64, target_idx as u64],
        ),
        ..cfg.train.clone()
    };
    let outcome = train(&sup_norm, &all_tasks, &sup_cfg)?;
    let eval: Vec<SeasonSeries> = split.holdout[target]
        .iter()
        .map(|s| normalize_season(s, &stats))
        .collect();
    let eval_refs: Vec<&SeasonSeries> = eval.iter().collect();
    eval_rmse(
        |s| {
            let weather = crate::training::prepare_season(target, s).x;
            crate::models::predict_multihead(&outcome.model, target, &weather)
        },
        &eval_refs,
    )
}

/// Run the full leave-one-task-out benchmark on a loaded dataset.
pub fn run_loco(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate(dataset)?;
    let tasks = dataset.task_ids();
    let jobs: Vec<(usize, usize)> = (0..cfg.trials)
        .flat_map(|trial| (0..tasks.len()).map(move |t| (trial, t)))
        .collect();

    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(trial, target_idx)| run_cell(dataset, &tasks, cfg, trial, target_idx))
        .collect::<Result<_>>()?;

    let n_methods = cfg.methods.len();
    let mut rmse = vec![vec![0.0; n_methods]; tasks.len()];
    let mut fingerprints = BTreeMap::new();
    let mut audit_records = Vec::with_capacity(cells.len());
    for (job_idx, cell) in cells.iter().enumerate() {
        let (trial, target_idx) = jobs[job_idx];
        for (m, &v) in cell.rmses.iter().enumerate() {
            rmse[target_idx][m] += v / cfg.trials as f64;
        }
        fingerprints.insert(
            format!("{}/{}", trial, tasks[target_idx]),
            cell.fingerprint.clone(),
        );
        audit_records.push(cell.audit.clone());
    }

    let mean_row: Vec<f64> = (0..n_methods)
        .map(|m| rmse.iter().map(|row| row[m]).sum::<f64>() / tasks.len() as f64)
        .collect();

    let audit_summary = audit(&audit_records)?;

    Ok(ExperimentReport {
        methods: cfg.methods.iter().map(|m| m.name.clone()).collect(),
        targets: tasks,
        rmse,
        mean_row,
        meta: ReportMeta {
            master_seed: cfg.master_seed,
            trials: cfg.trials,
            model_fingerprints: fingerprints,
            method_configs: serde_json::to_value(&cfg.methods)?,
            train_config: serde_json::to_value(&cfg.train)?,
            audit: audit_summary,
            audit_records,
        },
    })
}

/// Load the configured dataset source.
pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Csv { path } => load_csv(path),
        DatasetSource::Generator { config } => generate_synthetic(config),
    }
}

/// Load the dataset and run the benchmark.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let dataset = load_dataset(&cfg.dataset)?;
    run_loco(&dataset, cfg)
}

/// The benchmark with oracle baseline columns appended.
pub fn run_oracle_baselines(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.methods.extend(oracle_methods(cfg.train.variant));
    run_experiment(&cfg)
}

/// One ablation axis of the sweep op.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepAxis {
    SetType { values: Vec<TaskSetSpec> },
    NRandom { values: Vec<usize> },
    Tau { values: Vec<f64> },
    Weighting { values: Vec<Weighting> },
}

pub struct SweepOutcome {
    /// All axis values as columns of one run (models are shared).
    pub combined: ExperimentReport,
    /// Single-column projection per axis value.
    pub per_value: Vec<(String, ExperimentReport)>,
}

/// Run one benchmark whose method columns enumerate the axis values.
/// Training cost is shared: the same base models serve every column.
pub fn sweep(cfg: &ExperimentConfig, base: &TalConfig, axis: &SweepAxis) -> Result<SweepOutcome> {
    let mut methods = Vec::new();
    match axis {
        SweepAxis::SetType { values } => {
            for &spec in values {
                let mut tc = base.clone();
                tc.scheme = TalScheme::Averaging;
                tc.task_set = spec;
                tc.n_random = spec.default_n_random();
                methods.push(MethodSpec::tal(&format!("{spec}"), tc));
            }
        }
        SweepAxis::NRandom { values } => {
            if !base.task_set.uses_random_embeddings() {
                return Err(Error::InvalidConfig(
                    "n_random sweep needs a task set with random embeddings".into(),
                ));
            }
            for &n in values {
                let mut tc = base.clone();
                tc.scheme = TalScheme::Averaging;
                tc.n_random = n;
                methods.push(MethodSpec::tal(&format!("n={n}"), tc));
            }
        }
        SweepAxis::Tau { values } => {
            for &tau in values {
                let mut tc = base.clone();
                tc.scheme = TalScheme::Averaging;
                tc.weighting = Weighting::Exponential;
                tc.tau = tau;
                methods.push(MethodSpec::tal(&format!("Ex-{tau}"), tc));
            }
        }
        SweepAxis::Weighting { values } => {
            // Uniform always rides along as the control column.
            if !values.contains(&Weighting::Uniform) {
                let mut tc = base.clone();
                tc.scheme = TalScheme::Averaging;
                tc.weighting = Weighting::Uniform;
                methods.push(MethodSpec::tal("Uniform", tc));
            }
            for &w in values {
                let mut tc = base.clone();
                tc.scheme = TalScheme::Averaging;
                tc.weighting = w;
                let name = match w {
                    Weighting::Exponential => format!("Ex-{}", tc.tau),
                    _ => format!("{w}"),
                };
                methods.push(MethodSpec::tal(&name, tc));
            }
        }
    }

    let mut run_cfg = cfg.clone();
    run_cfg.methods = methods;
    let combined = run_experiment(&run_cfg)?;
    let per_value = combined
        .methods
        .iter()
        .map(|name| (name.clone(), combined.project(std::slice::from_ref(name))))
        .collect();
    Ok(SweepOutcome {
        combined,
        per_value,
    })
}
