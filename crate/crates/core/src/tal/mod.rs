//! Transfer schemes: predicting primary labels for a task that has only
//! auxiliary labels.
//!
//! Every scheme starts from a multi-task model trained on the source
//! tasks and the target's phenology-only seasons. Selection schemes pick
//! a single prediction handle (the best source task, or a gradient-
//! optimized embedding); averaging schemes build a task set (sources,
//! optionally extended with fictitious embeddings), weight its entries by
//! their auxiliary fit, and predict with the weighted mixture.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SeasonSeries, NUM_LTE};
use crate::models::{
    predict_embedding, predict_multihead, ModelParams, ModelVariant, EMBED_DIM,
};
use crate::numerics::{AdamConfig, AdamState, Tape, Tensor};
use crate::seed::{derive_rng, stream};
use crate::training::{aux_loss, prepare_season};
use crate::{Error, Result};

/// How a task-set entry produces predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EntryHandle {
    /// A trained source task: its head (MultiHead) or its trained
    /// embedding (Embedding).
    SourceTask(String),
    /// A sampled fictitious embedding (Embedding variant only).
    Fictitious(Tensor),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub label: String,
    pub handle: EntryHandle,
}

/// Ordered, uniquely labeled, nonempty roster of prediction handles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    pub entries: Vec<TaskEntry>,
}

impl TaskSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.label.clone()).collect()
    }
}

/// Nonnegative weights over a task set, summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Normalize raw nonnegative scores. Errors if the scores are not
    /// finite-nonnegative or all zero.
    pub fn normalized(raw: Vec<f64>) -> Result<WeightVector> {
        if raw.is_empty() {
            return Err(Error::EmptyTaskSet);
        }
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Other(format!("invalid raw weights: {raw:?}")));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Other("all raw weights are zero".into()));
        }
        Ok(WeightVector(raw.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(n: usize) -> WeightVector {
        WeightVector(vec![1.0 / n as f64; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weight calculation over a task set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    /// Decreasing in loss: w_i proportional to (L_max - L_i + eps).
    Linear,
    /// The literal form w_i proportional to L_i, which rewards high loss;
    /// kept selectable for comparison runs.
    LinearLiteral,
    /// w_i proportional to exp(-tau * L_i).
    Exponential,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weighting::Uniform => write!(f, "uniform"),
            Weighting::Linear => write!(f, "linear"),
            Weighting::LinearLiteral => write!(f, "linear-literal"),
            Weighting::Exponential => write!(f, "exp"),
        }
    }
}

/// Which entries the averaging task set contains: the trained sources,
/// fictitious embeddings (constrained-random or convex linear
/// combinations of all / a random 3-subset of the sources), or both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSetSpec {
    S,
    Cr,
    LrAll,
    Lr3,
    SCr,
    SLrAll,
    SLr3,
}

impl TaskSetSpec {
    fn includes_sources(&self) -> bool {
        matches!(
            self,
            TaskSetSpec::S | TaskSetSpec::SCr | TaskSetSpec::SLrAll | TaskSetSpec::SLr3
        )
    }

    fn random_kind(&self) -> Option<RandomKind> {
        match self {
            TaskSetSpec::S => None,
            TaskSetSpec::Cr | TaskSetSpec::SCr => Some(RandomKind::Cr),
            TaskSetSpec::LrAll | TaskSetSpec::SLrAll => Some(RandomKind::LrAll),
            TaskSetSpec::Lr3 | TaskSetSpec::SLr3 => Some(RandomKind::Lr3),
        }
    }

    /// Set sizes that worked best per embedding kind: 68 constrained-
    /// random entries, 17 linear-combination entries.
    pub fn default_n_random(&self) -> usize {
        match self.random_kind() {
            Some(RandomKind::Cr) => 68,
            Some(RandomKind::LrAll) | Some(RandomKind::Lr3) => 17,
            None => 0,
        }
    }

    pub fn uses_random_embeddings(&self) -> bool {
        self.random_kind().is_some()
    }
}

impl std::fmt::Display for TaskSetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TaskSetSpec::S => write!(f, "S"),
            TaskSetSpec::Cr => write!(f, "CR"),
            TaskSetSpec::LrAll => write!(f, "LR-all"),
            TaskSetSpec::Lr3 => write!(f, "LR-3"),
            TaskSetSpec::SCr => write!(f, "S+CR"),
            TaskSetSpec::SLrAll => write!(f, "S+LR-all"),
            TaskSetSpec::SLr3 => write!(f, "S+LR-3"),
        }
    }
}

enum RandomKind {
    Cr,
    LrAll,
    Lr3,
}

/// Transfer scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TalScheme {
    BestSource,
    OptEmbedding,
    Averaging,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TalConfig {
    pub scheme: TalScheme,
    pub task_set: TaskSetSpec,
    pub n_random: usize,
    pub weighting: Weighting,
    pub tau: f64,
    /// Embedding-optimization budget: Adam steps on the embedding alone,
    /// starting from the mean source embedding.
    pub opt_steps: usize,
    pub opt_lr: f64,
    pub rng_seed: u64,
}

impl Default for TalConfig {
    fn default() -> Self {
        TalConfig {
            scheme: TalScheme::Averaging,
            task_set: TaskSetSpec::SCr,
            n_random: TaskSetSpec::SCr.default_n_random(),
            weighting: Weighting::Exponential,
            tau: 10.0,
            opt_steps: 500,
            opt_lr: 0.01,
            rng_seed: 0,
        }
    }
}

impl TalConfig {
    pub fn averaging(task_set: TaskSetSpec, weighting: Weighting, tau: f64) -> TalConfig {
        TalConfig {
            scheme: TalScheme::Averaging,
            task_set,
            n_random: task_set.default_n_random(),
            weighting,
            tau,
            ..Default::default()
        }
    }

    pub fn best_source() -> TalConfig {
        TalConfig {
            scheme: TalScheme::BestSource,
            task_set: TaskSetSpec::S,
            n_random: 0,
            ..Default::default()
        }
    }

    pub fn opt_embedding() -> TalConfig {
        TalConfig {
            scheme: TalScheme::OptEmbedding,
            task_set: TaskSetSpec::S,
            n_random: 0,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::InvalidConfig("tau must be positive".into()));
        }
        if self.opt_lr <= 0.0 {
            return Err(Error::InvalidConfig("opt_lr must be positive".into()));
        }
        Ok(())
    }
}

/// Per-day 7-vector prediction of one entry under a model.
pub fn entry_prediction(
    model: &ModelParams,
    entry: &TaskEntry,
    season: &SeasonSeries,
) -> Result<Tensor> {
    let weather = prepare_season(&entry.label, season).x;
    match &entry.handle {
        EntryHandle::SourceTask(task) => predict_multihead(model, task, &weather),
        EntryHandle::Fictitious(e) => {
            if model.variant != ModelVariant::Embedding {
                return Err(Error::WrongVariant {
                    op: "entry_prediction (fictitious embedding)",
                    expected: "Embedding",
                });
            }
            predict_embedding(model, e, &weather)
        }
    }
}

fn entry_aux_loss(
    model: &ModelParams,
    entry: &TaskEntry,
    target: &[&SeasonSeries],
) -> Result<f64> {
    aux_loss(|s| entry_prediction(model, entry, s), target)
}

/// The source task whose auxiliary predictions best fit the target data;
/// ties go to the earlier task in roster order.
pub fn select_best_source(model: &ModelParams, target: &[&SeasonSeries]) -> Result<String> {
    let roster = model.roster();
    if roster.is_empty() {
        return Err(Error::EmptySourceSet);
    }
    let losses = source_aux_losses(model, &roster, target)?;
    let mut best = 0usize;
    for i in 1..roster.len() {
        if losses[i] < losses[best] {
            best = i;
        }
    }
    Ok(roster[best].clone())
}

fn source_aux_losses(
    model: &ModelParams,
    roster: &[String],
    target: &[&SeasonSeries],
) -> Result<Vec<f64>> {
    roster
        .par_iter()
        .map(|task| {
            let entry = TaskEntry {
                label: task.clone(),
                handle: EntryHandle::SourceTask(task.clone()),
            };
            entry_aux_loss(model, &entry, target)
        })
        .collect()
}

/// What the embedding search minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbedObjective {
    /// Mean phenology BCE on the target auxiliary data (the TAL setting).
    PhenoBce,
    /// Masked LTE MSE; requires target LTE and is only valid as an oracle
    /// upper-bound method.
    LteMse,
}

pub struct OptimizedEmbedding {
    pub embedding: Tensor,
    pub best_loss: f64,
    pub init_loss: f64,
    pub steps: usize,
}

/// Gradient search over the embedding space with all network weights
/// frozen. Starts from the mean source embedding, runs `opt_steps` Adam
/// steps, and returns the embedding with the lowest observed objective
/// along the trajectory.
pub fn optimize_embedding(
    model: &ModelParams,
    target: &[&SeasonSeries],
    cfg: &TalConfig,
    objective: EmbedObjective,
) -> Result<OptimizedEmbedding> {
    cfg.validate()?;
    if model.variant != ModelVariant::Embedding {
        return Err(Error::WrongVariant {
            op: "optimize_embedding",
            expected: "Embedding",
        });
    }
    if target.is_empty() {
        return Err(Error::InvalidConfig("optimize_embedding: no target seasons".into()));
    }
    let prepared: Vec<_> = target
        .iter()
        .map(|s| prepare_season(&s.task_id, s))
        .collect();
    if objective == EmbedObjective::LteMse && prepared.iter().all(|p| p.lte_days == 0) {
        return Err(Error::NoLteSamples);
    }

    // Loss and gradient of the objective at an embedding.
    let eval = |emb: &Tensor, want_grad: bool| -> (f64, Option<Tensor>) {
        let mut tape = Tape::new();
        let bound = crate::models::BoundModel::bind(model, &mut tape);
        let e = tape.leaf(emb.clone());
        let mut parts = Vec::new();
        let mut cells = 0usize;
        for p in &prepared {
            let x = tape.leaf(p.x.clone());
            let out = bound
                .forward_with_embedding(&mut tape, x, e)
                .expect("embedding variant checked above");
            match objective {
                EmbedObjective::PhenoBce => {
                    let logits = tape.cols(out, crate::models::PHENO_COL0, 4);
                    parts.push(tape.bce_logits_sum(logits, p.pheno.clone()));
                    cells += 4 * p.x.rows();
                }
                EmbedObjective::LteMse => {
                    if p.lte_days > 0 {
                        let pred = tape.cols(out, 0, NUM_LTE);
                        parts.push(tape.masked_sse_sum(pred, p.lte.clone(), p.lte_mask.clone()));
                        cells += NUM_LTE * p.lte_days;
                    }
                }
            }
        }
        let mut iter = parts.into_iter();
        let first = iter.next().expect("nonempty target");
        let total = iter.fold(first, |acc, n| tape.add(acc, n));
        let loss = tape.scale(total, 1.0 / cells as f64);
        let value = tape.value(loss).item();
        let grad = want_grad.then(|| {
            let g = tape.backward(loss);
            g.get_or_zeros(e, &[EMBED_DIM])
        });
        (value, grad)
    };

    let mut emb = model.mean_embedding()?;
    let init_loss = eval(&emb, false).0;
    let mut best = emb.clone();
    let mut best_loss = init_loss;

    let mut adam = AdamState::new(AdamConfig {
        lr: cfg.opt_lr,
        ..Default::default()
    });
    for _ in 0..cfg.opt_steps {
        let (loss, grad) = eval(&emb, true);
        if loss < best_loss {
            best_loss = loss;
            best = emb.clone();
        }
        let mut grads = std::collections::BTreeMap::new();
        grads.insert("embedding".to_string(), grad.expect("gradient requested"));
        adam.step(std::iter::once(("embedding", &mut emb)), &grads)?;
    }
    if cfg.opt_steps > 0 {
        let final_loss = eval(&emb, false).0;
        if final_loss < best_loss {
            best_loss = final_loss;
            best = emb;
        }
    }

    Ok(OptimizedEmbedding {
        embedding: best,
        best_loss,
        init_loss,
        steps: cfg.opt_steps,
    })
}

/// Assemble the averaging task set: source entries and/or sampled
/// fictitious embeddings, deterministic in `cfg.rng_seed`.
pub fn build_task_set(model: &ModelParams, cfg: &TalConfig) -> Result<TaskSet> {
    cfg.validate()?;
    let roster = model.roster();
    if roster.is_empty() {
        return Err(Error::EmptySourceSet);
    }
    let mut entries = Vec::new();
    if cfg.task_set.includes_sources() {
        for task in &roster {
            entries.push(TaskEntry {
                label: task.clone(),
                handle: EntryHandle::SourceTask(task.clone()),
            });
        }
    }

    if let Some(kind) = cfg.task_set.random_kind() {
        if model.variant != ModelVariant::Embedding {
            return Err(Error::WrongVariant {
                op: "build_task_set (random embeddings)",
                expected: "Embedding",
            });
        }
        let sources: Vec<&Tensor> = roster
            .iter()
            .map(|t| model.source_embedding(t))
            .collect::<Result<_>>()?;
        let mut rng = derive_rng(cfg.rng_seed, &[stream::TASK_SET]);
        match kind {
            RandomKind::Cr => {
                // Per-dimension bounds over the source embeddings.
                let mut lo = [f64::INFINITY; EMBED_DIM];
                let mut hi = [f64::NEG_INFINITY; EMBED_DIM];
                for e in &sources {
                    for d in 0..EMBED_DIM {
                        lo[d] = lo[d].min(e.data()[d]);
                        hi[d] = hi[d].max(e.data()[d]);
                    }
                }
                for i in 0..cfg.n_random {
                    let v: Vec<f64> = (0..EMBED_DIM)
                        .map(|d| {
                            if hi[d] > lo[d] {
                                rng.random_range(lo[d]..=hi[d])
                            } else {
                                lo[d]
                            }
                        })
                        .collect();
                    entries.push(TaskEntry {
                        label: format!("cr-{i:03}"),
                        handle: EntryHandle::Fictitious(Tensor::vector(v)),
                    });
                }
            }
            RandomKind::LrAll | RandomKind::Lr3 => {
                let use_all = matches!(kind, RandomKind::LrAll);
                for i in 0..cfg.n_random {
                    let chosen: Vec<usize> = if use_all {
                        (0..sources.len()).collect()
                    } else {
                        let k = 3.min(sources.len());
                        let mut idx = index_sample(&mut rng, sources.len(), k).into_vec();
                        idx.sort_unstable();
                        idx
                    };
                    // Flat Dirichlet over the chosen subset: normalized
                    // unit exponentials.
                    let exps: Vec<f64> = chosen
                        .iter()
                        .map(|_| -(1.0 - rng.random::<f64>()).ln())
                        .collect();
                    let total: f64 = exps.iter().sum();
                    let coeffs: Vec<f64> = exps.iter().map(|e| e / total).collect();
                    let mut v = vec![0.0; EMBED_DIM];
                    for (&src_idx, &c) in chosen.iter().zip(&coeffs) {
                        for d in 0..EMBED_DIM {
                            v[d] += c * sources[src_idx].data()[d];
                        }
                    }
                    entries.push(TaskEntry {
                        label: format!("lr-{i:03}"),
                        handle: EntryHandle::Fictitious(Tensor::vector(v)),
                    });
                }
            }
        }
    }

    if entries.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    Ok(TaskSet { entries })
}

/// Auxiliary loss of every entry on the target data, in entry order.
pub fn entry_aux_losses(
    task_set: &TaskSet,
    model: &ModelParams,
    target: &[&SeasonSeries],
) -> Result<Vec<f64>> {
    task_set
        .entries
        .par_iter()
        .map(|entry| entry_aux_loss(model, entry, target))
        .collect()
}

/// Weights from auxiliary losses under the chosen calculation.
pub fn weights_from_losses(losses: &[f64], weighting: Weighting, tau: f64) -> Result<WeightVector> {
    if losses.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    let n = losses.len();
    match weighting {
        Weighting::Uniform => Ok(WeightVector::uniform(n)),
        Weighting::Exponential => {
            // Shift by the minimum before exponentiating: softmax is
            // shift-invariant and this keeps exp() in range for any tau.
            let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
            let raw: Vec<f64> = losses.iter().map(|l| (-tau * (l - min)).exp()).collect();
            WeightVector::normalized(raw)
        }
        Weighting::Linear => {
            let max = losses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
            if max == min {
                return Ok(WeightVector::uniform(n));
            }
            let eps = 1e-6 * (max - min + 1.0);
            let raw: Vec<f64> = losses.iter().map(|l| max - l + eps).collect();
            WeightVector::normalized(raw)
        }
        Weighting::LinearLiteral => {
            if losses.iter().all(|l| *l == 0.0) {
                return Ok(WeightVector::uniform(n));
            }
            WeightVector::normalized(losses.to_vec())
        }
    }
}

/// Averaging weights for a task set given target auxiliary data.
pub fn compute_weights(
    task_set: &TaskSet,
    model: &ModelParams,
    target: &[&SeasonSeries],
    weighting: Weighting,
    tau: f64,
) -> Result<WeightVector> {
    if task_set.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    if weighting == Weighting::Uniform {
        return Ok(WeightVector::uniform(task_set.len()));
    }
    let losses = entry_aux_losses(task_set, model, target)?;
    weights_from_losses(&losses, weighting, tau)
}

/// Weighted per-day LTE triple of the mixture. Each output cell is the
/// convex combination of the member predictions; a final clamp to the
/// member min/max removes sub-ulp drift so convexity holds exactly.
pub fn mixture_predict(
    task_set: &TaskSet,
    weights: &WeightVector,
    model: &ModelParams,
    season: &SeasonSeries,
) -> Result<Tensor> {
    if task_set.len() != weights.len() {
        return Err(Error::MisalignedWeights {
            entries: task_set.len(),
            weights: weights.len(),
        });
    }
    let members: Vec<Tensor> = task_set
        .entries
        .par_iter()
        .map(|entry| entry_prediction(model, entry, season))
        .collect::<Result<_>>()?;
    let days = members[0].rows();
    let mut out = Tensor::zeros(&[days, NUM_LTE]);
    for d in 0..days {
        for c in 0..NUM_LTE {
            let mut acc = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (m, &w) in members.iter().zip(weights.values()) {
                let v = m.row(d)[c];
                acc += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            out.data_mut()[d * NUM_LTE + c] = acc.clamp(lo, hi);
        }
    }
    Ok(out)
}

/// Result of fitting a transfer scheme to target auxiliary data.
#[derive(Clone, Debug)]
pub enum FittedScheme {
    BestSource(String),
    OptimizedEmbedding(Tensor),
    Averaging {
        task_set: TaskSet,
        weights: WeightVector,
    },
}

#[derive(Clone, Debug)]
pub struct FittedTal {
    pub config: TalConfig,
    pub scheme: FittedScheme,
    /// Auxiliary losses per entry (averaging) or per source (selection),
    /// recorded for the run manifest.
    pub aux_losses: Option<Vec<f64>>,
}

/// Fit a transfer scheme: everything the scheme learns from the target's
/// auxiliary data, ready to predict LTE for any season.
pub fn fit(model: &ModelParams, target: &[&SeasonSeries], cfg: &TalConfig) -> Result<FittedTal> {
    cfg.validate()?;
    match cfg.scheme {
        TalScheme::BestSource => {
            let roster = model.roster();
            let losses = source_aux_losses(model, &roster, target)?;
            let chosen = select_best_source(model, target)?;
            Ok(FittedTal {
                config: cfg.clone(),
                scheme: FittedScheme::BestSource(chosen),
                aux_losses: Some(losses),
            })
        }
        TalScheme::OptEmbedding => {
            let opt = optimize_embedding(model, target, cfg, EmbedObjective::PhenoBce)?;
            Ok(FittedTal {
                config: cfg.clone(),
                scheme: FittedScheme::OptimizedEmbedding(opt.embedding),
                aux_losses: Some(vec![opt.init_loss, opt.best_loss]),
            })
        }
        TalScheme::Averaging => {
            let task_set = build_task_set(model, cfg)?;
            let (weights, losses) = if cfg.weighting == Weighting::Uniform {
                (WeightVector::uniform(task_set.len()), None)
            } else {
                let losses = entry_aux_losses(&task_set, model, target)?;
                (
                    weights_from_losses(&losses, cfg.weighting, cfg.tau)?,
                    Some(losses),
                )
            };
            Ok(FittedTal {
                config: cfg.clone(),
                scheme: FittedScheme::Averaging { task_set, weights },
                aux_losses: losses,
            })
        }
    }
}

/// Oracle variant: the embedding search driven by the target's LTE
/// training data instead of phenology.
pub fn fit_lte_oracle(
    model: &ModelParams,
    target_with_lte: &[&SeasonSeries],
    cfg: &TalConfig,
) -> Result<FittedTal> {
    let opt = optimize_embedding(model, target_with_lte, cfg, EmbedObjective::LteMse)?;
    Ok(FittedTal {
        config: cfg.clone(),
        scheme: FittedScheme::OptimizedEmbedding(opt.embedding),
        aux_losses: Some(vec![opt.init_loss, opt.best_loss]),
    })
}

impl FittedTal {
    /// Per-day LTE triple for a season under the fitted scheme.
    pub fn predict_lte(&self, model: &ModelParams, season: &SeasonSeries) -> Result<Tensor> {
        match &self.scheme {
            FittedScheme::BestSource(task) => {
                let entry = TaskEntry {
                    label: task.clone(),
                    handle: EntryHandle::SourceTask(task.clone()),
                };
                let full = entry_prediction(model, &entry, season)?;
                Ok(lte_cols(&full))
            }
            FittedScheme::OptimizedEmbedding(e) => {
                let weather = prepare_season(&season.task_id, season).x;
                let full = predict_embedding(model, e, &weather)?;
                Ok(lte_cols(&full))
            }
            FittedScheme::Averaging { task_set, weights } => {
                mixture_predict(task_set, weights, model, season)
            }
        }
    }

    /// Replay record: configuration, seed, chosen handle, and the full
    /// weight vector.
    pub fn manifest(&self) -> RunManifest {
        let (chosen_task, optimized_embedding, entry_labels, weights) = match &self.scheme {
            FittedScheme::BestSource(task) => (Some(task.clone()), None, Vec::new(), None),
            FittedScheme::OptimizedEmbedding(e) => {
                (None, Some(e.data().to_vec()), Vec::new(), None)
            }
            FittedScheme::Averaging { task_set, weights } => (
                None,
                None,
                task_set.labels(),
                Some(weights.values().to_vec()),
            ),
        };
        RunManifest {
            config: self.config.clone(),
            chosen_task,
            optimized_embedding,
            entry_labels,
            weights,
            aux_losses: self.aux_losses.clone(),
        }
    }
}

fn lte_cols(full: &Tensor) -> Tensor {
    let days = full.rows();
    let mut out = Tensor::zeros(&[days, NUM_LTE]);
    for d in 0..days {
        out.data_mut()[d * NUM_LTE..(d + 1) * NUM_LTE].copy_from_slice(&full.row(d)[..NUM_LTE]);
    }
    out
}

/// Everything needed to replay a transfer run exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TalConfig,
    pub chosen_task: Option<String>,
    pub optimized_embedding: Option<Vec<f64>>,
    pub entry_labels: Vec<String>,
    pub weights: Option<Vec<f64>>,
    pub aux_losses: Option<Vec<f64>>,
}
