//! Joint training on masked LTE regression and phenology classification.
//!
//! The loss is `lambda_lte * MSE + lambda_pheno * BCE`, where the MSE is
//! the mean over all LTE-sampled days and the three LTE channels (the
//! triple is masked jointly: a day has all of its LTE values or none),
//! and the BCE-with-logits is the mean over every day and the four
//! phenology channels. Both reductions are means so the weights stay
//! scale-comparable across variable-length seasons.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SeasonSeries, NUM_EVENTS, NUM_FEATURES, NUM_LTE};
use crate::models::{
    init_model, BoundModel, ModelParams, ModelVariant, ModelWidths, LTE50_COL, PHENO_COL0,
};
use crate::numerics::{
    gradcheck, softplus, AdamConfig, AdamState, EvalOutput, GradcheckReport, NodeId, Tape, Tensor,
};
use crate::seed::{derive_rng, stream};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: ModelVariant,
    /// Desk-scale default 60; the full-size setup trains for 400.
    pub epochs: usize,
    /// Seasons per batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_lte: f64,
    pub lambda_pheno: f64,
    pub widths: ModelWidths,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: ModelVariant::Embedding,
            epochs: 60,
            batch_size: 12,
            learning_rate: 0.001,
            lambda_lte: 1.0,
            lambda_pheno: 1.0,
            widths: ModelWidths::default(),
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    /// Full-size configuration: 1024/2048 widths, 400 epochs.
    pub fn paper_scale(variant: ModelVariant) -> Self {
        TrainConfig {
            variant,
            epochs: 400,
            widths: ModelWidths::paper(),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0
            || self.batch_size == 0
            || self.learning_rate <= 0.0
            || self.lambda_lte < 0.0
            || self.lambda_pheno < 0.0
        {
            return Err(Error::InvalidConfig(
                "epochs, batch_size, learning_rate must be positive; loss weights nonnegative"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// One training unit: a season belonging to a task.
pub type Batch<'a> = Vec<(String, &'a SeasonSeries)>;

/// Season tensors ready for the forward pass.
pub struct PreparedSeason {
    pub task: String,
    pub x: Tensor,
    pub lte: Tensor,
    pub lte_mask: Vec<bool>,
    pub lte_days: usize,
    pub pheno: Tensor,
}

/// Assemble tensors from a preprocessed (interpolated, normalized,
/// phenology-encoded) season.
pub fn prepare_season(task: &str, season: &SeasonSeries) -> PreparedSeason {
    let days = season.days.len();
    let mut x = Vec::with_capacity(days * NUM_FEATURES);
    let mut lte = Vec::with_capacity(days * NUM_LTE);
    let mut mask = Vec::with_capacity(days);
    let mut pheno = Vec::with_capacity(days * NUM_EVENTS);
    let mut lte_days = 0usize;
    for day in &season.days {
        x.extend_from_slice(&day.weather);
        match day.lte {
            Some(triple) => {
                lte.extend_from_slice(&triple);
                mask.push(true);
                lte_days += 1;
            }
            None => {
                lte.extend_from_slice(&[0.0; NUM_LTE]);
                mask.push(false);
            }
        }
        pheno.extend(day.pheno.iter().map(|&p| if p { 1.0 } else { 0.0 }));
    }
    PreparedSeason {
        task: task.to_string(),
        x: Tensor::matrix(days, NUM_FEATURES, x),
        lte: Tensor::matrix(days, NUM_LTE, lte),
        lte_mask: mask,
        lte_days,
        pheno: Tensor::matrix(days, NUM_EVENTS, pheno),
    }
}

struct BatchLoss {
    loss: NodeId,
    sse_sum: f64,
    bce_sum: f64,
    mse_cells: usize,
    bce_cells: usize,
}

/// Build the joint loss graph for a batch on an already-bound model.
fn batch_loss_graph(
    tape: &mut Tape,
    bound: &BoundModel,
    batch: &[&PreparedSeason],
    lambda_lte: f64,
    lambda_pheno: f64,
) -> Result<BatchLoss> {
    let mut sse_nodes = Vec::new();
    let mut bce_nodes = Vec::new();
    let mut mse_cells = 0usize;
    let mut bce_cells = 0usize;

    for item in batch {
        let x = tape.leaf(item.x.clone());
        let out = bound.forward_for_task(tape, x, &item.task)?;
        if item.lte_days > 0 {
            let lte_pred = tape.cols(out, 0, NUM_LTE);
            let sse = tape.masked_sse_sum(lte_pred, item.lte.clone(), item.lte_mask.clone());
            sse_nodes.push(sse);
            mse_cells += NUM_LTE * item.lte_days;
        }
        let logits = tape.cols(out, PHENO_COL0, NUM_EVENTS);
        let bce = tape.bce_logits_sum(logits, item.pheno.clone());
        bce_nodes.push(bce);
        bce_cells += NUM_EVENTS * item.x.rows();
    }

    if mse_cells == 0 && lambda_pheno == 0.0 {
        return Err(Error::NoSupervisedSignal);
    }

    let fold = |tape: &mut Tape, nodes: Vec<NodeId>| -> Option<NodeId> {
        let mut iter = nodes.into_iter();
        let first = iter.next()?;
        Some(iter.fold(first, |acc, n| tape.add(acc, n)))
    };

    let sse_total = fold(tape, sse_nodes);
    let bce_total = fold(tape, bce_nodes).expect("batch is nonempty");
    let sse_sum = sse_total.map(|n| tape.value(n).item()).unwrap_or(0.0);
    let bce_sum = tape.value(bce_total).item();

    let mut terms = Vec::new();
    if let Some(sse) = sse_total {
        if lambda_lte > 0.0 {
            terms.push(tape.scale(sse, lambda_lte / mse_cells as f64));
        }
    }
    if lambda_pheno > 0.0 {
        terms.push(tape.scale(bce_total, lambda_pheno / bce_cells as f64));
    }
    let loss = fold(tape, terms).ok_or(Error::NoSupervisedSignal)?;

    Ok(BatchLoss {
        loss,
        sse_sum,
        bce_sum,
        mse_cells,
        bce_cells,
    })
}

/// Joint loss of a batch of preprocessed seasons under a model.
pub fn joint_loss(
    model: &ModelParams,
    batch: &Batch,
    lambda_lte: f64,
    lambda_pheno: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let prepared: Vec<PreparedSeason> = batch
        .iter()
        .map(|(task, season)| prepare_season(task, season))
        .collect();
    let refs: Vec<&PreparedSeason> = prepared.iter().collect();
    let mut tape = Tape::new();
    let bound = BoundModel::bind(model, &mut tape);
    let bl = batch_loss_graph(&mut tape, &bound, &refs, lambda_lte, lambda_pheno)?;
    Ok(tape.value(bl.loss).item())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub joint_loss: f64,
    pub lte_mse: f64,
    pub pheno_bce: f64,
}

/// Training log CSV: epoch, joint loss, lte mse, pheno bce.
pub fn save_training_log(log: &[EpochStats], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    writeln!(f, "epoch,joint_loss,lte_mse,pheno_bce")?;
    for s in log {
        writeln!(f, "{},{},{},{}", s.epoch, s.joint_loss, s.lte_mse, s.pheno_bce)?;
    }
    Ok(())
}

pub struct TrainOutcome {
    pub model: ModelParams,
    pub log: Vec<EpochStats>,
}

/// Train a model on the given source tasks of a preprocessed dataset.
/// Fully deterministic in `cfg.rng_seed`: initialization, shuffling, and
/// every update replay identically.
pub fn train(dataset: &Dataset, source_tasks: &[String], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if source_tasks.is_empty() {
        return Err(Error::EmptySourceSet);
    }
    let mut roster: Vec<String> = source_tasks.to_vec();
    roster.sort();
    roster.dedup();
    for task in &roster {
        let seasons = dataset.seasons(task)?;
        if seasons.is_empty() {
            return Err(Error::Other(format!("task `{task}` has no training seasons")));
        }
    }

    let mut init_rng = derive_rng(cfg.rng_seed, &[stream::INIT]);
    let mut model = init_model(cfg.variant, &roster, cfg.widths, &mut init_rng);

    let mut prepared: Vec<PreparedSeason> = Vec::new();
    for task in &roster {
        for season in dataset.seasons(task)? {
            prepared.push(prepare_season(task, season));
        }
    }

    // Deg-C-scale regression: start the LTE output biases at the masked
    // per-channel target means instead of zero, so heads do not spend
    // their first epochs closing a ~15 deg C offset.
    init_lte_biases(&mut model, &prepared);

    let mut adam = AdamState::new(AdamConfig::with_lr(cfg.learning_rate));
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..prepared.len()).collect();

    for epoch in 0..cfg.epochs {
        let mut rng = derive_rng(cfg.rng_seed, &[stream::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);

        let mut sse_sum = 0.0;
        let mut bce_sum = 0.0;
        let mut mse_cells = 0usize;
        let mut bce_cells = 0usize;

        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&PreparedSeason> = chunk.iter().map(|&i| &prepared[i]).collect();
            let mut tape = Tape::new();
            let bound = BoundModel::bind(&model, &mut tape);
            let bl = batch_loss_graph(&mut tape, &bound, &batch, cfg.lambda_lte, cfg.lambda_pheno)?;
            let grads = tape.backward(bl.loss);
            let grad_map = bound.grads_by_name(&tape, &grads);
            let mut entries = model.param_entries_mut();
            adam.step(
                entries.iter_mut().map(|(name, t)| (name.as_str(), &mut **t)),
                &grad_map,
            )?;
            sse_sum += bl.sse_sum;
            bce_sum += bl.bce_sum;
            mse_cells += bl.mse_cells;
            bce_cells += bl.bce_cells;
        }

        let lte_mse = if mse_cells > 0 { sse_sum / mse_cells as f64 } else { 0.0 };
        let pheno_bce = if bce_cells > 0 { bce_sum / bce_cells as f64 } else { 0.0 };
        let stats = EpochStats {
            epoch,
            joint_loss: cfg.lambda_lte * lte_mse + cfg.lambda_pheno * pheno_bce,
            lte_mse,
            pheno_bce,
        };
        log::debug!(
            "epoch {:>4}: joint {:.5}  lte_mse {:.5}  pheno_bce {:.5}",
            stats.epoch,
            stats.joint_loss,
            stats.lte_mse,
            stats.pheno_bce
        );
        log.push(stats);
    }

    Ok(TrainOutcome { model, log })
}

fn init_lte_biases(model: &mut ModelParams, prepared: &[PreparedSeason]) {
    let mut sums = [0.0; NUM_LTE];
    let mut count = 0usize;
    for p in prepared {
        for (d, &masked) in p.lte_mask.iter().enumerate() {
            if masked {
                for c in 0..NUM_LTE {
                    sums[c] += p.lte.row(d)[c];
                }
                count += 1;
            }
        }
    }
    if count == 0 {
        return;
    }
    let means: Vec<f64> = sums.iter().map(|s| s / count as f64).collect();
    let set = |lin: &mut crate::models::LinearParams| {
        lin.b.data_mut()[..NUM_LTE].copy_from_slice(&means);
    };
    match &mut model.cond {
        crate::models::TaskConditioning::Heads(heads) => heads.values_mut().for_each(set),
        crate::models::TaskConditioning::Embedding { head, .. } => set(head),
    }
}

/// RMSE of the lte50 channel over all sampled days of the given seasons,
/// in deg C.
pub fn eval_rmse<F>(predict: F, seasons: &[&SeasonSeries]) -> Result<f64>
where
    F: Fn(&SeasonSeries) -> Result<Tensor>,
{
    let mut sq_sum = 0.0;
    let mut n = 0usize;
    for season in seasons {
        let pred = predict(season)?;
        for (d, day) in season.days.iter().enumerate() {
            if let Some(triple) = day.lte {
                let e = pred.row(d)[LTE50_COL] - triple[1];
                sq_sum += e * e;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::NoLteSamples);
    }
    Ok((sq_sum / n as f64).sqrt())
}

/// Mean phenology BCE-with-logits over every day and channel of the given
/// seasons. This is the auxiliary target loss used by all transfer
/// schemes.
pub fn aux_loss<F>(predict: F, seasons: &[&SeasonSeries]) -> Result<f64>
where
    F: Fn(&SeasonSeries) -> Result<Tensor>,
{
    if seasons.is_empty() {
        return Err(Error::InvalidConfig("aux_loss: no seasons".into()));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for season in seasons {
        let pred = predict(season)?;
        for (d, day) in season.days.iter().enumerate() {
            let row = pred.row(d);
            for e in 0..NUM_EVENTS {
                let logit = row[PHENO_COL0 + e];
                let label = if day.pheno[e] { 1.0 } else { 0.0 };
                sum += softplus(logit) - logit * label;
                n += 1;
            }
        }
    }
    Ok(sum / n as f64)
}

/// Gradient check of the joint loss on a small batch: analytic gradients
/// against central differences over a random coordinate sample.
pub fn gradcheck_model(
    model: &ModelParams,
    batch: &Batch,
    h: f64,
    max_coords: usize,
    seed: u64,
) -> Result<GradcheckReport> {
    let prepared: Vec<PreparedSeason> = batch
        .iter()
        .map(|(task, season)| prepare_season(task, season))
        .collect();
    let refs: Vec<&PreparedSeason> = prepared.iter().collect();
    let params = model.export_params();
    let work = model.clone();

    let eval = |p: &BTreeMap<String, Tensor>, want_grads: bool| -> EvalOutput {
        let mut m = work.clone();
        m.import_params(p).expect("same structure");
        let mut tape = Tape::new();
        let bound = BoundModel::bind(&m, &mut tape);
        let bl = batch_loss_graph(&mut tape, &bound, &refs, 1.0, 1.0)
            .expect("gradcheck batch must produce a loss");
        let relu_signs = tape.relu_signature();
        let grads = want_grads.then(|| {
            let g = tape.backward(bl.loss);
            bound.grads_by_name(&tape, &g)
        });
        EvalOutput {
            loss: tape.value(bl.loss).item(),
            grads,
            relu_signs,
        }
    };

    let mut rng = derive_rng(seed, &[stream::GRADCHECK]);
    Ok(gradcheck(&params, eval, h, max_coords, &mut rng))
}
