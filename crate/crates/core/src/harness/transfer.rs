//! Bundle-driven transfer: fit a scheme on phenology-only data and emit
//! per-day LTE predictions.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::{normalize_season, Dataset, SeasonSeries, NUM_LTE};
use crate::models::ModelBundle;
use crate::tal::{fit, RunManifest, TalConfig};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeasonPrediction {
    pub task_id: String,
    pub season_label: String,
    pub dates: Vec<NaiveDate>,
    /// Per-day (lte10, lte50, lte90) in deg C.
    pub lte: Vec<[f64; NUM_LTE]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferOutcome {
    pub predictions: Vec<SeasonPrediction>,
    pub manifest: RunManifest,
}

/// Fit the configured scheme on every season of the auxiliary dataset
/// (weather plus phenology; any LTE present is ignored) and predict LTE
/// for those seasons. Normalization uses the bundle's training
/// statistics.
pub fn run_transfer(
    bundle: &ModelBundle,
    aux: &Dataset,
    tal_cfg: &TalConfig,
) -> Result<TransferOutcome> {
    let seasons: Vec<SeasonSeries> = aux
        .all_seasons()
        .map(|s| normalize_season(&s.strip_lte(), &bundle.feature_stats))
        .collect();
    if seasons.is_empty() {
        return Err(Error::InvalidConfig("transfer: no auxiliary seasons".into()));
    }
    let refs: Vec<&SeasonSeries> = seasons.iter().collect();
    let fitted = fit(&bundle.model, &refs, tal_cfg)?;

    let mut predictions = Vec::with_capacity(seasons.len());
    for season in &seasons {
        let lte = fitted.predict_lte(&bundle.model, season)?;
        predictions.push(SeasonPrediction {
            task_id: season.task_id.clone(),
            season_label: season.season_label.clone(),
            dates: season.days.iter().map(|d| d.date).collect(),
            lte: (0..season.days.len())
                .map(|d| [lte.row(d)[0], lte.row(d)[1], lte.row(d)[2]])
                .collect(),
        });
    }
    Ok(TransferOutcome {
        predictions,
        manifest: fitted.manifest(),
    })
}

/// Predictions CSV: task_id, season, date, lte10, lte50, lte90.
pub fn save_predictions_csv(
    predictions: &[SeasonPrediction],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    writeln!(f, "task_id,season,date,lte10,lte50,lte90")?;
    for p in predictions {
        for (date, lte) in p.dates.iter().zip(&p.lte) {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                p.task_id, p.season_label, date, lte[0], lte[1], lte[2]
            )?;
        }
    }
    Ok(())
}
