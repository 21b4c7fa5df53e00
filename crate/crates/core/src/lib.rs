//! Transfer via auxiliary labels for grape cold-hardiness prediction.
//!
//! Source cultivars come with both primary labels (LTE cold-hardiness triples)
//! and auxiliary labels (phenology event indicators); the target cultivar has
//! only the auxiliary labels. Multi-task GRU models are trained jointly on
//! both label kinds over the sources, then transfer schemes (best-source
//! selection, embedding optimization, weighted model averaging) produce LTE
//! predictions for the target from its phenology fit alone.
//!
//! Modules:
//! - [`data`]: season ingestion, interpolation, normalization, phenology
//!   encoding, and a synthetic multi-cultivar season generator.
//! - [`numerics`]: dense tensors, a reverse-mode tape, Adam, and a
//!   finite-difference gradient checker.
//! - [`models`]: the GRU backbone and the MultiHead / Embedding architectures.
//! - [`training`]: joint masked-LTE + phenology loss and the epoch loop.
//! - [`tal`]: task sets, weight calculation, mixture prediction, and the
//!   model-selection transfer schemes.
//! - [`harness`]: leave-one-task-out benchmark orchestration, sweeps,
//!   reports, and plots.

pub mod data;
pub mod error;
pub mod harness;
pub mod models;
pub mod numerics;
pub mod seed;
pub mod tal;
pub mod training;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
pub(crate) mod testutil {
    use chrono::NaiveDate;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    use crate::data::{DayRecord, SeasonSeries, NUM_EVENTS, NUM_FEATURES};
    use crate::models::{init_model, ModelParams, ModelVariant, ModelWidths};
    use crate::seed::derive_rng;

    /// Short random season: unit-scale weather, LTE on the given days,
    /// monotone phenology flipping mid-season.
    pub fn make_season(task: &str, days: usize, lte_days: &[usize], rng: &mut ChaCha8Rng) -> SeasonSeries {
        let start = NaiveDate::from_ymd_opt(2005, 9, 7).unwrap();
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
    }

    pub fn tiny_model(variant: ModelVariant, roster: &[&str], seed: u64) -> ModelParams {
        let mut rng = derive_rng(seed, &[97]);
        let roster: Vec<String> = roster.iter().map(|s| s.to_string()).collect();
        init_model(variant, &roster, ModelWidths { h1: 8, h2: 10 }, &mut rng)
    }
}
