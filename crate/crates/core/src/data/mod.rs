//! Season data: ingestion, preprocessing, and synthetic generation.
//!
//! A season is the dormant window September 7 through May 15. Each day
//! carries 12 weather features, an optional LTE triple (the lethal
//! temperature exposure for 10/50/90% bud kill, present only on
//! field-sampling days), and four cumulative phenology-event flags.

mod csv_io;
mod generator;

pub use csv_io::{load_aux_csv, load_csv, save_csv, SCHEMA};
pub use generator::{
    benchmark_config, generate_synthetic, GeneratorConfig, TaskGenParams, WeatherProcess,
};

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NUM_FEATURES: usize = 12;
pub const NUM_EVENTS: usize = 4;
pub const NUM_LTE: usize = 3;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "at_min", "at_max", "at_avg", "rh_min", "rh_max", "rh_avg", "dp_min", "dp_max", "dp_avg",
    "precip", "ws_max", "ws_avg",
];

pub const EVENT_NAMES: [&str; NUM_EVENTS] =
    ["ev_first_swell", "ev_full_swell", "ev_budbreak", "ev_first_leaf"];

/// One calendar day of a season.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    /// Weather features in [`FEATURE_NAMES`] order; NaN marks a missing
    /// cell before interpolation.
    pub weather: [f64; NUM_FEATURES],
    /// (lte10, lte50, lte90) in deg C on sampling days, None elsewhere.
    pub lte: Option<[f64; NUM_LTE]>,
    /// Cumulative event indicators: flag e is true iff event e occurred on
    /// or before this day.
    pub pheno: [bool; NUM_EVENTS],
}

/// One dormant season of one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonSeries {
    pub task_id: String,
    /// Start year of the window, e.g. "2005" for Sep 2005 - May 2006.
    pub season_label: String,
    pub event_dates: [NaiveDate; NUM_EVENTS],
    pub days: Vec<DayRecord>,
}

impl SeasonSeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Number of days carrying an LTE sample.
    pub fn lte_day_count(&self) -> usize {
        self.days.iter().filter(|d| d.lte.is_some()).count()
    }

    /// Fraction of missing weather cells.
    pub fn missing_weather_fraction(&self) -> f64 {
        let total = (self.days.len() * NUM_FEATURES) as f64;
        let missing = self
            .days
            .iter()
            .flat_map(|d| d.weather.iter())
            .filter(|v| v.is_nan())
            .count();
        missing as f64 / total
    }

    /// Drop every LTE sample, keeping weather and phenology. Used to form
    /// target auxiliary data that must not expose primary labels.
    pub fn strip_lte(&self) -> SeasonSeries {
        let mut s = self.clone();
        for d in &mut s.days {
            d.lte = None;
        }
        s
    }
}

/// First and last calendar day of the season starting in `start_year`.
pub fn season_window(start_year: i32) -> (NaiveDate, NaiveDate) {
    let start = NaiveDate::from_ymd_opt(start_year, 9, 7).expect("valid date");
    let end = NaiveDate::from_ymd_opt(start_year + 1, 5, 15).expect("valid date");
    (start, end)
}

/// Day count of the Sep 7 - May 15 window: 251 in common years, 252 when
/// the February inside the window has 29 days.
pub fn expected_season_length(start_year: i32) -> usize {
    let (start, end) = season_window(start_year);
    (end - start).num_days() as usize + 1
}

pub(crate) fn parse_season_year(label: &str) -> Result<i32> {
    label
        .trim()
        .parse::<i32>()
        .map_err(|_| Error::BadSeasonLabel(label.to_string()))
}

/// Per-feature mean and standard deviation over a set of seasons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: [f64; NUM_FEATURES],
    pub std: [f64; NUM_FEATURES],
}

impl FeatureStats {
    /// Population statistics over all non-missing cells.
    pub fn compute<'a>(seasons: impl Iterator<Item = &'a SeasonSeries>) -> FeatureStats {
        let mut sum = [0.0; NUM_FEATURES];
        let mut sum_sq = [0.0; NUM_FEATURES];
        let mut count = [0usize; NUM_FEATURES];
        for season in seasons {
            for day in &season.days {
                for f in 0..NUM_FEATURES {
                    let v = day.weather[f];
                    if !v.is_nan() {
                        sum[f] += v;
                        sum_sq[f] += v * v;
                        count[f] += 1;
                    }
                }
            }
        }
        let mut mean = [0.0; NUM_FEATURES];
        let mut std = [0.0; NUM_FEATURES];
        for f in 0..NUM_FEATURES {
            if count[f] > 0 {
                let n = count[f] as f64;
                mean[f] = sum[f] / n;
                std[f] = (sum_sq[f] / n - mean[f] * mean[f]).max(0.0).sqrt();
            }
        }
        FeatureStats { mean, std }
    }
}

/// A roster of tasks, each holding its seasons, plus normalization stats.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub tasks: BTreeMap<String, Vec<SeasonSeries>>,
    pub feature_stats: Option<FeatureStats>,
}

impl Dataset {
    pub fn task_ids(&self) -> Vec<String> {
        self.tasks.keys().cloned().collect()
    }

    pub fn seasons(&self, task: &str) -> Result<&[SeasonSeries]> {
        self.tasks
            .get(task)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownTask(task.to_string()))
    }

    pub fn all_seasons(&self) -> impl Iterator<Item = &SeasonSeries> {
        self.tasks.values().flatten()
    }

    pub fn total_seasons(&self) -> usize {
        self.tasks.values().map(Vec::len).sum()
    }

    pub fn compute_feature_stats(&self) -> FeatureStats {
        FeatureStats::compute(self.all_seasons())
    }
}

/// Fill missing weather cells by linear interpolation between the nearest
/// observed neighbors; leading and trailing gaps take the nearest observed
/// value. Observed cells are never altered.
pub fn interpolate_weather(series: &SeasonSeries) -> Result<SeasonSeries> {
    let n = series.days.len();
    let mut out = series.clone();
    for f in 0..NUM_FEATURES {
        let observed: Vec<usize> = (0..n)
            .filter(|&i| !series.days[i].weather[f].is_nan())
            .collect();
        if observed.is_empty() {
            return Err(Error::FeatureAllMissing {
                feature: FEATURE_NAMES[f],
                task: series.task_id.clone(),
                season: series.season_label.clone(),
            });
        }
        if observed.len() == n {
            continue;
        }
        let mut next_obs = 0usize;
        for i in 0..n {
            if !series.days[i].weather[f].is_nan() {
                continue;
            }
            while next_obs < observed.len() && observed[next_obs] < i {
                next_obs += 1;
            }
            let value = if next_obs == 0 {
                // Leading gap: extend the first observation.
                series.days[observed[0]].weather[f]
            } else if next_obs == observed.len() {
                // Trailing gap: extend the last observation.
                series.days[observed[observed.len() - 1]].weather[f]
            } else {
                let (lo, hi) = (observed[next_obs - 1], observed[next_obs]);
                let (vlo, vhi) = (series.days[lo].weather[f], series.days[hi].weather[f]);
                let t = (i - lo) as f64 / (hi - lo) as f64;
                vlo + t * (vhi - vlo)
            };
            out.days[i].weather[f] = value;
        }
    }
    Ok(out)
}

/// Standardize weather features to zero mean and unit variance. LTE targets
/// stay in deg C so downstream RMSE is directly interpretable. Stats are
/// taken from the dataset itself when not already present.
pub fn normalize(dataset: &Dataset) -> Result<Dataset> {
    let stats = match &dataset.feature_stats {
        Some(s) => s.clone(),
        None => dataset.compute_feature_stats(),
    };
    normalize_with(dataset, &stats)
}

/// Standardize a single season with training-set statistics.
pub fn normalize_season(season: &SeasonSeries, stats: &FeatureStats) -> SeasonSeries {
    let mut out = season.clone();
    for day in &mut out.days {
        for f in 0..NUM_FEATURES {
            day.weather[f] = (day.weather[f] - stats.mean[f]) / stats.std[f];
        }
    }
    out
}

/// Standardize with externally supplied (training-set) statistics.
pub fn normalize_with(dataset: &Dataset, stats: &FeatureStats) -> Result<Dataset> {
    for f in 0..NUM_FEATURES {
        if stats.std[f] <= 0.0 {
            return Err(Error::ZeroVariance(FEATURE_NAMES[f]));
        }
    }
    let mut out = dataset.clone();
    for seasons in out.tasks.values_mut() {
        for season in seasons {
            for day in &mut season.days {
                for f in 0..NUM_FEATURES {
                    day.weather[f] = (day.weather[f] - stats.mean[f]) / stats.std[f];
                }
            }
        }
    }
    out.feature_stats = Some(stats.clone());
    Ok(out)
}

/// Set the cumulative event flags of a season from its event dates:
/// flag e on day t is true iff date_e <= date_t. Out-of-order event dates
/// are retained with a warning.
pub fn encode_phenology(event_dates: [NaiveDate; NUM_EVENTS], season: &SeasonSeries) -> SeasonSeries {
    for e in 1..NUM_EVENTS {
        if event_dates[e] < event_dates[e - 1] {
            log::warn!(
                "{}/{}: event {} dated before {} ({} < {})",
                season.task_id,
                season.season_label,
                EVENT_NAMES[e],
                EVENT_NAMES[e - 1],
                event_dates[e],
                event_dates[e - 1]
            );
        }
    }
    let mut out = season.clone();
    out.event_dates = event_dates;
    for day in &mut out.days {
        for e in 0..NUM_EVENTS {
            day.pheno[e] = event_dates[e] <= day.date;
        }
    }
    out
}

pub(crate) fn full_window_days(start_year: i32) -> Vec<NaiveDate> {
    let (start, end) = season_window(start_year);
    let mut days = Vec::with_capacity(expected_season_length(start_year));
    let mut d = start;
    while d <= end {
        days.push(d);
        d = d + Days::new(1);
    }
    days
}

pub(crate) fn day_of_year(date: NaiveDate) -> f64 {
    date.ordinal() as f64
}
