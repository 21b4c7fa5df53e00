//! Synthetic multi-task season generator.
//!
//! Weather is a seasonal sinusoid plus AR(1) perturbations, shared by all
//! tasks within a season (one site, many cultivars). Latent LTE50 follows a
//! daily acclimation/deacclimation recurrence driven by average temperature:
//! cold days push hardiness toward a per-task depth, warm days pull it back
//! toward the autumn baseline, with deacclimation unlocked by accumulated
//! chill. Phenology events fire when growing degree days, accumulated after
//! the chill requirement is met, cross four per-task thresholds.
//!
//! The field-sampling schedule and measurement-noise draws are also shared
//! per season, so two tasks with identical parameters produce identical
//! label sequences. Everything is a pure function of `rng_seed`.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    day_of_year, encode_phenology, season_window, DayRecord, Dataset, SeasonSeries, NUM_EVENTS,
    NUM_FEATURES,
};
use crate::seed::{derive_rng, stream};
use crate::{Error, Result};

/// Latent dynamics of one synthetic task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskGenParams {
    pub task_id: String,
    /// LTE50 at the start of dormancy, deg C.
    pub hardiness_init: f64,
    /// Asymptotic midwinter LTE50, deg C.
    pub hardiness_depth: f64,
    /// Gain toward depth per deg C-day of cold drive.
    pub acclimation_rate: f64,
    /// Gain toward the baseline per deg C-day of warm drive.
    pub deacclimation_rate: f64,
    /// Cold drive accumulates below this average temperature.
    pub acclim_ref_temp: f64,
    /// Warm drive accumulates above this average temperature.
    pub deacclim_ref_temp: f64,
    /// Chill days required before forcing (and full deacclimation) starts.
    pub chill_requirement: f64,
    /// Base temperature for growing degree days.
    pub gdd_base: f64,
    /// Strictly increasing GDD thresholds for the four events.
    pub gdd_thresholds: [f64; NUM_EVENTS],
    /// Offset of LTE10/LTE90 from LTE50, deg C.
    pub lte_spread: f64,
    /// Std of measurement noise on observed LTE.
    pub obs_noise_std: f64,
    /// Std of daily latent-process noise.
    pub process_noise_std: f64,
    /// Per-task season count, overriding `seasons_per_task`.
    pub seasons: Option<usize>,
}

/// Site-level weather process shared by all tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherProcess {
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    /// Day of year at which the seasonal temperature curve bottoms out.
    pub coldest_doy: f64,
    pub temp_ar1: f64,
    pub temp_noise_std: f64,
    pub diurnal_range: f64,
    pub rh_mean: f64,
    pub rh_amplitude: f64,
    pub rh_ar1: f64,
    pub rh_noise_std: f64,
    pub precip_wet_prob: f64,
    pub precip_mean_mm: f64,
    pub wind_mean: f64,
    pub wind_noise_std: f64,
}

impl Default for WeatherProcess {
    fn default() -> Self {
        WeatherProcess {
            temp_mean: 8.5,
            temp_amplitude: 12.5,
            coldest_doy: 10.0,
            temp_ar1: 0.72,
            temp_noise_std: 2.2,
            diurnal_range: 8.5,
            rh_mean: 72.0,
            rh_amplitude: 12.0,
            rh_ar1: 0.6,
            rh_noise_std: 6.0,
            precip_wet_prob: 0.28,
            precip_mean_mm: 3.5,
            wind_mean: 2.2,
            wind_noise_std: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub rng_seed: u64,
    pub seasons_per_task: usize,
    pub start_year: i32,
    /// First LTE sampling day index, drawn uniformly from this range.
    pub first_obs_day_min: usize,
    pub first_obs_day_max: usize,
    /// Gap between samples, drawn uniformly from this range (roughly
    /// bi-weekly field visits).
    pub obs_gap_min: usize,
    pub obs_gap_max: usize,
    pub weather: WeatherProcess,
    pub tasks: Vec<TaskGenParams>,
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        if self.tasks.len() < 2 {
            return Err(Error::InvalidConfig(
                "generator needs at least 2 tasks".into(),
            ));
        }
        if self.seasons_per_task < 1 {
            return Err(Error::InvalidConfig("seasons_per_task must be >= 1".into()));
        }
        if self.first_obs_day_min > self.first_obs_day_max
            || self.obs_gap_min > self.obs_gap_max
            || self.obs_gap_min == 0
        {
            return Err(Error::InvalidConfig("bad observation cadence".into()));
        }
        for t in &self.tasks {
            let th = &t.gdd_thresholds;
            if !(th[0] < th[1] && th[1] < th[2] && th[2] < th[3]) {
                return Err(Error::InvalidConfig(format!(
                    "task {}: gdd thresholds must be strictly increasing",
                    t.task_id
                )));
            }
        }
        Ok(())
    }

    fn task_season_count(&self, task: &TaskGenParams) -> usize {
        task.seasons.unwrap_or(self.seasons_per_task)
    }
}

/// Benchmark roster: `n_tasks` cultivars spread along a single
/// earliness/hardiness gradient, so tasks with similar phenology also have
/// similar cold-hardiness dynamics.
pub fn benchmark_config(n_tasks: usize, seasons_per_task: usize, rng_seed: u64) -> GeneratorConfig {
    let tasks = (0..n_tasks)
        .map(|i| {
            let phi = if n_tasks > 1 {
                i as f64 / (n_tasks - 1) as f64
            } else {
                0.0
            };
            gradient_task(&format!("cv{i:02}"), phi)
        })
        .collect();
    GeneratorConfig {
        rng_seed,
        seasons_per_task,
        start_year: 2000,
        first_obs_day_min: 6,
        first_obs_day_max: 12,
        obs_gap_min: 11,
        obs_gap_max: 17,
        weather: WeatherProcess::default(),
        tasks,
    }
}

/// Task parameters at position `phi` in [0, 1] along the gradient.
pub fn gradient_task(task_id: &str, phi: f64) -> TaskGenParams {
    TaskGenParams {
        task_id: task_id.to_string(),
        hardiness_init: -8.5 - 1.5 * phi,
        hardiness_depth: -19.0 - 7.0 * phi,
        acclimation_rate: 0.035 + 0.025 * phi,
        deacclimation_rate: 0.08 + 0.06 * phi,
        acclim_ref_temp: 11.0 + 2.0 * phi,
        deacclim_ref_temp: 5.0 - 1.0 * phi,
        chill_requirement: 25.0 + 40.0 * phi,
        gdd_base: 5.0,
        gdd_thresholds: [
            50.0 + 160.0 * phi,
            78.0 + 164.0 * phi,
            106.0 + 168.0 * phi,
            134.0 + 172.0 * phi,
        ],
        lte_spread: 1.3 + 0.6 * phi,
        obs_noise_std: 0.3 + 0.1 * phi,
        process_noise_std: 0.10 + 0.05 * phi,
        seasons: None,
    }
}

struct WeatherPath {
    dates: Vec<NaiveDate>,
    features: Vec<[f64; NUM_FEATURES]>,
    window_len: usize,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Simulate site weather from Sep 7 through Jul 31 of the following year.
/// The extra post-window days exist only to date late phenology events.
fn gen_weather(cfg: &GeneratorConfig, season_idx: usize) -> WeatherPath {
    let w = &cfg.weather;
    let year = cfg.start_year + season_idx as i32;
    let (start, window_end) = season_window(year);
    let sim_end = NaiveDate::from_ymd_opt(year + 1, 7, 31).expect("valid date");

    let mut rng = derive_rng(cfg.rng_seed, &[stream::WEATHER, season_idx as u64]);
    let mut dates = Vec::new();
    let mut features = Vec::new();
    let mut temp_eps = 0.0;
    let mut rh_eps = 0.0;

    let mut date = start;
    while date <= sim_end {
        let phase = 2.0 * std::f64::consts::PI * (day_of_year(date) - w.coldest_doy) / 365.25;
        temp_eps = w.temp_ar1 * temp_eps + w.temp_noise_std * normal(&mut rng);
        let at_avg = w.temp_mean - w.temp_amplitude * phase.cos() + temp_eps;
        let n1: f64 = normal(&mut rng);
        let n2: f64 = normal(&mut rng);
        let at_min = at_avg - w.diurnal_range * (0.5 + 0.08 * n1.abs());
        let at_max = at_avg + w.diurnal_range * (0.5 + 0.08 * n2.abs());

        rh_eps = w.rh_ar1 * rh_eps + w.rh_noise_std * normal(&mut rng);
        let rh_avg = (w.rh_mean + w.rh_amplitude * phase.cos() + rh_eps).clamp(25.0, 99.0);
        let rh_min = (rh_avg - 13.0 - 4.0 * normal(&mut rng).abs()).clamp(10.0, 99.0);
        let rh_max = (rh_avg + 9.0 + 3.0 * normal(&mut rng).abs()).clamp(rh_avg, 100.0);

        // Rule-of-thumb dew point from temperature and humidity.
        let dp_avg = at_avg - (100.0 - rh_avg) / 5.0;
        let dp_min = dp_avg - 0.35 * w.diurnal_range;
        let dp_max = dp_avg + 0.30 * w.diurnal_range;

        let wet: f64 = rng.random();
        let amount: f64 = rng.random();
        let precip = if wet < w.precip_wet_prob {
            -w.precip_mean_mm * (1.0 - amount).ln()
        } else {
            0.0
        };

        let ws_avg = (w.wind_mean + w.wind_noise_std * normal(&mut rng)).max(0.2);
        let ws_max = ws_avg * (1.4 + 0.3 * normal(&mut rng).abs());

        features.push([
            at_min, at_max, at_avg, rh_min, rh_max, rh_avg, dp_min, dp_max, dp_avg, precip,
            ws_max, ws_avg,
        ]);
        dates.push(date);
        date = date + Days::new(1);
    }

    let window_len = (window_end - start).num_days() as usize + 1;
    WeatherPath {
        dates,
        features,
        window_len,
    }
}

struct SeasonNoise {
    obs_days: Vec<usize>,
    obs_value: Vec<f64>,
    obs_spread: Vec<f64>,
    process: Vec<f64>,
}

/// Sampling schedule and unit-scale noise paths, shared by every task in a
/// season: scientists visit all cultivars on the same field days.
fn gen_season_noise(cfg: &GeneratorConfig, season_idx: usize, window_len: usize) -> SeasonNoise {
    let mut srng = derive_rng(cfg.rng_seed, &[stream::SCHEDULE, season_idx as u64]);
    let mut obs_days = Vec::new();
    let mut d = srng.random_range(cfg.first_obs_day_min..=cfg.first_obs_day_max);
    while d < window_len {
        obs_days.push(d);
        d += srng.random_range(cfg.obs_gap_min..=cfg.obs_gap_max);
    }

    let mut orng = derive_rng(cfg.rng_seed, &[stream::OBS_NOISE, season_idx as u64]);
    let obs_value = (0..obs_days.len()).map(|_| normal(&mut orng)).collect();
    let obs_spread = (0..obs_days.len()).map(|_| normal(&mut orng)).collect();

    let mut prng = derive_rng(cfg.rng_seed, &[stream::PROCESS_NOISE, season_idx as u64]);
    let process = (0..window_len).map(|_| normal(&mut prng)).collect();

    SeasonNoise {
        obs_days,
        obs_value,
        obs_spread,
        process,
    }
}

/// Latent LTE50 path over the window plus dated phenology events.
fn gen_labels(
    task: &TaskGenParams,
    weather: &WeatherPath,
    noise: &SeasonNoise,
) -> (Vec<f64>, [NaiveDate; NUM_EVENTS]) {
    let avg = |i: usize| weather.features[i][2];

    let mut latent = Vec::with_capacity(weather.window_len);
    let mut h = task.hardiness_init;
    let mut chill = 0.0;
    latent.push(h);
    for i in 1..weather.window_len {
        let t = avg(i);
        if t > -2.0 && t < 7.0 {
            chill += 1.0;
        }
        let release = (chill / task.chill_requirement).min(1.0);
        let cold = (task.acclim_ref_temp - t).max(0.0);
        let warm = (t - task.deacclim_ref_temp).max(0.0);
        let span = task.hardiness_depth.abs();
        h += task.acclimation_rate * cold * (task.hardiness_depth - h) / span;
        h += task.deacclimation_rate * (0.15 + 0.85 * release) * warm
            * (task.hardiness_init - h)
            / span;
        h += task.process_noise_std * noise.process[i];
        h = h.clamp(task.hardiness_depth - 2.0, -1.0);
        latent.push(h);
    }

    // Events: chill accumulation, then growing degree days.
    let mut chill = 0.0;
    let mut gdd = 0.0;
    let mut event_dates = [*weather.dates.last().expect("nonempty"); NUM_EVENTS];
    let mut fired = [false; NUM_EVENTS];
    for i in 0..weather.dates.len() {
        let t = avg(i);
        if t > -2.0 && t < 7.0 {
            chill += 1.0;
        }
        if chill >= task.chill_requirement {
            gdd += (t - task.gdd_base).max(0.0);
        }
        for e in 0..NUM_EVENTS {
            if !fired[e] && gdd >= task.gdd_thresholds[e] {
                fired[e] = true;
                event_dates[e] = weather.dates[i];
            }
        }
        if fired[NUM_EVENTS - 1] {
            break;
        }
    }
    if !fired[NUM_EVENTS - 1] {
        log::warn!(
            "task {}: not all events fired by {}; check thresholds",
            task.task_id,
            weather.dates.last().expect("nonempty")
        );
    }

    (latent, event_dates)
}

/// Generate a full synthetic dataset. Bit-identical for identical configs.
pub fn generate_synthetic(cfg: &GeneratorConfig) -> Result<Dataset> {
    cfg.validate()?;
    let max_seasons = cfg
        .tasks
        .iter()
        .map(|t| cfg.task_season_count(t))
        .max()
        .unwrap_or(0);

    let mut dataset = Dataset::default();
    for season_idx in 0..max_seasons {
        let weather = gen_weather(cfg, season_idx);
        let noise = gen_season_noise(cfg, season_idx, weather.window_len);
        let label = (cfg.start_year + season_idx as i32).to_string();

        for task in &cfg.tasks {
            if season_idx >= cfg.task_season_count(task) {
                continue;
            }
            let (latent, event_dates) = gen_labels(task, &weather, &noise);
            let mut days: Vec<DayRecord> = (0..weather.window_len)
                .map(|i| DayRecord {
                    date: weather.dates[i],
                    weather: weather.features[i],
                    lte: None,
                    pheno: [false; NUM_EVENTS],
                })
                .collect();
            for (k, &d) in noise.obs_days.iter().enumerate() {
                let lte50 = latent[d] + task.obs_noise_std * noise.obs_value[k];
                let spread = (task.lte_spread + 0.1 * noise.obs_spread[k]).max(0.3);
                days[d].lte = Some([lte50 + spread, lte50, lte50 - spread]);
            }
            let season = SeasonSeries {
                task_id: task.task_id.clone(),
                season_label: label.clone(),
                event_dates,
                days,
            };
            let season = encode_phenology(event_dates, &season);
            dataset
                .tasks
                .entry(task.task_id.clone())
                .or_default()
                .push(season);
        }
    }
    dataset.feature_stats = Some(dataset.compute_feature_stats());
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let cfg = benchmark_config(3, 2, 99);
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_seeds_differ() {
        let a = generate_synthetic(&benchmark_config(3, 2, 1)).unwrap();
        let b = generate_synthetic(&benchmark_config(3, 2, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn duplicate_params_give_identical_labels() {
        let mut cfg = benchmark_config(3, 2, 42);
        let mut dup = cfg.tasks[1].clone();
        dup.task_id = "clone".into();
        cfg.tasks.push(dup);
        let ds = generate_synthetic(&cfg).unwrap();
        let orig = &ds.tasks[&cfg.tasks[1].task_id];
        let clone = &ds.tasks["clone"];
        for (a, b) in orig.iter().zip(clone.iter()) {
            assert_eq!(a.event_dates, b.event_dates);
            for (da, db) in a.days.iter().zip(b.days.iter()) {
                assert_eq!(da.lte, db.lte);
                assert_eq!(da.pheno, db.pheno);
            }
        }
    }

    #[test]
    fn sample_counts_roughly_biweekly() {
        // The bi-weekly cadence with jitter lands 15-22 samples per season.
        for seed in 0..5 {
            let ds = generate_synthetic(&benchmark_config(6, 8, seed)).unwrap();
            for season in ds.all_seasons() {
                let n = season.lte_day_count();
                assert!(
                    (15..=22).contains(&n),
                    "seed {seed} {}/{}: {n} samples",
                    season.task_id,
                    season.season_label
                );
            }
        }
    }

    #[test]
    fn too_few_tasks_rejected() {
        let mut cfg = benchmark_config(2, 1, 0);
        cfg.tasks.truncate(1);
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn thresholds_must_increase() {
        let mut cfg = benchmark_config(2, 1, 0);
        cfg.tasks[0].gdd_thresholds = [100.0, 90.0, 120.0, 130.0];
        assert!(generate_synthetic(&cfg).is_err());
    }
}
