//! CSV ingestion and serialization.
//!
//! One row per task-season-day. LTE cells are empty on days without a
//! field sample; the four event-date columns repeat on every row of a
//! season. Floats are written in shortest round-trip form, so a
//! save/load cycle reproduces the dataset exactly.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use super::{
    encode_phenology, full_window_days, interpolate_weather, parse_season_year, DayRecord,
    Dataset, SeasonSeries, EVENT_NAMES, FEATURE_NAMES, NUM_EVENTS, NUM_FEATURES, NUM_LTE,
};
use crate::{Error, Result};

/// Fixed column order of the season CSV.
pub const SCHEMA: [&str; 22] = [
    "task_id", "season", "date", "at_min", "at_max", "at_avg", "rh_min", "rh_max", "rh_avg",
    "dp_min", "dp_max", "dp_avg", "precip", "ws_max", "ws_avg", "lte10", "lte50", "lte90",
    "ev_first_swell", "ev_full_swell", "ev_budbreak", "ev_first_leaf",
];

#[derive(Clone, Debug, Default)]
pub(crate) struct LoadOptions {
    /// Drop seasons without a single LTE sample (the usual retention rule).
    pub require_lte: bool,
    /// Remove any LTE values after loading (target auxiliary data).
    pub strip_lte: bool,
    /// When set, any task id outside this roster is a hard error.
    pub known_tasks: Option<Vec<String>>,
}

/// Load a season CSV with the full retention rules: a season is kept only
/// if less than 10% of its weather cells are missing, it has at least one
/// LTE sample, and all four event dates are present.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load_csv_opts(
        path,
        &LoadOptions {
            require_lte: true,
            strip_lte: false,
            known_tasks: None,
        },
    )
}

/// Load target auxiliary data: same schema and weather rules, but no LTE
/// requirement, and any LTE values present are stripped.
pub fn load_aux_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load_csv_opts(
        path,
        &LoadOptions {
            require_lte: false,
            strip_lte: true,
            known_tasks: None,
        },
    )
}

struct RawSeason {
    event_cells: [Option<NaiveDate>; NUM_EVENTS],
    days: BTreeMap<NaiveDate, ([f64; NUM_FEATURES], Option<[f64; NUM_LTE]>)>,
}

pub(crate) fn load_csv_opts(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != SCHEMA {
        return Err(Error::SchemaMismatch {
            expected: SCHEMA.join(","),
            found: found.join(","),
        });
    }

    let mut raw: BTreeMap<(String, String), RawSeason> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // 1-based, after the header
        let record = record?;
        let err = |msg: String| Error::MalformedRow { row: line, msg };

        let task_id = record[0].trim().to_string();
        if task_id.is_empty() {
            return Err(err("empty task_id".into()));
        }
        if let Some(roster) = &opts.known_tasks {
            if !roster.iter().any(|t| t == &task_id) {
                return Err(Error::UnknownTask(task_id));
            }
        }
        let season = record[1].trim().to_string();
        parse_season_year(&season)?;
        let date = parse_date(&record[2])
            .ok_or_else(|| err(format!("unparseable date `{}`", &record[2])))?;

        let mut weather = [f64::NAN; NUM_FEATURES];
        for (f, w) in weather.iter_mut().enumerate() {
            *w = parse_opt_f64(&record[3 + f])
                .map_err(|v| err(format!("bad {} value `{v}`", FEATURE_NAMES[f])))?
                .unwrap_or(f64::NAN);
        }

        let mut lte_cells = [None; NUM_LTE];
        for (c, cell) in lte_cells.iter_mut().enumerate() {
            *cell = parse_opt_f64(&record[15 + c])
                .map_err(|v| err(format!("bad lte value `{v}`")))?;
        }
        let lte = match lte_cells {
            [Some(a), Some(b), Some(c)] => Some([a, b, c]),
            [None, None, None] => None,
            _ => {
                return Err(err(
                    "LTE triple must be fully present or fully empty".into(),
                ))
            }
        };

        let mut event_cells = [None; NUM_EVENTS];
        for (e, cell) in event_cells.iter_mut().enumerate() {
            let raw_cell = record[18 + e].trim();
            if !raw_cell.is_empty() {
                *cell = Some(parse_date(raw_cell).ok_or_else(|| {
                    err(format!("unparseable {} date `{raw_cell}`", EVENT_NAMES[e]))
                })?);
            }
        }

        let entry = raw
            .entry((task_id, season))
            .or_insert_with(|| RawSeason {
                event_cells,
                days: BTreeMap::new(),
            });
        if entry.event_cells != event_cells {
            return Err(err("event dates differ between rows of one season".into()));
        }
        if entry.days.insert(date, (weather, lte)).is_some() {
            return Err(err(format!("duplicate date {date}")));
        }
    }

    let mut dataset = Dataset::default();
    for ((task_id, season_label), raw_season) in raw {
        match build_season(&task_id, &season_label, raw_season, opts)? {
            Some(season) => dataset.tasks.entry(task_id).or_default().push(season),
            None => {}
        }
    }
    dataset.tasks.retain(|_, seasons| !seasons.is_empty());
    dataset.feature_stats = Some(dataset.compute_feature_stats());
    Ok(dataset)
}

fn build_season(
    task_id: &str,
    season_label: &str,
    raw: RawSeason,
    opts: &LoadOptions,
) -> Result<Option<SeasonSeries>> {
    let drop = |reason: &str| {
        log::warn!("dropping season {task_id}/{season_label}: {reason}");
        Ok(None)
    };

    let event_dates = match raw.event_cells {
        [Some(a), Some(b), Some(c), Some(d)] => [a, b, c, d],
        _ => return drop("missing event date(s)"),
    };

    let year = parse_season_year(season_label)?;
    let days: Vec<DayRecord> = full_window_days(year)
        .into_iter()
        .map(|date| {
            let (weather, lte) = raw
                .days
                .get(&date)
                .copied()
                .unwrap_or(([f64::NAN; NUM_FEATURES], None));
            DayRecord {
                date,
                weather,
                lte,
                pheno: [false; NUM_EVENTS],
            }
        })
        .collect();

    let season = SeasonSeries {
        task_id: task_id.to_string(),
        season_label: season_label.to_string(),
        event_dates,
        days,
    };

    if season.missing_weather_fraction() >= 0.10 {
        return drop(&format!(
            "{:.1}% of weather cells missing",
            season.missing_weather_fraction() * 100.0
        ));
    }
    if opts.require_lte && season.lte_day_count() == 0 {
        return drop("no LTE samples");
    }

    let season = match interpolate_weather(&season) {
        Ok(s) => s,
        Err(Error::FeatureAllMissing { feature, .. }) => {
            return drop(&format!("feature {feature} fully missing"));
        }
        Err(e) => return Err(e),
    };
    let mut season = encode_phenology(event_dates, &season);
    if opts.strip_lte {
        season = season.strip_lte();
    }
    Ok(Some(season))
}

/// Write a dataset in [`SCHEMA`] order.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(SCHEMA)?;
    for (task_id, seasons) in &dataset.tasks {
        for season in seasons {
            for day in &season.days {
                let mut record: Vec<String> = Vec::with_capacity(SCHEMA.len());
                record.push(task_id.clone());
                record.push(season.season_label.clone());
                record.push(day.date.to_string());
                for v in day.weather {
                    record.push(fmt_opt(v));
                }
                match day.lte {
                    Some(triple) => record.extend(triple.iter().map(|v| v.to_string())),
                    None => record.extend(std::iter::repeat(String::new()).take(NUM_LTE)),
                }
                for e in season.event_dates {
                    record.push(e.to_string());
                }
                writer.write_record(&record)?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

fn parse_opt_f64(s: &str) -> std::result::Result<Option<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| s.to_string())
}

#[cfg(test)]
mod tests {
    use super::super::{benchmark_config, generate_synthetic};
    use super::*;

    #[test]
    fn roundtrip_identity() {
        let ds = generate_synthetic(&benchmark_config(3, 2, 11)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        save_csv(&ds, &p1).unwrap();
        let loaded = load_csv(&p1).unwrap();
        assert_eq!(ds, loaded);
        save_csv(&loaded, &p2).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p1).unwrap(),
            std::fs::read_to_string(&p2).unwrap()
        );
    }

    #[test]
    fn drops_season_with_excess_missing() {
        let mut ds = generate_synthetic(&benchmark_config(2, 1, 3)).unwrap();
        // Blank out 12% of one season's weather cells.
        {
            let seasons = ds.tasks.values_mut().next().unwrap();
            let n_days = seasons[0].days.len();
            let to_blank = (n_days as f64 * 0.12).ceil() as usize;
            for day in seasons[0].days.iter_mut().take(to_blank) {
                day.weather = [f64::NAN; NUM_FEATURES];
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_csv(&ds, &p).unwrap();
        let loaded = load_csv(&p).unwrap();
        assert_eq!(loaded.total_seasons(), ds.total_seasons() - 1);
    }

    #[test]
    fn keeps_season_with_small_gaps() {
        let mut ds = generate_synthetic(&benchmark_config(2, 1, 3)).unwrap();
        {
            let seasons = ds.tasks.values_mut().next().unwrap();
            // 2% of cells missing: still retained.
            let n_days = seasons[0].days.len();
            for day in seasons[0].days.iter_mut().take(n_days / 50) {
                day.weather = [f64::NAN; NUM_FEATURES];
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_csv(&ds, &p).unwrap();
        let loaded = load_csv(&p).unwrap();
        assert_eq!(loaded.total_seasons(), ds.total_seasons());
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        let mut content = SCHEMA.join(",") + "\n";
        content.push_str("t1,2005,2005-09-07,1,2,3,4,5,6,7,8,9,0,1,2,,,,2006-04-01,2006-04-05,2006-04-10,2006-04-20\n");
        content.push_str("t1,2005,2005-09-08,oops,2,3,4,5,6,7,8,9,0,1,2,,,,2006-04-01,2006-04-05,2006-04-10,2006-04-20\n");
        std::fs::write(&p, content).unwrap();
        match load_csv(&p) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 3),
            other => panic!("expected malformed row, got {other:?}"),
        }
    }

    #[test]
    fn header_mismatch_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b,c\n1,2,3\n").unwrap();
        assert!(matches!(load_csv(&p), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn aux_loader_strips_lte() {
        let ds = generate_synthetic(&benchmark_config(2, 1, 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        save_csv(&ds, &p).unwrap();
        let aux = load_aux_csv(&p).unwrap();
        assert_eq!(aux.total_seasons(), ds.total_seasons());
        assert!(aux.all_seasons().all(|s| s.lte_day_count() == 0));
    }
}
