// temporary calibration probe
#[test]
fn probe_generator() {
    use tal_core::data::*;
    let cfg = benchmark_config(6, 8, 0);
    let ds = generate_synthetic(&cfg).unwrap();
    for (task, seasons) in &ds.tasks {
        let s = &seasons[0];
        let year: i32 = s.season_label.parse().unwrap();
        let (start, end) = season_window(year);
        let in_window = s.event_dates.iter().filter(|d| **d >= start && **d <= end).count();
        let lte: Vec<f64> = s.days.iter().filter_map(|d| d.lte.map(|t| t[1])).collect();
        let min = lte.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = lte.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{task}: events {:?} (in-window {in_window}/4), lte50 n={} range [{min:.1}, {max:.1}], last={:.1}",
            s.event_dates, lte.len(), lte.last().unwrap()
        );
    }
    // spread of event dates across tasks for the same season
    for e in 0..4 {
        let dates: Vec<String> = ds.tasks.values().map(|ss| ss[0].event_dates[e].to_string()).collect();
        println!("event {e}: {dates:?}");
    }
}
