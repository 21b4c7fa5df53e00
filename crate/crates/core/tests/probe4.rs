#[test]
fn probe_analytic_vs_numeric() {
    use std::collections::BTreeMap;
    use tal_core::data::*;
    use tal_core::models::*;
    use tal_core::numerics::Tensor;
    use tal_core::seed::derive_rng;
    use tal_core::training::*;
    use chrono::NaiveDate;
    use rand::Rng;

    let start = NaiveDate::from_ymd_opt(2005, 9, 7).unwrap();
    let mk = |task: &str, days: usize, lte_days: &[usize], rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| {
        let recs: Vec<DayRecord> = (0..days).map(|i| {
            let mut weather = [0.0; 12];
            for w in &mut weather { *w = rng.random_range(-1.5..1.5); }
            let lte = lte_days.contains(&i).then(|| { let v: f64 = rng.random_range(lo..hi); [v+0.5, v, v-0.5] });
            let mut pheno = [false; 4];
            for (e, p) in pheno.iter_mut().enumerate() { *p = i >= days/2 + 2*e; }
            DayRecord { date: start + chrono::Days::new(i as u64), weather, lte, pheno }
        }).collect();
        SeasonSeries { task_id: task.into(), season_label: "2005".into(), event_dates: [start; 4], days: recs }
    };

    for (name_cfg, lo, hi) in [("targets -25..-5", -25.0, -5.0), ("targets -2..2", -2.0, 2.0)] {
        let mut rng = derive_rng(0, &[33]);
        let s1 = mk("a", 12, &[3, 9], &mut rng, lo, hi);
        let s2 = mk("b", 9, &[5], &mut rng, lo, hi);
        let mut mrng = derive_rng(0, &[21]);
        let model = init_model(ModelVariant::MultiHead, &["a".into(), "b".into()], ModelWidths { h1: 8, h2: 12 }, &mut mrng);
        let batch: Batch = vec![("a".into(), &s1), ("b".into(), &s2)];

        // analytic grads via full-coordinate gradcheck would do fd; get analytic by backward through joint loss
        // use gradcheck_model with max_coords = usize::MAX to check ALL coords
        let report = gradcheck_model(&model, &batch, 1e-5, usize::MAX, 0).unwrap();
        let base = joint_loss(&model, &batch, 1.0, 1.0).unwrap();
        println!("{name_cfg}: loss {base:.3} max_rel {:.3e} checked {} skipped {}", report.max_rel_err, report.checked, report.skipped);
        let _ = BTreeMap::<String, Tensor>::new();
    }
}
