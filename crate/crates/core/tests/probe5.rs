#[test]
fn probe_gradcheck_seeds() {
    use tal_core::data::*;
    use tal_core::models::*;
    use tal_core::seed::derive_rng;
    use tal_core::training::*;
    use chrono::NaiveDate;
    use rand::Rng;

    let start = NaiveDate::from_ymd_opt(2005, 9, 7).unwrap();
    let mk = |task: &str, days: usize, lte_days: &[usize], rng: &mut rand_chacha::ChaCha8Rng| {
        let recs: Vec<DayRecord> = (0..days).map(|i| {
            let mut weather = [0.0; 12];
            for w in &mut weather { *w = rng.random_range(-1.5..1.5); }
            let lte = lte_days.contains(&i).then(|| { let v: f64 = rng.random_range(-1.5..1.5); [v+0.5, v, v-0.5] });
            let mut pheno = [false; 4];
            for (e, p) in pheno.iter_mut().enumerate() { *p = i >= days/2 + 2*e; }
            DayRecord { date: start + chrono::Days::new(i as u64), weather, lte, pheno }
        }).collect();
        SeasonSeries { task_id: task.into(), season_label: "2005".into(), event_dates: [start; 4], days: recs }
    };

    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        for variant in [ModelVariant::MultiHead, ModelVariant::Embedding] {
            let mut rng = derive_rng(seed, &[33]);
            let s1 = mk("a", 20, &[3, 9, 16], &mut rng);
            let s2 = mk("b", 14, &[5, 11], &mut rng);
            let mut mrng = derive_rng(seed, &[21]);
            let model = init_model(variant, &["a".into(), "b".into()], ModelWidths { h1: 16, h2: 16 }, &mut mrng);
            let batch: Batch = vec![("a".into(), &s1), ("b".into(), &s2)];
            let report = gradcheck_model(&model, &batch, 1e-5, usize::MAX, seed).unwrap();
            println!("seed {seed} {variant}: max_rel {:.3e} checked {} skipped {}", report.max_rel_err, report.checked, report.skipped);
            worst = worst.max(report.max_rel_err);
        }
    }
    println!("WORST {worst:.3e}");
}
