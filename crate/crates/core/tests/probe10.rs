#[test]
fn probe_identifiability_variants() {
    use tal_core::data::*;
    use tal_core::models::*;
    use tal_core::tal::*;
    use tal_core::training::*;
    let gen = benchmark_config(6, 8, 0);
    let ds = generate_synthetic(&gen).unwrap();
    let tasks = ds.task_ids();
    let stats = ds.compute_feature_stats();
    let norm = normalize_with(&ds, &stats).unwrap();

    for (variant, epochs) in [(ModelVariant::MultiHead, 60), (ModelVariant::Embedding, 120)] {
        let cfg = TrainConfig { variant, epochs, rng_seed: 7, ..Default::default() };
        let out = train(&norm, &tasks, &cfg).unwrap();
        let model = out.model;
        let set = build_task_set(&model, &TalConfig { task_set: TaskSetSpec::S, n_random: 0, ..Default::default() }).unwrap();
        let mut select_hits = 0;
        let mut weight_hits = 0;
        let n_trials = 20;
        for trial in 0..n_trials {
            let k = trial % tasks.len();
            let mut tgt_gen = benchmark_config(6, 6, 1000 + trial as u64);
            tgt_gen.tasks = vec![gen.tasks[k].clone(), gen.tasks[(k + 1) % tasks.len()].clone()];
            let tgt_ds = generate_synthetic(&tgt_gen).unwrap();
            let aux: Vec<SeasonSeries> = tgt_ds.tasks[&gen.tasks[k].task_id]
                .iter().map(|s| normalize_season(&s.strip_lte(), &stats)).collect();
            let refs: Vec<&SeasonSeries> = aux.iter().collect();
            let chosen = select_best_source(&model, &refs).unwrap();
            let losses = entry_aux_losses(&set, &model, &refs).unwrap();
            let weights = weights_from_losses(&losses, Weighting::Exponential, 10.0).unwrap();
            let argmax = weights.values().iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            if chosen == tasks[k] { select_hits += 1; }
            if set.entries[argmax].label == tasks[k] { weight_hits += 1; }
        }
        println!("{variant} ({epochs} epochs): select {select_hits}/{n_trials}, weight {weight_hits}/{n_trials}");
    }
}
