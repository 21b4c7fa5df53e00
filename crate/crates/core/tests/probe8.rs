#[test]
fn probe_desk_training_quality() {
    use tal_core::data::*;
    use tal_core::models::*;
    use tal_core::training::*;
    let ds = generate_synthetic(&benchmark_config(6, 8, 0)).unwrap();
    let tasks = ds.task_ids();
    let sources: Vec<String> = tasks.iter().take(5).cloned().collect();
    let mut train_ds = Dataset::default();
    for s in &sources { train_ds.tasks.insert(s.clone(), ds.tasks[s].clone()); }
    let stats = train_ds.compute_feature_stats();
    let train_norm = normalize_with(&train_ds, &stats).unwrap();

    for variant in [ModelVariant::Embedding, ModelVariant::MultiHead] {
        let cfg = TrainConfig { variant, epochs: 60, rng_seed: 1, ..Default::default() };
        let t0 = std::time::Instant::now();
        let out = train(&train_norm, &sources, &cfg).unwrap();
        let dt = t0.elapsed();
        // masked train RMSE per task
        let mut all = vec![];
        for task in &sources {
            let seasons: Vec<&SeasonSeries> = train_norm.tasks[task].iter().collect();
            let rmse = eval_rmse(|s| {
                let w = prepare_season(task, s).x;
                predict_multihead(&out.model, task, &w)
            }, &seasons).unwrap();
            all.push(rmse);
        }
        let avg = all.iter().sum::<f64>() / all.len() as f64;
        println!("{variant}: {dt:.1?}, epoch0 loss {:.3} -> final {:.3}, train RMSE per task {:?} avg {:.3}",
            out.log[0].joint_loss, out.log.last().unwrap().joint_loss,
            all.iter().map(|v| (v*100.0).round()/100.0).collect::<Vec<_>>(), avg);
    }
}
