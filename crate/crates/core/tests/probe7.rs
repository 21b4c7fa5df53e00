#[test]
fn probe_loco_smoke() {
    use tal_core::data::*;
    use tal_core::harness::*;
    use tal_core::models::*;
    use tal_core::tal::*;
    use tal_core::training::*;
    let cfg = ExperimentConfig {
        dataset: DatasetSource::Generator { config: benchmark_config(3, 4, 5) },
        trials: 2,
        holdout_per_task: 1,
        train: TrainConfig {
            variant: ModelVariant::Embedding,
            epochs: 8,
            widths: ModelWidths { h1: 16, h2: 24 },
            ..Default::default()
        },
        methods: vec![
            MethodSpec::tal("Uniform (S)", TalConfig::averaging(TaskSetSpec::S, Weighting::Uniform, 10.0)),
            MethodSpec::tal("Weighted (S+CR)", TalConfig::averaging(TaskSetSpec::SCr, Weighting::Exponential, 10.0)),
            MethodSpec::tal("Best Source", TalConfig::best_source()),
        ],
        master_seed: 42,
    };
    let t0 = std::time::Instant::now();
    let report = run_experiment(&cfg).unwrap();
    println!("elapsed {:.1?}", t0.elapsed());
    println!("{}", report.to_text_table());
    println!("audit: {:?}", report.meta.audit);
    // determinism
    let report2 = run_experiment(&cfg).unwrap();
    assert_eq!(report.to_csv_string(), report2.to_csv_string());
    println!("deterministic: yes");
}
