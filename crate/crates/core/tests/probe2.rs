#[test]
fn probe_roundtrip() {
    use tal_core::models::*;
    use tal_core::seed::derive_rng;
    let mut rng = derive_rng(3, &[8]);
    let model = init_model(ModelVariant::Embedding, &["x".into(), "y".into()], ModelWidths { h1: 8, h2: 10 }, &mut rng);
    let s = serde_json::to_string(&model).unwrap();
    let back: ModelParams = serde_json::from_str(&s).unwrap();
    for ((n1, t1), (_, t2)) in model.param_entries().iter().zip(back.param_entries().iter()) {
        if t1 != t2 {
            println!("param {n1} differs");
            for (i, (a, b)) in t1.data().iter().zip(t2.data().iter()).enumerate() {
                if a != b {
                    println!("  idx {i}: {a:?} ({:x}) vs {b:?} ({:x})", a.to_bits(), b.to_bits());
                    break;
                }
            }
        }
    }
    println!("variant eq: {}", model.variant == back.variant);
    println!("widths eq: {}", model.widths == back.widths);
    println!("full eq: {}", model == back);
}
