use std::collections::BTreeMap;

use super::params::{GruParams, LinearParams, ModelParams, ModelVariant, TaskConditioning};
use super::{EMBED_DIM, WEATHER_DIM};
use crate::numerics::{Gradients, NodeId, Tape, Tensor};
use crate::{Error, Result};

struct BoundLinear {
    w: NodeId,
    b: NodeId,
}

struct BoundGru {
    w_ir: NodeId,
    w_iz: NodeId,
    w_in: NodeId,
    u_hr: NodeId,
    u_hz: NodeId,
    u_hn: NodeId,
    b_r: NodeId,
    b_z: NodeId,
    b_in: NodeId,
    b_hn: NodeId,
}

enum BoundCond {
    Heads(BTreeMap<String, BoundLinear>),
    Embedding {
        head: BoundLinear,
        embeddings: BTreeMap<String, NodeId>,
    },
}

/// Model parameters registered as leaves on a tape, ready for forward
/// passes and gradient extraction by parameter name.
pub struct BoundModel {
    variant: ModelVariant,
    fc1: BoundLinear,
    fc2: BoundLinear,
    gru: BoundGru,
    fc3: BoundLinear,
    cond: BoundCond,
    names: Vec<(String, NodeId)>,
}

fn bind_linear(tape: &mut Tape, lin: &LinearParams) -> BoundLinear {
    BoundLinear {
        w: tape.leaf(lin.w.clone()),
        b: tape.leaf(lin.b.clone()),
    }
}

fn bind_gru(tape: &mut Tape, g: &GruParams) -> BoundGru {
    BoundGru {
        w_ir: tape.leaf(g.w_ir.clone()),
        w_iz: tape.leaf(g.w_iz.clone()),
        w_in: tape.leaf(g.w_in.clone()),
        u_hr: tape.leaf(g.u_hr.clone()),
        u_hz: tape.leaf(g.u_hz.clone()),
        u_hn: tape.leaf(g.u_hn.clone()),
        b_r: tape.leaf(g.b_r.clone()),
        b_z: tape.leaf(g.b_z.clone()),
        b_in: tape.leaf(g.b_in.clone()),
        b_hn: tape.leaf(g.b_hn.clone()),
    }
}

impl BoundModel {
    pub fn bind(model: &ModelParams, tape: &mut Tape) -> BoundModel {
        let fc1 = bind_linear(tape, &model.backbone.fc1);
        let fc2 = bind_linear(tape, &model.backbone.fc2);
        let gru = bind_gru(tape, &model.backbone.gru);
        let fc3 = bind_linear(tape, &model.backbone.fc3);
        let cond = match &model.cond {
            TaskConditioning::Heads(heads) => BoundCond::Heads(
                heads
                    .iter()
                    .map(|(t, lin)| (t.clone(), bind_linear(tape, lin)))
                    .collect(),
            ),
            TaskConditioning::Embedding { head, embeddings } => BoundCond::Embedding {
                head: bind_linear(tape, head),
                embeddings: embeddings
                    .iter()
                    .map(|(t, e)| (t.clone(), tape.leaf(e.clone())))
                    .collect(),
            },
        };

        let mut bound = BoundModel {
            variant: model.variant,
            fc1,
            fc2,
            gru,
            fc3,
            cond,
            names: Vec::new(),
        };
        bound.names = bound.collect_names();
        bound
    }

    fn collect_names(&self) -> Vec<(String, NodeId)> {
        let mut out = Vec::new();
        for (name, lin) in [("fc1", &self.fc1), ("fc2", &self.fc2), ("fc3", &self.fc3)] {
            out.push((format!("backbone.{name}.w"), lin.w));
            out.push((format!("backbone.{name}.b"), lin.b));
        }
        let g = &self.gru;
        for (name, id) in [
            ("w_ir", g.w_ir),
            ("w_iz", g.w_iz),
            ("w_in", g.w_in),
            ("u_hr", g.u_hr),
            ("u_hz", g.u_hz),
            ("u_hn", g.u_hn),
            ("b_r", g.b_r),
            ("b_z", g.b_z),
            ("b_in", g.b_in),
            ("b_hn", g.b_hn),
        ] {
            out.push((format!("backbone.gru.{name}"), id));
        }
        match &self.cond {
            BoundCond::Heads(heads) => {
                for (task, lin) in heads {
                    out.push((format!("head.{task}.w"), lin.w));
                    out.push((format!("head.{task}.b"), lin.b));
                }
            }
            BoundCond::Embedding { head, embeddings } => {
                out.push(("head.w".to_string(), head.w));
                out.push(("head.b".to_string(), head.b));
                for (task, id) in embeddings {
                    out.push((format!("embed.{task}"), *id));
                }
            }
        }
        out
    }

    fn linear(tape: &mut Tape, lin: &BoundLinear, x: NodeId) -> NodeId {
        let y = tape.matmul_nt(x, lin.w);
        tape.add_row(y, lin.b)
    }

    /// Backbone over a (days x input_dim) node: fc1/ReLU, fc2/ReLU, GRU,
    /// fc3/ReLU. Returns (per-day features, per-day GRU hidden states).
    fn encode_nodes(&self, tape: &mut Tape, x: NodeId) -> (NodeId, NodeId) {
        let a1 = Self::linear(tape, &self.fc1, x);
        let a1 = tape.relu(a1);
        let a2 = Self::linear(tape, &self.fc2, a1);
        let a2 = tape.relu(a2);

        // Input projections for all gates at once, then the sequential
        // recurrence on per-day rows.
        let xr = tape.matmul_nt(a2, self.gru.w_ir);
        let xz = tape.matmul_nt(a2, self.gru.w_iz);
        let xn = tape.matmul_nt(a2, self.gru.w_in);

        let days = tape.value(a2).rows();
        let h2 = tape.value(xr).cols();
        let mut h = tape.leaf(Tensor::zeros(&[h2]));
        let mut hidden_rows = Vec::with_capacity(days);
        for t in 0..days {
            let xr_t = tape.row(xr, t);
            let xz_t = tape.row(xz, t);
            let xn_t = tape.row(xn, t);

            let hr = tape.matvec(self.gru.u_hr, h);
            let pre_r = tape.add(xr_t, hr);
            let pre_r = tape.add(pre_r, self.gru.b_r);
            let r = tape.sigmoid(pre_r);

            let hz = tape.matvec(self.gru.u_hz, h);
            let pre_z = tape.add(xz_t, hz);
            let pre_z = tape.add(pre_z, self.gru.b_z);
            let z = tape.sigmoid(pre_z);

            let hn = tape.matvec(self.gru.u_hn, h);
            let hn = tape.add(hn, self.gru.b_hn);
            let gated = tape.mul(r, hn);
            let pre_n = tape.add(xn_t, self.gru.b_in);
            let pre_n = tape.add(pre_n, gated);
            let n = tape.tanh(pre_n);

            // h' = (1 - z) * n + z * h, written as n + z * (h - n).
            let h_minus_n = tape.sub(h, n);
            let zh = tape.mul(z, h_minus_n);
            h = tape.add(n, zh);
            hidden_rows.push(h);
        }
        let hidden = tape.stack_rows(hidden_rows);

        let a3 = Self::linear(tape, &self.fc3, hidden);
        let a3 = tape.relu(a3);
        (a3, hidden)
    }

    fn head_output(&self, tape: &mut Tape, feats: NodeId, head: &BoundLinear) -> NodeId {
        Self::linear(tape, head, feats)
    }

    /// Weather matrix (days x 12) plus an embedding node concatenated onto
    /// every day, through backbone and the shared head.
    pub fn forward_with_embedding(
        &self,
        tape: &mut Tape,
        weather: NodeId,
        embedding: NodeId,
    ) -> Result<NodeId> {
        let head = match &self.cond {
            BoundCond::Embedding { head, .. } => head,
            BoundCond::Heads(_) => {
                return Err(Error::WrongVariant {
                    op: "forward_with_embedding",
                    expected: "Embedding",
                })
            }
        };
        let e = tape.value(embedding);
        if e.len() != EMBED_DIM {
            return Err(Error::EmbeddingDim {
                expected: EMBED_DIM,
                found: e.len(),
            });
        }
        let days = tape.value(weather).rows();
        let tiled = tape.repeat_row(embedding, days);
        let x = tape.concat_cols(weather, tiled);
        let (feats, _) = self.encode_nodes(tape, x);
        Ok(self.head_output(tape, feats, head))
    }

    /// Forward for a source task: its head (MultiHead) or its trained
    /// embedding (Embedding).
    pub fn forward_for_task(
        &self,
        tape: &mut Tape,
        weather: NodeId,
        task: &str,
    ) -> Result<NodeId> {
        check_weather_width(tape.value(weather))?;
        match &self.cond {
            BoundCond::Heads(heads) => {
                let head = heads
                    .get(task)
                    .ok_or_else(|| Error::TaskNotFound(task.to_string()))?;
                let (feats, _) = self.encode_nodes(tape, weather);
                Ok(self.head_output(tape, feats, head))
            }
            BoundCond::Embedding { embeddings, .. } => {
                let e = *embeddings
                    .get(task)
                    .ok_or_else(|| Error::TaskNotFound(task.to_string()))?;
                self.forward_with_embedding(tape, weather, e)
            }
        }
    }

    pub fn embedding_node(&self, task: &str) -> Result<NodeId> {
        match &self.cond {
            BoundCond::Embedding { embeddings, .. } => embeddings
                .get(task)
                .copied()
                .ok_or_else(|| Error::TaskNotFound(task.to_string())),
            BoundCond::Heads(_) => Err(Error::WrongVariant {
                op: "embedding_node",
                expected: "Embedding",
            }),
        }
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    /// Gradients keyed by parameter name; parameters the loss never
    /// touched get zeros.
    pub fn grads_by_name(&self, tape: &Tape, grads: &Gradients) -> BTreeMap<String, Tensor> {
        self.names
            .iter()
            .map(|(name, id)| {
                (
                    name.clone(),
                    grads.get_or_zeros(*id, tape.value(*id).shape()),
                )
            })
            .collect()
    }
}

fn check_weather_width(t: &Tensor) -> Result<()> {
    if t.shape().len() != 2 || t.cols() != WEATHER_DIM {
        return Err(Error::Other(format!(
            "weather sequence must be (days x {WEATHER_DIM}), got {:?}",
            t.shape()
        )));
    }
    Ok(())
}

/// Backbone encoding of a prepared input sequence (already embedding-
/// concatenated for the Embedding variant). Output is (days x h1).
pub fn encode(model: &ModelParams, sequence: &Tensor) -> Result<Tensor> {
    if sequence.shape().len() != 2 || sequence.cols() != model.input_dim() {
        return Err(Error::Other(format!(
            "encode: sequence width {:?} does not match fc1 input {}",
            sequence.shape(),
            model.input_dim()
        )));
    }
    if sequence.rows() == 0 {
        return Err(Error::Other("encode: empty sequence".into()));
    }
    let mut tape = Tape::new();
    let bound = BoundModel::bind(model, &mut tape);
    let x = tape.leaf(sequence.clone());
    let (feats, _) = bound.encode_nodes(&mut tape, x);
    Ok(tape.value(feats).clone())
}

/// Per-day GRU hidden states for a prepared input sequence.
#[cfg(test)]
pub(crate) fn gru_hidden(model: &ModelParams, sequence: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let bound = BoundModel::bind(model, &mut tape);
    let x = tape.leaf(sequence.clone());
    let (_, hidden) = bound.encode_nodes(&mut tape, x);
    Ok(tape.value(hidden).clone())
}

/// Per-day 7-vector (3 LTE deg C + 4 phenology logits) for a source task
/// of a MultiHead or Embedding model.
pub fn predict_multihead(model: &ModelParams, task: &str, weather: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let bound = BoundModel::bind(model, &mut tape);
    let x = tape.leaf(weather.clone());
    let out = bound.forward_for_task(&mut tape, x, task)?;
    Ok(tape.value(out).clone())
}

/// Per-day 7-vector for an arbitrary embedding vector; any 12-vector
/// specifies a task, trained or not.
pub fn predict_embedding(model: &ModelParams, embedding: &Tensor, weather: &Tensor) -> Result<Tensor> {
    check_weather_width(weather)?;
    let mut tape = Tape::new();
    let bound = BoundModel::bind(model, &mut tape);
    let x = tape.leaf(weather.clone());
    let e = tape.leaf(embedding.clone());
    let out = bound.forward_with_embedding(&mut tape, x, e)?;
    Ok(tape.value(out).clone())
}

#[cfg(test)]
mod tests {
    use super::super::params::{init_model, ModelWidths};
    use super::super::OUTPUT_DIM;
    use super::*;
    use crate::seed::derive_rng;

    fn small_model(variant: ModelVariant) -> ModelParams {
        let mut rng = derive_rng(7, &[3]);
        init_model(
            variant,
            &["a".into(), "b".into()],
            ModelWidths { h1: 8, h2: 10 },
            &mut rng,
        )
    }

    fn weather(days: usize, seed: u64) -> Tensor {
        let mut rng = derive_rng(seed, &[11]);
        Tensor::from_fn(&[days, WEATHER_DIM], |_| {
            use rand::Rng;
            rng.random_range(-1.5..1.5)
        })
    }

    #[test]
    fn output_shape_is_days_by_seven() {
        let m = small_model(ModelVariant::MultiHead);
        let out = predict_multihead(&m, "a", &weather(3, 1)).unwrap();
        assert_eq!(out.shape(), &[3, OUTPUT_DIM]);
        let one = predict_multihead(&m, "a", &weather(1, 1)).unwrap();
        assert_eq!(one.shape(), &[1, OUTPUT_DIM]);
    }

    #[test]
    fn unknown_task_is_error() {
        let m = small_model(ModelVariant::MultiHead);
        assert!(matches!(
            predict_multihead(&m, "zz", &weather(2, 1)),
            Err(Error::TaskNotFound(_))
        ));
    }

    #[test]
    fn causality_prefix_property() {
        for variant in [ModelVariant::MultiHead, ModelVariant::Embedding] {
            let m = small_model(variant);
            let w_full = weather(20, 2);
            let full = predict_multihead(&m, "a", &w_full).unwrap();
            for t in [1usize, 7, 15] {
                let prefix = Tensor::matrix(
                    t,
                    WEATHER_DIM,
                    w_full.data()[..t * WEATHER_DIM].to_vec(),
                );
                let out = predict_multihead(&m, "a", &prefix).unwrap();
                for d in 0..t {
                    assert_eq!(out.row(d), full.row(d), "variant {variant} day {d}");
                }
            }
        }
    }

    #[test]
    fn backbone_features_shared_across_tasks() {
        let m = small_model(ModelVariant::MultiHead);
        let w = weather(5, 3);
        let seq = w.clone();
        let feats = encode(&m, &seq).unwrap();
        assert_eq!(feats.shape(), &[5, 8]);
        // Heads differ, but both consume the same encoded features: check
        // predictions equal head(features) for each task.
        for task in ["a", "b"] {
            let out = predict_multihead(&m, task, &w).unwrap();
            assert_eq!(out.shape(), &[5, OUTPUT_DIM]);
        }
    }

    #[test]
    fn gru_hidden_bounded() {
        let m = small_model(ModelVariant::MultiHead);
        let w = weather(40, 4);
        let hidden = gru_hidden(&m, &w).unwrap();
        assert!(hidden.data().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn arbitrary_embedding_accepted() {
        let m = small_model(ModelVariant::Embedding);
        let e = Tensor::from_fn(&[EMBED_DIM], |i| (i as f64 - 6.0) * 0.3);
        let out = predict_embedding(&m, &e, &weather(4, 5)).unwrap();
        assert_eq!(out.shape(), &[4, OUTPUT_DIM]);
        assert!(out.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn wrong_embedding_dim_is_error() {
        let m = small_model(ModelVariant::Embedding);
        let e = Tensor::vector(vec![0.0; 5]);
        assert!(matches!(
            predict_embedding(&m, &e, &weather(2, 6)),
            Err(Error::EmbeddingDim { .. })
        ));
    }

    #[test]
    fn trained_embedding_matches_task_forward() {
        let m = small_model(ModelVariant::Embedding);
        let w = weather(6, 7);
        let via_task = predict_multihead(&m, "b", &w).unwrap();
        let via_vec = predict_embedding(&m, m.source_embedding("b").unwrap(), &w).unwrap();
        assert_eq!(via_task, via_vec);
    }

    #[test]
    fn different_embeddings_differ() {
        let m = small_model(ModelVariant::Embedding);
        let w = weather(6, 8);
        let e1 = Tensor::from_fn(&[EMBED_DIM], |_| 0.05);
        let e2 = Tensor::from_fn(&[EMBED_DIM], |_| -0.05);
        let o1 = predict_embedding(&m, &e1, &w).unwrap();
        let o2 = predict_embedding(&m, &e2, &w).unwrap();
        assert_ne!(o1, o2);
    }
}
