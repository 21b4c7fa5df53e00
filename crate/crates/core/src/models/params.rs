use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EMBED_DIM, OUTPUT_DIM, WEATHER_DIM};
use crate::numerics::Tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    MultiHead,
    Embedding,
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelVariant::MultiHead => write!(f, "multihead"),
            ModelVariant::Embedding => write!(f, "embedding"),
        }
    }
}

/// Backbone layer widths. Desk-scale defaults keep the benchmark fast;
/// `paper()` gives the full-size network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelWidths {
    pub h1: usize,
    pub h2: usize,
}

impl Default for ModelWidths {
    fn default() -> Self {
        ModelWidths { h1: 32, h2: 64 }
    }
}

impl ModelWidths {
    pub fn paper() -> Self {
        ModelWidths { h1: 1024, h2: 2048 }
    }
}

/// One linear layer, stored as (out x in) weights plus a bias vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub w: Tensor,
    pub b: Tensor,
}

/// Single-layer GRU, gate convention:
///
/// ```text
/// r_t = sigmoid(W_ir x_t + U_hr h_{t-1} + b_r)
/// z_t = sigmoid(W_iz x_t + U_hz h_{t-1} + b_z)
/// n_t = tanh(W_in x_t + b_in + r_t * (U_hn h_{t-1} + b_hn))
/// h_t = (1 - z_t) * n_t + z_t * h_{t-1}
/// ```
///
/// with h_0 = 0. Since h_t is a convex combination of h_{t-1} and a tanh
/// output, every hidden coordinate stays in (-1, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub w_ir: Tensor,
    pub w_iz: Tensor,
    pub w_in: Tensor,
    pub u_hr: Tensor,
    pub u_hz: Tensor,
    pub u_hn: Tensor,
    pub b_r: Tensor,
    pub b_z: Tensor,
    pub b_in: Tensor,
    pub b_hn: Tensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackboneParams {
    pub fc1: LinearParams,
    pub fc2: LinearParams,
    pub gru: GruParams,
    pub fc3: LinearParams,
}

/// Task-specific parameters: per-task head sets, or one shared head set
/// plus per-task embeddings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TaskConditioning {
    Heads(BTreeMap<String, LinearParams>),
    Embedding {
        head: LinearParams,
        embeddings: BTreeMap<String, Tensor>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub variant: ModelVariant,
    pub widths: ModelWidths,
    pub backbone: BackboneParams,
    pub cond: TaskConditioning,
}

impl ModelParams {
    /// Width of the vector entering fc1 (weather, plus the embedding for
    /// the Embedding variant).
    pub fn input_dim(&self) -> usize {
        match self.variant {
            ModelVariant::MultiHead => WEATHER_DIM,
            ModelVariant::Embedding => WEATHER_DIM + EMBED_DIM,
        }
    }

    /// Source tasks, in sorted order.
    pub fn roster(&self) -> Vec<String> {
        match &self.cond {
            TaskConditioning::Heads(heads) => heads.keys().cloned().collect(),
            TaskConditioning::Embedding { embeddings, .. } => embeddings.keys().cloned().collect(),
        }
    }

    pub fn source_embedding(&self, task: &str) -> Result<&Tensor> {
        match &self.cond {
            TaskConditioning::Embedding { embeddings, .. } => embeddings
                .get(task)
                .ok_or_else(|| Error::TaskNotFound(task.to_string())),
            TaskConditioning::Heads(_) => Err(Error::WrongVariant {
                op: "source_embedding",
                expected: "Embedding",
            }),
        }
    }

    /// Mean of the trained source embeddings.
    pub fn mean_embedding(&self) -> Result<Tensor> {
        match &self.cond {
            TaskConditioning::Embedding { embeddings, .. } => {
                let n = embeddings.len();
                if n == 0 {
                    return Err(Error::EmptySourceSet);
                }
                let mut mean = vec![0.0; EMBED_DIM];
                for e in embeddings.values() {
                    for (m, v) in mean.iter_mut().zip(e.data()) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= n as f64;
                }
                Ok(Tensor::vector(mean))
            }
            TaskConditioning::Heads(_) => Err(Error::WrongVariant {
                op: "mean_embedding",
                expected: "Embedding",
            }),
        }
    }

    /// Named references to every trainable tensor, in a stable order.
    pub fn param_entries(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        let bb = &self.backbone;
        for (name, lin) in [("fc1", &bb.fc1), ("fc2", &bb.fc2), ("fc3", &bb.fc3)] {
            out.push((format!("backbone.{name}.w"), &lin.w));
            out.push((format!("backbone.{name}.b"), &lin.b));
        }
        let g = &bb.gru;
        for (name, t) in [
            ("w_ir", &g.w_ir),
            ("w_iz", &g.w_iz),
            ("w_in", &g.w_in),
            ("u_hr", &g.u_hr),
            ("u_hz", &g.u_hz),
            ("u_hn", &g.u_hn),
            ("b_r", &g.b_r),
            ("b_z", &g.b_z),
            ("b_in", &g.b_in),
            ("b_hn", &g.b_hn),
        ] {
            out.push((format!("backbone.gru.{name}"), t));
        }
        match &self.cond {
            TaskConditioning::Heads(heads) => {
                for (task, lin) in heads {
                    out.push((format!("head.{task}.w"), &lin.w));
                    out.push((format!("head.{task}.b"), &lin.b));
                }
            }
            TaskConditioning::Embedding { head, embeddings } => {
                out.push(("head.w".to_string(), &head.w));
                out.push(("head.b".to_string(), &head.b));
                for (task, e) in embeddings {
                    out.push((format!("embed.{task}"), e));
                }
            }
        }
        out
    }

    pub fn param_entries_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        let bb = &mut self.backbone;
        for (name, lin) in [
            ("fc1", &mut bb.fc1),
            ("fc2", &mut bb.fc2),
            ("fc3", &mut bb.fc3),
        ] {
            out.push((format!("backbone.{name}.w"), &mut lin.w));
            out.push((format!("backbone.{name}.b"), &mut lin.b));
        }
        let g = &mut bb.gru;
        for (name, t) in [
            ("w_ir", &mut g.w_ir),
            ("w_iz", &mut g.w_iz),
            ("w_in", &mut g.w_in),
            ("u_hr", &mut g.u_hr),
            ("u_hz", &mut g.u_hz),
            ("u_hn", &mut g.u_hn),
            ("b_r", &mut g.b_r),
            ("b_z", &mut g.b_z),
            ("b_in", &mut g.b_in),
            ("b_hn", &mut g.b_hn),
        ] {
            out.push((format!("backbone.gru.{name}"), t));
        }
        match &mut self.cond {
            TaskConditioning::Heads(heads) => {
                for (task, lin) in heads.iter_mut() {
                    out.push((format!("head.{task}.w"), &mut lin.w));
                    out.push((format!("head.{task}.b"), &mut lin.b));
                }
            }
            TaskConditioning::Embedding { head, embeddings } => {
                out.push(("head.w".to_string(), &mut head.w));
                out.push(("head.b".to_string(), &mut head.b));
                for (task, e) in embeddings.iter_mut() {
                    out.push((format!("embed.{task}"), e));
                }
            }
        }
        out
    }

    pub fn export_params(&self) -> BTreeMap<String, Tensor> {
        self.param_entries()
            .into_iter()
            .map(|(k, v)| (k, v.clone()))
            .collect()
    }

    pub fn import_params(&mut self, map: &BTreeMap<String, Tensor>) -> Result<()> {
        let mut seen = 0usize;
        for (name, t) in self.param_entries_mut() {
            let src = map
                .get(&name)
                .ok_or_else(|| Error::Other(format!("import: missing parameter `{name}`")))?;
            if !src.same_shape(t) {
                return Err(Error::Other(format!(
                    "import: shape mismatch for `{name}`: {:?} vs {:?}",
                    src.shape(),
                    t.shape()
                )));
            }
            *t = src.clone();
            seen += 1;
        }
        if seen != map.len() {
            return Err(Error::Other(format!(
                "import: {} tensors supplied for {} parameters",
                map.len(),
                seen
            )));
        }
        Ok(())
    }

    pub fn num_scalar_params(&self) -> usize {
        self.param_entries().iter().map(|(_, t)| t.len()).sum()
    }
}

fn glorot(rng: &mut ChaCha8Rng, fan_out: usize, fan_in: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(&[fan_out, fan_in], |_| rng.random_range(-limit..limit))
}

fn linear(rng: &mut ChaCha8Rng, fan_out: usize, fan_in: usize) -> LinearParams {
    LinearParams {
        w: glorot(rng, fan_out, fan_in),
        b: Tensor::zeros(&[fan_out]),
    }
}

/// Fresh parameters: Glorot-uniform matrices, zero biases, embeddings
/// uniform in +-0.1. Deterministic given the RNG state.
pub fn init_model(
    variant: ModelVariant,
    roster: &[String],
    widths: ModelWidths,
    rng: &mut ChaCha8Rng,
) -> ModelParams {
    let input_dim = match variant {
        ModelVariant::MultiHead => WEATHER_DIM,
        ModelVariant::Embedding => WEATHER_DIM + EMBED_DIM,
    };
    let (h1, h2) = (widths.h1, widths.h2);
    let backbone = BackboneParams {
        fc1: linear(rng, h1, input_dim),
        fc2: linear(rng, h2, h1),
        gru: GruParams {
            w_ir: glorot(rng, h2, h2),
            w_iz: glorot(rng, h2, h2),
            w_in: glorot(rng, h2, h2),
            u_hr: glorot(rng, h2, h2),
            u_hz: glorot(rng, h2, h2),
            u_hn: glorot(rng, h2, h2),
            b_r: Tensor::zeros(&[h2]),
            b_z: Tensor::zeros(&[h2]),
            b_in: Tensor::zeros(&[h2]),
            b_hn: Tensor::zeros(&[h2]),
        },
        fc3: linear(rng, h1, h2),
    };

    let mut sorted: Vec<String> = roster.to_vec();
    sorted.sort();
    let cond = match variant {
        ModelVariant::MultiHead => {
            let heads = sorted
                .iter()
                .map(|task| (task.clone(), linear(rng, OUTPUT_DIM, h1)))
                .collect();
            TaskConditioning::Heads(heads)
        }
        ModelVariant::Embedding => {
            let head = linear(rng, OUTPUT_DIM, h1);
            let embeddings = sorted
                .iter()
                .map(|task| {
                    let e = Tensor::from_fn(&[EMBED_DIM], |_| rng.random_range(-0.1..0.1));
                    (task.clone(), e)
                })
                .collect();
            TaskConditioning::Embedding { head, embeddings }
        }
    };

    ModelParams {
        variant,
        widths,
        backbone,
        cond,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;

    fn roster() -> Vec<String> {
        vec!["a".into(), "b".into(), "c".into()]
    }

    #[test]
    fn init_is_deterministic() {
        let mut r1 = derive_rng(5, &[1]);
        let mut r2 = derive_rng(5, &[1]);
        let m1 = init_model(ModelVariant::Embedding, &roster(), ModelWidths::default(), &mut r1);
        let m2 = init_model(ModelVariant::Embedding, &roster(), ModelWidths::default(), &mut r2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn export_import_roundtrip() {
        let mut rng = derive_rng(5, &[2]);
        let m = init_model(ModelVariant::MultiHead, &roster(), ModelWidths { h1: 8, h2: 12 }, &mut rng);
        let map = m.export_params();
        let mut m2 = m.clone();
        for (_, t) in m2.param_entries_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        m2.import_params(&map).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn multihead_has_head_per_task() {
        let mut rng = derive_rng(1, &[]);
        let m = init_model(ModelVariant::MultiHead, &roster(), ModelWidths { h1: 8, h2: 12 }, &mut rng);
        assert_eq!(m.roster(), roster());
        match &m.cond {
            TaskConditioning::Heads(h) => assert_eq!(h.len(), 3),
            _ => panic!("wrong conditioning"),
        }
    }

    #[test]
    fn embedding_model_has_single_head() {
        let mut rng = derive_rng(1, &[]);
        let m = init_model(ModelVariant::Embedding, &roster(), ModelWidths { h1: 8, h2: 12 }, &mut rng);
        match &m.cond {
            TaskConditioning::Embedding { embeddings, .. } => {
                assert_eq!(embeddings.len(), 3);
                assert!(embeddings.values().all(|e| e.len() == EMBED_DIM));
            }
            _ => panic!("wrong conditioning"),
        }
        let mean = m.mean_embedding().unwrap();
        assert_eq!(mean.len(), EMBED_DIM);
    }
}
