//! The backbone encoder and the two multi-task architectures.
//!
//! Both variants share a backbone: two fully connected ReLU layers, a
//! single-layer GRU, and a third fully connected ReLU layer. A head set is
//! seven single-output linear units per day: three LTE values in deg C and
//! four phenology logits (the sigmoid lives in the loss).
//!
//! The MultiHead variant owns one head set per source task. The Embedding
//! variant owns a single shared head set plus a trainable 12-dimensional
//! vector per task, concatenated onto every timestep's weather features
//! before the first layer; any 12-vector, trained or not, specifies a task.

mod bundle;
mod forward;
mod params;

pub use bundle::{fingerprint_of, load_bundle, save_bundle, ModelBundle};
pub use forward::{encode, predict_embedding, predict_multihead, BoundModel};
pub use params::{
    init_model, BackboneParams, GruParams, LinearParams, ModelParams, ModelVariant, ModelWidths,
    TaskConditioning,
};

/// Width of the weather feature vector.
pub const WEATHER_DIM: usize = crate::data::NUM_FEATURES;
/// Task embedding width.
pub const EMBED_DIM: usize = 12;
/// Head outputs per day: lte10, lte50, lte90, then four phenology logits.
pub const OUTPUT_DIM: usize = 7;
pub const LTE10_COL: usize = 0;
pub const LTE50_COL: usize = 1;
pub const LTE90_COL: usize = 2;
pub const PHENO_COL0: usize = 3;
