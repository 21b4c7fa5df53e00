use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::ModelParams;
use crate::data::FeatureStats;
use crate::Result;

/// Self-describing model container: variant, widths, every parameter
/// array, the task roster (keys of the parameter maps), the normalization
/// statistics the model was trained with, and a fingerprint of the
/// training configuration. JSON floats are written in shortest
/// round-trip form, so save/load is exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub model: ModelParams,
    pub feature_stats: FeatureStats,
    pub train_config: serde_json::Value,
    pub fingerprint: String,
}

impl ModelBundle {
    pub fn new(
        model: ModelParams,
        feature_stats: FeatureStats,
        train_config: serde_json::Value,
    ) -> ModelBundle {
        let fingerprint = fingerprint_of(&model, &train_config);
        ModelBundle {
            model,
            feature_stats,
            train_config,
            fingerprint,
        }
    }

    pub fn roster(&self) -> Vec<String> {
        self.model.roster()
    }
}

/// Hex digest over the serialized configuration and parameters. Two runs
/// that produced bit-identical models share a fingerprint.
pub fn fingerprint_of(model: &ModelParams, train_config: &serde_json::Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(train_config.to_string().as_bytes());
    hasher.update(serde_json::to_string(model).expect("model serializes").as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    serde_json::to_writer(std::io::BufWriter::new(file), bundle)?;
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let file = std::fs::File::open(path.as_ref())?;
    let bundle = serde_json::from_reader(std::io::BufReader::new(file))?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::super::params::{init_model, ModelVariant, ModelWidths};
    use super::*;
    use crate::data::FeatureStats;
    use crate::seed::derive_rng;

    #[test]
    fn bundle_roundtrip_exact() {
        let mut rng = derive_rng(3, &[8]);
        let model = init_model(
            ModelVariant::Embedding,
            &["x".into(), "y".into()],
            ModelWidths { h1: 8, h2: 10 },
            &mut rng,
        );
        let stats = FeatureStats {
            mean: [0.5; 12],
            std: [2.0; 12],
        };
        let bundle = ModelBundle::new(model, stats, serde_json::json!({"epochs": 3}));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_bundle(&bundle, &path).unwrap();
        let back = load_bundle(&path).unwrap();
        assert_eq!(bundle, back);
    }
}
