//! Model files: versioned JSON with trees as nested nodes that carry feature
//! names. Floats are written in shortest round-trip form, so a load
//! reproduces every prediction bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{GbdtEnsemble, GbdtParams, ModelError, TreeNode};
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "accepted-gbdt";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile<T> {
    format: String,
    format_version: u32,
    scalar: String,
    model_version: String,
    params: GbdtParams,
    feature_names: Vec<String>,
    base_score: T,
    eta: T,
    rounds: Vec<Vec<NodeFile<T>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum NodeFile<T> {
    Leaf {
        weight: T,
    },
    Split {
        feature: String,
        feature_index: usize,
        threshold: T,
        missing_goes_left: bool,
        left: Box<NodeFile<T>>,
        right: Box<NodeFile<T>>,
    },
}

fn scalar_name<T>() -> String {
    format!("f{}", 8 * std::mem::size_of::<T>())
}

fn to_file<T: Scalar>(node: &TreeNode<T>, names: &[String]) -> NodeFile<T> {
    match node {
        TreeNode::Leaf { weight } => NodeFile::Leaf { weight: *weight },
        TreeNode::Split { feature, threshold, missing_goes_left, left, right } => NodeFile::Split {
            feature: names[*feature].clone(),
            feature_index: *feature,
            threshold: *threshold,
            missing_goes_left: *missing_goes_left,
            left: Box::new(to_file(left, names)),
            right: Box::new(to_file(right, names)),
        },
    }
}

fn from_file<T: Scalar>(node: NodeFile<T>, names: &[String]) -> Result<TreeNode<T>, ModelError> {
    Ok(match node {
        NodeFile::Leaf { weight } => TreeNode::Leaf { weight },
        NodeFile::Split { feature, feature_index, threshold, missing_goes_left, left, right } => {
            if names.get(feature_index) != Some(&feature) {
                return Err(ModelError::Format(format!("split on {feature:?} does not match feature index {feature_index}")));
            }
            TreeNode::Split {
                feature: feature_index,
                threshold,
                missing_goes_left,
                left: Box::new(from_file(*left, names)?),
                right: Box::new(from_file(*right, names)?),
            }
        }
    })
}

fn file_of<T: Scalar>(ensemble: &GbdtEnsemble<T>, model_version: String) -> ModelFile<T> {
    let names = &ensemble.feature_names;
    ModelFile {
        format: MODEL_FORMAT.to_string(),
        format_version: MODEL_FORMAT_VERSION,
        scalar: scalar_name::<T>(),
        model_version,
        params: ensemble.params,
        feature_names: names.clone(),
        base_score: ensemble.base_score,
        eta: ensemble.eta,
        rounds: ensemble
            .rounds
            .iter()
            .map(|trees| trees.iter().map(|t| to_file(t, names)).collect())
            .collect(),
    }
}

/// Content hash identifying a trained model (first 16 hex digits of SHA-256
/// over the serialized model with an empty version field).
pub(crate) fn fingerprint<T: Scalar>(ensemble: &GbdtEnsemble<T>) -> String {
    let bytes = serde_json::to_vec(&file_of(ensemble, String::new())).expect("model serializes");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_model<T: Scalar, W: Write>(ensemble: &GbdtEnsemble<T>, mut sink: W) -> Result<(), ModelError> {
    let file = file_of(ensemble, ensemble.model_version.clone());
    serde_json::to_writer(&mut sink, &file).map_err(|e| ModelError::Format(e.to_string()))?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

pub fn load_model<T: Scalar, R: Read>(mut source: R) -> Result<GbdtEnsemble<T>, ModelError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| ModelError::Format(e.to_string()))?;
    match value.get("format").and_then(Value::as_str) {
        Some(MODEL_FORMAT) => {}
        other => return Err(ModelError::Format(format!("expected format {MODEL_FORMAT:?}, found {other:?}"))),
    }
    let version = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| ModelError::Format("missing format_version".into()))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(ModelError::Version {
            expected: MODEL_FORMAT_VERSION,
            found: u32::try_from(version).unwrap_or(u32::MAX),
        });
    }
    match value.get("scalar").and_then(Value::as_str) {
        Some(s) if s == scalar_name::<T>() => {}
        other => {
            return Err(ModelError::Format(format!(
                "model stores {other:?} values, loader expects {}",
                scalar_name::<T>()
            )))
        }
    }
    let file: ModelFile<T> = serde_json::from_value(value).map_err(|e| ModelError::Format(e.to_string()))?;
    file.params.validate()?;
    let names = file.feature_names;
    let rounds = file
        .rounds
        .into_iter()
        .map(|trees| trees.into_iter().map(|t| from_file(t, &names)).collect())
        .collect::<Result<_, _>>()?;
    Ok(GbdtEnsemble {
        params: file.params,
        feature_names: names,
        base_score: file.base_score,
        eta: file.eta,
        rounds,
        model_version: file.model_version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{train, Dataset};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fitted() -> (GbdtEnsemble<f64>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|r| u8::from(r[0] + 0.3 * r[2] + rng.gen_range(-0.3..0.3) > 0.0)).collect();
        let data = Dataset::new((0..4).map(|i| format!("x{i}")).collect(), &rows, labels).unwrap();
        let params = GbdtParams { num_rounds: 5, gamma: 0.0, max_depth: 4, ..GbdtParams::default() };
        (train(&data, &params).unwrap(), rows)
    }

    fn saved(model: &GbdtEnsemble<f64>) -> String {
        let mut out = Vec::new();
        save_model(model, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let (model, rows) = fitted();
        let text = saved(&model);
        let back: GbdtEnsemble<f64> = load_model(text.as_bytes()).unwrap();
        assert_eq!(back, model);
        for row in &rows[..100] {
            assert_eq!(back.probability(row).unwrap().to_bits(), model.probability(row).unwrap().to_bits());
        }
        assert_eq!(saved(&back), text);
        assert_eq!(model.model_version.len(), 16);
        assert_eq!(fingerprint(&back), model.model_version);
        assert!(text.contains("\"feature\":\"x0\""));
    }

    #[test]
    fn truncated_file_fails() {
        let (model, _) = fitted();
        let text = saved(&model);
        let cut = &text[..text.len() / 2];
        assert!(matches!(load_model::<f64, _>(cut.as_bytes()), Err(ModelError::Format(_))));
    }

    #[test]
    fn unknown_version_fails() {
        let (model, _) = fitted();
        let text = saved(&model).replace("\"format_version\":1", "\"format_version\":7");
        assert!(matches!(load_model::<f64, _>(text.as_bytes()), Err(ModelError::Version { found: 7, .. })));
        let text = saved(&model).replace(MODEL_FORMAT, "other");
        assert!(matches!(load_model::<f64, _>(text.as_bytes()), Err(ModelError::Format(_))));
    }

    #[test]
    fn scalar_width_is_checked() {
        let (model, _) = fitted();
        assert!(load_model::<f32, _>(saved(&model).as_bytes()).is_err());
    }
}
