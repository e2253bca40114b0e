//! JSON model files.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{GnnConfig, GnnModel, Head, Layer};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeadRepr {
    #[serde(with = "crate::serial::matrix")]
    w: Array2<f64>,
    #[serde(with = "crate::serial::opt_vector", default, skip_serializing_if = "Option::is_none")]
    a_src: Option<Array1<f64>>,
    #[serde(with = "crate::serial::opt_vector", default, skip_serializing_if = "Option::is_none")]
    a_dst: Option<Array1<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    format_version: u32,
    config: GnnConfig,
    input_dim: usize,
    epochs_trained: usize,
    layers: Vec<Vec<HeadRepr>>,
}

impl GnnModel {
    pub fn to_json(&self) -> Result<String> {
        let repr = ModelRepr {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            input_dim: self.input_dim,
            epochs_trained: self.epochs_trained,
            layers: self
                .layers
                .iter()
                .map(|l| {
                    l.heads
                        .iter()
                        .map(|h| HeadRepr { w: h.w.clone(), a_src: h.a_src.clone(), a_dst: h.a_dst.clone() })
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&repr)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ModelRepr = serde_json::from_str(text)?;
        if repr.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                repr.format_version
            )));
        }
        let layers = repr
            .layers
            .into_iter()
            .map(|hs| Layer {
                heads: hs.into_iter().map(|h| Head { w: h.w, a_src: h.a_src, a_dst: h.a_dst }).collect(),
            })
            .collect();
        let mut m = GnnModel::from_layers(&repr.config, repr.input_dim, layers)?;
        m.epochs_trained = repr.epochs_trained;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
