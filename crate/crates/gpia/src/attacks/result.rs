//! Attack results and their file formats.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

/// One test subgraph's verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample: usize,
    pub truth: usize,
    pub predicted: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub attack_id: String,
    pub layers: Vec<usize>,
    pub aggregation: String,
    pub alignment: String,
    pub classifier: String,
    pub accuracy: f64,
    /// Held-out node accuracy of the target-side models, as observed.
    pub target_accuracy: Option<f64>,
    pub n_test: usize,
    pub seed: u64,
    pub config_hash: String,
    #[serde(skip)]
    pub predictions: Vec<Prediction>,
}

impl AttackResult {
    /// A result for a method without layers, aggregation or classifier
    /// choices of its own.
    pub fn baseline(name: &str, predictions: Vec<Prediction>, seed: u64) -> Result<Self> {
        precondition(!predictions.is_empty(), || format!("{name} produced no predictions"))?;
        let correct = predictions.iter().filter(|p| p.truth == p.predicted).count();
        Ok(AttackResult {
            attack_id: name.into(),
            layers: Vec::new(),
            aggregation: "none".into(),
            alignment: "none".into(),
            classifier: "none".into(),
            accuracy: correct as f64 / predictions.len() as f64,
            target_accuracy: None,
            n_test: predictions.len(),
            seed,
            config_hash: String::new(),
            predictions,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// `sample,truth,predicted,score`, one row per test subgraph.
    pub fn write_predictions_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for p in &self.predictions {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_round_trip() {
        let preds = vec![
            Prediction { sample: 0, truth: 1, predicted: 1, score: 0.75 },
            Prediction { sample: 1, truth: 0, predicted: 1, score: 0.5 },
        ];
        let r = AttackResult::baseline("baseline-dsad", preds, 7).unwrap();
        assert_eq!(r.accuracy, 0.5);
        let dir = tempfile::tempdir().unwrap();
        r.write_json(dir.path().join("r.json")).unwrap();
        let back: AttackResult =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(back.accuracy, r.accuracy);
        assert!(back.predictions.is_empty());
        r.write_predictions_csv(dir.path().join("p.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
        assert_eq!(text, "sample,truth,predicted,score\n0,1,1,0.75\n1,0,1,0.5\n");
    }
}
