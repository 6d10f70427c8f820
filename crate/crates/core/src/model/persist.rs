use serde::{Deserialize, Serialize};

use super::{HiddenLayer, InitStrategy, Topology, TrainedModel};
use crate::error::{Error, Result};
use crate::numkernel::Matrix;

const FORMAT: &str = "rvfl-model/1";

/// JSON document for a trained model. Floats are written in shortest
/// round-trip form, so loading reproduces every stored value bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedModel {
    pub format: String,
    pub topology: Topology,
    pub strategy: InitStrategy,
    /// Row-major `m × n` hidden weights.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<usize>>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SavedModel {
    pub fn from_model(model: &TrainedModel, seed: Option<u64>) -> Self {
        SavedModel {
            format: FORMAT.to_owned(),
            topology: model.topology,
            strategy: model.strategy,
            weights: model.hidden.weights.as_slice().to_vec(),
            biases: model.hidden.biases.clone(),
            anchors: model.hidden.anchors.clone(),
            beta: model.beta.clone(),
            seed,
        }
    }

    pub fn into_model(self) -> Result<TrainedModel> {
        if self.format != FORMAT {
            return Err(Error::Serialization(format!(
                "unsupported model format {:?}, expected {FORMAT:?}",
                self.format
            )));
        }
        let topo = Topology::new(
            self.topology.inputs,
            self.topology.hidden,
            self.topology.direct_links,
            self.topology.output_bias,
        )?;
        self.strategy.validate()?;
        let weights = Matrix::new(topo.hidden, topo.inputs, self.weights)?;
        let hidden = HiddenLayer { weights, biases: self.biases, anchors: self.anchors };
        TrainedModel::new(topo, self.strategy, hidden, self.beta)
    }
}

impl TrainedModel {
    pub fn to_json(&self, seed: Option<u64>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SavedModel::from_model(self, seed))?)
    }

    /// Parses a model document, returning the model and its recorded seed.
    pub fn from_json(text: &str) -> Result<(TrainedModel, Option<u64>)> {
        let saved: SavedModel = serde_json::from_str(text)?;
        let seed = saved.seed;
        Ok((saved.into_model()?, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{train, Configuration};
    use crate::synthdata::{derive_stream, sample_dataset, TargetFunction};

    #[test]
    fn json_round_trip_is_bit_exact() {
        let data = sample_dataset(TargetFunction::NlfL, 2, 100, 0.05, &derive_stream(1, &[("d", 0)])).unwrap();
        for strategy in [
            InitStrategy::Gs { u: 3.0 },
            InitStrategy::GAlpha { alpha_min: 15.0, alpha_max: 90.0 },
        ] {
            let t = Topology::from_configuration(2, 17, Configuration::WithLinksNoBias).unwrap();
            let model = train(&t, &strategy, &data, &mut derive_stream(1, &[("i", 0)]).rng()).unwrap();
            let text = model.to_json(Some(99)).unwrap();
            let (back, seed) = TrainedModel::from_json(&text).unwrap();
            assert_eq!(seed, Some(99));
            assert_eq!(back, model);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&back.beta), bits(&model.beta));
        }
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let data = sample_dataset(TargetFunction::L, 1, 20, 0.0, &derive_stream(1, &[("d", 0)])).unwrap();
        let t = Topology::from_configuration(1, 3, Configuration::WithLinksWithBias).unwrap();
        let model = train(&t, &InitStrategy::Gs { u: 1.0 }, &data, &mut derive_stream(1, &[("i", 0)]).rng()).unwrap();
        let mut saved = SavedModel::from_model(&model, None);
        saved.beta.pop();
        assert!(saved.clone().into_model().is_err());
        saved.format = "other".into();
        assert!(saved.into_model().is_err());
        assert!(TrainedModel::from_json("{\"format\": 1}").is_err());
    }
}
