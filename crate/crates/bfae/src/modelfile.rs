//! Trained-model files: a JSON header (configuration, layer shapes, seed,
//! epochs trained) followed by every parameter in one row-major array,
//! layer by layer, weights before biases.

use std::fs;
use std::path::Path;

use bfae_core::{BfaeConfig, BfaeModel, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

pub const FORMAT: &str = "bfae-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub format: String,
    pub version: u32,
    pub config: BfaeConfig,
    pub data_grid: Grid,
    /// `[j_out, j_in, m_out, m_in]` per layer.
    pub shapes: Vec<[usize; 4]>,
    pub seed: u64,
    pub epochs_trained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub header: ModelHeader,
    pub parameters: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(model: &BfaeModel, config: &BfaeConfig, epochs_trained: usize) -> Self {
        let shapes = model.layers.iter().map(|l| [l.j_out, l.j_in, l.m_out(), l.m_in()]).collect();
        let parameters = model.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases).copied()).collect();
        Self {
            header: ModelHeader {
                format: FORMAT.into(),
                version: VERSION,
                config: config.clone(),
                data_grid: model.data_grid().clone(),
                shapes,
                seed: config.seed,
                epochs_trained,
            },
            parameters,
        }
    }

    /// Rebuild the model described by the header and fill in the payload.
    pub fn into_model(self) -> Result<(BfaeModel, ModelHeader)> {
        let h = self.header;
        if h.format != FORMAT || h.version != VERSION {
            return Err(Error::Config(format!(
                "unsupported model file {} v{} (expected {FORMAT} v{VERSION})",
                h.format, h.version
            )));
        }
        let grid = Grid::from_points(h.data_grid.points().to_vec())?;
        let mut model = BfaeModel::build_on_grid(&h.config, &grid)?;
        let shapes: Vec<[usize; 4]> = model.layers.iter().map(|l| [l.j_out, l.j_in, l.m_out(), l.m_in()]).collect();
        if shapes != h.shapes {
            return Err(Error::Config(format!("layer shapes {:?} disagree with configuration {:?}", h.shapes, shapes)));
        }
        if self.parameters.len() != model.n_params() {
            return Err(Error::Config(format!(
                "payload has {} values, model needs {}",
                self.parameters.len(),
                model.n_params()
            )));
        }
        let mut it = self.parameters.into_iter();
        for l in &mut model.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok((model, h))
    }
}

pub fn save_model(model: &BfaeModel, config: &BfaeConfig, epochs_trained: usize, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string(&ModelFile::from_model(model, config, epochs_trained))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn load_model(path: &Path) -> Result<(BfaeModel, ModelHeader)> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Format { path: path.into(), message: format!("bad model file: {e}") })?;
    file.into_model()
}
