//! Experiment configuration.
//!
//! A configuration file is JSON with a `schema_version` field. Resolution
//! order: the preset for `kind`, then the file, then `--set a.b=value`
//! overrides, then `--paper-scale`. Unknown keys are rejected at every step
//! so typos do not pass silently.

use std::path::{Path, PathBuf};

use bfae_core::downstream::PipelineConfig;
use bfae_core::{Activation, BfaeConfig, GradientMetric, InitScheme};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Sim1,
    Sim10,
    Phoneme,
    Adelaide,
    Custom,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sim1 => "sim1",
            ExperimentKind::Sim10 => "sim10",
            ExperimentKind::Phoneme => "phoneme",
            ExperimentKind::Adelaide => "adelaide",
            ExperimentKind::Custom => "custom",
        }
    }

    pub fn is_real_data(self) -> bool {
        matches!(self, ExperimentKind::Phoneme | ExperimentKind::Adelaide)
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match Either::deserialize(d)? {
        Either::One(v) => vec![v],
        Either::Many(v) => v,
    })
}

/// Gaussian-process simulation settings. Every `(n_samples, n_points)`
/// pair is one benchmark cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(deserialize_with = "one_or_many")]
    pub n_samples: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub n_points: Vec<usize>,
    pub n_features: usize,
    pub sigma2: f64,
    pub rho: f64,
    pub noise_sd: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { n_samples: vec![100], n_points: vec![50], n_features: 1, sigma2: 1.0, rho: 0.5, noise_sd: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenLayer {
    pub features: usize,
    pub points: usize,
}

/// Architecture and optimiser for the BFAE rows (and, mirrored, the AE).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BfaeSettings {
    /// `R'`.
    pub latent_features: usize,
    /// Latent grid size of the "BFAE" row; `null` means `M`.
    pub latent_points: Option<usize>,
    /// Latent grid size of the "BFAE (M')" row; `null` means `M/5`.
    pub reduced_points: Option<usize>,
    /// Extra layers on each side of the latent layer, outermost first.
    pub hidden: Vec<HiddenLayer>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub lr: f64,
    pub epochs: usize,
    pub momentum: f64,
    pub batch_size: Option<usize>,
    pub metric: GradientMetric,
    pub init: InitScheme,
}

impl Default for BfaeSettings {
    fn default() -> Self {
        Self {
            latent_features: 1,
            latent_points: None,
            reduced_points: None,
            hidden: Vec::new(),
            hidden_activation: Activation::Linear,
            output_activation: Activation::Linear,
            lr: 0.3,
            epochs: 20000,
            momentum: 0.0,
            batch_size: None,
            metric: GradientMetric::FunctionSpace,
            init: InitScheme::Continuum,
        }
    }
}

impl BfaeSettings {
    pub fn main_points(&self, m: usize) -> usize {
        self.latent_points.unwrap_or(m)
    }

    pub fn reduced_points(&self, m: usize) -> usize {
        self.reduced_points.unwrap_or((m / 5).max(1))
    }

    /// Model configuration for data with `r` features on `m` points and a
    /// latent grid of `m_latent` points on `interval`.
    pub fn model_config(&self, r: usize, m: usize, m_latent: usize, interval: [f64; 2], seed: u64) -> BfaeConfig {
        let hidden: Vec<(usize, usize)> = self.hidden.iter().map(|h| (h.features, h.points)).collect();
        let mut c = BfaeConfig::deep_autoencoder(r, m, self.latent_features, m_latent, &hidden);
        let layers = c.n_layers();
        c.activations = vec![self.hidden_activation; layers];
        c.activations[layers - 1] = self.output_activation;
        c.interval = interval;
        c.lr = self.lr;
        c.epochs = self.epochs;
        c.momentum = self.momentum;
        c.batch_size = self.batch_size;
        c.metric = self.metric;
        c.init = self.init;
        c.seed = seed;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Methods {
    pub pca: bool,
    pub ae: bool,
    pub fpca: bool,
    pub bfae: bool,
    pub bfae_reduced: bool,
}

impl Default for Methods {
    fn default() -> Self {
        Self { pca: true, ae: true, fpca: true, bfae: true, bfae_reduced: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSettings {
    pub train_fraction: f64,
    pub shuffle: bool,
}

impl Default for SplitSettings {
    fn default() -> Self {
        Self { train_fraction: 0.8, shuffle: true }
    }
}

/// Real-data inputs. With `synthetic` set, look-alike data are generated
/// instead of read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSettings {
    pub inputs: Option<PathBuf>,
    /// Paired functional responses (Adelaide demand).
    pub responses: Option<PathBuf>,
    pub synthetic: bool,
    /// Sample count of the synthetic stand-in.
    pub n_samples: usize,
}

impl Default for DataSettings {
    fn default() -> Self {
        Self { inputs: None, responses: None, synthetic: true, n_samples: 800 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replications: usize,
    pub sim: SimSettings,
    pub split: SplitSettings,
    pub bfae: BfaeSettings,
    pub methods: Methods,
    /// Explained-variance share kept by PCA and FPCA.
    pub variance_target: f64,
    /// z-score inputs before reduction (real data).
    pub standardize: bool,
    pub pipeline: PipelineConfig,
    pub data: DataSettings,
}

impl ExperimentConfig {
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = Self {
            schema_version: SCHEMA_VERSION,
            kind,
            seed: 0,
            replications: 10,
            sim: SimSettings::default(),
            split: SplitSettings::default(),
            bfae: BfaeSettings::default(),
            methods: Methods::default(),
            variance_target: bfae_core::baselines::DEFAULT_VARIANCE_TARGET,
            standardize: false,
            pipeline: PipelineConfig::default(),
            data: DataSettings::default(),
        };
        match kind {
            ExperimentKind::Sim1 | ExperimentKind::Custom => base,
            ExperimentKind::Sim10 => Self {
                sim: SimSettings { n_features: 10, ..SimSettings::default() },
                bfae: BfaeSettings { latent_features: 4, epochs: 2000, ..BfaeSettings::default() },
                ..base
            },
            ExperimentKind::Phoneme => Self {
                replications: 1,
                standardize: true,
                bfae: BfaeSettings { latent_features: 1, reduced_points: Some(30), epochs: 2000, ..BfaeSettings::default() },
                data: DataSettings { n_samples: 800, ..DataSettings::default() },
                ..base
            },
            ExperimentKind::Adelaide => Self {
                replications: 1,
                standardize: true,
                split: SplitSettings { train_fraction: 400.0 / 508.0, shuffle: true },
                bfae: BfaeSettings {
                    latent_features: 4,
                    reduced_points: Some(12),
                    lr: 0.03,
                    epochs: 2000,
                    ..BfaeSettings::default()
                },
                data: DataSettings { n_samples: 508, ..DataSettings::default() },
                ..base
            },
        }
    }

    /// Full-size settings: 100 replications and, for simulations,
    /// `N ∈ {100, 1000}`, `M ∈ {50, 250}`.
    pub fn apply_paper_scale(&mut self) {
        self.replications = 100;
        if !self.kind.is_real_data() {
            self.sim.n_samples = vec![100, 1000];
            self.sim.n_points = vec![50, 250];
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.replications == 0 {
            return fail("replications must be >= 1".into());
        }
        if self.sim.n_samples.is_empty() || self.sim.n_points.is_empty() {
            return fail("sim.n_samples and sim.n_points need at least one value".into());
        }
        if self.sim.n_samples.iter().any(|&n| n < 2) || self.sim.n_points.iter().any(|&m| m < 2) {
            return fail("sim sizes must be >= 2".into());
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction < 1.0) {
            return fail(format!("split.train_fraction {} not in (0, 1)", self.split.train_fraction));
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return fail(format!("variance_target {} not in (0, 1]", self.variance_target));
        }
        if self.bfae.latent_features == 0 {
            return fail("bfae.latent_features must be >= 1".into());
        }
        Ok(())
    }

    /// Short stable fingerprint of the resolved configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("configuration serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn merge(base: &mut Value, over: Value, path: &str) -> Result<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &p)?,
                    None => return Err(Error::Config(format!("unknown key {p}"))),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

/// Apply one `key.path=value` override. The value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = &mut *doc;
    for part in key.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(part))
            .ok_or_else(|| Error::Config(format!("unknown key {key}")))?;
    }
    *slot = value;
    Ok(())
}

/// Resolve a configuration from an optional file plus overrides.
pub fn resolve(
    file: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
    paper_scale: bool,
) -> Result<ExperimentConfig> {
    let file_doc: Option<Value> = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            Some(serde_json::from_str(&text).map_err(|e| Error::Format { path: p.into(), message: e.to_string() })?)
        }
        None => None,
    };
    // the kind picks the preset, so find it first
    let mut kind_doc = Value::String("sim1".into());
    if let Some(k) = file_doc.as_ref().and_then(|d| d.get("kind")) {
        kind_doc = k.clone();
    }
    for o in overrides {
        if let Some(("kind", raw)) = o.split_once('=') {
            kind_doc = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
        }
    }
    let kind: ExperimentKind =
        serde_json::from_value(kind_doc).map_err(|e| Error::Config(format!("bad experiment kind: {e}")))?;
    let mut doc = serde_json::to_value(ExperimentConfig::preset(kind))?;
    if let Some(f) = file_doc {
        merge(&mut doc, f, "")?;
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let mut config: ExperimentConfig =
        serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if paper_scale {
        config.apply_paper_scale();
    }
    config.validate()?;
    Ok(config)
}
