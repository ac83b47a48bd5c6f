//! TOML pipeline configuration.
//!
//! Every key is optional. Command-line flags are applied on top with
//! [`PipelineConfig::apply`].

use std::path::{Path, PathBuf};

use flowae_core::{FlowSchema, ModelConfig, ModelMode, TrainConfig, TripletConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub schema: SchemaSection,
    pub sequence: SequenceSection,
    pub detect: DetectSection,
    pub smote: SmoteSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub paths: PathsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaSection {
    /// Empty means every column except the label and category columns.
    pub feature_columns: Vec<String>,
    pub label_column: String,
    pub category_column: Option<String>,
    pub benign_label: String,
    pub delimiter: char,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    pub length: usize,
    /// Defaults to `length` (non-overlapping windows).
    pub stride: Option<usize>,
    pub noise_scale: f64,
    pub train_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectSection {
    pub percentile: f64,
    /// Percentiles reported in the precision/recall curve.
    pub curve_percentiles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSection {
    pub enabled: bool,
    pub multiplier: f64,
    pub k_neighbors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Deterministic,
    Variational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub num_layers: usize,
    pub mode: ModeName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lambda_rec: f64,
    pub lambda_tml: f64,
    pub lambda_kl: f64,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for SchemaSection {
    fn default() -> Self {
        SchemaSection {
            feature_columns: Vec::new(),
            label_column: "label".into(),
            category_column: Some("category".into()),
            benign_label: "BENIGN".into(),
            delimiter: ',',
        }
    }
}

impl Default for SequenceSection {
    fn default() -> Self {
        SequenceSection { length: 25, stride: None, noise_scale: 0.01, train_fraction: 0.8 }
    }
}

impl Default for DetectSection {
    fn default() -> Self {
        DetectSection { percentile: 99.0, curve_percentiles: vec![90.0, 95.0, 99.0, 100.0] }
    }
}

impl Default for SmoteSection {
    fn default() -> Self {
        SmoteSection { enabled: false, multiplier: 2.0, k_neighbors: 5 }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { hidden_dim: 64, latent_dim: 32, num_layers: 1, mode: ModeName::Deterministic }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            lambda_rec: t.lambda_rec,
            lambda_tml: t.lambda_tml,
            lambda_kl: t.lambda_kl,
            margin: t.margin,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            clip_norm: t.clip_norm,
        }
    }
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub sequence_length: Option<usize>,
    pub stride: Option<usize>,
    pub noise_scale: Option<f64>,
    pub percentile: Option<f64>,
    pub smote_multiplier: Option<f64>,
    pub lambda_rec: Option<f64>,
    pub lambda_tml: Option<f64>,
    pub lambda_kl: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub hidden_dim: Option<usize>,
    pub latent_dim: Option<usize>,
    pub variational: bool,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(o.seed => self.seed);
        if o.input.is_some() {
            self.paths.input = o.input.clone();
        }
        if o.model.is_some() {
            self.paths.model = o.model.clone();
        }
        if o.output_dir.is_some() {
            self.paths.output_dir = o.output_dir.clone();
        }
        set!(o.sequence_length => self.sequence.length);
        if o.stride.is_some() {
            self.sequence.stride = o.stride;
        }
        set!(o.noise_scale => self.sequence.noise_scale);
        set!(o.percentile => self.detect.percentile);
        if let Some(m) = o.smote_multiplier {
            self.smote.enabled = true;
            self.smote.multiplier = m;
        }
        set!(o.lambda_rec => self.train.lambda_rec);
        set!(o.lambda_tml => self.train.lambda_tml);
        set!(o.lambda_kl => self.train.lambda_kl);
        set!(o.epochs => self.train.epochs);
        set!(o.batch_size => self.train.batch_size);
        set!(o.learning_rate => self.train.learning_rate);
        set!(o.hidden_dim => self.model.hidden_dim);
        set!(o.latent_dim => self.model.latent_dim);
        if o.variational {
            self.model.mode = ModeName::Variational;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(90.0..=100.0).contains(&self.detect.percentile) {
            return bad("percentile must lie in [90, 100]");
        }
        if self.detect.curve_percentiles.iter().any(|q| !(0.0..=100.0).contains(q)) {
            return bad("curve percentiles must lie in [0, 100]");
        }
        if self.sequence.length == 0 || self.stride() == 0 {
            return bad("sequence length and stride must be positive");
        }
        if !(self.sequence.noise_scale >= 0.0) {
            return bad("noise_scale must be non-negative");
        }
        if self.smote.enabled && !(self.smote.multiplier >= 1.0) {
            return bad("smote multiplier must be at least 1");
        }
        if !self.schema.delimiter.is_ascii() {
            return bad("delimiter must be a single ASCII character");
        }
        self.train_config().validate()?;
        self.model_config(1).validate()?;
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.sequence.stride.unwrap_or(self.sequence.length)
    }

    pub fn delimiter(&self) -> u8 {
        self.schema.delimiter as u8
    }

    /// Schema with `feature_columns` resolved against a CSV header when the
    /// config leaves them empty.
    pub fn schema_for_header(&self, header: &[String]) -> FlowSchema {
        let feature_columns = if self.schema.feature_columns.is_empty() {
            header
                .iter()
                .filter(|h| **h != self.schema.label_column && Some(*h) != self.schema.category_column.as_ref())
                .cloned()
                .collect()
        } else {
            self.schema.feature_columns.clone()
        };
        FlowSchema {
            feature_columns,
            label_column: self.schema.label_column.clone(),
            attack_category_column: self.schema.category_column.clone(),
            benign_label_value: self.schema.benign_label.clone(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            lambda_rec: t.lambda_rec,
            lambda_tml: t.lambda_tml,
            lambda_kl: t.lambda_kl,
            margin: t.margin,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            clip_norm: t.clip_norm,
            seed: self.seed,
        }
    }

    pub fn model_config(&self, input_dim: usize) -> ModelConfig {
        ModelConfig {
            input_dim,
            hidden_dim: self.model.hidden_dim,
            latent_dim: self.model.latent_dim,
            num_layers: self.model.num_layers,
            mode: match self.model.mode {
                ModeName::Deterministic => ModelMode::Deterministic,
                ModeName::Variational => ModelMode::Variational,
            },
            seed: self.seed,
        }
    }

    pub fn triplet_config(&self) -> TripletConfig {
        TripletConfig {
            noise_scale: self.sequence.noise_scale,
            sequence_length: self.sequence.length,
            stride: self.stride(),
            seed: self.seed,
        }
    }
}
