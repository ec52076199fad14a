use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{P2gError, Result};
use crate::gnn::{GnnArch, TrainConfig};
use crate::pnet::{EncoderConfig, EncoderPreset};
use crate::synth::{check_horizons, segment_starts, FrameDims};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub t_total: usize,
    pub height: usize,
    pub width: usize,
    pub segment_length: usize,
    pub horizons: Vec<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { n_train: 60, n_val: 20, n_test: 20, t_total: 64, height: 16, width: 16, segment_length: 8, horizons: vec![8, 16, 32] }
    }
}

impl DatasetConfig {
    pub fn dims(&self) -> FrameDims {
        FrameDims { t_total: self.t_total, height: self.height, width: self.width }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSettings {
    pub preset: EncoderPreset,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        Self { preset: EncoderPreset::Mini, lr: 0.005, epochs: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecoderSettings {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        Self { lr: 0.001, epochs: 25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSettings {
    pub k: usize,
    pub virtual_root: bool,
}

impl Default for GraphSettings {
    fn default() -> Self {
        Self { k: 16, virtual_root: false }
    }
}

/// Optimiser settings shared by the GNNs and the MLP baseline; the training
/// seed is derived per system and repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerSettings {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        Self { epochs: 300, lr: 1e-3, batch_size: 8 }
    }
}

impl LearnerSettings {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig { epochs: self.epochs, lr: self.lr, batch_size: self.batch_size, seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnSettings {
    /// Architecture of the single-system `traingnn`/`eval` view; ablations
    /// always train the architectures their rows name.
    pub arch: GnnArch,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for GnnSettings {
    fn default() -> Self {
        let l = LearnerSettings::default();
        Self { arch: GnnArch::Gat, epochs: l.epochs, lr: l.lr, batch_size: l.batch_size }
    }
}

impl GnnSettings {
    pub fn learner(&self) -> LearnerSettings {
        LearnerSettings { epochs: self.epochs, lr: self.lr, batch_size: self.batch_size }
    }
}

/// Which ablation rows to produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationFlags {
    pub encoder_baseline: bool,
    pub vec: bool,
    pub gatedgcn: bool,
    pub dec_s: bool,
    pub dec_m_npt: bool,
    pub dec_m: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self { encoder_baseline: true, vec: true, gatedgcn: true, dec_s: true, dec_m_npt: true, dec_m: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub encoder: EncoderSettings,
    pub decoder: DecoderSettings,
    pub graph: GraphSettings,
    pub gnn: GnnSettings,
    pub mlp: LearnerSettings,
    pub ablation: AblationFlags,
    pub repeats: usize,
    /// Threads for per-subject work; results do not depend on it.
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dataset: DatasetConfig::default(),
            encoder: EncoderSettings::default(),
            decoder: DecoderSettings::default(),
            graph: GraphSettings::default(),
            gnn: GnnSettings::default(),
            mlp: LearnerSettings::default(),
            ablation: AblationFlags::default(),
            repeats: 3,
            workers: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn config_err(msg: impl Into<String>) -> P2gError {
    P2gError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        let d = &self.dataset;
        match self.encoder.preset {
            EncoderPreset::Mini => EncoderConfig::mini(d.segment_length, d.height, d.width),
            EncoderPreset::Resnet17 => EncoderConfig::resnet17(d.segment_length, d.height, d.width),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.n_train < 2 || d.n_val == 0 || d.n_test == 0 {
            return Err(config_err("need at least 2 training and 1 validation and test subject"));
        }
        check_horizons(&d.horizons).map_err(|e| config_err(e.to_string()))?;
        if segment_starts(d.t_total, d.segment_length, *d.horizons.iter().max().unwrap_or(&0)).is_empty() {
            return Err(config_err(format!(
                "a {}-frame sequence has no segment of length {} with horizon {:?}",
                d.t_total, d.segment_length, d.horizons
            )));
        }
        self.encoder_config().latent_shape().map_err(|e| config_err(e.to_string()))?;
        let positive = [
            ("encoder.lr", self.encoder.lr),
            ("decoder.lr", self.decoder.lr),
            ("gnn.lr", self.gnn.lr),
            ("mlp.lr", self.mlp.lr),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(config_err(format!("{name} = {v} must be finite and non-negative")));
        }
        if self.graph.k == 0 || self.gnn.batch_size == 0 || self.mlp.batch_size == 0 {
            return Err(config_err("graph.k and batch sizes must be positive"));
        }
        if self.repeats == 0 || self.workers == 0 {
            return Err(config_err("repeats and workers must be positive"));
        }
        Ok(())
    }

    /// Hex sha256 of the canonical JSON of every setting that can change a
    /// result; the output directory and worker count are excluded.
    pub fn content_hash(&self) -> String {
        let mut key = self.clone();
        key.out_dir = PathBuf::new();
        key.workers = 1;
        let bytes = serde_json::to_vec(&key).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }

    /// `<out_dir>/run-<first 16 hex digits of the content hash>`.
    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(format!("run-{}", &self.content_hash()[..16]))
    }
}
