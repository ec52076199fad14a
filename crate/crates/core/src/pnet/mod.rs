//! Person-specific networks: a shared encoder pre-trained on trait labels,
//! and per-subject decoders fitted self-supervised to predict the subject's
//! own future segments at several horizons.

mod decoder;
mod encoder;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use tensorcore::{Adam, AdamConfig, LossKind, ParamSet, Rng, Tape, Tensor};

pub use decoder::DecoderArch;
pub use encoder::{Encoder, EncoderConfig, EncoderPreset};

use crate::checkpoint::{read_json, read_params, write_json, write_params};
use crate::error::{P2gError, Result};
use crate::gnn::metric::acc;
use crate::synth::{iter_segments, SegmentPair, SubjectSequence, TraitVector};

/// Evenly spaced frame indices `round(i (T-1) / (M-1))`, `i = 0..M`.
pub fn downsample_indices(t_total: usize, m: usize) -> Result<Vec<usize>> {
    if m < 2 {
        return Err(P2gError::Invalid(format!("downsampling needs at least 2 frames, got {m}")));
    }
    if m > t_total {
        return Err(P2gError::Invalid(format!("cannot pick {m} frames out of {t_total}")));
    }
    let step = (t_total - 1) as f64 / (m - 1) as f64;
    Ok((0..m).map(|i| (i as f64 * step).round() as usize).collect())
}

/// `[M, H, W]` block of evenly spaced frames spanning the whole sequence.
pub fn downsample_sequence(seq: &SubjectSequence, m: usize) -> Result<Tensor<f32>> {
    let idx = downsample_indices(seq.t_total(), m)?;
    let frames = idx.iter().map(|&i| seq.block(i, 1)).collect::<Result<Vec<_>>>()?;
    let stacked = Tensor::stack(&frames)?;
    let s = seq.frames.shape();
    Ok(stacked.reshape(&[m, s[1], s[2]])?)
}

fn ensure_finite(loss: f64, what: &str) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(P2gError::Divergence(format!("{what}: loss became {loss}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PretrainLog {
    pub epoch_losses: Vec<f64>,
    pub val_acc: Vec<f64>,
}

/// Supervised encoder training: the head regresses the traits from the
/// downsampled sequence under an l1 loss, one Adam step per subject in
/// split order.
pub fn pretrain_encoder(
    mut encoder: Encoder,
    train: &[SubjectSequence],
    validation: &[SubjectSequence],
    cfg: &PretrainConfig,
) -> Result<(Encoder, PretrainLog)> {
    if train.is_empty() {
        return Err(P2gError::Invalid("encoder pre-training needs at least one subject".into()));
    }
    let m = encoder.config.segment_length;
    let inputs = train.iter().map(|s| downsample_sequence(s, m)).collect::<Result<Vec<_>>>()?;
    let labels: Vec<Tensor<f32>> = train
        .iter()
        .map(|s| Tensor::from_vec(s.traits.values().iter().map(|&v| v as f32).collect()))
        .collect();
    let val_inputs = validation.iter().map(|s| downsample_sequence(s, m)).collect::<Result<Vec<_>>>()?;

    let mut opt = Adam::new(AdamConfig::with_lr(cfg.lr), &encoder.params)?;
    let mut log = PretrainLog::default();
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        for (x, y) in inputs.iter().zip(&labels) {
            let tape = Tape::new();
            let p = encoder.params.bind(&tape);
            let latent = encoder.trunk(&p, tape.leaf(x.clone()))?;
            let loss = encoder.head(&p, latent)?.loss(tape.leaf(y.clone()), LossKind::L1)?;
            let value = loss.item() as f64;
            ensure_finite(value, &format!("encoder pre-training epoch {epoch}"))?;
            total += value;
            let grads = tape.backward(loss)?;
            encoder.params.zero_grad();
            encoder.params.accumulate(&grads, &p)?;
            opt.step(&mut encoder.params)?;
        }
        log.epoch_losses.push(total / inputs.len() as f64);
        if !validation.is_empty() {
            let preds = val_inputs.iter().map(|x| encoder.predict_traits(x)).collect::<Result<Vec<_>>>()?;
            let truth: Vec<[f64; 5]> = validation.iter().map(|s| s.traits.values()).collect();
            log.val_acc.push(acc(&preds, &truth)?.avg);
        }
    }
    Ok((encoder, log))
}

impl Encoder {
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_params(dir, &self.params, json!({ "kind": "encoder", "config": self.config }))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (params, meta) = read_params(dir)?;
        let config: EncoderConfig = serde_json::from_value(meta["config"].clone())
            .map_err(|e| P2gError::Mismatch(format!("encoder manifest in {}: {e}", dir.display())))?;
        Encoder::from_params(config, params)
    }
}

/// Initial decoder weights shared by every subject of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedDecoderInit {
    pub arch: DecoderArch,
    pub horizons: Vec<usize>,
    pub decoders: Vec<ParamSet<f32>>,
}

impl SharedDecoderInit {
    /// Draws one decoder per horizon, in order, from a single stream; the
    /// first decoder is therefore the same for any number of horizons.
    pub fn new(arch: DecoderArch, horizons: Vec<usize>, seed: u64) -> Result<Self> {
        arch.validate()?;
        crate::synth::check_horizons(&horizons)?;
        let mut rng = Rng::new(seed);
        let decoders = horizons.iter().map(|_| arch.init(&mut rng)).collect();
        Ok(Self { arch, horizons, decoders })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub epochs: usize,
    pub lr: f64,
    pub segment_length: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitLog {
    /// Mean over segments of the summed reconstruction loss, before training.
    pub initial_loss: f64,
    /// Same quantity after the last step.
    pub final_loss: f64,
    pub step_losses: Vec<f64>,
    pub epoch_losses: Vec<f64>,
}

/// One subject's fitted decoders, one per horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderSet {
    pub subject_id: String,
    pub horizons: Vec<usize>,
    pub arch: DecoderArch,
    pub decoders: Vec<ParamSet<f32>>,
    pub log: FitLog,
}

#[derive(Serialize, Deserialize)]
struct DecoderSetMeta {
    subject_id: String,
    horizons: Vec<usize>,
    arch: DecoderArch,
    log: FitLog,
}

impl DecoderSet {
    pub fn save(&self, dir: &Path) -> Result<()> {
        for (n, d) in self.decoders.iter().enumerate() {
            write_params(&dir.join(format!("dec{}", n + 1)), d, json!({ "kind": "decoder", "horizon": self.horizons[n] }))?;
        }
        write_json(
            &dir.join("set.json"),
            &DecoderSetMeta {
                subject_id: self.subject_id.clone(),
                horizons: self.horizons.clone(),
                arch: self.arch.clone(),
                log: self.log.clone(),
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("set.json");
        if !meta_path.exists() {
            return Err(P2gError::MissingPrerequisite(format!("no decoder set at {}", dir.display())));
        }
        let meta: DecoderSetMeta = read_json(&meta_path)?;
        let decoders = (1..=meta.horizons.len())
            .map(|n| read_params(&dir.join(format!("dec{n}"))).map(|(p, _)| p))
            .collect::<Result<Vec<_>>>()?;
        for d in &decoders {
            meta.arch.check_params(d)?;
        }
        Ok(Self { subject_id: meta.subject_id, horizons: meta.horizons, arch: meta.arch, decoders, log: meta.log })
    }
}

fn check_latent(encoder: &Encoder, arch: &DecoderArch) -> Result<()> {
    let [c, h, w] = encoder.latent_shape();
    if c != arch.latent_channels || [h, w] != arch.latent_size {
        return Err(P2gError::Mismatch(format!(
            "encoder latent {:?} does not feed decoder input {}x{:?}",
            encoder.latent_shape(),
            arch.latent_channels,
            arch.latent_size
        )));
    }
    Ok(())
}

fn decoder_loss(arch: &DecoderArch, params: &ParamSet<f32>, latent: &Tensor<f32>, target: &Tensor<f32>) -> Result<f64> {
    let tape = Tape::new();
    let p = params.bind(&tape);
    let out = arch.forward(&p, tape.leaf(latent.clone()))?;
    Ok(out.loss(tape.leaf(target.clone()), LossKind::Mse)?.item() as f64)
}

fn mean_set_loss(arch: &DecoderArch, decoders: &[ParamSet<f32>], latents: &[Tensor<f32>], pairs: &[SegmentPair]) -> Result<f64> {
    let mut total = 0.0;
    for (latent, pair) in latents.iter().zip(pairs) {
        for (d, target) in decoders.iter().zip(&pair.targets) {
            total += decoder_loss(arch, d, latent, target)?;
        }
    }
    Ok(total / pairs.len() as f64)
}

/// Fits one subject's decoders from the shared initial weights. The encoder
/// is only read; segments are visited from the start of the sequence to its
/// end in every epoch, one Adam step per segment minimising the summed mse
/// over horizons.
pub fn fit_decoders(
    encoder: &Encoder,
    seq: &SubjectSequence,
    init: &SharedDecoderInit,
    cfg: &FitConfig,
) -> Result<DecoderSet> {
    check_latent(encoder, &init.arch)?;
    if cfg.segment_length != init.arch.out_channels {
        return Err(P2gError::Mismatch(format!(
            "segment length {} but decoders emit {} frames",
            cfg.segment_length, init.arch.out_channels
        )));
    }
    let pairs = iter_segments(seq, cfg.segment_length, &init.horizons)?;
    let latents = pairs.iter().map(|p| encoder.encode(&p.input)).collect::<Result<Vec<_>>>()?;
    let arch = &init.arch;

    let mut decoders = init.decoders.clone();
    let mut opts = decoders
        .iter()
        .map(|d| Adam::new(AdamConfig::with_lr(cfg.lr), d))
        .collect::<tensorcore::Result<Vec<_>>>()?;
    let mut log = FitLog { initial_loss: mean_set_loss(arch, &decoders, &latents, &pairs)?, ..FitLog::default() };

    for epoch in 0..cfg.epochs {
        let mut epoch_total = 0.0;
        for (latent, pair) in latents.iter().zip(&pairs) {
            let mut step_total = 0.0;
            for ((params, opt), target) in decoders.iter_mut().zip(&mut opts).zip(&pair.targets) {
                let tape = Tape::new();
                let p = params.bind(&tape);
                let out = arch.forward(&p, tape.leaf(latent.clone()))?;
                let loss = out.loss(tape.leaf(target.clone()), LossKind::Mse)?;
                step_total += loss.item() as f64;
                let grads = tape.backward(loss)?;
                params.zero_grad();
                params.accumulate(&grads, &p)?;
                opt.step(params)?;
            }
            ensure_finite(step_total, &format!("decoder fit for {} epoch {epoch}", seq.id))?;
            log.step_losses.push(step_total);
            epoch_total += step_total;
        }
        log.epoch_losses.push(epoch_total / pairs.len() as f64);
    }
    log.final_loss = mean_set_loss(arch, &decoders, &latents, &pairs)?;
    Ok(DecoderSet { subject_id: seq.id.clone(), horizons: init.horizons.clone(), arch: arch.clone(), decoders, log })
}

/// Predicted future blocks, one per horizon, each shaped like `segment`.
pub fn predict_future(encoder: &Encoder, set: &DecoderSet, segment: &Tensor<f32>) -> Result<Vec<Tensor<f32>>> {
    check_latent(encoder, &set.arch)?;
    let latent = encoder.encode(segment)?;
    set.decoders
        .iter()
        .map(|params| {
            let tape = Tape::new();
            let p = params.bind(&tape);
            let out = set.arch.forward(&p, tape.leaf(latent.clone()))?.value();
            if out.shape() != segment.shape() {
                return Err(P2gError::Mismatch(format!("decoder emits {:?} for a {:?} segment", out.shape(), segment.shape())));
            }
            Ok(out)
        })
        .collect()
}

/// Averages the encoder head over every stride-`L` segment of the sequence.
pub fn encoder_frame_baseline(encoder: &Encoder, seq: &SubjectSequence) -> Result<TraitVector> {
    let l = encoder.config.segment_length;
    let starts: Vec<usize> = (0..seq.t_total()).step_by(l).filter(|&t| t + l <= seq.t_total()).collect();
    if starts.is_empty() {
        return Err(P2gError::Invalid(format!("sequence {} shorter than one segment", seq.id)));
    }
    let preds = starts.iter().map(|&t| encoder.predict_traits(&seq.block(t, l)?)).collect::<Result<Vec<_>>>()?;
    Ok(TraitVector::new(mean_prediction(&preds))?)
}

pub(crate) fn mean_prediction(preds: &[[f64; 5]]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for p in preds {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= preds.len() as f64);
    out
}
