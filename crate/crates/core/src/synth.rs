//! Synthetic behaviour sequences.
//!
//! Each subject is a Gaussian blob drifting over a toroidal frame grid. The
//! five hidden traits set its dynamics rather than its appearance:
//!
//! | trait | effect |
//! |-------|--------|
//! | τ₁, τ₂ | velocity `0.5 + 2τ` px/frame along x and y |
//! | τ₃ | width oscillation frequency `0.02 + 0.08τ₃` cycles/frame |
//! | τ₄ | width oscillation amplitude, `σ(t) = 2(1 + 0.5τ₄ sin 2πft)` |
//! | τ₅ | pixel noise std `0.02 + 0.05τ₅` |

use serde::{Deserialize, Serialize};
use tensorcore::{derive_seed, Rng, Tensor};

use crate::error::{P2gError, Result};

pub const TRAIT_NAMES: [&str; 5] = ["extraversion", "agreeableness", "conscientiousness", "neuroticism", "openness"];

pub const BASE_SIGMA: f64 = 2.0;

/// Five apparent-personality values, each in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct TraitVector([f64; 5]);

impl TraitVector {
    pub fn new(values: [f64; 5]) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(P2gError::Invalid(format!("trait {} = {v} outside [0,1]", TRAIT_NAMES[i])));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> [f64; 5] {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

impl TryFrom<[f64; 5]> for TraitVector {
    type Error = P2gError;
    fn try_from(v: [f64; 5]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TraitVector> for [f64; 5] {
    fn from(t: TraitVector) -> Self {
        t.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDims {
    pub t_total: usize,
    pub height: usize,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectSequence {
    pub id: String,
    /// `[T, H, W]`, values in [0, 1].
    pub frames: Tensor<f32>,
    pub traits: TraitVector,
    pub seed: u64,
}

impl SubjectSequence {
    pub fn t_total(&self) -> usize {
        self.frames.shape()[0]
    }

    /// Frames `start..start+len` as a `[len, H, W]` block.
    pub fn block(&self, start: usize, len: usize) -> Result<Tensor<f32>> {
        Ok(self.frames.slice_outer(start, start + len)?)
    }
}

pub fn blob_velocity(traits: &TraitVector) -> (f64, f64) {
    (0.5 + 2.0 * traits.get(0), 0.5 + 2.0 * traits.get(1))
}

pub fn blob_sigma(traits: &TraitVector, t: f64) -> f64 {
    let freq = 0.02 + 0.08 * traits.get(2);
    BASE_SIGMA * (1.0 + 0.5 * traits.get(3) * (2.0 * std::f64::consts::PI * freq * t).sin())
}

pub fn noise_std(traits: &TraitVector) -> f64 {
    0.02 + 0.05 * traits.get(4)
}

fn wrapped(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

pub fn render_sequence(id: impl Into<String>, seed: u64, traits: TraitVector, dims: FrameDims) -> Result<SubjectSequence> {
    render_sequence_with(id, seed, traits, dims, true)
}

/// Renders a sequence; `noise = false` gives the clean blob used by tests.
/// The initial position is drawn first from the seeded generator, then pixel
/// noise in frame-major, row-major order.
pub fn render_sequence_with(
    id: impl Into<String>,
    seed: u64,
    traits: TraitVector,
    dims: FrameDims,
    noise: bool,
) -> Result<SubjectSequence> {
    let FrameDims { t_total, height, width } = dims;
    if t_total < 8 || height < 8 || width < 8 {
        return Err(P2gError::Invalid(format!("frame dims {dims:?} below the 8x8x8 minimum")));
    }
    let mut rng = Rng::new(seed);
    let x0 = rng.uniform() * width as f64;
    let y0 = rng.uniform() * height as f64;
    let (vx, vy) = blob_velocity(&traits);
    let nstd = noise_std(&traits);
    let (wf, hf) = (width as f64, height as f64);

    let mut data = Vec::with_capacity(t_total * height * width);
    for t in 0..t_total {
        let tf = t as f64;
        let (cx, cy) = (x0 + vx * tf, y0 + vy * tf);
        let sigma = blob_sigma(&traits, tf);
        let inv = 1.0 / (2.0 * sigma * sigma);
        for r in 0..height {
            let dy = wrapped(r as f64 - cy, hf);
            for c in 0..width {
                let dx = wrapped(c as f64 - cx, wf);
                let mut v = (-(dx * dx + dy * dy) * inv).exp();
                if noise {
                    v += nstd * rng.normal();
                }
                data.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    Ok(SubjectSequence {
        id: id.into(),
        frames: Tensor::new(vec![t_total, height, width], data)?,
        traits,
        seed,
    })
}

/// Identity, seed and traits for one subject before rendering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub subject_id: String,
    pub traits: TraitVector,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpecs {
    pub train: Vec<SubjectSpec>,
    pub validation: Vec<SubjectSpec>,
    pub test: Vec<SubjectSpec>,
}

/// Draws `n` subjects with traits i.i.d. uniform on [0,1]^5.
pub fn sample_subjects(n: usize, master_seed: u64) -> Vec<SubjectSpec> {
    let mut rng = Rng::new(derive_seed(master_seed, "traits", 0));
    (0..n)
        .map(|i| {
            let mut values = [0.0; 5];
            values.iter_mut().for_each(|v| *v = rng.uniform());
            SubjectSpec {
                subject_id: format!("s{i:05}"),
                traits: TraitVector(values),
                seed: derive_seed(master_seed, "subject", i as u64),
            }
        })
        .collect()
}

pub fn plan_splits(n_train: usize, n_val: usize, n_test: usize, master_seed: u64) -> Result<SplitSpecs> {
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(P2gError::Invalid("every split needs at least one subject".into()));
    }
    let mut all = sample_subjects(n_train + n_val + n_test, master_seed);
    let test = all.split_off(n_train + n_val);
    let validation = all.split_off(n_train);
    Ok(SplitSpecs { train: all, validation, test })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplits {
    pub train: Vec<SubjectSequence>,
    pub validation: Vec<SubjectSequence>,
    pub test: Vec<SubjectSequence>,
}

impl DatasetSplits {
    pub fn all(&self) -> impl Iterator<Item = &SubjectSequence> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}

pub fn render_split(specs: &[SubjectSpec], dims: FrameDims) -> Result<Vec<SubjectSequence>> {
    specs
        .iter()
        .map(|s| render_sequence(s.subject_id.clone(), s.seed, s.traits, dims))
        .collect()
}

pub fn make_splits(n_train: usize, n_val: usize, n_test: usize, seed: u64, dims: FrameDims) -> Result<DatasetSplits> {
    let plan = plan_splits(n_train, n_val, n_test, seed)?;
    Ok(DatasetSplits {
        train: render_split(&plan.train, dims)?,
        validation: render_split(&plan.validation, dims)?,
        test: render_split(&plan.test, dims)?,
    })
}

/// An input segment and its future blocks, one per horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPair {
    pub t1: usize,
    pub input: Tensor<f32>,
    pub targets: Vec<Tensor<f32>>,
}

pub fn check_horizons(horizons: &[usize]) -> Result<()> {
    if horizons.is_empty() {
        return Err(P2gError::Invalid("at least one horizon is required".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(P2gError::Invalid(format!("horizons {horizons:?} must be positive and strictly increasing")));
    }
    Ok(())
}

/// Start frames of the segments, stride `segment_length`, in temporal order.
pub fn segment_starts(t_total: usize, segment_length: usize, max_horizon: usize) -> Vec<usize> {
    if segment_length == 0 || segment_length + max_horizon > t_total {
        return Vec::new();
    }
    let last = t_total - segment_length - max_horizon;
    (0..=last).step_by(segment_length).collect()
}

/// Segment pairs from the start of the sequence to its end, never shuffled.
pub fn iter_segments(seq: &SubjectSequence, segment_length: usize, horizons: &[usize]) -> Result<Vec<SegmentPair>> {
    check_horizons(horizons)?;
    if segment_length == 0 {
        return Err(P2gError::Invalid("segment length must be >= 1".into()));
    }
    let max_h = *horizons.last().expect("non-empty");
    if segment_length + max_h > seq.t_total() {
        return Err(P2gError::Invalid(format!(
            "sequence of {} frames too short for segment {segment_length} + horizon {max_h}",
            seq.t_total()
        )));
    }
    segment_starts(seq.t_total(), segment_length, max_h)
        .into_iter()
        .map(|t1| {
            Ok(SegmentPair {
                t1,
                input: seq.block(t1, segment_length)?,
                targets: horizons.iter().map(|&h| seq.block(t1 + h, segment_length)).collect::<Result<_>>()?,
            })
        })
        .collect()
}
