//! Shared behaviour encoder: a convolutional trunk over `L` stacked frames
//! plus a dense sigmoid head regressing the five traits.

use serde::{Deserialize, Serialize};
use tensorcore::ops::conv_out_extent;
use tensorcore::{ParamSet, Rng, Tape, Tensor, Var};

use crate::error::{P2gError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderPreset {
    /// Strided plain CNN, one conv + relu per block.
    Mini,
    /// Residual trunk with 17 weighted 3x3 layers: a stem conv and four
    /// stages of two basic blocks (1x1 projections on the shortcuts where
    /// the shape changes). The classification layer is omitted.
    Resnet17,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub preset: EncoderPreset,
    /// Block widths (mini) or stage widths (resnet17).
    pub channels: Vec<usize>,
    pub strides: Vec<usize>,
    pub kernel: usize,
    pub segment_length: usize,
    pub height: usize,
    pub width: usize,
}

impl EncoderConfig {
    pub fn mini(segment_length: usize, height: usize, width: usize) -> Self {
        Self {
            preset: EncoderPreset::Mini,
            channels: vec![8, 16, 32, 32],
            strides: vec![2, 2, 2, 1],
            kernel: 3,
            segment_length,
            height,
            width,
        }
    }

    pub fn resnet17(segment_length: usize, height: usize, width: usize) -> Self {
        Self {
            preset: EncoderPreset::Resnet17,
            channels: vec![64, 128, 256, 512],
            strides: vec![1, 2, 2, 2],
            kernel: 3,
            segment_length,
            height,
            width,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.len() != self.strides.len() {
            return Err(P2gError::Config("encoder channels and strides must be non-empty and equally long".into()));
        }
        if self.kernel % 2 == 0 || self.strides.contains(&0) || self.channels.contains(&0) {
            return Err(P2gError::Config("encoder kernel must be odd, strides and widths positive".into()));
        }
        if self.segment_length == 0 || self.height == 0 || self.width == 0 {
            return Err(P2gError::Config("encoder input dims must be positive".into()));
        }
        Ok(())
    }

    /// `[C, h, w]` of the trunk output.
    pub fn latent_shape(&self) -> Result<[usize; 3]> {
        self.validate()?;
        let (mut h, mut w) = (self.height, self.width);
        for &s in &self.strides {
            h = conv_out_extent(h, s);
            w = conv_out_extent(w, s);
        }
        Ok([*self.channels.last().expect("validated"), h, w])
    }
}

#[derive(Clone, Copy, Debug)]
struct ConvRef {
    w: usize,
    b: usize,
    stride: usize,
}

#[derive(Clone, Debug)]
enum Block {
    Plain(ConvRef),
    Residual { first: ConvRef, second: ConvRef, shortcut: Option<ConvRef> },
}

struct LayoutBuilder {
    specs: Vec<(String, Vec<usize>, usize)>,
}

impl LayoutBuilder {
    fn conv(&mut self, name: &str, cin: usize, cout: usize, k: usize, stride: usize) -> ConvRef {
        let w = self.specs.len();
        self.specs.push((format!("{name}.weight"), vec![cout, cin, k, k], cin * k * k));
        self.specs.push((format!("{name}.bias"), vec![cout], 0));
        ConvRef { w, b: w + 1, stride }
    }
}

fn layout(config: &EncoderConfig) -> Result<(Vec<(String, Vec<usize>, usize)>, Vec<Block>)> {
    let latent = config.latent_shape()?;
    let mut lb = LayoutBuilder { specs: Vec::new() };
    let mut blocks = Vec::new();
    let k = config.kernel;
    match config.preset {
        EncoderPreset::Mini => {
            let mut cin = config.segment_length;
            for (i, (&c, &s)) in config.channels.iter().zip(&config.strides).enumerate() {
                blocks.push(Block::Plain(lb.conv(&format!("trunk.block{i}.conv"), cin, c, k, s)));
                cin = c;
            }
        }
        EncoderPreset::Resnet17 => {
            let stem = config.channels[0];
            blocks.push(Block::Plain(lb.conv("trunk.stem.conv", config.segment_length, stem, k, 1)));
            let mut cin = stem;
            for (si, (&c, &s)) in config.channels.iter().zip(&config.strides).enumerate() {
                for bi in 0..2 {
                    let stride = if bi == 0 { s } else { 1 };
                    let name = format!("trunk.stage{si}.block{bi}");
                    let first = lb.conv(&format!("{name}.conv1"), cin, c, k, stride);
                    let second = lb.conv(&format!("{name}.conv2"), c, c, k, 1);
                    let shortcut = (stride != 1 || cin != c).then(|| lb.conv(&format!("{name}.shortcut"), cin, c, 1, stride));
                    blocks.push(Block::Residual { first, second, shortcut });
                    cin = c;
                }
            }
        }
    }
    let flat = latent.iter().product::<usize>();
    lb.specs.push(("head.weight".into(), vec![5, flat], flat));
    lb.specs.push(("head.bias".into(), vec![5], 0));
    Ok((lb.specs, blocks))
}

#[derive(Clone, Debug)]
pub struct Encoder {
    pub config: EncoderConfig,
    pub params: ParamSet<f32>,
    blocks: Vec<Block>,
    latent: [usize; 3],
}

impl Encoder {
    /// He-uniform weights, zero biases.
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        let (specs, blocks) = layout(&config)?;
        let mut rng = Rng::new(seed);
        let mut params = ParamSet::new();
        for (name, shape, fan_in) in specs {
            let value = if fan_in == 0 { Tensor::zeros(&shape) } else { rng.he_uniform(&shape, fan_in) };
            params.add(name, value);
        }
        let latent = config.latent_shape()?;
        Ok(Self { config, params, blocks, latent })
    }

    /// Rebuilds an encoder around loaded parameters, checking names and shapes.
    pub fn from_params(config: EncoderConfig, params: ParamSet<f32>) -> Result<Self> {
        let (specs, blocks) = layout(&config)?;
        if specs.len() != params.len() {
            return Err(P2gError::Mismatch(format!(
                "encoder expects {} parameters, checkpoint has {}",
                specs.len(),
                params.len()
            )));
        }
        for ((name, shape, _), p) in specs.iter().zip(params.iter()) {
            if name != &p.name || shape.as_slice() != p.value.shape() {
                return Err(P2gError::Mismatch(format!(
                    "encoder parameter {name} {shape:?} vs checkpoint {} {:?}",
                    p.name,
                    p.value.shape()
                )));
            }
        }
        let latent = config.latent_shape()?;
        Ok(Self { config, params, blocks, latent })
    }

    pub fn latent_shape(&self) -> [usize; 3] {
        self.latent
    }

    fn conv<'t>(&self, p: &[Var<'t, f32>], x: Var<'t, f32>, c: ConvRef) -> Result<Var<'t, f32>> {
        Ok(x.conv2d(p[c.w], p[c.b], c.stride)?)
    }

    /// Trunk forward pass on bound parameters.
    pub fn trunk<'t>(&self, p: &[Var<'t, f32>], x: Var<'t, f32>) -> Result<Var<'t, f32>> {
        let mut h = x;
        for block in &self.blocks {
            h = match *block {
                Block::Plain(c) => self.conv(p, h, c)?.relu(),
                Block::Residual { first, second, shortcut } => {
                    let y = self.conv(p, h, first)?.relu();
                    let y = self.conv(p, y, second)?;
                    let skip = match shortcut {
                        Some(c) => self.conv(p, h, c)?,
                        None => h,
                    };
                    y.add(skip)?.relu()
                }
            };
        }
        Ok(h)
    }

    /// Dense sigmoid head on a latent map.
    pub fn head<'t>(&self, p: &[Var<'t, f32>], latent: Var<'t, f32>) -> Result<Var<'t, f32>> {
        let n = p.len();
        let flat = latent.reshape(&[self.latent.iter().product()])?;
        Ok(flat.linear(p[n - 2], Some(p[n - 1]))?.sigmoid())
    }

    fn check_segment(&self, segment: &Tensor<f32>) -> Result<()> {
        let want = [self.config.segment_length, self.config.height, self.config.width];
        if segment.shape() != want {
            return Err(P2gError::Invalid(format!(
                "encoder input must be {want:?} (L stacked frames), got {:?}",
                segment.shape()
            )));
        }
        Ok(())
    }

    /// Latent map of one segment; the head is not applied.
    pub fn encode(&self, segment: &Tensor<f32>) -> Result<Tensor<f32>> {
        self.check_segment(segment)?;
        let tape = Tape::new();
        let p = self.params.bind(&tape);
        Ok(self.trunk(&p, tape.leaf(segment.clone()))?.value())
    }

    /// Head prediction for one segment, each value in (0, 1).
    pub fn predict_traits(&self, segment: &Tensor<f32>) -> Result<[f64; 5]> {
        self.check_segment(segment)?;
        let tape = Tape::new();
        let p = self.params.bind(&tape);
        let latent = self.trunk(&p, tape.leaf(segment.clone()))?;
        let y = self.head(&p, latent)?.value();
        let mut out = [0.0; 5];
        out.iter_mut().zip(y.data()).for_each(|(o, &v)| *o = v as f64);
        Ok(out)
    }
}
