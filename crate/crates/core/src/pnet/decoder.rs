//! Horizon-specific decoders: `blocks x (conv -> relu -> upsample)` then a
//! final conv to the `L` frame channels and a sigmoid.

use serde::{Deserialize, Serialize};
use tensorcore::{ParamSet, Rng, Tensor, Var};

use crate::error::{P2gError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderArch {
    pub latent_channels: usize,
    pub latent_size: [usize; 2],
    pub block_channels: Vec<usize>,
    pub upsample: Vec<usize>,
    pub kernel: usize,
    pub out_channels: usize,
    pub frame_size: [usize; 2],
}

impl DecoderArch {
    /// Five blocks upsampling 2x2 -> 16x16 by factors (2, 2, 2, 1, 1).
    pub fn desk(latent: [usize; 3], out_channels: usize, frame_size: [usize; 2]) -> Result<Self> {
        let arch = Self {
            latent_channels: latent[0],
            latent_size: [latent[1], latent[2]],
            block_channels: vec![16, 16, 8, 8, 8],
            upsample: vec![2, 2, 2, 1, 1],
            kernel: 3,
            out_channels,
            frame_size,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_channels.is_empty() || self.block_channels.len() != self.upsample.len() {
            return Err(P2gError::Config("decoder needs equally many block widths and upsample factors".into()));
        }
        if self.kernel % 2 == 0 || self.upsample.contains(&0) || self.block_channels.contains(&0) {
            return Err(P2gError::Config("decoder kernel must be odd, factors and widths positive".into()));
        }
        let factor: usize = self.upsample.iter().product();
        let reached = [self.latent_size[0] * factor, self.latent_size[1] * factor];
        if reached != self.frame_size {
            return Err(P2gError::Config(format!(
                "decoder upsampling maps latent {:?} to {reached:?}, frames are {:?}",
                self.latent_size, self.frame_size
            )));
        }
        Ok(())
    }

    pub fn blocks(&self) -> usize {
        self.block_channels.len()
    }

    /// `(C_out, C_in)` of every conv layer in order, the final conv last.
    pub fn conv_channels(&self) -> Vec<(usize, usize)> {
        let mut cin = self.latent_channels;
        let mut out = Vec::with_capacity(self.blocks() + 1);
        for &c in &self.block_channels {
            out.push((c, cin));
            cin = c;
        }
        out.push((self.out_channels, cin));
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.blocks() {
            names.push(format!("block{i}.conv.weight"));
            names.push(format!("block{i}.conv.bias"));
        }
        names.push("final.conv.weight".into());
        names.push("final.conv.bias".into());
        names
    }

    /// He-uniform kernels, zero biases.
    pub fn init(&self, rng: &mut Rng) -> ParamSet<f32> {
        let k = self.kernel;
        let names = self.param_names();
        let mut ps = ParamSet::new();
        for (i, (cout, cin)) in self.conv_channels().into_iter().enumerate() {
            ps.add(names[2 * i].clone(), rng.he_uniform(&[cout, cin, k, k], cin * k * k));
            ps.add(names[2 * i + 1].clone(), Tensor::zeros(&[cout]));
        }
        ps
    }

    pub fn check_params(&self, params: &ParamSet<f32>) -> Result<()> {
        let names = self.param_names();
        let k = self.kernel;
        let shapes: Vec<Vec<usize>> = self
            .conv_channels()
            .into_iter()
            .flat_map(|(o, i)| [vec![o, i, k, k], vec![o]])
            .collect();
        if params.len() != names.len() {
            return Err(P2gError::Mismatch(format!("decoder has {} parameters, expected {}", params.len(), names.len())));
        }
        for ((p, n), s) in params.iter().zip(&names).zip(&shapes) {
            if &p.name != n || p.value.shape() != s.as_slice() {
                return Err(P2gError::Mismatch(format!("decoder parameter {} {:?}, expected {n} {s:?}", p.name, p.value.shape())));
            }
        }
        Ok(())
    }

    /// Forward pass on bound parameters; output `[L, H, W]` in (0, 1).
    pub fn forward<'t>(&self, p: &[Var<'t, f32>], latent: Var<'t, f32>) -> Result<Var<'t, f32>> {
        let mut h = latent;
        for (i, &f) in self.upsample.iter().enumerate() {
            h = h.conv2d(p[2 * i], p[2 * i + 1], 1)?.relu().upsample_nearest(f)?;
        }
        let n = self.blocks();
        Ok(h.conv2d(p[2 * n], p[2 * n + 1], 1)?.sigmoid())
    }
}
