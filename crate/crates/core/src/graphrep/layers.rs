use serde::{Deserialize, Serialize};

use crate::pnet::DecoderSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    Relu,
    Upsample,
}

impl LayerKind {
    /// Constant feature value for weightless layers.
    pub fn type_id(self) -> Option<f32> {
        match self {
            LayerKind::Conv => None,
            LayerKind::Relu => Some(1.0),
            LayerKind::Upsample => Some(2.0),
        }
    }
}

/// One decoder layer. `decoder` and `layer` are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerDescriptor {
    pub decoder: usize,
    pub layer: usize,
    pub kind: LayerKind,
    /// Kernel then bias values, row-major; empty for weightless layers.
    pub weights: Vec<f32>,
}

fn conv_weights(set: &DecoderSet, n: usize, conv: usize) -> Vec<f32> {
    let p = &set.decoders[n];
    let mut w = p.value(2 * conv).data().to_vec();
    w.extend_from_slice(p.value(2 * conv + 1).data());
    w
}

/// Every stage of every decoder, decoder-major then layer order: each block
/// contributes conv, relu and upsample (factor-1 stages included), followed
/// by the final conv.
pub fn extract_layers(set: &DecoderSet) -> Vec<LayerDescriptor> {
    let blocks = set.arch.blocks();
    let mut out = Vec::with_capacity(set.decoders.len() * (3 * blocks + 1));
    for n in 0..set.decoders.len() {
        let mut a = 0;
        let mut push = |kind, weights| {
            a += 1;
            out.push(LayerDescriptor { decoder: n + 1, layer: a, kind, weights });
        };
        for b in 0..blocks {
            push(LayerKind::Conv, conv_weights(set, n, b));
            push(LayerKind::Relu, Vec::new());
            push(LayerKind::Upsample, Vec::new());
        }
        push(LayerKind::Conv, conv_weights(set, n, blocks));
    }
    out
}

/// All conv weights concatenated, decoder-major then layer order.
pub fn vec_encode(set: &DecoderSet) -> Vec<f32> {
    extract_layers(set).into_iter().flat_map(|d| d.weights).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pnet::{DecoderArch, FitLog, SharedDecoderInit};

    fn desk_set(horizons: Vec<usize>) -> DecoderSet {
        let arch = DecoderArch::desk([32, 2, 2], 8, [16, 16]).unwrap();
        let init = SharedDecoderInit::new(arch.clone(), horizons.clone(), 3).unwrap();
        DecoderSet { subject_id: "s00000".into(), horizons, arch, decoders: init.decoders, log: FitLog::default() }
    }

    #[test]
    fn desk_decoders_give_sixteen_layers_each() {
        let set = desk_set(vec![8, 16, 32]);
        let layers = extract_layers(&set);
        let per = 3 * set.arch.blocks() + 1;
        assert_eq!(per, 16);
        assert_eq!(layers.len(), 3 * per);
        for (i, d) in layers.iter().enumerate() {
            assert_eq!((d.decoder, d.layer), (i / per + 1, i % per + 1));
            assert_eq!(d.kind == LayerKind::Conv, !d.weights.is_empty());
        }
    }

    #[test]
    fn conv_weight_lengths_follow_channels() {
        let set = desk_set(vec![8]);
        let convs: Vec<_> = extract_layers(&set).into_iter().filter(|d| d.kind == LayerKind::Conv).collect();
        let chans = set.arch.conv_channels();
        assert_eq!(convs.len(), chans.len());
        for (d, (cout, cin)) in convs.iter().zip(chans) {
            assert_eq!(d.weights.len(), cout * cin * 9 + cout);
        }
        let total: usize = convs.iter().map(|d| d.weights.len()).sum();
        assert_eq!(vec_encode(&set).len(), total);
    }

    #[test]
    fn vec_encode_equal_at_shared_init() {
        let a = desk_set(vec![8, 16]);
        let mut b = desk_set(vec![8, 16]);
        b.subject_id = "s00001".into();
        assert_eq!(vec_encode(&a), vec_encode(&b));
    }
}
