use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layers::{extract_layers, LayerKind};
use super::pca::PcaBank;
use crate::checkpoint::{read_json, write_json};
use crate::error::{P2gError, Result};
use crate::pnet::DecoderSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Conv,
    Relu,
    Upsample,
    /// Optional extra vertex joining the decoder chains.
    Root,
}

impl From<LayerKind> for VertexKind {
    fn from(k: LayerKind) -> Self {
        match k {
            LayerKind::Conv => VertexKind::Conv,
            LayerKind::Relu => VertexKind::Relu,
            LayerKind::Upsample => VertexKind::Upsample,
        }
    }
}

/// Constant feature value of the virtual root vertex.
pub const ROOT_TYPE_ID: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// 1-based decoder index; 0 for the root.
    pub n: usize,
    /// 1-based layer index within the decoder; 0 for the root.
    pub a: usize,
    pub kind: VertexKind,
    pub feat: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub feat: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightGraph {
    pub subject_id: String,
    pub k: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

/// Rounds to 9 significant digits so serialized graphs are byte-stable.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

impl WeightGraph {
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if let Some(v) = self.vertices.iter().find(|v| v.feat.len() != self.k) {
            return Err(P2gError::Invalid(format!("vertex ({}, {}) has {} features, expected {}", v.n, v.a, v.feat.len(), self.k)));
        }
        for e in &self.edges {
            if e.src >= nv || e.dst >= nv || e.src == e.dst {
                return Err(P2gError::Invalid(format!("edge {} -> {} invalid for {nv} vertices", e.src, e.dst)));
            }
            if e.feat.len() != self.k {
                return Err(P2gError::Invalid(format!("edge {} -> {} has {} features", e.src, e.dst, e.feat.len())));
            }
        }
        Ok(())
    }

    /// Row-major `[V, K]` vertex feature matrix.
    pub fn vertex_matrix(&self) -> Vec<f64> {
        self.vertices.iter().flat_map(|v| v.feat.iter().copied()).collect()
    }

    /// Vertex index of `(n, a)`; the inverse of the decoder-major ordering.
    pub fn index_of(&self, n: usize, a: usize) -> Option<usize> {
        self.vertices.iter().position(|v| v.n == n && v.a == a)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| P2gError::Invalid(format!("graph serialization: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let g: Self = read_json(path)?;
        g.validate()?;
        Ok(g)
    }
}

/// Builds the weight graph of one subject: PCA projections for conv layers,
/// constant type-id vectors for relu (1) and upsample (2), and one edge from
/// each layer to the next within every decoder. Edge features start at zero.
/// With `virtual_root`, a last vertex of constant 3 gets an edge to the first
/// layer of each decoder.
pub fn encode_graph(set: &DecoderSet, bank: &PcaBank, virtual_root: bool) -> Result<WeightGraph> {
    if set.decoders.len() != bank.decoders {
        return Err(P2gError::Mismatch(format!(
            "subject {} has {} decoders, the PCA bank was fitted on {}",
            set.subject_id,
            set.decoders.len(),
            bank.decoders
        )));
    }
    let k = bank.k;
    let layers = extract_layers(set);
    let mut vertices = Vec::with_capacity(layers.len() + usize::from(virtual_root));
    let mut edges = Vec::new();
    for (i, d) in layers.iter().enumerate() {
        let feat = match d.kind.type_id() {
            Some(j) => vec![j as f64; k],
            None => {
                let entry = bank.entry(d.decoder, d.layer).ok_or_else(|| {
                    P2gError::Mismatch(format!("PCA bank has no basis for decoder {} layer {}", d.decoder, d.layer))
                })?;
                let w: Vec<f64> = d.weights.iter().map(|&v| v as f64).collect();
                entry.basis.project(&w, k)?.into_iter().map(round_sig9).collect()
            }
        };
        if i > 0 && layers[i - 1].decoder == d.decoder {
            edges.push(Edge { src: i - 1, dst: i, feat: vec![0.0; k] });
        }
        vertices.push(Vertex { n: d.decoder, a: d.layer, kind: d.kind.into(), feat });
    }
    if virtual_root {
        let root = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if v.a == 1 {
                edges.push(Edge { src: root, dst: i, feat: vec![0.0; k] });
            }
        }
        vertices.push(Vertex { n: 0, a: 0, kind: VertexKind::Root, feat: vec![ROOT_TYPE_ID; k] });
    }
    Ok(WeightGraph { subject_id: set.subject_id.clone(), k, vertices, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphrep::fit_pca_bank;
    use crate::pnet::{DecoderArch, FitLog, SharedDecoderInit};
    use tensorcore::Rng;

    /// Shared init plus a subject-specific random perturbation.
    fn perturbed_sets(count: usize, horizons: Vec<usize>) -> Vec<DecoderSet> {
        let arch = DecoderArch::desk([32, 2, 2], 8, [16, 16]).unwrap();
        let init = SharedDecoderInit::new(arch.clone(), horizons.clone(), 9).unwrap();
        (0..count)
            .map(|i| {
                let mut rng = Rng::new(100 + i as u64);
                let mut decoders = init.decoders.clone();
                for d in &mut decoders {
                    for p in d.iter_mut() {
                        p.value.data_mut().iter_mut().for_each(|v| *v += 0.01 * rng.normal() as f32);
                    }
                }
                DecoderSet { subject_id: format!("s{i:05}"), horizons: horizons.clone(), arch: arch.clone(), decoders, log: FitLog::default() }
            })
            .collect()
    }

    #[test]
    fn desk_graph_shape_and_features() {
        let sets = perturbed_sets(6, vec![8, 16, 32]);
        let bank = fit_pca_bank(&sets, 16).unwrap();
        let g = encode_graph(&sets[0], &bank, false).unwrap();
        g.validate().unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (48, 45));
        for v in &g.vertices {
            match v.kind {
                VertexKind::Relu => assert!(v.feat.iter().all(|&x| x == 1.0)),
                VertexKind::Upsample => assert!(v.feat.iter().all(|&x| x == 2.0)),
                VertexKind::Conv => assert!(v.feat[5..].iter().all(|&x| x == 0.0)),
                VertexKind::Root => unreachable!(),
            }
        }
        for (i, v) in g.vertices.iter().enumerate() {
            assert_eq!(g.index_of(v.n, v.a), Some(i));
            assert_eq!((v.n, v.a), (i / 16 + 1, i % 16 + 1));
        }
        assert!(g.edges.iter().all(|e| e.dst == e.src + 1 && g.vertices[e.src].n == g.vertices[e.dst].n));
    }

    #[test]
    fn virtual_root_links_chain_heads() {
        let sets = perturbed_sets(3, vec![8, 16, 32]);
        let bank = fit_pca_bank(&sets, 4).unwrap();
        let g = encode_graph(&sets[1], &bank, true).unwrap();
        g.validate().unwrap();
        assert_eq!((g.vertices.len(), g.edges.len()), (49, 48));
        assert_eq!(g.vertices[48].kind, VertexKind::Root);
        let heads: Vec<usize> = g.edges.iter().filter(|e| e.src == 48).map(|e| e.dst).collect();
        assert_eq!(heads, vec![0, 16, 32]);
    }

    #[test]
    fn mismatched_bank_rejected() {
        let m = perturbed_sets(3, vec![8, 16, 32]);
        let s = perturbed_sets(3, vec![8]);
        let bank = fit_pca_bank(&s, 4).unwrap();
        assert!(matches!(encode_graph(&m[0], &bank, false), Err(P2gError::Mismatch(_))));
    }

    #[test]
    fn serialization_is_byte_stable_and_lossless() {
        let sets = perturbed_sets(4, vec![8]);
        let bank = fit_pca_bank(&sets, 16).unwrap();
        let a = encode_graph(&sets[2], &bank, false).unwrap();
        let b = encode_graph(&sets[2], &bank, false).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let back: WeightGraph = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn round_sig9_keeps_nine_digits() {
        assert_eq!(round_sig9(1.234567891234), 1.23456789);
        assert_eq!(round_sig9(-0.000123456789123), -0.000123456789);
        assert_eq!(round_sig9(0.0), 0.0);
    }
}
