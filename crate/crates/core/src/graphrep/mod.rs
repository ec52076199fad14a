//! Weight-space graphs: each decoder layer becomes a vertex (PCA-compressed
//! weights for convs, constant type ids otherwise) and each dataflow link an
//! edge whose feature is produced by a learned edge network.

mod ern;
mod graph;
mod layers;
mod pca;

pub use ern::{ern_apply, ern_edge_features, ern_init, ERN_NAMES};
pub use graph::{encode_graph, round_sig9, Edge, Vertex, VertexKind, WeightGraph, ROOT_TYPE_ID};
pub use layers::{extract_layers, vec_encode, LayerDescriptor, LayerKind};
pub use pca::{fit_pca_bank, BankEntry, PcaBank, PcaBasis};
