//! Trait regression from weight graphs (GAT, GatedGCN) and from flat weight
//! vectors (MLP baseline), plus the ACC metric.

pub mod metric;
mod model;
mod train;

pub use metric::{acc, metrics_csv, predictions_csv, AccReport};
pub use model::{ForwardTrace, GnnArch, GnnModel, PreparedGraph, GATED_GCN_LAYERS, GAT_LAYERS, GAT_LEAKY_SLOPE};
pub use train::{mlp_baseline_train, train_gnn, MlpModel, TrainConfig, TrainLog, MLP_HIDDEN};
