pub mod checkpoint;
pub mod error;
pub mod gnn;
pub mod graphrep;
pub mod pipeline;
pub mod pnet;
pub mod synth;

pub use error::{P2gError, Result};
