//! On-disk formats: dataset directories, embedding and checkpoint blobs,
//! and canonical JSON metric reports. All multi-byte integers are
//! little-endian; floating-point payloads are IEEE 754 little-endian.

pub mod checkpoint;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod report;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use dataset::{load_dataset, save_dataset, Dataset};
pub use embeddings::{load_embeddings, save_embeddings};
pub use error::{IoError, Result};
pub use report::{render_report, write_report, Diagnostics, EvalReport};
