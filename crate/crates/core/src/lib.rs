//! Cumulative spectral gradient (CSG) for knowledge-graph tail prediction.
//!
//! Each unique tail entity of a triple set is a class; the class is described
//! by the concatenated head/relation embeddings of its triples. A sampled
//! k-nearest-neighbor graph over those vectors gives a class similarity
//! matrix, whose normalized Laplacian spectrum yields the CSG.

pub mod embedding;
pub mod error;
pub mod experiment;
pub mod kg;
pub mod report;
pub mod sampling;
pub mod spectral;

pub use embedding::{CompositeVector, EmbeddingStore};
pub use error::{Error, ErrorKind, Result};
pub use experiment::{
    CorrelationReport, Correlation, CsgParams, CsgReport, EmbeddingSource, PreparedDataset,
    RunConfig, SweepGrid,
};
pub use kg::{ClassIndex, DatasetStats, Triple, TripleSet};
pub use report::{emit_report, OutputFormat};
pub use sampling::{NeighborList, SampledPool, SimilarityMatrix};
pub use spectral::{Csg, Laplacian, Spectrum};
