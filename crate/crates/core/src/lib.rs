//! Spectral computations for the standard Laplacian on metric graphs.

pub mod error;
pub mod fem;
pub mod graph;
pub mod isoperimetric;
pub mod optimizer;
pub mod secular;
pub mod spectrum;
pub mod surgery;

pub use error::SolverError;
pub use graph::{Edge, GraphError, MetricGraph};
pub use secular::{compute_spectrum_any, compute_spectrum_secular, SecularOptions};
pub use spectrum::{Method, SpectralEntry, Spectrum};
