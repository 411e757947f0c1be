//! Visual search scanpath simulation and benchmarking.
//!
//! Two searcher families run on the same equalized datasets: a Bayesian
//! searcher that accumulates evidence over a fovea-sized grid ([`ibs`]) and
//! a greedy searcher that descends a full-resolution attention map
//! ([`greedy`]). Both emit [`Scanpath`]s in the format used for human data,
//! which [`metrics`] scores for efficiency and similarity.
//!
//! Numerical routines are generic over [`Scalar`] (`f32` or `f64`).

pub mod error;
pub mod greedy;
pub mod grid;
pub mod ibs;
pub mod io;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod scalar;
pub mod search;
pub mod similarity;

pub use error::{Error, Result};
pub use grid::Grid;
pub use model::{BoundingBox, Cell, DatasetSpec, Fixation, PixelRect, Scanpath, Trial};
pub use scalar::Scalar;

/// Row-major probability grid in double precision.
pub type ProbabilityGrid = Grid<f64>;
/// Single-precision probability grid.
pub type ProbabilityGrid32 = Grid<f32>;
/// Map as stored on disk.
pub type Map32 = Grid<f32>;
/// Search state with double-precision posterior.
pub type SearchState = ibs::SearchState<f64>;
pub type SearchState32 = ibs::SearchState<f32>;
