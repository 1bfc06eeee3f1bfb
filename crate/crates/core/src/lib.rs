//! Fragility analysis of stock-correlation networks.
//!
//! Sliding windows of daily returns are turned into unweighted networks
//! (minimum spanning tree plus high-correlation links). Each network is
//! then measured by its average Ollivier-Ricci curvature, the entropy of
//! its random walk, its path statistics, and a curvature-weighted
//! minimum-risk portfolio measure.
//!
//! ```
//! use ricci_core::graph::{generators, DistanceMatrix};
//! use ricci_core::curvature::edge_curvatures;
//!
//! let g = generators::complete(4);
//! let summary = edge_curvatures(&g, &DistanceMatrix::new(&g)).unwrap();
//! assert!((summary.average - 2.0 / 3.0).abs() < 1e-12);
//! ```

pub mod curvature;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod market;
pub mod pipeline;
pub mod portfolio;
pub mod stochastic;
pub mod synth;
pub mod transport;

pub use curvature::{CurvatureResult, CurvatureSummary};
pub use entropy::{EntropyResult, StochasticMatrix};
pub use error::{Error, ErrorKind, Result};
pub use graph::{DistanceMatrix, Graph, GraphBuilder};
pub use market::{CorrelationWindow, MarketGraph, PriceMatrix, ReturnMatrix, WindowSpec};
pub use pipeline::{MetricSet, PipelineConfig, PipelineOutput, WindowRecord};
pub use portfolio::{PortfolioProblem, PortfolioResult};
pub use stochastic::OuParams;
pub use synth::Regime;
pub use transport::{ProbabilityMeasure, TransportPlan};
