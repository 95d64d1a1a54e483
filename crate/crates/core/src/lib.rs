//! Multilayer network regression.
//!
//! Eigenvector-like centrality on supra-adjacency matrices, community-based
//! aggregation of that centrality, and least-squares regressions that use
//! either as covariates (C-MNetR, CC-MNetR and the community fixed-effects
//! baseline RCFE). A seeded Monte Carlo harness reproduces the simulation
//! studies, and [`pipeline`] runs the input-output real-data workflow.

pub mod centrality;
pub mod error;
pub mod io;
pub mod linalg;
pub mod network;
pub mod pipeline;
pub mod regression;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod synth;

pub use centrality::{CentralityBundle, CentralityOptions, CommunityStructure};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, EigenResult, LeastSquaresResult};
pub use network::{MultilayerNetwork, NoiseSpec, NoiseStructure};
pub use regression::{ModelKind, RegressionFit};
pub use simulation::{AnRule, ExperimentConfig, ExperimentKind, SimulationReport};
