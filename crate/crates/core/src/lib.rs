//! Consensus clustering through QUBO and Ising models.
//!
//! The crate builds a co-association matrix from an ensemble of base
//! clusterings, compiles the consensus problem into integer QUBO models
//! (pairwise similarity, correlation clustering, binary-coded), and solves
//! them with a software parallel-trial annealer using a dynamic energy
//! offset. An average-linkage baseline, evaluation metrics and brute-force
//! oracles for small instances are included.

pub mod annealer;
pub mod consensus;
pub mod dataset;
pub mod ensemble;
mod error;
pub mod ising;
pub mod metrics;
pub mod oracle;
pub mod partition;
pub mod qubo;
mod rng;
pub mod similarity;

pub use annealer::{anneal, AnnealParams, IncrementalState, SolveReport};
pub use consensus::{hac, run_consensus, ConsensusResult, Method};
pub use dataset::Dataset;
pub use ensemble::{generate_ensemble, kmeans, EnsembleConfig};
pub use error::{Error, Result};
pub use ising::IsingModel;
pub use partition::{validate_partition, Ensemble, Partition};
pub use qubo::{BuilderConfig, ModelKind, QuboModel};
pub use similarity::SimilarityMatrix;
