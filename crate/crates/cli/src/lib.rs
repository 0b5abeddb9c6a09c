//! Experiment orchestration for qonsensus: dataset loading, cached
//! ensembles, seeded runs, JSON-lines records and result tables.

pub mod cache;
pub mod data;
pub mod error;
pub mod experiment;
pub mod report;

pub use data::{load_dataset, parse_dataset};
pub use error::{Result, Stage, StageError};
pub use experiment::{
    read_records, run_experiment, sort_records, AggregateRecord, ExperimentConfig,
    ExperimentReport, KChoice, Runner, SeedRecord,
};
pub use report::emit_table;
