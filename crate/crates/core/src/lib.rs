//! Deterministic generator and validator for logic-grounded relational
//! reasoning benchmarks.
//!
//! A master set of binary Horn rules over an invertible relation alphabet is
//! split into overlapping worlds; each world grows a labeled graph by rule
//! expansion and samples query graphs whose answers follow from the rules.
//! Every instance is checked by a symbolic resolver before it is written.

pub mod config;
pub mod dataset_io;
pub mod error;
pub mod partition;
pub mod paths;
pub mod pipeline;
pub mod resolver;
pub mod rules;
pub mod sampler;
pub mod seed;
pub mod worldgraph;

pub use config::{GenConfig, Split, SplitCounts, SplitFractions, SuiteConfig, WorldSplitCounts};
pub use dataset_io::{
    compute_stats, difficulty_bucket, extend_graph, read_suite, write_suite, Difficulty,
    ExtendedGraph, Suite, SuiteWorld, WorldStats,
};
pub use error::{Error, Result};
pub use partition::{SimilarityMatrix, WorldSpec};
pub use pipeline::{
    generate_suite, solve_suite, summarize, validate_suite, SolveReport, SuiteSummary,
    SuiteValidation,
};
pub use resolver::{
    resolve_descriptor, symbolic_baseline_solve, validate_instance, ValidationReport,
};
pub use rules::{BinaryRule, RelationAlphabet, RelationId, RuleSet};
pub use sampler::{Descriptor, Instance, SamplingReport, WorldDataset};
pub use worldgraph::{NodeId, WorldGraph};
