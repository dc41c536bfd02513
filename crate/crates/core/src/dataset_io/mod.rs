//! Suite serialization, per-world statistics, difficulty buckets and the
//! edge-node graph export.

mod extended;
mod stats;
mod suite;

pub use extended::{extend_graph, EdgeNode, ExtendedGraph};
pub use stats::{
    aggregate_stats, compute_stats, difficulty_bucket, round6, AggregateStats, Difficulty,
    WorldStats, EASY_THRESHOLD, MEDIUM_THRESHOLD,
};
pub use suite::{
    read_manifest, read_suite, read_suite_filtered, read_world, world_dir_name, write_suite,
    Manifest, ManifestWorld, MultitaskGroups, Protocols, Suite, SuiteWorld, WorldSets,
};
