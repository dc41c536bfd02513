//! Fixtures shared by the benchmarks.

use kgworlds_core::config::GenConfig;
use kgworlds_core::partition::{partition_rules, Partition};
use kgworlds_core::rules::{generate_alphabet, generate_rules, RuleSet};
use kgworlds_core::seed::{rng_for, stage};
use kgworlds_core::worldgraph::{generate_closed_world_graph, WorldGraph};

/// K = 20 master rules, w = 20, s = 1.
pub fn default_partition(seed: u64) -> Partition {
    let alphabet =
        generate_alphabet(20, 0.5, &mut rng_for(seed, &[stage::ALPHABET])).expect("valid alphabet");
    let rules = generate_rules(&alphabet, &mut rng_for(seed, &[stage::RULES]));
    partition_rules(&rules, 20, 1, &mut rng_for(seed, &[stage::PARTITION])).expect("enough rules")
}

/// The first world of [`default_partition`], with its rules and closed graph.
pub fn first_world(seed: u64) -> (Partition, RuleSet, WorldGraph) {
    let p = default_partition(seed);
    let w = &p.worlds[0];
    let rules = p
        .rules
        .subset(&w.rule_indices)
        .expect("window indices in range");
    let (g, _) = generate_closed_world_graph(w, &p.rules, &GenConfig::default(), seed)
        .expect("world closes");
    (p, rules, g.graph)
}
