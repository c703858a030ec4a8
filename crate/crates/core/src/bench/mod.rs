//! Instance generators, the benchmark harness and its report formats.

mod config;
mod gen;
mod harness;

pub use config::{parse_config, BenchConfig, ConfigError, Density, Family};
pub use gen::{
    gen_layered_scc_graph, gen_random_mdp, perturb_mdp, GenError, GenKind, GenParams, LayeredGraph,
};
pub use harness::{
    build_instance, decompose_with, partition_hash, run_algorithm, run_benchmark, solve_with,
    winning_hash, Algorithm, BenchError, BenchReport, BenchRow, Divergence, Instance, Outcome,
    CSV_HEADER,
};
