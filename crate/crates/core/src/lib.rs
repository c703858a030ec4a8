//! Almost-sure Büchi solvers for Markov decision processes, with explicit and
//! symbolic variants, plus symbolic SCC decomposition. Symbolic algorithms run
//! on a [`engine::SymbolicEngine`] that counts every image operation.

pub mod bench;
pub mod engine;
pub mod explicit;
pub mod model;
pub mod oracle;
pub mod reach;
pub mod scc;
pub mod set;
pub mod symbolic;
pub mod trace;

pub use engine::{CardinalityVerdict, EngineError, StepLedger, SymbolicEngine};
pub use model::{
    parse_digraph, parse_mdp, serialize_digraph, serialize_mdp, Digraph, MdpError, MdpGraph, Owner,
    TargetSet,
};
pub use set::StateSet;
