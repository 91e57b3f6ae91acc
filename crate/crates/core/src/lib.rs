//! Simple random walks on locally finite multigraphs, the subgraph a walk
//! traces out, and the electrical quantities attached to both.

pub mod electrical;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod graph_format;
pub mod harmonic;
pub mod lab;
pub mod path;
pub mod rng;
pub mod solver;
pub mod stats;
pub mod walk;

pub use electrical::{
    effective_resistance, effective_resistance_global, max_pair_resistance, Network, PairMode,
    PairResistance, ResistanceMethod, ResistanceReport,
};
pub use error::{LabError, Result};
pub use graph::{
    build_lattice, build_line_graph, build_regular_tree, contract_vertex_set, GraphKind, LineSpec,
    MultiGraph, VertexLabel,
};
pub use harmonic::{solve_voltage, VoltageField};
pub use path::{extract_path, union_paths, LineCrossings, PathSubgraph};
pub use stats::{LemmaStats, Verdict};
pub use walk::{simulate, EdgeId, StopRule, Termination, WalkTrace};
