//! Fixtures shared by the benchmarks.

use srwlab_core::{build_lattice, build_line_graph, build_regular_tree, LineSpec, MultiGraph};

pub fn line(base: u64, levels: usize) -> MultiGraph {
    build_line_graph(&LineSpec::geometric(base, levels).unwrap()).unwrap()
}

pub fn lattice(dim: usize, radius: usize) -> MultiGraph {
    build_lattice(dim, radius).unwrap()
}

pub fn tree(depth: usize) -> MultiGraph {
    build_regular_tree(2, depth).unwrap()
}
