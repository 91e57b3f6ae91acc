//! The PATH subgraph: vertices visited and edges crossed by a walk.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::graph::MultiGraph;
use crate::walk::{EdgeId, WalkTrace};

/// Per-level crossing statistics of a walk on a line graph. `s[n]` counts
/// crossings of level-`n` edges (between `n` and `n + 1`) in either direction;
/// `s_prime[n]` counts the distinct level-`n` edges crossed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineCrossings {
    pub s: Vec<u64>,
    pub s_prime: Vec<u64>,
}

impl LineCrossings {
    fn from_crossed(levels: usize, crossed: &BTreeMap<EdgeId, u64>) -> Self {
        let mut s = vec![0u64; levels];
        let mut s_prime = vec![0u64; levels];
        for (e, &count) in crossed {
            s[e.lo] += count;
            s_prime[e.lo] += 1;
        }
        LineCrossings { s, s_prime }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSubgraph {
    pub start: usize,
    /// Last vertex of the walk (the frontier when it was absorbed).
    pub last: usize,
    pub visited: BTreeSet<usize>,
    /// Distinct edge copies crossed, with their crossing counts.
    pub crossed: BTreeMap<EdgeId, u64>,
    pub line: Option<LineCrossings>,
    pub graph_fingerprint: u64,
}

impl PathSubgraph {
    /// Total number of crossings, equal to the number of walk steps.
    pub fn total_crossings(&self) -> u64 {
        self.crossed.values().sum()
    }
}

fn check_graph(t: &WalkTrace, g: &MultiGraph) -> Result<()> {
    if t.graph_fingerprint != g.fingerprint() {
        return Err(LabError::invalid("trace was recorded on a different graph"));
    }
    Ok(())
}

pub fn extract_path(t: &WalkTrace, g: &MultiGraph) -> Result<PathSubgraph> {
    check_graph(t, g)?;
    let mut crossed: BTreeMap<EdgeId, u64> = BTreeMap::new();
    for e in &t.edges {
        *crossed.entry(*e).or_insert(0) += 1;
    }
    let visited = t.vertices.iter().copied().collect();
    let line = g
        .line_spec()
        .map(|spec| LineCrossings::from_crossed(spec.levels(), &crossed));
    Ok(PathSubgraph {
        start: t.start(),
        last: t.last(),
        visited,
        crossed,
        line,
        graph_fingerprint: g.fingerprint(),
    })
}

/// Union of the PATHs of several walks on one graph; crossing counts add.
pub fn union_paths(paths: &[PathSubgraph]) -> Result<PathSubgraph> {
    let first = paths
        .first()
        .ok_or_else(|| LabError::invalid("union of zero paths"))?;
    if paths.iter().any(|p| p.graph_fingerprint != first.graph_fingerprint) {
        return Err(LabError::invalid("paths come from different graphs"));
    }
    let mut visited = BTreeSet::new();
    let mut crossed: BTreeMap<EdgeId, u64> = BTreeMap::new();
    for p in paths {
        visited.extend(p.visited.iter().copied());
        for (e, &c) in &p.crossed {
            *crossed.entry(*e).or_insert(0) += c;
        }
    }
    let line = first
        .line
        .as_ref()
        .map(|l| LineCrossings::from_crossed(l.s.len(), &crossed));
    Ok(PathSubgraph {
        start: first.start,
        last: first.last,
        visited,
        crossed,
        line,
        graph_fingerprint: first.graph_fingerprint,
    })
}

/// `(s_n, s'_n)` per level of a line graph.
pub fn crossing_stats_line(t: &WalkTrace, g: &MultiGraph) -> Result<LineCrossings> {
    check_graph(t, g)?;
    let spec = g
        .line_spec()
        .ok_or_else(|| LabError::invalid("crossing statistics need a line graph"))?;
    let mut crossed: BTreeMap<EdgeId, u64> = BTreeMap::new();
    for e in &t.edges {
        *crossed.entry(*e).or_insert(0) += 1;
    }
    Ok(LineCrossings::from_crossed(spec.levels(), &crossed))
}
