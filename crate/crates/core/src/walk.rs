//! Simple random walks on [`MultiGraph`]s.
//!
//! From `v` the walk picks one of the `d_v` parallel edge copies uniformly, so
//! neighbor `u` is chosen with probability `m(v, u) / d_v` and the copy index
//! within the bundle is recorded.

use std::fmt::Write as _;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::graph::MultiGraph;
use crate::rng::trial_rng;

/// One parallel copy of an undirected edge bundle, endpoints normalized so
/// that `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub lo: usize,
    pub hi: usize,
    pub copy: u64,
}

impl EdgeId {
    pub fn new(u: usize, v: usize, copy: u64) -> Self {
        EdgeId {
            lo: u.min(v),
            hi: u.max(v),
            copy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// At most `n` steps; the boundary still absorbs.
    MaxSteps(usize),
    UntilBoundary,
    /// Until the target vertex (or the boundary) is hit.
    UntilVertex(usize),
    /// Until the boundary, giving up after `n` steps.
    UntilBoundaryOr(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    HitBoundary,
    StepBudget,
    HitTarget,
    /// Stopped at a vertex with no incident edges.
    Trapped,
}

/// Realized walk `w_0, w_1, ...` with the edge copy used for each step.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub vertices: Vec<usize>,
    pub edges: Vec<EdgeId>,
    pub termination: Termination,
    pub graph_fingerprint: u64,
}

impl WalkTrace {
    pub fn steps(&self) -> usize {
        self.edges.len()
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    /// The first `n` steps (the whole trace when shorter).
    pub fn prefix(&self, n: usize) -> WalkTrace {
        if n >= self.steps() {
            return self.clone();
        }
        WalkTrace {
            vertices: self.vertices[..=n].to_vec(),
            edges: self.edges[..n].to_vec(),
            termination: Termination::StepBudget,
            graph_fingerprint: self.graph_fingerprint,
        }
    }

    /// Checks the trace against `g`: consecutive vertices adjacent, edges
    /// joining them, copy indices inside the bundle.
    pub fn validate(&self, g: &MultiGraph) -> Result<()> {
        if self.vertices.is_empty() || self.edges.len() + 1 != self.vertices.len() {
            return Err(LabError::invalid("trace length mismatch"));
        }
        for (t, e) in self.edges.iter().enumerate() {
            let (a, b) = (self.vertices[t], self.vertices[t + 1]);
            if EdgeId::new(a, b, e.copy) != *e {
                return Err(LabError::invalid(format!("edge {t} does not join w_{t} and w_{}", t + 1)));
            }
            if e.copy >= g.multiplicity(a, b) {
                return Err(LabError::invalid(format!("step {t} uses a non-existent edge copy")));
            }
        }
        Ok(())
    }
}

/// Runs a walk from `start` using the generator stream `(seed, 0)`.
pub fn simulate(g: &MultiGraph, start: usize, stop: StopRule, seed: u64) -> Result<WalkTrace> {
    simulate_with(g, start, stop, &mut trial_rng(seed, 0))
}

pub fn simulate_with<R: Rng>(
    g: &MultiGraph,
    start: usize,
    stop: StopRule,
    rng: &mut R,
) -> Result<WalkTrace> {
    if start >= g.vertex_count() {
        return Err(LabError::invalid(format!("start vertex {start} out of range")));
    }
    if g.is_boundary(start) {
        return Err(LabError::invalid(format!("start vertex {start} is absorbing")));
    }
    let (budget, target) = match stop {
        StopRule::MaxSteps(n) | StopRule::UntilBoundaryOr(n) => (n, None),
        StopRule::UntilBoundary => {
            if g.boundary_count() == 0 {
                return Err(LabError::invalid("until_boundary on a graph without boundary"));
            }
            (usize::MAX, None)
        }
        StopRule::UntilVertex(v) => {
            if v >= g.vertex_count() {
                return Err(LabError::invalid(format!("target vertex {v} out of range")));
            }
            (usize::MAX, Some(v))
        }
    };

    let mut vertices = vec![start];
    let mut edges = Vec::new();
    let mut here = start;
    let termination = loop {
        if Some(here) == target {
            break Termination::HitTarget;
        }
        if g.is_boundary(here) {
            break Termination::HitBoundary;
        }
        if edges.len() >= budget {
            break Termination::StepBudget;
        }
        let d = g.degree(here);
        if d == 0 {
            break Termination::Trapped;
        }
        let mut r = rng.random_range(0..d);
        let mut next = None;
        for (u, m) in g.neighbors(here) {
            if r < m {
                next = Some((u, r));
                break;
            }
            r -= m;
        }
        let (u, copy) = next.expect("degree equals the sum of multiplicities");
        edges.push(EdgeId::new(here, u, copy));
        vertices.push(u);
        here = u;
    };

    Ok(WalkTrace {
        vertices,
        edges,
        termination,
        graph_fingerprint: g.fingerprint(),
    })
}

/// Debug dump: one line per vertex, `vertex copy`, where `copy` is the index
/// of the parallel edge used to arrive (`-` for the start vertex).
pub fn write_trace<W: Write>(trace: &WalkTrace, mut out: W) -> Result<()> {
    let mut buf = String::new();
    writeln!(buf, "{} -", trace.vertices[0]).unwrap();
    for (v, e) in trace.vertices[1..].iter().zip(&trace.edges) {
        writeln!(buf, "{v} {}", e.copy).unwrap();
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
