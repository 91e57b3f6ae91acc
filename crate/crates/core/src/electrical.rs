//! Effective resistance, energy and cutset bounds on resistor networks.
//!
//! A [`MultiGraph`] becomes a network with conductance equal to multiplicity.
//! A [`PathSubgraph`] becomes a network with one unit resistor per distinct
//! crossed edge copy; crossing counts play no role here.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::graph::{MultiGraph, VertexLabel};
use crate::path::PathSubgraph;
use crate::rng::trial_rng;
use crate::solver::{SolveMethod, SystemBuilder, DENSE_LIMIT};

/// Scaled-residual target for current-injection solves.
pub const RESISTANCE_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct Network {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    /// Local vertex to original graph vertex, when the network is a subgraph.
    ids: Option<Vec<usize>>,
    index: HashMap<usize, usize>,
}

impl Network {
    pub fn from_edges(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(u, v, c) in &edges {
            if u >= n || v >= n {
                return Err(LabError::invalid(format!("edge ({u}, {v}) out of range")));
            }
            if !c.is_finite() || c <= 0.0 {
                return Err(LabError::invalid(format!("edge ({u}, {v}) has conductance {c}")));
            }
        }
        Ok(Network {
            n,
            edges,
            ids: None,
            index: HashMap::new(),
        })
    }

    pub fn from_graph(g: &MultiGraph) -> Self {
        Network {
            n: g.vertex_count(),
            edges: g.edges().map(|(u, v, m)| (u, v, m as f64)).collect(),
            ids: None,
            index: HashMap::new(),
        }
    }

    /// Visited vertices of `p`, renumbered densely in increasing id order, with
    /// a unit resistor per distinct crossed edge copy.
    pub fn from_path(p: &PathSubgraph) -> Self {
        Self::from_edge_ids(p.visited.iter().copied(), p.crossed.keys().map(|e| (e.lo, e.hi)))
    }

    /// Unit-resistor network over the given vertices and edges (original ids).
    pub fn from_edge_ids(
        vertices: impl IntoIterator<Item = usize>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut ids: Vec<usize> = vertices.into_iter().collect();
        let mut edge_list: Vec<(usize, usize)> = edges.into_iter().collect();
        for &(u, v) in &edge_list {
            ids.push(u);
            ids.push(v);
        }
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges = edge_list
            .drain(..)
            .map(|(u, v)| (index[&u], index[&v], 1.0))
            .collect();
        Network {
            n: ids.len(),
            edges,
            ids: Some(ids),
            index,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Local id of an original vertex.
    pub fn local(&self, global: usize) -> Option<usize> {
        match &self.ids {
            None => (global < self.n).then_some(global),
            Some(_) => self.index.get(&global).copied(),
        }
    }

    pub fn global(&self, local: usize) -> usize {
        match &self.ids {
            None => local,
            Some(ids) => ids[local],
        }
    }

    fn locals(&self, globals: &[usize]) -> Result<Vec<usize>> {
        globals
            .iter()
            .map(|&g| {
                self.local(g)
                    .ok_or_else(|| LabError::invalid(format!("vertex {g} not in network")))
            })
            .collect()
    }

    /// Copy of the network with edge `k` removed.
    pub fn without_edge(&self, k: usize) -> Network {
        let mut out = self.clone();
        out.edges.remove(k);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResistanceMethod {
    LaplacianSolve,
    SeriesFormula,
    BruteForce,
}

impl ResistanceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResistanceMethod::LaplacianSolve => "laplacian_solve",
            ResistanceMethod::SeriesFormula => "series_formula",
            ResistanceMethod::BruteForce => "brute_force",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceReport {
    /// Ohms; `f64::INFINITY` when the sets are disconnected.
    pub value: f64,
    pub source_set: Vec<usize>,
    pub sink_set: Vec<usize>,
    /// Dissipation of the potential that is 1 on the source set and 0 on the
    /// sink set (equals `1 / value`).
    pub energy: f64,
    pub method: ResistanceMethod,
    /// That potential, per local network vertex (empty when disconnected).
    pub potential: Vec<f64>,
}

impl ResistanceReport {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Effective resistance between two disjoint vertex sets given in network
/// (local) ids, each set shorted to one node.
pub fn effective_resistance(net: &Network, a_set: &[usize], b_set: &[usize]) -> Result<ResistanceReport> {
    resistance_local(net, a_set, b_set, SolveMethod::Auto)
}

/// Same as [`effective_resistance`], always factoring densely.
pub fn effective_resistance_brute_force(
    net: &Network,
    a_set: &[usize],
    b_set: &[usize],
) -> Result<ResistanceReport> {
    resistance_local(net, a_set, b_set, SolveMethod::Dense)
}

/// Effective resistance between sets of original vertex ids.
pub fn effective_resistance_global(
    net: &Network,
    a_set: &[usize],
    b_set: &[usize],
) -> Result<ResistanceReport> {
    let a = net.locals(a_set)?;
    let b = net.locals(b_set)?;
    let mut report = effective_resistance(net, &a, &b)?;
    report.source_set = a_set.to_vec();
    report.sink_set = b_set.to_vec();
    Ok(report)
}

fn resistance_local(
    net: &Network,
    a_set: &[usize],
    b_set: &[usize],
    method: SolveMethod,
) -> Result<ResistanceReport> {
    if a_set.is_empty() || b_set.is_empty() {
        return Err(LabError::invalid("source and sink sets must be nonempty"));
    }
    let n = net.n;
    const FREE: u8 = 0;
    const SRC: u8 = 1;
    const SNK: u8 = 2;
    let mut role = vec![FREE; n];
    for &a in a_set {
        if a >= n {
            return Err(LabError::invalid(format!("vertex {a} out of range")));
        }
        role[a] = SRC;
    }
    for &b in b_set {
        if b >= n {
            return Err(LabError::invalid(format!("vertex {b} out of range")));
        }
        if role[b] == SRC {
            return Err(LabError::invalid(format!("vertex {b} is in both sets")));
        }
        role[b] = SNK;
    }
    // Contracted node ids: source = 0, sink = 1, free vertex v = 2 + v.
    let node = |v: usize| match role[v] {
        SRC => 0,
        SNK => 1,
        _ => 2 + v,
    };
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + 2];
    for &(u, v, c) in &net.edges {
        let (x, y) = (node(u), node(v));
        if x != y {
            adj[x].push((y, c));
            adj[y].push((x, c));
        }
    }
    let method_tag = match method {
        SolveMethod::Dense => ResistanceMethod::BruteForce,
        _ => ResistanceMethod::LaplacianSolve,
    };

    let mut seen = vec![false; n + 2];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        if x == 1 {
            continue;
        }
        for &(y, _) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    if !seen[1] {
        return Ok(ResistanceReport {
            value: f64::INFINITY,
            source_set: a_set.to_vec(),
            sink_set: b_set.to_vec(),
            energy: 0.0,
            method: method_tag,
            potential: Vec::new(),
        });
    }

    let mut index = vec![usize::MAX; n + 2];
    let mut count = 0;
    for x in 0..n + 2 {
        if seen[x] && x != 1 {
            index[x] = count;
            count += 1;
        }
    }
    let mut builder = SystemBuilder::new(count);
    for x in 0..n + 2 {
        if index[x] == usize::MAX {
            continue;
        }
        for &(y, c) in &adj[x] {
            if y == 1 {
                builder.ground(index[x], c);
            } else if index[y] > index[x] {
                builder.couple(index[x], index[y], c);
            }
        }
    }
    let system = builder.build();
    let mut rhs = vec![0.0; count];
    rhs[index[0]] = 1.0;
    let x = system.solve(&rhs, RESISTANCE_TOL, method)?;
    let value = x[index[0]];

    let potential: Vec<f64> = (0..n)
        .map(|v| {
            let k = node(v);
            match k {
                0 => 1.0,
                1 => 0.0,
                _ if index[k] != usize::MAX => x[index[k]] / value,
                _ => 0.0,
            }
        })
        .collect();
    let energy = dissipation(net, &potential);
    Ok(ResistanceReport {
        value,
        source_set: a_set.to_vec(),
        sink_set: b_set.to_vec(),
        energy,
        method: method_tag,
        potential,
    })
}

fn dissipation(net: &Network, potential: &[f64]) -> f64 {
    net.edges
        .iter()
        .map(|&(u, v, c)| c * (potential[u] - potential[v]).powi(2))
        .sum()
}

/// Series formula for a PATH on a line graph: `sum 1/s'_n` over crossed
/// levels. The crossed levels of a walk form one contiguous block.
pub fn path_resistance_line(p: &PathSubgraph) -> Result<f64> {
    let line = p
        .line
        .as_ref()
        .ok_or_else(|| LabError::invalid("series formula needs a line-graph PATH"))?;
    Ok(line
        .s_prime
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| 1.0 / s as f64)
        .sum())
}

fn reaches(net: &Network, from: &[usize], to: &[usize], removed: &[bool]) -> bool {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); net.n];
    for (k, &(u, v, _)) in net.edges.iter().enumerate() {
        if !removed[k] {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut target = vec![false; net.n];
    for &t in to {
        target[t] = true;
    }
    let mut seen = vec![false; net.n];
    let mut stack: Vec<usize> = from.to_vec();
    for &s in from {
        seen[s] = true;
    }
    while let Some(u) = stack.pop() {
        if target[u] {
            return true;
        }
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// `sum_k (sum_{e in cutset k} c_e)^-1` over pairwise edge-disjoint cutsets
/// (edge indices into [`Network::edges`]), each separating `a_set` from
/// `b_set`. Never exceeds the effective resistance.
pub fn nash_williams_bound(
    net: &Network,
    a_set: &[usize],
    b_set: &[usize],
    cutsets: &[Vec<usize>],
) -> Result<f64> {
    let mut used = vec![false; net.edges.len()];
    let mut bound = 0.0;
    for (k, cut) in cutsets.iter().enumerate() {
        let mut removed = vec![false; net.edges.len()];
        let mut conductance = 0.0;
        for &e in cut {
            if e >= net.edges.len() {
                return Err(LabError::invalid(format!("cutset {k} names edge {e} out of range")));
            }
            if used[e] {
                return Err(LabError::invalid(format!("edge {e} appears in two cutsets")));
            }
            used[e] = true;
            removed[e] = true;
            conductance += net.edges[e].2;
        }
        if reaches(net, a_set, b_set, &removed) {
            return Err(LabError::invalid(format!("cutset {k} does not separate the sets")));
        }
        bound += 1.0 / conductance;
    }
    Ok(bound)
}

/// Breadth-first distance layers from `a_set`: cutset `k` holds the edges
/// joining distance `k` to distance `k + 1`, for every `k` below the distance
/// of `b_set`.
pub fn distance_cutsets(net: &Network, a_set: &[usize], b_set: &[usize]) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); net.n];
    for &(u, v, _) in &net.edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut dist = vec![usize::MAX; net.n];
    let mut queue = VecDeque::new();
    for &a in a_set {
        dist[a] = 0;
        queue.push_back(a);
    }
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u] {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    let reach = b_set.iter().map(|&b| dist[b]).min().unwrap_or(usize::MAX);
    if reach == usize::MAX {
        return Vec::new();
    }
    let mut cutsets = vec![Vec::new(); reach];
    for (k, &(u, v, _)) in net.edges.iter().enumerate() {
        let (du, dv) = (dist[u], dist[v]);
        if du == usize::MAX || dv == usize::MAX {
            continue;
        }
        let lo = du.min(dv);
        if du.abs_diff(dv) == 1 && lo < reach {
            cutsets[lo].push(k);
        }
    }
    cutsets
}

/// Energy `sum_e c_e (potential difference)^2` of a potential that is constant
/// on each of the two sets. For any such potential,
/// `energy >= gap^2 / R_eff`, with equality for the harmonic one.
pub fn thomson_energy(
    net: &Network,
    potential: &[f64],
    a_set: &[usize],
    b_set: &[usize],
) -> Result<f64> {
    if potential.len() != net.n {
        return Err(LabError::invalid("potential length does not match the network"));
    }
    for set in [a_set, b_set] {
        if let Some(&first) = set.first() {
            if set.iter().any(|&v| potential[v] != potential[first]) {
                return Err(LabError::invalid("potential is not constant on a terminal set"));
            }
        }
    }
    Ok(dissipation(net, potential))
}

/// Resistance between `k_labels` (contracted) and the boundary (contracted),
/// for each truncation in `family`. Rayleigh monotonicity makes the sequence
/// non-decreasing when the truncations are nested and increasing.
pub fn resistance_to_infinity(family: &[MultiGraph], k_labels: &[VertexLabel]) -> Result<Vec<f64>> {
    if k_labels.is_empty() {
        return Err(LabError::invalid("empty K set"));
    }
    family
        .iter()
        .map(|g| {
            let mut k = Vec::with_capacity(k_labels.len());
            for label in k_labels {
                let v = g
                    .find_label(label)
                    .ok_or_else(|| LabError::invalid(format!("{label:?} not in truncation")))?;
                if g.is_boundary(v) {
                    return Err(LabError::invalid(format!("{label:?} lies on the boundary")));
                }
                k.push(v);
            }
            let boundary: Vec<usize> = g.boundary().collect();
            if boundary.is_empty() {
                return Ok(f64::INFINITY);
            }
            Ok(effective_resistance(&Network::from_graph(g), &k, &boundary)?.value)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// Every vertex pair.
    Exact,
    /// `pairs` uniformly sampled pairs plus the (start, last vertex) pair.
    Sampled { pairs: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResistance {
    pub value: f64,
    /// Maximizing pair, original vertex ids.
    pub pair: (usize, usize),
}

/// Exact mode refuses networks above this size (it stores the full grounded
/// inverse).
pub const EXACT_PAIR_LIMIT: usize = 3000;

/// `R(n)`: maximal effective resistance between pairs of PATH vertices.
pub fn max_pair_resistance(p: &PathSubgraph, mode: PairMode) -> Result<PairResistance> {
    let net = Network::from_path(p);
    let n = net.vertex_count();
    if n < 2 {
        return Err(LabError::invalid("PATH needs at least two vertices"));
    }
    match mode {
        PairMode::Exact => exact_max_pair(&net),
        PairMode::Sampled { pairs, seed } => {
            let mut rng = trial_rng(seed, 0);
            let mut chosen = Vec::with_capacity(pairs + 1);
            let (s, l) = (net.local(p.start).unwrap(), net.local(p.last).unwrap());
            if s != l {
                chosen.push((s, l));
            }
            for _ in 0..pairs {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                chosen.push((a, b));
            }
            let values: Vec<f64> = chosen
                .par_iter()
                .map(|&(a, b)| effective_resistance(&net, &[a], &[b]).map(|r| r.value))
                .collect::<Result<_>>()?;
            let (k, value) = values
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
            let (a, b) = chosen[k];
            Ok(PairResistance {
                value,
                pair: (net.global(a), net.global(b)),
            })
        }
    }
}

fn exact_max_pair(net: &Network) -> Result<PairResistance> {
    let n = net.vertex_count();
    if n > EXACT_PAIR_LIMIT {
        return Err(LabError::invalid(format!(
            "exact all-pairs mode is limited to {EXACT_PAIR_LIMIT} vertices (got {n})"
        )));
    }
    // Ground vertex 0 and build the inverse of the reduced Laplacian column by
    // column; R(a, b) = G_aa + G_bb - 2 G_ab with row/column 0 identically 0.
    let mut builder = SystemBuilder::new(n - 1);
    for &(u, v, c) in &net.edges {
        if u == v {
            continue;
        }
        match (u, v) {
            (0, w) | (w, 0) => builder.ground(w - 1, c),
            _ => builder.couple(u - 1, v - 1, c),
        }
    }
    let system = builder.build();
    let method = if n - 1 <= DENSE_LIMIT {
        SolveMethod::Dense
    } else {
        SolveMethod::Auto
    };
    let columns: Vec<Vec<f64>> = (0..n - 1)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n - 1];
            e[j] = 1.0;
            system.solve(&e, RESISTANCE_TOL, method)
        })
        .collect::<Result<_>>()?;
    let green = |a: usize, b: usize| -> f64 {
        if a == 0 || b == 0 {
            0.0
        } else {
            columns[b - 1][a - 1]
        }
    };
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for a in 0..n {
        for b in a + 1..n {
            let r = green(a, a) + green(b, b) - 2.0 * green(a, b);
            if r > best.0 {
                best = (r, (a, b));
            }
        }
    }
    Ok(PairResistance {
        value: best.0,
        pair: (net.global(best.1 .0), net.global(best.1 .1)),
    })
}

/// One row of the resistance series export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub radius_or_n: u64,
    pub value: f64,
    pub method: ResistanceMethod,
}

/// CSV with header `radius_or_n,value,method`; infinite values print as `inf`.
pub fn write_resistance_series<W: Write>(rows: &[SeriesRow], mut out: W) -> Result<()> {
    let mut buf = String::from("radius_or_n,value,method\n");
    for r in rows {
        writeln!(buf, "{},{},{}", r.radius_or_n, format_value(r.value), r.method.as_str()).unwrap();
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub(crate) fn format_value(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.17e}")
    }
}
