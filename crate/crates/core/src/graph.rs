//! Finite weighted multigraphs standing in for truncations of infinite graphs.
//!
//! Every edge record `(u, v, m)` carries an integer multiplicity `m >= 1`; the
//! multiplicity is both the number of parallel edges and the conductance of the
//! bundle. Vertices marked as boundary are absorbing: a walk that reaches one
//! stops there, which is how the "walk escaped to infinity" event is realized
//! on a finite truncation.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Edge multiplicities `e_0, ..., e_{N-1}` of a truncated line graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpec {
    multiplicities: Vec<u64>,
}

impl LineSpec {
    pub fn new(multiplicities: Vec<u64>) -> Result<Self> {
        if multiplicities.is_empty() {
            return Err(LabError::invalid("line spec has no levels"));
        }
        if multiplicities.len() < 2 {
            return Err(LabError::invalid("line spec needs at least 2 levels"));
        }
        if let Some(i) = multiplicities.iter().position(|&m| m == 0) {
            return Err(LabError::invalid(format!("multiplicity e_{i} is zero")));
        }
        Ok(LineSpec { multiplicities })
    }

    /// `e_i = base^i` for `i < levels`.
    pub fn geometric(base: u64, levels: usize) -> Result<Self> {
        if base == 0 {
            return Err(LabError::invalid("geometric base must be positive"));
        }
        let mut out = Vec::with_capacity(levels);
        let mut e: u64 = 1;
        for i in 0..levels {
            out.push(e);
            if i + 1 < levels {
                e = e
                    .checked_mul(base)
                    .ok_or_else(|| LabError::invalid(format!("{base}^{} overflows u64", i + 1)))?;
            }
        }
        LineSpec::new(out)
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    /// Number of levels `N`; the truncated line has vertices `0..=N`.
    pub fn levels(&self) -> usize {
        self.multiplicities.len()
    }
}

/// Semantic coordinate of a vertex. Used to match vertices across truncations
/// of different radii.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexLabel {
    Plain(usize),
    Level(usize),
    Point(Vec<i64>),
    TreeNode { depth: usize, index: u64 },
    Merged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Labels {
    Plain,
    Line,
    Lattice { dim: usize, radius: usize },
    Tree { branching: usize },
    Explicit(Vec<VertexLabel>),
}

/// Which family a graph was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    Line(LineSpec),
    Lattice { dim: usize, radius: usize },
    Tree { branching: usize, depth: usize },
    Custom,
}

/// Immutable multigraph in compressed adjacency form.
#[derive(Debug, Clone)]
pub struct MultiGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    mult: Vec<u64>,
    degree: Vec<u64>,
    boundary: Vec<bool>,
    boundary_count: usize,
    labels: Labels,
    kind: GraphKind,
    fingerprint: u64,
}

impl MultiGraph {
    /// Builds a graph from undirected edge records. Repeated `(u, v)` pairs are
    /// merged by summing their multiplicities.
    pub fn from_edges(
        vertex_count: usize,
        edges: &[(usize, usize, u64)],
        boundary: &[usize],
    ) -> Result<Self> {
        Self::assemble(vertex_count, edges, boundary, Labels::Plain, GraphKind::Custom)
    }

    fn assemble(
        vertex_count: usize,
        edges: &[(usize, usize, u64)],
        boundary: &[usize],
        labels: Labels,
        kind: GraphKind,
    ) -> Result<Self> {
        if vertex_count == 0 {
            return Err(LabError::invalid("graph has no vertices"));
        }
        if vertex_count > u32::MAX as usize {
            return Err(LabError::invalid("vertex count exceeds u32 range"));
        }
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for &(u, v, m) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(LabError::invalid(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if u == v {
                return Err(LabError::invalid(format!("self-loop at vertex {u}")));
            }
            if m == 0 {
                return Err(LabError::invalid(format!("edge ({u}, {v}) has multiplicity 0")));
            }
            let key = (u.min(v), u.max(v));
            let slot = merged.entry(key).or_insert(0);
            *slot = slot
                .checked_add(m)
                .ok_or_else(|| LabError::invalid("multiplicity overflow"))?;
        }

        let mut counts = vec![0usize; vertex_count];
        for &(u, v) in merged.keys() {
            counts[u] += 1;
            counts[v] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let total = *offsets.last().unwrap();
        let mut neighbors = vec![0u32; total];
        let mut mult = vec![0u64; total];
        let mut cursor = offsets[..vertex_count].to_vec();
        // BTreeMap order keeps every adjacency list sorted by neighbor id.
        for (&(u, v), &m) in &merged {
            neighbors[cursor[u]] = v as u32;
            mult[cursor[u]] = m;
            cursor[u] += 1;
        }
        for (&(u, v), &m) in &merged {
            neighbors[cursor[v]] = u as u32;
            mult[cursor[v]] = m;
            cursor[v] += 1;
        }
        for v in 0..vertex_count {
            let (lo, hi) = (offsets[v], offsets[v + 1]);
            let mut pairs: Vec<(u32, u64)> =
                neighbors[lo..hi].iter().copied().zip(mult[lo..hi].iter().copied()).collect();
            pairs.sort_unstable();
            for (k, (nb, m)) in pairs.into_iter().enumerate() {
                neighbors[lo + k] = nb;
                mult[lo + k] = m;
            }
        }

        let mut degree = vec![0u64; vertex_count];
        for v in 0..vertex_count {
            degree[v] = mult[offsets[v]..offsets[v + 1]]
                .iter()
                .try_fold(0u64, |acc, &m| acc.checked_add(m))
                .ok_or_else(|| LabError::invalid(format!("degree of vertex {v} overflows")))?;
        }

        let mut flags = vec![false; vertex_count];
        for &b in boundary {
            if b >= vertex_count {
                return Err(LabError::invalid(format!("boundary vertex {b} out of range")));
            }
            flags[b] = true;
        }
        let boundary_count = flags.iter().filter(|&&b| b).count();

        let mut hasher = DefaultHasher::new();
        vertex_count.hash(&mut hasher);
        offsets.hash(&mut hasher);
        neighbors.hash(&mut hasher);
        mult.hash(&mut hasher);
        flags.hash(&mut hasher);
        let fingerprint = hasher.finish();

        Ok(MultiGraph {
            offsets,
            neighbors,
            mult,
            degree,
            boundary: flags,
            boundary_count,
            labels,
            kind,
            fingerprint,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.degree.len()
    }

    /// `d_v`: sum of the multiplicities of the edges at `v`.
    pub fn degree(&self, v: usize) -> u64 {
        self.degree[v]
    }

    /// Neighbors of `v` with the multiplicity of the connecting bundle, sorted
    /// by neighbor id.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
        self.neighbors[lo..hi]
            .iter()
            .zip(&self.mult[lo..hi])
            .map(|(&u, &m)| (u as usize, m))
    }

    pub fn neighbor_count(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Multiplicity of the bundle joining `u` and `v` (0 when not adjacent).
    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        let (lo, hi) = (self.offsets[u], self.offsets[u + 1]);
        match self.neighbors[lo..hi].binary_search(&(v as u32)) {
            Ok(k) => self.mult[lo + k],
            Err(_) => 0,
        }
    }

    /// Undirected edge records `(u, v, m)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| v > u)
                .map(move |(v, m)| (u, v, m))
        })
    }

    pub fn edge_record_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Total number of parallel edges.
    pub fn total_multiplicity(&self) -> u64 {
        self.edges().map(|(_, _, m)| m).sum()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .enumerate()
            .filter_map(|(v, &b)| b.then_some(v))
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_count
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    pub fn line_spec(&self) -> Option<&LineSpec> {
        match &self.kind {
            GraphKind::Line(spec) => Some(spec),
            _ => None,
        }
    }

    /// Structural hash used to reject mixing paths from different graphs.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn label(&self, v: usize) -> VertexLabel {
        match &self.labels {
            Labels::Plain => VertexLabel::Plain(v),
            Labels::Line => VertexLabel::Level(v),
            Labels::Lattice { dim, radius } => {
                let side = 2 * radius + 1;
                let mut rest = v;
                let point = (0..*dim)
                    .map(|_| {
                        let c = rest % side;
                        rest /= side;
                        c as i64 - *radius as i64
                    })
                    .collect();
                VertexLabel::Point(point)
            }
            Labels::Tree { branching } => {
                let (depth, index) = tree_position(*branching, v);
                VertexLabel::TreeNode { depth, index }
            }
            Labels::Explicit(labels) => labels[v].clone(),
        }
    }

    /// Inverse of [`MultiGraph::label`].
    pub fn find_label(&self, label: &VertexLabel) -> Option<usize> {
        let n = self.vertex_count();
        let found = match (&self.labels, label) {
            (Labels::Plain, VertexLabel::Plain(v)) => Some(*v),
            (Labels::Line, VertexLabel::Level(v)) => Some(*v),
            (Labels::Lattice { dim, radius }, VertexLabel::Point(p)) if p.len() == *dim => {
                let side = (2 * radius + 1) as i64;
                let r = *radius as i64;
                let mut id: i64 = 0;
                let mut scale: i64 = 1;
                for &c in p {
                    if c.abs() > r {
                        return None;
                    }
                    id += (c + r) * scale;
                    scale *= side;
                }
                Some(id as usize)
            }
            (Labels::Tree { branching }, VertexLabel::TreeNode { depth, index }) => {
                let b = *branching as u64;
                let width = b.checked_pow(*depth as u32)?;
                if *index >= width {
                    return None;
                }
                let first = (width - 1) / (b - 1);
                Some((first + index) as usize)
            }
            (Labels::Explicit(labels), l) => labels.iter().position(|x| x == l),
            _ => None,
        };
        found.filter(|&v| v < n)
    }

    /// Labels for every vertex (materialized).
    fn all_labels(&self) -> Vec<VertexLabel> {
        (0..self.vertex_count()).map(|v| self.label(v)).collect()
    }
}

/// Depth and in-level index of vertex `v` in a breadth-first numbered tree.
fn tree_position(branching: usize, v: usize) -> (usize, u64) {
    let b = branching as u64;
    let v = v as u64;
    let mut depth = 0;
    let mut first = 0u64;
    let mut width = 1u64;
    while v >= first + width {
        first += width;
        width *= b;
        depth += 1;
    }
    (depth, v - first)
}

/// Line graph on `0..=N` with `e_i` parallel edges between `i` and `i + 1`.
/// Vertex `N` is absorbing.
pub fn build_line_graph(spec: &LineSpec) -> Result<MultiGraph> {
    let n = spec.levels();
    let edges: Vec<_> = spec
        .multiplicities()
        .iter()
        .enumerate()
        .map(|(i, &m)| (i, i + 1, m))
        .collect();
    MultiGraph::assemble(n + 1, &edges, &[n], Labels::Line, GraphKind::Line(spec.clone()))
}

/// Points of `Z^dim` with sup-norm at most `radius`, nearest-neighbor edges,
/// and the outer shell marked absorbing.
pub fn build_lattice(dim: usize, radius: usize) -> Result<MultiGraph> {
    if !(dim == 2 || dim == 3) {
        return Err(LabError::invalid(format!("lattice dimension {dim} not in {{2, 3}}")));
    }
    if radius == 0 {
        return Err(LabError::invalid("lattice radius must be at least 1"));
    }
    let side = 2 * radius + 1;
    let n = side.pow(dim as u32);
    let mut edges = Vec::with_capacity(n * dim);
    let mut boundary = Vec::new();
    let strides: Vec<usize> = (0..dim).map(|k| side.pow(k as u32)).collect();
    for v in 0..n {
        let mut rest = v;
        let mut on_shell = false;
        for &stride in &strides {
            let c = rest % side;
            rest /= side;
            if c == 0 || c == side - 1 {
                on_shell = true;
            }
            if c + 1 < side {
                edges.push((v, v + stride, 1));
            }
        }
        if on_shell {
            boundary.push(v);
        }
    }
    MultiGraph::assemble(
        n,
        &edges,
        &boundary,
        Labels::Lattice { dim, radius },
        GraphKind::Lattice { dim, radius },
    )
}

/// Rooted tree where the root has `branching` children and every internal
/// vertex has `branching` children plus its parent. Leaves at `depth` are
/// absorbing.
pub fn build_regular_tree(branching: usize, depth: usize) -> Result<MultiGraph> {
    if branching < 2 {
        return Err(LabError::invalid("tree branching must be at least 2"));
    }
    if depth == 0 {
        return Err(LabError::invalid("tree depth must be at least 1"));
    }
    let b = branching as u128;
    let count = (b.pow(depth as u32 + 1) - 1) / (b - 1);
    if count > u32::MAX as u128 {
        return Err(LabError::invalid("tree too large"));
    }
    let count = count as usize;
    let first_leaf = (b.pow(depth as u32) - 1) / (b - 1);
    let first_leaf = first_leaf as usize;
    let edges: Vec<_> = (1..count).map(|v| ((v - 1) / branching, v, 1)).collect();
    let boundary: Vec<_> = (first_leaf..count).collect();
    MultiGraph::assemble(
        count,
        &edges,
        &boundary,
        Labels::Tree { branching },
        GraphKind::Tree { branching, depth },
    )
}

/// Result of merging a vertex set into a single vertex.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub graph: MultiGraph,
    /// Old vertex id to new vertex id.
    pub map: Vec<usize>,
    /// Id of the merged vertex in the new graph.
    pub merged: usize,
}

/// Merges `set` into one vertex, summing parallel bundles and dropping edges
/// internal to `set`.
pub fn contract_vertex_set(g: &MultiGraph, set: &[usize]) -> Result<Contraction> {
    if set.is_empty() {
        return Err(LabError::invalid("cannot contract an empty vertex set"));
    }
    let n = g.vertex_count();
    let mut in_set = vec![false; n];
    for &v in set {
        if v >= n {
            return Err(LabError::invalid(format!("vertex {v} out of range")));
        }
        in_set[v] = true;
    }
    let kept = in_set.iter().filter(|&&s| !s).count();
    let merged = kept;
    let mut map = vec![merged; n];
    let mut next = 0;
    for v in 0..n {
        if !in_set[v] {
            map[v] = next;
            next += 1;
        }
    }
    let edges: Vec<_> = g
        .edges()
        .filter(|&(u, v, _)| !(in_set[u] && in_set[v]))
        .map(|(u, v, m)| (map[u], map[v], m))
        .collect();
    let boundary: Vec<_> = g.boundary().map(|b| map[b]).collect::<std::collections::BTreeSet<_>>().into_iter().collect();

    let old_labels = g.all_labels();
    let mut labels = vec![VertexLabel::Merged; kept + 1];
    for v in 0..n {
        if !in_set[v] {
            labels[map[v]] = old_labels[v].clone();
        }
    }
    let graph = MultiGraph::assemble(
        kept + 1,
        &edges,
        &boundary,
        Labels::Explicit(labels),
        GraphKind::Custom,
    )?;
    Ok(Contraction { graph, map, merged })
}

/// Maximum vertex degree `d = max_v d_v`.
pub fn degree_bound(g: &MultiGraph) -> u64 {
    g.degree.iter().copied().max().unwrap_or(0)
}

/// Vertices reachable from `start` without stepping onto a boundary vertex
/// (boundary vertices adjacent to the region are included).
pub(crate) fn reachable_region(g: &MultiGraph, start: usize) -> Vec<bool> {
    let mut seen = vec![false; g.vertex_count()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        if g.is_boundary(u) && u != start {
            continue;
        }
        for (w, _) in g.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Index of labels for repeated lookups on explicit-label graphs.
pub fn label_index(g: &MultiGraph) -> HashMap<VertexLabel, usize> {
    (0..g.vertex_count()).map(|v| (g.label(v), v)).collect()
}
