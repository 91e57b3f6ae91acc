//! The voltage `v(g)`: probability that a walk from `g` visits the root before
//! the absorbing boundary. It is harmonic away from the root and the boundary.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::graph::{reachable_region, LineSpec, MultiGraph};
use crate::solver::{SolveMethod, SystemBuilder};
use crate::walk::WalkTrace;

/// Default absolute bound on the harmonicity defect of solved fields.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageField {
    pub values: Vec<f64>,
    pub root: usize,
    pub boundary: Vec<usize>,
    /// Max harmonicity defect over interior vertices.
    pub residual: f64,
    /// No boundary vertex is reachable from the root; `v == 1` on the root's
    /// component.
    pub degenerate: bool,
}

impl VoltageField {
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }
}

/// `sum_{i >= n} 1/e_i` for `n = 0..=N`, accumulated from the small end.
fn line_tail_sums(spec: &LineSpec) -> Vec<f64> {
    let e = spec.multiplicities();
    let mut tails = vec![0.0; e.len() + 1];
    for i in (0..e.len()).rev() {
        tails[i] = tails[i + 1] + 1.0 / e[i] as f64;
    }
    tails
}

/// Closed form on a truncated line:
/// `v(n) = sum_{i=n}^{N-1} 1/e_i / sum_{i=0}^{N-1} 1/e_i`.
pub fn voltage_line_exact(spec: &LineSpec, n: usize) -> Result<f64> {
    if n > spec.levels() {
        return Err(LabError::invalid(format!(
            "level {n} outside 0..={}",
            spec.levels()
        )));
    }
    let tails = line_tail_sums(spec);
    Ok(tails[n] / tails[0])
}

/// Closed-form voltages for every level `0..=N`.
pub fn line_voltages(spec: &LineSpec) -> Vec<f64> {
    let tails = line_tail_sums(spec);
    tails.iter().map(|t| t / tails[0]).collect()
}

/// Solves the Dirichlet problem `v(root) = 1`, `v = 0` on the boundary,
/// harmonic elsewhere, to a harmonicity defect of at most `tol`.
pub fn solve_voltage(g: &MultiGraph, root: usize, tol: f64) -> Result<VoltageField> {
    solve_voltage_with(g, root, tol, SolveMethod::Auto)
}

pub fn solve_voltage_with(
    g: &MultiGraph,
    root: usize,
    tol: f64,
    method: SolveMethod,
) -> Result<VoltageField> {
    let n = g.vertex_count();
    if root >= n {
        return Err(LabError::invalid(format!("root {root} out of range")));
    }
    if g.is_boundary(root) {
        return Err(LabError::invalid("root lies on the absorbing boundary"));
    }
    let region = reachable_region(g, root);
    let reaches_boundary = (0..n).any(|v| region[v] && g.is_boundary(v));
    let boundary: Vec<usize> = g.boundary().collect();

    let mut values = vec![0.0; n];
    if !reaches_boundary {
        for v in 0..n {
            if region[v] {
                values[v] = 1.0;
            }
        }
        let mut field = VoltageField {
            values,
            root,
            boundary,
            residual: 0.0,
            degenerate: true,
        };
        field.residual = harmonic_residual(&field, g);
        return Ok(field);
    }

    let mut index = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for v in 0..n {
        if region[v] && v != root && !g.is_boundary(v) {
            index[v] = unknowns.len();
            unknowns.push(v);
        }
    }
    let mut builder = SystemBuilder::new(unknowns.len());
    let mut rhs = vec![0.0; unknowns.len()];
    for (i, &u) in unknowns.iter().enumerate() {
        for (w, m) in g.neighbors(u) {
            let c = m as f64;
            if w == root {
                builder.ground(i, c);
                rhs[i] += c;
            } else if g.is_boundary(w) {
                builder.ground(i, c);
            } else if index[w] > i {
                builder.couple(i, index[w], c);
            }
        }
    }
    let system = builder.build();
    let x = system.solve(&rhs, tol, method)?;
    values[root] = 1.0;
    for (i, &u) in unknowns.iter().enumerate() {
        values[u] = x[i].clamp(0.0, 1.0);
    }
    let mut field = VoltageField {
        values,
        root,
        boundary,
        residual: 0.0,
        degenerate: false,
    };
    field.residual = harmonic_residual(&field, g);
    Ok(field)
}

/// `max |v(g) - sum_h m(g,h)/d_g v(h)|` over vertices other than the root and
/// the boundary.
pub fn harmonic_residual(f: &VoltageField, g: &MultiGraph) -> f64 {
    (0..g.vertex_count())
        .filter(|&v| v != f.root && !g.is_boundary(v) && g.degree(v) > 0)
        .map(|v| {
            let d = g.degree(v) as f64;
            let avg: f64 = g
                .neighbors(v)
                .map(|(w, m)| m as f64 * f.values[w])
                .sum::<f64>()
                / d;
            (f.values[v] - avg).abs()
        })
        .fold(0.0, f64::max)
}

/// Edges `(g, h)` with `g` off the boundary where `v(h) > d * v(g)`. On an
/// infinite graph with degrees bounded by `d` there are none; boundary
/// vertices are excluded because the truncation pins them to 0.
pub fn lipschitz_violations(f: &VoltageField, g: &MultiGraph, d: u64) -> Vec<(usize, usize)> {
    let d = d as f64;
    let mut out = Vec::new();
    for u in 0..g.vertex_count() {
        if g.is_boundary(u) {
            continue;
        }
        for (w, _) in g.neighbors(u) {
            if f.values[w] > d * f.values[u] * (1.0 + 1e-12) + 1e-15 {
                out.push((u, w));
            }
        }
    }
    out
}

/// Max difference between two truncations of the same graph, matching vertices
/// by label. Used to decide whether a truncation radius is large enough.
pub fn truncation_gap(
    small: &MultiGraph,
    small_field: &VoltageField,
    large: &MultiGraph,
    large_field: &VoltageField,
) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for v in 0..small.vertex_count() {
        let label = small.label(v);
        let w = large
            .find_label(&label)
            .ok_or_else(|| LabError::invalid(format!("vertex {label:?} missing from larger truncation")))?;
        gap = gap.max((small_field.values[v] - large_field.values[w]).abs());
    }
    Ok(gap)
}

/// Per-vertex one-step increment statistics of `v(w_t)`.
#[derive(Debug, Clone, Serialize)]
pub struct VertexIncrement {
    pub vertex: usize,
    pub count: usize,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleStats {
    pub per_vertex: Vec<VertexIncrement>,
    pub max_abs_mean: f64,
    /// Largest `|mean| / std_err` among vertices with at least `min_count`
    /// samples and nonzero spread.
    pub max_z: f64,
}

/// Empirical conditional mean of `v(w_{t+1}) - v(w_t)` given `w_t = g`. Steps
/// leaving the root are skipped (the field is not harmonic there); by the
/// Markov property every other step contributes a mean-zero increment.
pub fn check_martingale(
    f: &VoltageField,
    traces: &[WalkTrace],
    min_count: usize,
) -> MartingaleStats {
    let n = f.values.len();
    let mut count = vec![0usize; n];
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    for t in traces {
        for w in t.vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == f.root {
                continue;
            }
            let inc = f.values[b] - f.values[a];
            count[a] += 1;
            sum[a] += inc;
            sum_sq[a] += inc * inc;
        }
    }
    let mut per_vertex = Vec::new();
    let mut max_abs_mean: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    for v in 0..n {
        if count[v] == 0 {
            continue;
        }
        let k = count[v] as f64;
        let mean = sum[v] / k;
        let var = if count[v] > 1 {
            ((sum_sq[v] - k * mean * mean) / (k - 1.0)).max(0.0)
        } else {
            0.0
        };
        let std_err = (var / k).sqrt();
        max_abs_mean = max_abs_mean.max(mean.abs());
        if count[v] >= min_count && std_err > 0.0 {
            max_z = max_z.max(mean.abs() / std_err);
        }
        per_vertex.push(VertexIncrement {
            vertex: v,
            count: count[v],
            mean,
            std_err,
        });
    }
    MartingaleStats {
        per_vertex,
        max_abs_mean,
        max_z,
    }
}

/// Field export: `vertex value` per line, 17 significant digits.
pub fn write_field<W: Write>(f: &VoltageField, mut out: W) -> Result<()> {
    let mut buf = String::new();
    for (v, x) in f.values.iter().enumerate() {
        writeln!(buf, "{v} {x:.16e}").unwrap();
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
