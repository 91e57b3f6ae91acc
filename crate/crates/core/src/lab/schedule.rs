//! Layer schedules: anchor levels on line graphs and voltage level-set layers
//! on general graphs.
//!
//! Both are encoded the same way once attached to a graph: every vertex gets a
//! *half-level* `h`. Even `h = 2i` means the vertex lies in layer `i`; odd
//! `h = 2i + 1` means it lies strictly between layers `i` and `i + 1`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::graph::{degree_bound, LineSpec, MultiGraph};
use crate::harmonic::{line_voltages, VoltageField};

/// Half-level of vertices with zero voltage (the absorbing boundary).
pub const ABSORBED: u32 = u32::MAX;

/// Relative agreement required between truncations at `N` and `N/2` before a
/// line anchor is trusted.
pub const STABILITY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    LineLevels,
    VoltageLayers,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSchedule {
    pub kind: ScheduleKind,
    /// Line: the anchor level `n_i`. Voltage layers: the layer index `i`.
    pub anchors: Vec<usize>,
    /// Line: `v(n_i)`. Voltage layers: the layer top `d^{-2i}`.
    pub tops: Vec<f64>,
    /// Per consecutive anchor pair: voltage fell by a factor 4 or more.
    pub quickly_transient: Vec<bool>,
    pub d: u64,
}

impl LayerSchedule {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// `d^{-k}` computed from the exact integer power.
pub(crate) fn inv_pow(d: u64, k: u32) -> f64 {
    1.0 / (d as f64).powi(k as i32)
}

fn line_degree_bound(e: &[u64]) -> u64 {
    let mut d = e[0];
    for w in e.windows(2) {
        d = d.max(w[0] + w[1]);
    }
    d
}

/// Greedy anchors `n_0 = 0`, `n_{i+1}` = least `n` with `v(n) < v(n_i)/2`,
/// keeping only anchors whose voltage barely moves when the truncation is
/// halved.
pub fn layer_schedule_line(spec: &LineSpec) -> Result<LayerSchedule> {
    let e = spec.multiplicities();
    let n_levels = spec.levels();
    let v = line_voltages(spec);
    let half = n_levels.div_ceil(2);
    let v_half = if half >= 1 {
        line_voltages(&LineSpec::new(e[..half].to_vec())?)
    } else {
        vec![1.0]
    };
    let stable = |n: usize| n < half && (v[n] - v_half[n]).abs() <= STABILITY_TOL * v[n];

    let mut anchors = vec![0usize];
    let mut n = 0;
    while let Some(next) = (n + 1..n_levels).find(|&m| v[m] < v[n] / 2.0) {
        if !stable(next) {
            break;
        }
        anchors.push(next);
        n = next;
    }
    if anchors.len() < 2 {
        return Err(LabError::InsufficientDepth(format!(
            "only {} stable anchor(s) within {n_levels} levels",
            anchors.len()
        )));
    }
    let tops: Vec<f64> = anchors.iter().map(|&a| v[a]).collect();
    let quickly_transient = tops.windows(2).map(|w| w[1] <= w[0] / 4.0).collect();
    Ok(LayerSchedule {
        kind: ScheduleKind::LineLevels,
        anchors,
        tops,
        quickly_transient,
        d: line_degree_bound(e),
    })
}

/// A schedule attached to a graph and its voltage.
#[derive(Debug, Clone)]
pub struct Layering {
    pub schedule: LayerSchedule,
    pub root: usize,
    /// Voltage used for the energy sums.
    pub values: Vec<f64>,
    pub half_level: Vec<u32>,
    /// Members of each layer `C_i`; some may be empty on truncations.
    pub layers: Vec<Vec<usize>>,
}

impl Layering {
    /// Anchors of `layer_schedule_line` on a line graph with the exact
    /// truncated voltages. Vertices past the last anchor share one open gap.
    pub fn line(g: &MultiGraph) -> Result<Layering> {
        let spec = g
            .line_spec()
            .ok_or_else(|| LabError::invalid("line schedule needs a line graph"))?;
        let schedule = layer_schedule_line(spec)?;
        let values = line_voltages(spec);
        let mut half_level = vec![0u32; values.len()];
        let mut layers = vec![Vec::new(); schedule.len()];
        let mut i = 0;
        for (n, h) in half_level.iter_mut().enumerate() {
            if g.is_boundary(n) {
                *h = ABSORBED;
                continue;
            }
            while i + 1 < schedule.len() && n >= schedule.anchors[i + 1] {
                i += 1;
            }
            if n == schedule.anchors[i] {
                *h = 2 * i as u32;
                layers[i].push(n);
            } else {
                *h = 2 * i as u32 + 1;
            }
        }
        Ok(Layering {
            schedule,
            root: 0,
            values,
            half_level,
            layers,
        })
    }

    /// Voltage layers `C_i = {d^{-2i-1} <= v <= d^{-2i}}` of a solved field.
    pub fn voltage(g: &MultiGraph, f: &VoltageField, d: u64) -> Result<Layering> {
        build_cutsets(g, f, d)
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Half-level used when comparing positions; absorbed vertices sit one
    /// past the last layer.
    pub(crate) fn rank(&self, v: usize) -> u32 {
        match self.half_level[v] {
            ABSORBED => 2 * self.layers.len() as u32,
            h => h,
        }
    }

    /// Layers with both a predecessor and a successor, the ones for which
    /// return times and bridge resistances are defined.
    pub fn record_layers(&self) -> std::ops::Range<usize> {
        1..self.layers.len().saturating_sub(1)
    }

    /// Voltage drop the walk must cover to bridge layer `i` to layer `i + 1`.
    pub fn bridge_gap(&self, i: usize) -> f64 {
        match self.schedule.kind {
            ScheduleKind::LineLevels => self.schedule.tops[i] - self.schedule.tops[i + 1],
            ScheduleKind::VoltageLayers => {
                let d = self.schedule.d;
                inv_pow(d, 2 * i as u32 + 1) - inv_pow(d, 2 * i as u32 + 2)
            }
        }
    }

    /// The scale `v(n_i)` (lines) or `d^{-2i}` (voltage layers).
    pub fn scale(&self, i: usize) -> f64 {
        self.schedule.tops[i]
    }

    /// Even half-levels strictly between two positions: layers a single step
    /// from `a` to `b` jumps over.
    pub fn skipped_layers(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = (self.rank(a), self.rank(b));
        let (lo, hi) = (x.min(y), x.max(y));
        (lo + 1..hi)
            .filter(|h| h % 2 == 0)
            .map(|h| (h / 2) as usize)
            .filter(|&i| !self.layers[i].is_empty())
    }

    /// Layers whose bridge (PATH_i) contains the edge `(a, b)`: an endpoint in
    /// the open gap after layer `i`, or endpoints in layers `i` and `i + 1`.
    pub fn bridge_layers(&self, a: usize, b: usize) -> [Option<usize>; 2] {
        let (x, y) = (self.rank(a), self.rank(b));
        let top = 2 * self.layers.len() as u32;
        let gap = |h: u32| (h % 2 == 1 && h < top).then_some((h / 2) as usize);
        let (ga, gb) = (gap(x), gap(y));
        match (ga, gb) {
            (Some(i), Some(j)) if i == j => [Some(i), None],
            (Some(i), Some(j)) => [Some(i), Some(j)],
            (Some(i), None) | (None, Some(i)) => [Some(i), None],
            (None, None) => {
                if x.abs_diff(y) == 2 && x.max(y) < top {
                    [Some((x.min(y) / 2) as usize), None]
                } else {
                    [None, None]
                }
            }
        }
    }
}

/// Half-level of a voltage value: the smallest `k` with `v >= d^{-k-1}`,
/// moved onto the layer when `v` sits exactly on a layer top.
fn classify(v: f64, d: u64) -> u32 {
    if v <= 0.0 {
        return ABSORBED;
    }
    let mut k = 0u32;
    while v < inv_pow(d, k + 1) {
        k += 1;
    }
    if k % 2 == 1 && v == inv_pow(d, k + 1) {
        k + 1
    } else {
        k
    }
}

/// Voltage layers of a solved field. `d` must dominate every degree.
pub fn build_cutsets(g: &MultiGraph, f: &VoltageField, d: u64) -> Result<Layering> {
    let max_degree = degree_bound(g);
    if d < 2 || d < max_degree {
        return Err(LabError::invalid(format!(
            "degree bound {d} below the maximum degree {max_degree} (or below 2)"
        )));
    }
    if f.values.len() != g.vertex_count() {
        return Err(LabError::invalid("field does not belong to this graph"));
    }
    let half_level: Vec<u32> = f.values.iter().map(|&v| classify(v, d)).collect();
    let deepest = half_level
        .iter()
        .filter(|&&h| h != ABSORBED)
        .map(|&h| (h / 2) as usize)
        .max()
        .unwrap_or(0);
    let mut layers = vec![Vec::new(); deepest + 1];
    for (v, &h) in half_level.iter().enumerate() {
        if h != ABSORBED && h % 2 == 0 {
            layers[(h / 2) as usize].push(v);
        }
    }
    // A trailing gap does not make a layer; drop empty tail layers.
    while layers.len() > 1 && layers.last().is_some_and(|l| l.is_empty()) {
        layers.pop();
    }
    let count = layers.len();
    let tops: Vec<f64> = (0..count).map(|i| inv_pow(d, 2 * i as u32)).collect();
    let schedule = LayerSchedule {
        kind: ScheduleKind::VoltageLayers,
        anchors: (0..count).collect(),
        tops,
        quickly_transient: vec![false; count.saturating_sub(1)],
        d,
    };
    // Gap vertices below the last layer keep their odd half-level; anything
    // classified deeper than that collapses onto the trailing gap.
    let cap = 2 * count as u32 - 1;
    let half_level = half_level
        .into_iter()
        .map(|h| if h != ABSORBED && h > cap { cap } else { h })
        .collect();
    Ok(Layering {
        schedule,
        root: f.root,
        values: f.values.clone(),
        half_level,
        layers,
    })
}
