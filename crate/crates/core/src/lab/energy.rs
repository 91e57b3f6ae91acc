//! Per-trial energy sums along a walk, stopping times between layers, and
//! bridge resistances.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::schedule::{Layering, ScheduleKind};
use crate::electrical::{effective_resistance_global, Network};
use crate::error::{LabError, Result};
use crate::graph::MultiGraph;
use crate::rng::trial_rng;
use crate::stats::MeanEstimate;
use crate::walk::{simulate_with, EdgeId, StopRule, Termination, WalkTrace};

/// Relative slack for the per-trial inequalities (float round-off and solver
/// tolerance only).
pub const DETERMINISTIC_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    /// Step budget per walk; walks that exhaust it are censored.
    pub max_steps: usize,
}

impl TrialConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        TrialConfig {
            trials,
            seed,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRecord {
    pub layer: usize,
    /// First time the walk is in layer `i`.
    pub tau: Option<usize>,
    /// First time after `tau` the walk is back in layer `i - 1`; `None` when
    /// the walk was absorbed first (or, on censored trials, never observed).
    pub sigma: Option<usize>,
    /// Squared voltage increments over the steps crossing this layer's bridge.
    pub q: f64,
    /// Squared voltage increments over `[tau, sigma)`.
    pub q_prime: f64,
    pub v_tau: f64,
    /// Voltage at `sigma`, or at the absorbing vertex.
    pub v_sigma: f64,
    /// Resistance of the bridge network between layers `i` and `i + 1`;
    /// infinite when the walk never connected them, `None` when it never
    /// touched one of them.
    pub resistance: Option<f64>,
}

impl LayerRecord {
    pub fn entered(&self) -> bool {
        self.tau.is_some()
    }

    pub fn sigma_infinite(&self) -> bool {
        self.tau.is_some() && self.sigma.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrial {
    pub stream: u64,
    pub layers: Vec<LayerRecord>,
    /// The walk reached the absorbing boundary.
    pub escaped: bool,
    /// The walk stopped for any other reason; its records are unusable.
    pub censored: bool,
    /// Layers some single step jumped over.
    pub separation_failures: Vec<usize>,
}

/// Distinct edge copies of the walk lying on bridge `i`.
fn bridge_edges(t: &WalkTrace, lay: &Layering, layers: usize) -> Vec<BTreeSet<EdgeId>> {
    let mut out = vec![BTreeSet::new(); layers];
    for (s, e) in t.edges.iter().enumerate() {
        for i in lay.bridge_layers(t.vertices[s], t.vertices[s + 1]).into_iter().flatten() {
            if i < layers {
                out[i].insert(*e);
            }
        }
    }
    out
}

/// Bridge resistance between layers `i` and `i + 1` of the subnetwork formed
/// by `edges` (unit resistor per distinct copy). Lines use the series formula
/// over levels; other graphs shorten each layer and solve.
pub fn layer_resistance<'a>(
    edges: impl IntoIterator<Item = &'a EdgeId>,
    lay: &Layering,
    i: usize,
) -> Result<Option<f64>> {
    if i + 1 >= lay.layer_count() {
        return Ok(None);
    }
    let edges: Vec<EdgeId> = edges.into_iter().copied().collect();
    match lay.schedule.kind {
        ScheduleKind::LineLevels => {
            let (a, b) = (lay.schedule.anchors[i], lay.schedule.anchors[i + 1]);
            let mut copies = vec![0u64; b - a];
            for e in &edges {
                if e.lo >= a && e.lo < b {
                    copies[e.lo - a] += 1;
                }
            }
            let touched = edges.iter().any(|e| e.lo == a || e.hi == a)
                && edges.iter().any(|e| e.lo == b || e.hi == b);
            if !touched {
                return Ok(None);
            }
            if copies.contains(&0) {
                return Ok(Some(f64::INFINITY));
            }
            Ok(Some(copies.iter().map(|&c| 1.0 / c as f64).sum()))
        }
        ScheduleKind::VoltageLayers => {
            let net = Network::from_edge_ids(
                std::iter::empty(),
                edges.iter().map(|e| (e.lo, e.hi)),
            );
            let (src_h, snk_h) = (2 * i as u32, 2 * i as u32 + 2);
            let mut src = Vec::new();
            let mut snk = Vec::new();
            for local in 0..net.vertex_count() {
                let v = net.global(local);
                let h = lay.half_level[v];
                if h == src_h {
                    src.push(v);
                } else if h == snk_h {
                    snk.push(v);
                }
            }
            if src.is_empty() || snk.is_empty() {
                return Ok(None);
            }
            Ok(Some(effective_resistance_global(&net, &src, &snk)?.value))
        }
    }
}

/// Stopping times, energy sums and bridge resistances of one walk.
pub fn energy_statistics(t: &WalkTrace, g: &MultiGraph, lay: &Layering) -> Result<EnergyTrial> {
    if t.graph_fingerprint != g.fingerprint() || lay.values.len() != g.vertex_count() {
        return Err(LabError::invalid("trace, graph and layering do not match"));
    }
    let v = &lay.values;
    let steps = t.steps();
    // prefix[s] = sum of squared increments over the first s steps.
    let mut prefix = vec![0.0; steps + 1];
    for s in 0..steps {
        let inc = v[t.vertices[s + 1]] - v[t.vertices[s]];
        prefix[s + 1] = prefix[s] + inc * inc;
    }

    let count = lay.layer_count();
    let mut first_hit = vec![None; count];
    for (s, &w) in t.vertices.iter().enumerate() {
        let h = lay.half_level[w];
        if h.is_multiple_of(2) && (h as usize) / 2 < count && first_hit[(h / 2) as usize].is_none() {
            first_hit[(h / 2) as usize] = Some(s);
        }
    }

    let mut q = vec![0.0; count];
    let mut failures = BTreeSet::new();
    for s in 0..steps {
        let (a, b) = (t.vertices[s], t.vertices[s + 1]);
        let inc = prefix[s + 1] - prefix[s];
        for i in lay.bridge_layers(a, b).into_iter().flatten() {
            if i < count {
                q[i] += inc;
            }
        }
        failures.extend(lay.skipped_layers(a, b));
    }
    let bridges = bridge_edges(t, lay, count);

    let mut layers = Vec::new();
    for i in lay.record_layers() {
        let tau = first_hit[i];
        let prev = 2 * (i as u32 - 1);
        let sigma = tau.and_then(|tau| {
            (tau + 1..=steps).find(|&s| lay.half_level[t.vertices[s]] == prev)
        });
        let (q_prime, v_tau, v_sigma) = match tau {
            Some(tau) => {
                let end = sigma.unwrap_or(steps);
                (prefix[end] - prefix[tau], v[t.vertices[tau]], v[t.vertices[end]])
            }
            None => (0.0, 0.0, 0.0),
        };
        layers.push(LayerRecord {
            layer: i,
            tau,
            sigma,
            q: q[i],
            q_prime,
            v_tau,
            v_sigma,
            resistance: layer_resistance(&bridges[i], lay, i)?,
        });
    }
    Ok(EnergyTrial {
        stream: 0,
        layers,
        escaped: t.termination == Termination::HitBoundary,
        censored: t.termination != Termination::HitBoundary,
        separation_failures: failures.into_iter().collect(),
    })
}

/// Independent walks from the layering's root, trial `k` on stream `k`.
pub fn run_energy_trials(g: &MultiGraph, lay: &Layering, cfg: &TrialConfig) -> Result<Vec<EnergyTrial>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(cfg.seed, k);
            let t = simulate_with(g, lay.root, StopRule::UntilBoundaryOr(cfg.max_steps), &mut rng)?;
            let mut trial = energy_statistics(&t, g, lay)?;
            trial.stream = k;
            Ok(trial)
        })
        .collect()
}

/// Count of trials on which a pointwise inequality was checked and failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterministicCheck {
    pub check: String,
    pub layer: Option<usize>,
    pub checked: u64,
    pub violations: u64,
    /// Smallest observed `lhs / rhs` (at least 1 when the inequality holds).
    #[serde(serialize_with = "crate::stats::flagged_f64::serialize")]
    pub min_ratio: f64,
}

impl DeterministicCheck {
    pub fn new(check: &str, layer: Option<usize>) -> Self {
        DeterministicCheck {
            check: check.to_string(),
            layer,
            checked: 0,
            violations: 0,
            min_ratio: f64::INFINITY,
        }
    }

    /// Records `lhs >= rhs` up to [`DETERMINISTIC_RTOL`].
    pub fn record(&mut self, lhs: f64, rhs: f64) {
        self.checked += 1;
        if rhs > 0.0 {
            self.min_ratio = self.min_ratio.min(lhs / rhs);
        }
        if lhs < rhs * (1.0 - DETERMINISTIC_RTOL) {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `R_i >= gap_i^2 / q_i` on every trial where the bridge was crossed.
pub fn bridge_resistance_check(trials: &[EnergyTrial], lay: &Layering, i: usize) -> DeterministicCheck {
    let name = match lay.schedule.kind {
        ScheduleKind::LineLevels => "line_bridge_resistance",
        ScheduleKind::VoltageLayers => "layer_bridge_resistance",
    };
    let gap = lay.bridge_gap(i);
    let mut check = DeterministicCheck::new(name, Some(i));
    for rec in usable(trials, i) {
        if let Some(r) = rec.resistance {
            if r.is_finite() && rec.q > 0.0 {
                check.record(r, gap * gap / rec.q);
            }
        }
    }
    check
}

/// `q_i <= q'_i` whenever the walk never came back (`sigma` infinite): all the
/// bridge steps happen after `tau`.
pub fn bridge_energy_check(trials: &[EnergyTrial], i: usize) -> DeterministicCheck {
    let mut check = DeterministicCheck::new("bridge_energy_within_window", Some(i));
    for rec in usable(trials, i) {
        if rec.sigma_infinite() {
            check.record(rec.q_prime, rec.q);
        }
    }
    check
}

/// Mean of `(v(w_sigma) - v(w_tau))^2 - q'_i`, zero for a martingale with
/// orthogonal increments.
pub fn orthogonal_increment_check(trials: &[EnergyTrial], i: usize) -> MeanEstimate {
    let samples: Vec<f64> = usable(trials, i)
        .map(|r| (r.v_sigma - r.v_tau).powi(2) - r.q_prime)
        .collect();
    MeanEstimate::from_samples(&samples)
}

/// Records of layer `i` from uncensored trials that entered it.
pub fn usable(trials: &[EnergyTrial], i: usize) -> impl Iterator<Item = &LayerRecord> {
    trials
        .iter()
        .filter(|t| !t.censored)
        .filter_map(move |t| t.layers.iter().find(|r| r.layer == i))
        .filter(|r| r.entered())
}
