//! Monte Carlo campaigns turning per-trial records into verdicts.

use std::collections::{BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use super::energy::{
    bridge_energy_check, bridge_resistance_check, layer_resistance, orthogonal_increment_check,
    run_energy_trials, usable, DeterministicCheck, EnergyTrial, TrialConfig,
};
use super::schedule::{LayerSchedule, Layering, ScheduleKind};
use crate::electrical::{effective_resistance_global, Network};
use crate::error::{LabError, Result};
use crate::graph::{build_line_graph, LineSpec, MultiGraph};
use crate::harmonic::{line_voltages, VoltageField};
use crate::path::{crossing_stats_line, extract_path, union_paths};
use crate::rng::trial_rng;
use crate::stats::{LemmaStats, MeanEstimate};
use crate::walk::{simulate_with, StopRule, Termination};

/// Paper-side constants of the per-layer bounds for one schedule kind.
#[derive(Debug, Clone, Copy)]
struct LayerBounds {
    prefix: &'static str,
    mean_q_prime: f64,
    q_small: f64,
    r_large: f64,
}

fn layer_bounds(lay: &Layering, i: usize) -> LayerBounds {
    let s2 = lay.scale(i).powi(2);
    match lay.schedule.kind {
        ScheduleKind::LineLevels => LayerBounds {
            prefix: "line",
            mean_q_prime: 16.0 * s2,
            q_small: 64.0 * s2,
            r_large: 1.0 / 256.0,
        },
        ScheduleKind::VoltageLayers => {
            let d = lay.schedule.d as f64;
            LayerBounds {
                prefix: "layer",
                mean_q_prime: d.powi(4) * s2,
                q_small: 4.0 * d.powi(4) * s2,
                r_large: 1.0 / (16.0 * d.powi(6)),
            }
        }
    }
}

/// Lower bound on the union-bridge resistance with `k` walks.
pub fn union_resistance_bound(lay: &Layering, k: usize) -> f64 {
    let k = k as f64;
    match lay.schedule.kind {
        ScheduleKind::LineLevels => 1.0 / (256.0 * k),
        ScheduleKind::VoltageLayers => 1.0 / (16.0 * k * (lay.schedule.d as f64).powi(6)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalCheck {
    pub layer: usize,
    pub estimate: MeanEstimate,
    /// `|mean| / std_err`.
    #[serde(serialize_with = "crate::stats::flagged_f64::serialize")]
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub schedule: LayerSchedule,
    pub stats: Vec<LemmaStats>,
    pub checks: Vec<DeterministicCheck>,
    pub orthogonal: Vec<OrthogonalCheck>,
    pub trials: u64,
    pub censored: u64,
    /// Trials where some step jumped over a nonempty layer.
    pub separation_failures: u64,
}

/// Runs `cfg.trials` walks and checks, per layer, the mean of `q'_i`, the
/// frequency of a small `q_i`, and the frequency of a large bridge resistance.
pub fn lemma_frequencies(g: &MultiGraph, lay: &Layering, cfg: &TrialConfig) -> Result<CampaignReport> {
    let trials = run_energy_trials(g, lay, cfg)?;
    Ok(summarize_trials(&trials, lay))
}

pub fn summarize_trials(trials: &[EnergyTrial], lay: &Layering) -> CampaignReport {
    let mut stats = Vec::new();
    let mut checks = Vec::new();
    let mut orthogonal = Vec::new();
    for i in lay.record_layers() {
        let b = layer_bounds(lay, i);
        let recs: Vec<_> = usable(trials, i).collect();
        let q_prime: Vec<f64> = recs.iter().map(|r| r.q_prime).collect();
        stats.push(LemmaStats::mean(
            &format!("{}_mean_q_prime", b.prefix),
            Some(i),
            &q_prime,
            b.mean_q_prime,
        ));
        let small = recs.iter().filter(|r| r.q < b.q_small).count() as u64;
        stats.push(LemmaStats::frequency(
            &format!("{}_q_small", b.prefix),
            Some(i),
            small,
            recs.len() as u64,
            0.25,
        ));
        let with_r: Vec<f64> = recs.iter().filter_map(|r| r.resistance).collect();
        let large = with_r.iter().filter(|&&r| r > b.r_large).count() as u64;
        stats.push(LemmaStats::frequency(
            &format!("{}_r_large", b.prefix),
            Some(i),
            large,
            with_r.len() as u64,
            0.25,
        ));
        checks.push(bridge_resistance_check(trials, lay, i));
        checks.push(bridge_energy_check(trials, i));
        let estimate = orthogonal_increment_check(trials, i);
        let z = if estimate.std_err > 0.0 {
            estimate.mean.abs() / estimate.std_err
        } else if estimate.mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        orthogonal.push(OrthogonalCheck { layer: i, estimate, z });
    }
    CampaignReport {
        schedule: lay.schedule.clone(),
        stats,
        checks,
        orthogonal,
        trials: trials.len() as u64,
        censored: trials.iter().filter(|t| t.censored).count() as u64,
        separation_failures: trials
            .iter()
            .filter(|t| !t.separation_failures.is_empty())
            .count() as u64,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CutEdgeStat {
    pub level: usize,
    /// `1 - v(n+1)/v(n)`: probability of never recrossing level `n`.
    pub exact: f64,
    pub stats: LemmaStats,
}

/// Frequency of a single crossing `s_n = 1` at every level where the voltage
/// more than halves (`v(n+1) < v(n)/2`), judged against 1/2.
pub fn cut_edge_frequency(spec: &LineSpec, cfg: &TrialConfig) -> Result<Vec<CutEdgeStat>> {
    let v = line_voltages(spec);
    let flagged: Vec<usize> = (0..spec.levels()).filter(|&n| v[n + 1] < v[n] / 2.0).collect();
    if flagged.is_empty() {
        return Ok(Vec::new());
    }
    let g = build_line_graph(spec)?;
    let singles: Vec<Option<Vec<bool>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(cfg.seed, k);
            let t = simulate_with(&g, 0, StopRule::UntilBoundaryOr(cfg.max_steps), &mut rng)?;
            if t.termination != Termination::HitBoundary {
                return Ok(None);
            }
            let c = crossing_stats_line(&t, &g)?;
            Ok(Some(flagged.iter().map(|&n| c.s[n] == 1).collect()))
        })
        .collect::<Result<_>>()?;
    let done: Vec<&Vec<bool>> = singles.iter().flatten().collect();
    Ok(flagged
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let hits = done.iter().filter(|s| s[j]).count() as u64;
            CutEdgeStat {
                level: n,
                exact: 1.0 - v[n + 1] / v[n],
                stats: LemmaStats::frequency(
                    "cut_edge_single_crossing",
                    Some(n),
                    hits,
                    done.len() as u64,
                    0.5,
                ),
            }
        })
        .collect())
}

/// Bridge resistances of the union of `k` independent walks' PATHs, judged
/// against probability `4^-k`.
pub fn union_frequencies(
    g: &MultiGraph,
    lay: &Layering,
    k: usize,
    cfg: &TrialConfig,
) -> Result<Vec<LemmaStats>> {
    if k == 0 {
        return Err(LabError::invalid("union of zero walks"));
    }
    let layers: Vec<usize> = lay.record_layers().collect();
    let per_trial: Vec<Option<Vec<Option<f64>>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut paths = Vec::with_capacity(k);
            for j in 0..k as u64 {
                let mut rng = trial_rng(cfg.seed, trial * k as u64 + j);
                let t = simulate_with(g, lay.root, StopRule::UntilBoundaryOr(cfg.max_steps), &mut rng)?;
                if t.termination != Termination::HitBoundary {
                    return Ok(None);
                }
                paths.push(extract_path(&t, g)?);
            }
            let union = union_paths(&paths)?;
            let mut out = Vec::with_capacity(layers.len());
            for &i in &layers {
                let bridge = union
                    .crossed
                    .keys()
                    .filter(|e| lay.bridge_layers(e.lo, e.hi).contains(&Some(i)));
                out.push(layer_resistance(bridge, lay, i)?);
            }
            Ok(Some(out))
        })
        .collect::<Result<_>>()?;
    let bound = union_resistance_bound(lay, k);
    let threshold = 0.25f64.powi(k as i32);
    Ok(layers
        .iter()
        .enumerate()
        .map(|(j, &i)| {
            let rs: Vec<f64> = per_trial.iter().flatten().filter_map(|r| r[j]).collect();
            let hits = rs.iter().filter(|&&r| r >= bound).count() as u64;
            LemmaStats::frequency("union_r_large", Some(i), hits, rs.len() as u64, threshold)
        })
        .collect())
}

/// Vertices within `radius` hops of `center`.
pub fn hop_ball(g: &MultiGraph, center: usize, radius: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.vertex_count()];
    dist[center] = 0;
    let mut queue = VecDeque::from([center]);
    let mut out = vec![center];
    while let Some(u) = queue.pop_front() {
        if dist[u] == radius {
            continue;
        }
        for (w, _) in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailTrial {
    pub stream: u64,
    /// First time the voltage drops below `min_K v`.
    pub tau: Option<usize>,
    pub v0: f64,
    /// First time after `tau` the voltage exceeds `2 v0`; `None` if absorbed
    /// first.
    pub sigma: Option<usize>,
    /// Squared voltage increments over `[tau, sigma)`.
    pub q: f64,
    /// Resistance from the visited part of the super-level set to the last
    /// vertex, over the PATH.
    pub resistance: Option<f64>,
    pub censored: bool,
}

impl TailTrial {
    pub fn sigma_infinite(&self) -> bool {
        !self.censored && self.sigma.is_none()
    }

    /// `q / v0^2`, zero when the exit lands on the boundary.
    pub fn normalized_q(&self) -> f64 {
        if self.v0 > 0.0 {
            self.q / (self.v0 * self.v0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    /// `min_{g in K} v(g)`.
    pub k_voltage: f64,
    pub trials: Vec<TailTrial>,
    pub stats: Vec<LemmaStats>,
    /// `R >= v0^2 / q` on trials that never climbed back above `2 v0`.
    pub check: DeterministicCheck,
}

/// Exit from the super-level set of a finite set `K`, then the window until
/// the voltage doubles: checks `P(sigma = inf) >= 1/2`, the conditional mean
/// of `q / v0^2` against 6, the joint event `q <= 12 v0^2, sigma = inf`
/// against 1/4, and `R >= 1/12` against 1/4.
pub fn general_tail_trial(
    g: &MultiGraph,
    f: &VoltageField,
    k_set: &[usize],
    cfg: &TrialConfig,
) -> Result<TailReport> {
    if k_set.is_empty() {
        return Err(LabError::invalid("K must be nonempty"));
    }
    for &k in k_set {
        if k >= g.vertex_count() {
            return Err(LabError::invalid(format!("K vertex {k} out of range")));
        }
        if g.is_boundary(k) || g.neighbors(k).any(|(w, _)| g.is_boundary(w)) {
            return Err(LabError::invalid(format!("K vertex {k} touches the boundary")));
        }
    }
    let v = &f.values;
    let k_voltage = k_set.iter().map(|&k| v[k]).fold(f64::INFINITY, f64::min);

    let trials: Vec<TailTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|stream| {
            let mut rng = trial_rng(cfg.seed, stream);
            let t = simulate_with(g, f.root, StopRule::UntilBoundaryOr(cfg.max_steps), &mut rng)?;
            let censored = t.termination != Termination::HitBoundary;
            let w = &t.vertices;
            let tau = w.iter().position(|&x| v[x] < k_voltage);
            let Some(tau) = tau.filter(|_| !censored) else {
                return Ok(TailTrial {
                    stream,
                    tau,
                    v0: 0.0,
                    sigma: None,
                    q: 0.0,
                    resistance: None,
                    censored: true,
                });
            };
            let v0 = v[w[tau]];
            let sigma = (tau + 1..w.len()).find(|&s| v[w[s]] > 2.0 * v0);
            let end = sigma.unwrap_or(w.len() - 1);
            let q: f64 = (tau..end).map(|s| (v[w[s + 1]] - v[w[s]]).powi(2)).sum();
            let path = extract_path(&t, g)?;
            let inside: Vec<usize> = path.visited.iter().copied().filter(|&x| v[x] >= k_voltage).collect();
            let net = Network::from_path(&path);
            let resistance = effective_resistance_global(&net, &inside, &[t.last()])?.value;
            Ok(TailTrial {
                stream,
                tau: Some(tau),
                v0,
                sigma,
                q,
                resistance: Some(resistance),
                censored: false,
            })
        })
        .collect::<Result<_>>()?;

    let done: Vec<&TailTrial> = trials.iter().filter(|t| !t.censored).collect();
    let n = done.len() as u64;
    let escaped: Vec<&TailTrial> = done.iter().copied().filter(|t| t.sigma_infinite()).collect();
    let joint = escaped.iter().filter(|t| t.q <= 12.0 * t.v0 * t.v0).count() as u64;
    let conditional: Vec<f64> = escaped.iter().map(|t| t.normalized_q()).collect();
    let big_r = done
        .iter()
        .filter(|t| t.resistance.is_some_and(|r| r >= 1.0 / 12.0))
        .count() as u64;
    let mut check = DeterministicCheck::new("tail_resistance_vs_energy", None);
    for t in &escaped {
        if let Some(r) = t.resistance {
            if t.q > 0.0 && r.is_finite() {
                check.record(r, t.v0 * t.v0 / t.q);
            }
        }
    }
    let stats = vec![
        LemmaStats::frequency("tail_sigma_infinite", None, escaped.len() as u64, n, 0.5),
        LemmaStats::mean("tail_conditional_q", None, &conditional, 6.0),
        LemmaStats::frequency("tail_joint_event", None, joint, n, 0.25),
        LemmaStats::frequency("tail_r_large", None, big_r, n, 0.25),
    ];
    Ok(TailReport {
        k_voltage,
        trials,
        stats,
        check,
    })
}

/// Distinct layers touched by any separation failure, for reporting.
pub fn failed_layers(trials: &[EnergyTrial]) -> BTreeSet<usize> {
    trials
        .iter()
        .flat_map(|t| t.separation_failures.iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_regular_tree;
    use crate::harmonic::{solve_voltage, DEFAULT_TOL};
    use crate::lab::schedule::build_cutsets;
    use crate::stats::Verdict;

    #[test]
    fn line_campaign_shape() {
        let g = build_line_graph(&LineSpec::geometric(3, 20).unwrap()).unwrap();
        let lay = Layering::line(&g).unwrap();
        let r = lemma_frequencies(&g, &lay, &TrialConfig::new(400, 1)).unwrap();
        assert_eq!(r.stats.len(), 3 * lay.record_layers().len());
        assert_eq!(r.censored, 0);
        assert!(r.checks.iter().all(|c| c.passed()));
        assert!(r.stats.iter().all(|s| s.verdict != Verdict::Violation));
    }

    #[test]
    fn unreached_layer_is_insufficient() {
        let g = build_line_graph(&LineSpec::geometric(3, 20).unwrap()).unwrap();
        let lay = Layering::line(&g).unwrap();
        let cfg = TrialConfig {
            trials: 200,
            seed: 2,
            max_steps: 1,
        };
        let r = lemma_frequencies(&g, &lay, &cfg).unwrap();
        assert!(r.stats.iter().all(|s| s.verdict == Verdict::InsufficientData));
    }

    #[test]
    fn cut_edges_on_ratio_five() {
        let spec = LineSpec::geometric(5, 12).unwrap();
        let r = cut_edge_frequency(&spec, &TrialConfig::new(2000, 4)).unwrap();
        assert_eq!(r.len(), 12);
        for c in &r[..8] {
            assert!((c.exact - 0.8).abs() < 1e-3);
            assert!((c.stats.estimate - c.exact).abs() < 0.04);
        }
        assert!(cut_edge_frequency(&LineSpec::new(vec![1; 40]).unwrap(), &TrialConfig::new(10, 0))
            .unwrap()
            .iter()
            .all(|c| c.level > 20));
    }

    #[test]
    fn ball_sizes() {
        let g = build_regular_tree(2, 6).unwrap();
        assert_eq!(hop_ball(&g, 0, 0), vec![0]);
        assert_eq!(hop_ball(&g, 0, 2).len(), 7);
    }

    #[test]
    fn tail_rejects_boundary_contact() {
        let g = build_regular_tree(2, 6).unwrap();
        let f = solve_voltage(&g, 0, DEFAULT_TOL).unwrap();
        let k = hop_ball(&g, 0, 5);
        assert!(general_tail_trial(&g, &f, &k, &TrialConfig::new(10, 0)).is_err());
        assert!(general_tail_trial(&g, &f, &[], &TrialConfig::new(10, 0)).is_err());
    }

    #[test]
    fn tail_small_run() {
        let g = build_regular_tree(2, 10).unwrap();
        let f = solve_voltage(&g, 0, DEFAULT_TOL).unwrap();
        let r = general_tail_trial(&g, &f, &hop_ball(&g, 0, 6), &TrialConfig::new(500, 8)).unwrap();
        assert!(r.check.passed() && r.check.checked > 0);
        assert_eq!(r.stats.len(), 4);
        for t in &r.trials {
            if let (Some(tau), Some(sigma)) = (t.tau, t.sigma) {
                assert!(tau < sigma);
            }
        }
    }

    #[test]
    fn union_of_one_walk_matches_single_bridges() {
        let g = build_regular_tree(2, 10).unwrap();
        let f = solve_voltage(&g, 0, DEFAULT_TOL).unwrap();
        let lay = build_cutsets(&g, &f, 3).unwrap();
        let cfg = TrialConfig::new(300, 5);
        let u = union_frequencies(&g, &lay, 1, &cfg).unwrap();
        let trials = run_energy_trials(&g, &lay, &cfg).unwrap();
        for s in &u {
            let i = s.layer.unwrap();
            let bound = union_resistance_bound(&lay, 1);
            let hits = usable(&trials, i)
                .filter_map(|r| r.resistance)
                .filter(|&r| r >= bound)
                .count() as u64;
            assert_eq!(s.successes, Some(hits));
        }
    }
}
