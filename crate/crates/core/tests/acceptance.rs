//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Oracles here are computed independently of the library code paths
//! they check (closed forms, dense pseudo-inverses, direct sums over traces).

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use srwlab_core::electrical::{
    distance_cutsets, effective_resistance, nash_williams_bound, thomson_energy, Network, PairMode,
};
use srwlab_core::experiment::growth_experiment;
use srwlab_core::graph::{build_lattice, build_line_graph, build_regular_tree, LineSpec, VertexLabel};
use srwlab_core::harmonic::{solve_voltage, DEFAULT_TOL};
use srwlab_core::lab::{
    build_cutsets, cut_edge_frequency, general_tail_trial, hop_ball, run_energy_trials, summarize_trials,
    union_frequencies, EnergyTrial, Layering, TrialConfig,
};
use srwlab_core::path::crossing_stats_line;
use srwlab_core::rng::trial_rng;
use srwlab_core::stats::{LemmaStats, Verdict};
use srwlab_core::walk::{simulate_with, StopRule, WalkTrace};
use srwlab_core::MultiGraph;

const TRIALS: u64 = 10_000;
const SEED: u64 = 20_240_601;

type Criterion = (&'static str, Option<Duration>, Box<dyn Fn(&Fixtures) -> Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() -> ExitCode {
    let fixtures = Fixtures::new();
    let criteria: Vec<Criterion> = vec![
        ("exact voltage formula on lines", Some(Duration::from_secs(1)), Box::new(criterion_1)),
        ("resistance vs dense oracle", Some(Duration::from_secs(30)), Box::new(criterion_2)),
        ("per-trial bridge inequalities", Some(Duration::from_secs(120)), Box::new(criterion_3)),
        ("expectation bounds at two radii", None, Box::new(criterion_4)),
        ("probability bounds", None, Box::new(criterion_5)),
        ("single crossings at fast levels", None, Box::new(criterion_6)),
        ("tail window after leaving K", None, Box::new(criterion_7)),
        ("union of two walks", None, Box::new(criterion_8)),
        ("Rayleigh, Nash-Williams, Thomson", None, Box::new(criterion_9)),
        ("R(n) growth smoke test", Some(Duration::from_secs(300)), Box::new(criterion_10)),
    ];
    let mut failures = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = run(&fixtures);
        let took = start.elapsed();
        if let Some(limit) = limit {
            if took > *limit {
                o.pass = false;
                o.detail.push_str(&format!("; exceeded {limit:?}"));
            }
        }
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}; {:.2?})",
            k + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            took
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}

/// Campaign fixtures shared between criteria: the ratio-3 line at N = 20 and
/// the binary tree of depth 12, each with 10^4 trials.
struct Fixtures {
    line: MultiGraph,
    line_layers: Layering,
    line_trials: Vec<EnergyTrial>,
    tree: MultiGraph,
    tree_layers: Layering,
    tree_trials: Vec<EnergyTrial>,
}

impl Fixtures {
    fn new() -> Self {
        let line = build_line_graph(&LineSpec::geometric(3, 20).unwrap()).unwrap();
        let line_layers = Layering::line(&line).unwrap();
        let line_trials = run_energy_trials(&line, &line_layers, &TrialConfig::new(TRIALS, SEED)).unwrap();
        let tree = build_regular_tree(2, 12).unwrap();
        let f = solve_voltage(&tree, 0, DEFAULT_TOL).unwrap();
        let tree_layers = build_cutsets(&tree, &f, 3).unwrap();
        let tree_trials =
            run_energy_trials(&tree, &tree_layers, &TrialConfig::new(TRIALS, SEED + 1)).unwrap();
        Fixtures {
            line,
            line_layers,
            line_trials,
            tree,
            tree_layers,
            tree_trials,
        }
    }
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1(_: &Fixtures) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for base in [2u64, 3, 5] {
        let n_levels = 20;
        let spec = LineSpec::geometric(base, n_levels).unwrap();
        let g = build_line_graph(&spec).unwrap();
        let f = solve_voltage(&g, 0, DEFAULT_TOL).unwrap();
        let r = 1.0 / base as f64;
        // Infinite-line voltage r^n; the truncation moves it by at most the
        // resistance mass beyond level N relative to the total.
        let tail = r.powi(n_levels as i32);
        for n in 0..=n_levels {
            let truncated = (r.powi(n as i32) - tail) / (1.0 - tail);
            let exact_infinite = r.powi(n as i32);
            let d_trunc = (f.values[n] - truncated).abs();
            let d_inf = (f.values[n] - exact_infinite).abs();
            worst = worst.max(d_trunc);
            ok &= d_trunc <= 1e-9;
            ok &= d_inf <= 1e-9 + tail;
        }
    }
    outcome(ok, format!("max |solve - closed form| = {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 2

/// Random connected multigraph: a random spanning tree plus extra edges.
fn random_multigraph(rng: &mut ChaCha8Rng, max_n: usize) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.random_range(2..=max_n);
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push((u, v, rng.random_range(1..=4u32) as f64));
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.push((u, v, rng.random_range(1..=4u32) as f64));
        }
    }
    (n, edges)
}

/// Resistance between shorted sets from the Moore-Penrose inverse of the
/// merged Laplacian.
fn oracle_resistance(n: usize, edges: &[(usize, usize, f64)], a: &[usize], b: &[usize]) -> f64 {
    let mut node: Vec<usize> = (0..n).collect();
    for &x in a {
        node[x] = a[0];
    }
    for &x in b {
        node[x] = b[0];
    }
    let ids: BTreeSet<usize> = node.iter().copied().collect();
    let index: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let m = ids.len();
    let mut lap = DMatrix::<f64>::zeros(m, m);
    for &(u, v, c) in edges {
        let (x, y) = (index[&node[u]], index[&node[v]]);
        if x != y {
            lap[(x, x)] += c;
            lap[(y, y)] += c;
            lap[(x, y)] -= c;
            lap[(y, x)] -= c;
        }
    }
    let pinv = lap.pseudo_inverse(1e-12).unwrap();
    let (x, y) = (index[&a[0]], index[&b[0]]);
    pinv[(x, x)] + pinv[(y, y)] - 2.0 * pinv[(x, y)]
}

fn criterion_2(_: &Fixtures) -> Outcome {
    let mut rng = trial_rng(SEED, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (n, edges) = random_multigraph(&mut rng, 10);
        let net = Network::from_edges(n, edges.clone()).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let ka = rng.random_range(1..=((n - 1).min(2)));
        let kb = rng.random_range(1..=((n - ka).min(2)));
        let a = &order[..ka];
        let b = &order[ka..ka + kb];
        let r = effective_resistance(&net, a, b).unwrap().value;
        let oracle = oracle_resistance(n, &edges, a, b);
        worst = worst.max((r - oracle).abs() / oracle);
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e} over 1000 graphs"))
}

// ---------------------------------------------------------------- criterion 3

fn replay(g: &MultiGraph, root: usize, seed: u64, k: u64) -> WalkTrace {
    let mut rng = trial_rng(seed, k);
    simulate_with(g, root, StopRule::UntilBoundaryOr(TrialConfig::new(1, 0).max_steps), &mut rng).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
}

/// Line oracle: q_i and R_i from the trace, crossing counts and the closed
/// form `v(n) = (3^-n - 3^-N) / (1 - 3^-N)`.
fn line_oracle(fx: &Fixtures) -> (u64, u64, u64) {
    let n_levels = 20;
    let tail = 3f64.powi(-n_levels);
    let v: Vec<f64> = (0..=n_levels).map(|n| (3f64.powi(-n) - tail) / (1.0 - tail)).collect();
    let anchors = &fx.line_layers.schedule.anchors;
    let (mut checked, mut violations, mut mismatches) = (0, 0, 0);
    for trial in &fx.line_trials {
        let t = replay(&fx.line, 0, SEED, trial.stream);
        let s_prime = crossing_stats_line(&t, &fx.line).unwrap().s_prime;
        for rec in &trial.layers {
            let (a, b) = (anchors[rec.layer], anchors[rec.layer + 1]);
            let q: f64 = t
                .vertices
                .windows(2)
                .filter(|w| w[0].min(w[1]) >= a && w[0].max(w[1]) <= b)
                .map(|w| (v[w[1]] - v[w[0]]).powi(2))
                .sum();
            let r: f64 = (a..b).map(|j| 1.0 / s_prime[j] as f64).sum();
            let gap = v[a] - v[b];
            checked += 1;
            if r < gap * gap / q * (1.0 - 1e-9) {
                violations += 1;
            }
            if !close(q, rec.q) || !close(r, rec.resistance.unwrap()) {
                mismatches += 1;
            }
        }
    }
    (checked, violations, mismatches)
}

/// Tree oracle: bridge edges by direct classification of the closed-form
/// voltage, resistance from a dense pseudo-inverse.
fn tree_oracle(fx: &Fixtures) -> (u64, u64, u64) {
    let depth = 12;
    let d = 3f64;
    let tail = 0.5f64.powi(depth);
    let depth_of = |v: usize| (usize::BITS - (v + 1).leading_zeros() - 1) as i32;
    let volt = |v: usize| (0.5f64.powi(depth_of(v)) - tail) / (1.0 - tail);
    let top = |j: i32| d.powi(-j);
    // Even 2i: inside layer i; odd 2i+1: strictly between layers i and i+1.
    let half = |x: f64| -> i32 {
        if x <= 0.0 {
            return i32::MAX;
        }
        let mut k = 0;
        while x < top(k + 1) {
            k += 1;
        }
        if k % 2 == 1 && x == top(k + 1) {
            k + 1
        } else {
            k
        }
    };
    let (mut checked, mut violations, mut mismatches) = (0, 0, 0);
    for trial in &fx.tree_trials {
        let t = replay(&fx.tree, 0, SEED + 1, trial.stream);
        for rec in &trial.layers {
            let i = rec.layer as i32;
            let on_bridge = |a: usize, b: usize| {
                let (x, y) = (half(volt(a)), half(volt(b)));
                x == 2 * i + 1 || y == 2 * i + 1 || (x.min(y) == 2 * i && x.max(y) == 2 * i + 2)
            };
            let mut q = 0.0;
            let mut distinct = BTreeSet::new();
            for (s, e) in t.edges.iter().enumerate() {
                let (a, b) = (t.vertices[s], t.vertices[s + 1]);
                if on_bridge(a, b) {
                    q += (volt(b) - volt(a)).powi(2);
                    distinct.insert(*e);
                }
            }
            let verts: BTreeSet<usize> = distinct.iter().flat_map(|e| [e.lo, e.hi]).collect();
            let local: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
            let src: Vec<usize> = verts.iter().filter(|&&v| half(volt(v)) == 2 * i).map(|v| local[v]).collect();
            let snk: Vec<usize> = verts.iter().filter(|&&v| half(volt(v)) == 2 * i + 2).map(|v| local[v]).collect();
            if src.is_empty() || snk.is_empty() {
                if rec.resistance.is_some() {
                    mismatches += 1;
                }
                continue;
            }
            let edges: Vec<(usize, usize, f64)> =
                distinct.iter().map(|e| (local[&e.lo], local[&e.hi], 1.0)).collect();
            let r = oracle_resistance(verts.len(), &edges, &src, &snk);
            let gap = top(2 * i + 1) - top(2 * i + 2);
            checked += 1;
            if r < gap * gap / q * (1.0 - 1e-9) {
                violations += 1;
            }
            if !close(q, rec.q) || !rec.resistance.is_some_and(|x| close(r, x)) {
                mismatches += 1;
            }
        }
    }
    (checked, violations, mismatches)
}

fn criterion_3(fx: &Fixtures) -> Outcome {
    let anchors_ok = fx.line_layers.schedule.anchors.len() >= 7;
    let (lc, lv, lm) = line_oracle(fx);
    let (tc, tv, tm) = tree_oracle(fx);
    let lib_violations: u64 = [(&fx.line_trials, &fx.line_layers), (&fx.tree_trials, &fx.tree_layers)]
        .iter()
        .flat_map(|(trials, lay)| {
            lay.record_layers()
                .map(|i| srwlab_core::lab::bridge_resistance_check(trials, lay, i).violations)
        })
        .sum();
    outcome(
        anchors_ok && lv == 0 && tv == 0 && lm == 0 && tm == 0 && lib_violations == 0 && lc > 0 && tc > 0,
        format!(
            "line {lc} checks / {lv} violations, tree {tc} checks / {tv} violations, \
             oracle mismatches {}",
            lm + tm
        ),
    )
}

// ---------------------------------------------------------------- criterion 4

fn mean_q_prime_stats(g: &MultiGraph, lay: &Layering, seed: u64, trials: Option<&[EnergyTrial]>) -> Vec<LemmaStats> {
    let owned;
    let trials = match trials {
        Some(t) => t,
        None => {
            owned = run_energy_trials(g, lay, &TrialConfig::new(TRIALS, seed)).unwrap();
            &owned
        }
    };
    summarize_trials(trials, lay)
        .stats
        .into_iter()
        .filter(|s| s.lemma.ends_with("mean_q_prime") && (1..=4).contains(&s.layer.unwrap()))
        .collect()
}

fn criterion_4(fx: &Fixtures) -> Outcome {
    let line30 = build_line_graph(&LineSpec::geometric(3, 30).unwrap()).unwrap();
    let lay30 = Layering::line(&line30).unwrap();
    let tree_at = |depth: usize| {
        let g = build_regular_tree(2, depth).unwrap();
        let f = solve_voltage(&g, 0, DEFAULT_TOL).unwrap();
        let lay = build_cutsets(&g, &f, 3).unwrap();
        (g, lay)
    };
    let (t16, l16) = tree_at(16);
    let (t18, l18) = tree_at(18);
    let runs = [
        ("line N=20", mean_q_prime_stats(&fx.line, &fx.line_layers, SEED, Some(&fx.line_trials))),
        ("line N=30", mean_q_prime_stats(&line30, &lay30, SEED + 40, None)),
        ("tree depth 16", mean_q_prime_stats(&t16, &l16, SEED + 41, None)),
        ("tree depth 18", mean_q_prime_stats(&t18, &l18, SEED + 42, None)),
    ];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (_, stats) in &runs {
        ok &= stats.len() == 4 && stats.iter().all(|s| s.confirmed());
        for s in stats {
            worst = worst.max(s.hi99 / s.bound);
        }
    }
    for pair in [(0, 1), (2, 3)] {
        let (a, b) = (&runs[pair.0].1, &runs[pair.1].1);
        ok &= a.iter().zip(b).all(|(x, y)| x.layer == y.layer && x.verdict == y.verdict);
    }
    outcome(ok, format!("layers 1-4, max hi99/bound = {worst:.3}"))
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5(fx: &Fixtures) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut lowest: f64 = 1.0;
    for (trials, lay) in [(&fx.line_trials, &fx.line_layers), (&fx.tree_trials, &fx.tree_layers)] {
        for s in summarize_trials(trials, lay).stats {
            if s.lemma.ends_with("q_small") || s.lemma.ends_with("r_large") {
                checked += 1;
                lowest = lowest.min(s.lo99);
                if s.verdict != Verdict::Consistent {
                    bad.push(format!("{}[{}]", s.lemma, s.layer.unwrap()));
                }
            }
        }
    }
    outcome(
        bad.is_empty() && checked > 0,
        format!("{checked} frequencies vs 1/4, lowest lo99 {lowest:.3}, failing {bad:?}"),
    )
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6(_: &Fixtures) -> Outcome {
    let spec = LineSpec::geometric(5, 20).unwrap();
    let stats = cut_edge_frequency(&spec, &TrialConfig::new(TRIALS, SEED + 6)).unwrap();
    let mut ok = stats.len() == 20;
    let mut worst_gap: f64 = 0.0;
    let mut lowest: f64 = 1.0;
    for c in &stats {
        // Independent exact value from the infinite-line ratio, corrected for
        // the truncation: v(n) = (5^-n - 5^-N) / (1 - 5^-N).
        let v = |n: i32| 5f64.powi(-n) - 5f64.powi(-20);
        let exact = 1.0 - v(c.level as i32 + 1) / v(c.level as i32);
        ok &= (exact - c.exact).abs() < 1e-12;
        ok &= c.stats.lo99 >= 0.5;
        ok &= (c.stats.estimate - exact).abs() <= 0.02;
        // Against the infinite-line 4/5, the truncation shifts levels near N.
        ok &= (exact - 0.8).abs() <= 5f64.powi(c.level as i32 - 19);
        worst_gap = worst_gap.max((c.stats.estimate - exact).abs());
        lowest = lowest.min(c.stats.lo99);
    }
    outcome(ok, format!("20 levels, lowest lo99 {lowest:.3}, max |freq - exact| {worst_gap:.4}"))
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7(fx: &Fixtures) -> Outcome {
    let f = solve_voltage(&fx.tree, 0, DEFAULT_TOL).unwrap();
    let k = hop_ball(&fx.tree, 0, 8);
    let r = general_tail_trial(&fx.tree, &f, &k, &TrialConfig::new(TRIALS, SEED + 7)).unwrap();
    let by = |name: &str| r.stats.iter().find(|s| s.lemma == name).unwrap();
    let sigma = by("tail_sigma_infinite");
    let cond = by("tail_conditional_q");
    let joint = by("tail_joint_event");
    let ok = sigma.lo99 >= 0.5 && cond.hi99 <= 6.0 && joint.verdict == Verdict::Consistent && r.check.passed();

    // Informational: with K = {root} the truncation pins P(sigma = inf) to
    // about 1/2, so the bound cannot be certified there.
    let root_only = general_tail_trial(&fx.tree, &f, &[0], &TrialConfig::new(TRIALS, SEED + 8)).unwrap();
    let root_sigma = root_only.stats.iter().find(|s| s.lemma == "tail_sigma_infinite").unwrap();
    outcome(
        ok,
        format!(
            "K = depth-8 ball: P(sigma=inf) in [{:.3}, {:.3}], E[q/v0^2 | sigma=inf] <= {:.3}, \
             joint {:.3} [{:.3}, {:.3}], R-vs-q checks {} ok; K = root: P(sigma=inf) {:.4}",
            sigma.lo99, sigma.hi99, cond.hi99, joint.estimate, joint.lo99, joint.hi99, r.check.checked,
            root_sigma.estimate
        ),
    )
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8(fx: &Fixtures) -> Outcome {
    let stats = union_frequencies(&fx.tree, &fx.tree_layers, 2, &TrialConfig::new(TRIALS, SEED + 9)).unwrap();
    let ok = !stats.is_empty() && stats.iter().all(|s| s.verdict == Verdict::Consistent && s.bound == 1.0 / 16.0);
    let lows: Vec<String> = stats.iter().map(|s| format!("{:.3}", s.lo99)).collect();
    outcome(ok, format!("layers {:?}, lo99 {lows:?} vs 1/16", stats.iter().map(|s| s.layer.unwrap()).collect::<Vec<_>>()))
}

// ---------------------------------------------------------------- criterion 9

fn random_network(rng: &mut ChaCha8Rng) -> (Network, Vec<usize>, Vec<usize>) {
    let (n, edges) = random_multigraph(rng, 10);
    let edges = edges.into_iter().map(|(u, v, _)| (u, v, rng.random_range(0.1..10.0))).collect();
    let net = Network::from_edges(n, edges).unwrap();
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (net, vec![a], vec![b])
}

fn criterion_9(_: &Fixtures) -> Outcome {
    let mut rng = trial_rng(SEED, 9);
    let (mut rayleigh, mut nash, mut thomson, mut equality) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let (net, a, b) = random_network(&mut rng);
        let report = effective_resistance(&net, &a, &b).unwrap();
        let r = report.value;

        let k = rng.random_range(0..net.edges().len());
        let r_del = effective_resistance(&net.without_edge(k), &a, &b).unwrap().value;
        if r_del < r * (1.0 - 1e-9) {
            rayleigh += 1;
        }

        let cuts = distance_cutsets(&net, &a, &b);
        if nash_williams_bound(&net, &a, &b, &cuts).unwrap() > r * (1.0 + 1e-9) {
            nash += 1;
        }

        let gap: f64 = rng.random_range(0.1..5.0);
        let mut phi: Vec<f64> = (0..net.vertex_count()).map(|_| rng.random_range(-1.0..2.0) * gap).collect();
        phi[a[0]] = gap;
        phi[b[0]] = 0.0;
        if thomson_energy(&net, &phi, &a, &b).unwrap() < gap * gap / r * (1.0 - 1e-9) {
            thomson += 1;
        }
        let harmonic = thomson_energy(&net, &report.potential, &a, &b).unwrap();
        if (harmonic - 1.0 / r).abs() > 1e-9 / r {
            equality += 1;
        }
    }
    outcome(
        rayleigh + nash + thomson + equality == 0,
        format!(
            "1000 instances each: Rayleigh {rayleigh}, Nash-Williams {nash}, Thomson {thomson}, \
             harmonic equality {equality} violations"
        ),
    )
}

// ---------------------------------------------------------------- criterion 10

fn criterion_10(_: &Fixtures) -> Outcome {
    let g = build_lattice(2, 700).unwrap();
    let origin = g.find_label(&VertexLabel::Point(vec![0, 0])).unwrap();
    let checkpoints = [1_000, 3_000, 10_000, 30_000, 100_000];
    let s = growth_experiment(&g, origin, &checkpoints, PairMode::Sampled { pairs: 64, seed: SEED }, SEED).unwrap();
    if s.rows.len() < 3 {
        return outcome(false, format!("series truncated: {:?}", s.truncated));
    }
    let last3: Vec<f64> = s.rows[s.rows.len() - 3..].iter().map(|r| r.ratio).collect();
    let hi = last3.iter().copied().fold(f64::MIN, f64::max);
    let lo = last3.iter().copied().fold(f64::MAX, f64::min);
    let ok = s.rows.len() == checkpoints.len() && lo > 0.0 && hi / lo <= 10.0;
    let cells: Vec<String> = s.rows.iter().map(|r| format!("n={} R={:.2} ratio={:.3}", r.n, r.r_n, r.ratio)).collect();
    outcome(ok, format!("{}; band {:.2}", cells.join(", "), hi / lo))
}
