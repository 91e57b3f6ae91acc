//! Experiment manifests, the lemma campaign pipeline, and the PATH resistance
//! growth study.
//!
//! A manifest is a TOML file:
//!
//! ```toml
//! seed = 7
//! trials = 10000
//! output_dir = "out/line3"
//! lemmas = ["energy", "cut_edge"]
//! check_radius_doubling = true
//!
//! [graph]
//! kind = "geometric_line"
//! base = 3
//! radius = 20
//! ```
//!
//! Graph kinds: `geometric_line {base, radius}`, `line {multiplicities}`,
//! `lattice {dim, radius}`, `tree {branching, radius}` and `file {path}`.
//! Optional fields: `max_steps`, `union_walks` (default 2), `tail_k_hops`
//! (default `radius - 4`), `root`.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::electrical::{
    effective_resistance, max_pair_resistance, write_resistance_series, Network, PairMode,
    ResistanceMethod, SeriesRow,
};
use crate::error::{LabError, Result};
use crate::graph::{
    build_lattice, build_line_graph, build_regular_tree, degree_bound, LineSpec, MultiGraph,
    VertexLabel,
};
use crate::graph_format::read_graph;
use crate::harmonic::{solve_voltage, VoltageField, DEFAULT_TOL};
use crate::lab::{
    build_cutsets, cut_edge_frequency, general_tail_trial, hop_ball, lemma_frequencies,
    union_frequencies, CampaignReport, DeterministicCheck, Layering, TrialConfig,
};
use crate::path::extract_path;
use crate::stats::{flagged_f64, write_lemma_report, LemmaStats, Verdict};
use crate::walk::{simulate, StopRule, Termination};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Line with `e_i = base^i`, `radius` levels.
    GeometricLine { base: u64, radius: usize },
    Line { multiplicities: Vec<u64> },
    /// Sup-norm ball in `Z^dim`.
    Lattice { dim: usize, radius: usize },
    /// Rooted tree, `radius` = depth.
    Tree { branching: usize, radius: usize },
    /// Graph file in the interchange format.
    File { path: PathBuf },
}

impl GraphSpec {
    /// Truncation radius, when the kind has one.
    pub fn radius(&self) -> Option<usize> {
        match self {
            GraphSpec::GeometricLine { radius, .. }
            | GraphSpec::Lattice { radius, .. }
            | GraphSpec::Tree { radius, .. } => Some(*radius),
            GraphSpec::Line { multiplicities } => Some(multiplicities.len()),
            GraphSpec::File { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Validation { field: "graph", msg });
        if let Some(r) = self.radius() {
            if r < 2 {
                return bad(format!("radius must be at least 2 (got {r})"));
            }
        }
        match self {
            GraphSpec::GeometricLine { base, .. } if *base == 0 => bad("base must be positive".into()),
            GraphSpec::Line { multiplicities } if multiplicities.contains(&0) => {
                bad("multiplicities must be positive".into())
            }
            GraphSpec::Lattice { dim, .. } if !(2..=3).contains(dim) => {
                bad(format!("lattice dimension must be 2 or 3 (got {dim})"))
            }
            GraphSpec::Tree { branching, .. } if *branching < 2 => {
                bad(format!("branching must be at least 2 (got {branching})"))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<MultiGraph> {
        match self {
            GraphSpec::GeometricLine { base, radius } => {
                build_line_graph(&LineSpec::geometric(*base, *radius)?)
            }
            GraphSpec::Line { multiplicities } => build_line_graph(&LineSpec::new(multiplicities.clone())?),
            GraphSpec::Lattice { dim, radius } => build_lattice(*dim, *radius),
            GraphSpec::Tree { branching, radius } => build_regular_tree(*branching, *radius),
            GraphSpec::File { path } => read_graph(BufReader::new(fs::File::open(path)?)),
        }
    }

    /// The same family at a larger truncation: twice the radius for lines and
    /// lattices, two more levels for trees (whose size grows exponentially).
    pub fn enlarged(&self) -> Option<GraphSpec> {
        match self {
            GraphSpec::GeometricLine { base, radius } => Some(GraphSpec::GeometricLine {
                base: *base,
                radius: 2 * radius,
            }),
            GraphSpec::Lattice { dim, radius } => Some(GraphSpec::Lattice {
                dim: *dim,
                radius: 2 * radius,
            }),
            GraphSpec::Tree { branching, radius } => Some(GraphSpec::Tree {
                branching: *branching,
                radius: radius + 2,
            }),
            GraphSpec::Line { .. } | GraphSpec::File { .. } => None,
        }
    }

    /// The natural root: level 0, the origin, or the tree root.
    pub fn default_root(&self, g: &MultiGraph) -> usize {
        match self {
            GraphSpec::Lattice { dim, .. } => g
                .find_label(&VertexLabel::Point(vec![0; *dim]))
                .expect("lattice contains the origin"),
            _ => 0,
        }
    }

    fn is_line(&self) -> bool {
        matches!(self, GraphSpec::GeometricLine { .. } | GraphSpec::Line { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaSelection {
    /// Per-layer energy and bridge resistance bounds.
    Energy,
    /// Single crossings at fast-decaying line levels.
    CutEdge,
    /// Bridge resistance of the union of several walks.
    Union,
    /// Exit-and-double window after leaving a ball around the root.
    Tail,
}

fn default_max_steps() -> usize {
    10_000_000
}

fn default_lemmas() -> Vec<LemmaSelection> {
    vec![LemmaSelection::Energy]
}

fn default_union_walks() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub graph: GraphSpec,
    pub seed: u64,
    pub trials: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_lemmas")]
    pub lemmas: Vec<LemmaSelection>,
    #[serde(default = "default_union_walks")]
    pub union_walks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_k_hops: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<usize>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub check_radius_doubling: bool,
}

impl ExperimentManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: ExperimentManifest = toml::from_str(text).map_err(|e| LabError::Validation {
            field: "manifest",
            msg: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifests are always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(LabError::Validation {
                field: "trials",
                msg: "at least one trial is required".into(),
            });
        }
        if self.max_steps < 1 {
            return Err(LabError::Validation {
                field: "max_steps",
                msg: "step budget must be positive".into(),
            });
        }
        if self.union_walks < 1 {
            return Err(LabError::Validation {
                field: "union_walks",
                msg: "at least one walk is required".into(),
            });
        }
        if self.lemmas.is_empty() {
            return Err(LabError::Validation {
                field: "lemmas",
                msg: "select at least one lemma family".into(),
            });
        }
        self.graph.validate()
    }

    fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            trials: self.trials,
            seed: self.seed,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphStats {
    pub vertices: usize,
    pub edge_records: usize,
    pub total_multiplicity: u64,
    pub boundary: usize,
    pub degree_bound: u64,
    pub root: usize,
}

impl GraphStats {
    fn of(g: &MultiGraph, root: usize) -> Self {
        GraphStats {
            vertices: g.vertex_count(),
            edge_records: g.edge_record_count(),
            total_multiplicity: g.total_multiplicity(),
            boundary: g.boundary_count(),
            degree_bound: degree_bound(g),
            root,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerdictRollup {
    pub consistent: usize,
    pub violation: usize,
    pub insufficient_data: usize,
}

impl VerdictRollup {
    fn of(stats: &[LemmaStats]) -> Self {
        let mut r = VerdictRollup::default();
        for s in stats {
            match s.verdict {
                Verdict::Consistent => r.consistent += 1,
                Verdict::Violation => r.violation += 1,
                Verdict::InsufficientData => r.insufficient_data += 1,
            }
        }
        r
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictPair {
    pub lemma: String,
    pub layer: Option<usize>,
    pub base: Verdict,
    pub enlarged: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub radius: usize,
    pub enlarged_radius: usize,
    pub compared: usize,
    pub disagreements: Vec<VerdictPair>,
    pub enlarged_rollup: VerdictRollup,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub manifest: ExperimentManifest,
    pub graph: GraphStats,
    #[serde(with = "flagged_f64")]
    pub voltage_residual: f64,
    pub degenerate_voltage: bool,
    pub rollup: VerdictRollup,
    pub energy: Option<CampaignReport>,
    pub checks: Vec<DeterministicCheck>,
    pub radius_doubling: Option<DoublingReport>,
    pub notes: Vec<String>,
}

/// Verdict keys shared by two runs of the same campaign.
fn compare_verdicts(base: &[LemmaStats], enlarged: &[LemmaStats]) -> (usize, Vec<VerdictPair>) {
    let mut compared = 0;
    let mut out = Vec::new();
    for b in base {
        if let Some(e) = enlarged.iter().find(|e| e.lemma == b.lemma && e.layer == b.layer) {
            compared += 1;
            if e.verdict != b.verdict {
                out.push(VerdictPair {
                    lemma: b.lemma.clone(),
                    layer: b.layer,
                    base: b.verdict,
                    enlarged: e.verdict,
                });
            }
        }
    }
    (compared, out)
}

struct Campaign {
    stats: Vec<LemmaStats>,
    energy: Option<CampaignReport>,
    checks: Vec<DeterministicCheck>,
    notes: Vec<String>,
    field: VoltageField,
    root: usize,
}

fn run_campaign(m: &ExperimentManifest, spec: &GraphSpec, g: &MultiGraph) -> Result<Campaign> {
    let root = m.root.unwrap_or_else(|| spec.default_root(g));
    if root >= g.vertex_count() || g.is_boundary(root) {
        return Err(LabError::Validation {
            field: "root",
            msg: format!("root {root} is out of range or absorbing"),
        });
    }
    let cfg = m.trial_config();
    let field = solve_voltage(g, root, DEFAULT_TOL)?;
    let layering = if spec.is_line() && root == 0 {
        Layering::line(g)?
    } else {
        build_cutsets(g, &field, degree_bound(g).max(2))?
    };

    let mut stats = Vec::new();
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let mut energy = None;
    for sel in &m.lemmas {
        match sel {
            LemmaSelection::Energy => {
                let report = lemma_frequencies(g, &layering, &cfg)?;
                stats.extend(report.stats.iter().cloned());
                checks.extend(report.checks.iter().cloned());
                energy = Some(report);
            }
            LemmaSelection::CutEdge => match g.line_spec() {
                Some(line) => {
                    let cut = cut_edge_frequency(line, &cfg)?;
                    if cut.is_empty() {
                        notes.push("cut_edge: no level where the voltage more than halves".into());
                    }
                    stats.extend(cut.into_iter().map(|c| c.stats));
                }
                None => notes.push("cut_edge: skipped (not a line graph)".into()),
            },
            LemmaSelection::Union => {
                stats.extend(union_frequencies(g, &layering, m.union_walks, &cfg)?);
            }
            LemmaSelection::Tail => {
                let hops = m
                    .tail_k_hops
                    .unwrap_or_else(|| spec.radius().unwrap_or(5).saturating_sub(4));
                let k = hop_ball(g, root, hops);
                let tail = general_tail_trial(g, &field, &k, &cfg)?;
                stats.extend(tail.stats);
                checks.push(tail.check);
            }
        }
    }
    Ok(Campaign {
        stats,
        energy,
        checks,
        notes,
        field,
        root,
    })
}

fn boundary_resistance(g: &MultiGraph, root: usize) -> Result<f64> {
    let boundary: Vec<usize> = g.boundary().collect();
    if boundary.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(effective_resistance(&Network::from_graph(g), &[root], &boundary)?.value)
}

/// Runs the selected campaigns and writes `lemmas.jsonl`, `resistance.csv`
/// and `summary.json` into the output directory. Identical manifests give
/// byte-identical files.
pub fn run_experiment(m: &ExperimentManifest) -> Result<RunSummary> {
    m.validate()?;
    let g = m.graph.build()?;
    let base = run_campaign(m, &m.graph, &g)?;

    let mut rows = Vec::new();
    let radius = m.graph.radius().unwrap_or(0);
    rows.push(SeriesRow {
        radius_or_n: radius as u64,
        value: boundary_resistance(&g, base.root)?,
        method: ResistanceMethod::LaplacianSolve,
    });
    if let Some(line) = g.line_spec() {
        if base.root == 0 {
            rows.push(SeriesRow {
                radius_or_n: radius as u64,
                value: line.multiplicities().iter().map(|&e| 1.0 / e as f64).sum(),
                method: ResistanceMethod::SeriesFormula,
            });
        }
    }

    let mut notes = base.notes.clone();
    let mut radius_doubling = None;
    if m.check_radius_doubling {
        match m.graph.enlarged() {
            Some(spec) => {
                let big = spec.build()?;
                let enlarged = run_campaign(m, &spec, &big)?;
                rows.push(SeriesRow {
                    radius_or_n: spec.radius().unwrap_or(0) as u64,
                    value: boundary_resistance(&big, enlarged.root)?,
                    method: ResistanceMethod::LaplacianSolve,
                });
                let (compared, disagreements) = compare_verdicts(&base.stats, &enlarged.stats);
                radius_doubling = Some(DoublingReport {
                    radius,
                    enlarged_radius: spec.radius().unwrap_or(0),
                    compared,
                    disagreements,
                    enlarged_rollup: VerdictRollup::of(&enlarged.stats),
                });
            }
            None => notes.push("radius doubling: graph kind has no larger truncation".into()),
        }
    }

    let summary = RunSummary {
        manifest: m.clone(),
        graph: GraphStats::of(&g, base.root),
        voltage_residual: base.field.residual,
        degenerate_voltage: base.field.degenerate,
        rollup: VerdictRollup::of(&base.stats),
        energy: base.energy,
        checks: base.checks,
        radius_doubling,
        notes,
    };

    fs::create_dir_all(&m.output_dir)?;
    let mut out = BufWriter::new(fs::File::create(m.output_dir.join("lemmas.jsonl"))?);
    write_lemma_report(&base.stats, &mut out)?;
    out.flush()?;
    let mut out = BufWriter::new(fs::File::create(m.output_dir.join("resistance.csv"))?);
    write_resistance_series(&rows, &mut out)?;
    out.flush()?;
    let text = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    fs::write(m.output_dir.join("summary.json"), text + "\n")?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: u64,
    pub r_n: f64,
    /// `(ln n)^2`.
    pub log_sq_n: f64,
    pub ratio: f64,
    pub vertices: usize,
    pub edges: usize,
    /// Maximizing pair found.
    pub pair: (usize, usize),
    /// Resistance between the start and the final frontier, once both are on
    /// the PATH; non-decreasing along the series.
    pub fixed_pair_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSeries {
    pub rows: Vec<GrowthRow>,
    /// Why the series stopped before the last checkpoint, if it did.
    pub truncated: Option<String>,
}

/// `R(n)` along one continued walk: checkpoint `n` uses the PATH of the first
/// `n` steps. Stops early if the walk is absorbed or trapped.
pub fn growth_experiment(
    g: &MultiGraph,
    start: usize,
    checkpoints: &[u64],
    mode: PairMode,
    seed: u64,
) -> Result<GrowthSeries> {
    if checkpoints.is_empty() || checkpoints[0] < 1 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::invalid("checkpoints must be positive and strictly increasing"));
    }
    let last = *checkpoints.last().unwrap() as usize;
    let walk = simulate(g, start, StopRule::MaxSteps(last), seed)?;
    let truncated = match walk.termination {
        Termination::StepBudget => None,
        Termination::HitBoundary => Some(format!("walk absorbed at step {}", walk.steps())),
        Termination::Trapped => Some(format!("walk trapped at step {}", walk.steps())),
        Termination::HitTarget => Some(format!("walk stopped at step {}", walk.steps())),
    };
    let frontier = walk.last();
    let mut rows = Vec::new();
    for &n in checkpoints {
        if n as usize > walk.steps() {
            break;
        }
        let prefix = walk.prefix(n as usize);
        let path = extract_path(&prefix, g)?;
        let best = max_pair_resistance(&path, mode)?;
        let fixed_pair_r = if path.visited.contains(&frontier) && frontier != start {
            let net = Network::from_path(&path);
            Some(crate::electrical::effective_resistance_global(&net, &[start], &[frontier])?.value)
        } else {
            None
        };
        let log_sq_n = (n as f64).ln().powi(2);
        rows.push(GrowthRow {
            n,
            r_n: best.value,
            log_sq_n,
            ratio: if log_sq_n > 0.0 { best.value / log_sq_n } else { f64::INFINITY },
            vertices: path.visited.len(),
            edges: path.crossed.len(),
            pair: best.pair,
            fixed_pair_r,
        });
    }
    Ok(GrowthSeries { rows, truncated })
}

/// CSV `n,r_n,log_sq_n,ratio,vertices,edges,pair_a,pair_b,fixed_pair_r`.
/// Infinite values print as `inf`; a missing fixed-pair value as `na`.
pub fn write_growth_csv<W: Write>(series: &GrowthSeries, mut out: W) -> Result<()> {
    use crate::electrical::format_value;
    writeln!(out, "n,r_n,log_sq_n,ratio,vertices,edges,pair_a,pair_b,fixed_pair_r")?;
    for r in &series.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            format_value(r.r_n),
            format_value(r.log_sq_n),
            format_value(r.ratio),
            r.vertices,
            r.edges,
            r.pair.0,
            r.pair.1,
            r.fixed_pair_r.map_or_else(|| "na".to_string(), format_value),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn manifest(dir: &Path) -> ExperimentManifest {
        ExperimentManifest {
            graph: GraphSpec::GeometricLine { base: 3, radius: 20 },
            seed: 7,
            trials: 200,
            max_steps: default_max_steps(),
            lemmas: vec![LemmaSelection::Energy, LemmaSelection::CutEdge],
            union_walks: 2,
            tail_k_hops: None,
            root: None,
            output_dir: dir.to_path_buf(),
            check_radius_doubling: false,
        }
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"
seed = 7
trials = 10000
output_dir = "out/line3"
lemmas = ["energy", "cut_edge"]
check_radius_doubling = true

[graph]
kind = "geometric_line"
base = 3
radius = 20
"#;
        let m = ExperimentManifest::from_toml(text).unwrap();
        assert_eq!(m.graph, GraphSpec::GeometricLine { base: 3, radius: 20 });
        assert_eq!(m.union_walks, 2);
        assert!(m.check_radius_doubling);
    }

    #[test]
    fn validation_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = manifest(dir.path());
        m.trials = 0;
        match run_experiment(&m) {
            Err(LabError::Validation { field, .. }) => assert_eq!(field, "trials"),
            other => panic!("expected validation error, got {other:?}"),
        }
        assert!(!dir.path().join("summary.json").exists());

        let mut m = manifest(dir.path());
        m.graph = GraphSpec::Lattice { dim: 2, radius: 1 };
        assert!(matches!(m.validate(), Err(LabError::Validation { field: "graph", .. })));

        let missing_seed = "trials = 5\noutput_dir = \"x\"\n[graph]\nkind = \"tree\"\nbranching = 2\nradius = 5\n";
        assert!(matches!(
            ExperimentManifest::from_toml(missing_seed),
            Err(LabError::Validation { field: "manifest", .. })
        ));
    }

    #[test]
    fn identical_manifests_give_identical_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&manifest(a.path())).unwrap();
        run_experiment(&manifest(b.path())).unwrap();
        for f in ["lemmas.jsonl", "resistance.csv"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        // The summary embeds the output directory; compare without it.
        let strip = |p: &Path| {
            let mut v: serde_json::Value =
                serde_json::from_slice(&fs::read(p.join("summary.json")).unwrap()).unwrap();
            v["manifest"]["output_dir"] = serde_json::Value::Null;
            v
        };
        assert_eq!(strip(a.path()), strip(b.path()));
    }

    #[test]
    fn growth_single_step_is_one_ohm() {
        let g = build_lattice(2, 10).unwrap();
        let origin = GraphSpec::Lattice { dim: 2, radius: 10 }.default_root(&g);
        let s = growth_experiment(&g, origin, &[1], PairMode::Exact, 3).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!((s.rows[0].r_n - 1.0).abs() < 1e-12);
        assert!(growth_experiment(&g, origin, &[5, 5], PairMode::Exact, 3).is_err());
    }

    #[test]
    fn growth_fixed_pair_is_monotone() {
        let g = build_lattice(2, 30).unwrap();
        let origin = GraphSpec::Lattice { dim: 2, radius: 30 }.default_root(&g);
        let s = growth_experiment(
            &g,
            origin,
            &[10, 30, 100, 300, 1000],
            PairMode::Sampled { pairs: 8, seed: 1 },
            2,
        )
        .unwrap();
        let fixed: Vec<f64> = s.rows.iter().filter_map(|r| r.fixed_pair_r).collect();
        for w in fixed.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-9));
        }
        let mut out = Vec::new();
        write_growth_csv(&s, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("n,r_n,log_sq_n,ratio,"));
        assert_eq!(text.lines().count(), s.rows.len() + 1);
    }

    #[test]
    fn growth_stops_at_the_boundary() {
        let g = build_line_graph(&LineSpec::geometric(3, 4).unwrap()).unwrap();
        let s = growth_experiment(&g, 0, &[1, 1000, 100_000], PairMode::Exact, 0).unwrap();
        assert!(s.truncated.is_some());
        assert!(s.rows.len() < 3);
    }

    fn spec_strategy() -> impl Strategy<Value = GraphSpec> {
        prop_oneof![
            (1u64..10, 2usize..40).prop_map(|(base, radius)| GraphSpec::GeometricLine { base, radius }),
            proptest::collection::vec(1u64..100, 2..10).prop_map(|multiplicities| GraphSpec::Line { multiplicities }),
            (2usize..4, 2usize..50).prop_map(|(dim, radius)| GraphSpec::Lattice { dim, radius }),
            (2usize..5, 2usize..12).prop_map(|(branching, radius)| GraphSpec::Tree { branching, radius }),
            "[a-z]{1,8}(/[a-z]{1,8}){0,2}\\.txt".prop_map(|p| GraphSpec::File { path: p.into() }),
        ]
    }

    fn lemma_strategy() -> impl Strategy<Value = LemmaSelection> {
        prop_oneof![
            Just(LemmaSelection::Energy),
            Just(LemmaSelection::CutEdge),
            Just(LemmaSelection::Union),
            Just(LemmaSelection::Tail),
        ]
    }

    proptest! {
        #[test]
        fn manifest_round_trip(
            graph in spec_strategy(),
            seed in any::<u64>(),
            trials in 1u64..1_000_000,
            max_steps in 1usize..100_000_000,
            lemmas in proptest::collection::vec(lemma_strategy(), 1..5),
            union_walks in 1usize..5,
            tail_k_hops in proptest::option::of(0usize..20),
            root in proptest::option::of(0usize..100),
            dir in "[a-z]{1,10}",
            check_radius_doubling in any::<bool>(),
        ) {
            let m = ExperimentManifest {
                graph, seed, trials, max_steps, lemmas, union_walks, tail_k_hops, root,
                output_dir: dir.into(), check_radius_doubling,
            };
            let back = ExperimentManifest::from_toml(&m.to_toml()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
