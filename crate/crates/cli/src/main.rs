use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use srwlab_core::electrical::{effective_resistance_global, max_pair_resistance, Network, PairMode};
use srwlab_core::experiment::{
    growth_experiment, run_experiment, write_growth_csv, ExperimentManifest, GraphSpec, LemmaSelection,
};
use srwlab_core::graph_format::write_graph;
use srwlab_core::harmonic::{solve_voltage, write_field, DEFAULT_TOL};
use srwlab_core::walk::{simulate, write_trace, StopRule};
use srwlab_core::{extract_path, MultiGraph};

#[derive(Parser)]
#[command(name = "srwlab", version, about = "Random walk PATH experiments on multigraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a fixture graph in the interchange format.
    Gen {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one walk and dump its trace.
    Walk {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        seed: u64,
        /// Step budget; without it the walk runs until absorbed.
        #[arg(long)]
        steps: Option<usize>,
        /// Start vertex (defaults to the root).
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the hitting-probability voltage and export it.
    Voltage {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        root: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effective resistance between two vertex sets, or the maximal pair
    /// resistance over the PATH of a seeded walk.
    Resist {
        #[command(flatten)]
        graph: GraphArgs,
        /// Source set (defaults to the root).
        #[arg(long, value_delimiter = ',')]
        from: Vec<usize>,
        /// Sink set (defaults to the boundary).
        #[arg(long, value_delimiter = ',')]
        to: Vec<usize>,
        /// Query the PATH of an `n`-step walk instead of the whole graph.
        #[arg(long, requires = "seed")]
        path_steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sampled pairs for PATH queries; 0 means every pair.
        #[arg(long, default_value_t = 0)]
        pairs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a lemma campaign from a manifest or from flags.
    Lemmas {
        /// TOML manifest; graph flags are ignored when given.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, required_unless_present = "manifest")]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "energy")]
        lemmas: Vec<LemmaArg>,
        #[arg(long, default_value = "srwlab-out")]
        out: PathBuf,
        #[arg(long)]
        check_radius_doubling: bool,
    },
    /// Track R(n) of PATH(n) along one walk.
    Growth {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        checkpoints: Vec<u64>,
        /// Sampled pairs per checkpoint; 0 means every pair.
        #[arg(long, default_value_t = 64)]
        pairs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphKindArg {
    GeometricLine,
    Line,
    Lattice,
    Tree,
    File,
}

/// Same spelling as the manifest's `lemmas` list.
#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum LemmaArg {
    Energy,
    CutEdge,
    Union,
    Tail,
}

impl From<LemmaArg> for LemmaSelection {
    fn from(l: LemmaArg) -> Self {
        match l {
            LemmaArg::Energy => LemmaSelection::Energy,
            LemmaArg::CutEdge => LemmaSelection::CutEdge,
            LemmaArg::Union => LemmaSelection::Union,
            LemmaArg::Tail => LemmaSelection::Tail,
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long = "graph", value_enum, default_value = "geometric-line")]
    kind: GraphKindArg,
    /// Truncation radius (levels, sup-norm radius or tree depth).
    #[arg(long, default_value_t = 20)]
    radius: usize,
    #[arg(long, default_value_t = 3)]
    base: u64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    branching: usize,
    /// Explicit line multiplicities, comma separated.
    #[arg(long, value_delimiter = ',')]
    multiplicities: Vec<u64>,
    /// Graph file for `--graph file`.
    #[arg(long)]
    file: Option<PathBuf>,
}

impl GraphArgs {
    fn spec(&self) -> Result<GraphSpec> {
        Ok(match self.kind {
            GraphKindArg::GeometricLine => GraphSpec::GeometricLine {
                base: self.base,
                radius: self.radius,
            },
            GraphKindArg::Line => {
                if self.multiplicities.is_empty() {
                    bail!("--graph line needs --multiplicities");
                }
                GraphSpec::Line {
                    multiplicities: self.multiplicities.clone(),
                }
            }
            GraphKindArg::Lattice => GraphSpec::Lattice {
                dim: self.dim,
                radius: self.radius,
            },
            GraphKindArg::Tree => GraphSpec::Tree {
                branching: self.branching,
                radius: self.radius,
            },
            GraphKindArg::File => GraphSpec::File {
                path: self.file.clone().context("--graph file needs --file")?,
            },
        })
    }

    fn load(&self) -> Result<(GraphSpec, MultiGraph)> {
        let spec = self.spec()?;
        let g = spec.build().context("building graph")?;
        Ok((spec, g))
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(format!("{x}"))
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { graph, out } => {
            let (_, g) = graph.load()?;
            let mut w = sink(&out)?;
            write_graph(&g, &mut w)?;
            w.flush()?;
        }
        Command::Walk {
            graph,
            seed,
            steps,
            start,
            out,
        } => {
            let (spec, g) = graph.load()?;
            let start = start.unwrap_or_else(|| spec.default_root(&g));
            let stop = steps.map_or(StopRule::UntilBoundary, StopRule::MaxSteps);
            let trace = simulate(&g, start, stop, seed)?;
            let mut w = sink(&out)?;
            write_trace(&trace, &mut w)?;
            w.flush()?;
        }
        Command::Voltage { graph, root, tol, out } => {
            let (spec, g) = graph.load()?;
            let root = root.unwrap_or_else(|| spec.default_root(&g));
            let f = solve_voltage(&g, root, tol)?;
            eprintln!("voltage residual {:.3e}", f.residual);
            let mut w = sink(&out)?;
            write_field(&f, &mut w)?;
            w.flush()?;
        }
        Command::Resist {
            graph,
            from,
            to,
            path_steps,
            seed,
            pairs,
            out,
        } => {
            let (spec, g) = graph.load()?;
            let root = spec.default_root(&g);
            let report = match path_steps {
                Some(n) => {
                    let seed = seed.expect("clap enforces --seed");
                    let trace = simulate(&g, root, StopRule::MaxSteps(n), seed)?;
                    let path = extract_path(&trace, &g)?;
                    let mode = if pairs == 0 {
                        PairMode::Exact
                    } else {
                        PairMode::Sampled { pairs, seed }
                    };
                    let best = max_pair_resistance(&path, mode)?;
                    json!({
                        "steps": trace.steps(),
                        "vertices": path.visited.len(),
                        "edges": path.crossed.len(),
                        "max_pair_resistance": json_number(best.value),
                        "pair": [best.pair.0, best.pair.1],
                    })
                }
                None => {
                    let from = if from.is_empty() { vec![root] } else { from };
                    let to = if to.is_empty() { g.boundary().collect() } else { to };
                    if to.is_empty() {
                        bail!("graph has no boundary; pass --to");
                    }
                    let r = effective_resistance_global(&Network::from_graph(&g), &from, &to)?;
                    json!({
                        "from": from,
                        "to": to,
                        "resistance": json_number(r.value),
                        "method": r.method.as_str(),
                    })
                }
            };
            let mut w = sink(&out)?;
            writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
            w.flush()?;
        }
        Command::Lemmas {
            manifest,
            graph,
            seed,
            trials,
            lemmas,
            out,
            check_radius_doubling,
        } => {
            let m = match manifest {
                Some(path) => ExperimentManifest::load(&path)
                    .with_context(|| format!("loading manifest {}", path.display()))?,
                None => {
                    let m = ExperimentManifest {
                        graph: graph.spec()?,
                        seed: seed.expect("clap enforces --seed"),
                        trials,
                        max_steps: 10_000_000,
                        lemmas: lemmas.into_iter().map(Into::into).collect(),
                        union_walks: 2,
                        tail_k_hops: None,
                        root: None,
                        output_dir: out,
                        check_radius_doubling,
                    };
                    m.validate()?;
                    m
                }
            };
            let summary = run_experiment(&m)?;
            println!(
                "{}: {} consistent, {} violation, {} insufficient data",
                m.output_dir.display(),
                summary.rollup.consistent,
                summary.rollup.violation,
                summary.rollup.insufficient_data
            );
            if let Some(d) = &summary.radius_doubling {
                println!(
                    "radius {} vs {}: {} verdicts compared, {} disagree",
                    d.radius,
                    d.enlarged_radius,
                    d.compared,
                    d.disagreements.len()
                );
            }
        }
        Command::Growth {
            graph,
            seed,
            checkpoints,
            pairs,
            out,
        } => {
            let (spec, g) = graph.load()?;
            let mode = if pairs == 0 {
                PairMode::Exact
            } else {
                PairMode::Sampled { pairs, seed }
            };
            let series = growth_experiment(&g, spec.default_root(&g), &checkpoints, mode, seed)?;
            if let Some(why) = &series.truncated {
                eprintln!("series truncated: {why}");
            }
            let mut w = sink(&out)?;
            write_growth_csv(&series, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}
