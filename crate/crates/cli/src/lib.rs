//! Command-line front end: reproducible experiments over graph windows.
//!
//! Every run is seeded, hashed and manifested. Subcommands map onto the
//! library layers: `graph`, `potential`, `sample`, `forest`, `compare`,
//! plus `suite-paper`, the built-in three-graph dichotomy suite that the
//! integration tests pin down.

pub mod commands;
pub mod config;
pub mod suite;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use walklab::graph::FamilySpec;

use config::{GraphSource, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "walklab",
    version,
    about = "Potential theory and excursion sampling on windows of transient graphs"
)]
pub struct Cli {
    /// RNG seed; mandatory for every run so artifacts are reproducible.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (default: $WALKLAB_OUT, then ./walklab-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Plain-text key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Built-in family: zd_box | regular_tree | product | ladder | two_sheet.
    #[arg(long, global = true)]
    pub family: Option<String>,

    #[arg(long, global = true)]
    pub dim: Option<usize>,

    #[arg(long, global = true)]
    pub radius: Option<usize>,

    #[arg(long, global = true)]
    pub branching: Option<usize>,

    #[arg(long, global = true)]
    pub depth: Option<usize>,

    #[arg(long, global = true)]
    pub factor: Option<usize>,

    #[arg(long, global = true)]
    pub ray: Option<usize>,

    #[arg(long, global = true)]
    pub decay: Option<f64>,

    /// Edge-list file instead of a built-in family.
    #[arg(long, global = true)]
    pub graph: Option<PathBuf>,

    /// Exhaustion file (one line of vertex ids per level).
    #[arg(long, global = true)]
    pub exhaustion: Option<PathBuf>,

    /// Solver relative-residual tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Free,
    Wired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Wired,
    FreeTrace,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the window, report stats, optionally write graph/exhaustion
    /// files or a wired-quotient summary.
    Graph {
        /// Write graph.txt and exhaustion.txt into the output directory.
        #[arg(long)]
        write: bool,
        /// Also wire at this level and report the collapsed cut.
        #[arg(long)]
        wire_level: Option<usize>,
    },
    /// Linear-algebraic potential theory.
    Potential {
        #[command(subcommand)]
        cmd: PotentialCmd,
    },
    /// Monte Carlo samplers.
    Sample {
        #[command(subcommand)]
        cmd: SampleCmd,
    },
    /// Spanning forests and edge marginals.
    Forest {
        #[command(subcommand)]
        cmd: ForestCmd,
    },
    /// Statistical diagnostics and verdicts.
    Compare {
        #[command(subcommand)]
        cmd: CompareCmd,
    },
    /// Run the built-in three-graph dichotomy suite with pinned seeds.
    SuitePaper,
}

#[derive(Debug, Subcommand)]
pub enum PotentialCmd {
    /// Equilibrium measure and capacity of K across levels.
    Equilibrium {
        /// `;`-separated vertex names.
        #[arg(long)]
        k: String,
        /// Level or inclusive range `a:b`.
        #[arg(long)]
        levels: String,
    },
    /// Free entry measure of K read at a probe, across levels.
    EntryFree {
        #[arg(long)]
        k: String,
        /// Vertex name or `auto-rim`.
        #[arg(long, default_value = "auto-rim")]
        probe: String,
        #[arg(long)]
        levels: String,
    },
    /// Effective resistance between two vertices across levels.
    Resistance {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        levels: String,
    },
    /// Green matrix of K on the wired quotient at one level.
    Green {
        #[arg(long)]
        k: String,
        #[arg(long)]
        level: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum SampleCmd {
    /// Windowed interlacement point process for K.
    Ri {
        #[arg(long)]
        k: String,
        #[arg(long)]
        umax: f64,
        /// Holding-rate schedule base.
        #[arg(long, default_value_t = 1.0)]
        rate_base: f64,
        /// Holding-rate growth per shell.
        #[arg(long, default_value_t = 2.0)]
        rate_growth: f64,
    },
    /// Truncated reflected walk at a level.
    Reflected {
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        excursions: usize,
        #[arg(long, default_value_t = 1.0)]
        rate_base: f64,
        #[arg(long, default_value_t = 2.0)]
        rate_growth: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ForestCmd {
    /// Sample spanning trees by loop-erased random walk; reports per-edge
    /// inclusion frequencies on the central panel.
    Wilson {
        #[arg(long)]
        samples: usize,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Level (wired quotient level, or the free window level).
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, default_value_t = 20)]
        panel: usize,
    },
    /// Exact edge marginals from effective resistances.
    Marginals {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        level: Option<usize>,
        /// Panel size (0 = all edges).
        #[arg(long, default_value_t = 20)]
        panel: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum CompareCmd {
    /// Four-diagnostic equivalence report with verdict.
    Equivalence {
        #[arg(long)]
        k: String,
        #[arg(long)]
        max_level: usize,
        #[arg(long)]
        min_level: Option<usize>,
        /// Working level for the empirical sampler diagnostic (omit to skip).
        #[arg(long)]
        sampler_level: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        sampler_excursions: usize,
        #[arg(long, default_value_t = 20)]
        panel: usize,
    },
    /// Coupled truncation-convergence curve.
    Truncation {
        #[arg(long)]
        reference: usize,
        #[arg(long)]
        levels: String,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        /// Mean number of excursions per replica.
        #[arg(long, default_value_t = 4.0)]
        mean_excursions: f64,
    },
}

/// Resolves the graph source and the flat config map, then dispatches.
/// Returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let started = Instant::now();
    let file_kv = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            config::parse_kv_file(&text)?
        }
        None => BTreeMap::new(),
    };

    if matches!(cli.command, Command::SuitePaper) {
        let out = resolve_out(&cli, &file_kv);
        return suite::run_suite(&out);
    }

    let seed = match cli.seed.or_else(|| {
        config::kv_get(&file_kv, "run", "seed").and_then(|s| s.parse().ok())
    }) {
        Some(s) => s,
        None => bail!("--seed is mandatory (runs must be reproducible)"),
    };
    let out_dir = resolve_out(&cli, &file_kv);
    let tol = cli
        .tol
        .or_else(|| config::kv_get(&file_kv, "potential", "tol").and_then(|s| s.parse().ok()))
        .unwrap_or(1e-10);

    let graph_source = resolve_graph_source(&cli, &file_kv)?;
    let mut resolved = file_kv;
    resolved.insert("run.seed".into(), seed.to_string());
    resolved.insert("potential.tol".into(), format!("{tol:e}"));
    match &graph_source {
        GraphSource::Family(spec) => {
            resolved.insert("graph.family".into(), spec.describe());
        }
        GraphSource::Files { graph, exhaustion } => {
            resolved.insert("graph.file".into(), graph.display().to_string());
            if let Some(e) = exhaustion {
                resolved.insert("graph.exhaustion".into(), e.display().to_string());
            }
        }
    }

    let mut cfg = RunConfig {
        graph_source,
        seed,
        out_dir,
        resolved,
    };

    let command_name = commands::dispatch(&cli.command, &mut cfg, tol)?;
    config::write_manifest(&cfg, &command_name, started)?;
    Ok(0)
}

fn resolve_out(cli: &Cli, kv: &BTreeMap<String, String>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config::kv_get(kv, "run", "out").map(PathBuf::from))
        .or_else(|| std::env::var_os("WALKLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("walklab-out"))
}

fn resolve_graph_source(cli: &Cli, kv: &BTreeMap<String, String>) -> Result<GraphSource> {
    if let Some(path) = &cli.graph {
        return Ok(GraphSource::Files {
            graph: path.clone(),
            exhaustion: cli.exhaustion.clone(),
        });
    }
    let get_usize = |cli_v: Option<usize>, key: &str| -> Option<usize> {
        cli_v.or_else(|| config::kv_get(kv, "graph", key).and_then(|s| s.parse().ok()))
    };
    let family = cli
        .family
        .clone()
        .or_else(|| config::kv_get(kv, "graph", "family").map(str::to_string));
    let Some(family) = family else {
        bail!("no graph source: pass --family or --graph");
    };
    let dim = get_usize(cli.dim, "dim").unwrap_or(3);
    let radius = get_usize(cli.radius, "radius").unwrap_or(8);
    let spec = match family.as_str() {
        "zd_box" => FamilySpec::ZdBox { dim, radius },
        "regular_tree" => FamilySpec::RegularTree {
            branching: get_usize(cli.branching, "branching").unwrap_or(2),
            depth: get_usize(cli.depth, "depth").unwrap_or(9),
        },
        "product" => FamilySpec::Product {
            dim,
            radius,
            factor: get_usize(cli.factor, "factor").unwrap_or(2),
        },
        "ladder" => FamilySpec::Ladder {
            dim,
            radius,
            ray: get_usize(cli.ray, "ray").unwrap_or(radius),
            decay: cli
                .decay
                .or_else(|| config::kv_get(kv, "graph", "decay").and_then(|s| s.parse().ok()))
                .unwrap_or(0.5),
        },
        "two_sheet" => FamilySpec::TwoSheet { dim, radius },
        other => bail!("unknown family `{other}`"),
    };
    Ok(GraphSource::Family(spec))
}
