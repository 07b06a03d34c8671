//! Command-line front end: graph generation, theory reports, Monte Carlo
//! sweeps, convention arbitration, and table dumps.
//!
//! Exit codes: 0 success, 2 validation, 3 numerical failure, 4 resource
//! guard (problem too large / run budget exceeded).

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fixnet::arbitration::{arbitrate, default_graph_set, default_score_set, ArbitrationReport, MATCH_TOL};
use fixnet::coalescence::{
    pair_times, triple_times, Convention, PairTimes, TripleTimes, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use fixnet::dynamics::{estimate_fixation_opts, DynamicsError, FocalChoice, RunOptions};
use fixnet::graph::GraphError;
use fixnet::theory::{
    critical_ratio_ad, critical_ratio_bc, dprime_expectation, GameScores, TheoryError,
    WeakSelectionReport,
};
use fixnet::WeightedGraph;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

/// Worker-count override; default is available parallelism.
const WORKERS_ENV: &str = "FIXNET_WORKERS";

#[derive(Parser)]
#[command(name = "fixnet", version, about = "Weak-selection fixation on weighted networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph and write it as an edge-list file.
    Gen(GenCmd),
    /// Weak-selection theory report for a graph and score vector.
    Theory(TheoryCmd),
    /// Monte Carlo sweep of fixation probability over a score-ratio grid.
    Sweep(SweepCmd),
    /// Compare both triple-time conventions against the exact-chain slope.
    Arbitrate(ArbitrateCmd),
    /// Dump solved coalescence-time tables as JSON.
    Tables(TablesCmd),
    /// Re-read a sweep CSV and render an ASCII chart of N*rho_hat.
    Plot(PlotCmd),
}

#[derive(Args)]
struct GenCmd {
    #[command(subcommand)]
    kind: GenKind,
}

#[derive(Subcommand)]
enum GenKind {
    /// Complete graph K_n.
    Complete {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Newman-Watts small world: ring lattice plus random shortcuts.
    Nw {
        #[arg(long)]
        n: usize,
        /// Even lattice degree.
        #[arg(long)]
        k: usize,
        /// Shortcut probability per lattice edge.
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Barabasi-Albert preferential attachment.
    Ba {
        #[arg(long)]
        n: usize,
        /// Seed clique size.
        #[arg(long)]
        m0: usize,
        /// Edges added per new vertex.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Graph source shared by theory/sweep/tables: either an edge-list file or
/// an inline generator spec `complete:N`, `nw:N:K:P:SEED`, `ba:N:M0:M:SEED`.
#[derive(Args)]
struct GraphSource {
    /// Edge-list file path.
    #[arg(long, conflicts_with = "gen")]
    graph: Option<PathBuf>,
    /// Inline generator spec, e.g. `complete:50`, `nw:50:8:0.4:1`, `ba:50:3:3:1`.
    #[arg(long)]
    gen: Option<String>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long, default_value_t = 0.0)]
    d: f64,
    #[arg(long, default_value_t = 0.0)]
    delta_a: f64,
    #[arg(long, default_value_t = 0.0)]
    delta_b: f64,
    /// Positive-feedback shorthand: a = RATIO * d, b = c = 0 (d from --d, default 1).
    #[arg(long, value_name = "RATIO", conflicts_with_all = ["a", "b", "c", "case_iii"])]
    case_ii: Option<f64>,
    /// Negative-feedback shorthand: b = RATIO * c, a = d = 0 (c from --c, default -1).
    #[arg(long, value_name = "RATIO", conflicts_with_all = ["a", "b", "d"])]
    case_iii: Option<f64>,
}

impl ScoreArgs {
    fn build(&self) -> GameScores {
        if let Some(r) = self.case_ii {
            let base = if self.d != 0.0 { self.d } else { 1.0 };
            let mut s = GameScores::case_ii(r, base);
            s.delta_a = self.delta_a;
            s.delta_b = self.delta_b;
            return s;
        }
        if let Some(r) = self.case_iii {
            let base = if self.c != 0.0 { self.c } else { -1.0 };
            let mut s = GameScores::case_iii(r, base);
            s.delta_a = self.delta_a;
            s.delta_b = self.delta_b;
            return s;
        }
        GameScores {
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
            delta_a: self.delta_a,
            delta_b: self.delta_b,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    PaperLiteral,
    Lineage,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Convention {
        match c {
            ConventionArg::PaperLiteral => Convention::PaperLiteral,
            ConventionArg::Lineage => Convention::Lineage,
        }
    }
}

#[derive(Args)]
struct ConventionArgs {
    /// Triple-time convention; overrides the arbitration config file.
    #[arg(long, value_enum)]
    convention: Option<ConventionArg>,
    /// Arbitration config file stamped by `arbitrate`.
    #[arg(long, default_value = "convention.json")]
    config: PathBuf,
}

impl ConventionArgs {
    /// Flag wins, then a stamped config file, then the built-in default.
    fn resolve(&self) -> (Convention, &'static str) {
        if let Some(c) = self.convention {
            return (c.into(), "flag");
        }
        if let Ok(text) = std::fs::read_to_string(&self.config) {
            if let Ok(cfg) = serde_json::from_str::<ConventionConfig>(&text) {
                return (cfg.convention, "config");
            }
        }
        (Convention::Lineage, "default")
    }
}

#[derive(Args)]
struct TheoryCmd {
    #[command(flatten)]
    source: GraphSource,
    #[command(flatten)]
    scores: ScoreArgs,
    #[command(flatten)]
    convention: ConventionArgs,
    /// Selection intensity for the printed rho_A line.
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RatioKind {
    /// Sweep a/d with b = c = 0.
    Ad,
    /// Sweep b/c with a = d = 0.
    Bc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FocalArg {
    Uniform,
    Stationary,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    source: GraphSource,
    #[command(flatten)]
    convention: ConventionArgs,
    /// Which score ratio to sweep.
    #[arg(long, value_enum)]
    ratio: RatioKind,
    /// Grid as MIN:MAX:POINTS.
    #[arg(long)]
    grid: String,
    /// Logarithmic grid spacing.
    #[arg(long)]
    log: bool,
    /// Base payoff: d for --ratio ad (default 1), c for --ratio bc (default -1).
    #[arg(long)]
    base: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Monte Carlo runs per grid point.
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Focal-individual choice per elementary update.
    #[arg(long, value_enum, default_value_t = FocalArg::Uniform)]
    focal: FocalArg,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ArbitrateCmd {
    /// Edge-list files; omit to use the built-in graph set.
    #[arg(long = "graph")]
    graphs: Vec<PathBuf>,
    /// JSON file with an array of score vectors; omit for the built-in set.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Config file to stamp with the winning convention.
    #[arg(long, default_value = "convention.json")]
    config: PathBuf,
    /// Write the full table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct TablesCmd {
    #[command(flatten)]
    source: GraphSource,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PlotCmd {
    csv: PathBuf,
    /// Chart width in columns.
    #[arg(long, default_value_t = 60)]
    width: usize,
}

/// Stamped by `arbitrate`, consumed as the theory/sweep default.
#[derive(Serialize, Deserialize)]
struct ConventionConfig {
    convention: Convention,
    match_tol: f64,
    max_rel_err: f64,
    source: String,
}

#[derive(Serialize)]
struct TheoryReport {
    graph_hash: String,
    n: usize,
    scores: GameScores,
    selected_convention: Convention,
    selected_from: String,
    paper_literal: WeakSelectionReport,
    lineage: WeakSelectionReport,
    critical_ad: Option<f64>,
    critical_bc: Option<f64>,
    beta: f64,
    rho_a: f64,
    warnings: Vec<String>,
}

fn main() {
    init_workers();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

fn init_workers() {
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        match raw.parse::<usize>() {
            Ok(w) if w >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build_global()
                    .ok();
            }
            _ => {
                eprintln!("warning: ignoring invalid {WORKERS_ENV}={raw}");
            }
        }
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    use fixnet::arbitration::ArbitrationError;
    for cause in err.chain() {
        // transparent wrappers don't show up as separate chain links
        if let Some(e) = cause.downcast_ref::<ArbitrationError>() {
            return match e {
                ArbitrationError::Dynamics(d) => dynamics_code(d),
                ArbitrationError::Coalescence(
                    fixnet::coalescence::CoalescenceError::NotConverged { .. },
                ) => 3,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<DynamicsError>() {
            return dynamics_code(e);
        }
        if let Some(e) = cause.downcast_ref::<fixnet::coalescence::CoalescenceError>() {
            return match e {
                fixnet::coalescence::CoalescenceError::NotConverged { .. } => 3,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<TheoryError>() {
            return match e {
                TheoryError::NoFiniteThreshold { .. } => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<GraphError>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    2
}

fn dynamics_code(e: &DynamicsError) -> i32 {
    match e {
        DynamicsError::TooLarge { .. } | DynamicsError::MaxStepsExceeded { .. } => 4,
        DynamicsError::NotConverged { .. } | DynamicsError::IllConditioned(..) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen(cmd) => cmd_gen(cmd),
        Cmd::Theory(cmd) => cmd_theory(cmd),
        Cmd::Sweep(cmd) => cmd_sweep(cmd),
        Cmd::Arbitrate(cmd) => cmd_arbitrate(cmd),
        Cmd::Tables(cmd) => cmd_tables(cmd),
        Cmd::Plot(cmd) => cmd_plot(cmd),
    }
}

fn load_graph(source: &GraphSource) -> Result<(WeightedGraph, String)> {
    match (&source.graph, &source.gen) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let g = WeightedGraph::parse_edge_list(&text)?;
            Ok((g, path.display().to_string()))
        }
        (None, Some(spec)) => {
            let g = generate_from_spec(spec)?;
            Ok((g, spec.clone()))
        }
        _ => bail!("provide exactly one of --graph or --gen"),
    }
}

fn generate_from_spec(spec: &str) -> Result<WeightedGraph> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        s.parse().map_err(|_| anyhow!("bad number {s:?} in spec {spec:?}"))
    };
    let g = match parts.as_slice() {
        ["complete", n] => WeightedGraph::complete(parse(n)? as usize)?,
        ["nw", n, k, p, seed] => WeightedGraph::newman_watts(
            parse(n)? as usize,
            parse(k)? as usize,
            parse(p)?,
            parse(seed)? as u64,
        )?,
        ["ba", n, m0, m, seed] => WeightedGraph::barabasi_albert(
            parse(n)? as usize,
            parse(m0)? as usize,
            parse(m)? as usize,
            parse(seed)? as u64,
        )?,
        _ => bail!(
            "unrecognized generator spec {spec:?}; expected complete:N, nw:N:K:P:SEED, or ba:N:M0:M:SEED"
        ),
    };
    Ok(g)
}

fn cmd_gen(cmd: GenCmd) -> Result<()> {
    let (g, desc, output) = match cmd.kind {
        GenKind::Complete { n, output } => {
            (WeightedGraph::complete(n)?, format!("complete n={n}"), output)
        }
        GenKind::Nw { n, k, p, seed, output } => (
            WeightedGraph::newman_watts(n, k, p, seed)?,
            format!("nw n={n} k={k} p={p} seed={seed}"),
            output,
        ),
        GenKind::Ba { n, m0, m, seed, output } => (
            WeightedGraph::barabasi_albert(n, m0, m, seed)?,
            format!("ba n={n} m0={m0} m={m} seed={seed}"),
            output,
        ),
    };
    let hash = g.content_hash();
    let mut text = String::new();
    writeln!(text, "# generator: {desc}")?;
    writeln!(text, "# vertices: {}, edges: {}", g.n(), g.edge_count())?;
    writeln!(text, "# hash: {hash}")?;
    writeln!(text, "n={}", g.n())?;
    text.push_str(&g.to_edge_list_string());
    std::fs::write(&output, text).with_context(|| format!("writing {}", output.display()))?;
    println!("wrote {} ({} vertices, {} edges)", output.display(), g.n(), g.edge_count());
    println!("input hash: {hash}");
    Ok(())
}

fn solve_tables(
    g: &WeightedGraph,
) -> Result<(PairTimes, TripleTimes, TripleTimes)> {
    let pair = pair_times(g, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let paper = triple_times(g, &pair, Convention::PaperLiteral, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let lineage = triple_times(g, &pair, Convention::Lineage, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok((pair, paper, lineage))
}

fn cmd_theory(cmd: TheoryCmd) -> Result<()> {
    let (g, origin) = load_graph(&cmd.source)?;
    let scores = cmd.scores.build();
    let hash = g.content_hash();
    println!("graph: {origin} (n = {}, edges = {})", g.n(), g.edge_count());
    println!("input hash: {hash}");
    let (selected, selected_from) = cmd.convention.resolve();
    let (pair, t_paper, t_lineage) = solve_tables(&g)?;
    let rep_paper = dprime_expectation(&g, &scores, &pair, &t_paper)?;
    let rep_lineage = dprime_expectation(&g, &scores, &pair, &t_lineage)?;
    let (t_sel, rep_sel) = match selected {
        Convention::PaperLiteral => (&t_paper, &rep_paper),
        Convention::Lineage => (&t_lineage, &rep_lineage),
    };
    for w in scores.warnings() {
        println!("warning: {w}");
    }
    println!("<D'> paper-literal = {:.12}", rep_paper.dprime);
    println!("<D'> lineage       = {:.12}", rep_lineage.dprime);
    println!("selected convention: {selected} (from {selected_from})");
    let rho = rep_sel.rho_of_beta(cmd.beta);
    println!(
        "rho_A(beta) = 1/{} + beta * {:.12};  rho_A({}) = {:.12}",
        g.n(),
        rep_sel.dprime,
        cmd.beta,
        rho
    );
    println!("A favored: {}", rep_sel.favored);
    let crit_ad = optional_threshold(critical_ratio_ad(&g, &pair, t_sel));
    let crit_bc = optional_threshold(critical_ratio_bc(&g, &pair, t_sel));
    match crit_ad {
        Some(v) => println!("(a/d)* = {v:.12}"),
        None => println!("(a/d)* = none (no finite threshold)"),
    }
    match crit_bc {
        Some(v) => println!("(b/c)* = {v:.12}"),
        None => println!("(b/c)* = none (no finite threshold)"),
    }
    if let Some(path) = cmd.json {
        let report = TheoryReport {
            graph_hash: hash,
            n: g.n(),
            scores,
            selected_convention: selected,
            selected_from: selected_from.to_string(),
            paper_literal: rep_paper,
            lineage: rep_lineage,
            critical_ad: crit_ad,
            critical_bc: crit_bc,
            beta: cmd.beta,
            rho_a: rho,
            warnings: scores.warnings(),
        };
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Distinguishes "no finite threshold" from real failures.
fn optional_threshold(res: std::result::Result<f64, TheoryError>) -> Option<f64> {
    match res {
        Ok(v) => Some(v),
        Err(TheoryError::NoFiniteThreshold { .. }) => None,
        // table mismatch etc. cannot happen here: tables come from the same graph
        Err(_) => None,
    }
}

fn parse_grid(spec: &str, log: bool) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [min, max, points] = parts.as_slice() else {
        bail!("grid must be MIN:MAX:POINTS, got {spec:?}");
    };
    let min: f64 = min.parse().map_err(|_| anyhow!("bad grid minimum {min:?}"))?;
    let max: f64 = max.parse().map_err(|_| anyhow!("bad grid maximum {max:?}"))?;
    let points: usize = points.parse().map_err(|_| anyhow!("bad grid point count {points:?}"))?;
    if points == 0 {
        bail!("grid needs at least one point");
    }
    if !(min.is_finite() && max.is_finite()) || min > max {
        bail!("grid bounds must be finite with MIN <= MAX");
    }
    if log && min <= 0.0 {
        bail!("log grid requires positive bounds");
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if log {
                (min.ln() + step(i) * (max.ln() - min.ln())).exp()
            } else {
                min + step(i) * (max - min)
            }
        })
        .collect())
}

fn cmd_sweep(cmd: SweepCmd) -> Result<()> {
    if cmd.runs == 0 {
        bail!("runs must be >= 1");
    }
    if cmd.beta < 0.0 {
        bail!("beta must be >= 0");
    }
    let (g, origin) = load_graph(&cmd.source)?;
    let hash = g.content_hash();
    println!("graph: {origin} (n = {}, edges = {})", g.n(), g.edge_count());
    println!("input hash: {hash}");
    let grid = parse_grid(&cmd.grid, cmd.log)?;
    let (convention, conv_from) = cmd.convention.resolve();
    let pair = pair_times(&g, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let triple = triple_times(&g, &pair, convention, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let threshold = match cmd.ratio {
        RatioKind::Ad => optional_threshold(critical_ratio_ad(&g, &pair, &triple)),
        RatioKind::Bc => optional_threshold(critical_ratio_bc(&g, &pair, &triple)),
    };
    let base = cmd.base.unwrap_or(match cmd.ratio {
        RatioKind::Ad => 1.0,
        RatioKind::Bc => -1.0,
    });
    let opts = RunOptions {
        focal: match cmd.focal {
            FocalArg::Uniform => FocalChoice::Uniform,
            FocalArg::Stationary => FocalChoice::StationaryWeighted,
        },
        ..RunOptions::default()
    };
    let threshold_field = threshold.map_or_else(|| "nan".to_string(), |v| format!("{v}"));
    let mut csv = String::from("ratio,rho_hat,se,n_rho,threshold\n");
    let n = g.n() as f64;
    for (idx, &ratio) in grid.iter().enumerate() {
        let scores = match cmd.ratio {
            RatioKind::Ad => GameScores::case_ii(ratio, base),
            RatioKind::Bc => GameScores::case_iii(ratio, base),
        };
        // distinct stream per grid point keeps rows independent
        let est = estimate_fixation_opts(
            &g,
            &scores,
            cmd.beta,
            cmd.runs,
            cmd.seed.wrapping_add(idx as u64),
            opts,
        )?;
        writeln!(
            csv,
            "{},{},{},{},{}",
            ratio,
            est.rho_hat,
            est.se,
            n * est.rho_hat,
            threshold_field
        )?;
        println!(
            "ratio {ratio:>12.6}: rho_hat = {:.6} +- {:.6}  (N*rho = {:.4})",
            est.rho_hat,
            est.se,
            n * est.rho_hat
        );
    }
    writeln!(csv, "# graph_hash={hash}")?;
    writeln!(csv, "# convention={convention} (from {conv_from})")?;
    writeln!(
        csv,
        "# ratio={} beta={} runs={} seed={} base={}",
        match cmd.ratio {
            RatioKind::Ad => "ad",
            RatioKind::Bc => "bc",
        },
        cmd.beta,
        cmd.runs,
        cmd.seed,
        base
    )?;
    writeln!(csv, "# threshold={threshold_field}")?;
    std::fs::write(&cmd.output, csv).with_context(|| format!("writing {}", cmd.output.display()))?;
    println!("wrote {}", cmd.output.display());
    match threshold {
        Some(v) => println!("theory threshold: {v:.12} ({convention})"),
        None => println!("theory threshold: none (no finite threshold)"),
    }
    Ok(())
}

fn cmd_arbitrate(cmd: ArbitrateCmd) -> Result<()> {
    let graphs: Vec<(String, WeightedGraph)> = if cmd.graphs.is_empty() {
        default_graph_set()
    } else {
        let mut out = Vec::new();
        for path in &cmd.graphs {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            out.push((path.display().to_string(), WeightedGraph::parse_edge_list(&text)?));
        }
        out
    };
    let scores: Vec<GameScores> = match &cmd.scores {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => default_score_set(),
    };
    for (name, g) in &graphs {
        println!("graph {name}: n = {}, input hash: {}", g.n(), g.content_hash());
    }
    let report = arbitrate(&graphs, &scores)?;
    print_arbitration(&report);
    if let Some(path) = &cmd.json {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
        println!("wrote {}", path.display());
    }
    match report.winner {
        Some(winner) => {
            let max_rel_err = match winner {
                Convention::PaperLiteral => report.max_rel_err_paper_literal,
                Convention::Lineage => report.max_rel_err_lineage,
            };
            let cfg = ConventionConfig {
                convention: winner,
                match_tol: MATCH_TOL,
                max_rel_err,
                source: "arbitrate".to_string(),
            };
            std::fs::write(&cmd.config, serde_json::to_string_pretty(&cfg)?)
                .with_context(|| format!("writing {}", cmd.config.display()))?;
            println!("winner: {winner}; stamped {}", cmd.config.display());
            Ok(())
        }
        None => Err(anyhow!(DynamicsError::IllConditioned(
            report.max_rel_err_paper_literal,
            report.max_rel_err_lineage,
        ))
        .context("arbitration inconclusive: no single convention matches everywhere")),
    }
}

fn print_arbitration(report: &ArbitrationReport) {
    println!(
        "{:<12} {:>14} {:>14} {:>14} {:>11} {:>11}",
        "graph", "exact slope", "paper-literal", "lineage", "rel err PL", "rel err L"
    );
    for inst in &report.instances {
        println!(
            "{:<12} {:>14.8} {:>14.8} {:>14.8} {:>11.2e} {:>11.2e}",
            inst.graph,
            inst.exact_slope,
            inst.dprime_paper_literal,
            inst.dprime_lineage,
            inst.rel_err_paper_literal,
            inst.rel_err_lineage
        );
    }
    println!(
        "max rel err: paper-literal {:.3e}, lineage {:.3e} (tol {})",
        report.max_rel_err_paper_literal, report.max_rel_err_lineage, report.match_tol
    );
}

#[derive(Serialize)]
struct TableDump {
    graph_hash: String,
    n: usize,
    pair: PairTimes,
    paper_literal: TripleTimes,
    lineage: TripleTimes,
}

fn cmd_tables(cmd: TablesCmd) -> Result<()> {
    let (g, origin) = load_graph(&cmd.source)?;
    let hash = g.content_hash();
    println!("graph: {origin} (n = {})", g.n());
    println!("input hash: {hash}");
    let (pair, paper, lineage) = solve_tables(&g)?;
    let dump = TableDump {
        graph_hash: hash,
        n: g.n(),
        pair,
        paper_literal: paper,
        lineage,
    };
    std::fs::write(&cmd.output, serde_json::to_string_pretty(&dump)?)
        .with_context(|| format!("writing {}", cmd.output.display()))?;
    println!("wrote {}", cmd.output.display());
    Ok(())
}

/// One parsed sweep CSV row.
struct SweepRow {
    ratio: f64,
    n_rho: f64,
    threshold: f64,
}

fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().context("empty CSV")?;
    if header.trim() != "ratio,rho_hat,se,n_rho,threshold" {
        bail!("unexpected CSV header {header:?}");
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [ratio, _rho, _se, n_rho, threshold] = fields.as_slice() else {
            bail!("malformed CSV row {line:?}");
        };
        rows.push(SweepRow {
            ratio: ratio.parse()?,
            n_rho: n_rho.parse()?,
            threshold: threshold.parse().unwrap_or(f64::NAN),
        });
    }
    if rows.is_empty() {
        bail!("CSV has no data rows");
    }
    Ok(rows)
}

fn cmd_plot(cmd: PlotCmd) -> Result<()> {
    let text = std::fs::read_to_string(&cmd.csv)
        .with_context(|| format!("reading {}", cmd.csv.display()))?;
    let rows = parse_sweep_csv(&text)?;
    let max = rows.iter().map(|r| r.n_rho).fold(1.0f64, f64::max);
    let width = cmd.width.max(10);
    println!("N*rho_hat vs ratio  (| marks N*rho = 1)");
    for row in &rows {
        let bar = ((row.n_rho / max) * width as f64).round() as usize;
        let one = ((1.0 / max) * width as f64).round() as usize;
        let mut line: Vec<char> = vec![' '; width + 1];
        for cell in line.iter_mut().take(bar.min(width)) {
            *cell = '*';
        }
        if one <= width {
            line[one] = '|';
        }
        let mark = if row.n_rho >= 1.0 { '+' } else { '-' };
        println!("{:>12.6} {mark} {}", row.ratio, line.into_iter().collect::<String>());
    }
    let threshold = rows[0].threshold;
    if threshold.is_finite() {
        println!("theory threshold: {threshold}");
    }
    Ok(())
}
