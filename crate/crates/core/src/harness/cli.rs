//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use super::batch::*;
use super::report::*;
use crate::graph::{is_maximal, Family, Graph, IdMode};
use crate::matching::LogMode;
use crate::oracles::{self, EdgeOrder, Enumeration};

pub const OUT_DIR_ENV: &str = "RADIOMATCH_OUT_DIR";
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "radiomatch", version, about = "Low-energy radio network matching simulator and oracles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the maximal matching protocol for a batch of trials.
    Match(MatchArgs),
    /// Build neighbor assignments by repeated matching.
    Naf(NafArgs),
    /// Exact centralized computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Matching batches over a grid of node counts and constants.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GraphArgs {
    /// Generator spec, e.g. `path:5`, `erdos_renyi:64,0.2`, `grid:4,4`.
    #[arg(long = "gen", value_name = "FAMILY", conflicts_with = "graph")]
    pub generator: Option<Family>,
    /// Edge-list file.
    #[arg(long, value_name = "PATH")]
    pub graph: Option<PathBuf>,
    /// Seed for random generators; defaults to the run seed.
    #[arg(long)]
    pub graph_seed: Option<u64>,
}

impl GraphArgs {
    fn source(&self, run_seed: u64) -> Result<GraphSource, HarnessError> {
        match (&self.generator, &self.graph) {
            (Some(family), None) => {
                Ok(GraphSource::Generated { family: family.clone(), seed: self.graph_seed.unwrap_or(run_seed) })
            }
            (None, Some(path)) => Ok(GraphSource::File(path.clone())),
            _ => Err(HarnessError::Config("give exactly one of --gen or --graph".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file. Without it, reports go to `$RADIOMATCH_OUT_DIR/<command>.<ext>`
    /// when that variable is set, else to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Leave wall-clock fields out so repeated runs are byte-identical.
    #[arg(long)]
    pub omit_timing: bool,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[arg(long = "C", visible_alias = "c", default_value_t = crate::matching::DEFAULT_C)]
    pub c: f64,
    #[arg(long, visible_alias = "log-mode", value_enum, default_value_t = LogArg::Natural)]
    pub log: LogArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Stop starting new trials after this many seconds.
    #[arg(long, value_name = "SECS")]
    pub budget_secs: Option<f64>,
    /// Draw random wire ids of FACTOR * ceil(log2 n) bits instead of using indices.
    #[arg(long, value_name = "FACTOR")]
    pub random_ids: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogArg {
    Natural,
    Binary,
}

impl RunArgs {
    fn batch_config(&self, record_timing: bool) -> Result<BatchConfig, HarnessError> {
        if self.budget_secs.is_some_and(|b| !(b.is_finite() && b >= 0.0)) {
            return Err(HarnessError::Config("--budget-secs must be non-negative".into()));
        }
        Ok(BatchConfig {
            c: self.c,
            log_mode: match self.log {
                LogArg::Natural => LogMode::Natural,
                LogArg::Binary => LogMode::Binary,
            },
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            seed_defaulted: self.seed.is_none(),
            trials: self.trials,
            capture_history: false,
            id_mode: self.random_ids.map_or(IdMode::Index, |factor| IdMode::Random { factor }),
            budget: self.budget_secs.map(Duration::from_secs_f64),
            record_timing,
        })
    }
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Check the encoded matching after every round.
    #[arg(long)]
    pub history: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct NafArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Restricted iterations after the first matching.
    #[arg(long, conflicts_with = "load_hint")]
    pub k: Option<u64>,
    /// Load hint L; sets k = ceil(2 L ln n).
    #[arg(long = "L", visible_alias = "load-hint", id = "load_hint")]
    pub load_hint: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Family with an `{n}` placeholder, e.g. `erdos_renyi:{n},0.2`.
    #[arg(long)]
    pub family: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long = "C", visible_alias = "c", value_delimiter = ',', required = true)]
    pub c: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, visible_alias = "log-mode", value_enum, default_value_t = LogArg::Natural)]
    pub log: LogArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Matching cover number.
    Mc(OracleGraphArgs),
    /// Minimum neighbor-assignment load.
    Nafload(OracleGraphArgs),
    /// Exact one-round pairing probability of an edge versus its lower bound.
    Pairprob(PairprobArgs),
    /// Check that minimum NAF load and matching cover number agree.
    #[command(name = "verify_thm2", alias = "verify-thm2")]
    VerifyThm2(VerifyArgs),
    /// Centralized greedy matching over a shuffled edge order.
    Greedy(GreedyArgs),
}

#[derive(Debug, Args)]
pub struct OracleGraphArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PairprobArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_parser = parse_pair)]
    pub edge: (usize, usize),
    #[arg(long)]
    pub r: f64,
    /// Comma-separated nodes already matched.
    #[arg(long, value_delimiter = ',')]
    pub matched: Vec<usize>,
    /// Enumerate every unmatched node instead of the distance-2 neighborhood.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Check every connected graph on 2..=N nodes, up to isomorphism.
    #[arg(long, value_name = "N")]
    pub all_connected_graphs_upto: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GreedyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Edge shuffle seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `u,v`, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((parse(a)?, parse(b)?))
}

/// Rendered command output plus the process exit status.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub exit_code: i32,
    pub default_name: &'static str,
    pub extension: &'static str,
}

fn render<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn outcome(body: String, exit_code: i32, name: &'static str, format: Format) -> Outcome {
    let extension = match format {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Text => "txt",
    };
    Outcome { body, exit_code, default_name: name, extension }
}

fn load_graph(args: &GraphArgs, seed: u64) -> Result<(Graph, String), HarnessError> {
    let source = args.source(seed)?;
    Ok((source.load()?, source.describe()))
}

pub fn execute(cli: &Cli) -> Result<(Outcome, OutputArgs), HarnessError> {
    match &cli.command {
        Command::Match(a) => Ok((cmd_match(a)?, a.output.clone())),
        Command::Naf(a) => Ok((cmd_naf(a)?, a.output.clone())),
        Command::Sweep(a) => Ok((cmd_sweep(a)?, a.output.clone())),
        Command::Oracle(o) => {
            let output = match o {
                OracleCommand::Mc(a) | OracleCommand::Nafload(a) => &a.output,
                OracleCommand::Pairprob(a) => &a.output,
                OracleCommand::VerifyThm2(a) => &a.output,
                OracleCommand::Greedy(a) => &a.output,
            };
            Ok((cmd_oracle(o)?, output.clone()))
        }
    }
}

fn cmd_match(a: &MatchArgs) -> Result<Outcome, HarnessError> {
    let mut cfg = a.run.batch_config(!a.output.omit_timing)?;
    cfg.capture_history = a.history;
    let (g, source) = load_graph(&a.graph, cfg.seed)?;
    let report = run_match_batch(&g, source, &cfg)?;
    let exit = i32::from(report.summary.validity_violations > 0);
    let body = match a.output.format {
        Format::Json => render(&report)?,
        Format::Csv => to_csv(report.trials.iter().map(MatchCsvRow::from))?,
        Format::Text => {
            let s = &report.summary;
            format!(
                "graph {} (n={}, m={}), C={}, t_max={}\ntrials {}/{} maximality_rate={} validity_violations={} max_energy={} (bound {:.1})\n",
                report.graph.source,
                report.graph.n,
                report.graph.m,
                report.schedule.c,
                report.schedule.t_max,
                s.trials_completed,
                s.trials_requested,
                s.maximality_rate.map_or("n/a".into(), |r| format!("{r:.4}")),
                s.validity_violations,
                s.max_energy.map_or("n/a".into(), |e| e.to_string()),
                report.schedule.energy_bound,
            )
        }
    };
    Ok(outcome(body, exit, "match", a.output.format))
}

fn cmd_naf(a: &NafArgs) -> Result<Outcome, HarnessError> {
    let cfg = a.run.batch_config(!a.output.omit_timing)?;
    let iterations = match (a.k, a.load_hint) {
        (Some(k), None) => Iterations::Fixed(k),
        (None, Some(l)) if l > 0 => Iterations::FromLoadHint(l),
        _ => return Err(HarnessError::Config("give exactly one of --k or a positive --L".into())),
    };
    let (g, source) = load_graph(&a.graph, cfg.seed)?;
    let report = run_naf_batch(&g, source, &cfg, iterations)?;
    let body = match a.output.format {
        Format::Json => render(&report)?,
        Format::Csv => to_csv(report.trials.iter().map(NafCsvRow::from))?,
        Format::Text => {
            let s = &report.summary;
            format!(
                "graph {} (n={}), k={}\ntrials {}/{} full_coverage_rate={} max_load={} load_bound_violations={}\n",
                report.graph.source,
                report.graph.n,
                report.config.k,
                s.trials_completed,
                s.trials_requested,
                s.full_coverage_rate.map_or("n/a".into(), |r| format!("{r:.4}")),
                s.max_load.map_or("n/a".into(), |l| l.to_string()),
                s.load_bound_violations,
            )
        }
    };
    let exit = i32::from(report.summary.load_bound_violations > 0);
    Ok(outcome(body, exit, "naf", a.output.format))
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome, HarnessError> {
    let run = RunArgs { c: 1.0, log: a.log, seed: a.seed, trials: a.trials, budget_secs: None, random_ids: None };
    let cfg = run.batch_config(!a.output.omit_timing)?;
    if a.c.iter().any(|&c| !(c.is_finite() && c > 0.0)) || a.n.contains(&0) {
        return Err(HarnessError::Config("--n and --C values must be positive".into()));
    }
    let report = run_sweep(&a.family, &a.n, &a.c, &cfg)?;
    let exit = i32::from(report.rows.iter().any(|r| r.summary.validity_violations > 0));
    let body = match a.output.format {
        Format::Json => render(&report)?,
        Format::Csv | Format::Text => to_csv(report.rows.iter().map(SweepCsvRow::from))?,
    };
    Ok(outcome(body, exit, "sweep", a.output.format))
}

fn simple(name: &'static str, format: Format, json: serde_json::Value, text: String) -> Result<Outcome, HarnessError> {
    let body = match format {
        Format::Text => text + "\n",
        _ => render(&json)?,
    };
    Ok(outcome(body, 0, name, format))
}

fn cmd_oracle(o: &OracleCommand) -> Result<Outcome, HarnessError> {
    match o {
        OracleCommand::Mc(a) => {
            let (g, source) = load_graph(&a.graph, DEFAULT_SEED)?;
            let mc = oracles::matching_cover_number(&g)?;
            simple("oracle-mc", a.output.format, json!({"oracle": "mc", "graph": source, "value": mc}), mc.to_string())
        }
        OracleCommand::Nafload(a) => {
            let (g, source) = load_graph(&a.graph, DEFAULT_SEED)?;
            let load = oracles::min_naf_load(&g)?;
            simple(
                "oracle-nafload",
                a.output.format,
                json!({"oracle": "nafload", "graph": source, "value": load}),
                load.to_string(),
            )
        }
        OracleCommand::Pairprob(a) => {
            let (g, source) = load_graph(&a.graph, DEFAULT_SEED)?;
            let mut matched = vec![false; g.n()];
            for &v in &a.matched {
                *matched
                    .get_mut(v)
                    .ok_or_else(|| HarnessError::Config(format!("matched node {v} out of range")))? = true;
            }
            let method = if a.full { Enumeration::Full } else { Enumeration::Local };
            let exact = oracles::pair_probability_with(&g, &matched, a.r, a.edge, method)?;
            let delta = oracles::residual_max_degree(&g, &matched);
            let bound = oracles::pairing_lower_bound(a.r, delta);
            let holds = exact.value >= bound - 1e-12;
            simple(
                "oracle-pairprob",
                a.output.format,
                json!({
                    "oracle": "pairprob",
                    "graph": source,
                    "edge": [a.edge.0, a.edge.1],
                    "r": a.r,
                    "matched": a.matched,
                    "exact": exact.value,
                    "bound": bound,
                    "residual_max_degree": delta,
                    "exact_ge_bound": holds,
                    "enumerated_nodes": exact.enumerated,
                    "method": exact.method,
                    "favorable_by_active_count": exact.favorable,
                }),
                format!("exact {:.12} bound {:.12} exact>=bound {}", exact.value, bound, holds),
            )
        }
        OracleCommand::VerifyThm2(a) => verify_thm2(a),
        OracleCommand::Greedy(a) => {
            let seed = a.seed.unwrap_or(DEFAULT_SEED);
            let (g, source) = load_graph(&a.graph, seed)?;
            let m = oracles::greedy_matching(&g, &EdgeOrder::Seeded(seed));
            let maximal = is_maximal(&g, &m).expect("greedy output is a matching");
            let pairs: Vec<(usize, usize)> = m.pairs().collect();
            simple(
                "oracle-greedy",
                a.output.format,
                json!({"oracle": "greedy", "graph": source, "seed": seed, "seed_defaulted": a.seed.is_none(),
                       "size": m.len(), "maximal": maximal, "pairs": pairs}),
                format!("size {} maximal {} pairs {:?}", m.len(), maximal, pairs),
            )
        }
    }
}

fn verify_thm2(a: &VerifyArgs) -> Result<Outcome, HarnessError> {
    let mut graphs = Vec::new();
    let label = match a.all_connected_graphs_upto {
        Some(upto) => {
            for n in 2..=upto {
                graphs.extend(oracles::connected_graphs(n)?);
            }
            format!("all connected graphs on 2..={upto} nodes")
        }
        None => {
            let (g, source) = load_graph(&a.graph, DEFAULT_SEED)?;
            graphs.push(g);
            source
        }
    };
    let mut counterexamples = Vec::new();
    let mut checks = Vec::new();
    for g in &graphs {
        let check = oracles::verify_naf_mc_theorem(g)?;
        if !check.consistent {
            counterexamples.push(json!({"edges": g.edges().collect::<Vec<_>>(), "n": g.n(), "check": check}));
        }
        checks.push(check);
    }
    let verdict = format!(
        "{}: {} graphs, {} counterexamples",
        if counterexamples.is_empty() { "consistent" } else { "inconsistent" },
        graphs.len(),
        counterexamples.len()
    );
    let exit = i32::from(!counterexamples.is_empty());
    let mut body = json!({
        "oracle": "verify_thm2",
        "graphs": label,
        "count": graphs.len(),
        "counterexamples": counterexamples,
        "verdict": verdict,
    });
    if a.all_connected_graphs_upto.is_none() {
        body["check"] = json!(checks[0]);
    }
    let mut out = simple("oracle-verify_thm2", a.output.format, body, verdict)?;
    out.exit_code = exit;
    Ok(out)
}

/// Parses `args`, runs the command, writes the output, and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli).and_then(|(out, output)| write_outcome(&out, &output).map(|_| out.exit_code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn write_outcome(out: &Outcome, args: &OutputArgs) -> Result<(), HarnessError> {
    let path = args.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("{}.{}", out.default_name, out.extension)))
    });
    match path {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, &out.body)?;
        }
        None => std::io::stdout().write_all(out.body.as_bytes())?,
    }
    Ok(())
}
