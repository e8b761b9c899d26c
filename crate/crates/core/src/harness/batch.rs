//! Trial batches. Trials run in parallel; results are ordered by trial index
//! so reports do not depend on scheduling.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use super::edgelist::{read_edge_list, EdgeListError};
use super::report::*;
use crate::graph::{is_maximal, naf_load, validate_matching, Family, Graph, GraphError, IdMode};
use crate::matching::{run_matching, LogMode, MatchingOptions, ProtocolError, ScheduleError, ScheduleParams};
use crate::naf::{iterations_for_load, run_naf, NafRunConfig};
use crate::oracles::OracleError;
use crate::radio::EnergyLedger;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    EdgeList(#[from] EdgeListError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("encoding report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("encoding csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Generated { family: Family, seed: u64 },
}

impl GraphSource {
    pub fn load(&self) -> Result<Graph, HarnessError> {
        Ok(match self {
            GraphSource::File(path) => read_edge_list(path)?,
            GraphSource::Generated { family, seed } => family.generate(*seed)?,
        })
    }

    pub fn describe(&self) -> String {
        match self {
            GraphSource::File(path) => format!("file:{}", path.display()),
            GraphSource::Generated { family, seed } => format!("gen:{family}@{seed}"),
        }
    }
}

pub fn graph_info(source: String, g: &Graph) -> GraphInfo {
    GraphInfo { source, n: g.n(), m: g.edge_count(), max_degree: g.max_degree() }
}

pub fn schedule_info(p: &ScheduleParams) -> ScheduleInfo {
    ScheduleInfo {
        c: p.c(),
        log_mode: p.log_mode(),
        logn: p.logn(),
        t_max: p.t_max(),
        total_timesteps: p.total_timesteps(),
        energy_bound: p.energy_bound(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub c: f64,
    pub log_mode: LogMode,
    pub seed: u64,
    pub seed_defaulted: bool,
    pub trials: usize,
    pub capture_history: bool,
    pub id_mode: IdMode,
    /// Wall-clock budget; trials not started when it expires are marked incomplete.
    pub budget: Option<Duration>,
    pub record_timing: bool,
}

impl BatchConfig {
    pub fn new(c: f64, seed: u64, trials: usize) -> Self {
        Self {
            c,
            log_mode: LogMode::Natural,
            seed,
            seed_defaulted: false,
            trials,
            capture_history: false,
            id_mode: IdMode::Index,
            budget: None,
            record_timing: true,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trial count must be positive".into()));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(HarnessError::Config(format!("C must be positive, got {}", self.c)));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    fn seed_info(&self) -> SeedInfo {
        SeedInfo { seed: self.seed, defaulted: self.seed_defaulted }
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn participation_ok(ledger: &EnergyLedger) -> bool {
    (0..ledger.energy().len()).all(|v| ledger.energy()[v] <= 3 * ledger.participation_count(v))
}

pub fn run_match_trial(g: &Graph, params: &ScheduleParams, cfg: &BatchConfig, trial: usize) -> MatchTrial {
    let seed = cfg.trial_seed(trial);
    let start = Instant::now();
    let options = MatchingOptions { id_mode: cfg.id_mode, capture_history: cfg.capture_history, trace_capacity: None };
    let mut t = MatchTrial::incomplete(trial, seed);
    t.complete = true;
    match run_matching(g, params, seed, &options) {
        Ok(run) => {
            let validity = validate_matching(g, &run.matching);
            t.valid = Some(validity.is_ok());
            t.validity_error = validity.err().map(|e| e.to_string());
            t.maximal = is_maximal(g, &run.matching).ok();
            t.matching_size = Some(run.matching.len());
            if let Some(h) = &run.history {
                t.history_ok = Some(h.violations.is_empty() && h.is_chain());
                t.history_rounds_checked = Some(h.rounds_checked);
            }
            let max_energy = run.ledger.max_energy();
            t.max_energy = Some(max_energy);
            t.energy_bound_ok = Some(max_energy as f64 <= params.energy_bound());
            t.participation_ok = Some(participation_ok(&run.ledger));
            t.post_match_silence_ok = Some((0..g.n()).all(|v| match run.matched_round[v] {
                Some(r) => run.ledger.participated_rounds(v).last().is_some_and(|&last| last <= r),
                None => true,
            }));
            t.timesteps = Some(run.timesteps);
            t.latency_ok = Some(run.timesteps == params.total_timesteps());
            t.energy = Some(run.ledger.energy().to_vec());
        }
        Err(ProtocolError::Inconsistent(violation)) => {
            t.valid = Some(false);
            t.validity_error = Some(violation.to_string());
        }
        Err(other) => {
            t.valid = Some(false);
            t.validity_error = Some(other.to_string());
        }
    }
    if cfg.record_timing {
        t.wall_ms = Some(elapsed_ms(start));
    }
    t
}

/// Runs the matching protocol `cfg.trials` times on `g`, seeds `seed + i`.
pub fn run_match_batch(g: &Graph, source: String, cfg: &BatchConfig) -> Result<MatchReport, HarnessError> {
    cfg.validate()?;
    let params = ScheduleParams::new(cfg.c, g.n().max(1), cfg.log_mode)?;
    let start = Instant::now();
    let trials: Vec<MatchTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| match cfg.budget {
            Some(b) if start.elapsed() >= b => MatchTrial::incomplete(i, cfg.trial_seed(i)),
            _ => run_match_trial(g, &params, cfg, i),
        })
        .collect();
    let mut summary = MatchSummary::from_trials(&trials);
    if cfg.record_timing {
        summary.wall_ms = Some(elapsed_ms(start));
    }
    Ok(MatchReport {
        schema_version: SCHEMA_VERSION,
        command: "match",
        graph: graph_info(source, g),
        seed: cfg.seed_info(),
        schedule: schedule_info(&params),
        config: MatchConfigInfo {
            trials: cfg.trials,
            capture_history: cfg.capture_history,
            id_mode: cfg.id_mode,
            budget_secs: cfg.budget.map(|b| b.as_secs_f64()),
        },
        summary,
        trials,
    })
}

/// Iteration count for a NAF batch: given directly or derived from a load hint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iterations {
    Fixed(u64),
    FromLoadHint(usize),
}

impl Iterations {
    pub fn resolve(self, n: usize) -> u64 {
        match self {
            Iterations::Fixed(k) => k,
            Iterations::FromLoadHint(l) => iterations_for_load(l, n),
        }
    }
}

pub fn run_naf_trial(g: &Graph, naf: &NafRunConfig, cfg: &BatchConfig, trial: usize) -> NafTrial {
    let seed = cfg.trial_seed(trial);
    let start = Instant::now();
    let mut t = NafTrial::incomplete(trial, seed);
    match run_naf(g, naf, seed) {
        Ok(run) => {
            let n = g.n().max(1) as f64;
            t.complete = true;
            let load = naf_load(g, &run.assignment).expect("protocol assigns along edges");
            t.final_load = Some(load.load);
            t.total = Some(!load.partial);
            t.coverage_fraction = Some(run.assignment.assigned_count() as f64 / n);
            t.coverage_curve = Some(run.coverage.iter().map(|&c| c as f64 / n).collect());
            t.load_curve = Some(run.load_per_iteration.clone());
            t.first_full_coverage = run.first_full_coverage;
            t.first_matching_maximal = Some(run.first_matching_maximal);
            t.load_bound_ok = Some(load.load as u64 <= naf.k + 1);
            t.max_energy = Some(run.ledger.max_energy());
            t.participation_ok = Some(participation_ok(&run.ledger));
            t.energy = Some(run.ledger.energy().to_vec());
        }
        Err(_) => t.complete = false,
    }
    if cfg.record_timing {
        t.wall_ms = Some(elapsed_ms(start));
    }
    t
}

pub fn run_naf_batch(
    g: &Graph,
    source: String,
    cfg: &BatchConfig,
    iterations: Iterations,
) -> Result<NafReport, HarnessError> {
    cfg.validate()?;
    let params = ScheduleParams::new(cfg.c, g.n().max(1), cfg.log_mode)?;
    let k = iterations.resolve(g.n());
    let naf = NafRunConfig {
        k,
        c: cfg.c,
        log_mode: cfg.log_mode,
        options: MatchingOptions { id_mode: cfg.id_mode, ..Default::default() },
    };
    let start = Instant::now();
    let trials: Vec<NafTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| match cfg.budget {
            Some(b) if start.elapsed() >= b => NafTrial::incomplete(i, cfg.trial_seed(i)),
            _ => run_naf_trial(g, &naf, cfg, i),
        })
        .collect();
    let mut summary = NafSummary::from_trials(&trials);
    if cfg.record_timing {
        summary.wall_ms = Some(elapsed_ms(start));
    }
    Ok(NafReport {
        schema_version: SCHEMA_VERSION,
        command: "naf",
        graph: graph_info(source, g),
        seed: cfg.seed_info(),
        schedule: schedule_info(&params),
        config: NafConfigInfo {
            trials: cfg.trials,
            k,
            load_hint: match iterations {
                Iterations::FromLoadHint(l) => Some(l),
                Iterations::Fixed(_) => None,
            },
            budget_secs: cfg.budget.map(|b| b.as_secs_f64()),
        },
        isolated: g.isolated_vertices(),
        summary,
        trials,
    })
}

/// Substitutes `{n}` in a family template such as `erdos_renyi:{n},0.2`.
pub fn family_for(template: &str, n: usize) -> Result<Family, HarnessError> {
    if !template.contains("{n}") {
        return Err(HarnessError::Config(format!("family template {template:?} has no {{n}} placeholder")));
    }
    Ok(template.replace("{n}", &n.to_string()).parse()?)
}

/// Grid of match batches over node counts and constants. Each cell's graph
/// is generated with the batch seed.
pub fn run_sweep(template: &str, ns: &[usize], cs: &[f64], cfg: &BatchConfig) -> Result<SweepReport, HarnessError> {
    let mut rows = Vec::with_capacity(ns.len() * cs.len());
    for &n in ns {
        let family = family_for(template, n)?;
        let g = family.generate(cfg.seed)?;
        let source = GraphSource::Generated { family, seed: cfg.seed }.describe();
        for &c in cs {
            let cell = BatchConfig { c, ..cfg.clone() };
            let report = run_match_batch(&g, source.clone(), &cell)?;
            rows.push(SweepRow { n, c, graph: report.graph, schedule: report.schedule, summary: report.summary });
        }
    }
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        family_template: template.to_string(),
        seed: cfg.seed_info(),
        trials_per_cell: cfg.trials,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(s: &str) -> Graph {
        s.parse::<Family>().unwrap().generate(0).unwrap()
    }

    #[test]
    fn path2_batch() {
        let g = gen("path:2");
        let report = run_match_batch(&g, "t".into(), &BatchConfig::new(100.0, 7, 10)).unwrap();
        assert_eq!(report.summary.maximality_rate, Some(1.0));
        assert_eq!(report.summary.validity_violations, 0);
        assert!(report.summary.max_energy.unwrap() as f64 <= 2000.0);
        assert_eq!(report.schedule.energy_bound, 2000.0);
        assert_eq!(report.trials[3].seed, 10);
    }

    #[test]
    fn empty_graph_batch() {
        let g = Graph::empty(64);
        let report = run_match_batch(&g, "t".into(), &BatchConfig::new(4.0, 0, 1)).unwrap();
        assert_eq!(report.trials[0].matching_size, Some(0));
        assert_eq!(report.trials[0].maximal, Some(true));
    }

    #[test]
    fn exhausted_budget_marks_incomplete() {
        let g = gen("complete:16");
        let mut cfg = BatchConfig::new(4.0, 0, 8);
        cfg.budget = Some(Duration::ZERO);
        let report = run_match_batch(&g, "t".into(), &cfg).unwrap();
        assert_eq!(report.summary.trials_completed, 0);
        assert!(report.trials.iter().all(|t| !t.complete && t.valid.is_none()));
        assert_eq!(report.summary.maximality_rate, None);
    }

    #[test]
    fn zero_trials_rejected() {
        let g = gen("path:2");
        assert!(matches!(
            run_match_batch(&g, "t".into(), &BatchConfig::new(4.0, 0, 0)),
            Err(HarnessError::Config(_))
        ));
        assert!(run_match_batch(&g, "t".into(), &BatchConfig::new(-1.0, 0, 1)).is_err());
    }

    #[test]
    fn naf_k0_on_path2() {
        let g = gen("path:2");
        let r = run_naf_batch(&g, "t".into(), &BatchConfig::new(4.0, 0, 3), Iterations::Fixed(0)).unwrap();
        assert!(r.trials.iter().all(|t| t.total == Some(true) && t.final_load == Some(1)));
        assert_eq!(r.summary.mean_uncovered_curve, vec![0.0]);
    }

    #[test]
    fn naf_k0_no_perfect_matching() {
        let g = gen("star:3");
        let r = run_naf_batch(&g, "t".into(), &BatchConfig::new(4.0, 0, 3), Iterations::Fixed(0)).unwrap();
        assert!(r.trials.iter().all(|t| t.coverage_fraction == Some(0.5)));
        assert_eq!(r.summary.full_coverage_rate, Some(0.0));
    }

    #[test]
    fn sweep_template() {
        assert!(family_for("complete:5", 3).is_err());
        assert_eq!(family_for("path:{n}", 3).unwrap(), Family::Path { n: 3 });
        let mut cfg = BatchConfig::new(4.0, 1, 3);
        cfg.record_timing = false;
        let r = run_sweep("erdos_renyi:{n},0.3", &[8, 12], &[2.0, 4.0], &cfg).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!((r.rows[3].n, r.rows[3].c), (12, 4.0));
    }
}
