//! Machine-readable run reports.
//!
//! Reports carry `schema_version`; bump it whenever a field changes meaning.
//! Fields named `wall_ms` are the only ones that vary between repeated runs
//! with the same configuration and seed.

use serde::Serialize;

use crate::graph::IdMode;
use crate::matching::LogMode;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphInfo {
    pub source: String,
    pub n: usize,
    pub m: usize,
    pub max_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleInfo {
    pub c: f64,
    pub log_mode: LogMode,
    pub logn: f64,
    pub t_max: u64,
    pub total_timesteps: u64,
    /// `20 C logn^2`.
    pub energy_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedInfo {
    pub seed: u64,
    /// True when no seed was given and the default was used.
    pub defaulted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Percentiles {
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
}

impl Percentiles {
    /// Nearest-rank percentiles; `None` for an empty sample.
    pub fn of(mut values: Vec<u64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_unstable();
        let rank = |q: f64| {
            let idx = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len()) - 1;
            values[idx]
        };
        Some(Self { p50: rank(0.5), p90: rank(0.9), p99: rank(0.99), max: *values.last().unwrap() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchTrial {
    pub trial: usize,
    pub seed: u64,
    /// False when the batch budget ran out before this trial started.
    pub complete: bool,
    pub matching_size: Option<usize>,
    pub valid: Option<bool>,
    pub validity_error: Option<String>,
    pub maximal: Option<bool>,
    /// Per-round validity and monotonicity, when history capture is on.
    pub history_ok: Option<bool>,
    pub history_rounds_checked: Option<u64>,
    pub energy: Option<Vec<u64>>,
    pub max_energy: Option<u64>,
    pub participation_ok: Option<bool>,
    pub energy_bound_ok: Option<bool>,
    pub post_match_silence_ok: Option<bool>,
    pub timesteps: Option<u64>,
    pub latency_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl MatchTrial {
    pub fn incomplete(trial: usize, seed: u64) -> Self {
        Self {
            trial,
            seed,
            complete: false,
            matching_size: None,
            valid: None,
            validity_error: None,
            maximal: None,
            history_ok: None,
            history_rounds_checked: None,
            energy: None,
            max_energy: None,
            participation_ok: None,
            energy_bound_ok: None,
            post_match_silence_ok: None,
            timesteps: None,
            latency_ok: None,
            wall_ms: None,
        }
    }

    /// Any executed validity check failed.
    pub fn has_validity_violation(&self) -> bool {
        self.valid == Some(false) || self.history_ok == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchSummary {
    pub trials_requested: usize,
    pub trials_completed: usize,
    pub maximality_rate: Option<f64>,
    pub validity_violations: usize,
    pub energy_bound_violations: usize,
    pub participation_violations: usize,
    pub silence_violations: usize,
    pub latency_violations: usize,
    pub max_energy: Option<u64>,
    pub node_energy_percentiles: Option<Percentiles>,
    pub trial_max_energy_percentiles: Option<Percentiles>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl MatchSummary {
    pub fn from_trials(trials: &[MatchTrial]) -> Self {
        let done: Vec<&MatchTrial> = trials.iter().filter(|t| t.complete).collect();
        let count = |f: &dyn Fn(&MatchTrial) -> bool| done.iter().filter(|t| f(t)).count();
        let maximal = count(&|t| t.maximal == Some(true));
        let node_energies: Vec<u64> = done.iter().flat_map(|t| t.energy.iter().flatten().copied()).collect();
        let maxima: Vec<u64> = done.iter().filter_map(|t| t.max_energy).collect();
        Self {
            trials_requested: trials.len(),
            trials_completed: done.len(),
            maximality_rate: (!done.is_empty()).then(|| maximal as f64 / done.len() as f64),
            validity_violations: count(&MatchTrial::has_validity_violation),
            energy_bound_violations: count(&|t| t.energy_bound_ok == Some(false)),
            participation_violations: count(&|t| t.participation_ok == Some(false)),
            silence_violations: count(&|t| t.post_match_silence_ok == Some(false)),
            latency_violations: count(&|t| t.latency_ok == Some(false)),
            max_energy: maxima.iter().copied().max(),
            node_energy_percentiles: Percentiles::of(node_energies),
            trial_max_energy_percentiles: Percentiles::of(maxima),
            wall_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchConfigInfo {
    pub trials: usize,
    pub capture_history: bool,
    pub id_mode: IdMode,
    pub budget_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub graph: GraphInfo,
    pub seed: SeedInfo,
    pub schedule: ScheduleInfo,
    pub config: MatchConfigInfo,
    pub summary: MatchSummary,
    pub trials: Vec<MatchTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NafTrial {
    pub trial: usize,
    pub seed: u64,
    pub complete: bool,
    pub final_load: Option<usize>,
    pub total: Option<bool>,
    pub coverage_fraction: Option<f64>,
    /// Assigned fraction after each iteration `0..=k`.
    pub coverage_curve: Option<Vec<f64>>,
    pub load_curve: Option<Vec<usize>>,
    pub first_full_coverage: Option<u64>,
    pub first_matching_maximal: Option<bool>,
    pub load_bound_ok: Option<bool>,
    pub energy: Option<Vec<u64>>,
    pub max_energy: Option<u64>,
    pub participation_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl NafTrial {
    pub fn incomplete(trial: usize, seed: u64) -> Self {
        Self {
            trial,
            seed,
            complete: false,
            final_load: None,
            total: None,
            coverage_fraction: None,
            coverage_curve: None,
            load_curve: None,
            first_full_coverage: None,
            first_matching_maximal: None,
            load_bound_ok: None,
            energy: None,
            max_energy: None,
            participation_ok: None,
            wall_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NafSummary {
    pub trials_requested: usize,
    pub trials_completed: usize,
    pub full_coverage_rate: Option<f64>,
    pub load_bound_violations: usize,
    pub participation_violations: usize,
    pub max_load: Option<usize>,
    /// Mean uncovered fraction after each iteration, over completed trials.
    pub mean_uncovered_curve: Vec<f64>,
    pub max_energy: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl NafSummary {
    pub fn from_trials(trials: &[NafTrial]) -> Self {
        let done: Vec<&NafTrial> = trials.iter().filter(|t| t.complete).collect();
        let curves: Vec<&Vec<f64>> = done.iter().filter_map(|t| t.coverage_curve.as_ref()).collect();
        let len = curves.first().map_or(0, |c| c.len());
        let mean_uncovered_curve = (0..len)
            .map(|i| curves.iter().map(|c| 1.0 - c[i]).sum::<f64>() / curves.len() as f64)
            .collect();
        Self {
            trials_requested: trials.len(),
            trials_completed: done.len(),
            full_coverage_rate: (!done.is_empty())
                .then(|| done.iter().filter(|t| t.total == Some(true)).count() as f64 / done.len() as f64),
            load_bound_violations: done.iter().filter(|t| t.load_bound_ok == Some(false)).count(),
            participation_violations: done.iter().filter(|t| t.participation_ok == Some(false)).count(),
            max_load: done.iter().filter_map(|t| t.final_load).max(),
            mean_uncovered_curve,
            max_energy: done.iter().filter_map(|t| t.max_energy).max(),
            wall_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NafConfigInfo {
    pub trials: usize,
    pub k: u64,
    pub load_hint: Option<usize>,
    pub budget_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NafReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub graph: GraphInfo,
    pub seed: SeedInfo,
    pub schedule: ScheduleInfo,
    pub config: NafConfigInfo,
    pub isolated: Vec<usize>,
    pub summary: NafSummary,
    pub trials: Vec<NafTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub c: f64,
    pub graph: GraphInfo,
    pub schedule: ScheduleInfo,
    pub summary: MatchSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub family_template: String,
    pub seed: SeedInfo,
    pub trials_per_cell: usize,
    pub rows: Vec<SweepRow>,
}

/// Flat per-trial row for CSV output.
#[derive(Debug, Clone, Serialize)]
pub struct MatchCsvRow {
    pub trial: usize,
    pub seed: u64,
    pub complete: bool,
    pub matching_size: Option<usize>,
    pub valid: Option<bool>,
    pub maximal: Option<bool>,
    pub history_ok: Option<bool>,
    pub max_energy: Option<u64>,
    pub mean_energy: Option<f64>,
    pub participation_ok: Option<bool>,
    pub energy_bound_ok: Option<bool>,
    pub timesteps: Option<u64>,
    pub wall_ms: Option<f64>,
}

impl From<&MatchTrial> for MatchCsvRow {
    fn from(t: &MatchTrial) -> Self {
        Self {
            trial: t.trial,
            seed: t.seed,
            complete: t.complete,
            matching_size: t.matching_size,
            valid: t.valid,
            maximal: t.maximal,
            history_ok: t.history_ok,
            max_energy: t.max_energy,
            mean_energy: t
                .energy
                .as_ref()
                .filter(|e| !e.is_empty())
                .map(|e| e.iter().sum::<u64>() as f64 / e.len() as f64),
            participation_ok: t.participation_ok,
            energy_bound_ok: t.energy_bound_ok,
            timesteps: t.timesteps,
            wall_ms: t.wall_ms,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NafCsvRow {
    pub trial: usize,
    pub seed: u64,
    pub complete: bool,
    pub final_load: Option<usize>,
    pub total: Option<bool>,
    pub coverage_fraction: Option<f64>,
    pub first_full_coverage: Option<u64>,
    pub load_bound_ok: Option<bool>,
    pub max_energy: Option<u64>,
    pub wall_ms: Option<f64>,
}

impl From<&NafTrial> for NafCsvRow {
    fn from(t: &NafTrial) -> Self {
        Self {
            trial: t.trial,
            seed: t.seed,
            complete: t.complete,
            final_load: t.final_load,
            total: t.total,
            coverage_fraction: t.coverage_fraction,
            first_full_coverage: t.first_full_coverage,
            load_bound_ok: t.load_bound_ok,
            max_energy: t.max_energy,
            wall_ms: t.wall_ms,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCsvRow {
    pub n: usize,
    pub c: f64,
    pub m: usize,
    pub t_max: u64,
    pub trials_completed: usize,
    pub maximality_rate: Option<f64>,
    pub validity_violations: usize,
    pub energy_bound_violations: usize,
    pub max_energy: Option<u64>,
    pub energy_bound: f64,
}

impl From<&SweepRow> for SweepCsvRow {
    fn from(r: &SweepRow) -> Self {
        Self {
            n: r.n,
            c: r.c,
            m: r.graph.m,
            t_max: r.schedule.t_max,
            trials_completed: r.summary.trials_completed,
            maximality_rate: r.summary.maximality_rate,
            validity_violations: r.summary.validity_violations,
            energy_bound_violations: r.summary.energy_bound_violations,
            max_energy: r.summary.max_energy,
            energy_bound: r.schedule.energy_bound,
        }
    }
}

pub fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String, csv::Error> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
