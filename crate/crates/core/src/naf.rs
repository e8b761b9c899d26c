//! Neighbor assignment by repeated matching.
//!
//! Iteration 0 runs the plain matching protocol and points both ends of
//! every matched edge at each other. Each of the following `k` iterations
//! reruns the protocol with only unassigned nodes recruiting and only
//! assigned nodes accepting, so new edges always join an unassigned node to
//! an assigned one; both endpoints are then (re-)pointed at each other.

use serde::Serialize;

use crate::graph::{Graph, NafAssignment};
use crate::matching::{
    run_matching_with, LogMode, MatchingOptions, ProtocolError, RateSchedule, RoleFilter, ScheduleParams,
};
use crate::radio::EnergyLedger;

/// `ceil(2 L ln n)`, the iteration count sufficient for load hint `L`.
pub fn iterations_for_load(load_hint: usize, n: usize) -> u64 {
    (2.0 * load_hint as f64 * (n.max(1) as f64).ln()).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NafRunConfig {
    /// Number of restricted iterations after the first matching.
    pub k: u64,
    pub c: f64,
    pub log_mode: LogMode,
    pub options: MatchingOptions,
}

impl NafRunConfig {
    pub fn new(k: u64, c: f64) -> Self {
        Self { k, c, log_mode: LogMode::Natural, options: MatchingOptions::default() }
    }

    pub fn from_load_hint(load_hint: usize, n: usize, c: f64) -> Self {
        Self::new(iterations_for_load(load_hint, n), c)
    }
}

/// Unassigned nodes may only recruit, assigned nodes may only accept.
pub fn restrict_roles(assigned: &[bool]) -> Vec<RoleFilter> {
    assigned
        .iter()
        .map(|&a| if a { RoleFilter::AcceptOnly } else { RoleFilter::RecruitOnly })
        .collect()
}

#[derive(Debug, Clone)]
pub struct AssignmentState {
    assigned: Vec<bool>,
    target: NafAssignment,
}

impl AssignmentState {
    pub fn new(n: usize) -> Self {
        Self { assigned: vec![false; n], target: NafAssignment::unassigned(n) }
    }

    pub fn assigned(&self) -> &[bool] {
        &self.assigned
    }

    pub fn assignment(&self) -> &NafAssignment {
        &self.target
    }

    fn pair(&mut self, u: usize, v: usize) {
        self.target.set(u, v);
        self.target.set(v, u);
        self.assigned[u] = true;
        self.assigned[v] = true;
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned.iter().filter(|&&a| a).count()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NafRun {
    pub assignment: NafAssignment,
    /// Assigned-node count after iteration `i`, for `i = 0..=k`.
    pub coverage: Vec<usize>,
    pub edges_per_iteration: Vec<usize>,
    /// Max in-degree after iteration `i`.
    pub load_per_iteration: Vec<usize>,
    pub ledger: EnergyLedger,
    /// Nodes with no neighbors; they can never be assigned.
    pub isolated: Vec<usize>,
    /// Whether the first matching left no edge with both ends unassigned.
    pub first_matching_maximal: bool,
    pub first_full_coverage: Option<u64>,
    pub rounds_per_iteration: u64,
}

fn iteration_seed(seed: u64, iteration: u64) -> u64 {
    // splitmix64 finalizer over (seed, iteration).
    let mut z = seed.wrapping_add(iteration.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn run_naf(g: &Graph, cfg: &NafRunConfig, seed: u64) -> Result<NafRun, ProtocolError> {
    let n = g.n();
    let params = ScheduleParams::new(cfg.c, n.max(1), cfg.log_mode)?;
    let schedule = RateSchedule::Standard(params);
    let mut state = AssignmentState::new(n);
    let mut ledger = EnergyLedger::new(n);
    let mut coverage = Vec::with_capacity(cfg.k as usize + 1);
    let mut edges_per_iteration = Vec::with_capacity(cfg.k as usize + 1);
    let mut load_per_iteration = Vec::with_capacity(cfg.k as usize + 1);
    let mut first_matching_maximal = true;
    let mut first_full_coverage = None;

    for iteration in 0..=cfg.k {
        let filters = (iteration > 0).then(|| restrict_roles(&state.assigned));
        let run = run_matching_with(g, schedule, filters.as_deref(), iteration_seed(seed, iteration), &cfg.options)?;
        for (u, v) in run.matching.pairs() {
            state.pair(u, v);
        }
        ledger.absorb(&run.ledger, iteration * params.t_max());
        if iteration == 0 {
            first_matching_maximal = g.edges().all(|(u, v)| state.assigned[u] || state.assigned[v]);
        }
        let covered = state.assigned_count();
        if covered == n && first_full_coverage.is_none() {
            first_full_coverage = Some(iteration);
        }
        coverage.push(covered);
        edges_per_iteration.push(run.matching.len());
        load_per_iteration.push(state.target.loads().into_iter().max().unwrap_or(0));
    }

    Ok(NafRun {
        assignment: state.target,
        coverage,
        edges_per_iteration,
        load_per_iteration,
        ledger,
        isolated: g.isolated_vertices(),
        first_matching_maximal,
        first_full_coverage,
        rounds_per_iteration: params.t_max(),
    })
}
