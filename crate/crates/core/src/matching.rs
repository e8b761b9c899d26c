//! Low-energy randomized maximal matching over the radio engine.
//!
//! Each unmatched node wakes up in a round with probability `r(t)`, taking
//! the recruiter or accepter role with equal odds, and tries a three-message
//! handshake with a neighbor:
//!
//! 1. the recruiter sends `Solo(me)`, the accepter listens;
//! 2. an accepter that heard `Solo(x)` sends `Pair(x, me)`, the recruiter listens;
//! 3. a recruiter that heard `Pair(me, y)` records `y` and confirms with
//!    `Pair(me, y)`; the accepter listens and records `x` on hearing `Pair(x, me)`.
//!
//! The participation rate rises from about `3/n` to `3/4` over
//! `t_max = ceil(C n log n)` rounds. Matched nodes sleep out the clock.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{validate_matching, Graph, GraphError, IdMode, Matching, MatchingViolation, NodeIds};
use crate::radio::{
    self, Action, ActionTrace, EnergyLedger, EngineConfig, EngineError, Message, NodeProcess, NodeRng,
    Phase, Reception, RoundClock, TraceKind, WireId, TIMESTEPS_PER_ROUND,
};

pub const DEFAULT_C: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("round {round} outside 1..={t_max}")]
    RoundOutOfRange { round: u64, t_max: u64 },
    #[error("C must be positive and finite, got {0}")]
    BadConstant(f64),
    #[error("schedule needs at least one node")]
    NoNodes,
    #[error("participation rate {0} outside (0, 1]")]
    BadRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogMode {
    #[default]
    Natural,
    Binary,
}

impl LogMode {
    /// `max(1, log n)` in the chosen base.
    pub fn guarded_log(self, n: usize) -> f64 {
        let raw = match self {
            LogMode::Natural => (n as f64).ln(),
            LogMode::Binary => (n as f64).log2(),
        };
        raw.max(1.0)
    }
}

/// Participation schedule `r(t) = 3 C logn / (4 C logn + t_max - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleParams {
    c: f64,
    n: usize,
    log_mode: LogMode,
    logn: f64,
    t_max: u64,
}

impl ScheduleParams {
    pub fn new(c: f64, n: usize, log_mode: LogMode) -> Result<Self, ScheduleError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(ScheduleError::BadConstant(c));
        }
        if n == 0 {
            return Err(ScheduleError::NoNodes);
        }
        let logn = log_mode.guarded_log(n);
        let t_max = (c * n as f64 * logn).ceil() as u64;
        Ok(Self { c, n, log_mode, logn, t_max })
    }

    pub fn with_default_c(n: usize) -> Result<Self, ScheduleError> {
        Self::new(DEFAULT_C, n, LogMode::Natural)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_mode(&self) -> LogMode {
        self.log_mode
    }

    pub fn logn(&self) -> f64 {
        self.logn
    }

    pub fn t_max(&self) -> u64 {
        self.t_max
    }

    pub fn total_timesteps(&self) -> u64 {
        TIMESTEPS_PER_ROUND * self.t_max
    }

    /// Per-node energy ceiling `20 C logn^2` that holds with high probability.
    pub fn energy_bound(&self) -> f64 {
        20.0 * self.c * self.logn * self.logn
    }

    pub fn rate(&self, t: u64) -> Result<f64, ScheduleError> {
        if t == 0 || t > self.t_max {
            return Err(ScheduleError::RoundOutOfRange { round: t, t_max: self.t_max });
        }
        let four_cl = 4.0 * self.c * self.logn;
        // Written as 3/4 times a ratio so that r(t_max) is exactly 0.75.
        Ok(0.75 * (four_cl / (four_cl + (self.t_max - t) as f64)))
    }
}

pub fn rate(t: u64, params: &ScheduleParams) -> Result<f64, ScheduleError> {
    params.rate(t)
}

/// Rate schedule driving a protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RateSchedule {
    Standard(ScheduleParams),
    /// A fixed rate for a fixed number of rounds; used to sample single rounds.
    Constant { rate: f64, rounds: u64 },
}

impl RateSchedule {
    pub fn constant(rate: f64, rounds: u64) -> Result<Self, ScheduleError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(ScheduleError::BadRate(rate));
        }
        Ok(RateSchedule::Constant { rate, rounds })
    }

    pub fn rounds(&self) -> u64 {
        match self {
            RateSchedule::Standard(p) => p.t_max(),
            RateSchedule::Constant { rounds, .. } => *rounds,
        }
    }

    fn rate_at(&self, t: u64) -> f64 {
        match self {
            RateSchedule::Standard(p) => p.rate(t).expect("round within schedule"),
            RateSchedule::Constant { rate, .. } => *rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Recruiter,
    Accepter,
    Asleep,
}

/// Recruiter iff `x <= r/2`, accepter iff `r/2 < x <= r`, asleep otherwise.
pub fn choose_role(x: f64, r: f64) -> Role {
    if x <= r / 2.0 {
        Role::Recruiter
    } else if x <= r {
        Role::Accepter
    } else {
        Role::Asleep
    }
}

/// Uniform draw on `[0, 1]` from a full 64-bit word.
pub fn sample_unit(rng: &mut NodeRng) -> f64 {
    use rand::RngCore;
    rng.next_u64() as f64 * (1.0 / 18_446_744_073_709_551_616.0)
}

/// Per-node restriction on which handshake roles may be taken. A disallowed
/// role becomes `Asleep`; sampling probabilities are unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RoleFilter {
    #[default]
    Any,
    RecruitOnly,
    AcceptOnly,
}

impl RoleFilter {
    pub fn apply(self, role: Role) -> Role {
        match (self, role) {
            (RoleFilter::RecruitOnly, Role::Accepter) | (RoleFilter::AcceptOnly, Role::Recruiter) => Role::Asleep,
            _ => role,
        }
    }
}

/// The per-node state machine.
#[derive(Debug, Clone)]
pub struct MatchingNode {
    my_id: WireId,
    schedule: RateSchedule,
    filter: RoleFilter,
    partner: Option<WireId>,
    retired: bool,
    matched_round: Option<u64>,
    role: Role,
    heard: Option<Message>,
    proposed: bool,
}

impl MatchingNode {
    pub fn new(my_id: WireId, schedule: RateSchedule, filter: RoleFilter) -> Self {
        Self {
            my_id,
            schedule,
            filter,
            partner: None,
            retired: false,
            matched_round: None,
            role: Role::Asleep,
            heard: None,
            proposed: false,
        }
    }

    /// A node that is already matched outside this run and stays silent.
    pub fn retired(my_id: WireId, schedule: RateSchedule) -> Self {
        Self { retired: true, ..Self::new(my_id, schedule, RoleFilter::Any) }
    }

    pub fn partner(&self) -> Option<WireId> {
        self.partner
    }

    pub fn matched_round(&self) -> Option<u64> {
        self.matched_round
    }

    pub fn role(&self) -> Role {
        self.role
    }

    fn set_partner(&mut self, partner: WireId, round: u64) {
        debug_assert!(self.partner.is_none(), "partner is write-once");
        self.partner = Some(partner);
        self.matched_round = Some(round);
    }

    /// Role choice at the start of a round: one uniform draw per unmatched node.
    fn start_round(&mut self, round: u64, rng: &mut NodeRng) -> Role {
        if self.retired || self.partner.is_some() || round > self.schedule.rounds() {
            return Role::Asleep;
        }
        let x = sample_unit(rng);
        self.filter.apply(choose_role(x, self.schedule.rate_at(round)))
    }
}

impl NodeProcess for MatchingNode {
    fn act(&mut self, step: u64, rng: &mut NodeRng) -> Action {
        let clock = RoundClock::at(step);
        match clock.phase {
            Phase::First => {
                self.heard = None;
                self.proposed = false;
                self.role = self.start_round(clock.round, rng);
                match self.role {
                    Role::Recruiter => Action::Send(Message::Solo(self.my_id)),
                    Role::Accepter => Action::Listen,
                    Role::Asleep => Action::Sleep,
                }
            }
            Phase::Second => match (self.role, self.heard) {
                (Role::Recruiter, _) => Action::Listen,
                (Role::Accepter, Some(Message::Solo(x))) => {
                    self.proposed = true;
                    Action::Send(Message::Pair(x, self.my_id))
                }
                _ => Action::Sleep,
            },
            Phase::Third => match (self.role, self.heard) {
                (Role::Recruiter, Some(Message::Pair(x, y))) if x == self.my_id => {
                    self.set_partner(y, clock.round);
                    Action::Send(Message::Pair(x, y))
                }
                (Role::Accepter, _) if self.proposed => Action::Listen,
                _ => Action::Sleep,
            },
        }
    }

    fn observe(&mut self, step: u64, reception: Reception) {
        let Reception::Received(msg) = reception else {
            return;
        };
        let clock = RoundClock::at(step);
        match (clock.phase, self.role) {
            (Phase::First, Role::Accepter) | (Phase::Second, Role::Recruiter) => self.heard = Some(msg),
            (Phase::Third, Role::Accepter) if self.proposed => {
                if let Message::Pair(x, y) = msg {
                    if y == self.my_id {
                        self.set_partner(x, clock.round);
                    }
                }
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Ids(#[from] GraphError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("partner pointers do not encode a matching: {0}")]
    Inconsistent(MatchingViolation),
    #[error("node {node} recorded unknown partner id {wire}")]
    UnknownPartner { node: usize, wire: WireId },
    #[error("{got} role filters for {n} nodes")]
    FilterCount { got: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchingOptions {
    pub id_mode: IdMode,
    /// Check the encoded matching at the end of every round and keep a
    /// snapshot each time it grows.
    pub capture_history: bool,
    pub trace_capacity: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HistoryViolation {
    Invalid { round: u64, violation: MatchingViolation },
    NotMonotone { round: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchingHistory {
    /// `(round, M(round))` for every round in which the matching grew.
    pub checkpoints: Vec<(u64, Matching)>,
    pub rounds_checked: u64,
    pub violations: Vec<HistoryViolation>,
}

impl MatchingHistory {
    pub fn is_chain(&self) -> bool {
        self.checkpoints.windows(2).all(|w| w[0].1.is_subset(&w[1].1) && w[0].0 < w[1].0)
    }
}

#[derive(Debug, Clone)]
pub struct MatchingRun {
    pub matching: Matching,
    pub ledger: EnergyLedger,
    pub timesteps: u64,
    pub rounds: u64,
    /// Round in which each node matched, if it did.
    pub matched_round: Vec<Option<u64>>,
    pub wire_ids: Vec<WireId>,
    pub history: Option<MatchingHistory>,
    pub trace: Option<ActionTrace>,
}

fn partner_indices(nodes: &[MatchingNode], ids: &NodeIds) -> Result<Vec<Option<usize>>, ProtocolError> {
    nodes
        .iter()
        .enumerate()
        .map(|(v, node)| match node.partner() {
            None => Ok(None),
            Some(wire) => ids.index_of(wire).map(Some).ok_or(ProtocolError::UnknownPartner { node: v, wire }),
        })
        .collect()
}

fn encoded_matching(g: &Graph, nodes: &[MatchingNode], ids: &NodeIds) -> Result<Matching, ProtocolError> {
    let partners = partner_indices(nodes, ids)?;
    let m = Matching::from_partners(&partners).map_err(ProtocolError::Inconsistent)?;
    validate_matching(g, &m).map_err(ProtocolError::Inconsistent)?;
    Ok(m)
}

/// Runs the matching protocol for exactly `3 * t_max` timesteps.
pub fn run_matching(
    g: &Graph,
    params: &ScheduleParams,
    seed: u64,
    options: &MatchingOptions,
) -> Result<MatchingRun, ProtocolError> {
    run_matching_with(g, RateSchedule::Standard(*params), None, seed, options)
}

/// Generalized run: any rate schedule, optional per-node role filters.
pub fn run_matching_with(
    g: &Graph,
    schedule: RateSchedule,
    filters: Option<&[RoleFilter]>,
    seed: u64,
    options: &MatchingOptions,
) -> Result<MatchingRun, ProtocolError> {
    let n = g.n();
    if let Some(f) = filters {
        if f.len() != n {
            return Err(ProtocolError::FilterCount { got: f.len(), n });
        }
    }
    let ids = NodeIds::assign(n, options.id_mode, seed ^ 0x5bd1_e995_9e37_79b9)?;
    let mut nodes: Vec<MatchingNode> = (0..n)
        .map(|v| MatchingNode::new(ids.wire(v), schedule, filters.map_or(RoleFilter::Any, |f| f[v])))
        .collect();
    let mut config = EngineConfig::new(ids.bits_per_id());
    config.trace_capacity = options.trace_capacity;
    let rounds = schedule.rounds();
    let total = TIMESTEPS_PER_ROUND * rounds;

    let mut history = options.capture_history.then(MatchingHistory::default);
    let mut current = Matching::new();
    let outcome = radio::run_observed(g, &mut nodes, total, seed, &config, |step, nodes| {
        let Some(history) = history.as_mut() else { return };
        if step % TIMESTEPS_PER_ROUND != 0 {
            return;
        }
        let round = step / TIMESTEPS_PER_ROUND;
        history.rounds_checked += 1;
        match encoded_matching(g, nodes, &ids) {
            Ok(m) => {
                if !current.is_subset(&m) {
                    history.violations.push(HistoryViolation::NotMonotone { round });
                }
                if m != current {
                    history.checkpoints.push((round, m.clone()));
                    current = m;
                }
            }
            Err(ProtocolError::Inconsistent(violation)) => {
                history.violations.push(HistoryViolation::Invalid { round, violation });
            }
            Err(_) => history.violations.push(HistoryViolation::Invalid {
                round,
                violation: MatchingViolation::NotAnEdge(usize::MAX, usize::MAX),
            }),
        }
    })?;

    let matching = encoded_matching(g, &nodes, &ids)?;
    Ok(MatchingRun {
        matching,
        ledger: outcome.ledger,
        timesteps: outcome.timesteps,
        rounds,
        matched_round: nodes.iter().map(MatchingNode::matched_round).collect(),
        wire_ids: (0..n).map(|v| ids.wire(v)).collect(),
        history,
        trace: outcome.trace,
    })
}

/// Simulates one round at rate `r` with the nodes in `matched` silent and
/// returns the partner (by index) each node acquired.
pub fn simulate_round(g: &Graph, matched: &[bool], r: f64, seed: u64) -> Result<Vec<Option<usize>>, ProtocolError> {
    let schedule = RateSchedule::constant(r, 1)?;
    let ids = NodeIds::assign(g.n(), IdMode::Index, 0)?;
    let mut nodes: Vec<MatchingNode> = (0..g.n())
        .map(|v| {
            if matched[v] {
                MatchingNode::retired(ids.wire(v), schedule)
            } else {
                MatchingNode::new(ids.wire(v), schedule, RoleFilter::Any)
            }
        })
        .collect();
    radio::run(g, &mut nodes, TIMESTEPS_PER_ROUND, seed, &EngineConfig::new(ids.bits_per_id()))?;
    partner_indices(&nodes, &ids)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HandshakeError {
    #[error("trace was truncated; handshakes cannot be audited")]
    Truncated,
    #[error("pair {0}-{1} has no recorded match round")]
    NoRound(usize, usize),
    #[error("pair {u}-{v} matched in round {round} without a clean three-message exchange")]
    Unsound { u: usize, v: usize, round: u64 },
}

/// Checks that every matched pair exchanged the full handshake with each
/// other, and nobody else, in the round where they matched.
pub fn verify_handshakes(run: &MatchingRun) -> Result<(), HandshakeError> {
    let trace = run.trace.as_ref().ok_or(HandshakeError::Truncated)?;
    if trace.truncated {
        return Err(HandshakeError::Truncated);
    }
    let lookup = |step: u64, node: usize| {
        trace.events.iter().find(|e| e.step == step && e.node == node).map(|e| e.kind)
    };
    for (u, v) in run.matching.pairs() {
        let round = run.matched_round[u].ok_or(HandshakeError::NoRound(u, v))?;
        if run.matched_round[v] != Some(round) {
            return Err(HandshakeError::NoRound(u, v));
        }
        let s1 = RoundClock::first_step(round);
        let sound = |rec: usize, acc: usize| {
            let (x, y) = (run.wire_ids[rec], run.wire_ids[acc]);
            let solo = Message::Solo(x);
            let pair = Message::Pair(x, y);
            lookup(s1, rec) == Some(TraceKind::Sent(solo))
                && lookup(s1, acc) == Some(TraceKind::Listened(Reception::Received(solo)))
                && lookup(s1 + 1, acc) == Some(TraceKind::Sent(pair))
                && lookup(s1 + 1, rec) == Some(TraceKind::Listened(Reception::Received(pair)))
                && lookup(s1 + 2, rec) == Some(TraceKind::Sent(pair))
                && lookup(s1 + 2, acc) == Some(TraceKind::Listened(Reception::Received(pair)))
        };
        if !(sound(u, v) || sound(v, u)) {
            return Err(HandshakeError::Unsound { u, v, round });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_maximal, Family};
    use crate::radio::node_rng;
    use proptest::prelude::*;

    fn gen(s: &str) -> Graph {
        s.parse::<Family>().unwrap().generate(0).unwrap()
    }

    #[test]
    fn rate_endpoints() {
        let p = ScheduleParams::new(100.0, 64, LogMode::Natural).unwrap();
        assert_eq!(p.rate(p.t_max()).unwrap(), 0.75);
        let four_cl = 4.0 * p.c() * p.logn();
        // t_max - 4 C logn is fractional; check the doubling at the exact point.
        let t = p.t_max() - four_cl.round() as u64;
        let expected = 3.0 * p.c() * p.logn() / (four_cl + four_cl.round());
        assert!((p.rate(t).unwrap() - expected).abs() < 1e-15);
        let q = ScheduleParams::new(1.0, 1, LogMode::Natural).unwrap();
        // logn guarded to 1 and t_max = 1: rate(1) = 3/4.
        assert_eq!(q.t_max(), 1);
        assert_eq!(q.rate(1).unwrap(), 0.75);
    }

    #[test]
    fn rate_halves_when_denominator_doubles() {
        // Binary log keeps C logn integral so t_max - 4 C logn is an exact round.
        let p = ScheduleParams::new(1.0, 16, LogMode::Binary).unwrap();
        // logn = 4, t_max = 64, 4 C logn = 16.
        assert_eq!(p.t_max(), 64);
        assert_eq!(p.rate(64 - 16).unwrap(), 0.375);
    }

    #[test]
    fn rate_out_of_range() {
        let p = ScheduleParams::new(4.0, 10, LogMode::Natural).unwrap();
        assert!(p.rate(0).is_err());
        assert!(p.rate(p.t_max() + 1).is_err());
        assert!(ScheduleParams::new(0.0, 10, LogMode::Natural).is_err());
        assert!(ScheduleParams::new(4.0, 0, LogMode::Natural).is_err());
    }

    #[test]
    fn early_rate_is_about_three_over_n() {
        for n in [16usize, 17, 32, 100, 1000, 4096] {
            for c in [1.0, 4.0, 100.0] {
                let p = ScheduleParams::new(c, n, LogMode::Natural).unwrap();
                let r1 = p.rate(1).unwrap();
                if c == 100.0 {
                    assert!(r1 < 4.0 / n as f64, "n={n} r(1)={r1}");
                }
                let approx = 3.0 / (n as f64 + 4.0);
                assert!((r1 - approx).abs() / approx < 0.01, "n={n} C={c}");
            }
        }
    }

    #[test]
    fn role_boundaries() {
        assert_eq!(choose_role(0.0, 0.5), Role::Recruiter);
        assert_eq!(choose_role(0.25, 0.5), Role::Recruiter);
        assert_eq!(choose_role(0.2500001, 0.5), Role::Accepter);
        assert_eq!(choose_role(0.5, 0.5), Role::Accepter);
        assert_eq!(choose_role(1.0, 0.75), Role::Asleep);
    }

    #[test]
    fn role_frequencies_match_rate() {
        let r = 0.3;
        let draws = 1_000_000u64;
        let mut rng = node_rng(11, 0);
        let mut counts = [0u64; 3];
        for _ in 0..draws {
            match choose_role(sample_unit(&mut rng), r) {
                Role::Recruiter => counts[0] += 1,
                Role::Accepter => counts[1] += 1,
                Role::Asleep => counts[2] += 1,
            }
        }
        for (count, p) in counts.iter().zip([r / 2.0, r / 2.0, 1.0 - r]) {
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((*count as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn role_filter() {
        assert_eq!(RoleFilter::RecruitOnly.apply(Role::Accepter), Role::Asleep);
        assert_eq!(RoleFilter::RecruitOnly.apply(Role::Recruiter), Role::Recruiter);
        assert_eq!(RoleFilter::AcceptOnly.apply(Role::Recruiter), Role::Asleep);
        assert_eq!(RoleFilter::Any.apply(Role::Accepter), Role::Accepter);
    }

    fn forced(id: WireId, role: Role) -> MatchingNode {
        let mut node = MatchingNode::new(id, RateSchedule::Constant { rate: 1.0, rounds: 1 }, RoleFilter::Any);
        node.role = role;
        node
    }

    /// Drives one round by hand, bypassing role sampling.
    fn drive(node: &mut MatchingNode, receptions: [Reception; 3]) -> [Action; 3] {
        let role = node.role;
        let mut actions = [Action::Sleep; 3];
        let mut rng = node_rng(0, 0);
        for (i, reception) in receptions.into_iter().enumerate() {
            let step = i as u64 + 1;
            actions[i] = node.act(step, &mut rng);
            if step == 1 {
                node.role = role;
                actions[0] = match role {
                    Role::Recruiter => Action::Send(Message::Solo(node.my_id)),
                    Role::Accepter => Action::Listen,
                    Role::Asleep => Action::Sleep,
                };
            }
            node.observe(step, reception);
        }
        actions
    }

    fn energy(actions: &[Action; 3]) -> usize {
        actions.iter().filter(|a| a.costs_energy()).count()
    }

    #[test]
    fn recruit_round_cases() {
        let mut node = forced(5, Role::Recruiter);
        let a = drive(&mut node, [Reception::Nothing, Reception::Received(Message::Pair(5, 9)), Reception::Nothing]);
        assert_eq!(a[2], Action::Send(Message::Pair(5, 9)));
        assert_eq!(node.partner(), Some(9));
        assert_eq!(energy(&a), 3);

        let mut node = forced(5, Role::Recruiter);
        let a = drive(&mut node, [Reception::Nothing; 3]);
        assert_eq!(node.partner(), None);
        assert_eq!(energy(&a), 2);

        let mut node = forced(5, Role::Recruiter);
        let a = drive(&mut node, [Reception::Nothing, Reception::Received(Message::Pair(4, 9)), Reception::Nothing]);
        assert_eq!((node.partner(), a[2]), (None, Action::Sleep));

        // A stray Solo at step 2 is not a proposal.
        let mut node = forced(5, Role::Recruiter);
        drive(&mut node, [Reception::Nothing, Reception::Received(Message::Solo(5)), Reception::Nothing]);
        assert_eq!(node.partner(), None);
    }

    #[test]
    fn accept_round_cases() {
        let mut node = forced(7, Role::Accepter);
        let a = drive(
            &mut node,
            [Reception::Received(Message::Solo(2)), Reception::Nothing, Reception::Received(Message::Pair(2, 7))],
        );
        assert_eq!(a, [Action::Listen, Action::Send(Message::Pair(2, 7)), Action::Listen]);
        assert_eq!(node.partner(), Some(2));

        let mut node = forced(7, Role::Accepter);
        let a = drive(&mut node, [Reception::Nothing; 3]);
        assert_eq!(a, [Action::Listen, Action::Sleep, Action::Sleep]);
        assert_eq!(energy(&a), 1);

        let mut node = forced(7, Role::Accepter);
        let a = drive(
            &mut node,
            [Reception::Received(Message::Solo(2)), Reception::Nothing, Reception::Received(Message::Pair(2, 8))],
        );
        assert_eq!((node.partner(), energy(&a)), (None, 3));

        let mut node = forced(7, Role::Accepter);
        let a = drive(&mut node, [Reception::Received(Message::Pair(1, 2)), Reception::Nothing, Reception::Nothing]);
        assert_eq!((node.partner(), energy(&a)), (None, 1));
    }

    #[test]
    fn empty_graph_matches_nothing() {
        let g = Graph::empty(6);
        let p = ScheduleParams::new(4.0, 6, LogMode::Natural).unwrap();
        let run = run_matching(&g, &p, 3, &MatchingOptions::default()).unwrap();
        assert!(run.matching.is_empty());
        assert_eq!(run.timesteps, 3 * p.t_max());
        for v in 0..6 {
            // Lone nodes recruit (2 units) or accept (1 unit) and never finish a handshake.
            assert!(run.ledger.energy()[v] <= 3 * run.ledger.participation_count(v));
            assert!(run.ledger.energy()[v] <= 2 * run.ledger.participation_count(v));
        }
    }

    #[test]
    fn single_edge_always_matches() {
        let g = gen("path:2");
        let p = ScheduleParams::with_default_c(2).unwrap();
        for seed in 0..100 {
            let run = run_matching(&g, &p, seed, &MatchingOptions::default()).unwrap();
            assert_eq!(run.matching, Matching::from_pairs([(0, 1)]), "seed {seed}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let g = gen("complete:8");
        let p = ScheduleParams::new(4.0, 8, LogMode::Natural).unwrap();
        let a = run_matching(&g, &p, 99, &MatchingOptions::default()).unwrap();
        let b = run_matching(&g, &p, 99, &MatchingOptions::default()).unwrap();
        assert_eq!(a.matching, b.matching);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn complete64_mostly_maximal_at_small_c() {
        let g = gen("complete:64");
        let p = ScheduleParams::new(4.0, 64, LogMode::Natural).unwrap();
        let maximal = (0..200u64)
            .filter(|&seed| {
                let run = run_matching(&g, &p, seed, &MatchingOptions::default()).unwrap();
                is_maximal(&g, &run.matching).unwrap()
            })
            .count();
        assert!(maximal >= 198, "maximal in {maximal}/200");
    }

    #[test]
    fn random_ids_produce_same_kind_of_result() {
        let g = gen("grid:4,4");
        let p = ScheduleParams::new(4.0, 16, LogMode::Natural).unwrap();
        let opts = MatchingOptions { id_mode: IdMode::Random { factor: 4 }, ..Default::default() };
        let run = run_matching(&g, &p, 5, &opts).unwrap();
        assert!(is_maximal(&g, &run.matching).unwrap());
        assert!(run.wire_ids.iter().all(|&w| w < 1 << 16));
    }

    #[test]
    fn history_and_handshakes_on_a_grid() {
        let g = gen("grid:5,4");
        let p = ScheduleParams::new(4.0, 20, LogMode::Natural).unwrap();
        let opts = MatchingOptions { capture_history: true, trace_capacity: Some(1 << 20), ..Default::default() };
        let run = run_matching(&g, &p, 17, &opts).unwrap();
        let history = run.history.as_ref().unwrap();
        assert!(history.violations.is_empty());
        assert_eq!(history.rounds_checked, p.t_max());
        assert!(history.is_chain());
        assert_eq!(history.checkpoints.last().map(|c| &c.1), Some(&run.matching));
        verify_handshakes(&run).unwrap();

        // Matched nodes go silent after their matching round.
        for v in 0..g.n() {
            if let Some(round) = run.matched_round[v] {
                assert_eq!(run.ledger.participated_rounds(v).last(), Some(&round));
            }
        }
    }

    #[test]
    fn filter_count_checked() {
        let g = gen("path:3");
        let schedule = RateSchedule::constant(0.5, 3).unwrap();
        let err = run_matching_with(&g, schedule, Some(&[RoleFilter::Any]), 0, &MatchingOptions::default());
        assert_eq!(err.unwrap_err(), ProtocolError::FilterCount { got: 1, n: 3 });
    }

    proptest! {
        #[test]
        fn rate_is_monotone_and_bounded(c in 0.5f64..200.0, n in 1usize..5000) {
            let p = ScheduleParams::new(c, n, LogMode::Natural).unwrap();
            let t_max = p.t_max();
            let mut prev = 0.0;
            let stride = (t_max / 257).max(1);
            for t in (1..=t_max).step_by(stride as usize).chain([t_max]) {
                let r = p.rate(t).unwrap();
                prop_assert!(r > 0.0 && r <= 0.75);
                prop_assert!(r >= prev);
                prev = r;
            }
            prop_assert_eq!(p.rate(t_max).unwrap(), 0.75);
        }

        #[test]
        fn runs_on_random_graphs_are_valid(n in 2usize..24, pr in 0.05f64..0.9, seed in any::<u64>()) {
            let g = Family::ErdosRenyi { n, p: pr }.generate(seed).unwrap();
            let p = ScheduleParams::new(2.0, n, LogMode::Natural).unwrap();
            let opts = MatchingOptions { capture_history: true, ..Default::default() };
            let run = run_matching(&g, &p, seed, &opts).unwrap();
            prop_assert_eq!(validate_matching(&g, &run.matching), Ok(()));
            prop_assert!(run.history.unwrap().violations.is_empty());
            for v in 0..n {
                prop_assert!(run.ledger.energy()[v] <= 3 * run.ledger.participation_count(v));
            }
        }
    }
}
