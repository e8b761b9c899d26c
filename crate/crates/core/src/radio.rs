//! Synchronous radio network without collision detection.
//!
//! Every timestep each node chooses to send, listen, or sleep. A listener
//! receives a message iff exactly one of its neighbors sends; silence and
//! collisions are both observed as [`Reception::Nothing`]. Sending and
//! listening each cost one unit of energy, sleeping is free.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;

/// Identity a node uses on the air.
pub type WireId = u64;

pub const TIMESTEPS_PER_ROUND: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Message {
    Solo(WireId),
    Pair(WireId, WireId),
}

impl Message {
    /// Size on the wire: a 2-bit tag followed by the ids.
    pub fn encoded_bits(&self, bits_per_id: u32) -> u32 {
        match self {
            Message::Solo(_) => 2 + bits_per_id,
            Message::Pair(..) => 2 + 2 * bits_per_id,
        }
    }

    /// True when every id is representable in `bits_per_id` bits.
    pub fn fits(&self, bits_per_id: u32) -> bool {
        let ok = |id: WireId| bits_per_id >= 64 || id >> bits_per_id == 0;
        match *self {
            Message::Solo(a) => ok(a),
            Message::Pair(a, b) => ok(a) && ok(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Action {
    Send(Message),
    Listen,
    Sleep,
}

impl Action {
    pub fn costs_energy(&self) -> bool {
        !matches!(self, Action::Sleep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reception {
    Received(Message),
    /// Silence or collision; the two are indistinguishable.
    Nothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum ChannelModel {
    #[default]
    NoCollisionDetection,
    CollisionDetection,
}

/// Position of a timestep inside its three-step round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    First,
    Second,
    Third,
}

/// Round `t >= 1` spans timesteps `3t-2, 3t-1, 3t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundClock {
    pub round: u64,
    pub phase: Phase,
}

impl RoundClock {
    /// Timesteps are numbered from 1.
    pub fn at(step: u64) -> Self {
        assert!(step >= 1, "timesteps are numbered from 1");
        let round = (step - 1) / TIMESTEPS_PER_ROUND + 1;
        let phase = match (step - 1) % TIMESTEPS_PER_ROUND {
            0 => Phase::First,
            1 => Phase::Second,
            _ => Phase::Third,
        };
        Self { round, phase }
    }

    pub fn first_step(round: u64) -> u64 {
        TIMESTEPS_PER_ROUND * round - 2
    }
}

/// Applies the no-collision-detection delivery rule to one timestep.
pub fn deliver(g: &Graph, actions: &[Action]) -> Vec<Reception> {
    let mut out = Vec::new();
    let mut hits = Vec::new();
    deliver_into(g, actions, &mut out, &mut hits);
    out
}

/// Allocation-reusing form of [`deliver`]; `hits` is scratch space.
pub fn deliver_into(g: &Graph, actions: &[Action], out: &mut Vec<Reception>, hits: &mut Vec<(u32, Option<Message>)>) {
    let n = g.n();
    assert_eq!(actions.len(), n, "one action per node");
    hits.clear();
    hits.resize(n, (0, None));
    for (u, action) in actions.iter().enumerate() {
        if let Action::Send(msg) = action {
            for &v in g.neighbors(u) {
                if actions[v] == Action::Listen {
                    let slot = &mut hits[v];
                    slot.0 += 1;
                    slot.1 = Some(*msg);
                }
            }
        }
    }
    out.clear();
    out.extend(hits.iter().map(|&(count, msg)| match (count, msg) {
        (1, Some(m)) => Reception::Received(m),
        _ => Reception::Nothing,
    }));
}

pub type NodeRng = ChaCha8Rng;

/// Private random stream of `node` under master `seed`: the ChaCha8 key comes
/// from the seed and the stream number is the node index.
pub fn node_rng(seed: u64, node: usize) -> NodeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng
}

/// A per-node protocol driven by the engine.
///
/// Each timestep the engine first collects `act` from every node, resolves
/// delivery, then hands every node its reception through `observe`.
pub trait NodeProcess {
    fn act(&mut self, step: u64, rng: &mut NodeRng) -> Action;
    fn observe(&mut self, step: u64, reception: Reception);
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("channel model {0:?} is not supported")]
    UnsupportedModel(ChannelModel),
    #[error("got {got} processes for a graph with {n} nodes")]
    ProcessCount { got: usize, n: usize },
    #[error("node {node} sent {message:?} at timestep {step}, exceeding {limit_bits} bits")]
    MalformedMessage { node: usize, step: u64, message: Message, limit_bits: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub model: ChannelModel,
    pub bits_per_id: u32,
    /// Maximum number of trace events kept; `None` disables tracing.
    pub trace_capacity: Option<usize>,
}

impl EngineConfig {
    pub fn new(bits_per_id: u32) -> Self {
        Self { model: ChannelModel::NoCollisionDetection, bits_per_id, trace_capacity: None }
    }

    pub fn with_trace(mut self, capacity: usize) -> Self {
        self.trace_capacity = Some(capacity);
        self
    }
}

/// Per-node energy spent and the rounds in which each node was awake.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnergyLedger {
    energy: Vec<u64>,
    sends: Vec<u64>,
    listens: Vec<u64>,
    participation: Vec<Vec<u64>>,
}

impl EnergyLedger {
    pub fn new(n: usize) -> Self {
        Self {
            energy: vec![0; n],
            sends: vec![0; n],
            listens: vec![0; n],
            participation: vec![Vec::new(); n],
        }
    }

    fn charge(&mut self, node: usize, action: &Action, round: u64) {
        match action {
            Action::Send(_) => self.sends[node] += 1,
            Action::Listen => self.listens[node] += 1,
            Action::Sleep => return,
        }
        self.energy[node] += 1;
        let rounds = &mut self.participation[node];
        if rounds.last() != Some(&round) {
            rounds.push(round);
        }
    }

    pub fn energy(&self) -> &[u64] {
        &self.energy
    }

    pub fn sends(&self, node: usize) -> u64 {
        self.sends[node]
    }

    pub fn listens(&self, node: usize) -> u64 {
        self.listens[node]
    }

    /// Rounds (ascending) in which `node` sent or listened at least once.
    pub fn participated_rounds(&self, node: usize) -> &[u64] {
        &self.participation[node]
    }

    pub fn participation_count(&self, node: usize) -> u64 {
        self.participation[node].len() as u64
    }

    pub fn max_energy(&self) -> u64 {
        self.energy.iter().copied().max().unwrap_or(0)
    }

    pub fn total_energy(&self) -> u64 {
        self.energy.iter().sum()
    }

    /// Adds another run's charges; its rounds are shifted by `round_offset`.
    pub fn absorb(&mut self, other: &EnergyLedger, round_offset: u64) {
        assert_eq!(self.energy.len(), other.energy.len());
        for v in 0..self.energy.len() {
            self.energy[v] += other.energy[v];
            self.sends[v] += other.sends[v];
            self.listens[v] += other.listens[v];
            self.participation[v].extend(other.participation[v].iter().map(|r| r + round_offset));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceKind {
    Sent(Message),
    Listened(Reception),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub step: u64,
    pub node: usize,
    pub kind: TraceKind,
}

/// Energy-costing actions in timestep order; sleeps are implicit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ActionTrace {
    pub events: Vec<TraceEvent>,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ledger: EnergyLedger,
    pub trace: Option<ActionTrace>,
    pub timesteps: u64,
}

pub fn run<P: NodeProcess>(
    g: &Graph,
    processes: &mut [P],
    total_timesteps: u64,
    seed: u64,
    config: &EngineConfig,
) -> Result<RunOutcome, EngineError> {
    run_observed(g, processes, total_timesteps, seed, config, |_, _| {})
}

/// Like [`run`], calling `observer(step, processes)` after every timestep.
pub fn run_observed<P, F>(
    g: &Graph,
    processes: &mut [P],
    total_timesteps: u64,
    seed: u64,
    config: &EngineConfig,
    mut observer: F,
) -> Result<RunOutcome, EngineError>
where
    P: NodeProcess,
    F: FnMut(u64, &[P]),
{
    if config.model != ChannelModel::NoCollisionDetection {
        return Err(EngineError::UnsupportedModel(config.model));
    }
    let n = g.n();
    if processes.len() != n {
        return Err(EngineError::ProcessCount { got: processes.len(), n });
    }
    let mut rngs: Vec<NodeRng> = (0..n).map(|v| node_rng(seed, v)).collect();
    let mut ledger = EnergyLedger::new(n);
    let mut trace = config.trace_capacity.map(|_| ActionTrace::default());
    let capacity = config.trace_capacity.unwrap_or(0);
    let mut actions = vec![Action::Sleep; n];
    let mut receptions = vec![Reception::Nothing; n];
    let mut hits = Vec::with_capacity(n);

    for step in 1..=total_timesteps {
        let round = RoundClock::at(step).round;
        let mut any_send = false;
        for (v, process) in processes.iter_mut().enumerate() {
            let action = process.act(step, &mut rngs[v]);
            if let Action::Send(msg) = action {
                if !msg.fits(config.bits_per_id) {
                    return Err(EngineError::MalformedMessage {
                        node: v,
                        step,
                        message: msg,
                        limit_bits: msg.encoded_bits(config.bits_per_id),
                    });
                }
                any_send = true;
            }
            ledger.charge(v, &action, round);
            actions[v] = action;
        }
        if any_send {
            deliver_into(g, &actions, &mut receptions, &mut hits);
        } else {
            receptions.iter_mut().for_each(|r| *r = Reception::Nothing);
        }
        if let Some(trace) = trace.as_mut() {
            for (v, action) in actions.iter().enumerate() {
                let kind = match action {
                    Action::Send(m) => TraceKind::Sent(*m),
                    Action::Listen => TraceKind::Listened(receptions[v]),
                    Action::Sleep => continue,
                };
                if trace.events.len() < capacity {
                    trace.events.push(TraceEvent { step, node: v, kind });
                } else {
                    trace.truncated = true;
                }
            }
        }
        for (process, reception) in processes.iter_mut().zip(&receptions) {
            process.observe(step, *reception);
        }
        observer(step, processes);
    }
    Ok(RunOutcome { ledger, trace, timesteps: total_timesteps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;
    use proptest::prelude::*;

    fn gen(s: &str) -> Graph {
        s.parse::<Family>().unwrap().generate(0).unwrap()
    }

    #[test]
    fn single_sender_reaches_listener() {
        let g = gen("path:2");
        let m = Message::Solo(0);
        let out = deliver(&g, &[Action::Send(m), Action::Listen]);
        assert_eq!(out, vec![Reception::Nothing, Reception::Received(m)]);
    }

    #[test]
    fn collision_looks_like_silence() {
        let g = gen("star:2");
        let out = deliver(
            &g,
            &[Action::Listen, Action::Send(Message::Solo(1)), Action::Send(Message::Solo(2))],
        );
        assert_eq!(out, vec![Reception::Nothing; 3]);
        let quiet = deliver(&g, &[Action::Listen, Action::Sleep, Action::Sleep]);
        assert_eq!(quiet, out);
    }

    #[test]
    fn all_sleep_receives_nothing() {
        let g = gen("complete:5");
        assert_eq!(deliver(&g, &[Action::Sleep; 5]), vec![Reception::Nothing; 5]);
    }

    #[test]
    fn clock_rounds() {
        assert_eq!(RoundClock::at(1), RoundClock { round: 1, phase: Phase::First });
        assert_eq!(RoundClock::at(3), RoundClock { round: 1, phase: Phase::Third });
        assert_eq!(RoundClock::at(4), RoundClock { round: 2, phase: Phase::First });
        assert_eq!(RoundClock::first_step(2), 4);
    }

    #[test]
    fn message_size_bound() {
        assert_eq!(Message::Solo(3).encoded_bits(4), 6);
        assert_eq!(Message::Pair(3, 1).encoded_bits(4), 10);
        assert!(Message::Pair(15, 0).fits(4));
        assert!(!Message::Pair(16, 0).fits(4));
        assert!(Message::Solo(u64::MAX).fits(64));
    }

    struct Scripted {
        script: Vec<Action>,
        heard: Vec<Reception>,
    }

    impl NodeProcess for Scripted {
        fn act(&mut self, step: u64, _: &mut NodeRng) -> Action {
            self.script.get(step as usize - 1).copied().unwrap_or(Action::Sleep)
        }
        fn observe(&mut self, _: u64, reception: Reception) {
            self.heard.push(reception);
        }
    }

    fn scripted(script: Vec<Action>) -> Scripted {
        Scripted { script, heard: Vec::new() }
    }

    #[test]
    fn sleepers_spend_nothing() {
        let g = gen("grid:3,3");
        let mut procs: Vec<_> = (0..9).map(|_| scripted(vec![])).collect();
        let out = run(&g, &mut procs, 30, 1, &EngineConfig::new(4)).unwrap();
        assert_eq!(out.ledger.energy(), &[0; 9]);
        assert_eq!(out.timesteps, 30);
    }

    #[test]
    fn scripted_pair_one_step() {
        let g = gen("path:2");
        let msg = Message::Solo(0);
        let mut procs = vec![scripted(vec![Action::Send(msg)]), scripted(vec![Action::Listen])];
        let out = run(&g, &mut procs, 1, 0, &EngineConfig::new(1).with_trace(16)).unwrap();
        assert_eq!(out.ledger.energy(), &[1, 1]);
        assert_eq!(procs[1].heard, vec![Reception::Received(msg)]);
        assert_eq!(procs[0].heard, vec![Reception::Nothing]);
        let trace = out.trace.unwrap();
        assert_eq!(trace.events.len(), 2);
        assert_eq!(out.ledger.participated_rounds(0), &[1]);
    }

    #[test]
    fn oversized_message_rejected() {
        let g = gen("path:2");
        let mut procs = vec![scripted(vec![Action::Send(Message::Solo(7))]), scripted(vec![])];
        let err = run(&g, &mut procs, 1, 0, &EngineConfig::new(1)).unwrap_err();
        assert!(matches!(err, EngineError::MalformedMessage { node: 0, step: 1, .. }));
    }

    #[test]
    fn only_no_cd_accepted() {
        let g = gen("path:2");
        let mut procs = vec![scripted(vec![]), scripted(vec![])];
        let mut cfg = EngineConfig::new(1);
        cfg.model = ChannelModel::CollisionDetection;
        assert_eq!(
            run(&g, &mut procs, 1, 0, &cfg).unwrap_err(),
            EngineError::UnsupportedModel(ChannelModel::CollisionDetection)
        );
    }

    #[test]
    fn trace_is_capped() {
        let g = gen("path:2");
        let mut procs = vec![scripted(vec![Action::Listen; 10]), scripted(vec![Action::Listen; 10])];
        let out = run(&g, &mut procs, 10, 0, &EngineConfig::new(1).with_trace(5)).unwrap();
        let trace = out.trace.unwrap();
        assert_eq!(trace.events.len(), 5);
        assert!(trace.truncated);
        assert_eq!(out.ledger.total_energy(), 20);
    }

    fn action_strategy() -> impl Strategy<Value = Action> {
        prop_oneof![
            Just(Action::Sleep),
            Just(Action::Listen),
            (0u64..8).prop_map(|id| Action::Send(Message::Solo(id))),
        ]
    }

    proptest! {
        #[test]
        fn delivery_rule(n in 1usize..9, p in 0.0f64..1.0, seed in any::<u64>(),
                         raw in prop::collection::vec(action_strategy(), 9)) {
            let g = Family::ErdosRenyi { n, p }.generate(seed).unwrap();
            let actions = &raw[..n];
            let out = deliver(&g, actions);
            prop_assert_eq!(&out, &deliver(&g, actions));
            for v in 0..n {
                let senders: Vec<usize> = g.neighbors(v).iter().copied()
                    .filter(|&u| matches!(actions[u], Action::Send(_))).collect();
                match out[v] {
                    Reception::Received(m) => {
                        prop_assert_eq!(actions[v], Action::Listen);
                        prop_assert_eq!(senders.len(), 1);
                        prop_assert_eq!(actions[senders[0]], Action::Send(m));
                    }
                    Reception::Nothing => prop_assert!(actions[v] != Action::Listen || senders.len() != 1),
                }
            }
        }

        #[test]
        fn ledger_matches_trace(n in 1usize..7, seed in any::<u64>(),
                                scripts in prop::collection::vec(prop::collection::vec(action_strategy(), 12), 7)) {
            let g = Family::Complete { n }.generate(0).unwrap();
            let mut procs: Vec<_> = scripts.into_iter().take(n).map(scripted).collect();
            let out = run(&g, &mut procs, 12, seed, &EngineConfig::new(3).with_trace(10_000)).unwrap();
            let trace = out.trace.unwrap();
            prop_assert!(!trace.truncated);
            prop_assert_eq!(out.ledger.total_energy(), trace.events.len() as u64);
            for v in 0..n {
                let e = out.ledger.energy()[v];
                prop_assert_eq!(e, out.ledger.sends(v) + out.ledger.listens(v));
                prop_assert!(e <= 3 * out.ledger.participation_count(v));
            }
        }
    }
}
