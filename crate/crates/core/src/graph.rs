//! Network topology, test-topology generators, and the matching and
//! neighbor-assignment value types together with their validity checks.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("cannot parse graph family {0:?}")]
    UnknownFamily(String),
    #[error("{duplicates} duplicate wire id(s) among {n} nodes ({bits} bits per id)")]
    DuplicateWireIds { duplicates: usize, n: usize, bits: u32 },
    #[error("wire ids of {0} bits do not fit in 64 bits")]
    WireIdTooWide(u32),
}

/// Immutable simple undirected graph over nodes `0..n`.
///
/// Adjacency lists are sorted and symmetric. Construction rejects self-loops
/// and repeated edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { adjacency: vec![Vec::new(); n], edge_count: 0 }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
            edge_count += 1;
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(u.min(w[0]), u.max(w[0])));
            }
        }
        Ok(Self { adjacency, edge_count })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn isolated_vertices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.adjacency[v].is_empty()).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.n() == 0 {
            return true;
        }
        let mut seen = vec![false; self.n()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n()
    }

    /// Re-checks symmetry, sortedness, and simplicity of the adjacency lists.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let n = self.n();
        let mut half_edges = 0;
        for (u, list) in self.adjacency.iter().enumerate() {
            for (i, &v) in list.iter().enumerate() {
                if v >= n {
                    return Err(GraphError::NodeOutOfRange { node: v, n });
                }
                if v == u {
                    return Err(GraphError::SelfLoop(u));
                }
                if i > 0 && list[i - 1] >= v {
                    return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
                }
                if self.adjacency[v].binary_search(&u).is_err() {
                    return Err(GraphError::InvalidParameters(format!(
                        "asymmetric adjacency between {u} and {v}"
                    )));
                }
            }
            half_edges += list.len();
        }
        if half_edges != 2 * self.edge_count {
            return Err(GraphError::InvalidParameters("edge count mismatch".into()));
        }
        Ok(())
    }

    pub fn generate(family: &Family, seed: u64) -> Result<Self, GraphError> {
        family.generate(seed)
    }
}

/// Generator families for test topologies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    ErdosRenyi { n: usize, p: f64 },
    Grid { width: usize, height: usize },
    /// Center 0 joined to leaves `1..=d`.
    Star { d: usize },
    Path { n: usize },
    Complete { n: usize },
    /// Hub 0 joined to the first member of each of `cliques` disjoint cliques
    /// of `size` nodes. Clique `i` occupies `1 + i*size .. 1 + (i+1)*size`.
    CliquesJoinedByStar { cliques: usize, size: usize },
}

impl Family {
    pub fn node_count(&self) -> usize {
        match *self {
            Family::ErdosRenyi { n, .. } | Family::Path { n } | Family::Complete { n } => n,
            Family::Grid { width, height } => width * height,
            Family::Star { d } => d + 1,
            Family::CliquesJoinedByStar { cliques, size } => 1 + cliques * size,
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::InvalidParameters(msg));
        match *self {
            Family::ErdosRenyi { n, p } => {
                if n == 0 {
                    return bad("erdos_renyi needs n >= 1".into());
                }
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("erdos_renyi edge probability {p} outside [0, 1]"));
                }
            }
            Family::Grid { width, height } if width == 0 || height == 0 => {
                return bad(format!("grid {width}x{height} is empty"));
            }
            Family::Path { n } | Family::Complete { n } if n == 0 => {
                return bad(format!("{self} needs n >= 1"));
            }
            Family::CliquesJoinedByStar { cliques, size } if cliques == 0 || size == 0 => {
                return bad("cliques_joined_by_star needs at least one non-empty clique".into());
            }
            _ => {}
        }
        Ok(())
    }

    /// Deterministic in `(self, seed)`. Only `ErdosRenyi` consumes randomness.
    pub fn generate(&self, seed: u64) -> Result<Graph, GraphError> {
        self.validate()?;
        let n = self.node_count();
        let mut edges = Vec::new();
        match *self {
            Family::ErdosRenyi { n, p } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.random::<f64>() < p {
                            edges.push((u, v));
                        }
                    }
                }
            }
            Family::Grid { width, height } => {
                for y in 0..height {
                    for x in 0..width {
                        let v = y * width + x;
                        if x + 1 < width {
                            edges.push((v, v + 1));
                        }
                        if y + 1 < height {
                            edges.push((v, v + width));
                        }
                    }
                }
            }
            Family::Star { d } => edges.extend((1..=d).map(|leaf| (0, leaf))),
            Family::Path { n } => edges.extend((1..n).map(|v| (v - 1, v))),
            Family::Complete { n } => {
                for u in 0..n {
                    edges.extend((u + 1..n).map(|v| (u, v)));
                }
            }
            Family::CliquesJoinedByStar { cliques, size } => {
                for i in 0..cliques {
                    let base = 1 + i * size;
                    edges.push((0, base));
                    for u in base..base + size {
                        edges.extend((u + 1..base + size).map(|v| (u, v)));
                    }
                }
            }
        }
        Graph::from_edges(n, edges)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::ErdosRenyi { n, p } => write!(f, "erdos_renyi:{n},{p}"),
            Family::Grid { width, height } => write!(f, "grid:{width},{height}"),
            Family::Star { d } => write!(f, "star:{d}"),
            Family::Path { n } => write!(f, "path:{n}"),
            Family::Complete { n } => write!(f, "complete:{n}"),
            Family::CliquesJoinedByStar { cliques, size } => {
                write!(f, "cliques_joined_by_star:{cliques},{size}")
            }
        }
    }
}

/// Parses `name:arg[,arg]`, e.g. `path:5`, `erdos_renyi:64,0.2`, `grid:4,4`.
impl FromStr for Family {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || GraphError::UnknownFamily(s.to_string());
        let (name, args) = s.split_once(':').ok_or_else(unknown)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<usize, GraphError> {
            args.get(i).and_then(|a| a.parse().ok()).ok_or_else(unknown)
        };
        let arity = |k: usize| if args.len() == k { Ok(()) } else { Err(unknown()) };
        let family = match name.trim() {
            "erdos_renyi" | "er" | "gnp" => {
                arity(2)?;
                let p = args[1].parse().map_err(|_| unknown())?;
                Family::ErdosRenyi { n: int(0)?, p }
            }
            "grid" => {
                arity(2)?;
                Family::Grid { width: int(0)?, height: int(1)? }
            }
            "star" => {
                arity(1)?;
                Family::Star { d: int(0)? }
            }
            "path" => {
                arity(1)?;
                Family::Path { n: int(0)? }
            }
            "complete" => {
                arity(1)?;
                Family::Complete { n: int(0)? }
            }
            "cliques_joined_by_star" | "cliques" => {
                arity(2)?;
                Family::CliquesJoinedByStar { cliques: int(0)?, size: int(1)? }
            }
            _ => return Err(unknown()),
        };
        Ok(family)
    }
}

/// How nodes name themselves on the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IdMode {
    /// The dense index is the wire id.
    #[default]
    Index,
    /// Each node draws `factor * ceil(log2 n)` uniform random bits.
    Random { factor: u32 },
}

/// `ceil(log2 n)`, at least 1.
pub fn index_bits(n: usize) -> u32 {
    if n <= 2 {
        1
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Wire identities for every node of a network, with reverse lookup.
#[derive(Debug, Clone)]
pub struct NodeIds {
    bits: u32,
    wire: Vec<u64>,
    by_wire: HashMap<u64, usize>,
}

impl NodeIds {
    pub fn assign(n: usize, mode: IdMode, seed: u64) -> Result<Self, GraphError> {
        match mode {
            IdMode::Index => {
                let wire: Vec<u64> = (0..n as u64).collect();
                let by_wire = wire.iter().enumerate().map(|(i, &w)| (w, i)).collect();
                Ok(Self { bits: index_bits(n), wire, by_wire })
            }
            IdMode::Random { factor } => {
                let bits = factor.saturating_mul(index_bits(n));
                if bits > 64 || factor == 0 {
                    return Err(GraphError::WireIdTooWide(bits));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
                let wire: Vec<u64> = (0..n).map(|_| rng.random::<u64>() & mask).collect();
                let mut by_wire = HashMap::with_capacity(n);
                for (i, &w) in wire.iter().enumerate() {
                    by_wire.entry(w).or_insert(i);
                }
                if by_wire.len() != n {
                    return Err(GraphError::DuplicateWireIds {
                        duplicates: n - by_wire.len(),
                        n,
                        bits,
                    });
                }
                Ok(Self { bits, wire, by_wire })
            }
        }
    }

    pub fn bits_per_id(&self) -> u32 {
        self.bits
    }

    pub fn wire(&self, index: usize) -> u64 {
        self.wire[index]
    }

    pub fn index_of(&self, wire: u64) -> Option<usize> {
        self.by_wire.get(&wire).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum MatchingViolation {
    #[error("pair {0}-{1} is not an edge of the graph")]
    NotAnEdge(usize, usize),
    #[error("node {0} appears in more than one pair")]
    SharedEndpoint(usize),
    #[error("partner pointers disagree: {node} -> {partner} but {partner} -> {back:?}")]
    Asymmetric { node: usize, partner: usize, back: Option<usize> },
}

/// A set of unordered node pairs, stored as `(min, max)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    pairs: BTreeSet<(usize, usize)>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        let mut m = Self::new();
        for (u, v) in pairs {
            m.insert(u, v);
        }
        m
    }

    /// Reads a matching out of mutual partner pointers.
    pub fn from_partners(partners: &[Option<usize>]) -> Result<Self, MatchingViolation> {
        let mut m = Self::new();
        for (v, p) in partners.iter().enumerate() {
            if let Some(w) = *p {
                let back = partners.get(w).copied().flatten();
                if back != Some(v) {
                    return Err(MatchingViolation::Asymmetric { node: v, partner: w, back });
                }
                m.insert(v, w);
            }
        }
        Ok(m)
    }

    pub fn insert(&mut self, u: usize, v: usize) -> bool {
        self.pairs.insert((u.min(v), u.max(v)))
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.pairs.contains(&(u.min(v), u.max(v)))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn is_subset(&self, other: &Matching) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// Per-node matched flags for a graph of `n` nodes.
    pub fn covered(&self, n: usize) -> Vec<bool> {
        let mut covered = vec![false; n];
        for (u, v) in self.pairs() {
            for x in [u, v] {
                if x < n {
                    covered[x] = true;
                }
            }
        }
        covered
    }
}

/// `Ok(())` iff every pair is an edge of `g` and no node is in two pairs.
pub fn validate_matching(g: &Graph, m: &Matching) -> Result<(), MatchingViolation> {
    let mut seen = vec![false; g.n()];
    for (u, v) in m.pairs() {
        if !g.has_edge(u, v) {
            return Err(MatchingViolation::NotAnEdge(u, v));
        }
        for x in [u, v] {
            if std::mem::replace(&mut seen[x], true) {
                return Err(MatchingViolation::SharedEndpoint(x));
            }
        }
    }
    Ok(())
}

/// True iff no edge of `g` has both endpoints unmatched.
pub fn is_maximal(g: &Graph, m: &Matching) -> Result<bool, MatchingViolation> {
    validate_matching(g, m)?;
    let covered = m.covered(g.n());
    Ok(g.edges().all(|(u, v)| covered[u] || covered[v]))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NafError {
    #[error("node {node} is assigned to {target}, which is not a neighbor")]
    NotAdjacent { node: usize, target: usize },
    #[error("assignment covers {got} nodes but the graph has {n}")]
    SizeMismatch { got: usize, n: usize },
}

/// Neighbor assignment: each assigned node points at one of its neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NafAssignment {
    target: Vec<Option<usize>>,
}

impl NafAssignment {
    pub fn unassigned(n: usize) -> Self {
        Self { target: vec![None; n] }
    }

    pub fn from_targets(target: Vec<Option<usize>>) -> Self {
        Self { target }
    }

    pub fn total(target: Vec<usize>) -> Self {
        Self { target: target.into_iter().map(Some).collect() }
    }

    pub fn target(&self, v: usize) -> Option<usize> {
        self.target[v]
    }

    pub fn targets(&self) -> &[Option<usize>] {
        &self.target
    }

    pub fn set(&mut self, v: usize, w: usize) {
        self.target[v] = Some(w);
    }

    pub fn assigned_count(&self) -> usize {
        self.target.iter().filter(|t| t.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.target.iter().all(Option::is_some)
    }

    /// In-degree of every node in the assignment digraph.
    pub fn loads(&self) -> Vec<usize> {
        let mut loads = vec![0; self.target.len()];
        for w in self.target.iter().flatten() {
            loads[*w] += 1;
        }
        loads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NafLoad {
    pub load: usize,
    /// Set when some node has no target; `load` then counts assigned nodes only.
    pub partial: bool,
}

pub fn naf_load(g: &Graph, f: &NafAssignment) -> Result<NafLoad, NafError> {
    if f.target.len() != g.n() {
        return Err(NafError::SizeMismatch { got: f.target.len(), n: g.n() });
    }
    for (v, t) in f.target.iter().enumerate() {
        if let Some(w) = *t {
            if !g.has_edge(v, w) {
                return Err(NafError::NotAdjacent { node: v, target: w });
            }
        }
    }
    Ok(NafLoad {
        load: f.loads().into_iter().max().unwrap_or(0),
        partial: !f.is_total(),
    })
}
