use serde::Serialize;

use super::OracleError;
use crate::graph::Graph;

/// Most nodes whose roles are enumerated jointly (`3^14` outcomes).
pub const PAIRPROB_MAX_ENUMERATED: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Enumeration {
    /// Every unmatched node.
    Full,
    /// Unmatched nodes within distance 2 of the edge.
    Local,
}

/// Exact probability that a given edge is matched in one round.
///
/// Each enumerated node is a recruiter or accepter with probability `r/2`
/// each and asleep with probability `1 - r`, so a role outcome with `a`
/// active nodes has weight `(r/2)^a (1-r)^(m-a)`. `favorable[a]` counts the
/// outcomes with `a` active nodes in which the edge forms, which fixes the
/// probability as a polynomial in `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactProbability {
    pub value: f64,
    pub rate: f64,
    pub favorable: Vec<u64>,
    pub enumerated: usize,
    pub method: Enumeration,
}

impl ExactProbability {
    pub fn at_rate(&self, r: f64) -> f64 {
        let m = self.enumerated as i32;
        self.favorable
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(a, &c)| c as f64 * (r / 2.0).powi(a as i32) * (1.0 - r).powi(m - a as i32))
            .sum()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Asleep,
    Recruit,
    Accept,
}

/// Residual maximum degree: the largest number of unmatched neighbors any
/// unmatched node has.
pub fn residual_max_degree(g: &Graph, matched: &[bool]) -> usize {
    (0..g.n())
        .filter(|&v| !matched[v])
        .map(|v| g.neighbors(v).iter().filter(|&&u| !matched[u]).count())
        .max()
        .unwrap_or(0)
}

/// Lower bound `(r^2 / 2) (1 - r)^(delta - 1)` on the per-round pairing probability.
pub fn pairing_lower_bound(r: f64, residual_max_degree: usize) -> f64 {
    r * r / 2.0 * (1.0 - r).powi(residual_max_degree as i32 - 1)
}

pub fn pair_probability_exact(
    g: &Graph,
    matched: &[bool],
    r: f64,
    edge: (usize, usize),
) -> Result<ExactProbability, OracleError> {
    pair_probability_with(g, matched, r, edge, Enumeration::Local)
}

pub fn pair_probability_with(
    g: &Graph,
    matched: &[bool],
    r: f64,
    (v, w): (usize, usize),
    method: Enumeration,
) -> Result<ExactProbability, OracleError> {
    let n = g.n();
    if matched.len() != n {
        return Err(OracleError::MatchedSize { got: matched.len(), n });
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(OracleError::BadRate(r));
    }
    if !g.has_edge(v, w) {
        return Err(OracleError::IneligibleEdge(v, w, "not an edge"));
    }
    if matched[v] || matched[w] {
        return Err(OracleError::IneligibleEdge(v, w, "an endpoint is already matched"));
    }

    let mut include = vec![false; n];
    match method {
        Enumeration::Full => include.iter_mut().for_each(|x| *x = true),
        Enumeration::Local => {
            for s in [v, w] {
                include[s] = true;
                for &a in g.neighbors(s) {
                    include[a] = true;
                    for &b in g.neighbors(a) {
                        include[b] = true;
                    }
                }
            }
        }
    }
    let nodes: Vec<usize> = (0..n).filter(|&x| include[x] && !matched[x]).collect();
    let m = nodes.len();
    if m > PAIRPROB_MAX_ENUMERATED {
        return Err(OracleError::GuardExceeded {
            oracle: "pair_probability_exact",
            size: m as u64,
            limit: PAIRPROB_MAX_ENUMERATED as u64,
        });
    }

    let mut parts = vec![Part::Asleep; n];
    let mut digits = vec![0u8; m];
    let mut favorable = vec![0u64; m + 1];
    let mut scratch = Scratch::new(n);
    loop {
        let mut active = 0;
        for (&x, &d) in nodes.iter().zip(&digits) {
            parts[x] = match d {
                0 => Part::Asleep,
                1 => Part::Recruit,
                _ => Part::Accept,
            };
            active += (d != 0) as usize;
        }
        if pairs_with_each_other(g, &parts, v, w, &mut scratch) {
            favorable[active] += 1;
        }
        // Base-3 odometer over the enumerated nodes.
        let mut i = 0;
        loop {
            if i == m {
                let mut p = ExactProbability { value: 0.0, rate: r, favorable, enumerated: m, method };
                p.value = p.at_rate(r);
                return Ok(p);
            }
            digits[i] += 1;
            if digits[i] < 3 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

struct Scratch {
    heard_from: Vec<Option<usize>>,
    confirms_to: Vec<Option<usize>>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self { heard_from: vec![None; n], confirms_to: vec![None; n] }
    }
}

/// The unique element of `iter`, if there is exactly one.
fn only<I: Iterator<Item = usize>>(mut iter: I) -> Option<usize> {
    let first = iter.next()?;
    iter.next().is_none().then_some(first)
}

/// Replays one round's three exchanges for a fixed role assignment:
/// recruiters announce, accepters that heard exactly one recruiter propose
/// back, recruiters that heard exactly one proposal naming them confirm, and
/// a proposing accepter commits on hearing exactly one confirmation naming it.
fn pairs_with_each_other(g: &Graph, parts: &[Part], v: usize, w: usize, s: &mut Scratch) -> bool {
    let n = g.n();
    // Exchange 1: who each accepter heard.
    for x in 0..n {
        s.heard_from[x] = match parts[x] {
            Part::Accept => only(g.neighbors(x).iter().copied().filter(|&u| parts[u] == Part::Recruit)),
            _ => None,
        };
    }
    // Exchange 2: recruiters hear proposals; a proposal from y carries heard_from[y].
    for x in 0..n {
        s.confirms_to[x] = None;
        if parts[x] == Part::Recruit {
            let proposer = only(g.neighbors(x).iter().copied().filter(|&y| s.heard_from[y].is_some()));
            if let Some(y) = proposer {
                if s.heard_from[y] == Some(x) {
                    s.confirms_to[x] = Some(y);
                }
            }
        }
    }
    // Exchange 3 for the edge under test.
    let commits = |acc: usize, rec: usize| -> bool {
        if parts[acc] != Part::Accept || s.heard_from[acc].is_none() {
            return false;
        }
        let confirmer = only(g.neighbors(acc).iter().copied().filter(|&z| s.confirms_to[z].is_some()));
        confirmer == Some(rec) && s.confirms_to[rec] == Some(acc)
    };
    commits(w, v) || commits(v, w)
}
