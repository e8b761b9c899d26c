use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::OracleError;
use crate::graph::{Graph, Matching};

pub const MAXIMUM_MATCHING_MAX_NODES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeOrder {
    /// Uniform shuffle of the edge list from this seed.
    Seeded(u64),
    /// Processing order. Pairs that are not edges are skipped; edges missing
    /// from the list are processed afterwards in lexicographic order.
    Explicit(Vec<(usize, usize)>),
}

/// Scan edges in order, keeping each edge disjoint from those kept so far.
pub fn greedy_matching(g: &Graph, order: &EdgeOrder) -> Matching {
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    match order {
        EdgeOrder::Seeded(seed) => edges.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed)),
        EdgeOrder::Explicit(list) => {
            let mut listed: Vec<(usize, usize)> = list
                .iter()
                .filter(|&&(u, v)| g.has_edge(u, v))
                .map(|&(u, v)| (u.min(v), u.max(v)))
                .collect();
            let rest: Vec<_> = edges.iter().copied().filter(|e| !listed.contains(e)).collect();
            listed.extend(rest);
            edges = listed;
        }
    }
    let mut used = vec![false; g.n()];
    let mut m = Matching::new();
    for (u, v) in edges {
        if !used[u] && !used[v] {
            used[u] = true;
            used[v] = true;
            m.insert(u, v);
        }
    }
    m
}

/// Size of a maximum matching by exhaustive branching.
pub fn maximum_matching_size(g: &Graph) -> Result<usize, OracleError> {
    if g.n() > MAXIMUM_MATCHING_MAX_NODES {
        return Err(OracleError::GuardExceeded {
            oracle: "maximum_matching_size",
            size: g.n() as u64,
            limit: MAXIMUM_MATCHING_MAX_NODES as u64,
        });
    }
    fn best(g: &Graph, used: &mut Vec<bool>, from: usize) -> usize {
        let Some(v) = (from..g.n()).find(|&v| !used[v]) else {
            return 0;
        };
        used[v] = true;
        // Either v stays unmatched...
        let mut result = best(g, used, v + 1);
        // ...or it pairs with a free neighbor.
        for &w in g.neighbors(v) {
            if !used[w] {
                used[w] = true;
                result = result.max(1 + best(g, used, v + 1));
                used[w] = false;
            }
        }
        used[v] = false;
        result
    }
    Ok(best(g, &mut vec![false; g.n()], 0))
}
