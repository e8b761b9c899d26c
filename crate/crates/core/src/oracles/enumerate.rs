use std::collections::BTreeSet;

use super::OracleError;
use crate::graph::Graph;

pub const ENUMERATE_MAX_NODES: usize = 7;

/// Upper-triangle adjacency bits, pair `(i, j)` with `i < j` at bit
/// `j*(j-1)/2 + i`. Adding a vertex appends bits without moving old ones.
type Code = u64;

fn bit(i: usize, j: usize) -> Code {
    let (i, j) = (i.min(j), i.max(j));
    1 << (j * (j - 1) / 2 + i)
}

fn adjacency(code: Code, n: usize) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for j in 1..n {
        for i in 0..j {
            if code & bit(i, j) != 0 {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}

/// Canonical code: the largest code over all vertex orderings that list
/// vertices by nondecreasing degree.
fn canonical(code: Code, n: usize) -> Code {
    let adj = adjacency(code, n);
    let degree: Vec<usize> = adj.iter().map(|row| row.iter().filter(|&&b| b).count()).collect();
    let mut sorted = degree.clone();
    sorted.sort_unstable();

    fn extend(adj: &[Vec<bool>], degree: &[usize], sorted: &[usize], order: &mut Vec<usize>, used: &mut [bool], best: &mut Code) {
        let pos = order.len();
        if pos == adj.len() {
            let mut c = 0;
            for j in 1..pos {
                for i in 0..j {
                    if adj[order[i]][order[j]] {
                        c |= bit(i, j);
                    }
                }
            }
            *best = (*best).max(c);
            return;
        }
        for v in 0..adj.len() {
            if !used[v] && degree[v] == sorted[pos] {
                used[v] = true;
                order.push(v);
                extend(adj, degree, sorted, order, used, best);
                order.pop();
                used[v] = false;
            }
        }
    }

    let mut best = 0;
    extend(&adj, &degree, &sorted, &mut Vec::with_capacity(n), &mut vec![false; n], &mut best);
    best
}

fn graph_from_code(code: Code, n: usize) -> Graph {
    let mut edges = Vec::new();
    for j in 1..n {
        for i in 0..j {
            if code & bit(i, j) != 0 {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).expect("codes describe simple graphs")
}

/// One representative per isomorphism class of graphs on `n` nodes.
///
/// Classes on `n` nodes are grown from the classes on `n - 1` nodes by
/// attaching a new vertex to every subset, then deduplicated by canonical code.
pub fn graphs_up_to_isomorphism(n: usize) -> Result<Vec<Graph>, OracleError> {
    if n > ENUMERATE_MAX_NODES {
        return Err(OracleError::GuardExceeded {
            oracle: "graphs_up_to_isomorphism",
            size: n as u64,
            limit: ENUMERATE_MAX_NODES as u64,
        });
    }
    let mut classes: BTreeSet<Code> = BTreeSet::from([0]);
    for k in 1..n {
        let mut next = BTreeSet::new();
        for &code in &classes {
            for subset in 0..1u64 << k {
                let mut c = code;
                for i in 0..k {
                    if subset >> i & 1 == 1 {
                        c |= bit(i, k);
                    }
                }
                next.insert(canonical(c, k + 1));
            }
        }
        classes = next;
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(classes.into_iter().map(|c| graph_from_code(c, n)).collect())
}

pub fn connected_graphs(n: usize) -> Result<Vec<Graph>, OracleError> {
    Ok(graphs_up_to_isomorphism(n)?.into_iter().filter(Graph::is_connected).collect())
}
