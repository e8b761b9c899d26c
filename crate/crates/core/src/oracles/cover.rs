use serde::Serialize;

use super::OracleError;
use crate::graph::Graph;

pub const MC_MAX_NODES: usize = 12;
pub const NAF_MAX_NODES: usize = 10;
/// Bound on the product of degrees (the raw assignment count) above `NAF_MAX_NODES`.
pub const NAF_MAX_BRANCHES: f64 = 1e7;

fn require_no_isolated(g: &Graph) -> Result<(), OracleError> {
    match g.isolated_vertices().first() {
        Some(&v) => Err(OracleError::IsolatedVertex(v)),
        None => Ok(()),
    }
}

/// Vertex sets of all matchings, as bitmasks.
fn matchable_sets(g: &Graph) -> Vec<u32> {
    let mut seen = vec![false; 1 << g.n()];
    seen[0] = true;
    let mut sets = vec![0u32];
    for (u, v) in g.edges() {
        let pair = (1u32 << u) | (1u32 << v);
        for i in 0..sets.len() {
            let s = sets[i];
            if s & pair == 0 && !seen[(s | pair) as usize] {
                seen[(s | pair) as usize] = true;
                sets.push(s | pair);
            }
        }
    }
    sets
}

/// Fewest matchings whose union covers every vertex.
///
/// Breadth-first over covered-vertex masks, one matching per layer. The next
/// matching is always chosen among those covering the lowest uncovered
/// vertex, since some matching in any cover must contain it.
pub fn matching_cover_number(g: &Graph) -> Result<usize, OracleError> {
    let n = g.n();
    if n > MC_MAX_NODES {
        return Err(OracleError::GuardExceeded {
            oracle: "matching_cover_number",
            size: n as u64,
            limit: MC_MAX_NODES as u64,
        });
    }
    require_no_isolated(g)?;
    let full: u32 = (1u32 << n) - 1;
    if n == 0 {
        return Ok(0);
    }
    let sets = matchable_sets(g);
    let mut visited = vec![false; 1 << n];
    visited[0] = true;
    let mut layer = vec![0u32];
    for k in 1..=n {
        let mut next = Vec::new();
        for &covered in &layer {
            let lowest = (!covered & full).trailing_zeros();
            for &s in sets.iter().filter(|&&s| s >> lowest & 1 == 1) {
                let c = covered | s;
                if c == full {
                    return Ok(k);
                }
                if !visited[c as usize] {
                    visited[c as usize] = true;
                    next.push(c);
                }
            }
        }
        layer = next;
    }
    unreachable!("each vertex can be covered by its own edge")
}

/// Minimum over all total neighbor assignments of the maximum in-degree.
///
/// Tries load bounds `1, 2, ...` and backtracks over assignments that respect
/// the bound, most constrained node first.
pub fn min_naf_load(g: &Graph) -> Result<usize, OracleError> {
    let n = g.n();
    let branches: f64 = (0..n).map(|v| g.degree(v) as f64).product();
    if n > NAF_MAX_NODES && branches > NAF_MAX_BRANCHES {
        return Err(OracleError::GuardExceeded {
            oracle: "min_naf_load",
            size: n as u64,
            limit: NAF_MAX_NODES as u64,
        });
    }
    require_no_isolated(g)?;
    if n == 0 {
        return Ok(0);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (g.degree(v), v));

    fn fits(g: &Graph, order: &[usize], i: usize, cap: usize, load: &mut [usize]) -> bool {
        let Some(&v) = order.get(i) else {
            return true;
        };
        for &w in g.neighbors(v) {
            if load[w] < cap {
                load[w] += 1;
                if fits(g, order, i + 1, cap, load) {
                    return true;
                }
                load[w] -= 1;
            }
        }
        false
    }

    (1..=n)
        .find(|&cap| fits(g, &order, 0, cap, &mut vec![0; n]))
        .ok_or(OracleError::IsolatedVertex(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LoadCoverCheck {
    pub naf_load: usize,
    pub matching_cover: usize,
    pub consistent: bool,
}

/// Minimum NAF load equals the matching cover number, except that load 1
/// allows a cover number of 1 or 2.
pub fn verify_naf_mc_theorem(g: &Graph) -> Result<LoadCoverCheck, OracleError> {
    let naf_load = min_naf_load(g)?;
    let matching_cover = matching_cover_number(g)?;
    let consistent = naf_load == matching_cover || (naf_load == 1 && matches!(matching_cover, 1 | 2));
    Ok(LoadCoverCheck { naf_load, matching_cover, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;
    use proptest::prelude::*;

    fn gen(s: &str) -> Graph {
        s.parse::<Family>().unwrap().generate(0).unwrap()
    }

    /// Reference by raw enumeration of all neighbor choices.
    fn naf_load_by_enumeration(g: &Graph) -> usize {
        let n = g.n();
        let mut choice = vec![0usize; n];
        let mut best = usize::MAX;
        loop {
            let mut load = vec![0; n];
            for v in 0..n {
                load[g.neighbors(v)[choice[v]]] += 1;
            }
            best = best.min(*load.iter().max().unwrap());
            let mut i = 0;
            loop {
                if i == n {
                    return best;
                }
                choice[i] += 1;
                if choice[i] < g.degree(i) {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    /// Reference by trying every k-multiset of matchings.
    fn mc_by_enumeration(g: &Graph) -> usize {
        let sets = matchable_sets(g);
        let full = (1u32 << g.n()) - 1;
        fn search(sets: &[u32], full: u32, covered: u32, k: usize, start: usize) -> bool {
            if covered == full {
                return true;
            }
            k > 0 && (start..sets.len()).any(|i| search(sets, full, covered | sets[i], k - 1, i))
        }
        (1..=g.n()).find(|&k| search(&sets, full, 0, k, 0)).unwrap()
    }

    #[test]
    fn cover_numbers() {
        assert_eq!(matching_cover_number(&gen("path:2")).unwrap(), 1);
        assert_eq!(matching_cover_number(&gen("complete:3")).unwrap(), 2);
        assert_eq!(matching_cover_number(&gen("star:3")).unwrap(), 3);
        assert_eq!(mc_by_enumeration(&gen("complete:3")), 2);
        assert_eq!(mc_by_enumeration(&gen("star:3")), 3);
    }

    #[test]
    fn naf_loads() {
        assert_eq!(min_naf_load(&gen("complete:3")).unwrap(), 1);
        assert_eq!(min_naf_load(&gen("star:3")).unwrap(), 3);
        assert_eq!(min_naf_load(&gen("path:4")).unwrap(), 1);
        assert_eq!(naf_load_by_enumeration(&gen("path:4")), 1);
        assert_eq!(naf_load_by_enumeration(&gen("star:3")), 3);
    }

    #[test]
    fn guards_and_isolated() {
        assert_eq!(matching_cover_number(&Graph::from_edges(3, [(0, 1)]).unwrap()), Err(OracleError::IsolatedVertex(2)));
        assert_eq!(min_naf_load(&Graph::empty(2)), Err(OracleError::IsolatedVertex(0)));
        assert!(matches!(
            matching_cover_number(&gen("path:13")),
            Err(OracleError::GuardExceeded { size: 13, limit: 12, .. })
        ));
        // 13 nodes but a small branch count passes; a dense 13-node graph does not.
        assert!(min_naf_load(&gen("cliques_joined_by_star:3,4")).is_ok());
        assert!(matches!(min_naf_load(&gen("complete:13")), Err(OracleError::GuardExceeded { .. })));
    }

    #[test]
    fn load_equals_cover_examples() {
        let c = verify_naf_mc_theorem(&gen("path:2")).unwrap();
        assert_eq!((c.naf_load, c.matching_cover, c.consistent), (1, 1, true));
        let c = verify_naf_mc_theorem(&gen("complete:3")).unwrap();
        assert_eq!((c.naf_load, c.matching_cover, c.consistent), (1, 2, true));
        let c = verify_naf_mc_theorem(&gen("star:3")).unwrap();
        assert_eq!((c.naf_load, c.matching_cover, c.consistent), (3, 3, true));
    }

    proptest! {
        #[test]
        fn searches_agree_with_enumeration(n in 2usize..8, p in 0.2f64..1.0, seed in any::<u64>()) {
            let g = Family::ErdosRenyi { n, p }.generate(seed).unwrap();
            prop_assume!(g.isolated_vertices().is_empty());
            let load = min_naf_load(&g).unwrap();
            let mc = matching_cover_number(&g).unwrap();
            prop_assert_eq!(load, naf_load_by_enumeration(&g));
            prop_assert_eq!(mc, mc_by_enumeration(&g));
            prop_assert!(mc >= load);
        }
    }
}
