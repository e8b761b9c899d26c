//! Centralized ground truth for checking the distributed protocols.
//!
//! Nothing here calls into the protocol or engine code: the handshake and
//! delivery semantics used by [`pair_probability_exact`] are re-derived
//! independently. Every exhaustive search has an explicit size guard and
//! fails with the instance size rather than truncating.

mod cover;
mod enumerate;
mod greedy;
mod pairprob;

pub use cover::{matching_cover_number, min_naf_load, verify_naf_mc_theorem, LoadCoverCheck, MC_MAX_NODES, NAF_MAX_BRANCHES, NAF_MAX_NODES};
pub use enumerate::{connected_graphs, graphs_up_to_isomorphism, ENUMERATE_MAX_NODES};
pub use greedy::{greedy_matching, maximum_matching_size, EdgeOrder, MAXIMUM_MATCHING_MAX_NODES};
pub use pairprob::{
    pairing_lower_bound, pair_probability_exact, pair_probability_with, residual_max_degree, Enumeration,
    ExactProbability, PAIRPROB_MAX_ENUMERATED,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{oracle}: instance size {size} exceeds the limit of {limit}")]
    GuardExceeded { oracle: &'static str, size: u64, limit: u64 },
    #[error("node {0} is isolated; no cover or assignment exists")]
    IsolatedVertex(usize),
    #[error("edge {0}-{1} is not eligible: {2}")]
    IneligibleEdge(usize, usize, &'static str),
    #[error("rate {0} outside (0, 1]")]
    BadRate(f64),
    #[error("matched flags cover {got} nodes but the graph has {n}")]
    MatchedSize { got: usize, n: usize },
}
