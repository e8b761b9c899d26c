//! Simulation of a maximal matching protocol in single-hop-collision radio
//! networks without collision detection, with per-node energy accounting,
//! neighbor assignment built from repeated matchings, and exact oracles for
//! checking both.
//!
//! A node that sends or listens in a timestep spends one unit of energy; a
//! sleeping node spends nothing. A listener hears a message only when exactly
//! one neighbor sends.

pub mod graph;
pub mod harness;
pub mod matching;
pub mod naf;
pub mod oracles;
pub mod radio;

pub use graph::{is_maximal, naf_load, validate_matching, Family, Graph, Matching, NafAssignment};
pub use matching::{run_matching, MatchingOptions, MatchingRun, ScheduleParams};
pub use naf::{run_naf, NafRun, NafRunConfig};
