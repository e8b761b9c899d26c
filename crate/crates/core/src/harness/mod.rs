//! Batch runners, reports, edge-list files and the command-line interface.

pub mod batch;
pub mod cli;
pub mod edgelist;
pub mod report;

pub use batch::{
    family_for, graph_info, run_match_batch, run_match_trial, run_naf_batch, run_naf_trial, run_sweep,
    schedule_info, BatchConfig, GraphSource, HarnessError, Iterations,
};
pub use cli::run_cli;
pub use edgelist::{format_edge_list, parse_edge_list, read_edge_list, EdgeListError};
