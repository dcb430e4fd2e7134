//! Charging-station placement for warehouse truck fleets.
//!
//! Given a roadmap whose vertices are candidate charging-station locations
//! and a recorded trace of truck positions, this crate rates every candidate
//! by how much normalized truck proximity it collects over time, then picks
//! an optimal subset of at most `k` stations whose pairwise shortest-path
//! separation exceeds a radius `R`.
//!
//! The stages are usable on their own:
//!
//! - [`graph`]: the candidate roadmap and the combined candidate/truck
//!   weight structure
//! - [`trace`]: trace parsing and distance-decay truck-to-candidate links
//! - [`ranking`]: per-frame ratings, accumulation, and the iterative
//!   importance oracle
//! - [`paths`]: all-pairs shortest paths and the separation conflict matrix
//! - [`placement`]: the exact selection solver and its brute-force oracle
//! - [`pipeline`]: file formats, orchestration, and the traffic heatmap

pub mod graph;
pub mod paths;
pub mod pipeline;
pub mod placement;
pub mod ranking;
pub mod trace;

pub use graph::{assemble_split_matrix, build_roadmap, parse_roadmap, GraphError, RoadmapGraph};
pub use paths::{all_pairs_shortest, build_conflict_matrix, ConflictMatrix, DistanceMatrix};
pub use pipeline::{
    build_heatmap, run_pipeline, Bounds, HeatmapGrid, PipelineConfig, PipelineError, PipelineOutput,
};
pub use placement::{
    solve_bruteforce, solve_exact, validate_solution, PlacementError, PlacementProblem,
    PlacementSolution,
};
pub use ranking::{
    accumulate, build_google_matrix, one_step_importance, power_iteration, power_iteration_from,
    rate_frame, GoogleMatrix, RatingKind, RatingVector,
};
pub use trace::{
    build_frame_links, link_weight, merge_traces, parse_trace, DistanceMode, FrameLinkMatrix,
    LinkConfig, TraceError, TraceFrame, TruckPosition,
};
