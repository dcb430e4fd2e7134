//! End-to-end pipeline: roadmap and traces in, ratings, placement, and a
//! traffic heatmap out.
//!
//! Frames are linked and rated in parallel, then reduced in timestamp order
//! so the whole run is deterministic: identical inputs produce byte
//! identical output files regardless of thread count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{parse_roadmap, GraphError, RoadmapGraph};
use crate::paths::{all_pairs_shortest, build_conflict_matrix, ConflictMatrix, DistanceMatrix};
use crate::placement::{solve_exact, PlacementError, PlacementProblem, PlacementSolution};
use crate::ranking::{accumulate, rate_frame, RankingError, RatingKind, RatingVector};
use crate::trace::{
    build_frame_links, merge_traces, parse_trace, DistanceMode, LinkConfig, TraceError, TraceFrame,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Roadmap { path: PathBuf, source: GraphError },
    #[error("{path}: roadmap has no vertices")]
    EmptyRoadmap { path: PathBuf },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: TraceError },
    #[error("merging traces: {0}")]
    TraceMerge(TraceError),
    #[error("linking frame t={timestamp}: {source}")]
    Linking { timestamp: f64, source: TraceError },
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

impl PipelineError {
    /// Process exit code category: 3 for configuration errors, 2 for input
    /// and processing errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 3,
            _ => 2,
        }
    }
}

/// All parameters of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub roadmap_path: PathBuf,
    pub trace_paths: Vec<PathBuf>,
    pub threshold_t: f64,
    pub distance_mode: DistanceMode,
    /// Snap radius for shortest-path linking; defaults to `threshold_t`.
    pub snap_radius: Option<f64>,
    pub separation_r: f64,
    pub max_stations: usize,
    pub heatmap_cell: f64,
    pub dump_matrices: bool,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |msg: String| Err(PipelineError::Config(msg));
        if self.trace_paths.is_empty() {
            return config("at least one trace file is required".into());
        }
        if !(self.threshold_t.is_finite() && self.threshold_t > 0.0) {
            return config(format!(
                "link threshold t must be finite and positive, got {}",
                self.threshold_t
            ));
        }
        if !(self.separation_r.is_finite() && self.separation_r >= 0.0) {
            return config(format!(
                "separation radius R must be finite and non-negative, got {}",
                self.separation_r
            ));
        }
        if let Some(r) = self.snap_radius {
            if !(r.is_finite() && r >= 0.0) {
                return config(format!(
                    "snap radius must be finite and non-negative, got {r}"
                ));
            }
        }
        if !(self.heatmap_cell.is_finite() && self.heatmap_cell > 0.0) {
            return config(format!(
                "heatmap cell size must be finite and positive, got {}",
                self.heatmap_cell
            ));
        }
        Ok(())
    }

    fn link_config(&self) -> LinkConfig {
        let cfg = LinkConfig::new(self.threshold_t, self.distance_mode);
        match self.snap_radius {
            Some(r) => cfg.with_snap_radius(r),
            None => cfg,
        }
    }
}

/// Rectangle in roadmap coordinates, max edges inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Roadmap bounding box padded by one heatmap cell on every side.
    pub fn padded_roadmap_box(roadmap: &RoadmapGraph, cell: f64) -> Bounds {
        let (min_x, min_y, max_x, max_y) = roadmap.bounding_box().unwrap_or((0.0, 0.0, 0.0, 0.0));
        Bounds {
            min_x: min_x - cell,
            min_y: min_y - cell,
            max_x: max_x + cell,
            max_y: max_y + cell,
        }
    }
}

/// Occupancy counts of trace points on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    origin: (f64, f64),
    cell: f64,
    nx: usize,
    ny: usize,
    counts: Vec<u64>,
    out_of_bounds: u64,
}

impl HeatmapGrid {
    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn width_cells(&self) -> usize {
        self.nx
    }

    pub fn height_cells(&self) -> usize {
        self.ny
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    /// Points that fell outside the grid bounds.
    pub fn out_of_bounds(&self) -> u64 {
        self.out_of_bounds
    }

    pub fn total_in_bounds(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Bin every trace point into the grid cell containing it. Points on the
/// max edges clamp into the last cell; points outside the bounds are
/// tallied separately.
pub fn build_heatmap(frames: &[TraceFrame], cell: f64, bounds: Bounds) -> HeatmapGrid {
    assert!(cell > 0.0 && cell.is_finite());
    assert!(
        bounds.width() > 0.0 && bounds.height() > 0.0,
        "heatmap bounds must be non-degenerate"
    );
    let nx = (bounds.width() / cell).ceil().max(1.0) as usize;
    let ny = (bounds.height() / cell).ceil().max(1.0) as usize;
    let mut counts = vec![0u64; nx * ny];
    let mut out_of_bounds = 0u64;
    for frame in frames {
        for p in &frame.positions {
            let inside = p.x >= bounds.min_x
                && p.x <= bounds.max_x
                && p.y >= bounds.min_y
                && p.y <= bounds.max_y;
            if !inside {
                out_of_bounds += 1;
                continue;
            }
            let ix = (((p.x - bounds.min_x) / cell) as usize).min(nx - 1);
            let iy = (((p.y - bounds.min_y) / cell) as usize).min(ny - 1);
            counts[iy * nx + ix] += 1;
        }
    }
    HeatmapGrid {
        origin: (bounds.min_x, bounds.min_y),
        cell,
        nx,
        ny,
        counts,
        out_of_bounds,
    }
}

/// Results of one pipeline run; the files written to the output directory
/// carry the same data.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub ratings: RatingVector,
    pub solution: PlacementSolution,
    pub heatmap: HeatmapGrid,
    /// External ids of the selected candidates, ascending.
    pub selected_ids: Vec<u64>,
}

/// Run the full chain: parse inputs, link and rate every frame, accumulate,
/// build the conflict matrix, solve the placement, bin the heatmap, and
/// write `ratings.csv`, `solution.csv`, `heatmap.csv`, `heatmap.pgm` and
/// `summary.txt` into the output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;

    let roadmap_text = read_file(&cfg.roadmap_path)?;
    let roadmap = parse_roadmap(&roadmap_text).map_err(|source| PipelineError::Roadmap {
        path: cfg.roadmap_path.clone(),
        source,
    })?;
    if roadmap.n_candidates() == 0 {
        return Err(PipelineError::EmptyRoadmap {
            path: cfg.roadmap_path.clone(),
        });
    }

    let mut traces = Vec::with_capacity(cfg.trace_paths.len());
    for path in &cfg.trace_paths {
        let text = read_file(path)?;
        let frames = parse_trace(&text).map_err(|source| PipelineError::Trace {
            path: path.clone(),
            source,
        })?;
        traces.push(frames);
    }
    let frames = merge_traces(traces).map_err(PipelineError::TraceMerge)?;

    let distances = all_pairs_shortest(&roadmap);
    let link_cfg = cfg.link_config();
    let dist_for_links = match cfg.distance_mode {
        DistanceMode::Euclidean => None,
        DistanceMode::ShortestPath => Some(&distances),
    };

    let per_frame: Vec<RatingVector> = frames
        .par_iter()
        .map(|frame| {
            build_frame_links(frame, &roadmap, &link_cfg, dist_for_links)
                .map(|links| rate_frame(&links))
                .map_err(|source| PipelineError::Linking {
                    timestamp: frame.timestamp,
                    source,
                })
        })
        .collect::<Result<_, _>>()?;
    let ratings = if per_frame.is_empty() {
        RatingVector::zeros(roadmap.n_candidates(), RatingKind::Accumulated)
    } else {
        accumulate(&per_frame)?
    };

    let conflicts = build_conflict_matrix(&distances, cfg.separation_r);
    let problem = PlacementProblem::new(ratings.clone(), conflicts.clone(), cfg.max_stations)?;
    let solution = solve_exact(&problem);

    let bounds = Bounds::padded_roadmap_box(&roadmap, cfg.heatmap_cell);
    let heatmap = build_heatmap(&frames, cfg.heatmap_cell, bounds);

    let selected_ids: Vec<u64> = solution
        .selected_indices()
        .iter()
        .map(|&i| roadmap.vertex(i).id)
        .collect();

    write_outputs(
        cfg,
        &roadmap,
        &frames,
        &ratings,
        &solution,
        &selected_ids,
        &heatmap,
        &distances,
        &conflicts,
    )?;

    Ok(PipelineOutput {
        ratings,
        solution,
        heatmap,
        selected_ids,
    })
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Row order for ratings output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingsOrder {
    CandidateId,
    RatingDescending,
}

/// Render the ratings CSV, either sorted by candidate id or by rating
/// descending (ties by id).
pub fn ratings_csv(roadmap: &RoadmapGraph, ratings: &RatingVector, order: RatingsOrder) -> String {
    let mut rows: Vec<(u64, f64)> = roadmap
        .vertices()
        .iter()
        .zip(ratings.values())
        .map(|(v, p)| (v.id, *p))
        .collect();
    if order == RatingsOrder::RatingDescending {
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    }
    let mut out = String::from("candidate_id,rating\n");
    for (id, p) in rows {
        out.push_str(&format!("{id},{p}\n"));
    }
    out
}

fn solution_csv(
    roadmap: &RoadmapGraph,
    ratings: &RatingVector,
    solution: &PlacementSolution,
    cfg: &PipelineConfig,
) -> String {
    let mut out = String::from("candidate_id,selected,rating\n");
    for ((v, p), sel) in roadmap
        .vertices()
        .iter()
        .zip(ratings.values())
        .zip(&solution.selected)
    {
        out.push_str(&format!("{},{},{}\n", v.id, u8::from(*sel), p));
    }
    out.push_str(&format!(
        "# objective={} k={} R={} node_count={}\n",
        solution.objective, cfg.max_stations, cfg.separation_r, solution.node_count
    ));
    out
}

fn heatmap_csv(grid: &HeatmapGrid) -> String {
    let mut out = format!(
        "# origin_x={} origin_y={} cell={} nx={} ny={} out_of_bounds={}\n",
        grid.origin.0, grid.origin.1, grid.cell, grid.nx, grid.ny, grid.out_of_bounds
    );
    for iy in 0..grid.ny {
        let row: Vec<String> = (0..grid.nx)
            .map(|ix| grid.count(ix, iy).to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// 8-bit binary PGM, counts normalized to the maximum. The top image row is
/// the grid row with the largest y so the picture is map-oriented.
fn heatmap_pgm(grid: &HeatmapGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    let max = grid.max_count();
    for iy in (0..grid.ny).rev() {
        for ix in 0..grid.nx {
            let v = if max == 0 {
                0u8
            } else {
                ((grid.count(ix, iy) as f64 / max as f64) * 255.0).round() as u8
            };
            out.push(v);
        }
    }
    out
}

fn summary_text(
    cfg: &PipelineConfig,
    roadmap: &RoadmapGraph,
    frames: &[TraceFrame],
    solution: &PlacementSolution,
    selected_ids: &[u64],
    heatmap: &HeatmapGrid,
) -> String {
    let trace_rows: usize = frames.iter().map(|f| f.positions.len()).sum();
    let traces = cfg
        .trace_paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",");
    let selected = selected_ids
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = String::new();
    let mut line = |s: fmt::Arguments| out.push_str(&format!("{s}\n"));
    line(format_args!("roadmap: {}", cfg.roadmap_path.display()));
    line(format_args!("traces: {traces}"));
    line(format_args!("candidates: {}", roadmap.n_candidates()));
    line(format_args!("frames: {}", frames.len()));
    line(format_args!("trace_rows: {trace_rows}"));
    line(format_args!("threshold_t: {}", cfg.threshold_t));
    line(format_args!(
        "distance_mode: {}",
        match cfg.distance_mode {
            DistanceMode::Euclidean => "euclidean",
            DistanceMode::ShortestPath => "shortest-path",
        }
    ));
    line(format_args!(
        "snap_radius: {}",
        cfg.snap_radius.unwrap_or(cfg.threshold_t)
    ));
    line(format_args!("separation_R: {}", cfg.separation_r));
    line(format_args!("max_k: {}", cfg.max_stations));
    line(format_args!("heatmap_cell: {}", cfg.heatmap_cell));
    line(format_args!("objective: {}", solution.objective));
    line(format_args!("selected_count: {}", selected_ids.len()));
    line(format_args!("selected: {selected}"));
    line(format_args!("node_count: {}", solution.node_count));
    line(format_args!(
        "heatmap_out_of_bounds: {}",
        heatmap.out_of_bounds()
    ));
    out
}

fn matrix_csv<F: Fn(usize, usize) -> String>(n: usize, cell: F) -> String {
    let mut out = String::new();
    for m in 0..n {
        let row: Vec<String> = (0..n).map(|k| cell(m, k)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn write_outputs(
    cfg: &PipelineConfig,
    roadmap: &RoadmapGraph,
    frames: &[TraceFrame],
    ratings: &RatingVector,
    solution: &PlacementSolution,
    selected_ids: &[u64],
    heatmap: &HeatmapGrid,
    distances: &DistanceMatrix,
    conflicts: &ConflictMatrix,
) -> Result<(), PipelineError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.clone(),
        source,
    })?;
    write_file(
        &dir.join("ratings.csv"),
        ratings_csv(roadmap, ratings, RatingsOrder::CandidateId).as_bytes(),
    )?;
    write_file(
        &dir.join("solution.csv"),
        solution_csv(roadmap, ratings, solution, cfg).as_bytes(),
    )?;
    write_file(&dir.join("heatmap.csv"), heatmap_csv(heatmap).as_bytes())?;
    write_file(&dir.join("heatmap.pgm"), &heatmap_pgm(heatmap))?;
    write_file(
        &dir.join("summary.txt"),
        summary_text(cfg, roadmap, frames, solution, selected_ids, heatmap).as_bytes(),
    )?;
    if cfg.dump_matrices {
        let n = distances.n_candidates();
        write_file(
            &dir.join("distance_matrix.csv"),
            matrix_csv(n, |m, k| {
                let d = distances.get(m, k);
                if d.is_finite() {
                    format!("{d}")
                } else {
                    "inf".to_string()
                }
            })
            .as_bytes(),
        )?;
        write_file(
            &dir.join("conflict_matrix.csv"),
            matrix_csv(n, |m, k| conflicts.get(m, k).to_string()).as_bytes(),
        )?;
    }
    Ok(())
}
