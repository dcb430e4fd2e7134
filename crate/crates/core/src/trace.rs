//! Truck-trace ingestion and per-frame link weights.
//!
//! A trace is a sequence of frames, each holding every recorded truck
//! position at one timestamp. Frames link trucks to roadmap candidates with
//! a distance-decaying weight `1 / (1 + d)` that is cut off beyond a
//! threshold; the distance is either straight-line or along the roadmap.

use thiserror::Error;

use crate::graph::RoadmapGraph;
use crate::paths::DistanceMatrix;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TraceError {
    #[error("trace data row {row}: malformed record")]
    MalformedRow { row: usize },
    #[error("truck {truck_id} appears twice in frame t={timestamp}")]
    DuplicateTruckInFrame { timestamp: f64, truck_id: u64 },
    #[error("frame timestamps are not strictly increasing at frame {position}")]
    NonMonotoneTimestamps { position: usize },
    #[error("shortest-path distance mode requires a distance matrix")]
    MissingDistanceMatrix,
}

/// One recorded truck position inside a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruckPosition {
    pub truck_id: u64,
    pub x: f64,
    pub y: f64,
}

/// All truck positions at one timestamp. Positions are kept sorted by truck
/// id so the link-matrix row order is reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFrame {
    pub timestamp: f64,
    pub positions: Vec<TruckPosition>,
}

/// How truck-to-candidate distances are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    Euclidean,
    /// Snap the truck to its nearest candidate vertex, then continue along
    /// roadmap shortest paths.
    ShortestPath,
}

/// Parameters of the truck-to-candidate linking rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Maximum distance (meters) at which a truck still links to a
    /// candidate; the boundary itself still links.
    pub threshold_t: f64,
    pub distance_mode: DistanceMode,
    /// Maximum snapping distance in shortest-path mode; trucks farther than
    /// this from every candidate produce an all-zero row.
    pub snap_radius: f64,
}

impl LinkConfig {
    /// Config with the snap radius defaulting to the link threshold.
    pub fn new(threshold_t: f64, distance_mode: DistanceMode) -> Self {
        debug_assert!(threshold_t.is_finite() && threshold_t > 0.0);
        LinkConfig {
            threshold_t,
            distance_mode,
            snap_radius: threshold_t,
        }
    }

    pub fn with_snap_radius(mut self, snap_radius: f64) -> Self {
        debug_assert!(snap_radius >= 0.0);
        self.snap_radius = snap_radius;
        self
    }
}

/// Truck-to-candidate weights for one frame, one row per truck.
///
/// Row sums are stored alongside the entries and always equal the exact
/// left-to-right sum of the stored row.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLinkMatrix {
    n_candidates: usize,
    weights: Vec<f64>,
    row_sums: Vec<f64>,
}

impl FrameLinkMatrix {
    /// Build from explicit rows. Entries must be finite and non-negative;
    /// every row must have one entry per candidate.
    pub fn from_rows(n_candidates: usize, rows: Vec<Vec<f64>>) -> Option<FrameLinkMatrix> {
        let mut weights = Vec::with_capacity(rows.len() * n_candidates);
        for row in &rows {
            if row.len() != n_candidates || row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return None;
            }
            weights.extend_from_slice(row);
        }
        Some(Self::from_flat(n_candidates, weights))
    }

    fn from_flat(n_candidates: usize, weights: Vec<f64>) -> FrameLinkMatrix {
        let n_trucks = weights.len().checked_div(n_candidates).unwrap_or(0);
        let row_sums = (0..n_trucks)
            .map(|t| {
                weights[t * n_candidates..(t + 1) * n_candidates]
                    .iter()
                    .sum()
            })
            .collect();
        FrameLinkMatrix {
            n_candidates,
            weights,
            row_sums,
        }
    }

    pub fn n_candidates(&self) -> usize {
        self.n_candidates
    }

    pub fn n_trucks(&self) -> usize {
        self.row_sums.len()
    }

    pub fn weight(&self, truck: usize, candidate: usize) -> f64 {
        self.weights[truck * self.n_candidates + candidate]
    }

    pub fn row(&self, truck: usize) -> &[f64] {
        &self.weights[truck * self.n_candidates..(truck + 1) * self.n_candidates]
    }

    pub fn row_sum(&self, truck: usize) -> f64 {
        self.row_sums[truck]
    }

    /// Number of trucks with at least one link.
    pub fn n_linked_trucks(&self) -> usize {
        self.row_sums.iter().filter(|s| **s > 0.0).count()
    }

    /// Copy with every entry multiplied by `c > 0`; row sums are recomputed
    /// from the scaled entries.
    pub fn scaled(&self, c: f64) -> FrameLinkMatrix {
        debug_assert!(c > 0.0 && c.is_finite());
        let weights = self.weights.iter().map(|w| w * c).collect();
        Self::from_flat(self.n_candidates, weights)
    }
}

#[derive(Debug, Clone, Copy)]
struct TraceRow {
    timestamp: f64,
    truck_id: u64,
    x: f64,
    y: f64,
}

/// Parse a trace CSV into frames grouped by timestamp, sorted ascending.
///
/// Expected columns are `timestamp,truck_id,x,y`; a leading header row is
/// skipped when present. Extra columns (reserved names such as `soc`) are
/// ignored. Data rows are numbered from 1 in error reports, excluding the
/// header.
pub fn parse_trace(text: &str) -> Result<Vec<TraceFrame>, TraceError> {
    let mut rows = Vec::new();
    let mut data_row = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 && is_header(line) {
            continue;
        }
        data_row += 1;
        rows.push(parse_row(line, data_row)?);
    }
    frames_from_rows(rows)
}

fn is_header(line: &str) -> bool {
    line.split(',')
        .next()
        .map(|f| f.trim().eq_ignore_ascii_case("timestamp"))
        .unwrap_or(false)
}

fn parse_row(line: &str, row: usize) -> Result<TraceRow, TraceError> {
    let malformed = TraceError::MalformedRow { row };
    let mut fields = line.split(',');
    let mut next = || fields.next().map(str::trim).ok_or(malformed.clone());
    let timestamp = next()?.parse::<f64>().map_err(|_| malformed.clone())?;
    let truck_id = next()?.parse::<u64>().map_err(|_| malformed.clone())?;
    let x = next()?.parse::<f64>().map_err(|_| malformed.clone())?;
    let y = next()?.parse::<f64>().map_err(|_| malformed.clone())?;
    if !(timestamp.is_finite() && x.is_finite() && y.is_finite()) {
        return Err(malformed);
    }
    Ok(TraceRow {
        timestamp,
        truck_id,
        x,
        y,
    })
}

fn frames_from_rows(mut rows: Vec<TraceRow>) -> Result<Vec<TraceFrame>, TraceError> {
    rows.sort_by(|a, b| {
        a.timestamp
            .total_cmp(&b.timestamp)
            .then(a.truck_id.cmp(&b.truck_id))
    });
    let mut frames: Vec<TraceFrame> = Vec::new();
    for row in rows {
        let position = TruckPosition {
            truck_id: row.truck_id,
            x: row.x,
            y: row.y,
        };
        match frames.last_mut() {
            Some(frame) if frame.timestamp == row.timestamp => {
                if frame.positions.last().map(|p| p.truck_id) == Some(row.truck_id) {
                    return Err(TraceError::DuplicateTruckInFrame {
                        timestamp: row.timestamp,
                        truck_id: row.truck_id,
                    });
                }
                frame.positions.push(position);
            }
            _ => frames.push(TraceFrame {
                timestamp: row.timestamp,
                positions: vec![position],
            }),
        }
    }
    validate_frame_order(&frames)?;
    Ok(frames)
}

/// Check that frame timestamps are strictly increasing. Parsed traces hold
/// this by construction; hand-built frame sequences go through here before
/// rating.
pub fn validate_frame_order(frames: &[TraceFrame]) -> Result<(), TraceError> {
    for (i, pair) in frames.windows(2).enumerate() {
        // NaN timestamps also land here: they order with nothing
        let increasing =
            pair[1].timestamp.partial_cmp(&pair[0].timestamp) == Some(std::cmp::Ordering::Greater);
        if !increasing {
            return Err(TraceError::NonMonotoneTimestamps { position: i + 1 });
        }
    }
    Ok(())
}

/// Merge several parsed traces into one frame sequence, unioning frames
/// that share a timestamp. Used when multiple trace files cover the same
/// recording period.
pub fn merge_traces(traces: Vec<Vec<TraceFrame>>) -> Result<Vec<TraceFrame>, TraceError> {
    let rows = traces
        .into_iter()
        .flatten()
        .flat_map(|frame| {
            frame
                .positions
                .into_iter()
                .map(move |p| TraceRow {
                    timestamp: frame.timestamp,
                    truck_id: p.truck_id,
                    x: p.x,
                    y: p.y,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    frames_from_rows(rows)
}

/// Distance-decay link weight: `1 / (1 + d)` for `d <= t`, zero beyond.
pub fn link_weight(d: f64, t: f64) -> f64 {
    debug_assert!(d >= 0.0);
    debug_assert!(t > 0.0 && t.is_finite());
    if d <= t {
        1.0 / (1.0 + d)
    } else {
        0.0
    }
}

/// Compute one frame's truck-to-candidate link matrix.
///
/// In Euclidean mode the distance is straight-line. In shortest-path mode
/// the truck is snapped to its nearest candidate vertex (ties to the lowest
/// index); the distance to candidate `k` is then the snap distance plus the
/// roadmap shortest path from the snapped vertex to `k`. Trucks farther
/// than the snap radius from every candidate yield an all-zero row.
pub fn build_frame_links(
    frame: &TraceFrame,
    roadmap: &RoadmapGraph,
    cfg: &LinkConfig,
    dist: Option<&DistanceMatrix>,
) -> Result<FrameLinkMatrix, TraceError> {
    let nc = roadmap.n_candidates();
    if cfg.distance_mode == DistanceMode::ShortestPath && dist.is_none() {
        return Err(TraceError::MissingDistanceMatrix);
    }
    let mut weights = Vec::with_capacity(frame.positions.len() * nc);
    for truck in &frame.positions {
        match cfg.distance_mode {
            DistanceMode::Euclidean => {
                for v in roadmap.vertices() {
                    let d = euclidean(truck.x, truck.y, v.x, v.y);
                    weights.push(link_weight(d, cfg.threshold_t));
                }
            }
            DistanceMode::ShortestPath => {
                let dist = dist.expect("checked above");
                match nearest_candidate(roadmap, truck.x, truck.y) {
                    Some((snap, snap_d)) if snap_d <= cfg.snap_radius => {
                        for k in 0..nc {
                            let d = snap_d + dist.get(snap, k);
                            let w = if d.is_finite() {
                                link_weight(d, cfg.threshold_t)
                            } else {
                                0.0
                            };
                            weights.push(w);
                        }
                    }
                    _ => weights.extend(std::iter::repeat_n(0.0, nc)),
                }
            }
        }
    }
    Ok(FrameLinkMatrix::from_flat(nc, weights))
}

fn euclidean(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let dx = x1 - x0;
    let dy = y1 - y0;
    (dx * dx + dy * dy).sqrt()
}

fn nearest_candidate(roadmap: &RoadmapGraph, x: f64, y: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in roadmap.vertices().iter().enumerate() {
        let d = euclidean(x, y, v.x, v.y);
        if best.map(|(_, bd)| d < bd).unwrap_or(true) {
            best = Some((i, d));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_roadmap;
    use crate::paths::all_pairs_shortest;
    use proptest::prelude::*;

    #[test]
    fn parse_groups_rows_into_frames() {
        let text = "timestamp,truck_id,x,y\n0.0,1,1.0,2.0\n0.0,2,3.0,4.0\n1.0,1,5.0,6.0\n";
        let frames = parse_trace(text).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].positions.len(), 2);
        assert_eq!(frames[1].positions.len(), 1);
        assert_eq!(frames[0].positions[0].truck_id, 1);
        assert_eq!(frames[1].timestamp, 1.0);
    }

    #[test]
    fn malformed_first_data_row() {
        let err = parse_trace("abc,1,0,0\n").unwrap_err();
        assert_eq!(err, TraceError::MalformedRow { row: 1 });
    }

    #[test]
    fn malformed_row_after_header() {
        let err = parse_trace("timestamp,truck_id,x,y\n0.0,1,0,0\n0.5,x,0,0\n").unwrap_err();
        assert_eq!(err, TraceError::MalformedRow { row: 2 });
    }

    #[test]
    fn empty_trace_is_valid() {
        assert_eq!(parse_trace("").unwrap(), vec![]);
        assert_eq!(parse_trace("timestamp,truck_id,x,y\n").unwrap(), vec![]);
    }

    #[test]
    fn out_of_order_rows_are_grouped_and_sorted() {
        let text = "2.0,1,0,0\n1.0,2,0,0\n1.0,1,0,0\n";
        let frames = parse_trace(text).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].timestamp, 1.0);
        assert_eq!(frames[0].positions.len(), 2);
    }

    #[test]
    fn duplicate_truck_in_frame_is_rejected() {
        let err = parse_trace("0.0,7,1,1\n0.0,7,2,2\n").unwrap_err();
        assert_eq!(
            err,
            TraceError::DuplicateTruckInFrame {
                timestamp: 0.0,
                truck_id: 7
            }
        );
    }

    #[test]
    fn extra_columns_are_ignored() {
        let frames = parse_trace("timestamp,truck_id,x,y,soc\n0.0,1,1.0,2.0,0.8\n").unwrap();
        assert_eq!(frames[0].positions[0].x, 1.0);
    }

    #[test]
    fn hand_built_frames_must_be_ordered() {
        let f = |t: f64| TraceFrame {
            timestamp: t,
            positions: vec![],
        };
        let err = validate_frame_order(&[f(1.0), f(0.5)]).unwrap_err();
        assert_eq!(err, TraceError::NonMonotoneTimestamps { position: 1 });
        assert!(validate_frame_order(&[f(0.0), f(0.5)]).is_ok());
    }

    #[test]
    fn merge_unions_frames_at_equal_timestamps() {
        let a = parse_trace("0.0,1,0,0\n1.0,1,1,0\n").unwrap();
        let b = parse_trace("0.0,2,5,0\n").unwrap();
        let merged = merge_traces(vec![a, b]).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].positions.len(), 2);
    }

    #[test]
    fn link_weight_examples() {
        assert_eq!(link_weight(0.0, 5.0), 1.0);
        assert_eq!(link_weight(3.0, 5.0), 0.25);
        assert!((link_weight(5.0, 5.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(link_weight(5.0001, 5.0), 0.0);
    }

    fn two_candidate_roadmap() -> RoadmapGraph {
        build_roadmap(&[(0, 0.0, 0.0), (1, 4.0, 0.0)], &[(0, 1, 4.0)]).unwrap()
    }

    #[test]
    fn truck_on_candidate_gets_weight_one() {
        let g = two_candidate_roadmap();
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![TruckPosition {
                truck_id: 1,
                x: 0.0,
                y: 0.0,
            }],
        };
        let cfg = LinkConfig::new(10.0, DistanceMode::Euclidean);
        let links = build_frame_links(&frame, &g, &cfg, None).unwrap();
        assert_eq!(links.weight(0, 0), 1.0);
        assert_eq!(links.weight(0, 1), 0.2);
    }

    #[test]
    fn isolated_truck_row_is_zero() {
        let g = two_candidate_roadmap();
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![TruckPosition {
                truck_id: 1,
                x: 100.0,
                y: 100.0,
            }],
        };
        let cfg = LinkConfig::new(10.0, DistanceMode::Euclidean);
        let links = build_frame_links(&frame, &g, &cfg, None).unwrap();
        assert_eq!(links.row(0), &[0.0, 0.0]);
        assert_eq!(links.n_linked_trucks(), 0);
    }

    #[test]
    fn euclidean_row_half_quarter() {
        let g = two_candidate_roadmap();
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![TruckPosition {
                truck_id: 1,
                x: 1.0,
                y: 0.0,
            }],
        };
        let cfg = LinkConfig::new(10.0, DistanceMode::Euclidean);
        let links = build_frame_links(&frame, &g, &cfg, None).unwrap();
        assert_eq!(links.row(0), &[0.5, 0.25]);
        assert_eq!(links.row_sum(0), 0.75);
    }

    #[test]
    fn shortest_path_mode_requires_matrix() {
        let g = two_candidate_roadmap();
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![],
        };
        let cfg = LinkConfig::new(10.0, DistanceMode::ShortestPath);
        let err = build_frame_links(&frame, &g, &cfg, None).unwrap_err();
        assert_eq!(err, TraceError::MissingDistanceMatrix);
    }

    #[test]
    fn modes_agree_on_straight_line_graph_with_on_vertex_trucks() {
        // Candidates on a line with edge lengths equal to their spacing, so
        // shortest-path and Euclidean distances coincide.
        let g = build_roadmap(
            &[(0, 0.0, 0.0), (1, 1.0, 0.0), (2, 2.0, 0.0), (3, 3.0, 0.0)],
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let dist = all_pairs_shortest(&g);
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![
                TruckPosition {
                    truck_id: 1,
                    x: 1.0,
                    y: 0.0,
                },
                TruckPosition {
                    truck_id: 2,
                    x: 3.0,
                    y: 0.0,
                },
            ],
        };
        let euclid = build_frame_links(
            &frame,
            &g,
            &LinkConfig::new(2.5, DistanceMode::Euclidean),
            None,
        )
        .unwrap();
        let sp = build_frame_links(
            &frame,
            &g,
            &LinkConfig::new(2.5, DistanceMode::ShortestPath),
            Some(&dist),
        )
        .unwrap();
        assert_eq!(euclid, sp);
    }

    #[test]
    fn snap_radius_cuts_off_far_trucks() {
        let g = two_candidate_roadmap();
        let dist = all_pairs_shortest(&g);
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![TruckPosition {
                truck_id: 1,
                x: 0.0,
                y: 3.0,
            }],
        };
        let cfg = LinkConfig::new(10.0, DistanceMode::ShortestPath).with_snap_radius(2.0);
        let links = build_frame_links(&frame, &g, &cfg, Some(&dist)).unwrap();
        assert_eq!(links.row(0), &[0.0, 0.0]);

        let cfg = cfg.with_snap_radius(3.0);
        let links = build_frame_links(&frame, &g, &cfg, Some(&dist)).unwrap();
        assert_eq!(links.weight(0, 0), 0.25); // snap 3 + path 0
        assert_eq!(links.weight(0, 1), 1.0 / 8.0); // snap 3 + path 4
    }

    #[test]
    fn equidistant_snap_picks_the_lowest_index() {
        let g = two_candidate_roadmap();
        let dist = all_pairs_shortest(&g);
        // exactly between the candidates at (0,0) and (4,0)
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![TruckPosition {
                truck_id: 1,
                x: 2.0,
                y: 0.0,
            }],
        };
        let cfg = LinkConfig::new(10.0, DistanceMode::ShortestPath);
        let links = build_frame_links(&frame, &g, &cfg, Some(&dist)).unwrap();
        // snapped to candidate 0: distances 2 and 2 + 4
        assert_eq!(links.row(0), &[1.0 / 3.0, 1.0 / 7.0]);
    }

    #[test]
    fn unreachable_candidates_get_no_link_in_shortest_path_mode() {
        let g = build_roadmap(&[(0, 0.0, 0.0), (1, 4.0, 0.0)], &[]).unwrap();
        let dist = all_pairs_shortest(&g);
        let frame = TraceFrame {
            timestamp: 0.0,
            positions: vec![TruckPosition {
                truck_id: 1,
                x: 0.5,
                y: 0.0,
            }],
        };
        let cfg = LinkConfig::new(100.0, DistanceMode::ShortestPath);
        let links = build_frame_links(&frame, &g, &cfg, Some(&dist)).unwrap();
        assert_eq!(links.weight(0, 0), 1.0 / 1.5);
        assert_eq!(links.weight(0, 1), 0.0);
    }

    proptest! {
        #[test]
        fn link_weight_is_monotone_and_bounded(
            d1 in 1e-6..100.0f64,
            d2 in 1e-6..100.0f64,
            t in 1e-3..100.0f64,
        ) {
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let (w_lo, w_hi) = (link_weight(lo, t), link_weight(hi, t));
            prop_assert!(w_lo <= 1.0 && w_hi <= 1.0);
            prop_assert!(w_lo >= 0.0 && w_hi >= 0.0);
            if hi <= t && lo < hi {
                prop_assert!(w_lo > w_hi);
            }
            if hi > t {
                prop_assert_eq!(w_hi, 0.0);
            }
        }

        #[test]
        fn weight_one_only_at_zero_distance(d in 1e-9..100.0f64, t in 1e-3..100.0f64) {
            prop_assert!(link_weight(d, t) < 1.0);
            prop_assert_eq!(link_weight(0.0, t), 1.0);
        }
    }
}
