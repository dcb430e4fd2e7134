//! Candidate ratings.
//!
//! The production path is direct and non-iterative: every truck with at
//! least one link distributes one unit of importance across its linked
//! candidates in proportion to the link weights, and frames accumulate by
//! elementwise summation in timestamp order.
//!
//! The general importance machinery (Google matrix, one propagation step,
//! power iteration) is kept at toy scale as an independent route to the
//! same numbers and is not used by the pipeline.

use thiserror::Error;

use crate::graph::SplitWeightMatrix;
use crate::trace::FrameLinkMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("rating vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Whether a rating vector belongs to a single frame or is the sum over a
/// whole trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingKind {
    PerFrame,
    Accumulated,
}

/// Non-negative per-candidate ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingVector {
    values: Vec<f64>,
    kind: RatingKind,
}

impl RatingVector {
    pub fn new(values: Vec<f64>, kind: RatingKind) -> RatingVector {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        RatingVector { values, kind }
    }

    pub fn zeros(len: usize, kind: RatingKind) -> RatingVector {
        RatingVector {
            values: vec![0.0; len],
            kind,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kind(&self) -> RatingKind {
        self.kind
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Rate one frame: each truck with a nonzero row contributes its normalized
/// link weights, so the rating mass of the frame equals the number of
/// linked trucks. Trucks without links contribute nothing.
pub fn rate_frame(links: &FrameLinkMatrix) -> RatingVector {
    let nc = links.n_candidates();
    let mut values = vec![0.0; nc];
    for truck in 0..links.n_trucks() {
        let row_sum = links.row_sum(truck);
        if row_sum > 0.0 {
            for (k, w) in links.row(truck).iter().enumerate() {
                if *w > 0.0 {
                    values[k] += w / row_sum;
                }
            }
        }
    }
    RatingVector::new(values, RatingKind::PerFrame)
}

/// Sum per-frame ratings elementwise. Callers pass frames in ascending
/// timestamp order; the fold is sequential in slice order so the reduction
/// is bit-reproducible regardless of how the frames were rated.
pub fn accumulate(frames: &[RatingVector]) -> Result<RatingVector, RankingError> {
    let len = frames.first().map(|f| f.len()).unwrap_or(0);
    let mut values = vec![0.0; len];
    for frame in frames {
        debug_assert_eq!(frame.kind(), RatingKind::PerFrame);
        if frame.len() != len {
            return Err(RankingError::DimensionMismatch {
                expected: len,
                got: frame.len(),
            });
        }
        for (acc, v) in values.iter_mut().zip(frame.values()) {
            *acc += v;
        }
    }
    Ok(RatingVector::new(values, RatingKind::Accumulated))
}

/// Dense column-stochastic transition matrix of the full split graph:
/// `M[k][m] = w_mk / row_sum(m)`. Columns of vertices without outgoing
/// weight are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GoogleMatrix {
    n: usize,
    m: Vec<f64>,
}

impl GoogleMatrix {
    pub fn n_total(&self) -> usize {
        self.n
    }

    /// Entry `(k, m)`: the share of vertex `m`'s importance flowing to `k`.
    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.m[k * self.n + m]
    }

    pub fn column_sum(&self, m: usize) -> f64 {
        (0..self.n).map(|k| self.get(k, m)).sum()
    }
}

/// Oracle scale only: dense matrices beyond this size are a programming
/// error, the production path never builds one.
const GOOGLE_MATRIX_MAX_VERTICES: usize = 10_000;

/// Build the dense transition matrix of an assembled split structure.
pub fn build_google_matrix(split: &SplitWeightMatrix) -> GoogleMatrix {
    let n = split.n_total();
    assert!(
        n <= GOOGLE_MATRIX_MAX_VERTICES,
        "dense transition matrix limited to {GOOGLE_MATRIX_MAX_VERTICES} vertices"
    );
    let mut m = vec![0.0; n * n];
    for src in 0..n {
        let row_sum = split.row_sum(src);
        if row_sum > 0.0 {
            for k in 0..n {
                let w = split.entry(src, k);
                if w > 0.0 {
                    m[k * n + src] = w / row_sum;
                }
            }
        }
    }
    GoogleMatrix { n, m }
}

/// One propagation step restricted to truck-to-candidate flow: every truck
/// vertex starts with importance 1 and pushes it through its column of the
/// transition matrix; only the candidate components are kept. Agrees with
/// [`rate_frame`] on the frame the matrix was assembled from.
pub fn one_step_importance(matrix: &GoogleMatrix, n_candidates: usize) -> RatingVector {
    let n = matrix.n_total();
    let mut values = vec![0.0; n_candidates];
    for (k, value) in values.iter_mut().enumerate() {
        for m in n_candidates..n {
            *value += matrix.get(k, m);
        }
    }
    RatingVector::new(values, RatingKind::PerFrame)
}

/// Result of the iterative eigenvector solve. `converged` is false when the
/// iteration budget ran out before the max-norm change fell below the
/// tolerance; the last iterate is still returned.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterationResult {
    pub values: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Repeated application of the transition matrix from a uniform start,
/// 1-norm normalized when the limit is nonzero. There is no damping, so
/// periodic structures legitimately fail to converge. Note that on some
/// periodic matrices the uniform vector happens to be stationary already;
/// use [`power_iteration_from`] to probe those from other starts.
pub fn power_iteration(matrix: &GoogleMatrix, max_iters: usize, tol: f64) -> PowerIterationResult {
    let n = matrix.n_total();
    power_iteration_from(matrix, vec![1.0 / n as f64; n], max_iters, tol)
}

/// [`power_iteration`] with an explicit starting vector.
pub fn power_iteration_from(
    matrix: &GoogleMatrix,
    start: Vec<f64>,
    max_iters: usize,
    tol: f64,
) -> PowerIterationResult {
    assert!(max_iters >= 1);
    let n = matrix.n_total();
    assert_eq!(start.len(), n);
    let mut p = start;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let mut next = vec![0.0; n];
        for (k, slot) in next.iter_mut().enumerate() {
            for (m, pm) in p.iter().enumerate() {
                let t = matrix.get(k, m);
                if t > 0.0 {
                    *slot += t * pm;
                }
            }
        }
        let delta = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        p = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    let norm: f64 = p.iter().map(|v| v.abs()).sum();
    if norm > 0.0 {
        for v in &mut p {
            *v /= norm;
        }
    }
    PowerIterationResult {
        values: p,
        converged,
        iterations,
    }
}
