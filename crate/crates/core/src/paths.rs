//! All-pairs shortest paths on the roadmap and the separation conflict
//! matrix derived from them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::graph::RoadmapGraph;

/// Symmetric matrix of shortest-path lengths between candidates, with
/// `f64::INFINITY` for unreachable pairs and zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n_candidates(&self) -> usize {
        self.n
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.d[m * self.n + k]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.d[m * self.n..(m + 1) * self.n]
    }
}

/// Binary conflict matrix: entry 0 marks a pair whose shortest-path
/// distance is within the separation radius (the pair may not be selected
/// together), entry 1 a sufficiently separated pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictMatrix {
    n: usize,
    a: Vec<u8>,
    separation_r: f64,
}

impl ConflictMatrix {
    pub fn n_candidates(&self) -> usize {
        self.n
    }

    pub fn separation_r(&self) -> f64 {
        self.separation_r
    }

    /// The raw matrix entry: 0 when the pair is within the separation
    /// radius, 1 beyond it. The diagonal is 0.
    pub fn get(&self, m: usize, k: usize) -> u8 {
        self.a[m * self.n + k]
    }

    /// Whether two distinct candidates are too close to co-select.
    pub fn conflicting(&self, m: usize, k: usize) -> bool {
        m != k && self.get(m, k) == 0
    }

    /// All-ones conflict matrix off the diagonal: no pair conflicts. Useful
    /// for unconstrained selection problems.
    pub fn unconstrained(n: usize) -> ConflictMatrix {
        let mut a = vec![1u8; n * n];
        for m in 0..n {
            a[m * n + m] = 0;
        }
        ConflictMatrix {
            n,
            a,
            separation_r: 0.0,
        }
    }

    /// Build directly from entries; rows of length `n`, diagonal forced to 0.
    pub fn from_entries(n: usize, a: Vec<u8>, separation_r: f64) -> ConflictMatrix {
        assert_eq!(a.len(), n * n);
        let mut a = a;
        for m in 0..n {
            a[m * n + m] = 0;
        }
        ConflictMatrix { n, a, separation_r }
    }
}

/// Exact all-pairs shortest-path lengths via one Dijkstra run per source.
///
/// Sources run independently in parallel; the result is symmetrized from
/// the lower-source run so the matrix is exactly symmetric regardless of
/// per-path float summation order.
pub fn all_pairs_shortest(roadmap: &RoadmapGraph) -> DistanceMatrix {
    let n = roadmap.n_candidates();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|src| dijkstra(roadmap, src))
        .collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rows[i][j];
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DistanceMatrix { n, d }
}

#[derive(Debug, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, node index as deterministic tie break
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(roadmap: &RoadmapGraph, src: usize) -> Vec<f64> {
    let n = roadmap.n_candidates();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: src,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, len) in roadmap.neighbors(node) {
            let nd = d + len;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(HeapEntry {
                    dist: nd,
                    node: next,
                });
            }
        }
    }
    dist
}

/// Threshold the distance matrix at the separation radius `R`: pairs with
/// `D <= R` conflict (entry 0), pairs farther apart or unreachable do not
/// (entry 1). The comparison is exact, including the boundary.
pub fn build_conflict_matrix(d: &DistanceMatrix, separation_r: f64) -> ConflictMatrix {
    debug_assert!(separation_r >= 0.0);
    let n = d.n_candidates();
    let mut a = vec![0u8; n * n];
    for m in 0..n {
        for k in 0..n {
            a[m * n + k] = u8::from(d.get(m, k) > separation_r);
        }
    }
    ConflictMatrix { n, a, separation_r }
}
