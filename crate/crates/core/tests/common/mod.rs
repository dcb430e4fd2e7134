//! Shared oracles and instance generators for the integration suites.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use csplace_core::graph::{build_roadmap, RoadmapGraph};
use csplace_core::trace::FrameLinkMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Floyd-Warshall all-pairs shortest paths, the independent oracle for the
/// Dijkstra-based implementation.
pub fn floyd_warshall(g: &RoadmapGraph) -> Vec<Vec<f64>> {
    let n = g.n_candidates();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in g.edges() {
        d[a][b] = w;
        d[b][a] = w;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let alt = d[i][k] + d[k][j];
                if alt < d[i][j] {
                    d[i][j] = alt;
                }
            }
        }
    }
    d
}

/// Connected random roadmap: a random spanning tree plus extra random
/// edges, with edge lengths independent of the coordinates.
pub fn random_connected_roadmap(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra_edges: usize,
) -> RoadmapGraph {
    let vertices: Vec<(u64, f64, f64)> = (0..n)
        .map(|i| {
            (
                i as u64,
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..100.0),
            )
        })
        .collect();
    let mut edges: Vec<(u64, u64, f64)> = Vec::new();
    let mut present = std::collections::HashSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let len = rng.random_range(0.5..10.0);
        present.insert((j.min(i), j.max(i)));
        edges.push((i as u64, j as u64, len));
    }
    for _ in 0..extra_edges {
        if n < 2 {
            break;
        }
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let key = (a.min(b), a.max(b));
        if a == b || present.contains(&key) {
            continue;
        }
        present.insert(key);
        edges.push((a as u64, b as u64, rng.random_range(0.5..10.0)));
    }
    build_roadmap(&vertices, &edges).unwrap()
}

/// Sparse random roadmap that may be disconnected.
pub fn random_roadmap(rng: &mut ChaCha8Rng, n: usize, edge_prob: f64) -> RoadmapGraph {
    let vertices: Vec<(u64, f64, f64)> = (0..n)
        .map(|i| {
            (
                i as u64,
                rng.random_range(0.0..50.0),
                rng.random_range(0.0..50.0),
            )
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(edge_prob) {
                edges.push((a as u64, b as u64, rng.random_range(0.5..10.0)));
            }
        }
    }
    build_roadmap(&vertices, &edges).unwrap()
}

/// Random link block with a mix of dense rows, sparse rows, and isolated
/// trucks (all-zero rows).
pub fn random_links(rng: &mut ChaCha8Rng, n_candidates: usize, n_trucks: usize) -> FrameLinkMatrix {
    let rows: Vec<Vec<f64>> = (0..n_trucks)
        .map(|_| {
            if rng.random_bool(0.15) {
                return vec![0.0; n_candidates];
            }
            (0..n_candidates)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        1.0 - rng.random_range(0.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    FrameLinkMatrix::from_rows(n_candidates, rows).unwrap()
}

/// Write a `cols x rows` grid roadmap with the given pitch as a roadmap
/// file. Vertex ids are row-major.
pub fn write_grid_roadmap(path: &Path, cols: usize, rows: usize, pitch: f64) {
    let mut text = String::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            writeln!(text, "V {} {} {}", id, c as f64 * pitch, r as f64 * pitch).unwrap();
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if c + 1 < cols {
                writeln!(text, "E {} {} {}", id, id + 1, pitch).unwrap();
            }
            if r + 1 < rows {
                writeln!(text, "E {} {} {}", id, id + cols, pitch).unwrap();
            }
        }
    }
    std::fs::write(path, text).unwrap();
}

/// Write a trace CSV from `(timestamp, truck_id, x, y)` rows.
pub fn write_trace(path: &Path, rows: &[(f64, u64, f64, f64)]) {
    let mut text = String::from("timestamp,truck_id,x,y\n");
    for (t, id, x, y) in rows {
        writeln!(text, "{t},{id},{x},{y}").unwrap();
    }
    std::fs::write(path, text).unwrap();
}

/// Trace rows jittering around two hotspot centers, one truck per hotspot
/// per frame.
pub fn hotspot_trace(centers: &[(f64, f64)], frames: usize) -> Vec<(f64, u64, f64, f64)> {
    let offsets = [(0.0, 0.0), (0.2, 0.0), (0.0, 0.2), (-0.2, 0.0), (0.0, -0.2)];
    let mut rows = Vec::new();
    for l in 0..frames {
        let (dx, dy) = offsets[l % offsets.len()];
        for (truck, (cx, cy)) in centers.iter().enumerate() {
            rows.push((l as f64, truck as u64 + 1, cx + dx, cy + dy));
        }
    }
    rows
}
