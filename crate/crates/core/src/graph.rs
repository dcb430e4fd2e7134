//! Roadmap graph of charging-station candidates.
//!
//! Candidates form an undirected, distance-weighted graph. Recorded truck
//! positions attach to it one frame at a time; the combined weight structure
//! keeps candidates and trucks in separate blocks, with trucks linking only
//! towards candidates and never to each other.

use std::collections::HashMap;

use thiserror::Error;

use crate::trace::FrameLinkMatrix;

/// Errors raised while parsing, building, or assembling roadmap structures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("roadmap line {line}: malformed record")]
    MalformedLine { line: usize },
    #[error("duplicate vertex id {id}")]
    DuplicateVertex { id: u64 },
    #[error("edge ({a}, {b}): unknown vertex id")]
    DanglingEdge { a: u64, b: u64 },
    #[error("edge ({a}, {b}): length {length} is not positive")]
    NonPositiveLength { a: u64, b: u64, length: f64 },
    #[error("self-loop on vertex {id}")]
    SelfLoop { id: u64 },
    #[error("duplicate edge ({a}, {b})")]
    DuplicateEdge { a: u64, b: u64 },
    #[error("link block has {got} candidate columns, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A candidate vertex: external id plus planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

/// Undirected, distance-weighted graph over charging-station candidates.
///
/// Vertices are kept in ascending id order; every matrix and vector produced
/// downstream (link matrices, ratings, distance and conflict matrices,
/// selection vectors) uses that ordering as its index space.
#[derive(Debug, Clone)]
pub struct RoadmapGraph {
    vertices: Vec<Vertex>,
    adjacency: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
    index_by_id: HashMap<u64, usize>,
}

impl RoadmapGraph {
    /// Number of candidate vertices.
    pub fn n_candidates(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> &Vertex {
        &self.vertices[index]
    }

    /// Index of the vertex with the given external id, if present.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.index_by_id.get(&id).copied()
    }

    /// Neighbors of a vertex as `(index, edge length)` pairs.
    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.adjacency[index].len()
    }

    /// Undirected edges, each stored once with index `a < b`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Candidate-block weight: the edge length between two vertices, or zero
    /// when they are not adjacent.
    pub fn weight_between(&self, i: usize, k: usize) -> f64 {
        self.adjacency[i]
            .iter()
            .find(|(n, _)| *n == k)
            .map(|(_, w)| *w)
            .unwrap_or(0.0)
    }

    /// Sum of incident edge lengths of a vertex.
    pub fn weight_row_sum(&self, index: usize) -> f64 {
        self.adjacency[index].iter().map(|(_, w)| *w).sum()
    }

    /// Axis-aligned bounding box `(min_x, min_y, max_x, max_y)` of the
    /// vertex coordinates. `None` for an empty graph.
    pub fn bounding_box(&self) -> Option<(f64, f64, f64, f64)> {
        let first = self.vertices.first()?;
        let mut bb = (first.x, first.y, first.x, first.y);
        for v in &self.vertices[1..] {
            bb.0 = bb.0.min(v.x);
            bb.1 = bb.1.min(v.y);
            bb.2 = bb.2.max(v.x);
            bb.3 = bb.3.max(v.y);
        }
        Some(bb)
    }
}

/// Build a validated roadmap from vertex and edge records.
///
/// Vertices are `(id, x, y)`, edges are `(id_a, id_b, length)` with each
/// undirected edge listed once. Rejects duplicate ids, self-loops,
/// non-positive lengths, edges to unknown vertices, and repeated edges in
/// either orientation.
pub fn build_roadmap(
    vertices: &[(u64, f64, f64)],
    edges: &[(u64, u64, f64)],
) -> Result<RoadmapGraph, GraphError> {
    let mut sorted: Vec<Vertex> = vertices
        .iter()
        .map(|&(id, x, y)| Vertex { id, x, y })
        .collect();
    sorted.sort_by_key(|v| v.id);
    for pair in sorted.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(GraphError::DuplicateVertex { id: pair[0].id });
        }
    }

    let index_by_id: HashMap<u64, usize> =
        sorted.iter().enumerate().map(|(i, v)| (v.id, i)).collect();

    let mut adjacency = vec![Vec::new(); sorted.len()];
    let mut canonical = Vec::with_capacity(edges.len());
    let mut seen = HashMap::new();
    for &(a, b, length) in edges {
        if a == b {
            return Err(GraphError::SelfLoop { id: a });
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(GraphError::NonPositiveLength { a, b, length });
        }
        let (ia, ib) = match (index_by_id.get(&a), index_by_id.get(&b)) {
            (Some(&ia), Some(&ib)) => (ia, ib),
            _ => return Err(GraphError::DanglingEdge { a, b }),
        };
        let key = (ia.min(ib), ia.max(ib));
        if seen.insert(key, length).is_some() {
            return Err(GraphError::DuplicateEdge { a, b });
        }
        adjacency[ia].push((ib, length));
        adjacency[ib].push((ia, length));
        canonical.push((key.0, key.1, length));
    }
    for row in &mut adjacency {
        row.sort_by_key(|(n, _)| *n);
    }
    canonical.sort_by_key(|e| (e.0, e.1));

    Ok(RoadmapGraph {
        vertices: sorted,
        adjacency,
        edges: canonical,
        index_by_id,
    })
}

/// Parse the roadmap file format.
///
/// One record per line: `V <id> <x> <y>` declares a vertex, `E <id1> <id2>
/// <length>` an undirected edge. Blank lines are skipped and `#` starts a
/// comment that runs to the end of the line.
pub fn parse_roadmap(text: &str) -> Result<RoadmapGraph, GraphError> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let malformed = GraphError::MalformedLine { line };
        match fields[0] {
            "V" if fields.len() == 4 => {
                let id = fields[1].parse::<u64>().map_err(|_| malformed.clone())?;
                let x = parse_finite(fields[2]).ok_or_else(|| malformed.clone())?;
                let y = parse_finite(fields[3]).ok_or(malformed)?;
                vertices.push((id, x, y));
            }
            "E" if fields.len() == 4 => {
                let a = fields[1].parse::<u64>().map_err(|_| malformed.clone())?;
                let b = fields[2].parse::<u64>().map_err(|_| malformed.clone())?;
                let length = parse_finite(fields[3]).ok_or(malformed)?;
                edges.push((a, b, length));
            }
            _ => return Err(malformed),
        }
    }
    build_roadmap(&vertices, &edges)
}

fn parse_finite(field: &str) -> Option<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// The full-graph weight structure for one frame: the symmetric candidate
/// block plus the truck-to-candidate link block. The candidate-to-truck and
/// truck-to-truck blocks are identically zero and never stored.
///
/// Vertex `m < n_C` is candidate `m`; vertex `m >= n_C` is truck
/// `m - n_C` of the frame.
#[derive(Debug, Clone, Copy)]
pub struct SplitWeightMatrix<'a> {
    roadmap: &'a RoadmapGraph,
    links: &'a FrameLinkMatrix,
}

impl<'a> SplitWeightMatrix<'a> {
    pub fn n_candidates(&self) -> usize {
        self.roadmap.n_candidates()
    }

    pub fn n_trucks(&self) -> usize {
        self.links.n_trucks()
    }

    /// Total number of vertices in the implied square matrix.
    pub fn n_total(&self) -> usize {
        self.n_candidates() + self.n_trucks()
    }

    /// Weight entry `(m, n)` of the implied full matrix.
    pub fn entry(&self, m: usize, n: usize) -> f64 {
        let nc = self.n_candidates();
        match (m < nc, n < nc) {
            (true, true) => self.roadmap.weight_between(m, n),
            (false, true) => self.links.weight(m - nc, n),
            // candidate->truck and truck->truck blocks
            _ => 0.0,
        }
    }

    /// Row sum of the implied full matrix. The diagonal is zero throughout,
    /// so this equals the off-diagonal sum as well.
    pub fn row_sum(&self, m: usize) -> f64 {
        let nc = self.n_candidates();
        if m < nc {
            self.roadmap.weight_row_sum(m)
        } else {
            self.links.row_sum(m - nc)
        }
    }

    pub fn roadmap(&self) -> &'a RoadmapGraph {
        self.roadmap
    }

    pub fn links(&self) -> &'a FrameLinkMatrix {
        self.links
    }
}

/// Join a roadmap with one frame's link block.
///
/// The link block must have exactly one column per candidate. Truck rows of
/// the result sum to the link-block row sums; the zero blocks contribute
/// nothing by construction.
pub fn assemble_split_matrix<'a>(
    roadmap: &'a RoadmapGraph,
    links: &'a FrameLinkMatrix,
) -> Result<SplitWeightMatrix<'a>, GraphError> {
    if links.n_candidates() != roadmap.n_candidates() {
        return Err(GraphError::DimensionMismatch {
            expected: roadmap.n_candidates(),
            got: links.n_candidates(),
        });
    }
    Ok(SplitWeightMatrix { roadmap, links })
}

/// A 3x3 grid of candidates with unit edge lengths plus three trucks, the
/// smallest instance exercising every block of the split structure.
#[cfg(test)]
pub(crate) fn grid_roadmap(cols: usize, rows: usize) -> RoadmapGraph {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = (r * cols + c) as u64;
            vertices.push((id, c as f64, r as f64));
            if c + 1 < cols {
                edges.push((id, id + 1, 1.0));
            }
            if r + 1 < rows {
                edges.push((id, id + cols as u64, 1.0));
            }
        }
    }
    build_roadmap(&vertices, &edges).unwrap()
}
