//! Undirected, unweighted graphs and their Laplacian.
//!
//! Vertices are indexed `0..n` inside the library. Every file format and the
//! command line use 1-based indices; conversion happens in [`crate::io`].

use std::collections::{BTreeSet, HashSet};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A finite undirected graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list. Each pair is normalized so the
    /// smaller endpoint comes first; duplicates and self-loops are rejected.
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::InvalidGraph(
                "graph must have at least one vertex".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n_vertices || j >= n_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has an endpoint outside 1..={n_vertices}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!(
                    "self-loop at vertex {}",
                    i + 1
                )));
            }
            let e = (i.min(j), i.max(j));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
        }
        Ok(Self {
            n_vertices,
            edges: set,
        })
    }

    pub fn empty(n_vertices: usize) -> Result<Self> {
        Self::new(n_vertices, [])
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Adjacency lists with neighbors in ascending order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_vertices];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let all: Vec<usize> = (0..self.n_vertices).collect();
        crate::traversal::components(&self.adjacency(), &all).len() == 1
    }

    /// The combinatorial Laplacian `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n_vertices;
        let mut l = DMatrix::zeros(n, n);
        for &(i, j) in &self.edges {
            l[(i, j)] = -1.0;
            l[(j, i)] = -1.0;
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
        }
        l
    }
}

/// A named point in the plane, e.g. a weather station.
#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

impl Station {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            x,
            y,
        }
    }
}

/// Connects every pair of stations within Euclidean distance `radius`.
/// Vertex `k` of the result is the `k`-th station in input order.
pub fn build_radius_graph(stations: &[Station], radius: f64) -> Result<Graph> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if stations.len() < 2 {
        return Err(Error::InvalidGraph(format!(
            "need at least 2 stations, got {}",
            stations.len()
        )));
    }
    let mut seen = HashSet::new();
    for s in stations {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::InvalidGraph(format!(
                "duplicate station id {:?}",
                s.id
            )));
        }
    }
    let mut edges = Vec::new();
    for (i, a) in stations.iter().enumerate() {
        for (j, b) in stations.iter().enumerate().skip(i + 1) {
            if (a.x - b.x).hypot(a.y - b.y) <= radius {
                edges.push((i, j));
            }
        }
    }
    Graph::new(stations.len(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn collinear_points_connect_neighbors_only() {
        let s = [
            Station::new("a", 0.0, 0.0),
            Station::new("b", 1.0, 0.0),
            Station::new("c", 2.0, 0.0),
        ];
        let g = build_radius_graph(&s, 1.5).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn small_radius_gives_no_edges() {
        let s = [
            Station::new("a", 0.0, 0.0),
            Station::new("b", 0.3, 0.4),
            Station::new("c", 3.0, 1.0),
        ];
        let g = build_radius_graph(&s, 0.49).unwrap();
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn radius_graph_rejects_bad_input() {
        let dup = [Station::new("a", 0.0, 0.0), Station::new("a", 1.0, 0.0)];
        assert!(matches!(
            build_radius_graph(&dup, 1.0),
            Err(Error::InvalidGraph(_))
        ));
        let one = [Station::new("a", 0.0, 0.0)];
        assert!(matches!(
            build_radius_graph(&one, 1.0),
            Err(Error::InvalidGraph(_))
        ));
        let two = [Station::new("a", 0.0, 0.0), Station::new("b", 1.0, 0.0)];
        assert!(build_radius_graph(&two, 0.0).is_err());
    }

    #[test]
    fn graph_rejects_loops_duplicates_and_out_of_range() {
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn laplacian_of_path() {
        let l = path3().laplacian();
        let expected = DMatrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]);
        assert_eq!(l, expected);
    }

    #[test]
    fn laplacian_of_single_edge() {
        let l = Graph::new(2, [(0, 1)]).unwrap().laplacian();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.]));
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let g = Graph::new(5, [(0, 1), (0, 2), (0, 4), (2, 3), (3, 4)]).unwrap();
        let l = g.laplacian();
        for r in 0..5 {
            assert_eq!(l.row(r).sum(), 0.0);
        }
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert!(l[(i, j)] == 0.0 || l[(i, j)] == -1.0);
                }
            }
        }
    }

    #[test]
    fn connectivity() {
        assert!(path3().is_connected());
        assert!(!Graph::new(3, [(0, 1)]).unwrap().is_connected());
    }
}
