//! Breadth-first components and spanning trees over a vertex subset.

use std::collections::VecDeque;

/// Connected components of the subgraph induced on `vertices`, using
/// adjacency lists whose neighbors are sorted ascending. Components are
/// listed in order of their smallest vertex; each component's vertices are
/// sorted ascending.
pub fn components(adjacency: &[Vec<usize>], vertices: &[usize]) -> Vec<Vec<usize>> {
    let mut member = vec![false; adjacency.len()];
    for &v in vertices {
        member[v] = true;
    }
    let mut seen = vec![false; adjacency.len()];
    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();

    let mut out = Vec::new();
    for &start in &sorted {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &w in &adjacency[v] {
                if member[w] && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Breadth-first spanning tree rooted at `root`, visiting neighbors in
/// ascending order. Returns `(vertex, parent)` pairs in visiting order,
/// excluding the root itself.
pub fn bfs_tree(adjacency: &[Vec<usize>], member: &[bool], root: usize) -> Vec<(usize, usize)> {
    let mut seen = vec![false; adjacency.len()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if member[w] && !seen[w] {
                seen[w] = true;
                order.push((w, v));
                queue.push_back(w);
            }
        }
    }
    order
}
