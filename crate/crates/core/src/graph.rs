//! Directed graphs given by a vertex-by-edge incidence matrix
//! (+1 at the head of an edge, -1 at its tail).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

/// Tail and head of every column of an incidence matrix.
pub fn edge_endpoints(incidence: &DMatrix<f64>) -> Vec<(usize, usize)> {
    (0..incidence.ncols())
        .map(|e| {
            let mut tail = usize::MAX;
            let mut head = usize::MAX;
            for v in 0..incidence.nrows() {
                let b = incidence[(v, e)];
                if b < -0.5 {
                    tail = v;
                } else if b > 0.5 {
                    head = v;
                }
            }
            (tail, head)
        })
        .collect()
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra on nonnegative edge costs. Returns the edge indices of a
/// shortest path; among equally short paths, the one whose last edges have
/// the smallest indices is chosen. `None` when unreachable.
pub fn shortest_path(
    n_vertices: usize,
    edges: &[(usize, usize)],
    cost: &[f64],
    origin: usize,
    dest: usize,
) -> Option<Vec<usize>> {
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    let mut in_edges: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
    for (e, &(u, v)) in edges.iter().enumerate() {
        if u < n_vertices && v < n_vertices {
            out_edges[u].push(e);
            in_edges[v].push(e);
        }
    }
    let mut dist = vec![f64::INFINITY; n_vertices];
    let mut order = vec![usize::MAX; n_vertices];
    let mut settled = 0;
    dist[origin] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Item(0.0, origin));
    while let Some(Item(d, u)) = heap.pop() {
        if order[u] != usize::MAX || d > dist[u] {
            continue;
        }
        order[u] = settled;
        settled += 1;
        for &e in &out_edges[u] {
            let v = edges[e].1;
            let nd = d + cost[e];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
    if !dist[dest].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut v = dest;
    while v != origin {
        let tight = in_edges[v].iter().copied().find(|&e| {
            let u = edges[e].0;
            order[u] < order[v]
                && (dist[u] + cost[e] - dist[v]).abs() <= 1e-12 * (1.0 + dist[v].abs())
        })?;
        path.push(tight);
        v = edges[tight].0;
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_follow_the_sign_convention() {
        let b = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
        assert_eq!(edge_endpoints(&b), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn picks_the_cheaper_route() {
        let edges = [(0, 1), (1, 3), (0, 2), (2, 3)];
        assert_eq!(shortest_path(4, &edges, &[1.0, 1.0, 1.0, 0.5], 0, 3), Some(vec![2, 3]));
        assert_eq!(shortest_path(4, &edges, &[1.0, 1.0, 1.0, 0.5], 3, 0), None);
        assert_eq!(shortest_path(4, &edges, &[1.0; 4], 0, 0), Some(vec![]));
    }

    #[test]
    fn ties_are_broken_deterministically() {
        let edges = [(0, 1), (1, 3), (0, 2), (2, 3)];
        let a = shortest_path(4, &edges, &[1.0; 4], 0, 3).unwrap();
        assert_eq!(a, shortest_path(4, &edges, &[1.0; 4], 0, 3).unwrap());
        assert_eq!(a, vec![0, 1]);
    }

    fn brute_force(v: usize, edges: &[(usize, usize)], cost: &[f64], o: usize, d: usize) -> Option<f64> {
        fn go(u: usize, d: usize, edges: &[(usize, usize)], cost: &[f64], seen: &mut Vec<bool>, acc: f64, best: &mut Option<f64>) {
            if u == d {
                *best = Some(best.map_or(acc, |b: f64| b.min(acc)));
                return;
            }
            for (e, &(a, b)) in edges.iter().enumerate() {
                if a == u && !seen[b] {
                    seen[b] = true;
                    go(b, d, edges, cost, seen, acc + cost[e], best);
                    seen[b] = false;
                }
            }
        }
        let mut seen = vec![false; v];
        seen[o] = true;
        let mut best = None;
        go(o, d, edges, cost, &mut seen, 0.0, &mut best);
        best
    }

    proptest! {
        #[test]
        fn dijkstra_matches_path_enumeration(
            v in 2usize..7,
            raw in prop::collection::vec((0usize..7, 0usize..7, 0.0..10.0f64), 0..16),
            o in 0usize..7,
            d in 0usize..7,
        ) {
            let (o, d) = (o % v, d % v);
            let mut edges = Vec::new();
            let mut cost = Vec::new();
            for (a, b, c) in raw {
                if a % v != b % v {
                    edges.push((a % v, b % v));
                    cost.push(c);
                }
            }
            let got = shortest_path(v, &edges, &cost, o, d);
            let want = brute_force(v, &edges, &cost, o, d);
            prop_assert_eq!(got.is_some(), want.is_some());
            if let (Some(path), Some(best)) = (got, want) {
                let total: f64 = path.iter().map(|&e| cost[e]).sum();
                prop_assert!((total - best).abs() <= 1e-9);
                let mut at = o;
                for &e in &path {
                    prop_assert_eq!(edges[e].0, at);
                    at = edges[e].1;
                }
                prop_assert_eq!(at, d);
            }
        }
    }
}
