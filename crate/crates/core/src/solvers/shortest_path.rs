//! Dijkstra on the node-weighted 8-neighbour grid.
//!
//! Running Dijkstra over cells with the cost of entering a cell charged on
//! arrival is equivalent to running it on the node-split graph whose internal
//! edges carry the cell costs: both include the source and sink costs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::problem::GridShortestPath;
use crate::scalar::Scalar;

/// Costs are clamped to this floor before the search so perturbed (possibly
/// negative) cost vectors keep the oracle well defined.
pub const COST_FLOOR: f64 = 1e-6;

struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Entry<T> {
    // Reversed for a min-heap; ties pop the lowest node index first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

pub(crate) fn dijkstra_route<T: Scalar>(grid: &GridShortestPath, cost: &[T]) -> Vec<usize> {
    let floor = T::of(COST_FLOOR);
    let w = |v: usize| cost[v].max(floor);
    let n = grid.num_cells();
    let mut dist = vec![T::infinity(); n];
    let mut pred = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let src = grid.source();
    dist[src] = w(src);
    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        dist: dist[src],
        node: src,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == grid.sink() {
            break;
        }
        for &v in grid.neighbours(u) {
            if done[v] {
                continue;
            }
            let nd = d + w(v);
            // Strict improvement only: the first (lowest-index) predecessor wins ties.
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = u;
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    let mut route = vec![grid.sink()];
    let mut v = grid.sink();
    while v != src {
        v = pred[v];
        route.push(v);
    }
    route.reverse();
    route
}

/// Cell-indicator decision of the cheapest source→sink path.
pub fn solve<T: Scalar>(grid: &GridShortestPath, cost: &[T]) -> Vec<T> {
    let mut x = vec![T::zero(); grid.num_cells()];
    for v in dijkstra_route(grid, cost) {
        x[v] = T::one();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_satisfies_flow_conservation() {
        let g = GridShortestPath::new(4).unwrap();
        let cost: Vec<f64> = (0..16).map(|i| 1.0 + (i * 7 % 5) as f64).collect();
        let route = g.route(&cost).unwrap();
        let x = g.edge_indicator::<f64>(&route);
        let (a, b) = g.incidence::<f64>();
        assert_eq!(a.mul_vec(&x), b);
    }

    #[test]
    fn negative_costs_are_clamped() {
        let g = GridShortestPath::new(3).unwrap();
        let cost = vec![-5.0; 9];
        let x = solve(&g, &cost);
        // all cells cost the floor, so the 3-cell diagonal is cheapest
        assert_eq!(x.iter().sum::<f64>(), 3.0);
        assert_eq!(x, solve(&g, &[1.0; 9]));
    }
}
