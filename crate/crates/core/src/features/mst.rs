//! MST family: edge costs, node degrees, and hop depth from the depot in
//! the minimum spanning tree of the complete distance graph.

use crate::instance::DistanceMatrix;
use crate::stats::StatSummary;

use super::FeatureVector;

#[derive(Debug, Clone)]
pub struct Mst {
    /// Tree edges `(parent, child, cost)`, one per non-root node.
    pub edges: Vec<(usize, usize, f64)>,
    pub degrees: Vec<usize>,
    /// Hop count from the root, root itself at 0.
    pub depths: Vec<usize>,
    pub total: f64,
}

/// Prim's algorithm on the complete graph, O(n²). Ties broken by lowest
/// node index, so the tree is deterministic.
pub fn minimum_spanning_tree(d: &DistanceMatrix, root: usize) -> Mst {
    let n = d.n();
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    key[root] = 0.0;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 0..n {
        let mut best = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (best == usize::MAX || key[v] < key[best]) {
                best = v;
            }
        }
        in_tree[best] = true;
        if parent[best] != usize::MAX {
            edges.push((parent[best], best, key[best]));
        }
        for v in 0..n {
            if !in_tree[v] && d.at(best, v) < key[v] {
                key[v] = d.at(best, v);
                parent[v] = best;
            }
        }
    }
    let mut degrees = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(p, c, _) in &edges {
        degrees[p] += 1;
        degrees[c] += 1;
        children[p].push(c);
    }
    let mut depths = vec![0usize; n];
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for &c in &children[v] {
            depths[c] = depths[v] + 1;
            stack.push(c);
        }
    }
    let total = edges.iter().map(|e| e.2).sum();
    Mst {
        edges,
        degrees,
        depths,
        total,
    }
}

pub(super) fn extract(dmat: &DistanceMatrix, depot: usize, fv: &mut FeatureVector) {
    let mst = minimum_spanning_tree(dmat, depot);
    let costs: Vec<f64> = mst.edges.iter().map(|e| e.2).collect();
    fv.insert_summary("MST1", StatSummary::of(&costs));
    let degs: Vec<f64> = mst.degrees.iter().map(|&d| d as f64).collect();
    fv.insert_summary("MST2", StatSummary::of(&degs));
    let depths: Vec<f64> = mst.depths.iter().map(|&d| d as f64).collect();
    fv.insert_summary("MST3", StatSummary::of(&depths));
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Decode a Prüfer sequence over `0..n` into the edge list of the
    /// corresponding labeled tree. The map seq → tree is a bijection, so
    /// iterating all nⁿ⁻² sequences enumerates every spanning tree.
    fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
        if n == 2 {
            return vec![(0, 1)];
        }
        let mut deg = vec![1usize; n];
        for &s in seq {
            deg[s] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &s in seq {
            let leaf = (0..n).find(|&i| deg[i] == 1).unwrap();
            edges.push((leaf, s));
            deg[leaf] -= 1;
            deg[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&i| deg[i] == 1).collect();
        edges.push((rest[0], rest[1]));
        edges
    }

    /// Exhaustive minimum spanning-tree cost via Prüfer enumeration.
    fn exhaustive_mst_cost(d: &DistanceMatrix) -> f64 {
        let n = d.n();
        if n == 2 {
            return d.at(0, 1);
        }
        let mut best = f64::INFINITY;
        let mut seq = vec![0usize; n - 2];
        loop {
            let cost: f64 = prufer_edges(&seq, n).iter().map(|&(a, b)| d.at(a, b)).sum();
            best = best.min(cost);
            // Odometer over base-n sequences.
            let mut i = 0;
            loop {
                if i == seq.len() {
                    return best;
                }
                seq[i] += 1;
                if seq[i] < n {
                    break;
                }
                seq[i] = 0;
                i += 1;
            }
        }
    }

    fn matrix_from_points(pts: &[(f64, f64)]) -> DistanceMatrix {
        let n = pts.len();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let dx = pts[i].0 - pts[j].0;
                    let dy = pts[i].1 - pts[j].1;
                    rows[i][j] = (dx * dx + dy * dy).sqrt();
                }
            }
        }
        DistanceMatrix::from_rows(rows)
    }

    #[test]
    fn collinear_path() {
        let d = matrix_from_points(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let mst = minimum_spanning_tree(&d, 0);
        assert_eq!(mst.total, 3.0);
        let mut degs = mst.degrees.clone();
        degs.sort_unstable();
        assert_eq!(degs, vec![1, 1, 2, 2]);
        assert_eq!(mst.depths, vec![0, 1, 2, 3]);
        let depths: Vec<f64> = mst.depths.iter().map(|&x| x as f64).collect();
        assert_eq!(crate::stats::median_of(&depths), 1.5);
    }

    #[test]
    fn star_has_center_degree_k() {
        // Depot at the center of 5 spokes of radius 100; chords ≈ 118 > 100,
        // so the MST is exactly the star.
        let mut pts = vec![(0.0, 0.0)];
        for i in 0..5 {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 5.0;
            pts.push((100.0 * a.cos(), 100.0 * a.sin()));
        }
        let d = matrix_from_points(&pts);
        let mst = minimum_spanning_tree(&d, 0);
        assert_eq!(*mst.degrees.iter().max().unwrap(), 5);
        assert_eq!(mst.degrees[0], 5);
    }

    proptest! {
        #[test]
        fn prim_matches_exhaustive_enumeration(
            pts in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 2..=8)
        ) {
            let d = matrix_from_points(&pts);
            let mst = minimum_spanning_tree(&d, 0);
            let brute = exhaustive_mst_cost(&d);
            prop_assert!((mst.total - brute).abs() < 1e-9, "prim {} vs brute {}", mst.total, brute);
            // Structural sanity: n−1 edges, connected (every node has a depth).
            prop_assert_eq!(mst.edges.len(), pts.len() - 1);
            let reached = mst.depths.iter().filter(|&&d| d > 0).count();
            prop_assert_eq!(reached, pts.len() - 1);
        }
    }
}
