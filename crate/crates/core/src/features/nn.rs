//! NN family: nearest-neighbor distances and the component structure of
//! directed kNN graphs, aggregated over a set of neighborhood sizes.

use crate::instance::DistanceMatrix;
use crate::stats::StatSummary;

use super::{push_missing_summary, FeatureVector};

/// Out-adjacency of the directed kNN graph: node → its k nearest others,
/// ties broken by lower index.
pub fn knn_graph(d: &DistanceMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = d.n();
    (0..n)
        .map(|i| {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                d.at(i, a)
                    .partial_cmp(&d.at(i, b))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order.truncate(k);
            order
        })
        .collect()
}

/// Strongly connected components (iterative Tarjan). Returns a component
/// id per node; ids are assigned in discovery order.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    // Explicit DFS frames: (node, next child position).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        frames.push((start, 0));
        while !frames.is_empty() {
            let (v, ci) = *frames.last().unwrap();
            if index[v] == usize::MAX {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if ci < adj[v].len() {
                frames.last_mut().unwrap().1 += 1;
                let w = adj[v][ci];
                if index[w] == usize::MAX {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Weakly connected components via union-find on the symmetrized graph.
pub fn weakly_connected_components(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (u, outs) in adj.iter().enumerate() {
        for &v in outs {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru.max(rv)] = ru.min(rv);
            }
        }
    }
    let mut ids = std::collections::HashMap::new();
    let mut comp = vec![0usize; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        let next = ids.len();
        comp[i] = *ids.entry(r).or_insert(next);
    }
    comp
}

fn component_sizes(comp: &[usize]) -> Vec<f64> {
    let k = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in comp {
        sizes[c] += 1;
    }
    sizes.into_iter().map(|s| s as f64).collect()
}

pub(super) fn extract(
    dmat: &DistanceMatrix,
    coords_raw: Option<&[(f64, f64)]>,
    kset: &[usize],
    fv: &mut FeatureVector,
    missing: &mut Vec<String>,
) {
    let n = dmat.n();

    // NN1: distance to the first nearest neighbor, per node.
    let nn1: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| dmat.at(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    fv.insert_summary("NN1", StatSummary::of(&nn1));

    let ks: Vec<usize> = kset.iter().copied().filter(|&k| k >= 1 && k < n).collect();
    let mut scc_counts = Vec::new();
    let mut wcc_counts = Vec::new();
    let mut scc_sizes = Vec::new();
    let mut wcc_sizes = Vec::new();
    let mut in_degrees = Vec::new();
    let mut ratios = Vec::new();
    for &k in &ks {
        let adj = knn_graph(dmat, k);
        let scc = strongly_connected_components(&adj);
        let wcc = weakly_connected_components(&adj);
        let s_sizes = component_sizes(&scc);
        let w_sizes = component_sizes(&wcc);
        scc_counts.push(s_sizes.len() as f64);
        wcc_counts.push(w_sizes.len() as f64);
        scc_sizes.extend(s_sizes);
        wcc_sizes.extend(w_sizes);
        let mut indeg = vec![0usize; n];
        for outs in &adj {
            for &v in outs {
                indeg[v] += 1;
            }
        }
        in_degrees.extend(indeg.into_iter().map(|d| d as f64));
        ratios.push(scc_counts.last().unwrap() / wcc_counts.last().unwrap());
    }
    fv.insert_summary("NN2", StatSummary::of(&scc_counts));
    fv.insert_summary("NN3", StatSummary::of(&wcc_counts));
    fv.insert_summary("NN4", StatSummary::of(&scc_sizes));
    fv.insert_summary("NN5", StatSummary::of(&wcc_sizes));
    fv.insert_summary("NN6", StatSummary::of(&in_degrees));
    fv.insert_summary("NN7", StatSummary::of(&ratios));

    // NN8: angle at each node between the rays to its two nearest
    // neighbors (chosen by the distance matrix, measured on raw coords).
    match coords_raw {
        None => push_missing_summary(missing, "NN8"),
        Some(coords) => {
            let angles: Vec<f64> = (0..n)
                .map(|i| {
                    let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                    order.sort_by(|&a, &b| {
                        dmat.at(i, a)
                            .partial_cmp(&dmat.at(i, b))
                            .unwrap()
                            .then(a.cmp(&b))
                    });
                    let (j1, j2) = (order[0], order[1]);
                    let u = (coords[j1].0 - coords[i].0, coords[j1].1 - coords[i].1);
                    let v = (coords[j2].0 - coords[i].0, coords[j2].1 - coords[i].1);
                    let nu = (u.0 * u.0 + u.1 * u.1).sqrt();
                    let nv = (v.0 * v.0 + v.1 * v.1).sqrt();
                    if nu <= 0.0 || nv <= 0.0 {
                        0.0
                    } else {
                        ((u.0 * v.0 + u.1 * v.1) / (nu * nv)).clamp(-1.0, 1.0).acos()
                    }
                })
                .collect();
            fv.insert_summary("NN8", StatSummary::of(&angles));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

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

    /// Boolean transitive closure; the oracle for component counts.
    fn closure(adj: &[Vec<usize>]) -> Vec<Vec<bool>> {
        let n = adj.len();
        let mut reach = vec![vec![false; n]; n];
        for (i, outs) in adj.iter().enumerate() {
            reach[i][i] = true;
            for &j in outs {
                reach[i][j] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    fn oracle_scc_sizes(adj: &[Vec<usize>]) -> Vec<f64> {
        let n = adj.len();
        let reach = closure(adj);
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
            for &m in &members {
                seen[m] = true;
            }
            sizes.push(members.len() as f64);
        }
        sizes
    }

    fn oracle_wcc_sizes(adj: &[Vec<usize>]) -> Vec<f64> {
        let n = adj.len();
        let mut sym = vec![Vec::new(); n];
        for (i, outs) in adj.iter().enumerate() {
            for &j in outs {
                sym[i].push(j);
                sym[j].push(i);
            }
        }
        oracle_scc_sizes(&sym)
    }

    #[test]
    fn complete_graph_is_one_component() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64 * 10.0, (i * i) as f64)).collect();
        let d = matrix_from_points(&pts);
        let adj = knn_graph(&d, 5);
        let scc = strongly_connected_components(&adj);
        let wcc = weakly_connected_components(&adj);
        assert!(scc.iter().all(|&c| c == scc[0]));
        assert!(wcc.iter().all(|&c| c == wcc[0]));
    }

    #[test]
    fn equilateral_triangle_angle() {
        let pts = vec![(0.0, 0.0), (100.0, 0.0), (50.0, 86.60254037844386)];
        let d = matrix_from_points(&pts);
        let mut fv = FeatureVector::new("eq");
        let mut missing = Vec::new();
        extract(&d, Some(&pts), &[1], &mut fv, &mut missing);
        let mean = fv.get("NN8_mean").unwrap();
        assert!((mean - std::f64::consts::FRAC_PI_3).abs() < 1e-9);
        assert!(fv.get("NN8_sd").unwrap() < 1e-9);
    }

    #[test]
    fn two_far_pairs_disconnect() {
        // Two tight pairs far apart, k=1: each pair is its own SCC and WCC.
        let pts = vec![(0.0, 0.0), (1.0, 0.0), (100.0, 0.0), (101.0, 0.0)];
        let d = matrix_from_points(&pts);
        let adj = knn_graph(&d, 1);
        let scc = component_sizes(&strongly_connected_components(&adj));
        let wcc = component_sizes(&weakly_connected_components(&adj));
        assert_eq!(scc.len(), 2);
        assert_eq!(wcc.len(), 2);
    }

    proptest! {
        #[test]
        fn components_match_transitive_closure(
            pts in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..=12)
        ) {
            let d = matrix_from_points(&pts);
            for k in [1usize, 3, 5, 7, 10] {
                if k >= pts.len() {
                    continue;
                }
                let adj = knn_graph(&d, k);
                let mut got_scc = component_sizes(&strongly_connected_components(&adj));
                let mut want_scc = oracle_scc_sizes(&adj);
                got_scc.sort_by(|a, b| a.partial_cmp(b).unwrap());
                want_scc.sort_by(|a, b| a.partial_cmp(b).unwrap());
                prop_assert_eq!(got_scc, want_scc);

                let mut got_wcc = component_sizes(&weakly_connected_components(&adj));
                let mut want_wcc = oracle_wcc_sizes(&adj);
                got_wcc.sort_by(|a, b| a.partial_cmp(b).unwrap());
                want_wcc.sort_by(|a, b| a.partial_cmp(b).unwrap());
                prop_assert_eq!(got_wcc, want_wcc);
            }
        }
    }
}
