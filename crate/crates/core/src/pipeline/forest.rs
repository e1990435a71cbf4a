//! Bagged classification trees over 2D points, scored by out-of-bag
//! error. Splits consider one randomly chosen coordinate per node
//! (mtry = 1 of 2), Gini impurity, majority leaves.

use rand::Rng;

use crate::streams;

#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 100,
            max_depth: 25,
        }
    }
}

enum Node {
    Leaf(bool),
    Split {
        axis: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

fn majority(labels: &[bool], idx: &[usize]) -> bool {
    let pos = idx.iter().filter(|&&i| labels[i]).count();
    // Ties predict "not good": the conservative call for a selector.
    2 * pos > idx.len()
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

/// Best Gini split of `idx` along `axis`: `(threshold, weighted impurity)`.
fn best_split(points: &[[f64; 2]], labels: &[bool], idx: &[usize], axis: usize) -> Option<(f64, f64)> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| {
        points[a][axis]
            .partial_cmp(&points[b][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let total = order.len();
    let total_pos = order.iter().filter(|&&i| labels[i]).count();
    let mut best: Option<(f64, f64)> = None;
    let mut left_pos = 0usize;
    for (count, win) in order.windows(2).enumerate() {
        if labels[win[0]] {
            left_pos += 1;
        }
        let left_n = count + 1;
        let (va, vb) = (points[win[0]][axis], points[win[1]][axis]);
        if va == vb {
            continue; // can't separate equal values
        }
        let right_n = total - left_n;
        let impurity = (left_n as f64 * gini(left_pos, left_n)
            + right_n as f64 * gini(total_pos - left_pos, right_n))
            / total as f64;
        let threshold = va + (vb - va) / 2.0;
        if best.map_or(true, |(_, bi)| impurity < bi) {
            best = Some((threshold, impurity));
        }
    }
    best
}

fn grow(
    points: &[[f64; 2]],
    labels: &[bool],
    idx: &[usize],
    depth: usize,
    cfg: &ForestConfig,
    rng: &mut impl Rng,
) -> Node {
    let pos = idx.iter().filter(|&&i| labels[i]).count();
    if pos == 0 || pos == idx.len() || idx.len() < 2 || depth >= cfg.max_depth {
        return Node::Leaf(majority(labels, idx));
    }
    let axis = rng.gen_range(0..2);
    let node_gini = gini(pos, idx.len());
    match best_split(points, labels, idx, axis) {
        Some((threshold, impurity)) if impurity < node_gini - 1e-12 => {
            let (left, right): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| points[i][axis] <= threshold);
            Node::Split {
                axis,
                threshold,
                left: Box::new(grow(points, labels, &left, depth + 1, cfg, rng)),
                right: Box::new(grow(points, labels, &right, depth + 1, cfg, rng)),
            }
        }
        _ => Node::Leaf(majority(labels, idx)),
    }
}

fn predict(node: &Node, p: [f64; 2]) -> bool {
    match node {
        Node::Leaf(label) => *label,
        Node::Split {
            axis,
            threshold,
            left,
            right,
        } => {
            if p[*axis] <= *threshold {
                predict(left, p)
            } else {
                predict(right, p)
            }
        }
    }
}

/// Train a forest and return its out-of-bag misclassification rate.
/// Deterministic in `(points, labels, cfg, seed)`; per-tree randomness is
/// derived from `seed`.
pub fn oob_error(points: &[[f64; 2]], labels: &[bool], cfg: &ForestConfig, seed: u64) -> f64 {
    let n = points.len();
    assert_eq!(n, labels.len());
    assert!(n >= 2, "forest needs at least 2 samples");
    let mut votes_pos = vec![0usize; n];
    let mut votes_total = vec![0usize; n];
    for t in 0..cfg.trees {
        let mut rng = streams::stream(seed, streams::TAG_FOREST, t as u64);
        let mut in_bag = vec![false; n];
        let bag: Vec<usize> = (0..n)
            .map(|_| {
                let i = rng.gen_range(0..n);
                in_bag[i] = true;
                i
            })
            .collect();
        let tree = grow(points, labels, &bag, 0, cfg, &mut rng);
        for i in 0..n {
            if !in_bag[i] {
                votes_total[i] += 1;
                if predict(&tree, points[i]) {
                    votes_pos[i] += 1;
                }
            }
        }
    }
    let mut wrong = 0usize;
    let mut counted = 0usize;
    for i in 0..n {
        if votes_total[i] == 0 {
            continue; // never out of bag; excluded from the estimate
        }
        counted += 1;
        let predicted = 2 * votes_pos[i] > votes_total[i];
        if predicted != labels[i] {
            wrong += 1;
        }
    }
    if counted == 0 {
        return 1.0;
    }
    wrong as f64 / counted as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves(n: usize) -> (Vec<[f64; 2]>, Vec<bool>) {
        // Left half bad, right half good, clearly separated.
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut rng = crate::streams::stream(2, crate::streams::TAG_SYNTHETIC, 4);
        for _ in 0..n {
            let good = rng.gen_bool(0.5);
            let x: f64 = if good {
                rng.gen_range(1.0..2.0)
            } else {
                rng.gen_range(-2.0..-1.0)
            };
            let y: f64 = rng.gen_range(-1.0..1.0);
            points.push([x, y]);
            labels.push(good);
        }
        (points, labels)
    }

    #[test]
    fn separable_data_scores_near_zero() {
        let (points, labels) = halves(120);
        let err = oob_error(&points, &labels, &ForestConfig::default(), 3);
        assert!(err < 0.05, "OOB {err} on separable data");
    }

    #[test]
    fn random_labels_score_near_half() {
        let mut rng = crate::streams::stream(6, crate::streams::TAG_SYNTHETIC, 5);
        let points: Vec<[f64; 2]> = (0..200)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let labels: Vec<bool> = (0..200).map(|_| rng.gen_bool(0.5)).collect();
        let err = oob_error(&points, &labels, &ForestConfig::default(), 3);
        assert!((0.3..0.7).contains(&err), "OOB {err} on noise labels");
    }

    #[test]
    fn single_class_is_trivially_learned() {
        let mut rng = crate::streams::stream(7, crate::streams::TAG_SYNTHETIC, 6);
        let points: Vec<[f64; 2]> = (0..50)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let labels = vec![true; 50];
        assert_eq!(oob_error(&points, &labels, &ForestConfig::default(), 1), 0.0);
    }

    #[test]
    fn oob_is_deterministic() {
        let (points, labels) = halves(60);
        let a = oob_error(&points, &labels, &ForestConfig::default(), 9);
        let b = oob_error(&points, &labels, &ForestConfig::default(), 9);
        assert_eq!(a, b);
        let c = oob_error(&points, &labels, &ForestConfig::default(), 10);
        // Different seed almost surely shifts the estimate a little.
        assert!((a - c).abs() < 0.2);
    }

    #[test]
    fn diagonal_boundary_needs_both_axes() {
        // Labels depend on x + y; axis-aligned stumps can't do it alone but
        // a forest of depth > 1 trees can.
        let mut rng = crate::streams::stream(8, crate::streams::TAG_SYNTHETIC, 8);
        let points: Vec<[f64; 2]> = (0..200)
            .map(|_| [rng.gen_range(-1.0f64..1.0), rng.gen_range(-1.0f64..1.0)])
            .collect();
        let labels: Vec<bool> = points.iter().map(|p| p[0] + p[1] > 0.0).collect();
        let err = oob_error(&points, &labels, &ForestConfig::default(), 4);
        assert!(err < 0.15, "OOB {err} on diagonal boundary");
    }
}
