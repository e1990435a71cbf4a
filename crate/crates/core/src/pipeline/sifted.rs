//! Feature selection: keep features correlated with performance, cluster
//! them by correlation similarity, then pick one feature per cluster by
//! minimizing the mean out-of-bag error of per-algorithm forests trained
//! on a temporary 2D PCA of each candidate subset.

use rayon::prelude::*;
use thiserror::Error;

use crate::stats::pearson;
use crate::streams;

use super::forest::{oob_error, ForestConfig};
use super::kmeans::{
    calinski_harabasz, cluster_signed, correlation_dissimilarity, davies_bouldin, silhouette,
    standardize_vectors,
};
use super::pca::pca2;

#[derive(Debug, Clone)]
pub struct SiftedConfig {
    /// Number of feature clusters (= size of the selected feature set).
    pub k: usize,
    /// A feature survives when some algorithm correlates beyond this.
    pub corr_threshold: f64,
    /// Cap on combination evaluations; beyond it, seeded sampling plus a
    /// greedy refinement pass replace exhaustive enumeration.
    pub budget: usize,
    /// Upper end of the K sweep reported for cluster-count diagnostics.
    pub ksweep_max: usize,
    pub forest: ForestConfig,
}

impl Default for SiftedConfig {
    fn default() -> Self {
        SiftedConfig {
            k: 23,
            corr_threshold: 0.5,
            budget: 10_000,
            ksweep_max: 30,
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMetricsRow {
    pub k: usize,
    pub silhouette: f64,
    pub db: f64,
    pub ch: f64,
}

#[derive(Debug, Clone)]
pub struct SiftedResult {
    /// `correlations[j][a]`: Pearson r of input feature `j` against
    /// algorithm `a` (all input features, pre-filter).
    pub correlations: Vec<Vec<f64>>,
    /// Indices into the input feature list that passed the filter.
    pub surviving: Vec<usize>,
    pub k: usize,
    /// Cluster id per surviving feature.
    pub assignment: Vec<usize>,
    /// One input-feature index per cluster, ordered by cluster id.
    pub chosen: Vec<usize>,
    /// Every evaluated combination (input-feature indices) with its mean
    /// OOB error; infinite for rank-deficient candidates.
    pub evaluated: Vec<(Vec<usize>, f64)>,
    pub best_oob: f64,
    pub kmetrics: Vec<KMetricsRow>,
    /// False when the budget forced sampling instead of enumeration.
    pub exhaustive: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum SiftedError {
    #[error("correlation filter needs at least 3 instances, got {0}")]
    TooFewInstances(usize),
    #[error("only {0} features survive the correlation filter; at least 2 are needed")]
    TooFewSurvivors(usize),
    #[error("k = {k} exceeds the {surviving} surviving features")]
    BadK { k: usize, surviving: usize },
}

pub fn sifted(
    features: &[Vec<f64>],
    feature_names: &[String],
    y_corr: &[Vec<f64>],
    labels: &[Vec<bool>],
    cfg: &SiftedConfig,
    seed: u64,
) -> Result<SiftedResult, SiftedError> {
    let n = features.len();
    if n < 3 {
        return Err(SiftedError::TooFewInstances(n));
    }
    let d = feature_names.len();
    let a = if n > 0 { y_corr[0].len() } else { 0 };

    let column = |data: &[Vec<f64>], j: usize| -> Vec<f64> { data.iter().map(|r| r[j]).collect() };
    let y_cols: Vec<Vec<f64>> = (0..a).map(|j| column(y_corr, j)).collect();

    let mut correlations = Vec::with_capacity(d);
    let mut surviving = Vec::new();
    for j in 0..d {
        let f_col = column(features, j);
        let rs: Vec<f64> = y_cols.iter().map(|y| pearson(&f_col, y)).collect();
        if rs.iter().any(|r| r.abs() > cfg.corr_threshold) {
            surviving.push(j);
        }
        correlations.push(rs);
    }
    if surviving.len() < 2 {
        return Err(SiftedError::TooFewSurvivors(surviving.len()));
    }
    if cfg.k < 2 || cfg.k > surviving.len() {
        return Err(SiftedError::BadK {
            k: cfg.k,
            surviving: surviving.len(),
        });
    }

    // Feature value-vectors, standardized so the signed metric tracks 1−|ρ|.
    let mut vectors: Vec<Vec<f64>> = surviving.iter().map(|&j| column(features, j)).collect();
    standardize_vectors(&mut vectors);
    let dissim = correlation_dissimilarity(&vectors);

    let mut kmetrics = Vec::new();
    for k in 2..=cfg.ksweep_max.min(surviving.len()) {
        let c = cluster_signed(&vectors, k, seed);
        let aligned = align(&vectors, &c.signs);
        kmetrics.push(KMetricsRow {
            k,
            silhouette: silhouette(&dissim, &c.assignment, k),
            db: davies_bouldin(&aligned, &c.assignment, k),
            ch: calinski_harabasz(&aligned, &c.assignment, k),
        });
    }

    let clustering = cluster_signed(&vectors, cfg.k, seed);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); cfg.k];
    for (pos, &c) in clustering.assignment.iter().enumerate() {
        groups[c].push(pos);
    }
    debug_assert!(groups.iter().all(|g| !g.is_empty()));

    let label_cols: Vec<Vec<bool>> = (0..labels[0].len())
        .map(|j| labels.iter().map(|r| r[j]).collect())
        .collect();
    let evaluate = |cand: &[usize], cand_idx: usize| -> f64 {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| cand.iter().map(|&pos| vectors[pos][i]).collect())
            .collect();
        let Some(p) = pca2(&rows) else {
            return f64::INFINITY; // degenerate plane: worst possible score
        };
        let mut total = 0.0;
        for (ai, lab) in label_cols.iter().enumerate() {
            let forest_seed =
                streams::derive(seed, streams::TAG_COMBINATION, (cand_idx as u64) * 1024 + ai as u64);
            total += oob_error(&p.scores, lab, &cfg.forest, forest_seed);
        }
        total / label_cols.len() as f64
    };

    let total_combos: u128 = groups.iter().map(|g| g.len() as u128).product();
    let exhaustive = total_combos <= cfg.budget as u128;
    let candidates: Vec<Vec<usize>> = if exhaustive {
        enumerate_combinations(&groups)
    } else {
        sample_candidates(&groups, cfg.budget.div_ceil(2).max(1), seed)
    };

    let mut evaluated: Vec<(Vec<usize>, f64)> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, cand)| (cand.clone(), evaluate(cand, i)))
        .collect();

    let best_of = |ev: &[(Vec<usize>, f64)]| -> usize {
        let mut best = 0;
        for (i, (_, oob)) in ev.iter().enumerate() {
            if *oob < ev[best].1 {
                best = i;
            }
        }
        best
    };

    if !exhaustive {
        // Greedy coordinate refinement from the best sample, spending the
        // remaining budget.
        let mut seen: std::collections::HashSet<Vec<usize>> =
            evaluated.iter().map(|(c, _)| c.clone()).collect();
        let mut current = evaluated[best_of(&evaluated)].0.clone();
        let mut current_oob = evaluated[best_of(&evaluated)].1;
        let mut improved = true;
        while improved && evaluated.len() < cfg.budget {
            improved = false;
            for (c, group) in groups.iter().enumerate() {
                for &alt in group {
                    if alt == current[c] || evaluated.len() >= cfg.budget {
                        continue;
                    }
                    let mut cand = current.clone();
                    cand[c] = alt;
                    if !seen.insert(cand.clone()) {
                        continue;
                    }
                    let oob = evaluate(&cand, evaluated.len());
                    evaluated.push((cand.clone(), oob));
                    if oob < current_oob {
                        current = cand;
                        current_oob = oob;
                        improved = true;
                    }
                }
            }
        }
    }

    let best_idx = best_of(&evaluated);
    let best_oob = evaluated[best_idx].1;
    let chosen: Vec<usize> = evaluated[best_idx].0.iter().map(|&pos| surviving[pos]).collect();
    let evaluated: Vec<(Vec<usize>, f64)> = evaluated
        .into_iter()
        .map(|(cand, oob)| (cand.into_iter().map(|pos| surviving[pos]).collect(), oob))
        .collect();

    Ok(SiftedResult {
        correlations,
        surviving,
        k: cfg.k,
        assignment: clustering.assignment,
        chosen,
        evaluated,
        best_oob,
        kmetrics,
        exhaustive,
    })
}

fn align(vectors: &[Vec<f64>], signs: &[f64]) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .zip(signs)
        .map(|(v, &s)| v.iter().map(|&x| s * x).collect())
        .collect()
}

/// Odometer enumeration: one member per group, groups in cluster order.
fn enumerate_combinations(groups: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; groups.len()];
    loop {
        out.push(idx.iter().zip(groups).map(|(&i, g)| g[i]).collect());
        let mut pos = groups.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < groups[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Seeded distinct-candidate sample (uniform per cluster).
fn sample_candidates(groups: &[Vec<usize>], count: usize, seed: u64) -> Vec<Vec<usize>> {
    use rand::Rng;
    let mut rng = streams::stream(seed, streams::TAG_COMBINATION, u64::MAX);
    let mut seen = indexmap::IndexSet::new();
    let mut attempts = 0usize;
    while seen.len() < count && attempts < count.saturating_mul(20).max(64) {
        let cand: Vec<usize> = groups.iter().map(|g| g[rng.gen_range(0..g.len())]).collect();
        seen.insert(cand);
        attempts += 1;
    }
    seen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn identical_column_survives_noise_does_not() {
        let mut rng = crate::streams::stream(1, crate::streams::TAG_SYNTHETIC, 10);
        let n = 60;
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let features: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![y[i], rng.gen_range(0.0..1.0), -2.0 * y[i] + 5.0])
            .collect();
        let y_corr: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
        let labels: Vec<Vec<bool>> = y.iter().map(|&v| vec![v <= 0.5]).collect();
        let cfg = SiftedConfig {
            k: 2,
            ..Default::default()
        };
        let r = sifted(&features, &names(3), &y_corr, &labels, &cfg, 5).unwrap();
        assert_eq!(r.surviving, vec![0, 2], "copy and affine copy survive, noise does not");
        assert!((r.correlations[0][0] - 1.0).abs() < 1e-12);
        assert!((r.correlations[2][0] + 1.0).abs() < 1e-12);
        assert!(r.correlations[1][0].abs() < 0.5);
    }

    #[test]
    fn planted_factor_survives_with_high_correlation() {
        let mut rng = crate::streams::stream(2, crate::streams::TAG_SYNTHETIC, 11);
        let n = 200;
        let d = 6;
        let mut features: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        // Column 5 shadows the planted factor so at least two features
        // survive and selection can run.
        for f in features.iter_mut() {
            f[5] = 0.8 * f[3] + 0.3 * rng.gen_range(-1.0..1.0);
        }
        let y_corr: Vec<Vec<f64>> = features
            .iter()
            .map(|f| vec![0.9 * f[3] + rng.gen_range(-0.1..0.1)])
            .collect();
        let labels: Vec<Vec<bool>> = y_corr.iter().map(|y| vec![y[0] <= 0.0]).collect();
        let cfg = SiftedConfig {
            k: 2,
            ..Default::default()
        };
        let r = sifted(&features, &names(d), &y_corr, &labels, &cfg, 8).unwrap();
        assert!(r.surviving.contains(&3));
        assert!(r.correlations[3][0] > 0.9, "r = {}", r.correlations[3][0]);
    }

    /// Two predictive factors in separate correlation clusters; their
    /// noisier shadows should lose the combination search.
    fn planted_two_cluster_data() -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<bool>>) {
        let mut rng = crate::streams::stream(3, crate::streams::TAG_SYNTHETIC, 12);
        let n = 160;
        let mut features = Vec::new();
        let mut y = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let f1: f64 = rng.gen_range(-1.0..1.0);
            let f2: f64 = rng.gen_range(-1.0..1.0);
            // Columns: f1, noisy f1, f2, noisy f2.
            let row = vec![
                f1,
                f1 + rng.gen_range(-0.4..0.4),
                f2,
                f2 + rng.gen_range(-0.4..0.4),
            ];
            let y1 = f1 + 0.1 * rng.gen_range(-1.0..1.0);
            let y2 = f2 + 0.1 * rng.gen_range(-1.0..1.0);
            labels.push(vec![y1 <= 0.0, y2 <= 0.0]);
            y.push(vec![y1, y2]);
            features.push(row);
        }
        (features, y, labels)
    }

    #[test]
    fn combination_search_prefers_the_clean_factors() {
        let (features, y, labels) = planted_two_cluster_data();
        let cfg = SiftedConfig {
            k: 2,
            ..Default::default()
        };
        let r = sifted(&features, &names(4), &y, &labels, &cfg, 4).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.evaluated.len(), 4, "2 clusters × 2 members each");
        let mut chosen = r.chosen.clone();
        chosen.sort_unstable();
        assert_eq!(chosen, vec![0, 2], "clean f1 and f2 should win");
        assert!(r.best_oob < 0.15, "OOB {}", r.best_oob);
        // Reported best is the minimum over everything evaluated.
        let min = r.evaluated.iter().map(|(_, o)| *o).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_oob, min);
    }

    #[test]
    fn singleton_clusters_mean_single_candidate() {
        let (features, y, labels) = planted_two_cluster_data();
        // k = surviving count → all singletons → exactly one combination.
        let cfg = SiftedConfig {
            k: 4,
            ..Default::default()
        };
        let r = sifted(&features, &names(4), &y, &labels, &cfg, 4).unwrap();
        assert_eq!(r.evaluated.len(), 1);
        assert_eq!(r.chosen.len(), 4);
        assert!(r.exhaustive);
    }

    #[test]
    fn budget_one_returns_the_single_sample() {
        let (features, y, labels) = planted_two_cluster_data();
        let cfg = SiftedConfig {
            k: 2,
            budget: 1,
            ..Default::default()
        };
        let r = sifted(&features, &names(4), &y, &labels, &cfg, 4).unwrap();
        assert!(!r.exhaustive);
        assert_eq!(r.evaluated.len(), 1, "budget of one evaluation");
        assert_eq!(r.chosen.len(), 2);
    }

    #[test]
    fn preconditions_are_checked() {
        let features = vec![vec![1.0], vec![2.0]];
        let y = vec![vec![1.0], vec![2.0]];
        let labels = vec![vec![true], vec![false]];
        assert_eq!(
            sifted(&features, &names(1), &y, &labels, &SiftedConfig::default(), 0).unwrap_err(),
            SiftedError::TooFewInstances(2)
        );
        let (features, y, labels) = planted_two_cluster_data();
        let cfg = SiftedConfig {
            k: 5,
            ..Default::default()
        };
        assert_eq!(
            sifted(&features, &names(4), &y, &labels, &cfg, 0).unwrap_err(),
            SiftedError::BadK { k: 5, surviving: 4 }
        );
    }

    #[test]
    fn result_is_deterministic() {
        let (features, y, labels) = planted_two_cluster_data();
        let cfg = SiftedConfig {
            k: 2,
            ..Default::default()
        };
        let r1 = sifted(&features, &names(4), &y, &labels, &cfg, 9).unwrap();
        let r2 = sifted(&features, &names(4), &y, &labels, &cfg, 9).unwrap();
        assert_eq!(r1.chosen, r2.chosen);
        assert_eq!(r1.best_oob, r2.best_oob);
        assert_eq!(r1.assignment, r2.assignment);
    }
}
