//! Data preparation: optional outlier clamping, optional per-column power
//! transform + z-score, good/bad labeling of performance values, and
//! exclusion of incomplete rows. Labels always come from the raw
//! performance values, before any transform.

use serde::{Deserialize, Serialize};

use crate::metadata::MetadataTable;
use crate::perf::label_good;
use crate::stats::quantile;

#[derive(Debug, Clone)]
pub struct PrelimConfig {
    /// Threshold for "good" performance.
    pub epsilon: f64,
    /// Performance is a reward (higher better) rather than a cost.
    pub phi_max: bool,
    /// Clamp features to median ± 5·IQR before anything else.
    pub phi_bnd: bool,
    /// Data is already normalized; skips the transform path even when
    /// `transform` is set.
    pub phi_nrm: bool,
    /// Apply Box-Cox + z-score to every feature and performance column.
    /// Off by default: the reference datasets arrive pre-normalized.
    pub transform: bool,
}

impl Default for PrelimConfig {
    fn default() -> Self {
        PrelimConfig {
            epsilon: 0.15,
            phi_max: false,
            phi_bnd: false,
            phi_nrm: false,
            transform: false,
        }
    }
}

/// Fitted normalization of one column: `x ↦ (boxcox(x + shift, λ) − mean) / sd`,
/// with `lambda = None` meaning no power step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub lambda: Option<f64>,
    pub shift: f64,
    pub mean: f64,
    pub sd: f64,
}

impl FeatureTransform {
    pub const IDENTITY: FeatureTransform = FeatureTransform {
        lambda: None,
        shift: 0.0,
        mean: 0.0,
        sd: 1.0,
    };

    pub fn apply(&self, x: f64) -> f64 {
        let v = match self.lambda {
            Some(l) => box_cox(x + self.shift, l),
            None => x,
        };
        (v - self.mean) / self.sd
    }

    /// Compose with a subsequent z-score `(y − mean2) / sd2`.
    pub fn then_zscore(&self, mean2: f64, sd2: f64) -> FeatureTransform {
        FeatureTransform {
            lambda: self.lambda,
            shift: self.shift,
            mean: self.mean + mean2 * self.sd,
            sd: self.sd * sd2,
        }
    }
}

pub struct PrelimResult {
    /// Complete rows only, columns transformed per the flags; constant
    /// feature columns dropped.
    pub table: MetadataTable,
    /// Good/bad labels per kept row × algorithm, from raw performance.
    pub labels: Vec<Vec<bool>>,
    /// Raw (untransformed) performance of the kept rows, for callers that
    /// need the original scale.
    pub raw_performance: Vec<Vec<f64>>,
    /// Per kept feature column, the fitted transform (identity entries
    /// when the transform path is off).
    pub transforms: Vec<FeatureTransform>,
    pub dropped_features: Vec<String>,
    pub excluded_instances: Vec<String>,
}

/// `(x^λ − 1)/λ`, or `ln x` at λ = 0. Callers must shift x positive.
pub fn box_cox(x: f64, lambda: f64) -> f64 {
    debug_assert!(x > 0.0, "box_cox needs positive input, got {x}");
    if lambda.abs() < 1e-12 {
        x.ln()
    } else {
        (x.powf(lambda) - 1.0) / lambda
    }
}

/// Maximum-likelihood λ over a fixed grid in [−5, 5].
pub fn box_cox_mle(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let log_sum: f64 = values.iter().map(|&x| x.ln()).sum();
    let mut best = (f64::NEG_INFINITY, 1.0);
    let mut lambda = -5.0;
    while lambda <= 5.0 + 1e-9 {
        let transformed: Vec<f64> = values.iter().map(|&x| box_cox(x, lambda)).collect();
        let mean = transformed.iter().sum::<f64>() / n;
        let var = transformed.iter().map(|&y| (y - mean).powi(2)).sum::<f64>() / n;
        if var > 0.0 {
            let ll = -0.5 * n * var.ln() + (lambda - 1.0) * log_sum;
            if ll > best.0 {
                best = (ll, lambda);
            }
        }
        lambda += 0.01;
    }
    best.1
}

fn column_mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    (mean, var.sqrt())
}

/// Fit the transform path on one column: shift positive, Box-Cox by MLE,
/// z-score. Returns `None` for constant columns.
fn fit_transform(values: &[f64]) -> Option<(FeatureTransform, Vec<f64>)> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let shift = if min > 0.0 { 0.0 } else { 1.0 - min };
    let shifted: Vec<f64> = values.iter().map(|&x| x + shift).collect();
    let lambda = box_cox_mle(&shifted);
    let powered: Vec<f64> = shifted.iter().map(|&x| box_cox(x, lambda)).collect();
    let (mean, sd) = column_mean_sd(&powered);
    if sd == 0.0 {
        return None;
    }
    let out = powered.iter().map(|&y| (y - mean) / sd).collect();
    Some((
        FeatureTransform {
            lambda: Some(lambda),
            shift,
            mean,
            sd,
        },
        out,
    ))
}

fn clamp_column(values: &mut [f64]) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let median = quantile(&sorted, 0.5);
    let (lo, hi) = (median - 5.0 * iqr, median + 5.0 * iqr);
    for v in values {
        *v = v.clamp(lo, hi);
    }
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

pub fn prelim(table: &MetadataTable, cfg: &PrelimConfig) -> PrelimResult {
    let kept = table.complete_rows();
    let excluded_instances: Vec<String> = (0..table.n_instances())
        .filter(|i| !kept.contains(i))
        .map(|i| table.instances[i].clone())
        .collect();

    let take_col = |cells: &dyn Fn(usize) -> Option<f64>| -> Vec<f64> {
        kept.iter().map(|&i| cells(i).unwrap()).collect()
    };
    let d = table.feature_names.len();
    let a = table.algorithm_names.len();
    let mut feature_cols: Vec<Vec<f64>> = (0..d)
        .map(|j| take_col(&|i| table.features[i][j]))
        .collect();
    let mut perf_cols: Vec<Vec<f64>> = (0..a)
        .map(|j| take_col(&|i| table.performance[i][j]))
        .collect();
    let raw_performance: Vec<Vec<f64>> = kept
        .iter()
        .enumerate()
        .map(|(r, _)| (0..a).map(|j| perf_cols[j][r]).collect())
        .collect();

    let labels: Vec<Vec<bool>> = raw_performance
        .iter()
        .map(|row| row.iter().map(|&y| label_good(y, cfg.epsilon, cfg.phi_max)).collect())
        .collect();

    if cfg.phi_bnd {
        for col in &mut feature_cols {
            clamp_column(col);
        }
    }

    let transform_on = cfg.transform && !cfg.phi_nrm;
    let mut kept_features = Vec::new();
    let mut transforms = Vec::new();
    let mut dropped_features = Vec::new();
    let mut out_cols: Vec<Vec<f64>> = Vec::new();
    for (j, col) in feature_cols.iter().enumerate() {
        if is_constant(col) {
            eprintln!(
                "warning: dropping constant feature column `{}`",
                table.feature_names[j]
            );
            dropped_features.push(table.feature_names[j].clone());
            continue;
        }
        if transform_on {
            match fit_transform(col) {
                Some((t, transformed)) => {
                    kept_features.push(table.feature_names[j].clone());
                    transforms.push(t);
                    out_cols.push(transformed);
                }
                None => {
                    eprintln!(
                        "warning: dropping constant feature column `{}`",
                        table.feature_names[j]
                    );
                    dropped_features.push(table.feature_names[j].clone());
                }
            }
        } else {
            kept_features.push(table.feature_names[j].clone());
            transforms.push(FeatureTransform::IDENTITY);
            out_cols.push(col.clone());
        }
    }

    if transform_on {
        for col in &mut perf_cols {
            if let Some((_, transformed)) = fit_transform(col) {
                *col = transformed;
            }
            // Constant performance columns pass through untransformed.
        }
    }

    let n_kept = kept.len();
    let table_out = MetadataTable {
        instances: kept.iter().map(|&i| table.instances[i].clone()).collect(),
        sources: kept.iter().map(|&i| table.sources[i].clone()).collect(),
        feature_names: kept_features,
        algorithm_names: table.algorithm_names.clone(),
        features: (0..n_kept)
            .map(|r| out_cols.iter().map(|c| Some(c[r])).collect())
            .collect(),
        performance: (0..n_kept)
            .map(|r| perf_cols.iter().map(|c| Some(c[r])).collect())
            .collect(),
    };

    PrelimResult {
        table: table_out,
        labels,
        raw_performance,
        transforms,
        dropped_features,
        excluded_instances,
    }
}
