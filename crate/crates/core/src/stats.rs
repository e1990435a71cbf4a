//! Scalar summary statistics shared by the feature extractors and the
//! pipeline stages.

use serde::{Deserialize, Serialize};

/// Eight-number summary of a sample.
///
/// Conventions, pinned so every feature value is finite:
/// * `sd`/`var` use the n-1 (sample) normalization.
/// * `skew` is Fisher-Pearson `m3 / sd^3` with the sample sd.
/// * `kurtosis` is excess kurtosis `m4 / sd^4 - 3` with the sample sd.
/// * An empty sample yields the all-zero summary; a constant sample has
///   `sd = var = skew = kurtosis = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub var: f64,
    pub skew: f64,
    pub kurtosis: f64,
}

pub const STAT_SUFFIXES: [&str; 8] = ["min", "max", "mean", "median", "sd", "var", "skew", "kurtosis"];

impl StatSummary {
    pub const ZERO: StatSummary = StatSummary {
        min: 0.0,
        max: 0.0,
        mean: 0.0,
        median: 0.0,
        sd: 0.0,
        var: 0.0,
        skew: 0.0,
        kurtosis: 0.0,
    };

    /// Two-pass summary of `values`. Empty input gives [`StatSummary::ZERO`].
    pub fn of(values: &[f64]) -> StatSummary {
        let n = values.len();
        if n == 0 {
            return StatSummary::ZERO;
        }
        let nf = n as f64;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        let mean = sum / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        let var = if n > 1 { m2 * nf / (nf - 1.0) } else { 0.0 };
        let sd = var.sqrt();
        let (skew, kurtosis) = if sd > 0.0 {
            (m3 / (sd * sd * sd), m4 / (sd * sd * sd * sd) - 3.0)
        } else {
            (0.0, 0.0)
        };
        StatSummary {
            min,
            max,
            mean,
            median: median_of(values),
            sd,
            var,
            skew,
            kurtosis,
        }
    }

    /// Values in the order of [`STAT_SUFFIXES`].
    pub fn as_array(&self) -> [f64; 8] {
        [self.min, self.max, self.mean, self.median, self.sd, self.var, self.skew, self.kurtosis]
    }
}

/// Median with the usual even/odd convention.
pub fn median_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Linear-interpolation quantile (the "type 7" rule: `h = (n-1) q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Pearson correlation coefficient.
///
/// Returns 0 when either column has zero variance, so constant columns
/// never pass a `|r|` threshold.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "pearson: length mismatch");
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    r.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Deliberately naive reference used as the oracle for `StatSummary::of`.
    fn reference_summary(values: &[f64]) -> StatSummary {
        if values.is_empty() {
            return StatSummary::ZERO;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let central = |p: f64| values.iter().map(|v| (v - mean).powf(p)).sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        let skew = if sd > 0.0 { central(3.0) / sd.powi(3) } else { 0.0 };
        let kurtosis = if sd > 0.0 { central(4.0) / sd.powi(4) - 3.0 } else { 0.0 };
        StatSummary {
            min,
            max,
            mean,
            median: median_of(values),
            sd,
            var,
            skew,
            kurtosis,
        }
    }

    #[test]
    fn empty_sample_is_zero() {
        assert_eq!(StatSummary::of(&[]), StatSummary::ZERO);
    }

    #[test]
    fn constant_sample_has_zero_spread() {
        let s = StatSummary::of(&[3.5, 3.5, 3.5]);
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.var, 0.0);
        assert_eq!(s.skew, 0.0);
        assert_eq!(s.kurtosis, 0.0);
        assert_eq!(s.mean, 3.5);
        assert_eq!(s.median, 3.5);
    }

    #[test]
    fn single_value() {
        let s = StatSummary::of(&[2.0]);
        assert_eq!(s.min, 2.0);
        assert_eq!(s.max, 2.0);
        assert_eq!(s.var, 0.0);
    }

    #[test]
    fn quantile_endpoints() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }

    #[test]
    fn pearson_self_is_one() {
        let v = [1.0, 2.0, 5.0, 3.0, -1.0];
        assert!((pearson(&v, &v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_constant_is_zero() {
        let v = [1.0, 2.0, 3.0];
        let c = [7.0, 7.0, 7.0];
        assert_eq!(pearson(&v, &c), 0.0);
    }

    #[test]
    fn pearson_sign_flip() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [-2.0, -4.0, -6.0, -8.0];
        assert!((pearson(&x, &y) + 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn summary_matches_reference(values in prop::collection::vec(-1e3f64..1e3, 1..60)) {
            let got = StatSummary::of(&values);
            let want = reference_summary(&values);
            for (g, w) in got.as_array().iter().zip(want.as_array().iter()) {
                prop_assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()), "{g} vs {w}");
            }
        }

        #[test]
        fn median_between_min_max(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let s = StatSummary::of(&values);
            prop_assert!(s.min <= s.median + 1e-12);
            prop_assert!(s.median <= s.max + 1e-12);
            prop_assert!((s.sd - s.var.sqrt()).abs() < 1e-12);
        }
    }
}
