//! Two-component PCA used to give the feature-selection forest a fixed
//! 2D input regardless of candidate size.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct Pca2 {
    /// Column means removed before projection.
    pub means: Vec<f64>,
    /// Unit-norm principal directions (rows), sign-fixed so each
    /// component's largest-magnitude loading is positive.
    pub components: [Vec<f64>; 2],
    /// Variances along the two components, descending.
    pub eigenvalues: [f64; 2],
    /// Projected input rows.
    pub scores: Vec<[f64; 2]>,
}

/// Fit on `rows` (instances × variables). Returns `None` when the data has
/// rank < 2 (no meaningful plane to project onto).
pub fn pca2(rows: &[Vec<f64>]) -> Option<Pca2> {
    let n = rows.len();
    if n < 3 || rows[0].len() < 2 {
        return None;
    }
    let m = rows[0].len();
    let means: Vec<f64> = (0..m)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, m, |i, j| rows[i][j] - means[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = cov.symmetric_eigen();
    // Order eigenpairs by descending eigenvalue.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap().then(a.cmp(&b)));
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    let l2 = eig.eigenvalues[order[1]].max(0.0);
    if l2 <= 1e-12 || l2 <= 1e-12 * l1 {
        return None;
    }
    let mut components: Vec<DVector<f64>> = order[..2]
        .iter()
        .map(|&j| eig.eigenvectors.column(j).into_owned())
        .collect();
    for c in &mut components {
        let lead = c
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap().then(b.0.cmp(&a.0)))
            .map(|(_, &v)| v)
            .unwrap_or(1.0);
        if lead < 0.0 {
            *c = -&*c;
        }
    }
    let scores = (0..n)
        .map(|i| {
            let row = centered.row(i);
            [
                row.iter().zip(components[0].iter()).map(|(a, b)| a * b).sum(),
                row.iter().zip(components[1].iter()).map(|(a, b)| a * b).sum(),
            ]
        })
        .collect();
    Some(Pca2 {
        means,
        components: [
            components[0].iter().cloned().collect(),
            components[1].iter().cloned().collect(),
        ],
        eigenvalues: [l1, l2],
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn sample_var(xs: impl Iterator<Item = f64> + Clone) -> f64 {
        let v: Vec<f64> = xs.collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        v.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn planted_plane_is_recovered() {
        // 2D latent data embedded in 5D by a fixed linear map.
        let mut rng = crate::streams::stream(1, crate::streams::TAG_SYNTHETIC, 3);
        let embed = [
            [0.5, -0.1, 0.8, 0.2, 0.0],
            [0.1, 0.9, -0.2, 0.3, 0.4],
        ];
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| {
                let a: f64 = rng.gen_range(-3.0..3.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                (0..5).map(|j| a * embed[0][j] + b * embed[1][j]).collect()
            })
            .collect();
        let p = pca2(&rows).unwrap();
        // All variance lives in the top two components.
        let total: f64 = (0..5).map(|j| sample_var(rows.iter().map(|r| r[j]))).sum();
        assert!((p.eigenvalues[0] + p.eigenvalues[1] - total).abs() < 1e-9 * total.max(1.0));
        // Reconstruction from 2 scores is exact for rank-2 data.
        for (i, row) in rows.iter().enumerate() {
            for j in 0..5 {
                let rec = p.means[j]
                    + p.scores[i][0] * p.components[0][j]
                    + p.scores[i][1] * p.components[1][j];
                assert!((rec - row[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rank_deficient_data_is_rejected() {
        // All rows on a single line.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64, -i as f64]).collect();
        assert!(pca2(&rows).is_none());
        // Too few rows or columns.
        assert!(pca2(&[vec![1.0, 2.0], vec![3.0, 4.0]]).is_none());
        assert!(pca2(&(0..5).map(|i| vec![i as f64]).collect::<Vec<_>>()).is_none());
    }

    proptest! {
        #[test]
        fn components_maximize_captured_variance(
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 8..20),
            dir in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let Some(p) = pca2(&rows) else { return Ok(()) };
            // Orthonormal components.
            let n0: f64 = p.components[0].iter().map(|x| x * x).sum();
            let n1: f64 = p.components[1].iter().map(|x| x * x).sum();
            let ip: f64 = p.components[0].iter().zip(&p.components[1]).map(|(a, b)| a * b).sum();
            prop_assert!((n0 - 1.0).abs() < 1e-9 && (n1 - 1.0).abs() < 1e-9);
            prop_assert!(ip.abs() < 1e-9);
            // Score variances equal the eigenvalues, in descending order.
            let v0 = sample_var(p.scores.iter().map(|s| s[0]));
            let v1 = sample_var(p.scores.iter().map(|s| s[1]));
            prop_assert!((v0 - p.eigenvalues[0]).abs() < 1e-6 * v0.max(1.0));
            prop_assert!((v1 - p.eigenvalues[1]).abs() < 1e-6 * v1.max(1.0));
            prop_assert!(p.eigenvalues[0] >= p.eigenvalues[1]);
            // No direction beats PC1's variance.
            let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-6);
            let unit: Vec<f64> = dir.iter().map(|x| x / norm).collect();
            let proj_var = sample_var(rows.iter().map(|r| {
                r.iter().zip(&unit).map(|(a, b)| a * b).sum::<f64>()
            }));
            prop_assert!(proj_var <= p.eigenvalues[0] + 1e-6 * p.eigenvalues[0].max(1.0));
        }
    }
}
