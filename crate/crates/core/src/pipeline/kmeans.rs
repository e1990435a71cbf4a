//! Sign-invariant K-means for grouping features by correlation.
//!
//! Each feature is embedded as its standardized value vector across
//! instances; for z-scored vectors, `min(‖u−v‖², ‖u+v‖²)` is monotone in
//! `1 − |ρ(u,v)|`, so clustering in this metric groups features whose
//! values are strongly correlated in either direction. Cluster-validity
//! scores (Silhouette on the dissimilarity, Davies-Bouldin and
//! Calinski-Harabasz on the sign-aligned embedding) support choosing K.

use rand::Rng;

use crate::streams;

#[derive(Debug, Clone)]
pub struct Clustering {
    /// Cluster id per input vector.
    pub assignment: Vec<usize>,
    /// Orientation (±1) each vector was given relative to its center.
    pub signs: Vec<f64>,
    /// Sum of signed squared distances to assigned centers.
    pub inertia: f64,
    pub k: usize,
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm2(u: &[f64]) -> f64 {
    dot(u, u)
}

/// Squared distance after optimal sign flip: `min(‖u−c‖², ‖u+c‖²)`.
fn signed_dist2(u: &[f64], c: &[f64], u2: f64, c2: f64) -> f64 {
    (u2 + c2 - 2.0 * dot(u, c).abs()).max(0.0)
}

/// One K-means run from a k-means++ seeding.
fn run_once(vectors: &[Vec<f64>], norms: &[f64], k: usize, rng: &mut impl Rng) -> Clustering {
    let m = vectors.len();
    // k-means++ seeding under the signed metric.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let first = rng.gen_range(0..m);
    centers.push(vectors[first].clone());
    let mut d2: Vec<f64> = (0..m)
        .map(|i| signed_dist2(&vectors[i], &centers[0], norms[i], norms[first]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All points coincide with a center; any choice is equivalent.
            rng.gen_range(0..m)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = m - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(vectors[next].clone());
        let c2 = norm2(&centers[centers.len() - 1]);
        for i in 0..m {
            d2[i] = d2[i].min(signed_dist2(&vectors[i], centers.last().unwrap(), norms[i], c2));
        }
    }

    let mut assignment = vec![0usize; m];
    let mut signs = vec![1.0f64; m];
    for _iter in 0..100 {
        // Assign.
        let center_norms: Vec<f64> = centers.iter().map(|c| norm2(c)).collect();
        let mut changed = false;
        for i in 0..m {
            let mut best = (f64::INFINITY, 0usize);
            for (j, c) in centers.iter().enumerate() {
                let dist = signed_dist2(&vectors[i], c, norms[i], center_norms[j]);
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            if assignment[i] != best.1 {
                assignment[i] = best.1;
                changed = true;
            }
            let ip = dot(&vectors[i], &centers[best.1]);
            signs[i] = if ip < 0.0 { -1.0 } else { 1.0 };
        }
        // Update: mean of sign-aligned members; empty clusters take the
        // point farthest from its center.
        let dim = vectors[0].len();
        let mut sums = vec![vec![0.0f64; dim]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for i in 0..m {
            counts[assignment[i]] += 1;
            for (s, &x) in sums[assignment[i]].iter_mut().zip(&vectors[i]) {
                *s += signs[i] * x;
            }
        }
        for j in 0..centers.len() {
            if counts[j] == 0 {
                let far = (0..m)
                    .max_by(|&a, &b| {
                        let da = signed_dist2(&vectors[a], &centers[assignment[a]], norms[a], norm2(&centers[assignment[a]]));
                        let db = signed_dist2(&vectors[b], &centers[assignment[b]], norms[b], norm2(&centers[assignment[b]]));
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                centers[j] = vectors[far].clone();
                assignment[far] = j;
                signs[far] = 1.0;
                changed = true;
            } else {
                for (c, s) in centers[j].iter_mut().zip(&sums[j]) {
                    *c = s / counts[j] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let center_norms: Vec<f64> = centers.iter().map(|c| norm2(c)).collect();
    let inertia = (0..m)
        .map(|i| signed_dist2(&vectors[i], &centers[assignment[i]], norms[i], center_norms[assignment[i]]))
        .sum();
    Clustering {
        assignment,
        signs,
        inertia,
        k,
    }
}

/// Cluster `vectors` into `k` groups: 10 independent k-means++ runs, best
/// inertia kept. Deterministic in `(vectors, k, seed)`.
pub fn cluster_signed(vectors: &[Vec<f64>], k: usize, seed: u64) -> Clustering {
    assert!(k >= 1 && k <= vectors.len(), "k = {k} for {} vectors", vectors.len());
    let norms: Vec<f64> = vectors.iter().map(|v| norm2(v)).collect();
    let mut best: Option<Clustering> = None;
    for init in 0..10u64 {
        let mut rng = streams::stream(seed, streams::TAG_KMEANS, (k as u64) * 1000 + init);
        let run = run_once(vectors, &norms, k, &mut rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.unwrap()
}

/// Pairwise dissimilarity `1 − |ρ|` between feature value-vectors.
pub fn correlation_dissimilarity(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = vectors.len();
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let rho = crate::stats::pearson(&vectors[i], &vectors[j]);
            let dist = 1.0 - rho.abs();
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    d
}

/// Mean silhouette width over a precomputed dissimilarity matrix.
/// Singleton-cluster members score 0.
pub fn silhouette(dissim: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let m = assignment.len();
    if m == 0 || k < 2 {
        return 0.0;
    }
    let mut sizes = vec![0usize; k];
    for &a in assignment {
        sizes[a] += 1;
    }
    let mut total = 0.0;
    for i in 0..m {
        let own = assignment[i];
        if sizes[own] <= 1 {
            continue; // s(i) = 0
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..m {
            if j != i {
                sums[assignment[j]] += dissim[i][j];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / m as f64
}

fn centroids(aligned: &[Vec<f64>], assignment: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = aligned[0].len();
    let mut cents = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (v, &a) in aligned.iter().zip(assignment) {
        sizes[a] += 1;
        for (c, &x) in cents[a].iter_mut().zip(v) {
            *c += x;
        }
    }
    for (c, &s) in cents.iter_mut().zip(&sizes) {
        if s > 0 {
            for x in c {
                *x /= s as f64;
            }
        }
    }
    (cents, sizes)
}

/// Davies-Bouldin index on the aligned embedding (lower is better).
pub fn davies_bouldin(aligned: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let (cents, sizes) = centroids(aligned, assignment, k);
    let mut scatter = vec![0.0f64; k];
    for (v, &a) in aligned.iter().zip(assignment) {
        scatter[a] += sub_norm(v, &cents[a]);
    }
    for (s, &n) in scatter.iter_mut().zip(&sizes) {
        if n > 0 {
            *s /= n as f64;
        }
    }
    let mut total = 0.0;
    let mut counted = 0;
    for i in 0..k {
        if sizes[i] == 0 {
            continue;
        }
        let worst = (0..k)
            .filter(|&j| j != i && sizes[j] > 0)
            .map(|j| {
                let between = sub_norm(&cents[i], &cents[j]);
                if between > 0.0 {
                    (scatter[i] + scatter[j]) / between
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0f64, f64::max);
        total += worst;
        counted += 1;
    }
    if counted > 0 {
        total / counted as f64
    } else {
        0.0
    }
}

/// Calinski-Harabasz index on the aligned embedding (higher is better).
pub fn calinski_harabasz(aligned: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let m = aligned.len();
    if k < 2 || m <= k {
        return 0.0;
    }
    let (cents, sizes) = centroids(aligned, assignment, k);
    let dim = aligned[0].len();
    let mut grand = vec![0.0f64; dim];
    for v in aligned {
        for (g, &x) in grand.iter_mut().zip(v) {
            *g += x;
        }
    }
    for g in &mut grand {
        *g /= m as f64;
    }
    let between: f64 = (0..k)
        .map(|j| sizes[j] as f64 * sub_norm(&cents[j], &grand).powi(2))
        .sum();
    let within: f64 = aligned
        .iter()
        .zip(assignment)
        .map(|(v, &a)| sub_norm(v, &cents[a]).powi(2))
        .sum();
    if within == 0.0 {
        return f64::INFINITY;
    }
    (between / (k - 1) as f64) / (within / (m - k) as f64)
}

fn sub_norm(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Z-score each vector in place (sample sd), making the signed metric
/// correlation-faithful. Constant vectors become all-zero.
pub fn standardize_vectors(vectors: &mut [Vec<f64>]) {
    for v in vectors.iter_mut() {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() < 2 {
            0.0
        } else {
            v.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        };
        let sd = var.sqrt();
        for x in v.iter_mut() {
            *x = if sd > 0.0 { (*x - mean) / sd } else { 0.0 };
        }
    }
}
