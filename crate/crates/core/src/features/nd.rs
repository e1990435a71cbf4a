//! ND family: node-distribution features — distance-matrix statistics,
//! customer centroid, and DBSCAN cluster structure.

use std::collections::BTreeSet;

use crate::instance::{DistanceMatrix, Instance};
use crate::stats::StatSummary;

use super::{push_missing_summary, ExtractConfig, FeatureVector};

pub(super) fn extract(
    inst: &Instance,
    dmat: &DistanceMatrix,
    cfg: &ExtractConfig,
    coords_norm: Option<&[(f64, f64)]>,
    fv: &mut FeatureVector,
    missing: &mut Vec<String>,
) {
    let n = dmat.n();
    let tri = dmat.upper_triangle();

    // ND1: distance-matrix statistics over distinct pairs.
    fv.insert_summary("ND1", StatSummary::of(&tri));

    // ND2: per-node cheapest positive outgoing edge, summed.
    let mut nd2 = 0.0;
    for i in 0..n {
        let cheapest = dmat
            .row(i)
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if cheapest.is_finite() {
            nd2 += cheapest;
        }
    }
    fv.insert("ND2", nd2);

    // ND3: fraction of distinct distances (nearest-integer resolution).
    let distinct: BTreeSet<i64> = tri.iter().map(|d| d.round() as i64).collect();
    fv.insert("ND3", distinct.len() as f64 / tri.len() as f64);

    let Some(norm) = coords_norm else {
        missing.extend(["ND4_x", "ND4_y", "ND4_x_raw", "ND4_y_raw"].map(String::from));
        push_missing_summary(missing, "ND5");
        super::push_missing_summary_raw(missing, "ND5");
        missing.push("ND6".into());
        push_missing_summary(missing, "ND7");
        push_missing_summary(missing, "ND8");
        missing.push("ND9".into());
        return;
    };
    let raw = inst.coords.as_ref().unwrap();

    let cust: Vec<(f64, f64)> = inst.customer_indices().map(|i| norm[i]).collect();
    let cust_raw: Vec<(f64, f64)> = inst.customer_indices().map(|i| raw[i]).collect();

    // ND4/ND5: customer centroid and spread around it.
    let c = centroid(&cust);
    let c_raw = centroid(&cust_raw);
    fv.insert("ND4_x", c.0);
    fv.insert("ND4_y", c.1);
    fv.insert("ND4_x_raw", c_raw.0);
    fv.insert("ND4_y_raw", c_raw.1);
    let d_to_c: Vec<f64> = cust.iter().map(|&p| dist(p, c)).collect();
    let d_to_c_raw: Vec<f64> = cust_raw.iter().map(|&p| dist(p, c_raw)).collect();
    fv.insert_summary("ND5", StatSummary::of(&d_to_c));
    fv.insert_summary_raw("ND5", StatSummary::of(&d_to_c_raw));

    // ND6–ND9: DBSCAN cluster structure of the customers.
    let labels = dbscan(&cust, cfg.dbscan_eps, cfg.dbscan_min_pts);
    let k = labels.iter().flatten().copied().max().map_or(0, |m| m + 1);
    fv.insert("ND6", k as f64);
    let mut sizes = vec![0usize; k];
    for l in labels.iter().flatten() {
        sizes[*l] += 1;
    }
    let size_vals: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    fv.insert_summary("ND7", StatSummary::of(&size_vals));
    let mut centroids = vec![(0.0, 0.0); k];
    for (p, l) in cust.iter().zip(&labels) {
        if let Some(l) = l {
            centroids[*l].0 += p.0;
            centroids[*l].1 += p.1;
        }
    }
    for (c, &s) in centroids.iter_mut().zip(&sizes) {
        c.0 /= s as f64;
        c.1 /= s as f64;
    }
    let mut cdists = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            cdists.push(dist(centroids[i], centroids[j]));
        }
    }
    fv.insert_summary("ND8", StatSummary::of(&cdists));
    fv.insert("ND9", k as f64 / cust.len().max(1) as f64);
}

fn centroid(pts: &[(f64, f64)]) -> (f64, f64) {
    if pts.is_empty() {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
    (sx / n, sy / n)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Plain DBSCAN. Returns a cluster id per point (`None` = noise).
/// Neighborhoods are closed balls (`d ≤ eps`) and include the point itself;
/// expansion order is by index, so the result is deterministic.
pub fn dbscan(points: &[(f64, f64)], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n).filter(|&j| dist(points[i], points[j]) <= eps).collect()
    };
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut next_cluster = 0;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seed = neighbors(i);
        if seed.len() < min_pts {
            continue; // noise for now; may become a border point later
        }
        label[i] = Some(next_cluster);
        let mut queue: Vec<usize> = seed;
        let mut qi = 0;
        while qi < queue.len() {
            let j = queue[qi];
            qi += 1;
            if label[j].is_none() {
                label[j] = Some(next_cluster);
            }
            if !visited[j] {
                visited[j] = true;
                let nj = neighbors(j);
                if nj.len() >= min_pts {
                    queue.extend(nj);
                }
            }
        }
        next_cluster += 1;
    }
    label
}
