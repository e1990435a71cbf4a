//! G family: enclosing rectangle, convex hull area, hull occupancy, and
//! distances from enclosed points to the hull boundary.

use crate::stats::StatSummary;

use super::{push_missing_summary, push_missing_summary_raw, FeatureVector};

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain. Returns indices of the hull vertices in
/// counter-clockwise order; collinear boundary points are not vertices.
/// Degenerate inputs yield fewer than 3 indices (2 for a segment, 1 for a
/// single repeated point).
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .partial_cmp(&points[b])
            .expect("non-finite coordinate")
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && cross(points[lower[lower.len() - 2]], points[lower[lower.len() - 1]], points[i]) <= 0.0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && cross(points[upper[upper.len() - 2]], points[upper[upper.len() - 1]], points[i]) <= 0.0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        // All points collinear: keep the two extremes of the sort order.
        return vec![idx[0], idx[idx.len() - 1]];
    }
    lower
}

/// Shoelace area of a polygon given in order.
pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a.0 * b.1 - b.0 * a.1;
    }
    s.abs() / 2.0
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 > 0.0 {
        ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = (a.0 + t * ab.0, a.1 + t * ab.1);
    ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
}

struct HullFeatures {
    bbox_area: f64,
    hull_area: f64,
    hull_ratio: f64,
    interior_dists: Vec<f64>,
    edge_lengths: Vec<f64>,
}

fn hull_features(points: &[(f64, f64)]) -> HullFeatures {
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let bbox_area = (max_x - min_x) * (max_y - min_y);
    let hull = convex_hull(points);
    if hull.len() < 3 {
        // Everything lies on one segment (or one point): zero area, every
        // point "on" the hull, zero boundary distances.
        let len = if hull.len() == 2 {
            let (a, b) = (points[hull[0]], points[hull[1]]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        } else {
            0.0
        };
        return HullFeatures {
            bbox_area,
            hull_area: 0.0,
            hull_ratio: 1.0,
            interior_dists: Vec::new(),
            edge_lengths: vec![len],
        };
    }
    let poly: Vec<(f64, f64)> = hull.iter().map(|&i| points[i]).collect();
    let hull_area = polygon_area(&poly);
    let on_hull: std::collections::HashSet<usize> = hull.iter().copied().collect();
    let mut interior_dists = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        if on_hull.contains(&i) {
            continue;
        }
        let d = (0..poly.len())
            .map(|e| point_segment_distance(p, poly[e], poly[(e + 1) % poly.len()]))
            .fold(f64::INFINITY, f64::min);
        interior_dists.push(d);
    }
    let edge_lengths: Vec<f64> = (0..poly.len())
        .map(|e| {
            let a = poly[e];
            let b = poly[(e + 1) % poly.len()];
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
        .collect();
    HullFeatures {
        bbox_area,
        hull_area,
        hull_ratio: hull.len() as f64 / points.len() as f64,
        interior_dists,
        edge_lengths,
    }
}

pub(super) fn extract(
    coords_raw: Option<&[(f64, f64)]>,
    coords_norm: Option<&[(f64, f64)]>,
    fv: &mut FeatureVector,
    missing: &mut Vec<String>,
) {
    let (Some(raw), Some(norm)) = (coords_raw, coords_norm) else {
        missing.extend(["G1", "G1_raw", "G2", "G2_raw", "G3"].map(String::from));
        push_missing_summary(missing, "G4");
        push_missing_summary_raw(missing, "G4");
        push_missing_summary(missing, "G5");
        push_missing_summary_raw(missing, "G5");
        return;
    };
    let hn = hull_features(norm);
    let hr = hull_features(raw);
    fv.insert("G1", hn.bbox_area);
    fv.insert("G1_raw", hr.bbox_area);
    fv.insert("G2", hn.hull_area);
    fv.insert("G2_raw", hr.hull_area);
    fv.insert("G3", hn.hull_ratio);
    fv.insert_summary("G4", StatSummary::of(&hn.interior_dists));
    fv.insert_summary_raw("G4", StatSummary::of(&hr.interior_dists));
    fv.insert_summary("G5", StatSummary::of(&hn.edge_lengths));
    fv.insert_summary_raw("G5", StatSummary::of(&hr.edge_lengths));
}
