//! VRP family: depot-relative distances, demand statistics, and the
//! demand/capacity ratios tied to the minimum vehicle count.

use crate::instance::{DistanceMatrix, Instance};
use crate::stats::StatSummary;

use super::FeatureVector;

pub(super) fn extract(
    inst: &Instance,
    dmat: &DistanceMatrix,
    coords_norm: Option<&[(f64, f64)]>,
    fv: &mut FeatureVector,
    missing: &mut Vec<String>,
) {
    // VRP1: customer-centroid → depot distance (geometric, so it needs
    // coordinates; normalized and raw twins).
    match (coords_norm, inst.coords.as_deref()) {
        (Some(norm), Some(raw)) => {
            fv.insert("VRP1", centroid_depot_distance(inst, norm));
            fv.insert("VRP1_raw", centroid_depot_distance(inst, raw));
        }
        _ => {
            missing.push("VRP1".into());
            missing.push("VRP1_raw".into());
        }
    }

    // VRP2: customer → depot distances under the instance's own metric.
    let depot = inst.depot_index;
    let d_dep: Vec<f64> = inst.customer_indices().map(|i| dmat.at(depot, i)).collect();
    fv.insert_summary("VRP2", StatSummary::of(&d_dep));

    // VRP3: customer demands.
    let demands: Vec<f64> = inst.customer_indices().map(|i| inst.demands[i] as f64).collect();
    fv.insert_summary("VRP3", StatSummary::of(&demands));

    // VRP4/VRP5: fill ratio and customers per vehicle at the minimum
    // feasible fleet size.
    let k_min = inst.min_vehicles();
    fv.insert(
        "VRP4",
        inst.total_demand() as f64 / (k_min as f64 * inst.capacity as f64),
    );
    fv.insert("VRP5", inst.customer_count() as f64 / k_min as f64);
}

fn centroid_depot_distance(inst: &Instance, coords: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = inst.customer_indices().map(|i| coords[i]).collect();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let d = coords[inst.depot_index];
    ((cx - d.0).powi(2) + (cy - d.1).powi(2)).sqrt()
}
