//! Synthetic CVRP instances shaped like the public benchmark families:
//! uniform small (A), clustered (B), uniform classic (E), and mixed
//! large-scale (X). Deterministic per `(family, index, seed)`. These exist
//! for test corpora and examples; they are stand-ins with the same
//! structural fingerprints, not copies of any published instance.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{EdgeWeightType, Instance};
use crate::streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Small, uniform positions, moderate demands.
    A,
    /// Small, customers gathered around a few cluster centers.
    B,
    /// Classic uniform layouts over a wider size range.
    E,
    /// Large, mixed positioning / depot placement / demand patterns.
    X,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::A, Family::B, Family::E, Family::X];

    pub fn letter(self) -> char {
        match self {
            Family::A => 'A',
            Family::B => 'B',
            Family::E => 'E',
            Family::X => 'X',
        }
    }
}

fn family_stream(family: Family, index: usize, seed: u64) -> ChaCha8Rng {
    let tag_index = ((family.letter() as u64) << 32) | index as u64;
    streams::stream(seed, streams::TAG_SYNTHETIC, tag_index)
}

fn uniform_points(rng: &mut ChaCha8Rng, count: usize, max: u64) -> Vec<(f64, f64)> {
    (0..count)
        .map(|_| (rng.gen_range(0..=max) as f64, rng.gen_range(0..=max) as f64))
        .collect()
}

fn clustered_points(rng: &mut ChaCha8Rng, count: usize, max: u64, spread: i64) -> Vec<(f64, f64)> {
    let n_clusters = rng.gen_range(2..=5);
    let centers: Vec<(i64, i64)> = (0..n_clusters)
        .map(|_| {
            let lo = max as i64 / 10;
            let hi = max as i64 - lo;
            (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi))
        })
        .collect();
    (0..count)
        .map(|_| {
            let (cx, cy) = centers[rng.gen_range(0..centers.len())];
            let x = (cx + rng.gen_range(-spread..=spread)).clamp(0, max as i64);
            let y = (cy + rng.gen_range(-spread..=spread)).clamp(0, max as i64);
            (x as f64, y as f64)
        })
        .collect()
}

/// Generate one instance. The name encodes family letter, size, the
/// route-count lower bound, and the index, so corpus file names are unique
/// and the leading letter doubles as the set tag.
pub fn generate(family: Family, index: usize, seed: u64) -> Instance {
    let mut rng = family_stream(family, index, seed);
    let (n, coords, demands, capacity): (usize, Vec<(f64, f64)>, Vec<u64>, u64) = match family {
        Family::A => {
            let n = rng.gen_range(32..=80);
            let coords = uniform_points(&mut rng, n, 100);
            let demands = (0..n).map(|_| rng.gen_range(1..=30)).collect();
            (n, coords, demands, 100)
        }
        Family::B => {
            let n = rng.gen_range(31..=78);
            let coords = clustered_points(&mut rng, n, 100, 10);
            let demands = (0..n).map(|_| rng.gen_range(1..=30)).collect();
            (n, coords, demands, 100)
        }
        Family::E => {
            let n = rng.gen_range(22..=101);
            let coords = uniform_points(&mut rng, n, 100);
            let demands = (0..n).map(|_| rng.gen_range(1..=25)).collect();
            (n, coords, demands, 160)
        }
        Family::X => {
            let n = rng.gen_range(100..=200);
            let mut coords = match index % 3 {
                0 => uniform_points(&mut rng, n, 1000),
                1 => clustered_points(&mut rng, n, 1000, 40),
                _ => {
                    let half = n / 2;
                    let mut pts = uniform_points(&mut rng, half, 1000);
                    pts.extend(clustered_points(&mut rng, n - half, 1000, 40));
                    pts
                }
            };
            // Depot placement: central, corner-eccentric, or random.
            coords[0] = match rng.gen_range(0..3) {
                0 => (500.0, 500.0),
                1 => (0.0, 0.0),
                _ => coords[0],
            };
            let demands: Vec<u64> = match rng.gen_range(0..3) {
                0 => vec![1; n],
                1 => (0..n).map(|_| rng.gen_range(1..=10)).collect(),
                _ => (0..n).map(|_| rng.gen_range(50..=100)).collect(),
            };
            // Capacity sized for a drawn target of customers per route.
            let target = rng.gen_range(3u64..=12);
            let max_demand = demands.iter().copied().max().unwrap();
            let mean = demands.iter().sum::<u64>() / n as u64;
            let capacity = (mean * target).max(max_demand);
            (n, coords, demands, capacity)
        }
    };

    let mut demands = demands;
    demands[0] = 0;
    let total: u64 = demands.iter().sum();
    let k = total.div_ceil(capacity).max(1);
    Instance {
        name: format!("{}-n{}-k{}-{:02}", family.letter(), n, k, index),
        comment: Some("generated".into()),
        dimension: n,
        capacity,
        depot_index: 0,
        coords: Some(coords),
        demands,
        edge_weight_type: EdgeWeightType::Euc2d,
        explicit_matrix: None,
    }
}

/// `per_family` instances of each family, A then B then E then X.
pub fn corpus(seed: u64, per_family: usize) -> Vec<Instance> {
    Family::ALL
        .iter()
        .flat_map(|&f| (0..per_family).map(move |i| generate(f, i, seed)))
        .collect()
}
