//! P family: probing features from restarted tour construction plus
//! depth-limited Lin-Kernighan local search on the TSP relaxation of the
//! instance (all nodes, capacity ignored). Capacity re-enters through the
//! segment features, which split the final tour at its q longest edges,
//! q being the minimum feasible vehicle count.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::instance::{DistanceMatrix, Instance};
use crate::stats::{quantile, StatSummary};
use crate::streams;

use super::{push_missing_summary, FeatureVector};

/// Neighbors per node in the LK candidate lists.
pub const CANDIDATE_COUNT: usize = 8;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ProbingConfig {
    pub restarts: usize,
    /// Maximum number of sequentially discovered edge exchanges per move.
    pub depth: usize,
    /// Wall-clock budget for the whole probing run; checked between
    /// restarts. When it triggers, features come from the completed
    /// restarts and the result is flagged partial.
    pub budget: Duration,
}

impl Default for ProbingConfig {
    fn default() -> Self {
        ProbingConfig {
            restarts: 20,
            depth: 3,
            budget: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestartTrace {
    pub start_node: usize,
    pub construction_cost: f64,
    pub final_cost: f64,
    pub steps: usize,
    pub improvements: Vec<f64>,
    pub tour: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ProbingTrace {
    pub restarts: Vec<RestartTrace>,
    pub partial: bool,
}

/// Run the restarted construction + local-search probe. Deterministic in
/// `(dmat, cfg, seed)` as long as the time budget does not trigger.
pub fn probe(dmat: &DistanceMatrix, cfg: &ProbingConfig, seed: u64) -> ProbingTrace {
    let n = dmat.n();
    assert!(n >= 4, "probing requires at least 4 nodes");
    let cand = candidate_lists(dmat, CANDIDATE_COUNT);
    let begun = Instant::now();
    let mut trace = ProbingTrace::default();
    for r in 0..cfg.restarts {
        if r > 0 && begun.elapsed() > cfg.budget {
            trace.partial = true;
            break;
        }
        let mut rng = streams::stream(seed, streams::TAG_PROBING, r as u64);
        let start = rng.gen_range(0..n);
        let order = nearest_neighbor_tour(dmat, start);
        let construction_cost = tour_cost(dmat, &order);
        let mut tour = Tour::new(order);
        let (steps, improvements) = lk_optimize(dmat, &cand, &mut tour, cfg.depth);
        let final_cost = tour_cost(dmat, &tour.order);
        trace.restarts.push(RestartTrace {
            start_node: start,
            construction_cost,
            final_cost,
            steps,
            improvements,
            tour: tour.order,
        });
    }
    trace
}

pub fn tour_cost(d: &DistanceMatrix, order: &[usize]) -> f64 {
    let n = order.len();
    (0..n).map(|i| d.at(order[i], order[(i + 1) % n])).sum()
}

fn candidate_lists(d: &DistanceMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = d.n();
    (0..n)
        .map(|i| {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| d.at(i, a).partial_cmp(&d.at(i, b)).unwrap().then(a.cmp(&b)));
            order.truncate(k);
            order
        })
        .collect()
}

fn nearest_neighbor_tour(d: &DistanceMatrix, start: usize) -> Vec<usize> {
    let n = d.n();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    visited[start] = true;
    order.push(start);
    let mut cur = start;
    for _ in 1..n {
        let mut best = usize::MAX;
        for j in 0..n {
            if !visited[j] && (best == usize::MAX || d.at(cur, j) < d.at(cur, best)) {
                best = j;
            }
        }
        visited[best] = true;
        order.push(best);
        cur = best;
    }
    order
}

/// Array tour with a position index, supporting the cyclic segment
/// reversal that implements a 2-opt exchange.
struct Tour {
    order: Vec<usize>,
    pos: Vec<usize>,
}

impl Tour {
    fn new(order: Vec<usize>) -> Tour {
        let mut pos = vec![0; order.len()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        Tour { order, pos }
    }

    #[inline]
    fn succ(&self, v: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[v] + 1) % n]
    }

    #[inline]
    fn pred(&self, v: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[v] + n - 1) % n]
    }

    /// Reverse the cyclic position span `from..=to` (walking forward).
    /// Calling it twice with the same span is a no-op, which is how
    /// tentative moves get undone.
    fn reverse_span(&mut self, from: usize, to: usize) {
        let n = self.order.len();
        let len = (to + n - from) % n + 1;
        for s in 0..len / 2 {
            let i = (from + s) % n;
            let j = (to + n - s) % n;
            self.order.swap(i, j);
            self.pos[self.order[i]] = i;
            self.pos[self.order[j]] = j;
        }
    }
}

/// First-improvement local search: scan bases in node order, apply the
/// first improving LK move, rescan. Returns (steps, gains).
fn lk_optimize(d: &DistanceMatrix, cand: &[Vec<usize>], tour: &mut Tour, depth: usize) -> (usize, Vec<f64>) {
    let n = d.n();
    let mut steps = 0;
    let mut improvements = Vec::new();
    'scan: loop {
        for t1 in 0..n {
            if let Some(gain) = lk_step(d, cand, tour, t1, depth) {
                steps += 1;
                improvements.push(gain);
                continue 'scan;
            }
        }
        break;
    }
    (steps, improvements)
}

/// One LK move attempt from base `t1`.
///
/// Each level breaks the current edge (t1, succ(t1)), joins succ(t1) to a
/// candidate t3, and re-closes at pred(t3) — a plain 2-opt, applied
/// tentatively by segment reversal. If the accumulated gain is positive the
/// chain commits; otherwise it deepens from the new succ(t1) (which the
/// reversal makes equal to the old pred(t3)), up to `depth` exchanges.
/// Level 0 backtracks over candidates; deeper levels follow only the first
/// candidate with a positive partial gain.
fn lk_step(d: &DistanceMatrix, cand: &[Vec<usize>], tour: &mut Tour, t1: usize, depth: usize) -> Option<f64> {
    debug_assert!(depth >= 1);
    let t2 = tour.succ(t1);
    let broke = d.at(t1, t2);
    for &t3 in &cand[t2] {
        if t3 == t1 || t3 == t2 || t3 == tour.succ(t2) {
            continue;
        }
        let g1 = broke - d.at(t2, t3);
        if g1 <= TOL {
            break; // candidates are distance-sorted: no better t3 follows
        }
        let t4 = tour.pred(t3);
        let close = g1 + d.at(t4, t3) - d.at(t4, t1);
        let span = (tour.pos[t2], tour.pos[t4]);
        tour.reverse_span(span.0, span.1);
        if close > TOL {
            return Some(close);
        }
        if let Some(total) = lk_chain(d, cand, tour, t1, close, depth - 1) {
            return Some(total);
        }
        tour.reverse_span(span.0, span.1);
    }
    None
}

fn lk_chain(
    d: &DistanceMatrix,
    cand: &[Vec<usize>],
    tour: &mut Tour,
    t1: usize,
    cum: f64,
    depth_left: usize,
) -> Option<f64> {
    if depth_left == 0 {
        return None;
    }
    let t2 = tour.succ(t1);
    let broke = d.at(t1, t2);
    for &t3 in &cand[t2] {
        if t3 == t1 || t3 == t2 || t3 == tour.succ(t2) {
            continue;
        }
        let g1 = cum + broke - d.at(t2, t3);
        if g1 <= TOL {
            break;
        }
        let t4 = tour.pred(t3);
        let close = g1 + d.at(t4, t3) - d.at(t4, t1);
        let span = (tour.pos[t2], tour.pos[t4]);
        tour.reverse_span(span.0, span.1);
        if close > TOL {
            return Some(close);
        }
        if let Some(total) = lk_chain(d, cand, tour, t1, close, depth_left - 1) {
            return Some(total);
        }
        tour.reverse_span(span.0, span.1);
        return None; // no backtracking past the first viable continuation
    }
    None
}

#[allow(clippy::too_many_arguments)]
pub(super) fn extract(
    inst: &Instance,
    dmat: &DistanceMatrix,
    cfg: &ProbingConfig,
    seed: u64,
    coords_norm: Option<&[(f64, f64)]>,
    fv: &mut FeatureVector,
    missing: &mut Vec<String>,
) -> (bool, Option<ProbingTrace>) {
    let n = dmat.n();
    if n < 4 {
        push_missing_summary(missing, "P1");
        missing.extend(["P2_q1", "P2_q2", "P2_q3", "P2_q4", "P2_mean"].map(String::from));
        for p in ["P3", "P4", "P5", "P6", "P7"] {
            push_missing_summary(missing, p);
        }
        missing.extend(["P8_mean", "P9_mean", "P10_mean"].map(String::from));
        push_missing_summary(missing, "P11");
        return (false, None);
    }

    let trace = probe(dmat, cfg, seed);
    let runs = &trace.restarts;
    let r = runs.len() as f64;

    // P1: improving steps per restart.
    let steps: Vec<f64> = runs.iter().map(|t| t.steps as f64).collect();
    fv.insert_summary("P1", StatSummary::of(&steps));

    // P2: final-tour edge-length quartiles, averaged across restarts.
    let mut quart_sums = [0.0f64; 4];
    for t in runs {
        let mut lens = edge_lengths(dmat, &t.tour);
        lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (s, q) in quart_sums.iter_mut().zip([0.25, 0.5, 0.75, 1.0]) {
            *s += quantile(&lens, q);
        }
    }
    let quarts: Vec<f64> = quart_sums.iter().map(|s| s / r).collect();
    for (i, q) in quarts.iter().enumerate() {
        fv.insert(format!("P2_q{}", i + 1), *q);
    }
    fv.insert("P2_mean", quarts.iter().sum::<f64>() / 4.0);

    // P3/P4/P5: split each final tour at its q longest edges.
    let q_cut = (inst.min_vehicles() as usize).min(n);
    let mut seg_lengths = Vec::new();
    let mut seg_counts = Vec::new();
    let mut seg_edges = Vec::new();
    for t in runs {
        let lens = edge_lengths(dmat, &t.tour);
        let mut by_len: Vec<usize> = (0..n).collect();
        by_len.sort_by(|&a, &b| lens[b].partial_cmp(&lens[a]).unwrap().then(a.cmp(&b)));
        let mut cuts: Vec<usize> = by_len[..q_cut].to_vec();
        cuts.sort_unstable();
        for w in 0..cuts.len() {
            let from = cuts[w];
            let to = cuts[(w + 1) % cuts.len()];
            let count = (to + n - from) % n; // edges strictly between the cuts
            let count = if cuts.len() == 1 { n - 1 } else { count.saturating_sub(1) };
            let mut total = 0.0;
            for e in 1..=count {
                let idx = (from + e) % n;
                total += lens[idx];
                seg_edges.push(lens[idx]);
            }
            seg_lengths.push(total);
            seg_counts.push(count as f64);
        }
    }
    fv.insert_summary("P3", StatSummary::of(&seg_lengths));
    fv.insert_summary("P4", StatSummary::of(&seg_counts));
    fv.insert_summary("P5", StatSummary::of(&seg_edges));

    // P6/P7: construction and local-minimum costs across restarts.
    let cons: Vec<f64> = runs.iter().map(|t| t.construction_cost).collect();
    let fins: Vec<f64> = runs.iter().map(|t| t.final_cost).collect();
    fv.insert_summary("P6", StatSummary::of(&cons));
    fv.insert_summary("P7", StatSummary::of(&fins));

    // P8: mean pairwise edge crossings in the final tours (coordinates
    // required for the planar test).
    match coords_norm {
        None => missing.push("P8_mean".into()),
        Some(coords) => {
            let total: usize = runs.iter().map(|t| count_crossings(coords, &t.tour)).sum();
            fv.insert("P8_mean", total as f64 / r);
        }
    }

    // P9/P10: improvement per step and steps to the local minimum.
    let all_gains: Vec<f64> = runs.iter().flat_map(|t| t.improvements.iter().copied()).collect();
    let p9 = if all_gains.is_empty() {
        0.0
    } else {
        all_gains.iter().sum::<f64>() / all_gains.len() as f64
    };
    fv.insert("P9_mean", p9);
    fv.insert("P10_mean", steps.iter().sum::<f64>() / r);

    // P11: per-edge appearance frequency across the R local minima.
    // BTreeMap keeps the pooling order deterministic.
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in runs {
        for i in 0..n {
            let a = t.tour[i];
            let b = t.tour[(i + 1) % n];
            let key = (a.min(b), a.max(b));
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    let freqs: Vec<f64> = counts.values().map(|&c| c as f64 / r).collect();
    fv.insert_summary("P11", StatSummary::of(&freqs));

    (trace.partial, Some(trace))
}

fn edge_lengths(d: &DistanceMatrix, order: &[usize]) -> Vec<f64> {
    let n = order.len();
    (0..n).map(|i| d.at(order[i], order[(i + 1) % n])).collect()
}

fn ccw(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Count tour edge pairs that properly cross (strict interior
/// intersection; edges sharing a node are never counted).
fn count_crossings(coords: &[(f64, f64)], order: &[usize]) -> usize {
    let n = order.len();
    let seg = |e: usize| (order[e], order[(e + 1) % n]);
    let mut crossings = 0;
    for e1 in 0..n {
        let (a, b) = seg(e1);
        for e2 in (e1 + 1)..n {
            let (c, dd) = seg(e2);
            if a == c || a == dd || b == c || b == dd {
                continue;
            }
            let (pa, pb, pc, pd) = (coords[a], coords[b], coords[c], coords[dd]);
            let d1 = ccw(pa, pb, pc);
            let d2 = ccw(pa, pb, pd);
            let d3 = ccw(pc, pd, pa);
            let d4 = ccw(pc, pd, pb);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                crossings += 1;
            }
        }
    }
    crossings
}
