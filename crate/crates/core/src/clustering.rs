//! One-dimensional k-means.
//!
//! Lloyd iterations from k-means++ seeds, best of several seeded restarts.
//! Assignment is the naive `O(n k)` nearest-center scan, so one iteration
//! costs `O(n k)`. Empty clusters are repaired by moving the point farthest
//! from its center into the empty cluster as a singleton.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distinct::check_len;
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, seeded};

pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_LLOYD_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster id per input value.
    pub labels: Vec<usize>,
    pub centers: Vec<f64>,
    pub k: usize,
    /// Weighted within-cluster sum of squares.
    pub inertia: f64,
    pub seed: u64,
    pub restarts_used: usize,
}

/// Outcome of Lloyd iterations from one initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub labels: Vec<usize>,
    pub centers: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each center update.
    pub inertia_trace: Vec<f64>,
}

pub fn kmeans_1d(
    values: &[f64],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment> {
    kmeans_impl(values, None, k, seed, restarts)
}

/// k-means where value `i` counts `weights[i]` times (e.g. its multiplicity).
pub fn kmeans_1d_weighted(
    values: &[f64],
    weights: &[f64],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment> {
    check_len(values.len(), weights.len())?;
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(invalid("weights must be positive and finite"));
    }
    kmeans_impl(values, Some(weights), k, seed, restarts)
}

fn kmeans_impl(
    values: &[f64],
    weights: Option<&[f64]>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment> {
    let n = values.len();
    if k < 1 || k > n {
        return Err(invalid(format!("k = {k} must lie in [1, {n}]")));
    }
    if restarts < 1 {
        return Err(invalid("restarts must be >= 1"));
    }
    if let Some(p) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(p));
    }

    let mut best: Option<LloydRun> = None;
    for r in 0..restarts {
        let mut rng = seeded(derive_seed(seed, r as u64));
        let init = kmeans_plus_plus(values, weights, k, &mut rng);
        let run = lloyd(values, weights, init);
        // Strict comparison: ties go to the earliest restart.
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    Ok(ClusterAssignment {
        labels: best.labels,
        centers: best.centers,
        k,
        inertia: best.inertia,
        seed,
        restarts_used: restarts,
    })
}

/// k-means++ seeding: first center drawn proportionally to weight, each
/// further center proportionally to weight times squared distance to the
/// nearest chosen center.
pub fn kmeans_plus_plus<R: Rng>(
    values: &[f64],
    weights: Option<&[f64]>,
    k: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n = values.len();
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut chosen = vec![false; n];
    let mut centers = Vec::with_capacity(k);

    let first = sample_index(rng, (0..n).map(weight));
    chosen[first] = true;
    centers.push(values[first]);

    let mut dist: Vec<f64> = values.iter().map(|x| (x - values[first]).powi(2)).collect();
    while centers.len() < k {
        let scores = (0..n).map(|i| weight(i) * dist[i]);
        let total: f64 = scores.clone().sum();
        let pick = if total > 0.0 {
            sample_index(rng, scores)
        } else {
            // Every point sits on a center already.
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        let c = values[pick];
        centers.push(c);
        for (d, x) in dist.iter_mut().zip(values) {
            *d = d.min((x - c).powi(2));
        }
    }
    centers
}

fn sample_index<R: Rng>(rng: &mut R, scores: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = scores.clone().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, s) in scores.enumerate() {
        if s > 0.0 {
            last_positive = i;
            acc += s;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

/// Lloyd iterations from `init` until the assignment stops changing.
pub fn lloyd(values: &[f64], weights: Option<&[f64]>, init: Vec<f64>) -> LloydRun {
    let n = values.len();
    let k = init.len();
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut centers = init;
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    while iterations < MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for (i, x) in values.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = (x - center) * (x - center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        iterations += 1;

        repair_empty_clusters(values, &mut labels, &centers, k);
        let mut sum_w = vec![0.0; k];
        let mut sum_wx = vec![0.0; k];
        let mut count = vec![0usize; k];
        for (i, x) in values.iter().enumerate() {
            let c = labels[i];
            sum_w[c] += weight(i);
            sum_wx[c] += weight(i) * x;
            count[c] += 1;
        }
        for c in 0..k {
            centers[c] = if count[c] == 1 {
                // Exact for singletons regardless of weight.
                values[labels.iter().position(|&l| l == c).unwrap()]
            } else if weights.is_none() {
                sum_wx[c] / count[c] as f64
            } else {
                sum_wx[c] / sum_w[c]
            };
        }
        trace.push(inertia(values, weights, &labels, &centers));
    }

    let inertia = inertia(values, weights, &labels, &centers);
    LloydRun {
        labels,
        centers,
        inertia,
        iterations,
        inertia_trace: trace,
    }
}

fn repair_empty_clusters(values: &[f64], labels: &mut [usize], centers: &[f64], k: usize) {
    let mut count = vec![0usize; k];
    for &l in labels.iter() {
        count[l] += 1;
    }
    for empty in 0..k {
        if count[empty] > 0 {
            continue;
        }
        let far = (0..values.len())
            .filter(|&i| count[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = (values[a] - centers[labels[a]]).abs();
                let db = (values[b] - centers[labels[b]]).abs();
                // Ties resolve to the lowest index.
                da.total_cmp(&db).then(b.cmp(&a))
            });
        if let Some(i) = far {
            count[labels[i]] -= 1;
            labels[i] = empty;
            count[empty] = 1;
        }
    }
}

fn inertia(values: &[f64], weights: Option<&[f64]>, labels: &[usize], centers: &[f64]) -> f64 {
    values
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (x, &l))| weights.map_or(1.0, |w| w[i]) * (x - centers[l]).powi(2))
        .sum()
}

/// Reads a converged assignment over ascending `sorted_values` as contiguous
/// segments, ordered by center. Returns boundaries `[0, ..., m]`.
pub fn assignment_segments(a: &ClusterAssignment, sorted_values: &[f64]) -> Result<Vec<usize>> {
    let m = sorted_values.len();
    check_len(m, a.labels.len())?;
    if sorted_values.windows(2).any(|p| p[0] > p[1]) {
        return Err(invalid("values must be sorted ascending"));
    }
    let mut order: Vec<usize> = (0..a.centers.len()).collect();
    order.sort_by(|&x, &y| a.centers[x].total_cmp(&a.centers[y]).then(x.cmp(&y)));
    let mut rank = vec![0; a.centers.len()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }

    let mut boundaries = vec![0];
    for i in 1..m {
        let (prev, cur) = (rank[a.labels[i - 1]], rank[a.labels[i]]);
        if cur < prev {
            return Err(Error::NonContiguous(i));
        }
        if cur > prev {
            boundaries.push(i);
        }
    }
    if m > 0 {
        boundaries.push(m);
    }
    Ok(boundaries)
}
