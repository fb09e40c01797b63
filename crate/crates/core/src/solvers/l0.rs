//! Exact size-constrained quantization of sorted values.
//!
//! The best quantizer of sorted 1-D data with at most `l` levels partitions
//! the data into contiguous segments and uses the segment means as levels, so
//! the cardinality-constrained problem over the step basis is solved exactly
//! by dynamic programming over split points.

use serde::{Deserialize, Serialize};

use crate::distinct::check_len;
use crate::error::{invalid, Result};

use super::refit::segment_levels;

/// Optimal contiguous partition of sorted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L0Partition {
    /// `boundaries[t]..boundaries[t + 1]` is segment `t`; starts at 0, ends at `m`.
    pub boundaries: Vec<usize>,
    pub levels: Vec<f64>,
    /// Weighted within-segment sum of squares.
    pub sse: f64,
}

/// Prefix sums of `w`, `w x` and `w x^2` around a shift for conditioning.
struct SegmentCost {
    w: Vec<f64>,
    wx: Vec<f64>,
    wxx: Vec<f64>,
}

impl SegmentCost {
    fn new(values: &[f64], weights: Option<&[f64]>) -> Self {
        let m = values.len();
        let shift = values[m / 2];
        let mut s = SegmentCost {
            w: vec![0.0; m + 1],
            wx: vec![0.0; m + 1],
            wxx: vec![0.0; m + 1],
        };
        for i in 0..m {
            let wi = weights.map_or(1.0, |w| w[i]);
            let x = values[i] - shift;
            s.w[i + 1] = s.w[i] + wi;
            s.wx[i + 1] = s.wx[i] + wi * x;
            s.wxx[i + 1] = s.wxx[i] + wi * x * x;
        }
        s
    }

    /// Cost of the segment `lo..hi`.
    #[inline]
    fn cost(&self, lo: usize, hi: usize) -> f64 {
        let w = self.w[hi] - self.w[lo];
        let wx = self.wx[hi] - self.wx[lo];
        let c = (self.wxx[hi] - self.wxx[lo]) - wx * wx / w;
        c.max(0.0)
    }
}

/// Minimizes `sum_i w_i (x_i - level(seg(i)))^2` over partitions of the sorted
/// `values` into at most `l` contiguous segments.
///
/// `O(m^2 l)` time, `O(m l)` memory.
#[allow(clippy::needless_range_loop)]
pub fn solve_l0_dp(values: &[f64], l: usize, weights: Option<&[f64]>) -> Result<L0Partition> {
    let m = values.len();
    if l < 1 || l > m {
        return Err(invalid(format!("target size l = {l} must lie in [1, {m}]")));
    }
    if values.windows(2).any(|p| p[0] > p[1]) {
        return Err(invalid("values must be sorted ascending"));
    }
    if let Some(w) = weights {
        check_len(m, w.len())?;
        if w.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(invalid("weights must be positive and finite"));
        }
    }

    let seg = SegmentCost::new(values, weights);
    // best[i]: optimal cost of the first i values with the current segment count.
    let mut best: Vec<f64> = (0..=m)
        .map(|i| if i == 0 { 0.0 } else { seg.cost(0, i) })
        .collect();
    // split[s][i]: start of the last segment in the optimum of the first i
    // values using s + 1 segments.
    let mut split = vec![vec![0usize; m + 1]; l];
    let mut next = vec![f64::INFINITY; m + 1];

    for s in 1..l {
        next.fill(f64::INFINITY);
        for i in (s + 1)..=m {
            let mut arg = s;
            let mut val = f64::INFINITY;
            for j in s..i {
                let c = best[j] + seg.cost(j, i);
                if c < val {
                    val = c;
                    arg = j;
                }
            }
            next[i] = val;
            split[s][i] = arg;
        }
        std::mem::swap(&mut best, &mut next);
    }

    let mut boundaries = vec![m];
    let mut i = m;
    for s in (1..l).rev() {
        i = split[s][i];
        boundaries.push(i);
    }
    boundaries.push(0);
    boundaries.reverse();

    let starts = &boundaries[..boundaries.len() - 1];
    let levels = segment_levels(values, starts, weights);
    let sse = partition_sse(values, &boundaries, &levels, weights);
    Ok(L0Partition {
        boundaries,
        levels,
        sse,
    })
}

/// Largest input accepted by [`exhaustive_l0`].
pub const EXHAUSTIVE_MAX_LEN: usize = 24;

/// Brute-force counterpart of [`solve_l0_dp`] (unweighted): tries every way
/// to cut the sorted values into at most `l` contiguous segments.
pub fn exhaustive_l0(values: &[f64], l: usize) -> Result<L0Partition> {
    let m = values.len();
    if l < 1 || l > m {
        return Err(invalid(format!("target size l = {l} must lie in [1, {m}]")));
    }
    if m > EXHAUSTIVE_MAX_LEN {
        return Err(invalid(format!(
            "exhaustive search limited to {EXHAUSTIVE_MAX_LEN} values, got {m}"
        )));
    }
    if values.windows(2).any(|p| p[0] > p[1]) {
        return Err(invalid("values must be sorted ascending"));
    }
    let mut best: Option<L0Partition> = None;
    // Bit i - 1 set means a segment starts at index i.
    for mask in 0u32..(1u32 << (m - 1)) {
        if mask.count_ones() as usize >= l {
            continue;
        }
        let mut boundaries = vec![0];
        boundaries.extend((1..m).filter(|i| mask & (1 << (i - 1)) != 0));
        boundaries.push(m);
        let levels = segment_levels(values, &boundaries[..boundaries.len() - 1], None);
        let sse = partition_sse(values, &boundaries, &levels, None);
        if best.as_ref().is_none_or(|b| sse < b.sse) {
            best = Some(L0Partition {
                boundaries,
                levels,
                sse,
            });
        }
    }
    Ok(best.expect("at least one partition"))
}

/// Direct weighted sum of squared deviations of a partition.
pub(crate) fn partition_sse(
    values: &[f64],
    boundaries: &[usize],
    levels: &[f64],
    weights: Option<&[f64]>,
) -> f64 {
    let mut sse = 0.0;
    for (t, level) in levels.iter().enumerate() {
        for i in boundaries[t]..boundaries[t + 1] {
            let e = values[i] - level;
            sse += weights.map_or(1.0, |w| w[i]) * e * e;
        }
    }
    sse
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_agrees_with_dp_on_example() {
        let v = [1.0, 2.0, 10.0, 11.0];
        let e = exhaustive_l0(&v, 2).unwrap();
        assert_eq!(e, solve_l0_dp(&v, 2, None).unwrap());
        assert!(exhaustive_l0(&[0.0; 25], 2).is_err());
    }

    #[test]
    fn two_clusters_example() {
        // Oracle: enumerate the three single-breakpoint splits.
        let v = [1.0, 2.0, 10.0, 11.0];
        let sse_of = |k: usize| {
            let (a, b) = v.split_at(k);
            let ma = a.iter().sum::<f64>() / a.len() as f64;
            let mb = b.iter().sum::<f64>() / b.len() as f64;
            a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
                + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>()
        };
        let oracle = (1..4).map(sse_of).fold(f64::INFINITY, f64::min);
        assert_eq!(oracle, 1.0);

        let p = solve_l0_dp(&v, 2, None).unwrap();
        assert_eq!(p.boundaries, vec![0, 2, 4]);
        assert_eq!(p.levels, vec![1.5, 10.5]);
        assert_eq!(p.sse, oracle);
    }

    #[test]
    fn l_equals_m_is_lossless() {
        let v = [0.1, 0.7, 2.5, 3.0, 9.75];
        let p = solve_l0_dp(&v, v.len(), None).unwrap();
        assert_eq!(p.levels, v.to_vec());
        assert_eq!(p.sse, 0.0);
        assert_eq!(p.boundaries, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn single_level_is_mean() {
        let v = [1.0, 2.0, 6.0];
        let p = solve_l0_dp(&v, 1, None).unwrap();
        assert_eq!(p.levels, vec![3.0]);
        assert_eq!(p.sse, 4.0 + 1.0 + 9.0);
    }

    #[test]
    fn range_errors() {
        assert!(solve_l0_dp(&[1.0, 2.0], 0, None).is_err());
        assert!(solve_l0_dp(&[1.0, 2.0], 3, None).is_err());
        assert!(solve_l0_dp(&[2.0, 1.0], 1, None).is_err());
        assert!(solve_l0_dp(&[1.0, 2.0], 1, Some(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn weights_pull_levels() {
        let p = solve_l0_dp(&[0.0, 1.0, 10.0], 2, Some(&[1.0, 3.0, 1.0])).unwrap();
        assert_eq!(p.boundaries, vec![0, 2, 3]);
        assert_eq!(p.levels, vec![0.75, 10.0]);
        assert!((p.sse - (0.75f64.powi(2) + 3.0 * 0.25f64.powi(2))).abs() < 1e-15);
    }
}
