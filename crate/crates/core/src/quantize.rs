//! End-to-end quantizers.
//!
//! Every method works on the sorted distinct values of the input and scatters
//! the quantized distinct values back onto the original positions. Clamping,
//! when requested, happens after reconstruction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{build_step_basis, StepBasis};
use crate::clustering::{assignment_segments, kmeans_1d, kmeans_1d_weighted, DEFAULT_RESTARTS};
use crate::distinct::{extract_distinct, scatter_to_original, SortedDistinctVector};
use crate::error::{invalid, Error, Result};
use crate::eval::hard_sigmoid;
use crate::solvers::{
    lasso_cd, lasso_neg_l2_cd, post_ls_refit, segment_levels, solve_l0_dp, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    L1,
    L1Refit,
    L1Iterative,
    L1L2,
    L0,
    ClusterLs,
    Kmeans,
    Uniform,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::L1,
        Method::L1Refit,
        Method::L1Iterative,
        Method::L1L2,
        Method::L0,
        Method::ClusterLs,
        Method::Kmeans,
        Method::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::L1Refit => "l1_refit",
            Method::L1Iterative => "l1_iterative",
            Method::L1L2 => "l1_l2",
            Method::L0 => "l0",
            Method::ClusterLs => "cluster_ls",
            Method::Kmeans => "kmeans",
            Method::Uniform => "uniform",
        }
    }

    /// Methods parameterized by a target number of levels rather than `lambda1`.
    pub fn takes_target_size(self) -> bool {
        matches!(
            self,
            Method::L1Iterative | Method::L0 | Method::ClusterLs | Method::Kmeans | Method::Uniform
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown method `{s}`")))
    }
}

/// Closed output range `[lo, hi]` enforced with [`hard_sigmoid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub lo: f64,
    pub hi: f64,
}

impl Clamp {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(invalid(format!(
                "clamp range requires lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Clamp { lo, hi })
    }

    pub fn apply(&self, x: f64) -> f64 {
        hard_sigmoid(x, self.lo, self.hi).expect("validated range")
    }
}

/// How duplicate input values count in the clustering-based methods.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every distinct value counts once.
    #[default]
    Distinct,
    /// Distinct values are weighted by their multiplicity in the input.
    ///
    /// `kmeans` clusters with these weights. `cluster_ls` still clusters the
    /// distinct values, then fits the levels by least squares over the full
    /// vector.
    Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedVector {
    pub data: Vec<f64>,
    /// Number of distinct values in `data`.
    pub distinct_count: usize,
    pub method: Method,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub seed: u64,
    pub restarts: usize,
    pub weighting: Weighting,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            weighting: Weighting::Distinct,
        }
    }
}

/// Schedule for [`quantize_l1_iterative`]: round `t` (from 1) uses
/// `lambda0 + (t - 1) * delta_lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterativeSchedule {
    pub lambda0: f64,
    pub delta_lambda: f64,
    pub max_rounds: usize,
}

impl IterativeSchedule {
    pub const DEFAULT_MAX_ROUNDS: usize = 200;

    /// `delta_lambda = lambda0`.
    pub fn new(lambda0: f64, max_rounds: usize) -> Self {
        IterativeSchedule {
            lambda0,
            delta_lambda: lambda0,
            max_rounds,
        }
    }

    pub fn lambda_at(&self, round: usize) -> f64 {
        self.lambda0 + (round - 1) as f64 * self.delta_lambda
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0) || !self.lambda0.is_finite() {
            return Err(invalid(format!(
                "lambda0 must be > 0, got {}",
                self.lambda0
            )));
        }
        if !(self.delta_lambda > 0.0) || !self.delta_lambda.is_finite() {
            return Err(invalid(format!(
                "delta_lambda must be > 0, got {}",
                self.delta_lambda
            )));
        }
        if self.max_rounds == 0 {
            return Err(invalid("max_rounds must be >= 1"));
        }
        Ok(())
    }
}

/// Everything needed to run any method; see [`quantize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizeRequest {
    pub method: Method,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub target_l: Option<usize>,
    pub clamp: Option<Clamp>,
    pub seed: u64,
    pub restarts: usize,
    pub weighting: Weighting,
    pub solver: SolverConfig,
    /// Iterative schedule start; calibrated from the data when absent.
    pub lambda0: Option<f64>,
    pub delta_lambda: Option<f64>,
    pub max_rounds: usize,
}

impl QuantizeRequest {
    pub fn new(method: Method) -> Self {
        QuantizeRequest {
            method,
            lambda1: None,
            lambda2: None,
            target_l: None,
            clamp: None,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            weighting: Weighting::Distinct,
            solver: SolverConfig::default(),
            lambda0: None,
            delta_lambda: None,
            max_rounds: IterativeSchedule::DEFAULT_MAX_ROUNDS,
        }
    }

    pub fn with_lambda1(mut self, lambda1: f64) -> Self {
        self.lambda1 = Some(lambda1);
        self
    }

    pub fn with_lambda2(mut self, lambda2: f64) -> Self {
        self.lambda2 = Some(lambda2);
        self
    }

    pub fn with_target(mut self, l: usize) -> Self {
        self.target_l = Some(l);
        self
    }

    pub fn with_clamp(mut self, clamp: Clamp) -> Self {
        self.clamp = Some(clamp);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks that the parameters the method needs are present.
    pub fn validate(&self) -> Result<()> {
        let needs_lambda1 = matches!(self.method, Method::L1 | Method::L1Refit | Method::L1L2);
        if needs_lambda1 && self.lambda1.is_none() {
            return Err(invalid(format!("method {} requires lambda1", self.method)));
        }
        if self.method == Method::L1L2 && self.lambda2.is_none() {
            return Err(invalid("method l1_l2 requires lambda2"));
        }
        if self.method.takes_target_size() && self.target_l.is_none() {
            return Err(invalid(format!(
                "method {} requires a target size l",
                self.method
            )));
        }
        Ok(())
    }

    fn cluster_options(&self) -> ClusterOptions {
        ClusterOptions {
            seed: self.seed,
            restarts: self.restarts,
            weighting: self.weighting,
        }
    }
}

/// Runs the method named in `req`.
pub fn quantize(w: &[f64], req: &QuantizeRequest) -> Result<QuantizedVector> {
    req.validate()?;
    let l = req.target_l.unwrap_or(0);
    let cfg = req.solver.with_lambda1(req.lambda1.unwrap_or(0.0));
    match req.method {
        Method::L1 => quantize_l1(w, &cfg, false, req.clamp),
        Method::L1Refit => quantize_l1(w, &cfg, true, req.clamp),
        Method::L1L2 => quantize_l1_l2(
            w,
            &cfg.with_lambda2(req.lambda2.unwrap_or(0.0)),
            false,
            req.clamp,
        ),
        Method::L1Iterative => {
            let lambda0 = match req.lambda0 {
                Some(x) => x,
                None => calibrate_lambda0(w, l, req.max_rounds, &req.solver)?,
            };
            let schedule = IterativeSchedule {
                lambda0,
                delta_lambda: req.delta_lambda.unwrap_or(lambda0),
                max_rounds: req.max_rounds,
            };
            quantize_l1_iterative(w, l, &schedule, &req.solver, req.clamp)
        }
        Method::L0 => quantize_l0(w, l, req.clamp),
        Method::ClusterLs => quantize_cluster_ls(w, l, &req.cluster_options(), req.clamp),
        Method::Kmeans => quantize_kmeans(w, l, &req.cluster_options(), req.clamp),
        Method::Uniform => quantize_uniform(w, l, req.clamp),
    }
}

/// Sparse coefficients and the fitted distinct values of one L1 solve.
struct L1Fit {
    alpha: Vec<f64>,
    support: Vec<usize>,
    fitted: Vec<f64>,
    sweeps: usize,
}

fn fit_l1(
    d: &SortedDistinctVector,
    b: &StepBasis,
    cfg: &SolverConfig,
    refit: bool,
    warm: Option<&[f64]>,
) -> Result<L1Fit> {
    let (coef, trace) = if cfg.lambda2 > 0.0 {
        lasso_neg_l2_cd(b, d.values(), cfg, warm)?
    } else {
        lasso_cd(b, d.values(), cfg, warm)?
    };
    let alpha = if refit && !coef.support.is_empty() {
        post_ls_refit(b, d.values(), &coef.support)?.alpha
    } else {
        coef.alpha
    };
    let fitted = b.apply(&alpha)?;
    Ok(L1Fit {
        alpha,
        support: coef.support,
        fitted,
        sweeps: trace.sweeps_run,
    })
}

fn finish(
    d: &SortedDistinctVector,
    quantized_distinct: &[f64],
    method: Method,
    mut params: BTreeMap<String, f64>,
    clamp: Option<Clamp>,
) -> Result<QuantizedVector> {
    let mut data = scatter_to_original(d, quantized_distinct)?;
    if let Some(c) = clamp {
        data.iter_mut().for_each(|x| *x = c.apply(*x));
        params.insert("clamp_lo".into(), c.lo);
        params.insert("clamp_hi".into(), c.hi);
    }
    Ok(QuantizedVector {
        distinct_count: count_distinct(&data),
        data,
        method,
        params,
    })
}

/// Number of distinct values (exact equality).
pub fn count_distinct(x: &[f64]) -> usize {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| a == b);
    s.len()
}

/// L1 quantization, optionally followed by the least-squares refit on the
/// selected support. Uses `cfg.lambda1`; `cfg.lambda2` is ignored.
pub fn quantize_l1(
    w: &[f64],
    cfg: &SolverConfig,
    refit: bool,
    clamp: Option<Clamp>,
) -> Result<QuantizedVector> {
    let cfg = cfg.with_lambda2(0.0);
    let d = extract_distinct(w)?;
    let b = build_step_basis(&d);
    let fit = fit_l1(&d, &b, &cfg, refit, None)?;
    let method = if refit { Method::L1Refit } else { Method::L1 };
    let params = l1_params(&cfg, &fit);
    finish(&d, &fit.fitted, method, params, clamp)
}

/// L1 minus L2 quantization; `cfg.lambda2 = 0` gives exactly [`quantize_l1`].
pub fn quantize_l1_l2(
    w: &[f64],
    cfg: &SolverConfig,
    refit: bool,
    clamp: Option<Clamp>,
) -> Result<QuantizedVector> {
    let d = extract_distinct(w)?;
    let b = build_step_basis(&d);
    let fit = fit_l1(&d, &b, cfg, refit, None)?;
    let method = if cfg.lambda2 > 0.0 {
        Method::L1L2
    } else if refit {
        Method::L1Refit
    } else {
        Method::L1
    };
    let params = l1_params(cfg, &fit);
    finish(&d, &fit.fitted, method, params, clamp)
}

fn l1_params(cfg: &SolverConfig, fit: &L1Fit) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("lambda1".to_string(), cfg.lambda1),
        ("lambda2".to_string(), cfg.lambda2),
        ("support".to_string(), fit.support.len() as f64),
        ("sweeps".to_string(), fit.sweeps as f64),
    ])
}

/// Raises `lambda1` on a linear schedule, warm-starting each round from the
/// previous refitted coefficients, until the refitted reconstruction has at
/// most `l` levels (and so at most `l` support entries). May undershoot `l`.
///
/// On exhaustion the error carries the result with the fewest levels seen.
pub fn quantize_l1_iterative(
    w: &[f64],
    l: usize,
    schedule: &IterativeSchedule,
    solver: &SolverConfig,
    clamp: Option<Clamp>,
) -> Result<QuantizedVector> {
    if l < 1 {
        return Err(invalid("target size l must be >= 1"));
    }
    schedule.validate()?;
    let d = extract_distinct(w)?;
    let b = build_step_basis(&d);

    let mut warm: Option<Vec<f64>> = None;
    let mut best: Option<(usize, Vec<f64>, BTreeMap<String, f64>)> = None;
    for round in 1..=schedule.max_rounds {
        let cfg = solver
            .with_lambda1(schedule.lambda_at(round))
            .with_lambda2(0.0);
        let fit = fit_l1(&d, &b, &cfg, true, warm.as_deref())?;
        let levels = count_distinct(&fit.fitted);
        let mut params = l1_params(&cfg, &fit);
        params.insert("target_l".into(), l as f64);
        params.insert("rounds".into(), round as f64);
        params.insert("lambda0".into(), schedule.lambda0);
        params.insert("delta_lambda".into(), schedule.delta_lambda);

        if fit.support.len() <= l && levels <= l {
            return finish(&d, &fit.fitted, Method::L1Iterative, params, clamp);
        }
        if best.as_ref().is_none_or(|(n, _, _)| levels < *n) {
            best = Some((levels, fit.fitted.clone(), params));
        }
        warm = Some(fit.alpha);
    }

    let (levels, fitted, params) = best.expect("max_rounds >= 1");
    let best = finish(&d, &fitted, Method::L1Iterative, params, clamp)?;
    Err(Error::RoundsExhausted {
        rounds: schedule.max_rounds,
        levels,
        target: l,
        best: Box::new(best),
    })
}

/// Picks `lambda0` so that the linear schedule reaches `l` levels roughly
/// between rounds `0.3 * max_rounds` and `0.6 * max_rounds`.
///
/// Halves `lambda1` down from the value at which `alpha = 0` is optimal and
/// keeps the last value whose refitted solve still has at most `l` levels,
/// `lambda*`. The schedule `t * lambda* / (0.6 max_rounds)` then crosses
/// `lambda*/2 .. lambda*` in that window, so successive rounds stay within a
/// few percent of each other near the stopping point.
pub fn calibrate_lambda0(
    w: &[f64],
    l: usize,
    max_rounds: usize,
    solver: &SolverConfig,
) -> Result<f64> {
    if l < 1 {
        return Err(invalid("target size l must be >= 1"));
    }
    if max_rounds == 0 {
        return Err(invalid("max_rounds must be >= 1"));
    }
    let d = extract_distinct(w)?;
    let b = build_step_basis(&d);
    let lambda_max = 2.0
        * b.transpose_apply(d.values())?
            .iter()
            .fold(0.0f64, |acc, g| acc.max(g.abs()));
    let scale = 0.6 * max_rounds as f64;
    if lambda_max == 0.0 {
        return Ok(1e-12);
    }
    if l >= d.len() {
        // Any lambda satisfies the target on the first round.
        return Ok(lambda_max / scale);
    }

    let mut lambda = lambda_max;
    let mut warm: Option<Vec<f64>> = None;
    while lambda > lambda_max * 1e-12 {
        let cfg = solver.with_lambda1(lambda / 2.0).with_lambda2(0.0);
        let fit = fit_l1(&d, &b, &cfg, true, warm.as_deref())?;
        if fit.support.len() > l || count_distinct(&fit.fitted) > l {
            break;
        }
        warm = Some(fit.alpha);
        lambda /= 2.0;
    }
    Ok(lambda / scale)
}

/// Exact best quantizer with at most `l` levels over the distinct values.
pub fn quantize_l0(w: &[f64], l: usize, clamp: Option<Clamp>) -> Result<QuantizedVector> {
    quantize_l0_weighted(w, l, Weighting::Distinct, clamp)
}

pub fn quantize_l0_weighted(
    w: &[f64],
    l: usize,
    weighting: Weighting,
    clamp: Option<Clamp>,
) -> Result<QuantizedVector> {
    let d = extract_distinct(w)?;
    let weights = match weighting {
        Weighting::Distinct => None,
        Weighting::Multiplicity => Some(d.multiplicities()),
    };
    let p = solve_l0_dp(d.values(), l, weights.as_deref())?;
    let q = expand_levels(&p.boundaries, &p.levels, d.len());
    let params = BTreeMap::from([
        ("target_l".to_string(), l as f64),
        ("sse_distinct".to_string(), p.sse),
    ]);
    finish(&d, &q, Method::L0, params, clamp)
}

fn expand_levels(boundaries: &[usize], levels: &[f64], m: usize) -> Vec<f64> {
    let mut q = vec![0.0; m];
    for (t, &level) in levels.iter().enumerate() {
        q[boundaries[t]..boundaries[t + 1]].fill(level);
    }
    q
}

/// Closed-form least-squares fit of one level per cluster segment, expressed
/// over the cumulative basis whose non-zero entries all equal `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLsFit {
    pub boundaries: Vec<usize>,
    pub levels: Vec<f64>,
    /// Fill value of the cumulative basis (mean of the distinct values, or 1
    /// when that mean is 0).
    pub base: f64,
    /// Coefficients with `base * sum(alpha[..=t]) = levels[t]`.
    pub alpha: Vec<f64>,
}

pub fn fit_cluster_levels(
    sorted_values: &[f64],
    boundaries: &[usize],
    weights: Option<&[f64]>,
) -> ClusterLsFit {
    let starts = &boundaries[..boundaries.len() - 1];
    let levels = segment_levels(sorted_values, starts, weights);
    let mean = sorted_values.iter().sum::<f64>() / sorted_values.len() as f64;
    let base = if mean == 0.0 { 1.0 } else { mean };
    let mut prev = 0.0;
    let alpha = levels
        .iter()
        .map(|&lv| {
            let a = (lv - prev) / base;
            prev = lv;
            a
        })
        .collect();
    ClusterLsFit {
        boundaries: boundaries.to_vec(),
        levels,
        base,
        alpha,
    }
}

/// k-means on the distinct values, then the least-squares level per cluster.
pub fn quantize_cluster_ls(
    w: &[f64],
    l: usize,
    opts: &ClusterOptions,
    clamp: Option<Clamp>,
) -> Result<QuantizedVector> {
    let d = extract_distinct(w)?;
    let a = kmeans_1d(d.values(), l, opts.seed, opts.restarts)?;
    let boundaries = assignment_segments(&a, d.values())?;
    let weights = match opts.weighting {
        Weighting::Distinct => None,
        Weighting::Multiplicity => Some(d.multiplicities()),
    };
    let fit = fit_cluster_levels(d.values(), &boundaries, weights.as_deref());
    let q = expand_levels(&fit.boundaries, &fit.levels, d.len());
    finish(
        &d,
        &q,
        Method::ClusterLs,
        cluster_params(l, opts, a.inertia),
        clamp,
    )
}

/// Classic k-means quantization: every value becomes its cluster center.
pub fn quantize_kmeans(
    w: &[f64],
    l: usize,
    opts: &ClusterOptions,
    clamp: Option<Clamp>,
) -> Result<QuantizedVector> {
    let d = extract_distinct(w)?;
    let a = match opts.weighting {
        Weighting::Distinct => kmeans_1d(d.values(), l, opts.seed, opts.restarts)?,
        Weighting::Multiplicity => {
            kmeans_1d_weighted(d.values(), &d.multiplicities(), l, opts.seed, opts.restarts)?
        }
    };
    let q: Vec<f64> = a.labels.iter().map(|&c| a.centers[c]).collect();
    finish(
        &d,
        &q,
        Method::Kmeans,
        cluster_params(l, opts, a.inertia),
        clamp,
    )
}

fn cluster_params(l: usize, opts: &ClusterOptions, inertia: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("target_l".to_string(), l as f64),
        ("seed".to_string(), opts.seed as f64),
        ("restarts".to_string(), opts.restarts as f64),
        ("inertia".to_string(), inertia),
        (
            "multiplicity_weighted".to_string(),
            f64::from(u8::from(opts.weighting == Weighting::Multiplicity)),
        ),
    ])
}

/// `l` evenly spaced levels over `[min(w), max(w)]`; each entry snaps to the
/// nearest level, ties to the lower one.
pub fn quantize_uniform(w: &[f64], l: usize, clamp: Option<Clamp>) -> Result<QuantizedVector> {
    if l < 2 {
        return Err(invalid(format!(
            "uniform quantization needs l >= 2, got {l}"
        )));
    }
    let d = extract_distinct(w)?;
    let lo = d.values()[0];
    let hi = d.values()[d.len() - 1];
    let step = (hi - lo) / (l - 1) as f64;
    let level = |i: usize| if i == l - 1 { hi } else { lo + i as f64 * step };
    let q: Vec<f64> = d
        .values()
        .iter()
        .map(|&x| {
            if step == 0.0 {
                return x;
            }
            let i = (((x - lo) / step).floor() as usize).min(l - 1);
            if i == l - 1 {
                return hi;
            }
            let (below, above) = (level(i), level(i + 1));
            if above - x < x - below {
                above
            } else {
                below
            }
        })
        .collect();
    let params = BTreeMap::from([("target_l".to_string(), l as f64)]);
    finish(&d, &q, Method::Uniform, params, clamp)
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(invalid("log grid needs 0 < lo <= hi and n >= 1"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}
