//! Loss metrics, clamping, and the benchmark sweep runner.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::build_step_basis;
use crate::clustering::DEFAULT_RESTARTS;
use crate::data::DatasetSpec;
use crate::distinct::extract_distinct;
use crate::error::{invalid, Error, Result};
use crate::quantize::{quantize, Clamp, Method, QuantizeRequest, Weighting};
use crate::solvers::{max_lambda2, SolverConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Clamps `x` to `[a, b]`.
pub fn hard_sigmoid(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(invalid(format!(
            "hard_sigmoid requires a < b, got a={a}, b={b}"
        )));
    }
    Ok(if x <= a {
        a
    } else if x >= b {
        b
    } else {
        x
    })
}

/// Squared Euclidean distance.
pub fn l2_loss(w: &[f64], q: &[f64]) -> Result<f64> {
    if w.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: w.len(),
            got: q.len(),
        });
    }
    Ok(w.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Loss over distinct input values: each distinct value counts once, paired
/// with its quantized value.
pub fn l2_loss_distinct(w: &[f64], q: &[f64]) -> Result<f64> {
    let d = extract_distinct(w)?;
    let qd = d.gather(q)?;
    l2_loss(d.values(), &qd)
}

/// A benchmark grid. Target-size methods iterate `sizes`; lambda methods
/// iterate `lambdas`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default)]
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// `lambda2 = ratio * lambda1` for `l1_l2`, capped just below the largest
    /// admissible value for the data.
    #[serde(default = "default_lambda2_ratio")]
    pub lambda2_ratio: f64,
    #[serde(default)]
    pub clamp: Option<Clamp>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub weighting: Weighting,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_lambda2_ratio() -> f64 {
    0.5
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            datasets: Vec::new(),
            methods: Vec::new(),
            sizes: Vec::new(),
            lambdas: Vec::new(),
            seeds: default_seeds(),
            lambda2_ratio: default_lambda2_ratio(),
            clamp: None,
            restarts: DEFAULT_RESTARTS,
            weighting: Weighting::Distinct,
            solver: SolverConfig::default(),
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub method: Method,
    pub l: Option<usize>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub seed: u64,
    pub loss_full: Option<f64>,
    pub loss_distinct: Option<f64>,
    pub distinct_count: Option<usize>,
    pub wall_time_s: f64,
    /// Wall time divided by the number of restarts, for the clustering methods.
    pub restart_time_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub schema_version: u32,
    pub seed: u64,
    pub command_line: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<BenchRow>,
}

const CSV_HEADER: &str = "dataset,method,l,lambda1,lambda2,seed,loss_full,loss_distinct,\
distinct_count,wall_time_s,restart_time_s,error";

impl BenchReport {
    pub fn empty(seed: u64, command_line: Vec<String>) -> Self {
        BenchReport {
            metadata: ReportMetadata {
                schema_version: REPORT_SCHEMA_VERSION,
                seed,
                command_line,
                notes: Vec::new(),
            },
            rows: Vec::new(),
        }
    }

    /// First line is the metadata object, then one object per row.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.metadata)?;
        out.push('\n');
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let meta = lines.next().ok_or_else(|| invalid("empty report"))?;
        let metadata = serde_json::from_str(meta)?;
        let rows = lines.map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(BenchReport { metadata, rows })
    }

    /// CSV mirror of the rows; the schema version rides in a leading comment.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# schema_version={}\n{CSV_HEADER}\n",
            self.metadata.schema_version
        );
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(&r.dataset),
                r.method,
                r.l.map(|v| v.to_string()).unwrap_or_default(),
                opt(r.lambda1),
                opt(r.lambda2),
                r.seed,
                opt(r.loss_full),
                opt(r.loss_distinct),
                r.distinct_count.map(|v| v.to_string()).unwrap_or_default(),
                r.wall_time_s,
                opt(r.restart_time_s),
                csv_field(r.error.as_deref().unwrap_or("")),
            );
        }
        out
    }

    /// Copy with all timing fields zeroed, for comparing re-runs.
    pub fn redact_timing(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.wall_time_s = 0.0;
            r.restart_time_s = r.restart_time_s.map(|_| 0.0);
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const WEIGHTING_NOTE: &str =
    "clustering methods cluster distinct values unless weighting=multiplicity; \
loss_full counts duplicates, loss_distinct does not";
const MOG_NOTE: &str =
    "default mixture parameters (means at 20/50/80% of the range, stddev 8% of width, \
equal weights) are an approximation, not reference values";

/// Runs every (dataset, method, parameter, seed) cell in a fixed order.
///
/// Dataset loading failures abort the sweep; quantizer failures become rows
/// with `error` set.
pub fn run_bench(spec: &SweepSpec, command_line: Vec<String>) -> Result<BenchReport> {
    for m in &spec.methods {
        if !m.takes_target_size() && spec.lambdas.iter().any(|l| !(*l >= 0.0)) {
            return Err(invalid(format!("method {m}: lambdas must be >= 0")));
        }
    }
    if spec.restarts == 0 {
        return Err(invalid("restarts must be >= 1"));
    }
    spec.solver.validate()?;

    let mut report = BenchReport::empty(spec.seeds.first().copied().unwrap_or(0), command_line);
    report.metadata.notes.push(WEIGHTING_NOTE.into());
    if spec
        .datasets
        .iter()
        .any(|d| d.mog_components.is_empty() && d.kind == crate::data::DatasetKind::Mog)
    {
        report.metadata.notes.push(MOG_NOTE.into());
    }
    report.metadata.notes.extend(spec.notes.iter().cloned());

    for (di, ds) in spec.datasets.iter().enumerate() {
        let label = match &ds.label {
            Some(l) => l.clone(),
            None => format!("{}#{di}", ds.label()),
        };
        let w = ds.load()?;
        let lambda2_cap = max_lambda2(&build_step_basis(&extract_distinct(&w)?));
        for &method in &spec.methods {
            let params: Vec<(Option<usize>, Option<f64>)> = if method.takes_target_size() {
                spec.sizes.iter().map(|&l| (Some(l), None)).collect()
            } else {
                spec.lambdas.iter().map(|&x| (None, Some(x))).collect()
            };
            for (l, lambda1) in params {
                for &seed in &spec.seeds {
                    let lambda2 = (method == Method::L1L2)
                        .then(|| (spec.lambda2_ratio * lambda1.unwrap_or(0.0)).min(lambda2_cap));
                    let req = QuantizeRequest {
                        lambda1,
                        lambda2,
                        target_l: l,
                        clamp: spec.clamp,
                        seed,
                        restarts: spec.restarts,
                        weighting: spec.weighting,
                        solver: spec.solver,
                        ..QuantizeRequest::new(method)
                    };
                    report.rows.push(run_cell(&label, &w, &req));
                }
            }
        }
    }
    Ok(report)
}

fn run_cell(dataset: &str, w: &[f64], req: &QuantizeRequest) -> BenchRow {
    let start = Instant::now();
    let result = quantize(w, req);
    let wall_time_s = start.elapsed().as_secs_f64();
    let clustered = matches!(req.method, Method::Kmeans | Method::ClusterLs);
    let mut row = BenchRow {
        dataset: dataset.to_string(),
        method: req.method,
        l: req.target_l,
        lambda1: req.lambda1,
        lambda2: req.lambda2,
        seed: req.seed,
        loss_full: None,
        loss_distinct: None,
        distinct_count: None,
        wall_time_s,
        restart_time_s: clustered.then(|| wall_time_s / req.restarts as f64),
        error: None,
    };
    let losses = result.and_then(|q| {
        // Loss is against the input, after any clamping of the output.
        Ok((
            l2_loss(w, &q.data)?,
            l2_loss_distinct(w, &q.data)?,
            q.distinct_count,
        ))
    });
    match losses {
        Ok((full, distinct, count)) => {
            row.loss_full = Some(full);
            row.loss_distinct = Some(distinct);
            row.distinct_count = Some(count);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}
