//! Seeded synthetic datasets and file-backed dataset descriptions.

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::io::{read_csv, read_pgm};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Mog,
    Uniform,
    Gaussian,
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MogComponent {
    pub weight: f64,
    pub mean: f64,
    pub stddev: f64,
}

/// Where a vector comes from: a seeded generator or a file.
///
/// Generated samples are restricted to `range` by re-drawing out-of-range
/// samples, never by clipping them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_range")]
    pub range: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Empty means the default three-component mixture, see
    /// [`DatasetSpec::default_mog`].
    #[serde(default)]
    pub mog_components: Vec<MogComponent>,
    /// Gaussian mean; defaults to the middle of `range`.
    #[serde(default)]
    pub mean: Option<f64>,
    /// Gaussian standard deviation; defaults to a sixth of the range width.
    #[serde(default)]
    pub stddev: Option<f64>,
    /// Skip one header line when reading CSV.
    #[serde(default)]
    pub header: bool,
    /// Name used in reports; defaults to the kind.
    #[serde(default)]
    pub label: Option<String>,
}

fn default_n() -> usize {
    500
}

fn default_range() -> (f64, f64) {
    (0.0, 100.0)
}

impl DatasetSpec {
    pub fn generated(kind: DatasetKind, n: usize, range: (f64, f64), seed: u64) -> Self {
        DatasetSpec {
            kind,
            n,
            range,
            seed,
            path: None,
            mog_components: Vec::new(),
            mean: None,
            stddev: None,
            header: false,
            label: None,
        }
    }

    pub fn file(kind: DatasetKind, path: impl Into<PathBuf>) -> Self {
        DatasetSpec {
            path: Some(path.into()),
            ..DatasetSpec::generated(kind, 0, default_range(), 0)
        }
    }

    /// Approximate shape only: three equal-weight components at 20%, 50% and
    /// 80% of the range, each with a standard deviation of 8% of the width.
    pub fn default_mog(range: (f64, f64)) -> Vec<MogComponent> {
        let (lo, hi) = range;
        let width = hi - lo;
        [0.2, 0.5, 0.8]
            .into_iter()
            .map(|f| MogComponent {
                weight: 1.0 / 3.0,
                mean: lo + f * width,
                stddev: 0.08 * width,
            })
            .collect()
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            match self.kind {
                DatasetKind::Mog => "mog",
                DatasetKind::Uniform => "uniform",
                DatasetKind::Gaussian => "gaussian",
                DatasetKind::Csv => "csv",
                DatasetKind::Pgm => "pgm",
            }
            .to_string()
        })
    }

    fn components(&self) -> Vec<MogComponent> {
        match self.kind {
            DatasetKind::Mog if self.mog_components.is_empty() => Self::default_mog(self.range),
            DatasetKind::Mog => self.mog_components.clone(),
            _ => {
                let (lo, hi) = self.range;
                vec![MogComponent {
                    weight: 1.0,
                    mean: self.mean.unwrap_or((lo + hi) / 2.0),
                    stddev: self.stddev.unwrap_or((hi - lo) / 6.0),
                }]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DatasetKind::Csv | DatasetKind::Pgm => {
                if self.path.is_none() {
                    return Err(invalid("file datasets require a path"));
                }
            }
            DatasetKind::Mog | DatasetKind::Uniform | DatasetKind::Gaussian => {
                if self.n < 1 {
                    return Err(invalid("generated datasets need n >= 1"));
                }
                let (lo, hi) = self.range;
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(invalid(format!("range requires lo < hi, got ({lo}, {hi})")));
                }
                let comps = self.components();
                for c in &comps {
                    if !(c.weight > 0.0) {
                        return Err(invalid("mixture weights must be positive"));
                    }
                    if !(c.stddev >= 0.0) || !c.stddev.is_finite() || !c.mean.is_finite() {
                        return Err(invalid("component mean/stddev must be finite, stddev >= 0"));
                    }
                }
                let total: f64 = comps.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Generates or reads the vector described by this spec.
    pub fn load(&self) -> Result<Vec<f64>> {
        self.validate()?;
        match self.kind {
            DatasetKind::Csv => read_csv(self.path.as_ref().unwrap(), self.header),
            DatasetKind::Pgm => Ok(read_pgm(self.path.as_ref().unwrap())?.pixels),
            _ => generate(self),
        }
    }
}

/// Draws `spec.n` samples inside `spec.range`.
///
/// Fails after `1000 * n` draws if not enough samples landed in range.
pub fn generate(spec: &DatasetSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if matches!(spec.kind, DatasetKind::Csv | DatasetKind::Pgm) {
        return Err(invalid("generate() only handles generator kinds"));
    }
    let (lo, hi) = spec.range;
    let mut rng = seeded(spec.seed);
    let mut out = Vec::with_capacity(spec.n);
    let budget = spec.n.saturating_mul(1000);

    if spec.kind == DatasetKind::Uniform {
        out.extend((0..spec.n).map(|_| rng.random_range(lo..=hi)));
        return Ok(out);
    }

    let comps = spec.components();
    let normals: Vec<Normal<f64>> = comps
        .iter()
        .map(|c| Normal::new(c.mean, c.stddev).map_err(|e| invalid(e.to_string())))
        .collect::<Result<_>>()?;
    let mut draws = 0;
    while out.len() < spec.n {
        if draws >= budget {
            return Err(Error::RejectionFailed {
                accepted: out.len(),
                wanted: spec.n,
                draws,
            });
        }
        draws += 1;
        // A single component consumes no selection draw.
        let c = if comps.len() == 1 {
            0
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            comps
                .iter()
                .position(|c| {
                    acc += c.weight;
                    u < acc
                })
                .unwrap_or(comps.len() - 1)
        };
        let x = normals[c].sample(&mut rng);
        if (lo..=hi).contains(&x) {
            out.push(x);
        }
    }
    Ok(out)
}
