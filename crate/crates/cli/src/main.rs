use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sparsevq::data::DatasetKind;
use sparsevq::io::{format_csv, read_csv_rows, write_atomic};
use sparsevq::rng::default_seed;
use sparsevq::solvers::{exhaustive_l0, solve_l0_dp};
use sparsevq::{
    extract_distinct, flatten_matrix, generate, l2_loss, l2_loss_distinct, quantize, read_pgm,
    restore_matrix, run_bench, write_pgm, Clamp, DatasetSpec, Error, Method, MogComponent,
    PgmEncoding, QuantizeRequest, SolverConfig, SweepSpec, Weighting,
};

#[derive(Parser)]
#[command(
    name = "sparsevq",
    version,
    about = "Scalar vector quantization via sparse least squares"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize the numbers in a CSV file.
    Quantize {
        input: PathBuf,
        #[command(flatten)]
        q: QuantizeArgs,
        /// Clamp outputs to `lo,hi`.
        #[arg(long, value_parser = parse_pair)]
        clamp: Option<(f64, f64)>,
        /// Skip the first line of the input.
        #[arg(long)]
        header: bool,
        /// Output CSV (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Quantize a grayscale PGM image; outputs are clamped to [0, 1].
    Image {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        q: QuantizeArgs,
        /// Write plain-text P2 instead of binary P5.
        #[arg(long)]
        ascii: bool,
    },
    /// Generate a seeded synthetic dataset as CSV.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, value_parser = parse_pair, default_value = "0,100")]
        range: (f64, f64),
        /// Defaults to $SPARSEVQ_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Mixture component `weight:mean:stddev`; repeat for each component.
        #[arg(long = "component", value_parser = parse_component)]
        components: Vec<MogComponent>,
        /// Gaussian mean.
        #[arg(long)]
        mean: Option<f64>,
        /// Gaussian standard deviation.
        #[arg(long)]
        stddev: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark sweep described by a JSON file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// JSON-lines report path.
        #[arg(long)]
        json: Option<PathBuf>,
        /// CSV report path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Replaces the seeds listed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Optimal and brute-force size-l quantization of a small vector.
    Oracle {
        /// Comma-separated values.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        values: Vec<f64>,
        #[arg(long)]
        l: usize,
    },
}

#[derive(Args)]
struct QuantizeArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Target number of levels.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    /// Least-squares refit after the L1 solve (turns `l1` into `l1_refit`).
    #[arg(long)]
    refit: bool,
    /// Defaults to $SPARSEVQ_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = sparsevq::clustering::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, value_enum, default_value_t = WeightingArg::Distinct)]
    weighting: WeightingArg,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    delta_lambda: Option<f64>,
    #[arg(long, default_value_t = 200)]
    max_rounds: usize,
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    #[arg(long, default_value_t = 10_000)]
    max_sweeps: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Distinct,
    Multiplicity,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Mog,
    Uniform,
    Gaussian,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn parse_component(s: &str) -> Result<MogComponent, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [weight, mean, stddev] = parts[..] else {
        return Err("expected `weight:mean:stddev`".into());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok(MogComponent {
        weight: num(weight)?,
        mean: num(mean)?,
        stddev: num(stddev)?,
    })
}

impl QuantizeArgs {
    fn request(&self, clamp: Option<Clamp>) -> QuantizeRequest {
        let method = match self.method {
            Method::L1 if self.refit => Method::L1Refit,
            m => m,
        };
        QuantizeRequest {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            target_l: self.l,
            clamp,
            seed: self.seed.unwrap_or_else(default_seed),
            restarts: self.restarts,
            weighting: match self.weighting {
                WeightingArg::Distinct => Weighting::Distinct,
                WeightingArg::Multiplicity => Weighting::Multiplicity,
            },
            solver: SolverConfig {
                tolerance: self.tolerance,
                max_sweeps: self.max_sweeps,
                ..SolverConfig::default()
            },
            lambda0: self.lambda0,
            delta_lambda: self.delta_lambda,
            max_rounds: self.max_rounds,
            ..QuantizeRequest::new(method)
        }
    }
}

fn summary(method: Method, w: &[f64], q: &[f64], distinct: usize) -> anyhow::Result<String> {
    Ok(format!(
        "method={method} n={} distinct_in={} distinct_out={distinct} loss_full={} loss_distinct={}",
        w.len(),
        extract_distinct(w)?.len(),
        l2_loss(w, q)?,
        l2_loss_distinct(w, q)?,
    ))
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Quantize {
            input,
            q,
            clamp,
            header,
            output,
        } => {
            let clamp = clamp.map(|(lo, hi)| Clamp::new(lo, hi)).transpose()?;
            let rows = read_csv_rows(&input, header)?;
            let (w, shape) = flatten_matrix(&rows)?;
            let req = q.request(clamp);
            let out = quantize(&w, &req)?;
            let text = format_csv(&restore_matrix(&out.data, shape)?);
            emit(output.as_deref(), &text)?;
            let line = summary(out.method, &w, &out.data, out.distinct_count)?;
            if output.is_some() {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
        }
        Command::Image {
            input,
            output,
            q,
            ascii,
        } => {
            let img = read_pgm(&input)?;
            let req = q.request(Some(Clamp::new(0.0, 1.0)?));
            let out = quantize(&img.pixels, &req)?;
            let encoding = if ascii {
                PgmEncoding::Ascii
            } else {
                PgmEncoding::Binary
            };
            write_pgm(&output, &img.with_pixels(out.data.clone())?, encoding)?;
            // Report the loss of what was actually stored, after rounding to
            // the file's bit depth.
            let stored = read_pgm(&output)?;
            println!(
                "{} width={} height={} loss_stored={}",
                summary(out.method, &img.pixels, &out.data, out.distinct_count)?,
                img.width,
                img.height,
                l2_loss(&img.pixels, &stored.pixels)?,
            );
        }
        Command::Gen {
            kind,
            n,
            range,
            seed,
            components,
            mean,
            stddev,
            output,
        } => {
            let kind = match kind {
                GenKind::Mog => DatasetKind::Mog,
                GenKind::Uniform => DatasetKind::Uniform,
                GenKind::Gaussian => DatasetKind::Gaussian,
            };
            if kind != DatasetKind::Mog && !components.is_empty() {
                bail!(Error::InvalidParameter(
                    "--component only applies to --kind mog".into()
                ));
            }
            let spec = DatasetSpec {
                mog_components: components,
                mean,
                stddev,
                ..DatasetSpec::generated(kind, n, range, seed.unwrap_or_else(default_seed))
            };
            let x = generate(&spec)?;
            let rows: Vec<Vec<f64>> = x.into_iter().map(|v| vec![v]).collect();
            emit(output.as_deref(), &format_csv(&rows))?;
        }
        Command::Bench {
            config,
            json,
            csv,
            seed,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|source| Error::Io {
                path: config.clone(),
                source,
            })?;
            let raw: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("reading {}", config.display()))?;
            let has_seeds = raw.get("seeds").is_some();
            let mut spec: SweepSpec = serde_json::from_value(raw)
                .map_err(|e| Error::InvalidParameter(format!("bad sweep config: {e}")))?;
            if let Some(s) = seed {
                spec.seeds = vec![s];
            } else if !has_seeds {
                spec.seeds = vec![default_seed()];
            }
            let report = run_bench(&spec, std::env::args().collect())?;
            let lines = report.to_json_lines()?;
            if let Some(p) = &json {
                write_atomic(p, lines.as_bytes())?;
            }
            if let Some(p) = &csv {
                write_atomic(p, report.to_csv().as_bytes())?;
            }
            if json.is_none() && csv.is_none() {
                print!("{lines}");
            }
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            eprintln!("bench: {} rows, {failed} failed", report.rows.len());
        }
        Command::Oracle { values, l } => {
            let d = extract_distinct(&values)?;
            let dp = solve_l0_dp(d.values(), l, None)?;
            let brute = exhaustive_l0(d.values(), l)?;
            let out = serde_json::json!({
                "values": d.values(),
                "l": l,
                "dp": dp,
                "exhaustive": brute,
                "agree": dp.sse == brute.sse,
            });
            println!("{out}");
        }
    }
    Ok(())
}

/// Bad parameters and unreadable files are usage errors.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidParameter(_) | Error::Io { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
