//! Acceptance suite. Each criterion prints one PASS/FAIL line to stderr
//! (uncaptured, so it shows in plain `cargo test` output) and fails its test
//! on FAIL. Criteria run one at a time because some of them time things.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rand::Rng;

use sparsevq::clustering::kmeans_1d;
use sparsevq::io::{encode_pgm, parse_pgm};
use sparsevq::rng::seeded;
use sparsevq::solvers::{lasso_cd, lasso_neg_l2_cd, max_lambda2, post_ls_refit, solve_l0_dp};
use sparsevq::{
    build_step_basis, extract_distinct, generate, hard_sigmoid, l2_loss, l2_loss_distinct,
    quantize, BenchReport, ClusterOptions, DatasetKind, DatasetSpec, ImageBuffer, Method,
    PgmEncoding, QuantizeRequest, SolverConfig, StepBasis,
};

static SERIAL: Mutex<()> = Mutex::new(());

type Outcome = Result<String, String>;

fn report(id: u32, name: &str, run: impl FnOnce() -> Outcome) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = run();
    let secs = start.elapsed().as_secs_f64();
    let (status, detail) = match &outcome {
        Ok(d) => ("PASS", d.as_str()),
        Err(d) => ("FAIL", d.as_str()),
    };
    // Written straight to the stderr handle so the test harness does not
    // capture it.
    let _ = writeln!(
        std::io::stderr(),
        "acceptance criterion {id:>2} [{status}] {name}: {detail} ({secs:.2}s)"
    );
    if let Err(d) = outcome {
        panic!("criterion {id} failed: {d}");
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn seeded_dataset(kind: DatasetKind, seed: u64) -> Vec<f64> {
    generate(&DatasetSpec::generated(kind, 500, (0.0, 100.0), seed)).unwrap()
}

const DISTRIBUTIONS: [DatasetKind; 3] = [
    DatasetKind::Mog,
    DatasetKind::Uniform,
    DatasetKind::Gaussian,
];

fn dense_basis(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(v.len(), v.len(), |i, j| match j {
        j if j > i => 0.0,
        0 => v[0],
        j => v[j] - v[j - 1],
    })
}

#[test]
fn criterion_01_lossless_identity() {
    report(1, "lossless identity at lambda1 = 0 and l = m", || {
        let mut rng = seeded(101);
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for case in 0..100 {
            let n = rng.random_range(1..=500);
            let w: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        rng.random_range(0..4) as f64
                    } else {
                        rng.random_range(-1e3..1e3)
                    }
                })
                .collect();
            let m = extract_distinct(&w).unwrap().len();
            let requests = [
                QuantizeRequest::new(Method::L1Refit).with_lambda1(0.0),
                QuantizeRequest::new(Method::L0).with_target(m),
                QuantizeRequest::new(Method::ClusterLs)
                    .with_target(m)
                    .with_seed(case),
                QuantizeRequest::new(Method::Kmeans)
                    .with_target(m)
                    .with_seed(case),
            ];
            for req in requests {
                let q = quantize(&w, &req).map_err(|e| format!("{}: {e}", req.method))?;
                let loss = l2_loss(&w, &q.data).unwrap();
                worst = worst.max(loss);
                check(loss <= 1e-18, || {
                    format!("{} on case {case} (n={n}): loss {loss:e}", req.method)
                })?;
            }
        }
        let elapsed = start.elapsed();
        check(elapsed < Duration::from_secs(5), || {
            format!("took {elapsed:?}, limit 5s")
        })?;
        Ok(format!("400 runs, worst loss {worst:e}, {elapsed:.2?}"))
    });
}

#[test]
fn criterion_02_refit_matches_normal_equations() {
    report(2, "refit equals dense normal-equation solve", || {
        let mut rng = seeded(202);
        let mut worst: f64 = 0.0;
        for case in 0..200 {
            let m = rng.random_range(1..=32);
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..100.0)).collect();
            let d = extract_distinct(&raw).unwrap();
            let v = d.values().to_vec();
            let m = v.len();
            let mut support: Vec<usize> = (0..m).filter(|_| rng.random_bool(0.4)).collect();
            if support.is_empty() {
                support.push(rng.random_range(0..m));
            }
            let coef = post_ls_refit(&StepBasis::from_base_values(v.clone()), &v, &support)
                .map_err(|e| format!("case {case}: {e}"))?;

            let ns = dense_basis(&v).select_columns(&support);
            let rhs = ns.transpose() * DVector::from_column_slice(&v);
            let a = (ns.transpose() * &ns)
                .lu()
                .solve(&rhs)
                .ok_or_else(|| format!("case {case}: singular normal equations"))?;
            for (k, &j) in support.iter().enumerate() {
                let err = (coef.alpha[j] - a[k]).abs();
                worst = worst.max(err);
                check(err <= 1e-9, || {
                    format!(
                        "case {case}, coefficient {j}: {} vs {} (m={m})",
                        coef.alpha[j], a[k]
                    )
                })?;
            }
            for j in (0..m).filter(|j| !support.contains(j)) {
                check(coef.alpha[j] == 0.0, || {
                    format!("case {case}: off-support coefficient {j}")
                })?;
            }
        }
        Ok(format!("200 instances, worst coefficient error {worst:e}"))
    });
}

/// Cuts before each index whose bit is set; keeps partitions with at most
/// `l` segments. Same summation order as a direct per-value SSE.
fn exhaustive_sse(v: &[f64], l: usize) -> (f64, Vec<usize>) {
    let m = v.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << (m - 1)) {
        if mask.count_ones() as usize >= l {
            continue;
        }
        let mut bounds = vec![0];
        bounds.extend((1..m).filter(|i| mask >> (i - 1) & 1 == 1));
        bounds.push(m);
        let mut sse = 0.0;
        for seg in bounds.windows(2) {
            let xs = &v[seg[0]..seg[1]];
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            for x in xs {
                sse += (x - mean) * (x - mean);
            }
        }
        if sse < best.0 {
            best = (sse, bounds);
        }
    }
    best
}

#[test]
fn criterion_03_dp_is_globally_optimal() {
    report(3, "L0 dynamic program matches exhaustive search", || {
        let mut rng = seeded(303);
        let mut cases = 0;
        for m in 1..=14usize {
            for l in 1..=m.min(4) {
                for inst in 0..50u64 {
                    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..100.0)).collect();
                    let d = extract_distinct(&raw).unwrap();
                    let v = d.values();
                    if v.len() < l {
                        continue;
                    }
                    let dp = solve_l0_dp(v, l, None).unwrap();
                    let (oracle, bounds) = exhaustive_sse(v, l);
                    check(dp.sse == oracle, || {
                        format!(
                            "m={m} l={l}: dp {} ({:?}) vs exhaustive {oracle} ({bounds:?})",
                            dp.sse, dp.boundaries
                        )
                    })?;
                    let mut methods = vec![
                        Method::L0,
                        Method::ClusterLs,
                        Method::Kmeans,
                        Method::L1Iterative,
                    ];
                    if l >= 2 {
                        methods.push(Method::Uniform);
                    }
                    for method in methods {
                        let req = QuantizeRequest::new(method).with_target(l).with_seed(inst);
                        let q = quantize(&raw, &req)
                            .map_err(|e| format!("{method} m={m} l={l}: {e}"))?;
                        let loss = l2_loss_distinct(&raw, &q.data).unwrap();
                        check(dp.sse <= loss + 1e-9, || {
                            format!("{method} m={m} l={l}: loss {loss} below dp {}", dp.sse)
                        })?;
                    }
                    cases += 1;
                }
            }
        }
        Ok(format!("{cases} (m, l, instance) cases"))
    });
}

#[test]
fn criterion_04_cluster_ls_equals_cluster_means() {
    report(4, "cluster least squares equals per-cluster means", || {
        let mut rng = seeded(404);
        let mut worst: f64 = 0.0;
        for seed in 0..100u64 {
            let n = rng.random_range(10..300);
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
            let d = extract_distinct(&w).unwrap();
            let l = rng.random_range(1..=d.len().min(16));
            let opts = ClusterOptions {
                seed,
                ..ClusterOptions::default()
            };
            let q = sparsevq::quantize_cluster_ls(&w, l, &opts, None).map_err(|e| e.to_string())?;
            let a = kmeans_1d(d.values(), l, seed, opts.restarts).unwrap();
            let mut sums = vec![0.0; l];
            let mut counts = vec![0usize; l];
            for (i, &c) in a.labels.iter().enumerate() {
                sums[c] += d.values()[i];
                counts[c] += 1;
            }
            let qd = d.gather(&q.data).unwrap();
            for (i, &c) in a.labels.iter().enumerate() {
                let err = (qd[i] - sums[c] / counts[c] as f64).abs();
                worst = worst.max(err);
                check(err <= 1e-9, || {
                    format!("seed {seed}: value {i} off by {err:e}")
                })?;
            }
        }
        Ok(format!("100 instances, worst deviation {worst:e}"))
    });
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

#[test]
fn criterion_05_negative_l2_sparsity_pressure() {
    report(5, "negative L2 term never loosens sparsity", || {
        let w = seeded_dataset(DatasetKind::Mog, 505);
        let d = extract_distinct(&w).unwrap();
        let b = build_step_basis(&d);
        let t = d.values();
        let lambda_max = 2.0
            * b.transpose_apply(t)
                .unwrap()
                .iter()
                .fold(0.0f64, |a, g| a.max(g.abs()));
        let grid = sparsevq::quantize::log_grid(lambda_max * 1e-5, lambda_max * 0.5, 20).unwrap();
        let lambda2 = 0.5 * max_lambda2(&b);
        let norms = b.column_norms_sq();

        let mut holds = 0;
        let mut detail = Vec::new();
        for &l1 in &grid {
            let cfg = SolverConfig::default().with_lambda1(l1);
            let (plain, _) = lasso_cd(&b, t, &cfg, None).map_err(|e| e.to_string())?;
            let (pressured, _) = lasso_neg_l2_cd(&b, t, &cfg.with_lambda2(lambda2), None)
                .map_err(|e| format!("lambda1 {l1}: {e}"))?;
            if pressured.support.len() <= plain.support.len() {
                holds += 1;
            }
            detail.push(format!(
                "{}/{}",
                pressured.support.len(),
                plain.support.len()
            ));
            for &k in &pressured.support {
                // lambda1/(c - 2 lambda2) > lambda1/c, compared as rationals.
                let c = exact(norms[k]);
                let lhs = exact(l1) / (c.clone() - exact(2.0) * exact(lambda2));
                let rhs = exact(l1) / c;
                check(lhs > rhs, || {
                    format!("threshold inequality fails at column {k}, lambda1 {l1}")
                })?;
            }
        }
        let frac = holds as f64 / grid.len() as f64;
        check(frac >= 0.8, || {
            format!("support shrank or held on {holds}/20 grid points")
        })?;
        Ok(format!(
            "lambda2={lambda2:e}, support(l2>0)/support(l2=0) per grid point: {}; holds on {holds}/20",
            detail.join(" ")
        ))
    });
}

#[test]
fn criterion_06_iterative_terminates() {
    report(
        6,
        "iterative L1 reaches the target size within 200 rounds",
        || {
            let mut out = Vec::new();
            for kind in DISTRIBUTIONS {
                let w = seeded_dataset(kind, 606);
                for l in [4, 8, 16] {
                    let req = QuantizeRequest::new(Method::L1Iterative).with_target(l);
                    let q = quantize(&w, &req).map_err(|e| format!("{kind:?} l={l}: {e}"))?;
                    let support = q.params["support"] as usize;
                    let rounds = q.params["rounds"] as usize;
                    check(
                        support <= l && q.distinct_count <= l && rounds <= 200,
                        || {
                            format!(
                                "{kind:?} l={l}: support {support}, levels {}, rounds {rounds}",
                                q.distinct_count
                            )
                        },
                    )?;
                    out.push(format!(
                        "{kind:?}/{l}: {} levels in {rounds} rounds",
                        q.distinct_count
                    ));
                }
            }
            Ok(out.join(", "))
        },
    );
}

#[test]
fn criterion_07_loss_competitiveness() {
    report(
        7,
        "iterative L1 within 2x of k-means; cluster LS never worse",
        || {
            let start = Instant::now();
            let mut failures = Vec::new();
            let mut ratios = Vec::new();
            for kind in DISTRIBUTIONS {
                let w = seeded_dataset(kind, 707);
                for l in [4, 8, 16, 32, 64] {
                    let km = quantize(
                        &w,
                        &QuantizeRequest::new(Method::Kmeans)
                            .with_target(l)
                            .with_seed(7),
                    )
                    .map_err(|e| e.to_string())?;
                    let cls = quantize(
                        &w,
                        &QuantizeRequest::new(Method::ClusterLs)
                            .with_target(l)
                            .with_seed(7),
                    )
                    .map_err(|e| e.to_string())?;
                    let it = quantize(
                        &w,
                        &QuantizeRequest::new(Method::L1Iterative).with_target(l),
                    )
                    .map_err(|e| format!("{kind:?} l={l}: {e}"))?;
                    let (lk, lc, li) = (
                        l2_loss(&w, &km.data).unwrap(),
                        l2_loss(&w, &cls.data).unwrap(),
                        l2_loss(&w, &it.data).unwrap(),
                    );
                    let ratio = li / lk;
                    ratios.push(format!("{kind:?}/{l}={ratio:.2}"));
                    if ratio > 2.0 {
                        failures.push(format!(
                            "{kind:?} l={l}: iterative {li:.1} vs kmeans {lk:.1} ({ratio:.2}x)"
                        ));
                    }
                    if lc > lk + 1e-9 {
                        failures.push(format!("{kind:?} l={l}: cluster_ls {lc} > kmeans {lk}"));
                    }
                }
            }
            let elapsed = start.elapsed();
            if elapsed > Duration::from_secs(60) {
                failures.push(format!("took {elapsed:?}, limit 60s"));
            }
            let summary = format!("loss ratios {}", ratios.join(" "));
            if failures.is_empty() {
                Ok(summary)
            } else {
                Err(format!("{}; {summary}", failures.join("; ")))
            }
        },
    );
}

fn median_time(mut f: impl FnMut(), reps: usize) -> f64 {
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[reps / 2]
}

#[test]
fn criterion_08_runtime_scaling() {
    report(
        8,
        "k-means cost grows with l, a lasso solve does not",
        || {
            let w = generate(&DatasetSpec::generated(
                DatasetKind::Uniform,
                2000,
                (0.0, 100.0),
                808,
            ))
            .unwrap();
            let d = extract_distinct(&w).unwrap();
            check(d.len() == 2000, || {
                format!("expected 2000 distinct values, got {}", d.len())
            })?;
            let opts = ClusterOptions::default();
            let t4 = median_time(
                || drop(sparsevq::quantize_kmeans(&w, 4, &opts, None).unwrap()),
                5,
            );
            let t128 = median_time(
                || drop(sparsevq::quantize_kmeans(&w, 128, &opts, None).unwrap()),
                5,
            );
            let km_ratio = t128 / t4;

            // For each size, the first lambda1 on a doubling ladder whose solve
            // has at most that many levels.
            let b = build_step_basis(&d);
            let t = d.values();
            let lambda_max = 2.0
                * b.transpose_apply(t)
                    .unwrap()
                    .iter()
                    .fold(0.0f64, |a, g| a.max(g.abs()));
            let mut grid = Vec::new();
            let mut lambda = lambda_max * 1e-9;
            for l in [4usize, 8, 16, 32, 64, 128].into_iter().rev() {
                loop {
                    let q = sparsevq::quantize_l1(
                        &w,
                        &SolverConfig::default().with_lambda1(lambda),
                        false,
                        None,
                    )
                    .unwrap();
                    if q.distinct_count <= l {
                        break;
                    }
                    lambda *= 2.0;
                }
                grid.push((l, lambda));
            }
            let lasso_times: Vec<f64> = grid
                .iter()
                .map(|&(_, l1)| {
                    let cfg = SolverConfig::default().with_lambda1(l1);
                    median_time(|| drop(lasso_cd(&b, t, &cfg, None).unwrap()), 3)
                })
                .collect();
            let max = lasso_times.iter().copied().fold(0.0, f64::max);
            let min = lasso_times.iter().copied().fold(f64::INFINITY, f64::min);
            let lasso_ratio = max / min;
            let timings: Vec<String> = grid
                .iter()
                .zip(&lasso_times)
                .map(|((l, l1), s)| format!("l={l}/lambda1={l1:.3e}:{:.2}ms", s * 1e3))
                .collect();
            let summary = format!(
            "kmeans t(128)/t(4) = {km_ratio:.1} (need >= 4); lasso max/min = {lasso_ratio:.1} (need < 3) [{}]",
            timings.join(", ")
        );
            check(km_ratio >= 4.0 && lasso_ratio < 3.0, || summary.clone())?;
            Ok(summary)
        },
    );
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsevq"))
}

fn digit_image() -> ImageBuffer {
    // A soft ring on a dark background, 28 x 28, 8-bit.
    let (w, h) = (28, 28);
    let mut px = Vec::with_capacity(w * h);
    let mut rng = seeded(909);
    for y in 0..h {
        for x in 0..w {
            let r = ((x as f64 - 13.5).powi(2) + (y as f64 - 13.5).powi(2)).sqrt();
            let ring = (-(r - 8.0).powi(2) / 6.0).exp();
            let noise: f64 = rng.random_range(0.0..0.08);
            let level = ((ring + noise).min(1.0) * 255.0).round();
            px.push(level / 255.0);
        }
    }
    ImageBuffer::new(w, h, px, 255).unwrap()
}

#[test]
fn criterion_09_clamp_containment() {
    report(
        9,
        "image outputs stay in [0, 1]; clamping is idempotent",
        || {
            let dir = tempfile::tempdir().unwrap();
            let input = dir.path().join("digit.pgm");
            std::fs::write(
                &input,
                encode_pgm(&digit_image(), PgmEncoding::Binary).unwrap(),
            )
            .unwrap();
            let runs: Vec<(&str, Vec<&str>, Option<usize>)> = vec![
                ("cluster_ls", vec!["--l", "4"], Some(4)),
                ("kmeans", vec!["--l", "4"], Some(4)),
                ("l0", vec!["--l", "3"], Some(3)),
                ("uniform", vec!["--l", "5"], Some(5)),
                ("l1_iterative", vec!["--l", "6"], Some(6)),
                ("l1", vec!["--lambda1", "0.5", "--refit"], None),
                ("l1", vec!["--lambda1", "2"], None),
            ];
            let mut checked = 0;
            for (i, (method, extra, max_levels)) in runs.iter().enumerate() {
                for ascii in [false, true] {
                    let out = dir.path().join(format!("out{i}{ascii}.pgm"));
                    let mut cmd = bin();
                    cmd.arg("image")
                        .arg(&input)
                        .arg(&out)
                        .args(["--method", method])
                        .args(extra);
                    if ascii {
                        cmd.arg("--ascii");
                    }
                    let res = cmd.output().unwrap();
                    check(res.status.success(), || {
                        format!(
                            "{method}: exit {:?}: {}",
                            res.status,
                            String::from_utf8_lossy(&res.stderr)
                        )
                    })?;
                    let img = parse_pgm(&std::fs::read(&out).unwrap())
                        .map_err(|e| format!("{method}: {e}"))?;
                    check(img.width == 28 && img.height == 28, || {
                        format!("{method}: wrong geometry")
                    })?;
                    check(img.pixels.iter().all(|p| (0.0..=1.0).contains(p)), || {
                        format!("{method}: pixel out of range")
                    })?;
                    if let Some(l) = max_levels {
                        let levels = extract_distinct(&img.pixels).unwrap().len();
                        check(levels <= *l, || format!("{method}: {levels} levels > {l}"))?;
                    }
                    checked += 1;
                }
            }

            let mut rng = seeded(910);
            for _ in 0..100_000 {
                let x: f64 = rng.random_range(-1e6..1e6);
                let a: f64 = rng.random_range(-100.0..100.0);
                let b = a + rng.random_range(1e-9..100.0);
                let h = hard_sigmoid(x, a, b).unwrap();
                check(
                    a <= h && h <= b && hard_sigmoid(h, a, b).unwrap() == h,
                    || format!("H not idempotent/contained at x={x}, a={a}, b={b}"),
                )?;
            }
            Ok(format!(
                "{checked} image runs well-formed; 1e5 clamp checks"
            ))
        },
    );
}

fn redacted_csv(text: &str) -> String {
    let mut lines = text.lines();
    let mut out = Vec::new();
    out.extend(lines.by_ref().take(2).map(str::to_string));
    for line in lines {
        let mut fields: Vec<&str> = line.split(',').collect();
        if fields.len() >= 11 {
            fields[9] = "";
            fields[10] = "";
        }
        out.push(fields.join(","));
    }
    out.join("\n")
}

fn run_bench_cli(dir: &Path, config: &Path) -> Result<(String, String), String> {
    let res = bin()
        .current_dir(dir)
        .args(["bench", "--config"])
        .arg(config)
        .args(["--json", "report.jsonl", "--csv", "report.csv"])
        .output()
        .unwrap();
    check(res.status.success(), || {
        String::from_utf8_lossy(&res.stderr).into_owned()
    })?;
    let json = std::fs::read_to_string(dir.join("report.jsonl")).unwrap();
    let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    let report = BenchReport::from_json_lines(&json).map_err(|e| e.to_string())?;
    Ok((
        report.redact_timing().to_json_lines().unwrap(),
        redacted_csv(&csv),
    ))
}

#[test]
fn criterion_10_bench_determinism() {
    report(
        10,
        "bench reports are reproducible apart from timings",
        || {
            let dir = tempfile::tempdir().unwrap();
            let config = dir.path().join("sweep.json");
            let spec = serde_json::json!({
                "datasets": [
                    {"kind": "mog", "n": 200, "seed": 1},
                    {"kind": "uniform", "n": 200, "seed": 2},
                    {"kind": "gaussian", "n": 200, "seed": 3},
                ],
                "methods": ["kmeans", "cluster_ls", "l0", "l1_iterative", "uniform", "l1_refit", "l1_l2"],
                "sizes": [4, 8, 16, 32, 64],
                "lambdas": [10.0, 1000.0],
                "seeds": [11, 12],
            });
            std::fs::write(&config, spec.to_string()).unwrap();
            let (json_a, csv_a) = run_bench_cli(dir.path(), &config)?;
            let (json_b, csv_b) = run_bench_cli(dir.path(), &config)?;
            check(json_a == json_b, || "JSON reports differ".into())?;
            check(csv_a == csv_b, || "CSV reports differ".into())?;
            let rows = json_a.lines().count() - 1;
            check(rows == 3 * (5 * 5 * 2 + 2 * 2 * 2), || {
                format!("unexpected row count {rows}")
            })?;
            Ok(format!("{rows} rows identical across two runs"))
        },
    );
}
