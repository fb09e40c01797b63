use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sparsevq::io::{encode_pgm, parse_pgm, read_csv, read_csv_rows};
use sparsevq::{extract_distinct, BenchReport, ImageBuffer, PgmEncoding};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sparsevq"));
    cmd.env_remove("SPARSEVQ_SEED");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen", "--kind", "uniform", "--n", "500", "--range", "0,100", "--seed", "7",
    ];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run(bin().args(args).arg("-o").arg(&a));
    run(bin().args(args).arg("-o").arg(&b));
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(a, b);
    let values = read_csv(dir.path().join("a.csv"), false).unwrap();
    assert_eq!(values.len(), 500);
    assert!(values.iter().all(|x| (0.0..=100.0).contains(x)));
}

#[test]
fn gen_seed_comes_from_env_unless_flag_given() {
    let plain = run(bin()
        .args(["gen", "--kind", "mog", "--n", "20"])
        .env("SPARSEVQ_SEED", "5"))
    .stdout;
    let flag = run(bin().args(["gen", "--kind", "mog", "--n", "20", "--seed", "5"])).stdout;
    let other = run(bin()
        .args(["gen", "--kind", "mog", "--n", "20", "--seed", "6"])
        .env("SPARSEVQ_SEED", "5"))
    .stdout;
    assert_eq!(plain, flag);
    assert_ne!(plain, other);
}

#[test]
fn gen_custom_mixture() {
    let out = run(bin().args([
        "gen",
        "--kind",
        "mog",
        "--n",
        "50",
        "--component",
        "0.5:10:1",
        "--component",
        "0.5:90:1",
    ]))
    .stdout;
    let rows = sparsevq::io::parse_csv(std::str::from_utf8(&out).unwrap(), false).unwrap();
    assert_eq!(rows.len(), 50);
    assert!(rows
        .iter()
        .all(|r| (r[0] - 10.0).abs() < 6.0 || (r[0] - 90.0).abs() < 6.0));
}

#[test]
fn quantize_l0_with_one_level_is_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", "1\n2\n2\n9\n");
    let out = dir.path().join("out.csv");
    let res = run(bin()
        .args(["quantize", "--method", "l0", "--l", "1"])
        .arg(&input)
        .arg("-o")
        .arg(&out));
    // Mean of the distinct values 1, 2, 9.
    assert_eq!(read_csv(&out, false).unwrap(), vec![4.0; 4]);
    let summary = String::from_utf8(res.stdout).unwrap();
    assert!(
        summary.contains("method=l0") && summary.contains("distinct_out=1"),
        "{summary}"
    );
}

#[test]
fn quantize_preserves_matrix_shape() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.csv", "w0,w1,w2\n1,2,3\n10,11,12\n");
    let out = dir.path().join("q.csv");
    run(bin()
        .args([
            "quantize", "--method", "kmeans", "--l", "2", "--header", "--seed", "3",
        ])
        .arg(&input)
        .arg("-o")
        .arg(&out));
    assert_eq!(
        read_csv_rows(&out, false).unwrap(),
        vec![vec![2.0; 3], vec![11.0; 3]]
    );
}

#[test]
fn quantize_to_stdout_with_clamp_and_refit() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", "-5,0.5,3,7");
    let res = run(bin()
        .args([
            "quantize",
            "--method",
            "l1",
            "--refit",
            "--lambda1",
            "0",
            "--clamp",
            "0,1",
        ])
        .arg(&input));
    let rows = sparsevq::io::parse_csv(std::str::from_utf8(&res.stdout).unwrap(), false).unwrap();
    assert_eq!(rows, vec![vec![0.0, 0.5, 1.0, 1.0]]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("method=l1_refit"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", "1\n2\n3\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["quantize", "--method", "kmeans"],
        vec!["quantize", "--method", "l1"],
        vec!["quantize", "--method", "l0", "--l", "9"],
        vec!["quantize", "--method", "nope", "--l", "2"],
        vec!["quantize", "--method", "l0", "--l", "2", "--bogus"],
    ];
    for args in cases {
        let out = bin().args(&args).arg(&input).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = bin()
        .args(["quantize", "--method", "l0", "--l", "1"])
        .arg(dir.path().join("missing.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
}

#[test]
fn bad_csv_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "bad.csv", "1\n2,abc\n");
    let out = bin()
        .args(["quantize", "--method", "l0", "--l", "1"])
        .arg(&input)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn image_quantization_writes_valid_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let pixels: Vec<f64> = (0..64).map(|i| ((i * 37) % 256) as f64 / 255.0).collect();
    let img = ImageBuffer::new(8, 8, pixels, 255).unwrap();
    let input = dir.path().join("digit.pgm");
    fs::write(&input, encode_pgm(&img, PgmEncoding::Ascii).unwrap()).unwrap();
    let out = dir.path().join("out.pgm");
    let res = run(bin().args(["image"]).arg(&input).arg(&out).args([
        "--method",
        "cluster_ls",
        "--l",
        "4",
    ]));
    let q = parse_pgm(&fs::read(&out).unwrap()).unwrap();
    assert_eq!((q.width, q.height, q.max_val), (8, 8, 255));
    assert!(q.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
    assert!(extract_distinct(&q.pixels).unwrap().len() <= 4);
    let line = String::from_utf8(res.stdout).unwrap();
    assert!(
        line.contains("loss_full=") && line.contains("loss_stored="),
        "{line}"
    );
}

#[test]
fn image_rejects_color_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.ppm", "P3 1 1 255 0 0 0\n");
    let out = bin()
        .arg("image")
        .arg(&input)
        .arg(dir.path().join("o.pgm"))
        .args(["--method", "l0", "--l", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grayscale only"));
    assert!(!dir.path().join("o.pgm").exists());
}

#[test]
fn oracle_prints_agreeing_solutions() {
    let out = run(bin().args(["oracle", "--values", "1,2,10,11", "--l", "2"])).stdout;
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["agree"], true);
    assert_eq!(v["dp"]["sse"], 1.0);
    assert_eq!(v["dp"]["levels"], serde_json::json!([1.5, 10.5]));
}

#[test]
fn bench_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "sweep.json",
        r#"{"datasets": [{"kind": "uniform", "n": 50, "seed": 4, "label": "u"}],
            "methods": ["l1_refit", "kmeans", "uniform"],
            "sizes": [1, 3], "lambdas": [0.0]}"#,
    );
    let json = dir.path().join("r.jsonl");
    let csv = dir.path().join("r.csv");
    run(bin()
        .args(["bench", "--config"])
        .arg(&config)
        .arg("--json")
        .arg(&json)
        .arg("--csv")
        .arg(&csv)
        .env("SPARSEVQ_SEED", "9"));
    let report = BenchReport::from_json_lines(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.metadata.schema_version, 1);
    assert_eq!(report.metadata.seed, 9);
    assert!(report.metadata.command_line.iter().any(|a| a == "bench"));
    assert_eq!(report.rows.len(), 5);
    assert!(report.rows.iter().all(|r| r.seed == 9 && r.dataset == "u"));
    let refit = &report.rows[0];
    assert_eq!(refit.loss_full, Some(0.0));
    // uniform with l = 1 is an error row, not an aborted run
    let bad = report.rows.iter().find(|r| r.error.is_some()).unwrap();
    assert_eq!((bad.method.as_str(), bad.l), ("uniform", Some(1)));
    let csv_text = fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("# schema_version=1\ndataset,method,l,"));
    assert_eq!(csv_text.lines().count(), 2 + 5);
}

#[test]
fn bench_rejects_malformed_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.json", r#"{"methods": ["l9"]}"#);
    let out = bin()
        .args(["bench", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
