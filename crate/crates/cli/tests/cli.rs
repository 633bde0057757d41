use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn wrisk_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrisk"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().expect("UTF-8 temp path")
}

/// Data rows of an output file, split on commas.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = wrisk(&["gaussian", "--bogus", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&wrisk(&["repro", "fig-nothing"])), 2);
}

#[test]
fn unreadable_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = wrisk(&[
        "gaussian",
        "--mu",
        "/no/such/file",
        "--sigma",
        "/no/such/file",
        "--A",
        "/x",
        "--method",
        "kl",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn infeasible_multiplier_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write(dir.path(), "mu.csv", "0,0\n");
    let sigma = write(dir.path(), "sigma.csv", "1,0\n0,1\n");
    let a = write(dir.path(), "a.csv", "2,0\n0,1\n");
    let out = dir.path().join("o.csv");
    // B - beta A = I - 0.6 diag(2, 1) is indefinite
    let o = wrisk(&[
        "gaussian",
        "--mu",
        &mu,
        "--sigma",
        &sigma,
        "--A",
        &a,
        "--method",
        "w",
        "--alpha",
        "0.1",
        "--beta",
        "0.6",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn density_method_must_be_unambiguous() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let o = wrisk(&[
        "density",
        "--ref",
        "dirac:0",
        "--alpha",
        "0.1",
        "--theta",
        "1",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn dirac_reference_gives_the_shifted_normal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let o = wrisk(&[
        "density",
        "--ref",
        "dirac:0.05",
        "--loss",
        "linear",
        "--alpha",
        "0.1",
        "--beta",
        "0.2",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().contains("manifest sha256:"));
    let pts: Vec<(f64, f64)> = rows(&out)
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let dx = pts[1].0 - pts[0].0;
    let mass: f64 = pts.iter().map(|(_, q)| q * dx).sum();
    let mean: f64 = pts.iter().map(|(x, q)| x * q * dx).sum::<f64>() / mass;
    let var: f64 = pts
        .iter()
        .map(|(x, q)| (x - mean).powi(2) * q * dx)
        .sum::<f64>()
        / mass;
    assert!((mean - 0.15).abs() < 1e-9, "mean {mean}");
    assert!((var - 0.01).abs() < 1e-6, "variance {var}");
}

#[test]
fn nominal_frontier_has_constant_sharpe() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write(dir.path(), "mu.csv", "0.65,-0.1\n");
    let sigma = write(dir.path(), "sigma.csv", "1,0.5\n0.5,1\n");
    let out = dir.path().join("f.csv");
    let o = wrisk(&[
        "frontier",
        "--mu",
        &mu,
        "--sigma",
        &sigma,
        "--method",
        "nominal",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&out);
    assert_eq!(r.len(), 19);
    let s0: f64 = r[0][3].parse().unwrap();
    for row in &r {
        assert!((row[3].parse::<f64>().unwrap() - s0).abs() < 1e-10);
    }
}

#[test]
fn discrete_rating_example() {
    let dir = tempfile::tempdir().unwrap();
    let pf = write(dir.path(), "p.csv", "A+,A-,BBB+\n0.25,0.5,0.25\n");
    let qf = write(dir.path(), "q.csv", "A+,A-,BBB+\n0.2,0.5,0.3\n");
    let cost = write(dir.path(), "d.csv", "0,2,3\n2,0,1\n3,1,0\n");
    let loss = write(dir.path(), "v.csv", "BBB+,A-,A+\n3,1,0\n");
    let out = dir.path().join("d.out");
    let o = wrisk(&[
        "discrete",
        "--p",
        &pf,
        "--q",
        &qf,
        "--cost",
        &cost,
        "--alpha",
        "0.5",
        "--beta",
        "1",
        "--loss",
        &loss,
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let value = |name: &str| -> f64 {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("{name},")))
            .unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((value("relative_entropy") - 0.010_067_5).abs() < 1e-6);
    assert!((value("wasserstein") - 0.15).abs() < 1e-12);
    assert!(value("expected_loss_worst_case") > value("expected_loss_reference"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.cfg",
        "# desk run\nseed = 4\nn-hedge = 10,20\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = [
        "hedge",
        "--method",
        "nominal",
        "--n-paths",
        "40",
        "--n-steps",
        "20",
    ];
    let mut args = common.to_vec();
    args.extend([
        "--seed",
        "3",
        "--n-hedge",
        "5",
        "--config",
        &cfg,
        "--out",
        p(&a),
    ]);
    assert_eq!(code(&wrisk(&args)), 0);
    let mut args = common.to_vec();
    args.extend(["--seed", "4", "--n-hedge", "10,20", "--out", p(&b)]);
    assert_eq!(code(&wrisk(&args)), 0);
    assert_eq!(rows(&a), rows(&b));
    assert_eq!(rows(&a).len(), 2);
    let manifest = fs::read_to_string(dir.path().join("a.csv.manifest")).unwrap();
    assert!(manifest.contains("seed = 4\n"), "{manifest}");
    assert!(!manifest.contains("config"));
}

#[test]
fn manifest_reruns_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let mu = write(dir.path(), "mu.csv", "0.2,-0.1\n");
    let sigma = write(dir.path(), "sigma.csv", "1,1\n1,1\n");
    let a = write(dir.path(), "a.csv", "1,0\n0,1\n");
    let out = dir.path().join("g.csv");
    let o = wrisk(&[
        "gaussian",
        "--mu",
        &mu,
        "--sigma",
        &sigma,
        "--A",
        &a,
        "--method",
        "w",
        "--alpha",
        "0.5",
        "--beta",
        "0.3",
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let first = fs::read(&out).unwrap();
    let manifest = dir.path().join("g.csv.manifest");
    let saved = dir.path().join("saved.manifest");
    fs::copy(&manifest, &saved).unwrap();
    fs::remove_file(&out).unwrap();
    assert_eq!(code(&wrisk(&["gaussian", "--config", p(&saved)])), 0);
    assert_eq!(fs::read(&out).unwrap(), first);
    assert_eq!(fs::read(&manifest).unwrap(), fs::read(&saved).unwrap());
    // a manifest for another subcommand is refused
    assert_eq!(code(&wrisk(&["density", "--config", p(&saved)])), 2);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let four = dir.path().join("four.csv");
    let args = |out: &Path| {
        vec![
            "density".to_string(),
            "--ref".into(),
            "normal:0,1".into(),
            "--loss".into(),
            "quadratic:0.5".into(),
            "--alpha".into(),
            "0.3".into(),
            "--beta".into(),
            "0.4".into(),
            "--grid".into(),
            "-8,8,801".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let a1 = args(&one);
    let a4 = args(&four);
    let r1 = wrisk_env(
        &a1.iter().map(String::as_str).collect::<Vec<_>>(),
        "WRISK_THREADS",
        "1",
    );
    let r4 = wrisk_env(
        &a4.iter().map(String::as_str).collect::<Vec<_>>(),
        "WRISK_THREADS",
        "4",
    );
    assert_eq!(code(&r1), 0, "{}", String::from_utf8_lossy(&r1.stderr));
    assert_eq!(code(&r4), 0);
    assert_eq!(rows(&one), rows(&four));
    assert_eq!(
        code(&wrisk_env(
            &a1.iter().map(String::as_str).collect::<Vec<_>>(),
            "WRISK_THREADS",
            "0"
        )),
        2
    );
}

#[test]
fn golden_mismatch_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden");
    let out = dir.path().join("out");
    assert_eq!(
        code(&wrisk(&["repro", "fig-eigen", "--out-dir", p(&golden)])),
        0
    );
    assert_eq!(
        code(&wrisk(&[
            "repro",
            "fig-eigen",
            "--out-dir",
            p(&out),
            "--check",
            p(&golden)
        ])),
        0
    );
    let csv = golden.join("fig-eigen.csv");
    let text = fs::read_to_string(&csv).unwrap().replacen('1', "2", 1);
    fs::write(&csv, text).unwrap();
    let o = wrisk(&[
        "repro",
        "fig-eigen",
        "--out-dir",
        p(&out),
        "--check",
        p(&golden),
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig-eigen.csv"));
}
