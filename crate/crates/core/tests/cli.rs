use std::path::Path;
use std::process::{Command, Output};

fn sfhe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfhe"))
        .args(args)
        .output()
        .expect("spawn sfhe")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = "\
[model]
alpha = 1.5
hurst = 0.4

[experiment]
kind = supGrowthL
replicates = 24
seed = 5
bootstrap = 50
resolution_check = off

[sweep]
t = 1
L = dyadic(1, 8)
";

#[test]
fn moments_prints_constants() {
    let o = sfhe(&["moments", "--alpha", "1.5", "--hurst", "0.4", "--t", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let get = |k: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{k},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((get("c1H") - 0.140979226499995).abs() < 1e-12);
    assert!((get("c21") - 0.628461311072915).abs() < 1e-12);
    assert!((get("variance") - 0.628461311072915).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(sfhe(&["moments", "--alpha", "1.5", "--hurst", "0.4", "--bogus"]).status.code(), Some(2));
    assert_eq!(sfhe(&["frobnicate"]).status.code(), Some(2));
    // outside the admissible region
    assert_eq!(sfhe(&["moments", "--alpha", "1.5", "--hurst", "0.2"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[experiment]\nkind = supGrowthL\nwibble = 3\n").unwrap();
    let o = sfhe(&["experiment", "run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn numerical_failures_exit_3() {
    // period 1.6 is far too short for the wrap-bias budget
    let o = sfhe(&[
        "sample", "--alpha", "1.5", "--hurst", "0.4", "--t0", "1", "--dx", "0.1", "--nx", "16",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

fn run_to(dir: &Path, cfg: &Path, name: &str, threads: &str) -> Vec<u8> {
    let out = dir.join(name);
    let o = sfhe(&[
        "--threads",
        threads,
        "--out",
        out.to_str().unwrap(),
        "experiment",
        "run",
        cfg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut bytes = std::fs::read(&out).unwrap();
    bytes.extend(std::fs::read(dir.join(name.replace(".csv", ".fits.csv"))).unwrap());
    bytes
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let a = run_to(dir.path(), &cfg, "a.csv", "1");
    let b = run_to(dir.path(), &cfg, "b.csv", "4");
    let c = run_to(dir.path(), &cfg, "c.csv", "4");
    assert_eq!(a, b);
    assert_eq!(b, c);

    let o = sfhe(&["experiment", "report", dir.path().join("a.csv").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("series,points,slope,intercept,r2,inside_bounds"));
    let dat = std::fs::read_to_string(dir.path().join("a.sup.dat")).unwrap();
    assert_eq!(dat.lines().count(), 5);
}

#[test]
fn seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let a = sfhe(&["experiment", "run", cfg.to_str().unwrap()]);
    let b = sfhe(&["--seed", "6", "experiment", "run", cfg.to_str().unwrap()]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn binary_sample_has_header() {
    let o = sfhe(&[
        "--format", "binary", "--seed", "3", "sample", "--alpha", "1.5", "--hurst", "0.4", "--t0", "1",
        "--dx", "0.5", "--nx", "128",
    ]);
    assert!(o.status.success());
    assert_eq!(&o.stdout[..5], b"SFHE1");
    assert_eq!(o.stdout.len(), 32 + 8 * 128);
}

#[test]
fn metrics_row() {
    let o = sfhe(&[
        "metrics", "--alpha", "1.5", "--hurst", "0.4", "--kind", "d1", "--t", "1", "--s", "1", "--y", "1",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,inputs,value,errorBound"));
    assert!(lines.next().unwrap().starts_with("d1,t=1;x=0;s=1;y=1,"));
}
