use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bosebridge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn bosebridge")
}

fn data_lines(out: &Output) -> Vec<String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn meta(out: &Output, key: &str) -> Option<f64> {
    let prefix = format!("# {key} = ");
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .find_map(|l| l.strip_prefix(&prefix).map(|v| v.parse().unwrap()))
}

#[test]
fn sweep_is_deterministic() {
    let args = ["sweep", "--steps", "5"];
    let a = run(&args);
    let b = bin()
        .args(args)
        .env("BOSEBRIDGE_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_columns() {
    let out = run(&["sweep", "--jx-min", "10", "--jx-max", "20", "--steps", "3"]);
    assert!(out.status.success());
    let lines = data_lines(&out);
    assert_eq!(
        lines[0],
        "jx,delta_analytic,delta_numeric,log10_delta,balanced"
    );
    assert_eq!(lines.len(), 4);
    let mid: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(mid[4], "1");
    let analytic: f64 = mid[1].parse().unwrap();
    assert!((analytic - 3.5236e-3).abs() < 1e-6);
    let log: f64 = mid[3].parse().unwrap();
    let numeric: f64 = mid[2].parse().unwrap();
    assert!((log - numeric.log10()).abs() < 1e-12);
    // analytic column only at the balance point
    assert_eq!(lines[1].split(',').nth(1), Some(""));
}

#[test]
fn sweep_numeric_only_leaves_analytic_blank() {
    let out = run(&["sweep", "--steps", "3", "--numeric-only"]);
    assert!(out.status.success());
    for line in &data_lines(&out)[1..] {
        assert_eq!(line.split(',').nth(1), Some(""));
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let out = run(&["precision", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("delta_homodyne_optimal,"));
}

#[test]
fn balance_recovers_hidden_coupling() {
    let out = run(&["balance"]);
    assert!(out.status.success());
    let jx = meta(&out, "jx_estimate").unwrap();
    assert!((jx - 15.0).abs() < 0.1, "{jx}");
}

#[test]
fn balance_symmetric_on_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sym.toml");
    fs::write(
        &path,
        "omega2 = 100.0\nomega3 = 100.0\nj1 = 10.0\nj2 = 10.0\nj3 = 10.0\njx = 8.0\nkappa1 = 10.0\nkappa4 = 10.0\n",
    )
    .unwrap();
    let out = run(&[
        "--config",
        path.to_str().unwrap(),
        "balance",
        "--j3-min",
        "5",
        "--j3-max",
        "11",
        "--steps",
        "13",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let jx = meta(&out, "jx_estimate").unwrap();
    assert!((jx - 8.0).abs() < 1e-6, "{jx}");
}

#[test]
fn inconclusive_balance_exits_2() {
    let out = run(&["balance", "--j3-min", "5", "--j3-max", "9", "--steps", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "j1 = 1.0\nbogus = 2.0\n").unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "compare"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["sweep", "--nope"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--alpha", "-1", "precision"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn precision_requires_balance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("off.toml");
    let cfg = bosebridge::BridgeConfig::reference().with_jx(14.0);
    fs::write(&path, cfg.to_toml_string(None)).unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "precision"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_alpha_is_used_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.toml");
    fs::write(
        &path,
        bosebridge::BridgeConfig::reference().to_toml_string(Some(100.0)),
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let a = run(&["--config", p, "precision"]);
    let b = run(&["--config", p, "--alpha", "10000", "precision"]);
    let value = |o: &Output| -> f64 {
        data_lines(o)
            .iter()
            .find_map(|l| {
                l.strip_prefix("delta_homodyne_optimal,")
                    .map(|r| r.split(',').next().unwrap().parse().unwrap())
            })
            .unwrap()
    };
    assert!((value(&a) / value(&b) - 100.0).abs() < 1e-9);
}
