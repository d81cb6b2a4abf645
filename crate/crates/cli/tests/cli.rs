use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dlstd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlstd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV file with the leading comment lines removed, header first.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn two_state_on_policy_paths_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let o = dlstd(&["two-state", "--gamma", "0.9", "--mode", "on-policy", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let file = dir.path().join("two_state_paths.csv");
    let text = fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("# dlstd two-state gamma=0.9 mode=on-policy"));
    assert!(text.lines().next().unwrap().contains("seed=0"));
    let rows = csv_rows(&file);
    let (d, l, a) = (column(&rows, "dantzig"), column(&rows, "lasso_td"), column(&rows, "dantzig_analytic"));
    assert_eq!(rows.len(), 1 + 61);
    for r in &rows[1..] {
        let dv: f64 = r[d].parse().unwrap();
        let lv: f64 = r[l].parse().unwrap();
        let av: f64 = r[a].parse().unwrap();
        assert!((dv - lv).abs() < 1e-6 && (dv - av).abs() < 1e-6, "{r:?}");
    }
    assert_eq!(rows.last().unwrap()[d].parse::<f64>().unwrap().round(), -5.0);
}

#[test]
fn two_state_off_policy_marks_failures() {
    let dir = tempfile::tempdir().unwrap();
    let o = dlstd(&["two-state", "--gamma", "0.9", "--mode", "off-policy", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("two_state_paths.csv"));
    let (status, lambda) = (column(&rows, "lasso_td_status"), column(&rows, "lambda"));
    for r in &rows[1..] {
        let lam: f64 = r[lambda].parse().unwrap();
        let expected = if lam >= 1.0 { "ok" } else { "failed" };
        assert_eq!(r[status], expected, "lambda {lam}");
    }
    assert!(rows[1..].iter().all(|r| r[column(&rows, "dantzig_status")] == "ok"));

    let dir = tempfile::tempdir().unwrap();
    let o = dlstd(&["two-state", "--gamma", "0.5", "--mode", "off-policy", "--out", path_str(dir.path())]);
    assert!(o.status.success());
    let rows = csv_rows(&dir.path().join("two_state_paths.csv"));
    assert!(rows[1..].iter().all(|r| !r.contains(&"failed".to_string())));
}

#[test]
fn verify_filters_and_reproduces() {
    let o = dlstd(&["verify", "--suite", "prop2", "--trials", "15", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("prop2"));
    assert!(out.contains("15/15 passed"));
    let again = dlstd(&["verify", "--suite", "prop2", "--trials", "15", "--seed", "3"]);
    assert_eq!(stdout(&again), out);
}

#[test]
fn verify_all_suites_write_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = dlstd(&["verify", "--trials", "10", "--out", path_str(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
    let rows = csv_rows(&dir.path().join("verify.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows[1..].iter().all(|r| r[2] == "0"));
}

fn small_chain(kind: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "chain", kind, "--sbar", "5", "--n", "120", "--runs", "2", "--k", "3", "--grid", "0.01:1:4",
        "--test-points", "50", "--jobs", "1", "--out", path_str(out),
    ];
    args.extend_from_slice(extra);
    dlstd(&args)
}

#[test]
fn chain_cv_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = small_chain("cv", a.path(), &["--seed", "7"]);
    assert!(oa.status.success(), "{}", stderr(&oa));
    let ob = small_chain("cv", b.path(), &["--seed", "7"]);
    assert!(ob.status.success());
    for name in ["errors.csv", "paths.csv", "summary.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let summary = csv_rows(&a.path().join("summary.csv"));
    assert_eq!(summary.len(), 1 + 6);
    let errors = fs::read_to_string(a.path().join("errors.csv")).unwrap();
    assert!(errors.starts_with("# dlstd chain cv"));
    assert!(errors.lines().next().unwrap().ends_with("seed=7"));
}

#[test]
fn chain_off_policy_has_zero_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_chain("off-policy", dir.path(), &["--alphas", "0,0.25,0.5", "--methods", "ridge,dantzig", "--emit-gnuplot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("offpolicy.csv"));
    assert_eq!(rows.iter().filter(|r| r[2] == "zero").count(), 3);
    assert_eq!(rows.len(), 1 + 3 + 3 * 2 * 2);
    for name in ["zero.dat", "ridge_oracle.dat", "dantzig_oracle.dat"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("# dlstd chain off-policy"), "{name}");
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }
}

#[test]
fn invalid_settings_write_nothing() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("out");
    let cases: Vec<Vec<&str>> = vec![
        vec!["two-state", "--gamma", "1.5"],
        vec!["two-state", "--mode", "sideways"],
        vec!["chain", "cv", "--k", "1"],
        vec!["chain", "off-policy", "--alphas", "0.7"],
        vec!["chain", "off-policy", "--lambda-policy", "j2"],
        vec!["chain", "on-policy", "--grid", "1:0.1:5"],
        vec!["chain", "on-policy", "--methods", "magic"],
        vec!["verify", "--suite", "nothing"],
        vec!["verify", "--feas-tol", "0"],
    ];
    for case in cases {
        let mut args = case.clone();
        args.extend(["--out", path_str(&out)]);
        let o = dlstd(&args);
        assert!(!o.status.success(), "{case:?} should fail");
        assert!(stderr(&o).contains("error"), "{case:?}");
        assert!(!out.exists(), "{case:?} created output");
    }
}

#[test]
fn config_file_is_strict_and_flags_win() {
    let root = tempfile::tempdir().unwrap();
    let bad = root.path().join("bad.toml");
    fs::write(&bad, "gamma = 0.5\nunknown_key = 3\n").unwrap();
    let out = root.path().join("out");
    let o = dlstd(&["two-state", "--config", path_str(&bad), "--out", path_str(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown"));
    assert!(!out.exists());

    let good = root.path().join("good.toml");
    fs::write(&good, "gamma = 0.5\nmode = \"off-policy\"\nseed = 4\n").unwrap();
    let o = dlstd(&["two-state", "--config", path_str(&good), "--gamma", "0.95", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let header = fs::read_to_string(out.join("two_state_paths.csv")).unwrap();
    let first = header.lines().next().unwrap();
    assert!(first.contains("gamma=0.95") && first.contains("mode=off-policy") && first.ends_with("seed=4"), "{first}");
}
