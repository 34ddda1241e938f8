use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn shipped_text(name: &str) -> String {
    fs::read_to_string(shipped(name)).unwrap()
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robinv"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let body = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, body)
}

fn column(header: &[String], body: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    body.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn solve_writes_curves_and_exposures() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &shipped("reference_gamma4.toml"),
        dir.path(),
        &["solve", "--grid", "300"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let (header, body) = rows(&dir.path().join("strategy.csv"));
    assert_eq!(header, ["t", "Y", "Y0", "Ytilde", "c_star", "V_at_1", "L"]);
    assert_eq!(body.len(), 301);
    let last = body.last().unwrap();
    assert_eq!(&last[..4], ["3", "1", "1", "1"]);
    assert_eq!(last[6], "0");

    let (header, body) = rows(&dir.path().join("exposure.csv"));
    assert_eq!(header, ["i", "p_star_i", "phi_star_i"]);
    let p = column(&header, &body, "p_star_i");
    let phi = column(&header, &body, "phi_star_i");
    for (got, want) in p.iter().zip([0.9479, 0.1190, 0.0]) {
        assert!((got - want).abs() < 5e-5, "{got} vs {want}");
    }
    for (got, want) in phi.iter().zip([-0.9479, -0.3571, 0.0]) {
        assert!((got - want).abs() < 5e-5, "{got} vs {want}");
    }
}

#[test]
fn neutral_scenario_has_no_loss() {
    let dir = TempDir::new().unwrap();
    let text = shipped_text("reference_gamma09.toml").replace(
        "eta = [1.0, 3.0, 5.0]\n\n[constraints]",
        "eta = [0.0, 0.0, 0.0]\n\n[constraints]",
    );
    let config = write_config(&dir, &text);
    let out = run(&config, dir.path(), &["solve"]);
    assert_eq!(out.status.code(), Some(0));
    let (header, body) = rows(&dir.path().join("strategy.csv"));
    assert!(column(&header, &body, "L").iter().all(|l| l.abs() <= 1e-6));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = run(
            &shipped("reference_gamma09.toml"),
            dir.path(),
            &["compare", "--grid", "600"],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["case_C1.csv", "case_C5.csv", "case_NC.csv", "orderings.txt"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let orderings = fs::read_to_string(a.path().join("orderings.txt")).unwrap();
    assert_eq!(orderings.lines().filter(|l| l.starts_with("PASS")).count(), 10);
    assert!(orderings.contains("(i')") && orderings.contains("(iii')"));
}

#[test]
fn single_case_compare_has_no_orderings() {
    let dir = TempDir::new().unwrap();
    let base = shipped_text("reference_gamma4.toml");
    let cut = base.find("[[compare.cases]]\nname = \"C2\"").unwrap();
    let end = base.find("[sweep]").unwrap();
    let text = format!("{}{}", &base[..cut], &base[end..]);
    let config = write_config(&dir, &text);
    let out = run(&config, dir.path(), &["compare", "--grid", "100"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("case_C1.csv").exists());
    let orderings = fs::read_to_string(dir.path().join("orderings.txt")).unwrap();
    assert!(orderings.contains("no orderings"));
}

#[test]
fn sweep_checks_monotonicity() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &shipped("reference_gamma4.toml"),
        dir.path(),
        &["sweep", "--grid", "600", "--index", "1", "--values", "0,2,4"],
    );
    assert_eq!(out.status.code(), Some(0));
    for v in ["0", "2", "4"] {
        assert!(dir.path().join(format!("sweep_eta1_{v}.csv")).exists());
    }
    let text = fs::read_to_string(dir.path().join("monotonicity.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);

    let single = TempDir::new().unwrap();
    let out = run(
        &shipped("reference_gamma4.toml"),
        single.path(),
        &["sweep", "--values", "3"],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let bad_gamma = shipped_text("reference_gamma4.toml").replace("risk_aversion = 4.0", "risk_aversion = 1.0");
    let config = write_config(&dir, &bad_gamma);
    assert_eq!(run(&config, dir.path(), &["solve"]).status.code(), Some(2));

    let unknown = shipped_text("reference_gamma4.toml").replace("[solver]", "[solver]\ntolerance = 1e-9");
    let config = write_config(&dir, &unknown);
    assert_eq!(run(&config, dir.path(), &["solve"]).status.code(), Some(2));

    let missing = dir.path().join("absent.toml");
    assert_eq!(run(&missing, dir.path(), &["solve"]).status.code(), Some(2));

    let full = shipped_text("reference_gamma4.toml").replace(
        "exposure = \"orthant\"\nconsumption_floor",
        "exposure = \"full\"\nconsumption_floor",
    );
    let config = write_config(&dir, &full);
    assert_eq!(run(&config, dir.path(), &["sweep"]).status.code(), Some(2));

    assert_eq!(
        run(&shipped("reference_gamma4.toml"), dir.path(), &["solve", "--grid", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_is_reproducible() {
    let text = shipped_text("reference_gamma09.toml").replace("paths = 50000", "paths = 4000");
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let config = write_config(dir, &text);
        let out = run(&config, dir.path(), &["simulate", "--grid", "100", "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let report = fs::read(a.path().join("mc_report.csv")).unwrap();
    assert_eq!(report, fs::read(b.path().join("mc_report.csv")).unwrap());
    let (header, body) = rows(&a.path().join("mc_report.csv"));
    assert_eq!(body.len(), 4);
    assert_eq!(column(&header, &body, "seed"), vec![7.0; 4]);
    assert!(column(&header, &body, "z_score").iter().all(|z| z.abs() <= 3.0));
}
