use std::fs;
use std::process::Command;

use wagetheft::cli::{run_with, SolveReport, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_OK};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("wagetheft").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for n in 0..2 {
        let json = dir.path().join(format!("r{n}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_wagetheft"))
            .args(["solve", "--output", json.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success());
        outputs.push((o.stdout, fs::read(&json).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(text.contains("a*        0.820675423328"), "{text}");
}

#[test]
fn solve_result_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    let (code, _, _) = run(&[
        "solve",
        "--sigma",
        "5",
        "--gamma",
        "0.5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&path).unwrap();
    let report = SolveReport::from_json(&text).unwrap();
    assert!(report.recheck().all_passed(), "{}", report.recheck());
    assert_eq!(report.instance.penalty.sigma, 5.0);
    let again = serde_json::to_string_pretty(&report).unwrap();
    assert_eq!(again.trim_end(), text.trim_end());
}

#[test]
fn config_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.json");
    fs::write(&path, r#"{"u": 100, "sigma": 2, "theft_cap": 0}"#).unwrap();
    let (code, out, _) = run(&["solve", "--config", path.to_str().unwrap(), "--sigma", "3"]);
    assert_eq!(code, EXIT_OK);
    assert!(
        out.contains("u=100 ") && out.contains("sigma=3 ") && out.contains("theft_cap=0"),
        "{out}"
    );
    assert!(out.contains("bH        0\n"), "{out}");
}

#[test]
fn validation_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"sigm": 1}"#).unwrap();
    let (code, _, err) = run(&["solve", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("sigm"), "{err}");

    let (code, _, err) = run(&["solve", "--p", "1"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("`p`"), "{err}");

    let (code, _, err) = run(&["simulate", "--rule", "ma:0"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("window"), "{err}");
}

#[test]
fn missing_sweep_config() {
    let (code, _, err) = run(&["sweep", "--config", "definitely-missing.json"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("definitely-missing.json"));
}

#[test]
fn parse_errors_and_help() {
    assert_eq!(run(&["frobnicate"]).0, EXIT_INVALID);
    assert_eq!(run(&["solve", "--sigma"]).0, EXIT_INVALID);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("dominance-audit"));
}

#[test]
fn oracle_check_prints_one_line_per_check() {
    let (code, out, _) = run(&["oracle-check", "--grid", "101"]);
    let checks: Vec<&str> = out
        .lines()
        .filter(|l| l.contains(" max_deviation="))
        .collect();
    assert!(checks.len() >= 14);
    let failed = checks.iter().filter(|l| l.contains(" FAIL ")).count();
    assert_eq!(
        code,
        if failed == 0 {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    );
    assert!(checks
        .iter()
        .any(|l| l.starts_with("oracle within two wage steps of solver PASS")));
}

#[test]
fn sweep_preset_to_stdout() {
    let (code, out, err) = run(&["sweep", "--preset", "sigma-b", "--check"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out.lines().count(), 11);
    assert!(out.starts_with("P,yL,yH,sigma,p,gamma,"));
    assert!(err.contains("all 3 checks passed"), "{err}");
}

#[test]
fn sweep_config_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("rows.csv");
    fs::write(
        &spec,
        format!(r#"{{"P": 10, "yL": 30, "sigma": 1, "p": 1.5, "gamma": 0.1, "k": [0.1, 0.5, 1], "q": 1, "u": 200, "output": {:?}}}"#, csv.to_str().unwrap()),
    )
    .unwrap();
    let (code, out, err) = run(&["sweep", "--config", spec.to_str().unwrap(), "--check"]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.is_empty());
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 4);
}

#[test]
fn simulate_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let args = [
        "simulate",
        "--wh",
        "260",
        "--wl",
        "230",
        "--bh",
        "5",
        "--bl",
        "1",
        "--rule",
        "es:0.3",
        "--periods",
        "120",
    ];
    let (code, out, _) = run(&[&args[..], &["--output", csv.to_str().unwrap()]].concat());
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("converged at period"), "{out}");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,bhat_H,bhat_L,a,employed,profit,worker_utility"
    );
    assert_eq!(text.lines().count(), 121);

    let seeded = [&args[..], &["--seed", "4"]].concat();
    assert_eq!(run(&seeded).1, run(&seeded).1);
}

#[test]
fn dominance_audit_passes() {
    let (code, out, _) = run(&["dominance-audit", "--samples", "200", "--seed", "5"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("all 6 checks passed"));
}
