use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chainqkd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chainqkd-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const HETERO: &str = r#"{
  "repeaters": 2,
  "honest_left": 1,
  "honest_right": 0,
  "links": [
    {"type": "depolarizing", "q": 0.02},
    {"type": "explicit", "probs": [0.9, 0.05, 0.03, 0.02]},
    {"type": "depolarizing", "q": 0.05}
  ]
}"#;

#[test]
fn csv_has_header_and_is_deterministic() {
    let args = ["rate-finite", "--values", "1e6,1e8", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("n,m,qx,rate_h0,"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn noise_preset_row() {
    let out = run(&["noise", "--values", "0.03"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[1] - 0.08351).abs() < 1e-5);
    assert!((row[5] - 0.05735).abs() < 1e-5);
}

#[test]
fn config_file_is_used() {
    let path = scratch("hetero.json", HETERO);
    let out = run(&["rate-asymptotic", "--values", "0,0.05", "--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "qx,rate_h1,rate_bb84a");
    assert_eq!(text.lines().last().unwrap().split(',').next(), Some("threshold"));
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("chainqkd-out-{}.csv", std::process::id()));
    let out = run(&["noise", "--values", "0.1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("q,qx_total"));
    std::fs::remove_file(path).unwrap();
}

#[test]
fn schema_errors_exit_one_with_context() {
    let bad_count = scratch("count.json", r#"{"repeaters": 3, "links": [{"type": "depolarizing", "q": 0.1}]}"#);
    let bad_probs = scratch(
        "probs.json",
        r#"{"repeaters": 0, "links": [{"type": "explicit", "probs": [0.5, 0.5, 0.5, 0.5]}]}"#,
    );
    let unknown = scratch("unknown.json", "{\n  \"repeaters\": 0,\n  \"links\": [],\n  \"colour\": 1\n}");
    for (path, needle) in [(&bad_count, "link"), (&bad_probs, "links[0].probs"), (&unknown, "line 4")] {
        let out = run(&["noise", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{err}");
    }
}

#[test]
fn invalid_arguments_exit_one() {
    assert_eq!(run(&["noise", "--steps", "0"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "--epsilon", "2"]).status.code(), Some(1));
    assert_eq!(run(&["rate-finite", "--m-fraction", "0.6"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn verify_passes_and_fault_is_caught() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.starts_with("PASS")));

    let out = run(&["verify", "--inject-fault", "convolve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).lines().any(|l| l.starts_with("FAIL oracle-equivalence")));
}

#[test]
fn simulate_honors_seed() {
    let a = run(&["simulate", "--rounds", "20000", "--seed", "3"]);
    let b = run(&["simulate", "--rounds", "20000", "--seed", "3"]);
    let c = run(&["simulate", "--rounds", "20000", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["qx_hat"].is_f64());
}

#[test]
fn mc_verify_reports_json() {
    let out = run(&["mc-verify", "--trials", "50", "--inject", "worst-case"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["trials"], 50);
    assert_eq!(v["passed"], true);
}

#[test]
fn strict_leak_lowers_rates() {
    let col = |args: &[&str]| -> f64 {
        let text = stdout(&run(args));
        text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap()
    };
    let default = col(&["rate-finite", "--values", "1e9"]);
    let strict = col(&["rate-finite", "--values", "1e9", "--strict-leak"]);
    assert!(strict < default);
}
