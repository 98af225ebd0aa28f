use std::path::Path;
use std::process::{Command, Output};

fn gequil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gequil"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows of a headered CSV as maps from column name to field.
fn rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| {
            header
                .iter()
                .cloned()
                .zip(rec.unwrap().iter().map(String::from))
                .collect()
        })
        .collect()
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter()
        .find(|(k, _)| k == name)
        .unwrap_or_else(|| panic!("no column {name}"))
        .1
}

fn number(row: &[(String, String)], name: &str) -> f64 {
    field(row, name).parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_prisoners_dilemma_at_alpha_one() {
    let o = gequil(&["solve", "--game", "pd", "--alpha", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(&stdout(&o))[0];
    assert_eq!(field(r, "converged"), "true");
    let want = {
        let p = (17f64.sqrt() - 1.0) / 8.0;
        p * (1.0 + 2.0 * p) + (1.0 - p) * (2.0 + 2.0 * p)
    };
    assert!((number(r, "payoff_0") - want).abs() < 1e-6);
    assert!((number(r, "payoff_1") - want).abs() < 1e-6);
}

#[test]
fn zero_selfishness_gives_uniform_play() {
    let o = gequil(&["solve", "--game", "coord6x6", "--alpha", "0"]);
    assert!(o.status.success());
    let r = &rows(&stdout(&o))[0];
    for s in field(r, "strategy_0").split(';') {
        assert!((s.parse::<f64>().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }
}

#[test]
fn unshifted_negative_game_is_rejected() {
    let o = gequil(&["solve", "--game", "hard5x5", "--no-shift", "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("non-positive utility"), "{}", stderr(&o));
}

#[test]
fn hard_game_is_shifted_by_default() {
    let o = gequil(&["solve", "--game", "hard5x5", "--alpha", "1", "--lambda", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn annealed_hard_game_approaches_nash_payoffs() {
    let o = gequil(&[
        "solve", "--game", "hard5x5", "--anneal", "--alpha", "1000", "--lambda", "0.001", "--order", "seq",
    ]);
    // The final stage stays short of the tolerance, so the run reports exit status 2.
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
    let r = &rows(&stdout(&o))[0];
    assert!((number(r, "payoff_0") - 4.0).abs() < 0.05);
    assert!((number(r, "payoff_1") - 3.0).abs() < 0.02);
}

#[test]
fn sweep_at_zero_selfishness_has_identical_samples() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    let o = gequil(&[
        "sweep",
        "--game",
        "coord6x6sym",
        "--alphas",
        "0",
        "--runs",
        "5",
        "--samples",
        samples.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = &rows(&stdout(&o))[0];
    assert_eq!(number(summary, "runs"), 5.0);
    assert!(number(summary, "variance").abs() < 1e-20);
    let runs = rows(&std::fs::read_to_string(samples).unwrap());
    assert_eq!(runs.len(), 5);
    let first = field(&runs[0], "overall").to_string();
    assert!(runs.iter().all(|r| field(r, "overall") == first));
}

#[test]
fn sweep_reports_best_response_for_inf() {
    let o = gequil(&[
        "sweep",
        "--game",
        "coord6x6sym",
        "--alphas",
        "inf,2",
        "--runs",
        "20",
        "--order",
        "seq",
        "--lambda",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(field(&r[0], "alpha"), "inf");
    assert_eq!(field(&r[1], "alpha"), "2");
}

#[test]
fn best_response_on_prisoners_dilemma_defects() {
    let o = gequil(&["baseline", "--game", "pd", "--method", "best-response"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(&stdout(&o))[0];
    assert_eq!(number(r, "overall"), 4.0);
}

#[test]
fn society_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("society.json");
    let o = gequil(&[
        "--seed",
        "3",
        "society",
        "--n",
        "20",
        "--m",
        "3",
        "--k",
        "4",
        "--table-mode",
        "shared",
        "--save",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = gequil(&[
        "solve",
        "--game",
        path.to_str().unwrap(),
        "--alpha",
        "2",
        "--lambda",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn cooperative_restarts_share_one_fixed_point() {
    let o = gequil(&["coopt", "--random", "6,3,0.3", "--lambda", "0.8", "--restarts", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("distinct fixed points: 1"), "{}", stderr(&o));
}

#[test]
fn config_values_apply_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"game": "pd", "alpha": 30}"#);
    let o = gequil(&["--config", &cfg, "solve"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!((number(&rows(&stdout(&o))[0], "payoff_0") - 2.0).abs() < 0.05);
    let o = gequil(&["--config", &cfg, "solve", "--alpha", "1"]);
    assert!((number(&rows(&stdout(&o))[0], "payoff_0") - 2.3904).abs() < 1e-3);
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"game": "pd", "alpah": 1}"#);
    let o = gequil(&["--config", &cfg, "solve"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpah"));
}

#[test]
fn malformed_game_file_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let game = write(
        dir.path(),
        "g.json",
        "{\n  \"type\": \"dense\",\n  \"action_counts\": [2, 2],\n  \"utilities\": [[1, 2, 3,]]\n}\n",
    );
    let o = gequil(&["solve", "--game", &game, "--alpha", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_with_status_one() {
    assert_eq!(gequil(&["solve", "--alpha", "x"]).status.code(), Some(1));
    assert_eq!(gequil(&["--help"]).status.code(), Some(0));
}

#[test]
fn reproduce_writes_the_first_figure() {
    let dir = tempfile::tempdir().unwrap();
    let o = gequil(&["--out", dir.path().to_str().unwrap(), "reproduce", "fig1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap());
    assert_eq!(r.len(), 61);
    assert!((number(&r[2], "payoff_0") - 2.3904).abs() < 1e-3);
}
