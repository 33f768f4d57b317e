//! End-to-end checks against the compiled binary: exit codes, document
//! round trips, and the CSV sweep schema.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_kinalloc")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

const PARENT_CHILD: &str = r#"{
  "individuals": [
    {"id": "parent", "budget": 3.0, "fitness": {"kind": "log", "w": 1.0, "c": 1.0}},
    {"id": "child", "budget": 0.1, "fitness": {"kind": "log", "w": 1.0, "c": 1.0}}
  ],
  "relatedness": [[1.0, 0.5], [0.5, 1.0]]
}"#;

const EQUILIBRIUM: &str = r#"{"investments": [[2.4, 0.6], [0.0, 0.1]]}"#;

#[test]
fn solve_writes_a_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    let out = run_in(dir.path(), &["solve", "game.json", "-o", "report.json"]);
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["individuals"][0], "parent");
    assert!(report["certificate"]["certified"].as_bool().unwrap());
    let x_pp = report["profile"][0][0].as_f64().unwrap();
    let x_pc = report["profile"][0][1].as_f64().unwrap();
    assert!((x_pp - 2.4).abs() < 1e-6);
    assert!((x_pc - 0.6).abs() < 1e-6);
    assert_eq!(report["classification"]["selfish"][0], "child");
    assert_eq!(report["classification"]["altruistic"][0], "parent");
}

#[test]
fn solve_reports_to_stdout_when_no_output_is_given() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    let out = run_in(dir.path(), &["solve", "game.json"]);
    assert_eq!(exit_code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(report["diagnostics"]["converged"].as_bool().unwrap());
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    let a = run_in(dir.path(), &["solve", "game.json"]);
    let b = run_in(dir.path(), &["solve", "game.json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_accepts_the_equilibrium_and_rejects_a_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    write(dir.path(), "eq.json", EQUILIBRIUM);
    let out = run_in(dir.path(), &["verify", "game.json", "eq.json"]);
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cert: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(cert["certified"].as_bool().unwrap());
    assert!(cert["residuals"]["complementarity"].as_f64().unwrap() <= 1e-8);

    write(
        dir.path(),
        "off.json",
        r#"{"investments": [[2.5, 0.5], [0.0, 0.1]]}"#,
    );
    let out = run_in(dir.path(), &["verify", "game.json", "off.json"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn verify_rejects_an_infeasible_profile_as_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    write(
        dir.path(),
        "bad.json",
        r#"{"investments": [[9.0, 0.0], [0.0, 0.1]]}"#,
    );
    let out = run_in(dir.path(), &["verify", "game.json", "bad.json"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget exceeded"));
}

#[test]
fn classify_names_the_sets() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    write(dir.path(), "eq.json", EQUILIBRIUM);
    let out = run_in(dir.path(), &["classify", "game.json", "eq.json"]);
    assert_eq!(exit_code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["selfish"], serde_json::json!(["child"]));
    assert_eq!(
        doc["beneficiaries"]["parent"],
        serde_json::json!(["parent", "child"])
    );
    assert_eq!(doc["highest_plain_marginal"], serde_json::json!(["child"]));
}

#[test]
fn oracle_check_passes_the_equilibrium_and_flags_a_bad_profile() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    write(dir.path(), "eq.json", EQUILIBRIUM);
    let out = run_in(
        dir.path(),
        &["oracle-check", "game.json", "eq.json", "--epsilon", "1e-4"],
    );
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(doc["pass"].as_bool().unwrap());

    // the child donating its budget is clearly improvable
    write(
        dir.path(),
        "bad.json",
        r#"{"investments": [[2.4, 0.6], [0.1, 0.0]]}"#,
    );
    let out = run_in(
        dir.path(),
        &["oracle-check", "game.json", "bad.json", "--epsilon", "1e-4"],
    );
    assert_eq!(exit_code(&out), 3);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["worst_source"], "child");
    assert!(doc["worst_improvement"].as_f64().unwrap() > 1e-4);
}

#[test]
fn pedigree_computes_known_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "fam.json",
        r#"{"members": [
            {"id": "mom"}, {"id": "dad"},
            {"id": "kid", "mother": "mom", "father": "dad"}
        ]}"#,
    );
    let out = run_in(dir.path(), &["pedigree", "fam.json"]);
    assert_eq!(exit_code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["ids"], serde_json::json!(["mom", "dad", "kid"]));
    assert_eq!(doc["values"][0][2].as_f64().unwrap(), 0.5);
    assert_eq!(doc["values"][0][1].as_f64().unwrap(), 0.0);
    assert_eq!(doc["values"][2][2].as_f64().unwrap(), 1.0);
}

#[test]
fn cyclic_pedigrees_are_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "loop.json",
        r#"{"members": [{"id": "a", "mother": "b"}, {"id": "b", "mother": "a"}]}"#,
    );
    let out = run_in(dir.path(), &["pedigree", "loop.json"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle"));
}

#[test]
fn games_can_reference_a_pedigree_file() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "fam.json",
        r#"{"members": [
            {"id": "mom"}, {"id": "dad"},
            {"id": "kid", "mother": "mom", "father": "dad"}
        ]}"#,
    );
    write(
        dir.path(),
        "game.json",
        r#"{
            "individuals": [
                {"id": "mom", "budget": 1.0, "fitness": {"kind": "log", "w": 1.0, "c": 1.0}},
                {"id": "kid", "budget": 0.5, "fitness": {"kind": "log", "w": 1.0, "c": 1.0}}
            ],
            "relatedness": {"from_pedigree": "fam.json"}
        }"#,
    );
    let out = run_in(dir.path(), &["solve", "game.json"]);
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sweep_emits_one_row_per_step_with_monotone_generosity() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    let out = run_in(
        dir.path(),
        &[
            "sweep",
            "game.json",
            "--param",
            "relatedness/parent/child",
            "--from",
            "0",
            "--to",
            "1",
            "--steps",
            "11",
            "-o",
            "sweep.csv",
        ],
    );
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 11);

    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("missing column {name}"))
    };
    let cross = col("x[parent->child]");
    let converged = col("converged");
    let mut previous = -1.0;
    for row in &rows {
        assert_eq!(&row[converged], "true");
        let value: f64 = row[cross].parse().unwrap();
        assert!(
            value >= previous - 1e-9,
            "generosity dropped: {value} after {previous}"
        );
        previous = value;
    }
    // unrelated parent keeps everything; fully related parent gives plenty
    let first: f64 = rows[0][cross].parse().unwrap();
    let last: f64 = rows[10][cross].parse().unwrap();
    assert_eq!(first, 0.0);
    assert!((last - 1.45).abs() < 1e-6);

    // every float column carries 17 significant digits
    assert!(rows[0][col("param")].contains('e'));
}

#[test]
fn sweep_can_drive_budgets_and_fitness_parameters() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    for param in ["budget/child", "fitness/child/w"] {
        let out = run_in(
            dir.path(),
            &[
                "sweep",
                "game.json",
                "--param",
                param,
                "--from",
                "0.5",
                "--to",
                "1.5",
                "--steps",
                "3",
            ],
        );
        assert_eq!(
            exit_code(&out),
            0,
            "param {param}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = stdout_of(&out);
        assert_eq!(
            text.lines().count(),
            4,
            "header plus three rows for {param}"
        );
    }
}

#[test]
fn sweeping_into_invalid_territory_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "game.json", PARENT_CHILD);
    let out = run_in(
        dir.path(),
        &[
            "sweep",
            "game.json",
            "--param",
            "relatedness/parent/child",
            "--from",
            "0.5",
            "--to",
            "1.5",
            "--steps",
            "3",
        ],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("relatedness out of [0, 1]"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &[]);
    assert_eq!(exit_code(&out), 1);
    let out = run_in(dir.path(), &["conquer", "world.json"]);
    assert_eq!(exit_code(&out), 1);
    write(dir.path(), "game.json", PARENT_CHILD);
    let out = run_in(dir.path(), &["solve", "game.json", "--gamma", "1.5"]);
    assert_eq!(exit_code(&out), 1);
    let out = run_in(
        dir.path(),
        &[
            "sweep",
            "game.json",
            "--param",
            "nonsense",
            "--from",
            "0",
            "--to",
            "1",
            "--steps",
            "2",
        ],
    );
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for flag in ["--help", "--version"] {
        let out = run_in(dir.path(), &[flag]);
        assert_eq!(exit_code(&out), 0);
    }
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "missing.json"]);
    assert_eq!(exit_code(&out), 2);

    write(dir.path(), "broken.json", "{ not json");
    let out = run_in(dir.path(), &["solve", "broken.json"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    write(
        dir.path(),
        "invalid.json",
        &PARENT_CHILD.replace("[1.0, 0.5]", "[0.9, 0.5]"),
    );
    let out = run_in(dir.path(), &["solve", "invalid.json"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("diagonal relatedness"));
}

#[test]
fn shipped_samples_stay_honest() {
    let samples = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples");
    let out = run_in(
        &samples,
        &[
            "verify",
            "parent_child.game.json",
            "parent_child_equilibrium.profile.json",
        ],
    );
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run_in(&samples, &["solve", "nuclear_family.game.json"]);
    assert_eq!(
        exit_code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
