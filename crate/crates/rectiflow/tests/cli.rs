//! End-to-end tests of the binary: spawn it the way a user would, then check
//! exit codes and the files it leaves behind.

mod common;

use std::path::{Path, PathBuf};
use std::process::Output;

struct Workspace {
    dir: tempfile::TempDir,
    problem: PathBuf,
}

impl Workspace {
    fn new(problem_toml: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let problem = dir.path().join("problem.toml");
        std::fs::write(&problem, problem_toml).unwrap();
        Workspace { dir, problem }
    }

    fn run(&self, subcommand: &[&str], out_name: &str) -> (i32, PathBuf, Output) {
        let out = self.dir.path().join(out_name);
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_rectiflow"))
            .args(subcommand)
            .args(["--problem", self.problem.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        (output.status.code().unwrap(), out, output)
    }
}

fn expect_exit(got: (i32, PathBuf, Output), want: i32) -> PathBuf {
    let (code, out, output) = got;
    assert_eq!(
        code,
        want,
        "expected exit {want}, got {code}; stderr:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    out
}

fn report_json(out: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn solve_writes_trajectories_and_a_report() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = expect_exit(ws.run(&["solve"], "solve"), 0);
    assert!(out.join("trajectory.csv").is_file());
    let rep = report_json(&out);
    assert_eq!(rep["command"], "solve");
    assert_eq!(rep["trajectories"].as_array().unwrap().len(), 5);
}

#[test]
fn rectify_writes_grids_and_passes_on_a_clean_field() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = expect_exit(ws.run(&["rectify"], "rectify"), 0);
    for name in ["grid_forward.csv", "grid_inverse.csv", "residuals.csv"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let rep = report_json(&out);
    assert_eq!(rep["command"], "rectify");
    assert_eq!(rep["passes"], true);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let ws = Workspace::new(common::linear_problem_toml());
    let first = expect_exit(ws.run(&["rectify"], "first"), 0);
    let second = expect_exit(ws.run(&["rectify"], "second"), 0);
    for name in ["report.json", "residuals.csv", "grid_forward.csv"] {
        let a = std::fs::read(first.join(name)).unwrap();
        let b = std::fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn compose_reports_the_product_element() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = expect_exit(
        ws.run(&["symmetry", "compose", "--left", "scale", "--right", "shift"], "compose"),
        0,
    );
    let rep = report_json(&out);
    assert_eq!(rep["command"], "symmetry compose");
    assert_eq!(rep["passes"], true);
}

#[test]
fn conjugate_samples_the_induced_map() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = expect_exit(
        ws.run(&["symmetry", "conjugate", "--element", "scale"], "conjugate"),
        0,
    );
    assert!(out.join("conjugate.csv").is_file());
    assert_eq!(report_json(&out)["passes"], true);
}

#[test]
fn conjugated_element_verifies_as_a_symmetry() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = expect_exit(
        ws.run(&["symmetry", "check", "--element", "scale", "--conjugated"], "check"),
        0,
    );
    assert_eq!(report_json(&out)["verdict"], true);
}

#[test]
fn raw_offset_element_fails_the_symmetry_check() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = expect_exit(
        ws.run(&["symmetry", "check", "--element", "offset"], "check-offset"),
        1,
    );
    assert_eq!(report_json(&out)["verdict"], false);
}

#[test]
fn diagnose_passes_a_well_behaved_field() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = expect_exit(ws.run(&["diagnose"], "diagnose"), 0);
    assert!(out.join("lipschitz.csv").is_file());
    assert!(out.join("quotients.csv").is_file());
    assert_eq!(report_json(&out)["hypotheses_hold"], true);
}

const SQRT_PROBLEM: &str = r#"
dimension = 1
field = ["2*sqrt(abs(x1))"]

[time]
window = [0.0, 1.0]
base = 0.0

[check]
initial_conditions = [[0.25], [0.75]]

[diagnose]
region = [[-1.0, 1.0]]
point = [0.0]

[[diagnose.candidates]]
label = "parabola"
components = ["t^2"]
"#;

#[test]
fn diagnose_flags_the_square_root_kink() {
    let ws = Workspace::new(SQRT_PROBLEM);
    let out = expect_exit(ws.run(&["diagnose"], "diagnose-kink"), 1);
    let rep = report_json(&out);
    assert_eq!(rep["hypotheses_hold"], false);
    assert_eq!(rep["uniqueness"]["counterexample"], true);
}

#[test]
fn missing_problem_file_is_an_input_error() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = ws.dir.path().join("x");
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_rectiflow"))
        .args(["solve", "--problem", "no-such-file.toml", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn malformed_problem_file_is_an_input_error() {
    let ws = Workspace::new("dimension = \n");
    let got = ws.run(&["solve"], "broken");
    assert_eq!(got.0, 3, "stderr:\n{}", String::from_utf8_lossy(&got.2.stderr));
}

#[test]
fn unknown_element_is_an_input_error() {
    let ws = Workspace::new(common::linear_problem_toml());
    let got = ws.run(&["symmetry", "conjugate", "--element", "nosuch"], "nosuch");
    assert_eq!(got.0, 3, "stderr:\n{}", String::from_utf8_lossy(&got.2.stderr));
}

#[test]
fn unknown_flag_is_an_input_error() {
    let ws = Workspace::new(common::linear_problem_toml());
    let out = ws.dir.path().join("x");
    let output = std::process::Command::new(env!("CARGO_BIN_EXE_rectiflow"))
        .args(["solve", "--frobnicate", "--problem", ws.problem.to_str().unwrap()])
        .arg("--out")
        .arg(out.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn undersized_sample_count_is_an_input_error() {
    let ws = Workspace::new(common::linear_problem_toml());
    let got = ws.run(&["solve", "--samples", "3"], "few");
    assert_eq!(got.0, 3, "stderr:\n{}", String::from_utf8_lossy(&got.2.stderr));
}
