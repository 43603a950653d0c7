//! End-to-end runs of the `teamplan` binary: exit codes, file outputs, and
//! the scenario generator round trip.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_teamplan"))
}

/// Per-test scratch directory, wiped at the start of each run.
fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("teamplan-cli-{tag}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn generate_scenarios(dir: &Path) {
    let out = bin().arg("scenarios").arg(dir).output().unwrap();
    assert!(out.status.success(), "scenario generation failed: {out:?}");
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code_of(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

const EVALUATION_HEADER: &str = "scenario_id,planner,objective,fairness_kind,lambda,\
snapshot_fraction,predicted_correct,posterior_mass,sum_fairness,completion_steps,family_size";

#[test]
fn bundled_scenarios_generate_parse_and_evaluate() {
    let dir = fresh_dir("bundle");
    generate_scenarios(&dir);
    let files: Vec<_> = fs::read_dir(&dir).unwrap().collect();
    assert_eq!(files.len(), 12);

    let csv = dir.join("eval.csv");
    let out = bin()
        .arg("evaluate")
        .arg(&dir)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 0, "{}", stderr_of(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("12 scenarios"));

    let text = fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'), "CSV must use LF line endings");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], EVALUATION_HEADER);
    // 12 scenarios x 5 objectives x 3 snapshots.
    assert_eq!(lines.len(), 1 + 12 * 5 * 3);
}

#[test]
fn same_seed_runs_are_byte_identical() {
    let dir = fresh_dir("seed");
    generate_scenarios(&dir);
    let subset = dir.join("subset");
    fs::create_dir_all(&subset).unwrap();
    for id in ["pe-mirror-even", "gk-split-uneven", "gk-island-even"] {
        fs::copy(dir.join(format!("{id}.toml")), subset.join(format!("{id}.toml"))).unwrap();
    }
    let mut outputs = Vec::new();
    for run in 0..2 {
        let csv = dir.join(format!("run{run}.csv"));
        let out = bin()
            .arg("evaluate")
            .arg(&subset)
            .arg("--seed")
            .arg("3")
            .arg("--out")
            .arg(&csv)
            .output()
            .unwrap();
        assert_eq!(code_of(&out), 0, "{}", stderr_of(&out));
        outputs.push(fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn malformed_scenario_files_fail_with_the_line() {
    let dir = fresh_dir("malformed");
    let path = dir.join("bad.toml");
    fs::write(
        &path,
        "id = \"bad\"\nkind = \"grid-kitchen\"\nbogus = 3\nhorizon = 4\n",
    )
    .unwrap();
    let out = bin().arg("plan").arg(&path).output().unwrap();
    assert_eq!(code_of(&out), 2);
    let err = stderr_of(&out);
    assert!(err.contains("line 3"), "missing location: {err}");
    assert!(err.contains("bogus"), "missing field name: {err}");
}

#[test]
fn impossible_horizons_are_infeasible() {
    let dir = fresh_dir("horizon");
    generate_scenarios(&dir);
    let path = dir.join("pe-threeball-uneven.toml");
    let squeezed = fs::read_to_string(&path)
        .unwrap()
        .replace("horizon = 16", "horizon = 1");
    fs::write(&path, squeezed).unwrap();
    let out = bin()
        .arg("plan")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("plan.txt"))
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 3);
    assert!(stderr_of(&out).contains("infeasible"));
}

#[test]
fn empty_suite_directories_fail() {
    let dir = fresh_dir("empty");
    let out = bin()
        .arg("evaluate")
        .arg(&dir)
        .arg("--out")
        .arg(dir.join("eval.csv"))
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 2);
}

#[test]
fn zero_step_trajectories_emit_only_the_prior() {
    let dir = fresh_dir("prior");
    generate_scenarios(&dir);
    let traj = dir.join("traj.toml");
    fs::write(&traj, "steps = []\n").unwrap();
    let csv = dir.join("posterior.csv");
    let out = bin()
        .arg("posterior")
        .arg(dir.join("gk-split-uneven.toml"))
        .arg(&traj)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 0, "{}", stderr_of(&out));
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "prefix_len,theta_0,theta_1,theta_2,theta_3\n\
         0,0.250000000,0.250000000,0.250000000,0.250000000\n"
    );
}

#[test]
fn inconsistent_trajectories_name_the_step() {
    let dir = fresh_dir("inconsistent");
    generate_scenarios(&dir);
    let traj = dir.join("traj.toml");
    fs::write(&traj, "steps = [[[0.0, 0.0], [99.0, 0.0]]]\n").unwrap();
    let out = bin()
        .arg("posterior")
        .arg(dir.join("gk-split-uneven.toml"))
        .arg(&traj)
        .arg("--out")
        .arg(dir.join("posterior.csv"))
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 2);
    assert!(stderr_of(&out).contains("step 0"), "{}", stderr_of(&out));
}

#[test]
fn plan_emits_report_svg_and_trajectory() {
    let dir = fresh_dir("plan");
    generate_scenarios(&dir);
    let report = dir.join("plan.txt");
    let out = bin()
        .arg("plan")
        .arg(dir.join("pe-threeball-uneven.toml"))
        .arg("--objective")
        .arg("legible-play")
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 0, "{}", stderr_of(&out));

    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("human: t"), "report must name the human's subtask: {text}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("scenario: pe-threeball-uneven"));

    let svg = fs::read_to_string(dir.join("plan.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let traj = fs::read_to_string(dir.join("plan.trajectory.toml")).unwrap();
    assert!(traj.starts_with("steps"));
}

#[test]
fn environment_variables_stand_in_for_flags() {
    let dir = fresh_dir("env");
    generate_scenarios(&dir);
    let report = dir.join("from-env.txt");
    let out = bin()
        .arg("plan")
        .arg(dir.join("gk-split-uneven.toml"))
        .env("TEAMPLAN_OUT", &report)
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 0, "{}", stderr_of(&out));
    assert!(report.exists());

    let out = bin()
        .arg("plan")
        .arg(dir.join("gk-split-uneven.toml"))
        .env("TEAMPLAN_BETA", "-1")
        .env("TEAMPLAN_OUT", dir.join("unused.txt"))
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 2);
    assert!(stderr_of(&out).contains("beta"));
}

#[test]
fn straight_runs_to_a_target_build_posterior_mass() {
    let dir = fresh_dir("straight");
    generate_scenarios(&dir);
    // gk-split-uneven: the robot starts at (4, 0) and walks straight to the
    // station at (6, 5) while the human holds position. Mass on "human takes
    // t0, robot takes t1" must rise at every prefix.
    let traj = dir.join("traj.toml");
    let step_right = "[[0.0, 0.0], [1.0, 0.0]]";
    let step_up = "[[0.0, 0.0], [0.0, 1.0]]";
    let steps = [step_right, step_right, step_up, step_up, step_up, step_up, step_up];
    fs::write(&traj, format!("steps = [{}]\n", steps.join(", "))).unwrap();
    let csv = dir.join("posterior.csv");
    let out = bin()
        .arg("posterior")
        .arg(dir.join("gk-split-uneven.toml"))
        .arg(&traj)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(code_of(&out), 0, "{}", stderr_of(&out));

    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 8);
    // Columns carry 9 significant digits, so re-summing the printed values
    // only lands within a few rounding ulps of 1.
    for row in &rows {
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8, "row sums to {sum}");
    }
    for pair in rows.windows(2) {
        assert!(
            pair[1][1] > pair[0][1],
            "mass on the matching allocation dipped: {} -> {}",
            pair[0][1],
            pair[1][1]
        );
    }
}
