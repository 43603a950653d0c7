//! Report rendering: the plan text report, the evaluation CSV, and the
//! posterior CSV. All reals print with 9 significant digits; CSV uses LF
//! endings and a header row.

use teamplan_core::{
    AgentId, Objective, PlanResult, PosteriorTrace, PredictionMode, Scenario, SuiteOutcome,
};

/// 9 significant digits, plain decimal notation.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let formatted = format!("{:.*}", decimals, x);
    // Rounding can carry into the next magnitude (0.9999… → 1.000…); reformat
    // so the digit count stays at nine.
    let parsed: f64 = formatted.parse().expect("own formatting parses");
    let new_magnitude = parsed.abs().log10().floor() as i32;
    if parsed != 0.0 && new_magnitude != magnitude {
        let decimals = (8 - new_magnitude).max(0) as usize;
        return format!("{:.*}", decimals, parsed);
    }
    formatted
}

fn objective_columns(objective: &Objective<f64>) -> (String, String) {
    match objective.fairness() {
        Some(kind) => (kind.to_string(), fmt_real(objective.lambda())),
        None => ("-".to_string(), "0".to_string()),
    }
}

fn subtask_list(scenario: &Scenario<f64>, result: &PlanResult<f64>, agent: usize) -> String {
    let subtasks = result.theta.subtasks_of(AgentId(agent));
    if subtasks.is_empty() {
        return "(none)".to_string();
    }
    subtasks
        .iter()
        .map(|t| scenario.label(*t).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// The cmd-plan text report.
pub fn plan_report(
    scenario: &Scenario<f64>,
    objective: &Objective<f64>,
    result: &PlanResult<f64>,
) -> String {
    let mut out = String::new();
    let (kind, lambda) = objective_columns(objective);
    out.push_str(&format!("scenario: {}\n", scenario.id()));
    out.push_str(&format!("objective: {}", objective.name()));
    if objective.fairness().is_some() {
        out.push_str(&format!(" (fairness {kind}, lambda {lambda})"));
    }
    out.push('\n');
    out.push_str(&format!(
        "allocation: #{} of {}\n",
        result.theta_index,
        result.posterior.row(0).len()
    ));
    out.push_str(&format!("  human: {}\n", subtask_list(scenario, result, 0)));
    for robot in 1..scenario.agent_count() {
        out.push_str(&format!(
            "  robot {robot}: {}\n",
            subtask_list(scenario, result, robot)
        ));
    }
    out.push_str(&format!(
        "trajectory: member {} of {} ({} steps)\n",
        result.member_index,
        result.family_size,
        result.trajectory.len()
    ));
    out.push_str(&format!(
        "objective value: {}\n",
        fmt_real(result.objective_value)
    ));
    let t = result.trajectory.len();
    let (mass, what) = match PredictionMode::of(objective) {
        PredictionMode::Watch => (result.posterior.mass_on(t, result.theta_index), "allocation"),
        PredictionMode::Play => (
            result.posterior.class_mass_on(t, result.theta_index),
            "human class",
        ),
    };
    out.push_str(&format!(
        "final posterior mass on chosen {what}: {}\n",
        fmt_real(mass)
    ));
    let sum_alloc: f64 = result.fairness_allocation.iter().sum();
    let sum_effort: f64 = result.fairness_effort.iter().sum();
    out.push_str(&format!(
        "fairness: allocation {} effort {}\n",
        fmt_real(sum_alloc),
        fmt_real(sum_effort)
    ));
    out
}

pub const EVALUATION_HEADER: &str = "scenario_id,planner,objective,fairness_kind,lambda,\
snapshot_fraction,predicted_correct,posterior_mass,sum_fairness,completion_steps,family_size";

/// The cmd-evaluate CSV. Row order: suite order, then objective order, then
/// snapshot order.
pub fn evaluation_csv(outcome: &SuiteOutcome<f64>) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str(EVALUATION_HEADER);
    out.push('\n');
    for report in &outcome.reports {
        for planner in &report.outcomes {
            let (kind, lambda) = objective_columns(&planner.objective);
            for snap in &planner.snapshots {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    report.scenario_id,
                    planner.objective.name(),
                    fmt_real(planner.plan.objective_value),
                    kind,
                    lambda,
                    fmt_real(snap.fraction),
                    snap.predicted_correct,
                    fmt_real(snap.posterior_mass),
                    fmt_real(planner.sum_fairness()),
                    planner.completion_steps(),
                    planner.plan.family_size,
                ));
            }
        }
    }
    out
}

/// The cmd-posterior CSV: one row per prefix length, one column per
/// allocation in canonical order.
pub fn posterior_csv(trace: &PosteriorTrace<f64>) -> String {
    let width = trace.final_row().len();
    let mut out = String::with_capacity(1024);
    out.push_str("prefix_len");
    for j in 0..width {
        out.push_str(&format!(",theta_{j}"));
    }
    out.push('\n');
    for t in 0..trace.len() {
        out.push_str(&t.to_string());
        for j in 0..width {
            out.push(',');
            out.push_str(&fmt_real(trace.row(t)[j]));
        }
        out.push('\n');
    }
    out
}
