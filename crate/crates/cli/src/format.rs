//! On-disk formats: TOML scenario documents and trajectory (joint action)
//! documents. Parsing is strict — unknown fields are rejected with the TOML
//! parser's line/column diagnostics — and emission round-trips exactly.

use serde::{Deserialize, Serialize};
use teamplan_core::{
    Cell, EnvKind, Error, JointAction, Rect, Result, Scenario, Trajectory, ValidityPolicy, Vec2,
};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    id: String,
    /// "pursuit-evasion" or "grid-kitchen".
    kind: String,
    horizon: usize,
    validity_policy: String,
    /// Pursuit-evasion only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundsDoc>,
    /// Grid-kitchen only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    height: Option<usize>,
    /// Agent start positions; slot 0 is the human. Grid cells use integral
    /// coordinates.
    agents: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    obstacles: Vec<[i64; 2]>,
    subtasks: Vec<SubtaskDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsDoc {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubtaskDoc {
    target: [f64; 2],
    label: String,
}

const POLICY_NAMES: [(&str, fn() -> ValidityPolicy); 3] = [
    ("sharing-all-busy", ValidityPolicy::sharing_all_busy),
    ("no-sharing-empties", ValidityPolicy::no_sharing_empties),
    ("no-sharing-all-busy", ValidityPolicy::no_sharing_all_busy),
];

fn parse_policy(name: &str) -> Result<ValidityPolicy> {
    POLICY_NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f())
        .ok_or_else(|| {
            Error::Scenario(format!(
                "unknown validity_policy {name:?}; expected one of sharing-all-busy, \
                 no-sharing-empties, no-sharing-all-busy"
            ))
        })
}

fn policy_name(policy: &ValidityPolicy) -> &'static str {
    POLICY_NAMES
        .iter()
        .find(|(_, f)| f() == *policy)
        .map(|(n, _)| *n)
        .expect("every policy has a name")
}

fn require_cell(what: &str, i: usize, p: [f64; 2]) -> Result<Cell> {
    if p[0].fract() != 0.0 || p[1].fract() != 0.0 {
        return Err(Error::Scenario(format!(
            "{what} {i} ({}, {}) is not a grid cell",
            p[0], p[1]
        )));
    }
    Ok(Cell::new(p[0] as i64, p[1] as i64))
}

/// Parse a scenario document. Errors carry the TOML location for syntax and
/// unknown-field problems, and a field description for semantic ones.
pub fn parse_scenario(text: &str) -> Result<Scenario<f64>> {
    let doc: ScenarioDoc =
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string().trim().to_string()))?;
    let policy = parse_policy(&doc.validity_policy)?;
    let labels: Vec<String> = doc.subtasks.iter().map(|s| s.label.clone()).collect();
    let reject = |field: &str, kind: &str| -> Error {
        Error::Scenario(format!("field {field} does not apply to kind {kind:?}"))
    };
    let scenario = match doc.kind.as_str() {
        "pursuit-evasion" => {
            if doc.width.is_some() || doc.height.is_some() {
                return Err(reject("width/height", "pursuit-evasion"));
            }
            if !doc.obstacles.is_empty() {
                return Err(reject("obstacles", "pursuit-evasion"));
            }
            let bounds = doc
                .bounds
                .ok_or_else(|| Error::Scenario("pursuit-evasion requires bounds".into()))?;
            let step = doc
                .step_size
                .ok_or_else(|| Error::Scenario("pursuit-evasion requires step_size".into()))?;
            Scenario::continuous(
                doc.id,
                Rect::new(Vec2::new(bounds.min[0], bounds.min[1]), Vec2::new(bounds.max[0], bounds.max[1])),
                doc.agents.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
                doc.subtasks.iter().map(|s| Vec2::new(s.target[0], s.target[1])).collect(),
                labels,
                step,
                doc.horizon,
            )?
        }
        "grid-kitchen" => {
            if doc.bounds.is_some() || doc.step_size.is_some() {
                return Err(reject("bounds/step_size", "grid-kitchen"));
            }
            let width = doc
                .width
                .ok_or_else(|| Error::Scenario("grid-kitchen requires width".into()))?;
            let height = doc
                .height
                .ok_or_else(|| Error::Scenario("grid-kitchen requires height".into()))?;
            let starts = doc
                .agents
                .iter()
                .enumerate()
                .map(|(i, p)| require_cell("agent", i, *p))
                .collect::<Result<Vec<_>>>()?;
            let targets = doc
                .subtasks
                .iter()
                .enumerate()
                .map(|(i, s)| require_cell("subtask", i, s.target))
                .collect::<Result<Vec<_>>>()?;
            Scenario::grid(
                doc.id,
                width,
                height,
                starts,
                targets,
                labels,
                doc.obstacles.iter().map(|c| Cell::new(c[0], c[1])).collect(),
                doc.horizon,
            )?
        }
        other => {
            return Err(Error::Scenario(format!(
                "unknown kind {other:?}; expected pursuit-evasion or grid-kitchen"
            )))
        }
    };
    Ok(scenario.with_policy(policy))
}

/// Emit a scenario as a TOML document that [`parse_scenario`] reads back to
/// an identical value.
pub fn emit_scenario(s: &Scenario<f64>) -> String {
    let kind = match s.kind() {
        EnvKind::PursuitEvasion => "pursuit-evasion",
        EnvKind::GridKitchen => "grid-kitchen",
    };
    let grid = s.kind() == EnvKind::GridKitchen;
    let doc = ScenarioDoc {
        id: s.id().to_string(),
        kind: kind.to_string(),
        horizon: s.horizon(),
        validity_policy: policy_name(&s.policy()).to_string(),
        step_size: (!grid).then(|| s.step_size()),
        bounds: (!grid).then(|| BoundsDoc {
            min: [s.bounds().min.x, s.bounds().min.y],
            max: [s.bounds().max.x, s.bounds().max.y],
        }),
        width: grid.then(|| s.bounds().max.x as usize + 1),
        height: grid.then(|| s.bounds().max.y as usize + 1),
        agents: s.starts().iter().map(|p| [p.x, p.y]).collect(),
        obstacles: s.obstacles().iter().map(|c| [c.x, c.y]).collect(),
        subtasks: s
            .targets()
            .iter()
            .zip(s.labels())
            .map(|(t, l)| SubtaskDoc {
                target: [t.x, t.y],
                label: l.clone(),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("scenario serializes")
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    /// One entry per step: the joint action as per-agent displacement
    /// vectors, human first.
    steps: Vec<Vec<[f64; 2]>>,
}

/// Parse a trajectory document and replay it through the scenario dynamics.
/// Every listed action must execute verbatim: a move that would be clamped at
/// a boundary or blocked by an obstacle is rejected with its step index.
pub fn parse_trajectory(scenario: &Scenario<f64>, text: &str) -> Result<Trajectory<f64>> {
    let doc: TrajectoryDoc =
        toml::from_str(text).map_err(|e| Error::Structural(e.to_string().trim().to_string()))?;
    let actions: Vec<JointAction<f64>> = doc
        .steps
        .iter()
        .map(|mv| JointAction::new(mv.iter().map(|m| Vec2::new(m[0], m[1])).collect()))
        .collect();
    scenario.validate_actions(&actions)?;
    let mut positions = scenario.starts().to_vec();
    for (k, a) in actions.iter().enumerate() {
        for (i, m) in a.moves.iter().enumerate() {
            let next = scenario.agent_transition(positions[i], *m);
            if next.dist(positions[i] + *m) > 1e-9 {
                return Err(Error::Structural(format!(
                    "step {k}: agent {i} move ({}, {}) is blocked or leaves the arena",
                    m.x, m.y
                )));
            }
            positions[i] = next;
        }
    }
    scenario.trajectory_from_actions(&actions)
}

/// Emit a trajectory's actions for [`parse_trajectory`].
pub fn emit_trajectory(xi: &Trajectory<f64>) -> String {
    let doc = TrajectoryDoc {
        steps: xi
            .steps
            .iter()
            .map(|s| s.action.moves.iter().map(|m| [m.x, m.y]).collect())
            .collect(),
    };
    toml::to_string(&doc).expect("trajectory serializes")
}
