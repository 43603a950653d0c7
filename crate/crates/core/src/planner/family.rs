//! Finite trajectory families: the lower-level search space. Each agent gets
//! a direct path to its assigned targets (optimal visiting order) plus one
//! detour path through every via-point on a coarse workspace lattice; the
//! family is the cross product across agents. The human slot (agent 0) holds
//! its start position — robots plan and move before the human does.

use crate::domain::{AgentId, Allocation, JointAction, SubtaskMask, Trajectory};
use crate::env::{EnvKind, Scenario};
use crate::error::{Error, Result};
use crate::geom::{Cell, Vec2};
use crate::scalar::{real, Real};

/// Default via-point lattice resolution (3 x 3 interior points).
pub const DEFAULT_VIA_LATTICE: usize = 3;
/// Default cap on family size; excess members are pruned by lowest detour.
pub const DEFAULT_FAMILY_CAP: usize = 10_000;
/// Hard bound on raw member tuples considered before pruning.
const MAX_RAW_MEMBERS: usize = 1_000_000;

/// One agent's candidate path, discretized into per-step moves. Positions are
/// the exact replay of the moves through the single-agent dynamics, so a
/// joint trajectory assembled from paths reproduces them bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentPath<T> {
    /// Detour point, if any; None is the direct path.
    pub via: Option<Vec2<T>>,
    pub moves: Vec<Vec2<T>>,
    /// moves.len() + 1 entries; positions[0] is the agent's start.
    pub positions: Vec<Vec2<T>>,
    /// Total distance traveled, summed exactly like trajectory distances.
    pub travel: T,
}

impl<T: Real> AgentPath<T> {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Position after t steps (clamped to the final position thereafter).
    pub fn position_at(&self, t: usize) -> Vec2<T> {
        self.positions[t.min(self.positions.len() - 1)]
    }
}

/// The enumerated lower-level search space for one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFamily<T> {
    pub theta: Allocation,
    /// Candidate paths per agent; the human slot always has exactly one
    /// (stationary) path.
    pub paths: Vec<Vec<AgentPath<T>>>,
    /// Member tuples (one path index per agent) in lexicographic order.
    /// Member 0 is always the all-direct tuple.
    pub members: Vec<Vec<usize>>,
}

impl<T: Real> TrajectoryFamily<T> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Steps needed by member m: the longest of its agent paths.
    pub fn member_len(&self, m: usize) -> usize {
        self.members[m]
            .iter()
            .enumerate()
            .map(|(i, &p)| self.paths[i][p].len())
            .max()
            .unwrap_or(0)
    }

    /// Per-agent travel distances of member m.
    pub fn member_travels(&self, m: usize) -> Vec<T> {
        self.members[m]
            .iter()
            .enumerate()
            .map(|(i, &p)| self.paths[i][p].travel)
            .collect()
    }

    /// Assembles member m into a joint trajectory by replaying the padded
    /// per-agent moves through the dynamics.
    pub fn member_trajectory(&self, scenario: &Scenario<T>, m: usize) -> Result<Trajectory<T>> {
        let k = self.member_len(m);
        let actions: Vec<JointAction<T>> = (0..k)
            .map(|t| {
                JointAction::new(
                    self.members[m]
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| {
                            let path = &self.paths[i][p];
                            if t < path.len() {
                                path.moves[t]
                            } else {
                                Vec2::zero()
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        scenario.trajectory_from_actions(&actions)
    }
}

/// Via-point candidates: an `lattice` x `lattice` grid over the workspace
/// interior (grid kind: snapped to free cells, deduplicated).
pub fn via_candidates<T: Real>(scenario: &Scenario<T>, lattice: usize) -> Vec<Vec2<T>> {
    let b = scenario.bounds();
    let mut out: Vec<Vec2<T>> = Vec::new();
    for iy in 0..lattice {
        for ix in 0..lattice {
            let fx = real::<T>((ix + 1) as f64) / real::<T>((lattice + 1) as f64);
            let fy = real::<T>((iy + 1) as f64) / real::<T>((lattice + 1) as f64);
            let p = Vec2::new(b.min.x + b.width() * fx, b.min.y + b.height() * fy);
            match scenario.kind() {
                EnvKind::PursuitEvasion => out.push(p),
                EnvKind::GridKitchen => {
                    let c = p.to_cell();
                    if scenario.bounds().contains_cell(c) && !scenario.obstacles().contains(&c) {
                        let snapped = c.to_vec2();
                        if !out.contains(&snapped) {
                            out.push(snapped);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Discretizes a continuous polyline into full-speed steps with a final
/// partial step per segment, folding each move through the dynamics so the
/// stored positions match a later replay exactly.
fn continuous_path<T: Real>(
    scenario: &Scenario<T>,
    start: Vec2<T>,
    via: Option<Vec2<T>>,
    waypoints: &[Vec2<T>],
) -> AgentPath<T> {
    let eps = real::<T>(1e-9);
    let step = scenario.step_size();
    let mut positions = vec![start];
    let mut moves = Vec::new();
    let mut travel = T::zero();
    let mut cur = start;
    for w in via.iter().chain(waypoints.iter()) {
        loop {
            let d = cur.dist(*w);
            if d <= eps {
                break;
            }
            let mv = if d <= step {
                *w - cur
            } else {
                (*w - cur).normalized().scale(step)
            };
            let next = scenario.agent_transition(cur, mv);
            travel = travel + cur.dist(next);
            moves.push(mv);
            positions.push(next);
            cur = next;
        }
    }
    AgentPath {
        via,
        moves,
        positions,
        travel,
    }
}

/// Builds a grid path along breadth-first routes, one native move per step.
fn grid_path<T: Real>(
    scenario: &Scenario<T>,
    start: Vec2<T>,
    via: Option<Vec2<T>>,
    order: &[crate::domain::SubtaskId],
) -> Result<AgentPath<T>> {
    let mut cells: Vec<Cell> = vec![start.to_cell()];
    if let Some(v) = via {
        let leg = scenario
            .grid_path_cells(*cells.last().unwrap(), v.to_cell())
            .ok_or_else(|| Error::Infeasible("via point is walled off".into()))?;
        cells.extend(leg.into_iter().skip(1));
    }
    for &t in order {
        let leg = scenario.grid_route(*cells.last().unwrap(), t)?;
        cells.extend(leg.into_iter().skip(1));
    }
    let mut positions = vec![start];
    let mut moves = Vec::new();
    let mut travel = T::zero();
    let mut cur = start;
    for c in cells.into_iter().skip(1) {
        let target: Vec2<T> = c.to_vec2();
        let mv = target - cur;
        let next = scenario.agent_transition(cur, mv);
        debug_assert_eq!(next.to_cell(), c);
        travel = travel + cur.dist(next);
        moves.push(mv);
        positions.push(next);
        cur = next;
    }
    Ok(AgentPath {
        via,
        moves,
        positions,
        travel,
    })
}

fn stationary_path<T: Real>(start: Vec2<T>) -> AgentPath<T> {
    AgentPath {
        via: None,
        moves: vec![],
        positions: vec![start],
        travel: T::zero(),
    }
}

/// Candidate paths for one robot: direct first, then one per via point, each
/// visiting the unreached assigned targets in optimal order. Paths exceeding
/// the horizon are dropped; identical move sequences are deduplicated.
pub(crate) fn robot_paths<T: Real>(
    scenario: &Scenario<T>,
    agent: AgentId,
    mask: SubtaskMask,
    lattice: usize,
) -> Result<Vec<AgentPath<T>>> {
    let start = scenario.starts()[agent.0];
    let remaining = mask.minus(scenario.touched_at(start));
    let mut out: Vec<AgentPath<T>> = Vec::new();
    let mut push = |p: AgentPath<T>| {
        if p.len() <= scenario.horizon() && !out.iter().any(|q| q.moves == p.moves) {
            out.push(p);
        }
    };
    match scenario.kind() {
        EnvKind::PursuitEvasion => {
            let order = scenario.visit_order(start, remaining)?;
            let waypoints: Vec<Vec2<T>> = order.iter().map(|&t| scenario.target(t)).collect();
            push(continuous_path(scenario, start, None, &waypoints));
            for via in via_candidates(scenario, lattice) {
                let order = scenario.visit_order(via, remaining)?;
                let waypoints: Vec<Vec2<T>> = order.iter().map(|&t| scenario.target(t)).collect();
                push(continuous_path(scenario, start, Some(via), &waypoints));
            }
        }
        EnvKind::GridKitchen => {
            let order = scenario.visit_order(start, remaining)?;
            push(grid_path(scenario, start, None, &order)?);
            for via in via_candidates(scenario, lattice) {
                let order = scenario.visit_order(via, remaining)?;
                push(grid_path(scenario, start, Some(via), &order)?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Infeasible(format!(
            "agent {agent} cannot finish its subtasks within horizon {}",
            scenario.horizon()
        )));
    }
    Ok(out)
}

/// Enumerates the deterministic trajectory family of one allocation.
pub fn enumerate_family<T: Real>(
    scenario: &Scenario<T>,
    theta: &Allocation,
    lattice: usize,
    cap: usize,
) -> Result<TrajectoryFamily<T>> {
    if theta.agent_count() != scenario.agent_count() {
        return Err(Error::Structural(format!(
            "allocation has {} agents, scenario has {}",
            theta.agent_count(),
            scenario.agent_count()
        )));
    }
    let mut paths = Vec::with_capacity(scenario.agent_count());
    for i in theta.agents() {
        if i.is_human() {
            paths.push(vec![stationary_path(scenario.starts()[i.0])]);
        } else {
            paths.push(robot_paths(scenario, i, theta.mask_of(i), lattice)?);
        }
    }
    let raw: usize = paths.iter().map(Vec::len).try_fold(1usize, |acc, n| {
        acc.checked_mul(n).filter(|&x| x <= MAX_RAW_MEMBERS)
    })
    .ok_or(Error::SizeLimit {
        what: "trajectory family candidate count",
        got: u64::MAX,
        limit: MAX_RAW_MEMBERS as u64,
    })?;

    // Lexicographic odometer over path indices.
    let mut members = Vec::with_capacity(raw.min(cap));
    let mut tuple = vec![0usize; paths.len()];
    'outer: loop {
        members.push(tuple.clone());
        let mut i = paths.len();
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            tuple[i] += 1;
            if tuple[i] < paths[i].len() {
                break;
            }
            tuple[i] = 0;
        }
    }
    if members.len() > cap {
        // Keep the lowest-detour members; the all-direct tuple always has the
        // minimum total travel, so it survives.
        let travel_of = |t: &Vec<usize>| -> T {
            t.iter()
                .enumerate()
                .map(|(i, &p)| paths[i][p].travel)
                .fold(T::zero(), |a, b| a + b)
        };
        members.sort_by(|a, b| {
            travel_of(a)
                .partial_cmp(&travel_of(b))
                .expect("finite travel")
                .then_with(|| a.cmp(b))
        });
        members.truncate(cap);
        members.sort();
    }
    Ok(TrajectoryFamily {
        theta: theta.clone(),
        paths,
        members,
    })
}
