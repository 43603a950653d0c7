//! Core value types: subtasks, agents, allocations, joint states and
//! trajectories, plus the observer/objective configuration shared by the
//! planner and the evaluation harness.
//!
//! Everything here is an immutable value; nothing borrows an environment.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scalar::{real, Real};
use std::collections::BTreeSet;
use std::fmt;

/// Identifies one subtask (an atomic target the team must reach).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubtaskId(pub usize);

impl fmt::Display for SubtaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Identifies one teammate. Agent 0 is the human slot by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

impl AgentId {
    pub const HUMAN: AgentId = AgentId(0);

    pub fn is_human(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_human() {
            write!(f, "h")
        } else {
            write!(f, "r{}", self.0)
        }
    }
}

/// Compact subtask set, usable as a cache key. Supports up to 16 subtasks,
/// comfortably above the enumeration cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SubtaskMask(pub u16);

impl SubtaskMask {
    pub fn empty() -> Self {
        SubtaskMask(0)
    }

    pub fn singleton(t: SubtaskId) -> Self {
        SubtaskMask(1 << t.0)
    }

    pub fn full(count: usize) -> Self {
        debug_assert!(count <= 16);
        SubtaskMask(((1u32 << count) - 1) as u16)
    }

    pub fn contains(self, t: SubtaskId) -> bool {
        self.0 & (1 << t.0) != 0
    }

    pub fn insert(&mut self, t: SubtaskId) {
        self.0 |= 1 << t.0;
    }

    pub fn remove(&mut self, t: SubtaskId) {
        self.0 &= !(1 << t.0);
    }

    pub fn union(self, other: Self) -> Self {
        SubtaskMask(self.0 | other.0)
    }

    pub fn minus(self, other: Self) -> Self {
        SubtaskMask(self.0 & !other.0)
    }

    pub fn contains_all(self, other: Self) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = SubtaskId> {
        (0..16).filter_map(move |i| {
            if self.0 & (1 << i) != 0 {
                Some(SubtaskId(i))
            } else {
                None
            }
        })
    }
}

impl FromIterator<SubtaskId> for SubtaskMask {
    fn from_iter<I: IntoIterator<Item = SubtaskId>>(iter: I) -> Self {
        let mut m = SubtaskMask::empty();
        for t in iter {
            m.insert(t);
        }
        m
    }
}

/// Whether several agents may hold the same subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sharing {
    NoSharing,
    SharingAllowed,
}

/// What counts as a valid allocation in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValidityPolicy {
    pub sharing: Sharing,
    /// When set, every agent must hold at least one subtask.
    pub all_busy: bool,
}

impl ValidityPolicy {
    /// Shared targets, nobody idle (continuous pursuit-style environments).
    pub fn sharing_all_busy() -> Self {
        ValidityPolicy {
            sharing: Sharing::SharingAllowed,
            all_busy: true,
        }
    }

    /// Exclusive targets, idle agents allowed (grid kitchen environments).
    pub fn no_sharing_empties() -> Self {
        ValidityPolicy {
            sharing: Sharing::NoSharing,
            all_busy: false,
        }
    }

    pub fn no_sharing_all_busy() -> Self {
        ValidityPolicy {
            sharing: Sharing::NoSharing,
            all_busy: true,
        }
    }
}

/// An assignment of every subtask to one or more agents. Index i holds the
/// subtask set of agent i; agent 0 is the human slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    assignments: Vec<BTreeSet<SubtaskId>>,
}

impl Allocation {
    pub fn new(assignments: Vec<BTreeSet<SubtaskId>>) -> Self {
        Allocation { assignments }
    }

    pub fn agent_count(&self) -> usize {
        self.assignments.len()
    }

    pub fn subtasks_of(&self, agent: AgentId) -> &BTreeSet<SubtaskId> {
        &self.assignments[agent.0]
    }

    pub fn human_subtasks(&self) -> &BTreeSet<SubtaskId> {
        self.subtasks_of(AgentId::HUMAN)
    }

    pub fn mask_of(&self, agent: AgentId) -> SubtaskMask {
        self.assignments[agent.0].iter().copied().collect()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.assignments.len()).map(AgentId)
    }

    /// Union of all agents' subtask sets equals the full subtask set.
    pub fn covers(&self, subtask_count: usize) -> bool {
        let mut seen = SubtaskMask::empty();
        for set in &self.assignments {
            for &t in set {
                seen.insert(t);
            }
        }
        seen == SubtaskMask::full(subtask_count)
    }

    /// Checks the per-scenario validity policy (not coverage).
    pub fn satisfies(&self, policy: &ValidityPolicy) -> bool {
        if policy.all_busy && self.assignments.iter().any(|s| s.is_empty()) {
            return false;
        }
        if policy.sharing == Sharing::NoSharing {
            let mut seen = SubtaskMask::empty();
            for set in &self.assignments {
                for &t in set {
                    if seen.contains(t) {
                        return false;
                    }
                    seen.insert(t);
                }
            }
        }
        true
    }

    pub fn is_valid(&self, subtask_count: usize, policy: &ValidityPolicy) -> bool {
        self.covers(subtask_count) && self.satisfies(policy)
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, set) in self.assignments.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}=", AgentId(i))?;
            if set.is_empty() {
                write!(f, "-")?;
            } else {
                for (j, t) in set.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", t.0)?;
                }
            }
        }
        Ok(())
    }
}

/// Supported agent/subtask counts for exhaustive allocation enumeration.
pub const MAX_SUBTASKS: usize = 8;
pub const MAX_AGENTS: usize = 5;
/// Hard cap on raw assignment combinations before validity filtering.
pub const MAX_ALLOCATION_CANDIDATES: u64 = 1 << 20;

/// Enumerates every allocation of `subtask_count` subtasks to `agent_count`
/// agents that covers all subtasks and satisfies `policy`, in canonical
/// order: lexicographic by agent, then by subtask indices.
pub fn enumerate_allocations(
    agent_count: usize,
    subtask_count: usize,
    policy: &ValidityPolicy,
) -> Result<Vec<Allocation>> {
    if agent_count == 0 || subtask_count == 0 {
        return Err(Error::Config(
            "allocation enumeration needs at least one agent and one subtask".into(),
        ));
    }
    if subtask_count > MAX_SUBTASKS {
        return Err(Error::SizeLimit {
            what: "subtask count",
            got: subtask_count as u64,
            limit: MAX_SUBTASKS as u64,
        });
    }
    if agent_count > MAX_AGENTS {
        return Err(Error::SizeLimit {
            what: "agent count",
            got: agent_count as u64,
            limit: MAX_AGENTS as u64,
        });
    }
    // Per-subtask choice: one owner (no sharing) or any nonempty agent subset.
    let per_subtask: u64 = match policy.sharing {
        Sharing::NoSharing => agent_count as u64,
        Sharing::SharingAllowed => (1u64 << agent_count) - 1,
    };
    let candidates = per_subtask
        .checked_pow(subtask_count as u32)
        .unwrap_or(u64::MAX);
    if candidates > MAX_ALLOCATION_CANDIDATES {
        return Err(Error::SizeLimit {
            what: "allocation candidate count",
            got: candidates,
            limit: MAX_ALLOCATION_CANDIDATES,
        });
    }

    let mut out = Vec::new();
    let mut choice = vec![0u64; subtask_count];
    loop {
        let mut assignments = vec![BTreeSet::new(); agent_count];
        for (t, &c) in choice.iter().enumerate() {
            match policy.sharing {
                Sharing::NoSharing => {
                    assignments[c as usize].insert(SubtaskId(t));
                }
                Sharing::SharingAllowed => {
                    // c+1 encodes a nonempty agent subset bitmask.
                    let mask = c + 1;
                    for a in 0..agent_count {
                        if mask & (1 << a) != 0 {
                            assignments[a].insert(SubtaskId(t));
                        }
                    }
                }
            }
        }
        let alloc = Allocation::new(assignments);
        if alloc.satisfies(policy) {
            out.push(alloc);
        }

        // Odometer over per-subtask choices.
        let mut i = 0;
        loop {
            if i == subtask_count {
                out.sort();
                debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < per_subtask {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// All allocations in `all` whose human subtask set matches `theta`'s.
/// The result always contains `theta` itself.
pub fn human_equivalence_class(theta: &Allocation, all: &[Allocation]) -> Result<Vec<Allocation>> {
    if !all.contains(theta) {
        return Err(Error::NotAMember(theta.to_string()));
    }
    let human = theta.human_subtasks();
    Ok(all
        .iter()
        .filter(|t| t.human_subtasks() == human)
        .cloned()
        .collect())
}

/// Partition of the allocation list into human-equivalence classes, each a
/// sorted list of indices into `all`. Classes are ordered by their lowest
/// member index, so `class[0]` is the canonical representative.
pub fn human_class_partition(all: &[Allocation]) -> Vec<Vec<usize>> {
    let mut classes: Vec<(&BTreeSet<SubtaskId>, Vec<usize>)> = Vec::new();
    for (i, theta) in all.iter().enumerate() {
        let human = theta.human_subtasks();
        match classes.iter_mut().find(|(h, _)| *h == human) {
            Some((_, members)) => members.push(i),
            None => classes.push((human, vec![i])),
        }
    }
    classes.into_iter().map(|(_, members)| members).collect()
}

/// Joint team configuration: one position per agent plus the per-agent record
/// of which subtask targets have been reached so far. Tracking reach history
/// in the state keeps completion and cost-to-go Markov.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T> {
    pub positions: Vec<Vec2<T>>,
    /// Targets each agent has touched at some step up to now.
    pub reached: Vec<SubtaskMask>,
    pub step: usize,
}

impl<T: Real> JointState<T> {
    pub fn agent_count(&self) -> usize {
        self.positions.len()
    }

    pub fn position(&self, agent: AgentId) -> Vec2<T> {
        self.positions[agent.0]
    }
}

/// One action per agent. Displacements are used for both environments; the
/// grid environment restricts them to the five unit moves.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction<T> {
    pub moves: Vec<Vec2<T>>,
}

impl<T: Real> JointAction<T> {
    pub fn new(moves: Vec<Vec2<T>>) -> Self {
        JointAction { moves }
    }

    pub fn stay(agent_count: usize) -> Self {
        JointAction {
            moves: vec![Vec2::zero(); agent_count],
        }
    }
}

/// One observed step of the team.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<T> {
    pub state: JointState<T>,
    pub action: JointAction<T>,
}

/// A dynamics-consistent sequence of steps plus the resulting terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub steps: Vec<Step<T>>,
    pub terminal: JointState<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn initial_state(&self) -> &JointState<T> {
        self.steps.first().map(|s| &s.state).unwrap_or(&self.terminal)
    }

    /// State after `t` steps (t = len gives the terminal state).
    pub fn state_at(&self, t: usize) -> &JointState<T> {
        if t < self.steps.len() {
            &self.steps[t].state
        } else {
            &self.terminal
        }
    }

    /// Distance traveled by each agent, summed over per-step position deltas.
    pub fn distances(&self) -> Vec<T> {
        let n = self.terminal.agent_count();
        let mut d = vec![T::zero(); n];
        for t in 0..self.steps.len() {
            let a = &self.steps[t].state;
            let b = self.state_at(t + 1);
            for i in 0..n {
                d[i] = d[i] + a.positions[i].dist(b.positions[i]);
            }
        }
        d
    }
}

/// Prior over the enumerated allocation set.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior<T> {
    Uniform,
    Weights(Vec<T>),
}

impl<T: Real> Prior<T> {
    /// Materializes the prior as a probability vector of length `n`.
    pub fn resolve(&self, n: usize) -> Result<Vec<T>> {
        match self {
            Prior::Uniform => {
                if n == 0 {
                    return Err(Error::Config("empty allocation set".into()));
                }
                Ok(vec![T::one() / real_of(n); n])
            }
            Prior::Weights(w) => {
                if w.len() != n {
                    return Err(Error::Structural(format!(
                        "prior has {} entries for {} allocations",
                        w.len(),
                        n
                    )));
                }
                if w.iter().any(|&p| p < T::zero()) {
                    return Err(Error::Config("prior entries must be non-negative".into()));
                }
                let sum: T = w.iter().copied().sum();
                let tol = real::<T>(1e-9).max(T::epsilon() * real_of(16 * n.max(1)));
                if (sum - T::one()).abs() > tol {
                    return Err(Error::Config(format!("prior sums to {sum}, expected 1")));
                }
                Ok(w.clone())
            }
        }
    }
}

fn real_of<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count -> scalar")
}

/// Observer model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig<T> {
    pub prior: Prior<T>,
    /// Boltzmann rationality temperature, > 0.
    pub beta: T,
    /// Discount factor in [0, 1); only the value function uses it.
    pub gamma: T,
    /// Include the human slot's own actions in the likelihood. Off by
    /// default: the observer watches robot-generated motion before the human
    /// has moved.
    pub include_human_actions: bool,
}

impl<T: Real> Default for ObserverConfig<T> {
    fn default() -> Self {
        ObserverConfig {
            prior: Prior::Uniform,
            beta: T::one(),
            gamma: real(0.9),
            include_human_actions: false,
        }
    }
}

impl<T: Real> ObserverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > T::zero()) {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if !(self.gamma >= T::zero() && self.gamma < T::one()) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Which fairness functional to optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FairnessKind {
    /// Penalize deviation of each agent's subtask count from the even split.
    AllocationEquality,
    /// Penalize deviation of each agent's traveled distance from the even share.
    EffortEquality,
}

impl fmt::Display for FairnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairnessKind::AllocationEquality => write!(f, "allocation"),
            FairnessKind::EffortEquality => write!(f, "effort"),
        }
    }
}

/// Planning objective. The fair variants carry their fairness functional and
/// a non-negative trade-off weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective<T> {
    Efficient,
    LegibleWatch,
    LegiblePlay,
    FairLegibleWatch { fairness: FairnessKind, lambda: T },
    FairLegiblePlay { fairness: FairnessKind, lambda: T },
}

impl<T: Real> Objective<T> {
    pub fn fairness(&self) -> Option<FairnessKind> {
        match self {
            Objective::FairLegibleWatch { fairness, .. }
            | Objective::FairLegiblePlay { fairness, .. } => Some(*fairness),
            _ => None,
        }
    }

    pub fn lambda(&self) -> T {
        match self {
            Objective::FairLegibleWatch { lambda, .. }
            | Objective::FairLegiblePlay { lambda, .. } => *lambda,
            _ => T::zero(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Efficient => "efficient",
            Objective::LegibleWatch => "legible-watch",
            Objective::LegiblePlay => "legible-play",
            Objective::FairLegibleWatch { .. } => "fair-legible-watch",
            Objective::FairLegiblePlay { .. } => "fair-legible-play",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda() < T::zero() {
            return Err(Error::Config("lambda must be non-negative".into()));
        }
        Ok(())
    }
}
