//! The Boltzmann-rational Bayesian observer: watches a trajectory unfold and
//! maintains a posterior over the allocation set, with an optional
//! human-marginalized view for the playing mode.
//!
//! Per step the observer scores every candidate action by its Q value under
//! each hypothesis and treats the team as softmax-rational. Because the joint
//! Q is a sum of per-agent terms, the joint softmax factorizes exactly into
//! per-agent softmaxes, which is how everything here is computed. All
//! probability math runs in log space with max-subtraction.

use crate::domain::{
    human_class_partition, human_equivalence_class, Allocation, JointState, ObserverConfig,
    SubtaskMask, Trajectory,
};
use crate::env::Scenario;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scalar::Real;
use std::collections::HashMap;

/// Per-agent candidate action lists defining the per-step normalization set.
/// `None` marks an agent whose actions the observer ignores (its factor is 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid<T> {
    pub per_agent: Vec<Option<Vec<Vec2<T>>>>,
}

impl<T: Real> ActionGrid<T> {
    /// Every agent observed.
    pub fn full(scenario: &Scenario<T>) -> Self {
        let cands = scenario.agent_action_candidates();
        ActionGrid {
            per_agent: vec![Some(cands); scenario.agent_count()],
        }
    }

    /// The human slot (agent 0) ignored; robots observed.
    pub fn robots_only(scenario: &Scenario<T>) -> Self {
        let mut grid = Self::full(scenario);
        grid.per_agent[0] = None;
        grid
    }

    pub fn from_config(scenario: &Scenario<T>, config: &ObserverConfig<T>) -> Self {
        if config.include_human_actions {
            Self::full(scenario)
        } else {
            Self::robots_only(scenario)
        }
    }

    pub fn validate(&self, scenario: &Scenario<T>) -> Result<()> {
        if self.per_agent.len() != scenario.agent_count() {
            return Err(Error::Structural(format!(
                "action grid covers {} agents, scenario has {}",
                self.per_agent.len(),
                scenario.agent_count()
            )));
        }
        if self
            .per_agent
            .iter()
            .any(|c| c.as_ref().is_some_and(|v| v.is_empty()))
        {
            return Err(Error::Config(
                "action grid has an empty candidate set".into(),
            ));
        }
        Ok(())
    }
}

/// Log-softmax with max-subtraction; shift-invariant by construction.
pub fn log_softmax<T: Real>(scores: &[T]) -> Vec<T> {
    let max = scores
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let sum: T = scores.iter().map(|&s| (s - max).exp()).sum();
    let lse = max + sum.ln();
    scores.iter().map(|&s| s - lse).collect()
}

/// Index of the candidate nearest to `m` (ties break toward the lower index).
fn nearest_candidate<T: Real>(candidates: &[Vec2<T>], m: Vec2<T>) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, c) in candidates.iter().enumerate() {
        let d = m.dist(*c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Log of one agent's softmax factor: the observed move (snapped onto the
/// candidate list) scored against every candidate by the negative cost-to-go
/// of where the move lands.
pub(crate) fn agent_step_log_factor<T: Real>(
    scenario: &Scenario<T>,
    pos: Vec2<T>,
    remaining: SubtaskMask,
    observed: Vec2<T>,
    beta: T,
    candidates: &[Vec2<T>],
) -> Result<T> {
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        let next = scenario.agent_transition(pos, *c);
        let rem = remaining.minus(scenario.touched_at(next));
        scores.push(beta * -scenario.agent_cost_to_go(next, rem)?);
    }
    let obs = nearest_candidate(candidates, observed);
    Ok(log_softmax(&scores)[obs])
}

fn step_log_likelihood<T: Real>(
    scenario: &Scenario<T>,
    theta: &Allocation,
    s: &JointState<T>,
    moves: &[Vec2<T>],
    beta: T,
    grid: &ActionGrid<T>,
) -> Result<T> {
    let mut log_p = T::zero();
    for i in theta.agents() {
        let Some(cands) = &grid.per_agent[i.0] else {
            continue;
        };
        let remaining = theta.mask_of(i).minus(s.reached[i.0]);
        log_p = log_p
            + agent_step_log_factor(scenario, s.positions[i.0], remaining, moves[i.0], beta, cands)?;
    }
    Ok(log_p)
}

/// P(a | s, θ): the Boltzmann likelihood of one observed joint action against
/// the candidate grid. Exact per-agent factorization of the joint softmax.
pub fn step_likelihood<T: Real>(
    scenario: &Scenario<T>,
    theta: &Allocation,
    s: &JointState<T>,
    a: &crate::domain::JointAction<T>,
    beta: T,
    grid: &ActionGrid<T>,
) -> Result<T> {
    grid.validate(scenario)?;
    if a.moves.len() != scenario.agent_count() {
        return Err(Error::Structural(format!(
            "action has {} moves for {} agents",
            a.moves.len(),
            scenario.agent_count()
        )));
    }
    Ok(step_log_likelihood(scenario, theta, s, &a.moves, beta, grid)?.exp())
}

/// log P(ξ | θ): sum of per-step log likelihoods over the whole trajectory.
pub fn trajectory_log_likelihood<T: Real>(
    scenario: &Scenario<T>,
    theta: &Allocation,
    xi: &Trajectory<T>,
    config: &ObserverConfig<T>,
) -> Result<T> {
    config.validate()?;
    scenario.check_consistency(xi)?;
    let grid = ActionGrid::from_config(scenario, config);
    grid.validate(scenario)?;
    let mut total = T::zero();
    for step in &xi.steps {
        total = total
            + step_log_likelihood(
                scenario,
                theta,
                &step.state,
                &step.action.moves,
                config.beta,
                &grid,
            )?;
    }
    Ok(total)
}

/// The posterior over Θ after every trajectory prefix. Row 0 is the prior;
/// row t conditions on the first t steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTrace<T> {
    pub allocations: Vec<Allocation>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> PosteriorTrace<T> {
    /// Number of prefix rows (trajectory length + 1).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.rows[t]
    }

    pub fn final_row(&self) -> &[T] {
        self.rows.last().expect("trace has at least the prior row")
    }

    /// Posterior mass on one allocation after t steps.
    pub fn mass_on(&self, t: usize, idx: usize) -> T {
        self.rows[t][idx]
    }

    /// Posterior mass on the human-equivalence class of `idx` after t steps.
    pub fn class_mass_on(&self, t: usize, idx: usize) -> T {
        let human = self.allocations[idx].human_subtasks();
        self.rows[t]
            .iter()
            .zip(&self.allocations)
            .filter(|(_, a)| a.human_subtasks() == human)
            .map(|(&p, _)| p)
            .sum()
    }
}

pub(crate) fn normalize_log_weights<T: Real>(log_w: &[T]) -> Result<Vec<T>> {
    let max = log_w
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if !max.is_finite() {
        return Err(Error::Numerical(
            "posterior mass vanished for every allocation".into(),
        ));
    }
    let unnorm: Vec<T> = log_w.iter().map(|&w| (w - max).exp()).collect();
    let sum: T = unnorm.iter().copied().sum();
    Ok(unnorm.into_iter().map(|u| u / sum).collect())
}

/// Bayesian inverse planning over the framed allocation set: posterior rows
/// for every prefix of `xi`, computed incrementally in log space.
pub fn posterior<T: Real>(
    scenario: &Scenario<T>,
    theta_set: &[Allocation],
    xi: &Trajectory<T>,
    config: &ObserverConfig<T>,
) -> Result<PosteriorTrace<T>> {
    config.validate()?;
    let prior = config.prior.resolve(theta_set.len())?;
    scenario.check_consistency(xi)?;
    let grid = ActionGrid::from_config(scenario, config);
    grid.validate(scenario)?;

    let mut log_w: Vec<T> = prior.iter().map(|&p| p.ln()).collect();
    let mut rows = Vec::with_capacity(xi.len() + 1);
    rows.push(prior.clone());
    // Per-step memo: an agent's factor depends only on its remaining-target
    // mask, and distinct masks across Θ are few.
    let mut memo: HashMap<(usize, u16), T> = HashMap::new();
    for step in &xi.steps {
        memo.clear();
        for (j, theta) in theta_set.iter().enumerate() {
            let mut lp = T::zero();
            for i in theta.agents() {
                let Some(cands) = &grid.per_agent[i.0] else {
                    continue;
                };
                let remaining = theta.mask_of(i).minus(step.state.reached[i.0]);
                let key = (i.0, remaining.0);
                let factor = match memo.get(&key) {
                    Some(&f) => f,
                    None => {
                        let f = agent_step_log_factor(
                            scenario,
                            step.state.positions[i.0],
                            remaining,
                            step.action.moves[i.0],
                            config.beta,
                            cands,
                        )?;
                        memo.insert(key, f);
                        f
                    }
                };
                lp = lp + factor;
            }
            log_w[j] = log_w[j] + lp;
        }
        rows.push(normalize_log_weights(&log_w)?);
    }
    Ok(PosteriorTrace {
        allocations: theta_set.to_vec(),
        rows,
    })
}

/// Σ over θ' in H(theta) of P(θ' | ξ): the playing-mode posterior on the
/// human's own subtask set, evaluated on the full trajectory.
pub fn human_marginal_posterior<T: Real>(
    scenario: &Scenario<T>,
    theta_set: &[Allocation],
    xi: &Trajectory<T>,
    config: &ObserverConfig<T>,
    theta: &Allocation,
) -> Result<T> {
    // Validates membership before any heavy work.
    human_equivalence_class(theta, theta_set)?;
    let trace = posterior(scenario, theta_set, xi, config)?;
    let idx = theta_set
        .iter()
        .position(|t| t == theta)
        .expect("membership checked above");
    Ok(trace.class_mass_on(trace.len() - 1, idx))
}

/// What an onlooker is asked to predict: the full allocation (watching) or
/// only the human's subtask set (playing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictionMode {
    Watch,
    Play,
}

impl PredictionMode {
    /// The mode an objective is scored and predicted under. Play objectives
    /// ask for the human class; everything else asks for the full allocation.
    pub fn of<T>(objective: &crate::domain::Objective<T>) -> Self {
        match objective {
            crate::domain::Objective::LegiblePlay
            | crate::domain::Objective::FairLegiblePlay { .. } => PredictionMode::Play,
            _ => PredictionMode::Watch,
        }
    }
}

/// Maximum-a-posteriori prediction at prefix length t, as an index into the
/// trace's allocation list. Watch mode: the argmax allocation. Play mode: the
/// canonical representative (lowest member index) of the argmax
/// human-equivalence class. Ties break toward the lower index.
pub fn map_prediction<T: Real>(
    trace: &PosteriorTrace<T>,
    mode: PredictionMode,
    t: usize,
) -> Result<usize> {
    if t >= trace.rows.len() {
        return Err(Error::Structural(format!(
            "prefix {t} out of range for a trace of {} rows",
            trace.rows.len()
        )));
    }
    let row = &trace.rows[t];
    match mode {
        PredictionMode::Watch => {
            let mut best = 0;
            for (j, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = j;
                }
            }
            Ok(best)
        }
        PredictionMode::Play => {
            let classes = human_class_partition(&trace.allocations);
            let mut best = 0;
            let mut best_mass = T::neg_infinity();
            for (c, members) in classes.iter().enumerate() {
                let mass: T = members.iter().map(|&j| row[j]).sum();
                if mass > best_mass {
                    best_mass = mass;
                    best = c;
                }
            }
            Ok(classes[best][0])
        }
    }
}
