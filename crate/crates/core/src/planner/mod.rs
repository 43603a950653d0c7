//! Bilevel planning. The upper level enumerates every valid allocation; the
//! lower level scores each member of that allocation's trajectory family
//! under the chosen objective and keeps the overall argmax (ties break to the
//! lowest allocation index, then the lowest member index).
//!
//! The lower level reproduces the observer's posterior arithmetic exactly —
//! same factors, same summation order, same normalization — via per-path
//! likelihood tables, so a plan's objective value matches an independent
//! posterior evaluation bit for bit.

mod fairness;
mod family;

pub use fairness::{distances_to_effort, fairness_allocation, fairness_effort, normalize_fairness};
pub use family::{
    enumerate_family, AgentPath, TrajectoryFamily, DEFAULT_FAMILY_CAP, DEFAULT_VIA_LATTICE,
};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    human_class_partition, Allocation, FairnessKind, Objective, ObserverConfig, SubtaskMask,
    Trajectory,
};
use crate::env::Scenario;
use crate::error::{Error, Result};
use crate::observer::{
    agent_step_log_factor, normalize_log_weights, posterior, ActionGrid, PosteriorTrace,
    PredictionMode,
};
use crate::scalar::{real, real_of_usize, Real};

/// How the efficient baseline turns allocation values into a choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Highest V, ties to the lowest canonical index.
    Argmax,
    /// Sample proportionally to V with the run's seed.
    Sample,
}

/// Everything a planning call needs beyond the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig<T> {
    pub observer: ObserverConfig<T>,
    pub selection: SelectionMode,
    /// Score the mean posterior mass over all prefixes instead of the final
    /// posterior only.
    pub prefix_weighted: bool,
    /// Via-point lattice resolution for trajectory families.
    pub via_lattice: usize,
    /// Family size cap; larger families are pruned by lowest detour.
    pub family_cap: usize,
}

impl<T: Real> Default for PlannerConfig<T> {
    fn default() -> Self {
        PlannerConfig {
            observer: ObserverConfig::default(),
            selection: SelectionMode::Argmax,
            prefix_weighted: false,
            via_lattice: DEFAULT_VIA_LATTICE,
            family_cap: DEFAULT_FAMILY_CAP,
        }
    }
}

/// Outcome of one planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult<T> {
    /// Index of the chosen allocation in canonical enumeration order.
    pub theta_index: usize,
    pub theta: Allocation,
    /// Index of the chosen member within the allocation's family.
    pub member_index: usize,
    /// Size of the chosen allocation's trajectory family.
    pub family_size: usize,
    pub trajectory: Trajectory<T>,
    pub objective_value: T,
    /// Posterior trace of the chosen trajectory over the full allocation set.
    pub posterior: PosteriorTrace<T>,
    /// Normalized per-agent fairness of the plan, both functionals.
    pub fairness_allocation: Vec<T>,
    pub fairness_effort: Vec<T>,
}

/// Upper-level search space shared by every planner: the allocation set with
/// one trajectory family per feasible allocation.
struct Space<T> {
    thetas: Vec<Allocation>,
    /// masks[j][i]: subtasks allocation j assigns to agent i.
    masks: Vec<Vec<SubtaskMask>>,
    prior: Vec<T>,
    prior_ln: Vec<T>,
    families: Vec<Option<TrajectoryFamily<T>>>,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    /// Largest total travel across every feasible member: the effort-fairness
    /// normalizer.
    effort_scale: T,
    /// First infeasibility encountered, reported when nothing is feasible.
    infeasible: Option<String>,
}

impl<T: Real> Space<T> {
    fn build(scenario: &Scenario<T>, config: &PlannerConfig<T>) -> Result<Self> {
        config.observer.validate()?;
        if scenario.horizon() == 0 {
            return Err(Error::Infeasible(
                "the horizon is 0; no subtask can be completed".into(),
            ));
        }
        let thetas = scenario.allocations()?;
        if thetas.is_empty() {
            return Err(Error::Infeasible(
                "no allocation satisfies the scenario's validity policy".into(),
            ));
        }
        let prior = config.observer.prior.resolve(thetas.len())?;
        let prior_ln: Vec<T> = prior.iter().map(|&p| p.ln()).collect();
        let masks: Vec<Vec<SubtaskMask>> = thetas
            .iter()
            .map(|t| t.agents().map(|i| t.mask_of(i)).collect())
            .collect();
        let mut families = Vec::with_capacity(thetas.len());
        let mut infeasible = None;
        let mut effort_scale = T::zero();
        for theta in &thetas {
            match enumerate_family(scenario, theta, config.via_lattice, config.family_cap) {
                Ok(fam) => {
                    for m in 0..fam.len() {
                        let total: T = fam.member_travels(m).into_iter().sum();
                        if total > effort_scale {
                            effort_scale = total;
                        }
                    }
                    families.push(Some(fam));
                }
                Err(e) if e.is_infeasible() => {
                    if infeasible.is_none() {
                        // Keep the bare message: no_feasible_error re-wraps it.
                        infeasible = Some(match e {
                            Error::Infeasible(m) => m,
                            other => other.to_string(),
                        });
                    }
                    families.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        let classes = human_class_partition(&thetas);
        let mut class_of = vec![0usize; thetas.len()];
        for (c, members) in classes.iter().enumerate() {
            for &j in members {
                class_of[j] = c;
            }
        }
        Ok(Space {
            thetas,
            masks,
            prior,
            prior_ln,
            families,
            classes,
            class_of,
            effort_scale,
            infeasible,
        })
    }

    fn no_feasible_error(&self) -> Error {
        Error::Infeasible(
            self.infeasible
                .clone()
                .unwrap_or_else(|| "no feasible allocation".into()),
        )
    }

    /// Posterior mass backing the legibility objective: the chosen
    /// allocation's own mass when watched, its human-equivalence class mass
    /// when played with.
    fn mass(&self, row: &[T], j: usize, mode: PredictionMode) -> T {
        match mode {
            PredictionMode::Watch => row[j],
            PredictionMode::Play => self.classes[self.class_of[j]]
                .iter()
                .map(|&h| row[h])
                .sum(),
        }
    }
}

/// Cumulative per-step log factors of one agent path under one hypothesized
/// assignment, plus the constant factor of holding the final position.
struct LikEntry<T> {
    steps: Vec<T>,
    stay: T,
}

/// Key: (agent, assigned mask the path was built for, path index, hypothesis
/// mask). Paths are deterministic per (agent, mask), so entries are shared
/// across allocations.
type LikTables<T> = HashMap<(usize, u16, usize, u16), LikEntry<T>>;

fn build_tables<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
    space: &Space<T>,
) -> Result<(LikTables<T>, Vec<bool>)> {
    let grid = ActionGrid::from_config(scenario, &config.observer);
    grid.validate(scenario)?;
    let observed: Vec<bool> = grid.per_agent.iter().map(Option::is_some).collect();
    let beta = config.observer.beta;
    let mut tables = LikTables::new();
    for fam in space.families.iter().flatten() {
        for i in 0..scenario.agent_count() {
            let Some(cands) = &grid.per_agent[i] else {
                continue;
            };
            let own = fam.theta.mask_of(crate::domain::AgentId(i));
            for (pi, path) in fam.paths[i].iter().enumerate() {
                for hyp in space.masks.iter().map(|m| m[i]) {
                    let key = (i, own.0, pi, hyp.0);
                    if tables.contains_key(&key) {
                        continue;
                    }
                    // Fold the reach history exactly as a replay would.
                    let mut reached = scenario.touched_at(path.positions[0]);
                    let mut steps = Vec::with_capacity(path.len());
                    for t in 0..path.len() {
                        let f = agent_step_log_factor(
                            scenario,
                            path.positions[t],
                            hyp.minus(reached),
                            path.moves[t],
                            beta,
                            cands,
                        )?;
                        steps.push(f);
                        reached = reached.union(scenario.touched_at(path.positions[t + 1]));
                    }
                    let last = *path.positions.last().expect("non-empty positions");
                    let stay = agent_step_log_factor(
                        scenario,
                        last,
                        hyp.minus(reached),
                        crate::geom::Vec2::zero(),
                        beta,
                        cands,
                    )?;
                    tables.insert(key, LikEntry { steps, stay });
                }
            }
        }
    }
    Ok((tables, observed))
}

/// Shared lower-level scorer for the legible and fair planners.
fn bilevel_search<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
    mode: PredictionMode,
    fairness: Option<(FairnessKind, T)>,
) -> Result<PlanResult<T>> {
    let space = Space::build(scenario, config)?;
    let (tables, observed) = build_tables(scenario, config, &space)?;
    let n = scenario.agent_count();
    let subtask_count = scenario.subtask_count();

    let mut best: Option<(T, usize, usize)> = None;
    for (j, fam) in space.families.iter().enumerate() {
        let Some(fam) = fam else { continue };
        // Resolve table references once per allocation so the member loop is
        // pure indexing.
        let lik: Vec<Vec<Vec<&LikEntry<T>>>> = (0..n)
            .map(|i| {
                if !observed[i] {
                    return vec![];
                }
                let own = space.masks[j][i];
                fam.paths[i]
                    .iter()
                    .enumerate()
                    .map(|(pi, _)| {
                        space
                            .masks
                            .iter()
                            .map(|m| &tables[&(i, own.0, pi, m[i].0)])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let fair_alloc: Option<Vec<T>> = match fairness {
            Some((FairnessKind::AllocationEquality, _)) => Some(normalize_fairness(
                &fairness_allocation(&fam.theta, subtask_count),
                real_of_usize(subtask_count),
            )),
            _ => None,
        };

        for m in 0..fam.len() {
            let tuple = &fam.members[m];
            let k = fam.member_len(m);
            let mut log_w = space.prior_ln.clone();
            let mut prefix_acc = T::zero();
            for t in 0..k {
                for h in 0..space.thetas.len() {
                    let mut lp = T::zero();
                    for i in 0..n {
                        if !observed[i] {
                            continue;
                        }
                        let entry = lik[i][tuple[i]][h];
                        lp = lp
                            + if t < entry.steps.len() {
                                entry.steps[t]
                            } else {
                                entry.stay
                            };
                    }
                    log_w[h] = log_w[h] + lp;
                }
                if config.prefix_weighted {
                    let row = normalize_log_weights(&log_w)?;
                    prefix_acc = prefix_acc + space.mass(&row, j, mode);
                }
            }
            let p = if config.prefix_weighted && k > 0 {
                prefix_acc / real_of_usize(k)
            } else if k > 0 {
                space.mass(&normalize_log_weights(&log_w)?, j, mode)
            } else {
                space.mass(&space.prior, j, mode)
            };
            let value = match &fairness {
                None => p,
                Some((kind, lambda)) => {
                    let f_hat: Vec<T> = match kind {
                        FairnessKind::AllocationEquality => {
                            fair_alloc.clone().expect("precomputed")
                        }
                        FairnessKind::EffortEquality => normalize_fairness(
                            &distances_to_effort(&fam.member_travels(m)),
                            space.effort_scale,
                        ),
                    };
                    let term = match mode {
                        PredictionMode::Watch => f_hat.iter().copied().sum(),
                        PredictionMode::Play => f_hat[0],
                    };
                    *lambda * term + p
                }
            };
            if best.map_or(true, |(bv, _, _)| value > bv) {
                best = Some((value, j, m));
            }
        }
    }
    let (value, j, m) = best.ok_or_else(|| space.no_feasible_error())?;
    finish(scenario, config, &space, j, m, value)
}

fn finish<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
    space: &Space<T>,
    j: usize,
    m: usize,
    objective_value: T,
) -> Result<PlanResult<T>> {
    let fam = space.families[j].as_ref().expect("chosen family");
    let trajectory = fam.member_trajectory(scenario, m)?;
    let trace = posterior(scenario, &space.thetas, &trajectory, &config.observer)?;
    let fairness_allocation_hat = normalize_fairness(
        &fairness_allocation::<T>(&fam.theta, scenario.subtask_count()),
        real_of_usize(scenario.subtask_count()),
    );
    let fairness_effort_hat = normalize_fairness(
        &fairness_effort(&trajectory),
        space.effort_scale,
    );
    Ok(PlanResult {
        theta_index: j,
        theta: fam.theta.clone(),
        member_index: m,
        family_size: fam.len(),
        trajectory,
        objective_value,
        posterior: trace,
        fairness_allocation: fairness_allocation_hat,
        fairness_effort: fairness_effort_hat,
    })
}

/// V-proportional selection weights of the efficient baseline over the full
/// allocation set (zero for infeasible allocations; the vector sums to 1).
pub fn efficient_selection_weights<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
) -> Result<Vec<T>> {
    let space = Space::build(scenario, config)?;
    let values = efficient_values(scenario, config, &space)?;
    let sum: T = values.iter().copied().sum();
    if !(sum > T::zero()) {
        return Err(space.no_feasible_error());
    }
    Ok(values.into_iter().map(|v| v / sum).collect())
}

fn efficient_values<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
    space: &Space<T>,
) -> Result<Vec<T>> {
    let s0 = scenario.initial_state();
    let mut values = vec![T::zero(); space.thetas.len()];
    for (j, fam) in space.families.iter().enumerate() {
        if fam.is_some() {
            values[j] = scenario.value(&space.thetas[j], &s0, config.observer.gamma)?;
        }
    }
    Ok(values)
}

/// Draws an index proportionally to `weights` using the run's seed. The
/// weights must be non-negative; a degenerate tail falls back to the last
/// positive weight.
pub fn sample_index<T: Real>(weights: &[T], seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: T = real(rng.gen::<f64>());
    let total: T = weights.iter().copied().sum();
    let mut cum = T::zero();
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > T::zero() {
            last_positive = i;
        }
        cum = cum + w;
        if u * total < cum {
            return i;
        }
    }
    last_positive
}

/// Efficiency baseline: pick an allocation by V_θ(s⁰) = γ^k (argmax or
/// V-proportional sampling), then follow the direct member of its family.
pub fn plan_efficient<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
    seed: u64,
) -> Result<PlanResult<T>> {
    let space = Space::build(scenario, config)?;
    let values = efficient_values(scenario, config, &space)?;
    if values.iter().all(|&v| !(v > T::zero())) {
        return Err(space.no_feasible_error());
    }
    let j = match config.selection {
        SelectionMode::Argmax => {
            let mut best = 0;
            for (i, &v) in values.iter().enumerate() {
                if v > values[best] {
                    best = i;
                }
            }
            best
        }
        SelectionMode::Sample => sample_index(&values, seed),
    };
    finish(scenario, config, &space, j, 0, values[j])
}

/// Maximize the watching observer's final posterior mass on the executed
/// allocation.
pub fn plan_legible_watch<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
) -> Result<PlanResult<T>> {
    bilevel_search(scenario, config, PredictionMode::Watch, None)
}

/// Maximize the posterior mass on the human-equivalence class of the executed
/// allocation — what a playing observer needs to pick their own subtasks.
pub fn plan_legible_play<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
) -> Result<PlanResult<T>> {
    bilevel_search(scenario, config, PredictionMode::Play, None)
}

/// Trade legibility off against fairness: λ · fairness term + posterior mass.
/// Watching mode sums normalized fairness over the team; playing mode uses
/// the human's own term.
pub fn plan_fair_legible<T: Real>(
    scenario: &Scenario<T>,
    config: &PlannerConfig<T>,
    mode: PredictionMode,
    fairness: FairnessKind,
    lambda: T,
) -> Result<PlanResult<T>> {
    if lambda < T::zero() {
        return Err(Error::Config("lambda must be non-negative".into()));
    }
    bilevel_search(scenario, config, mode, Some((fairness, lambda)))
}

/// Dispatch on the objective. The seed only matters for the efficient
/// baseline in sampling mode.
pub fn plan<T: Real>(
    scenario: &Scenario<T>,
    objective: &Objective<T>,
    config: &PlannerConfig<T>,
    seed: u64,
) -> Result<PlanResult<T>> {
    objective.validate()?;
    match objective {
        Objective::Efficient => plan_efficient(scenario, config, seed),
        Objective::LegibleWatch => plan_legible_watch(scenario, config),
        Objective::LegiblePlay => plan_legible_play(scenario, config),
        Objective::FairLegibleWatch { fairness, lambda } => {
            plan_fair_legible(scenario, config, PredictionMode::Watch, *fairness, *lambda)
        }
        Objective::FairLegiblePlay { fairness, lambda } => {
            plan_fair_legible(scenario, config, PredictionMode::Play, *fairness, *lambda)
        }
    }
}

/// Recomputes the objective of an arbitrary (allocation, trajectory) pair
/// through the public observer, independent of the planner's fast tables.
/// `plan` results satisfy `objective_value == evaluate_objective(...)` to
/// well under 1e-9.
pub fn evaluate_objective<T: Real>(
    scenario: &Scenario<T>,
    objective: &Objective<T>,
    config: &PlannerConfig<T>,
    theta: &Allocation,
    xi: &Trajectory<T>,
) -> Result<T> {
    objective.validate()?;
    if let Objective::Efficient = objective {
        return scenario.value(theta, &scenario.initial_state(), config.observer.gamma);
    }
    let space = Space::build(scenario, config)?;
    let j = space
        .thetas
        .iter()
        .position(|t| t == theta)
        .ok_or_else(|| Error::NotAMember(theta.to_string()))?;
    let trace = posterior(scenario, &space.thetas, xi, &config.observer)?;
    let mode = PredictionMode::of(objective);
    let k = xi.len();
    let p = if config.prefix_weighted && k > 0 {
        let mut acc = T::zero();
        for t in 1..=k {
            acc = acc + space.mass(trace.row(t), j, mode);
        }
        acc / real_of_usize(k)
    } else {
        space.mass(trace.final_row(), j, mode)
    };
    let value = match (objective.fairness(), objective.lambda()) {
        (Some(kind), lambda) => {
            let f_hat: Vec<T> = match kind {
                FairnessKind::AllocationEquality => normalize_fairness(
                    &fairness_allocation(theta, scenario.subtask_count()),
                    real_of_usize(scenario.subtask_count()),
                ),
                FairnessKind::EffortEquality => {
                    normalize_fairness(&fairness_effort(xi), space.effort_scale)
                }
            };
            let term = match mode {
                PredictionMode::Watch => f_hat.iter().copied().sum(),
                PredictionMode::Play => f_hat[0],
            };
            lambda * term + p
        }
        (None, _) => p,
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AgentId;
    use crate::geom::{Cell, Rect, Vec2};

    fn trio_field() -> Scenario<f64> {
        // Human holds the center-bottom; two robots flank three targets along
        // the top. no-sharing / all busy keeps |Θ| small and asymmetric.
        Scenario::continuous(
            "trio",
            Rect::new(Vec2::zero(), Vec2::new(10.0, 8.0)),
            vec![
                Vec2::new(5.0, 0.5),
                Vec2::new(1.5, 1.0),
                Vec2::new(8.5, 1.0),
            ],
            vec![
                Vec2::new(1.0, 7.0),
                Vec2::new(5.0, 7.0),
                Vec2::new(9.0, 7.0),
            ],
            vec![],
            1.0,
            16,
        )
        .unwrap()
        .with_policy(crate::domain::ValidityPolicy::no_sharing_all_busy())
    }

    fn kitchen_trio() -> Scenario<f64> {
        Scenario::grid(
            "kitchen-trio",
            7,
            5,
            vec![Cell::new(3, 0), Cell::new(0, 0), Cell::new(6, 0)],
            vec![Cell::new(0, 4), Cell::new(6, 4)],
            vec![],
            vec![Cell::new(3, 2)],
            14,
        )
        .unwrap()
    }

    fn brute_force(
        scenario: &Scenario<f64>,
        config: &PlannerConfig<f64>,
        mode: PredictionMode,
        fairness: Option<(FairnessKind, f64)>,
    ) -> (f64, usize, usize) {
        let thetas = scenario.allocations().unwrap();
        let classes = human_class_partition(&thetas);
        let class_of: Vec<usize> = thetas
            .iter()
            .enumerate()
            .map(|(j, _)| classes.iter().position(|c| c.contains(&j)).unwrap())
            .collect();
        let mut fams: Vec<Option<TrajectoryFamily<f64>>> = Vec::new();
        let mut scale = 0.0f64;
        for theta in &thetas {
            match enumerate_family(scenario, theta, config.via_lattice, config.family_cap) {
                Ok(f) => {
                    for m in 0..f.len() {
                        scale = scale.max(f.member_travels(m).iter().sum());
                    }
                    fams.push(Some(f));
                }
                Err(e) if e.is_infeasible() => fams.push(None),
                Err(e) => panic!("{e}"),
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (j, fam) in fams.iter().enumerate() {
            let Some(fam) = fam else { continue };
            for m in 0..fam.len() {
                let xi = fam.member_trajectory(scenario, m).unwrap();
                let trace = posterior(scenario, &thetas, &xi, &config.observer).unwrap();
                let mass = |row: &[f64]| -> f64 {
                    match mode {
                        PredictionMode::Watch => row[j],
                        PredictionMode::Play => classes[class_of[j]]
                            .iter()
                            .map(|&h| row[h])
                            .sum(),
                    }
                };
                let p = if config.prefix_weighted && xi.len() > 0 {
                    (1..=xi.len()).map(|t| mass(trace.row(t))).sum::<f64>() / xi.len() as f64
                } else {
                    mass(trace.final_row())
                };
                let value = match fairness {
                    None => p,
                    Some((kind, lambda)) => {
                        let f_hat = match kind {
                            FairnessKind::AllocationEquality => normalize_fairness(
                                &fairness_allocation(&fam.theta, scenario.subtask_count()),
                                scenario.subtask_count() as f64,
                            ),
                            FairnessKind::EffortEquality => normalize_fairness(
                                &distances_to_effort(&fam.member_travels(m)),
                                scale,
                            ),
                        };
                        let term = match mode {
                            PredictionMode::Watch => f_hat.iter().sum(),
                            PredictionMode::Play => f_hat[0],
                        };
                        lambda * term + p
                    }
                };
                if best.map_or(true, |(bv, _, _)| value > bv) {
                    best = Some((value, j, m));
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn bilevel_matches_brute_force_on_field() {
        let sc = trio_field();
        let config = PlannerConfig::default();
        for (mode, fairness) in [
            (PredictionMode::Watch, None),
            (PredictionMode::Play, None),
            (
                PredictionMode::Watch,
                Some((FairnessKind::AllocationEquality, 1.0)),
            ),
            (
                PredictionMode::Play,
                Some((FairnessKind::EffortEquality, 1.0)),
            ),
        ] {
            let got = match fairness {
                None if mode == PredictionMode::Watch => {
                    plan_legible_watch(&sc, &config).unwrap()
                }
                None => plan_legible_play(&sc, &config).unwrap(),
                Some((kind, lambda)) => {
                    plan_fair_legible(&sc, &config, mode, kind, lambda).unwrap()
                }
            };
            let (value, j, m) = brute_force(&sc, &config, mode, fairness);
            assert_eq!((got.theta_index, got.member_index), (j, m), "{mode:?}");
            assert_eq!(got.objective_value, value, "{mode:?} value drifted");
        }
    }

    #[test]
    fn bilevel_matches_brute_force_on_grid() {
        let sc = kitchen_trio();
        let config = PlannerConfig::default();
        for (mode, fairness) in [
            (PredictionMode::Watch, None),
            (
                PredictionMode::Play,
                Some((FairnessKind::AllocationEquality, 0.5)),
            ),
        ] {
            let got = match fairness {
                None => plan_legible_watch(&sc, &config).unwrap(),
                Some((kind, lambda)) => {
                    plan_fair_legible(&sc, &config, mode, kind, lambda).unwrap()
                }
            };
            let (value, j, m) = brute_force(&sc, &config, mode, fairness);
            assert_eq!((got.theta_index, got.member_index), (j, m));
            assert_eq!(got.objective_value, value);
        }
    }

    #[test]
    fn lambda_zero_is_bit_identical_to_legible() {
        let sc = trio_field();
        let config = PlannerConfig::default();
        for kind in [
            FairnessKind::AllocationEquality,
            FairnessKind::EffortEquality,
        ] {
            let fair =
                plan_fair_legible(&sc, &config, PredictionMode::Watch, kind, 0.0).unwrap();
            let legible = plan_legible_watch(&sc, &config).unwrap();
            assert_eq!(fair, legible);
            let fair =
                plan_fair_legible(&sc, &config, PredictionMode::Play, kind, 0.0).unwrap();
            let legible = plan_legible_play(&sc, &config).unwrap();
            assert_eq!(fair, legible);
        }
    }

    #[test]
    fn objective_value_matches_independent_recompute() {
        let sc = trio_field();
        let config = PlannerConfig::default();
        let objectives = [
            Objective::Efficient,
            Objective::LegibleWatch,
            Objective::LegiblePlay,
            Objective::FairLegibleWatch {
                fairness: FairnessKind::AllocationEquality,
                lambda: 1.0,
            },
            Objective::FairLegiblePlay {
                fairness: FairnessKind::EffortEquality,
                lambda: 0.7,
            },
        ];
        for objective in objectives {
            let result = plan(&sc, &objective, &config, 0).unwrap();
            let recomputed =
                evaluate_objective(&sc, &objective, &config, &result.theta, &result.trajectory)
                    .unwrap();
            assert!(
                (result.objective_value - recomputed).abs() <= 1e-9,
                "{}: {} vs {recomputed}",
                objective.name(),
                result.objective_value
            );
        }
    }

    #[test]
    fn planner_dominates_every_enumerated_pair() {
        let sc = kitchen_trio();
        let config = PlannerConfig::default();
        let result = plan_legible_watch(&sc, &config).unwrap();
        let thetas = sc.allocations().unwrap();
        for theta in &thetas {
            let Ok(fam) = enumerate_family(&sc, theta, config.via_lattice, config.family_cap)
            else {
                continue;
            };
            for m in 0..fam.len() {
                let xi = fam.member_trajectory(&sc, m).unwrap();
                let v =
                    evaluate_objective(&sc, &Objective::LegibleWatch, &config, theta, &xi)
                        .unwrap();
                assert!(v <= result.objective_value + 1e-12);
            }
        }
    }

    fn corridor() -> Scenario<f64> {
        // One target on a line. Canonical allocation 0 hands it to the robot
        // (3 steps, V = 0.9^3), allocation 1 to the human (5 steps, 0.9^5).
        Scenario::grid(
            "corridor",
            11,
            1,
            vec![Cell::new(0, 0), Cell::new(8, 0)],
            vec![Cell::new(5, 0)],
            vec![],
            vec![],
            12,
        )
        .unwrap()
    }

    #[test]
    fn efficient_argmax_matches_value_enumeration() {
        for sc in [trio_field(), kitchen_trio(), corridor()] {
            let config = PlannerConfig::default();
            let result = plan_efficient(&sc, &config, 0).unwrap();
            let thetas = sc.allocations().unwrap();
            let s0 = sc.initial_state();
            let mut best = None::<(f64, usize)>;
            for (j, theta) in thetas.iter().enumerate() {
                if enumerate_family(&sc, theta, config.via_lattice, config.family_cap).is_err() {
                    continue;
                }
                let v = sc.value(theta, &s0, config.observer.gamma).unwrap();
                if best.map_or(true, |(bv, _)| v > bv) {
                    best = Some((v, j));
                }
            }
            let (v, j) = best.unwrap();
            assert_eq!(result.theta_index, j, "{}", sc.id());
            assert_eq!(result.objective_value, v);
            assert_eq!(result.member_index, 0, "efficient follows direct paths");
        }
    }

    #[test]
    fn efficient_sampling_tracks_value_proportions() {
        let sc = corridor();
        let config = PlannerConfig {
            selection: SelectionMode::Sample,
            ..PlannerConfig::default()
        };
        let weights = efficient_selection_weights(&sc, &config).unwrap();
        assert_eq!(weights.len(), 2);
        // V = 0.9^3 vs 0.9^5 → (0.5525, 0.4475) after normalization.
        assert!((weights[0] - 0.5525).abs() < 1e-4, "{weights:?}");
        assert!((weights[1] - 0.4475).abs() < 1e-4);
        let mut counts = [0usize; 2];
        for seed in 0..20_000u64 {
            counts[sample_index(&weights, seed)] += 1;
        }
        let f0 = counts[0] as f64 / 20_000.0;
        assert!((f0 - weights[0]).abs() < 0.02, "sampled {f0}");
        // And the full planner threads the same selection through.
        let picked = plan_efficient(&sc, &config, 7).unwrap();
        assert_eq!(picked.theta_index, sample_index(&weights, 7));
    }

    #[test]
    fn planning_is_deterministic() {
        let sc = trio_field();
        let config = PlannerConfig::default();
        let a = plan_legible_play(&sc, &config).unwrap();
        let b = plan_legible_play(&sc, &config).unwrap();
        assert_eq!(a, b);
        let e1 = plan_efficient(&sc, &config, 42).unwrap();
        let e2 = plan_efficient(&sc, &config, 42).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn play_mass_never_below_watch_mass() {
        // Class mass is a superset sum of the allocation's own mass.
        let sc = trio_field();
        let config = PlannerConfig::default();
        let watch = plan_legible_watch(&sc, &config).unwrap();
        let play_value = evaluate_objective(
            &sc,
            &Objective::LegiblePlay,
            &config,
            &watch.theta,
            &watch.trajectory,
        )
        .unwrap();
        assert!(play_value >= watch.objective_value - 1e-12);
    }

    #[test]
    fn prefix_weighted_objective_stays_in_unit_interval() {
        let sc = trio_field();
        let config = PlannerConfig {
            prefix_weighted: true,
            ..PlannerConfig::default()
        };
        let result = plan_legible_watch(&sc, &config).unwrap();
        assert!(result.objective_value > 0.0 && result.objective_value <= 1.0);
        let recomputed = evaluate_objective(
            &sc,
            &Objective::LegibleWatch,
            &config,
            &result.theta,
            &result.trajectory,
        )
        .unwrap();
        assert_eq!(result.objective_value, recomputed);
    }

    #[test]
    fn infeasible_horizon_is_reported() {
        let sc = Scenario::continuous(
            "tight",
            Rect::new(Vec2::zero(), Vec2::new(10.0, 8.0)),
            vec![Vec2::new(5.0, 0.5), Vec2::new(1.0, 1.0)],
            vec![Vec2::new(9.0, 7.0)],
            vec![],
            1.0,
            2,
        )
        .unwrap();
        let config = PlannerConfig::default();
        for result in [
            plan_efficient(&sc, &config, 0),
            plan_legible_watch(&sc, &config),
        ] {
            let err = result.unwrap_err();
            assert!(err.is_infeasible(), "{err:?}");
        }
    }

    #[test]
    fn fairness_trade_off_moves_the_allocation() {
        // With a large lambda the allocation-fair planner should prefer an
        // even split even when a lopsided one is more legible.
        let sc = kitchen_trio();
        let config = PlannerConfig::default();
        let fair = plan_fair_legible(
            &sc,
            &config,
            PredictionMode::Watch,
            FairnessKind::AllocationEquality,
            1000.0,
        )
        .unwrap();
        let best_fair: f64 = fair.fairness_allocation.iter().sum();
        for theta in sc.allocations().unwrap() {
            if enumerate_family(&sc, &theta, config.via_lattice, config.family_cap).is_ok() {
                let f: f64 = normalize_fairness(
                    &fairness_allocation(&theta, sc.subtask_count()),
                    sc.subtask_count() as f64,
                )
                .iter()
                .sum();
                assert!(best_fair >= f - 1e-12);
            }
        }
    }

    #[test]
    fn twins_tie_break_to_lowest_index() {
        // Sharing policy: allocations differing only in the human's set leave
        // identical robot motion, so the watch planner must land on the
        // lowest-index twin.
        let sc = Scenario::continuous(
            "twins",
            Rect::new(Vec2::zero(), Vec2::new(6.0, 6.0)),
            vec![Vec2::new(3.0, 0.5), Vec2::new(3.0, 1.5)],
            vec![Vec2::new(1.0, 5.0), Vec2::new(5.0, 5.0)],
            vec![],
            1.0,
            12,
        )
        .unwrap();
        let config = PlannerConfig::default();
        let result = plan_legible_watch(&sc, &config).unwrap();
        let thetas = sc.allocations().unwrap();
        // Every allocation with the same robot assignment and a different
        // human set scores identically; the chosen index is the smallest.
        let robot_mask = result.theta.mask_of(AgentId(1));
        let twin = thetas
            .iter()
            .position(|t| t.mask_of(AgentId(1)) == robot_mask)
            .unwrap();
        assert_eq!(result.theta_index, twin);
    }
}
