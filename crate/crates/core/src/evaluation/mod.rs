//! Simulated-observer experiments: plan with each configured objective, cut
//! the planned trajectory at snapshot fractions of its length, and ask the
//! observer to predict the allocation (watching) or the human's subtask class
//! (playing) from each prefix. Correctness is judged against the planner's
//! own choice, which is the ground truth by construction.

pub mod suite;

use crate::domain::Objective;
use crate::env::Scenario;
use crate::error::{Error, Result};
use crate::observer::{map_prediction, PredictionMode};
use crate::planner::{plan, PlanResult, PlannerConfig};
use crate::scalar::{real, real_of_usize, Real};

/// Fractions of the executed trajectory after which the observer must commit
/// to a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotProtocol<T> {
    pub fractions: Vec<T>,
}

impl<T: Real> Default for SnapshotProtocol<T> {
    fn default() -> Self {
        SnapshotProtocol {
            fractions: vec![
                T::one() / real(3.0),
                real::<T>(2.0) / real(3.0),
                T::one(),
            ],
        }
    }
}

impl<T: Real> SnapshotProtocol<T> {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::Config("snapshot protocol needs ≥ 1 fraction".into()));
        }
        for w in self.fractions.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Config(format!(
                    "snapshot fractions must strictly increase, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let first = self.fractions[0];
        let last = *self.fractions.last().expect("nonempty");
        if !(first > T::zero()) || last > T::one() {
            return Err(Error::Config(
                "snapshot fractions must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Prefix length for fraction index `idx` of a trajectory with `k` steps:
    /// ceil(fraction · k), clamped to [0, k]. The small guard keeps exact
    /// multiples from rounding up through float noise.
    pub fn prefix_len(&self, idx: usize, k: usize) -> usize {
        let x = self.fractions[idx] * real_of_usize::<T>(k);
        let t = (x - real(1e-9))
            .ceil()
            .max(T::zero())
            .to_usize()
            .expect("prefix length");
        t.min(k)
    }
}

/// The observer's verdict at one snapshot of one planned trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord<T> {
    pub fraction: T,
    pub prefix_len: usize,
    /// MAP prediction matched the planner's allocation (watch) or its human
    /// class (play).
    pub predicted_correct: bool,
    /// Posterior mass on the planner's allocation (watch) or class (play).
    pub posterior_mass: T,
}

/// One planner's run on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerOutcome<T> {
    pub objective: Objective<T>,
    pub plan: PlanResult<T>,
    pub snapshots: Vec<SnapshotRecord<T>>,
}

impl<T: Real> PlannerOutcome<T> {
    /// Steps the executed trajectory takes (robots finish their share within
    /// this horizon; the human holds position throughout).
    pub fn completion_steps(&self) -> usize {
        self.plan.trajectory.len()
    }

    /// Team fairness total under the planner's own functional (allocation
    /// equality for the non-fair planners).
    pub fn sum_fairness(&self) -> T {
        let per_agent = match self.objective.fairness() {
            Some(crate::domain::FairnessKind::EffortEquality) => &self.plan.fairness_effort,
            _ => &self.plan.fairness_allocation,
        };
        per_agent.iter().copied().sum()
    }
}

/// All configured planners on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T> {
    pub scenario_id: String,
    pub outcomes: Vec<PlannerOutcome<T>>,
}

/// Mean observer performance of one planner at one snapshot fraction across
/// the scenarios that planned successfully.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow<T> {
    pub planner: &'static str,
    pub fraction: T,
    pub scenarios: usize,
    pub mean_correct: T,
    pub mean_mass: T,
}

/// Suite result: per-scenario reports, per-scenario failures (the suite keeps
/// going), and per-(planner, fraction) aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome<T> {
    pub reports: Vec<ComparisonReport<T>>,
    pub failures: Vec<(String, String)>,
    pub aggregates: Vec<AggregateRow<T>>,
}

fn attach_id(id: &str, e: Error) -> Error {
    // Keep the error class so exit-code mapping still sees infeasibility.
    match e {
        Error::Infeasible(msg) => Error::Infeasible(format!("{id}: {msg}")),
        Error::UnreachableSubtask { subtask, detail } => Error::UnreachableSubtask {
            subtask,
            detail: format!("{id}: {detail}"),
        },
        other => Error::Scenario(format!("{id}: {other}")),
    }
}

fn judge<T: Real>(
    result: &PlanResult<T>,
    mode: PredictionMode,
    t: usize,
) -> Result<(bool, T)> {
    let trace = &result.posterior;
    let pred = map_prediction(trace, mode, t)?;
    let correct = match mode {
        PredictionMode::Watch => pred == result.theta_index,
        PredictionMode::Play => {
            trace.allocations[pred].human_subtasks() == result.theta.human_subtasks()
        }
    };
    let mass = match mode {
        PredictionMode::Watch => trace.mass_on(t, result.theta_index),
        PredictionMode::Play => trace.class_mass_on(t, result.theta_index),
    };
    Ok((correct, mass))
}

/// Plans the scenario with every objective and scores the observer's
/// snapshot predictions against each plan.
pub fn run_prediction_experiment<T: Real>(
    scenario: &Scenario<T>,
    objectives: &[Objective<T>],
    protocol: &SnapshotProtocol<T>,
    config: &PlannerConfig<T>,
    seed: u64,
) -> Result<ComparisonReport<T>> {
    protocol.validate()?;
    if objectives.is_empty() {
        return Err(Error::Config("no planners configured".into()));
    }
    let mut outcomes = Vec::with_capacity(objectives.len());
    for objective in objectives {
        let result =
            plan(scenario, objective, config, seed).map_err(|e| attach_id(scenario.id(), e))?;
        let mode = PredictionMode::of(objective);
        let k = result.trajectory.len();
        let mut snapshots = Vec::with_capacity(protocol.fractions.len());
        for (idx, &fraction) in protocol.fractions.iter().enumerate() {
            let t = protocol.prefix_len(idx, k);
            let (predicted_correct, posterior_mass) = judge(&result, mode, t)?;
            snapshots.push(SnapshotRecord {
                fraction,
                prefix_len: t,
                predicted_correct,
                posterior_mass,
            });
        }
        outcomes.push(PlannerOutcome {
            objective: *objective,
            plan: result,
            snapshots,
        });
    }
    Ok(ComparisonReport {
        scenario_id: scenario.id().to_string(),
        outcomes,
    })
}

/// Runs the whole suite in input order. Scenario failures are recorded and
/// skipped; aggregates average over the scenarios that succeeded.
pub fn run_suite<T: Real>(
    scenarios: &[Scenario<T>],
    objectives: &[Objective<T>],
    protocol: &SnapshotProtocol<T>,
    config: &PlannerConfig<T>,
    seed: u64,
) -> Result<SuiteOutcome<T>> {
    if scenarios.is_empty() {
        return Err(Error::Config("empty scenario suite".into()));
    }
    protocol.validate()?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for scenario in scenarios {
        match run_prediction_experiment(scenario, objectives, protocol, config, seed) {
            Ok(report) => reports.push(report),
            Err(e) => failures.push((scenario.id().to_string(), e.to_string())),
        }
    }
    let mut aggregates = Vec::new();
    for (oi, objective) in objectives.iter().enumerate() {
        for (fi, &fraction) in protocol.fractions.iter().enumerate() {
            let mut n = 0usize;
            let mut correct = T::zero();
            let mut mass = T::zero();
            for report in &reports {
                let snap = &report.outcomes[oi].snapshots[fi];
                n += 1;
                if snap.predicted_correct {
                    correct = correct + T::one();
                }
                mass = mass + snap.posterior_mass;
            }
            let denom = real_of_usize::<T>(n.max(1));
            aggregates.push(AggregateRow {
                planner: objective.name(),
                fraction,
                scenarios: n,
                mean_correct: correct / denom,
                mean_mass: mass / denom,
            });
        }
    }
    Ok(SuiteOutcome {
        reports,
        failures,
        aggregates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FairnessKind;
    use crate::geom::{Cell, Rect, Vec2};

    fn all_objectives() -> Vec<Objective<f64>> {
        vec![
            Objective::Efficient,
            Objective::LegibleWatch,
            Objective::LegiblePlay,
            Objective::FairLegibleWatch {
                fairness: FairnessKind::AllocationEquality,
                lambda: 1.0,
            },
            Objective::FairLegiblePlay {
                fairness: FairnessKind::EffortEquality,
                lambda: 1.0,
            },
        ]
    }

    fn single_theta_field() -> Scenario<f64> {
        // sharing + all-busy with one target forces θ = (both agents own it):
        // |Θ| = 1, so every prediction is trivially right.
        Scenario::continuous(
            "solo-theta",
            Rect::new(Vec2::zero(), Vec2::new(8.0, 6.0)),
            vec![Vec2::new(4.0, 0.5), Vec2::new(1.0, 1.0)],
            vec![Vec2::new(7.0, 5.0)],
            vec![],
            1.0,
            12,
        )
        .unwrap()
    }

    #[test]
    fn singleton_theta_is_always_predicted() {
        let sc = single_theta_field();
        assert_eq!(sc.allocations().unwrap().len(), 1);
        let report = run_prediction_experiment(
            &sc,
            &all_objectives(),
            &SnapshotProtocol::default(),
            &PlannerConfig::default(),
            0,
        )
        .unwrap();
        for outcome in &report.outcomes {
            assert_eq!(outcome.snapshots.len(), 3);
            for snap in &outcome.snapshots {
                assert!(snap.predicted_correct);
                assert!((snap.posterior_mass - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn prefix_lengths_round_up() {
        let p = SnapshotProtocol::<f64>::default();
        assert_eq!(p.prefix_len(0, 9), 3);
        assert_eq!(p.prefix_len(1, 9), 6);
        assert_eq!(p.prefix_len(2, 9), 9);
        assert_eq!(p.prefix_len(0, 10), 4); // ceil(10/3)
        assert_eq!(p.prefix_len(0, 1), 1);
        assert_eq!(p.prefix_len(2, 0), 0);
    }

    #[test]
    fn protocol_validation_rejects_bad_fraction_lists() {
        for fractions in [
            vec![],
            vec![0.5, 0.5],
            vec![0.8, 0.4],
            vec![0.0, 0.5],
            vec![0.5, 1.2],
        ] {
            let p = SnapshotProtocol { fractions };
            assert!(p.validate().is_err(), "{:?}", p.fractions);
        }
        assert!(SnapshotProtocol::<f64>::default().validate().is_ok());
    }

    #[test]
    fn mass_entries_stay_in_unit_interval() {
        let sc = crate::env::Scenario::grid(
            "eval-kitchen",
            7,
            5,
            vec![Cell::new(3, 0), Cell::new(0, 0), Cell::new(6, 0)],
            vec![Cell::new(0, 4), Cell::new(6, 4)],
            vec![],
            vec![Cell::new(3, 2)],
            14,
        )
        .unwrap();
        let report = run_prediction_experiment(
            &sc,
            &all_objectives(),
            &SnapshotProtocol::default(),
            &PlannerConfig::default(),
            0,
        )
        .unwrap();
        for outcome in &report.outcomes {
            for snap in &outcome.snapshots {
                assert!(snap.posterior_mass >= 0.0 && snap.posterior_mass <= 1.0 + 1e-12);
            }
            // Full-trajectory rows of the trace still normalize.
            let last = outcome.plan.posterior.final_row();
            let sum: f64 = last.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn suite_records_failures_and_continues() {
        let good = single_theta_field();
        let bad = Scenario::continuous(
            "too-tight",
            Rect::new(Vec2::zero(), Vec2::new(8.0, 6.0)),
            vec![Vec2::new(4.0, 0.5), Vec2::new(1.0, 1.0)],
            vec![Vec2::new(7.0, 5.0)],
            vec![],
            1.0,
            2,
        )
        .unwrap();
        let outcome = run_suite(
            &[bad.clone(), good.clone()],
            &all_objectives(),
            &SnapshotProtocol::default(),
            &PlannerConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(outcome.reports.len(), 1);
        assert_eq!(outcome.reports[0].scenario_id, "solo-theta");
        assert_eq!(outcome.failures.len(), 1);
        assert_eq!(outcome.failures[0].0, "too-tight");
        assert!(outcome.failures[0].1.contains("too-tight"));
        // Aggregates only count the surviving scenario.
        assert!(outcome.aggregates.iter().all(|a| a.scenarios == 1));
        // Suite of one report: aggregates are a passthrough of its snapshots.
        let first = &outcome.reports[0].outcomes[0].snapshots[0];
        let agg = &outcome.aggregates[0];
        assert_eq!(agg.mean_mass, first.posterior_mass);
        assert_eq!(agg.mean_correct, 1.0);
    }

    #[test]
    fn empty_suite_is_rejected() {
        let err = run_suite::<f64>(
            &[],
            &all_objectives(),
            &SnapshotProtocol::default(),
            &PlannerConfig::default(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn experiments_are_deterministic() {
        let sc = single_theta_field();
        let a = run_prediction_experiment(
            &sc,
            &all_objectives(),
            &SnapshotProtocol::default(),
            &PlannerConfig::default(),
            7,
        )
        .unwrap();
        let b = run_prediction_experiment(
            &sc,
            &all_objectives(),
            &SnapshotProtocol::default(),
            &PlannerConfig::default(),
            7,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn self_consistency_on_a_strict_scenario() {
        // Asymmetric layout: the legible-watch plan's full-length MAP must
        // recover its own allocation.
        let sc = Scenario::continuous(
            "strict",
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
        .with_policy(crate::domain::ValidityPolicy::no_sharing_all_busy());
        let report = run_prediction_experiment(
            &sc,
            &[Objective::LegibleWatch],
            &SnapshotProtocol::default(),
            &PlannerConfig::default(),
            0,
        )
        .unwrap();
        let outcome = &report.outcomes[0];
        assert!(outcome.snapshots.last().unwrap().predicted_correct);
    }
}
