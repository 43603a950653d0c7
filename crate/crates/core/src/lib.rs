//! Planning engine and evaluation harness for legible and fair subtask
//! allocation in centralized multi-agent teams.
//!
//! A centralized planner assigns spatial subtasks to a human/robot team and
//! chooses robot trajectories. A Boltzmann-rational Bayesian observer watches
//! the team move and infers the allocation; legible planners pick the
//! allocation/trajectory pair that makes that inference fast and correct,
//! optionally traded off against allocation or effort fairness.
//!
//! All numeric code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! crate root exports `f64` aliases for the common types.

pub mod domain;
pub mod env;
pub mod error;
pub mod evaluation;
pub mod geom;
pub mod observer;
pub mod planner;
pub mod scalar;

pub use domain::{
    enumerate_allocations, human_class_partition, human_equivalence_class, AgentId, Allocation,
    FairnessKind, JointAction, JointState, Objective, ObserverConfig, Prior, Sharing, Step,
    SubtaskId, SubtaskMask, Trajectory, ValidityPolicy,
};
pub use env::{EnvKind, GridMove, Scenario};
pub use error::{Error, Result};
pub use evaluation::{
    run_prediction_experiment, run_suite, AggregateRow, ComparisonReport, PlannerOutcome,
    SnapshotProtocol, SnapshotRecord, SuiteOutcome,
};
pub use geom::{Cell, Rect, Vec2};
pub use observer::{
    human_marginal_posterior, log_softmax, map_prediction, posterior, step_likelihood,
    trajectory_log_likelihood, ActionGrid, PosteriorTrace, PredictionMode,
};
pub use planner::{
    distances_to_effort, efficient_selection_weights, enumerate_family, evaluate_objective,
    fairness_allocation, fairness_effort, normalize_fairness, plan, plan_efficient,
    plan_fair_legible, plan_legible_play, plan_legible_watch, sample_index, AgentPath, PlanResult,
    PlannerConfig, SelectionMode, TrajectoryFamily,
};
pub use scalar::Real;

/// Default-precision aliases.
pub type Scenariof = Scenario<f64>;
pub type Vec2f = Vec2<f64>;
pub type Rectf = Rect<f64>;
pub type JointStatef = JointState<f64>;
pub type JointActionf = JointAction<f64>;
pub type Trajectoryf = Trajectory<f64>;
pub type ObserverConfigf = ObserverConfig<f64>;
pub type Objectivef = Objective<f64>;
pub type PlannerConfigf = PlannerConfig<f64>;
pub type PlanResultf = PlanResult<f64>;
