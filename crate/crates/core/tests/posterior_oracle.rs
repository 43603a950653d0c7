//! Cross-checks the observer against a deliberately naive Bayes
//! implementation: explicit joint candidate grids, plain products instead of
//! log-space, and a joint softmax computed by brute-force enumeration. Run on
//! every bundled scenario small enough for the naive arithmetic to stay
//! representable.

use teamplan_core::evaluation::suite;
use teamplan_core::{
    plan, posterior, Allocation, AgentId, Objective, ObserverConfig, PlannerConfig, Scenario,
    Trajectory, Vec2,
};

/// Scenario-wide candidate list, one slot per agent, `None` for unobserved.
fn candidate_grid(scenario: &Scenario<f64>, cfg: &ObserverConfig<f64>) -> Vec<Option<Vec<Vec2<f64>>>> {
    let shared = scenario.agent_action_candidates();
    (0..scenario.agent_count())
        .map(|i| {
            if i == 0 && !cfg.include_human_actions {
                None
            } else {
                Some(shared.clone())
            }
        })
        .collect()
}

fn snap(candidates: &[Vec2<f64>], observed: Vec2<f64>) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let d = (*c - observed).norm();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// P(joint action | state, θ) from the joint softmax over the product grid.
fn joint_step_probability(
    scenario: &Scenario<f64>,
    theta: &Allocation,
    positions: &[Vec2<f64>],
    reached: &[teamplan_core::SubtaskMask],
    moves: &[Vec2<f64>],
    beta: f64,
    grid: &[Option<Vec<Vec2<f64>>>],
) -> f64 {
    // Per-agent utility of each candidate, observed agents only.
    let mut utilities: Vec<Vec<f64>> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..scenario.agent_count() {
        let Some(cands) = &grid[i] else { continue };
        let remaining = theta.mask_of(AgentId(i)).minus(reached[i]);
        let mut us = Vec::with_capacity(cands.len());
        for c in cands {
            let next = scenario.agent_transition(positions[i], *c);
            let rem = remaining.minus(scenario.touched_at(next));
            us.push(beta * -scenario.agent_cost_to_go(next, rem).unwrap());
        }
        chosen.push(snap(cands, moves[i]));
        utilities.push(us);
    }
    if utilities.is_empty() {
        return 1.0;
    }

    // Brute-force joint partition function: odometer over the product grid.
    let mut z = 0.0;
    let mut idx = vec![0usize; utilities.len()];
    'outer: loop {
        let q: f64 = idx.iter().zip(&utilities).map(|(&k, us)| us[k]).sum();
        z += q.exp();
        for slot in 0..idx.len() {
            idx[slot] += 1;
            if idx[slot] < utilities[slot].len() {
                continue 'outer;
            }
            idx[slot] = 0;
        }
        break;
    }
    let q_obs: f64 = chosen.iter().zip(&utilities).map(|(&k, us)| us[k]).sum();
    q_obs.exp() / z
}

/// Naive direct Bayes: running products of joint step probabilities.
fn oracle_rows(
    scenario: &Scenario<f64>,
    thetas: &[Allocation],
    xi: &Trajectory<f64>,
    cfg: &ObserverConfig<f64>,
) -> Vec<Vec<f64>> {
    let grid = candidate_grid(scenario, cfg);
    let prior = cfg.prior.resolve(thetas.len()).unwrap();
    let mut weights = prior.clone();
    let normalized = |w: &[f64]| {
        let total: f64 = w.iter().sum();
        w.iter().map(|x| x / total).collect::<Vec<f64>>()
    };
    let mut rows = vec![normalized(&weights)];
    for step in &xi.steps {
        for (j, theta) in thetas.iter().enumerate() {
            weights[j] *= joint_step_probability(
                scenario,
                theta,
                &step.state.positions,
                &step.state.reached,
                &step.action.moves,
                cfg.beta,
                &grid,
            );
        }
        rows.push(normalized(&weights));
    }
    rows
}

fn small_scenarios() -> Vec<Scenario<f64>> {
    let out: Vec<_> = suite::bundled()
        .into_iter()
        .filter(|s| s.horizon() <= 10 && s.allocations().unwrap().len() <= 27)
        .collect();
    assert!(out.len() >= 4);
    out
}

/// Trajectories worth checking: each feasible allocation's direct member plus
/// what the planners actually produce.
fn probe_trajectories(scenario: &Scenario<f64>) -> Vec<Trajectory<f64>> {
    let mut out = Vec::new();
    for theta in scenario.allocations().unwrap() {
        if let Ok(family) = teamplan_core::enumerate_family(scenario, &theta, 3, 10_000) {
            out.push(family.member_trajectory(scenario, 0).unwrap());
        }
    }
    for objective in [
        Objective::Efficient,
        Objective::LegibleWatch,
        Objective::LegiblePlay,
    ] {
        let result = plan(scenario, &objective, &PlannerConfig::default(), 0).unwrap();
        out.push(result.trajectory);
    }
    out
}

#[test]
fn posterior_matches_direct_bayes_oracle() {
    let cfg = ObserverConfig::default();
    for scenario in small_scenarios() {
        let thetas = scenario.allocations().unwrap();
        for xi in probe_trajectories(&scenario) {
            let trace = posterior(&scenario, &thetas, &xi, &cfg).unwrap();
            let rows = oracle_rows(&scenario, &thetas, &xi, &cfg);
            assert_eq!(trace.len(), rows.len(), "{}", scenario.id());
            for t in 0..rows.len() {
                let got = trace.row(t);
                let want = &rows[t];
                let sum: f64 = got.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-9, "{} row {t} sums {sum}", scenario.id());
                for j in 0..want.len() {
                    assert!(
                        (got[j] - want[j]).abs() <= 1e-9,
                        "{} row {t} theta {j}: {} vs oracle {}",
                        scenario.id(),
                        got[j],
                        want[j]
                    );
                }
            }
        }
    }
}

#[test]
fn posterior_handles_the_observe_everyone_grid() {
    // Same oracle with the human's actions included: stationary human rows
    // must still agree.
    let cfg = ObserverConfig {
        include_human_actions: true,
        ..ObserverConfig::default()
    };
    let scenario = small_scenarios().into_iter().next().unwrap();
    let thetas = scenario.allocations().unwrap();
    let xi = probe_trajectories(&scenario).pop().unwrap();
    let trace = posterior(&scenario, &thetas, &xi, &cfg).unwrap();
    let rows = oracle_rows(&scenario, &thetas, &xi, &cfg);
    for t in 0..rows.len() {
        for j in 0..thetas.len() {
            assert!((trace.row(t)[j] - rows[t][j]).abs() <= 1e-9);
        }
    }
}
