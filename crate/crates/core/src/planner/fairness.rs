//! Fairness functionals over allocations and trajectories. Both measure how
//! far each agent sits from an equal share — of subtask counts or of distance
//! traveled — as a non-positive penalty (0 = perfectly fair to that agent).

use crate::domain::{Allocation, Trajectory};
use crate::scalar::{real_of_usize, Real};

/// Allocation equality: f_i = −| T/N − |θ_i| |.
pub fn fairness_allocation<T: Real>(theta: &Allocation, subtask_count: usize) -> Vec<T> {
    let share = real_of_usize::<T>(subtask_count) / real_of_usize(theta.agent_count());
    theta
        .agents()
        .map(|i| -(share - real_of_usize::<T>(theta.mask_of(i).len())).abs())
        .collect()
}

/// Effort equality: f_i = −| d/N − d_i | with d_i the distance agent i
/// travels along ξ and d the team total.
pub fn fairness_effort<T: Real>(xi: &Trajectory<T>) -> Vec<T> {
    distances_to_effort(&xi.distances())
}

/// Same functional applied to precomputed per-agent distances, so the planner
/// can score family members without materializing trajectories.
pub fn distances_to_effort<T: Real>(d: &[T]) -> Vec<T> {
    let total: T = d.iter().copied().sum();
    let share = total / real_of_usize(d.len());
    d.iter().map(|&di| -(share - di).abs()).collect()
}

/// Normalizes a raw fairness vector to the scale-free form used in the
/// planning objective: allocation terms divide by the subtask count, effort
/// terms by the largest total travel across the search space. A zero scale
/// (nothing to divide by) normalizes to zero.
pub fn normalize_fairness<T: Real>(raw: &[T], scale: T) -> Vec<T> {
    if scale <= T::zero() {
        return vec![T::zero(); raw.len()];
    }
    raw.iter().map(|&f| f / scale).collect()
}
