//! The bundled 12-scenario suite: six obstacle-free pursuit fields and six
//! kitchen grids, half of them deliberately asymmetric. In the asymmetric
//! layouts a decoy target sits along the efficient route to the true one, so
//! direct motion stays ambiguous through the early snapshots while a small
//! detour resolves it — the geometry behind the legibility gap.

use crate::domain::ValidityPolicy;
use crate::env::Scenario;
use crate::error::Result;
use crate::geom::{Cell, Rect, Vec2};

fn v(x: f64, y: f64) -> Vec2<f64> {
    Vec2::new(x, y)
}

fn field(
    id: &str,
    w: f64,
    h: f64,
    starts: Vec<Vec2<f64>>,
    targets: Vec<Vec2<f64>>,
    horizon: usize,
) -> Result<Scenario<f64>> {
    Scenario::continuous(
        id,
        Rect::new(Vec2::zero(), v(w, h)),
        starts,
        targets,
        vec![],
        1.0,
        horizon,
    )
}

/// Three balls, two robots, one human; every agent chases exactly one ball.
/// Uneven placement: two balls cluster on the right, nearly collinear from
/// the right robot, so its direct path is ambiguous early.
fn pe_threeball_uneven() -> Result<Scenario<f64>> {
    Ok(field(
        "pe-threeball-uneven",
        12.0,
        9.0,
        vec![v(6.0, 1.0), v(2.0, 1.0), v(10.0, 1.0)],
        vec![v(1.5, 7.5), v(9.5, 6.5), v(11.0, 8.5)],
        16,
    )?
    .with_policy(ValidityPolicy::no_sharing_all_busy()))
}

/// Even placement of the same task: balls spread out, one per flank and one
/// center, so even direct paths are telling.
fn pe_threeball_even() -> Result<Scenario<f64>> {
    Ok(field(
        "pe-threeball-even",
        12.0,
        9.0,
        vec![v(6.0, 1.0), v(3.0, 1.0), v(9.0, 1.0)],
        vec![v(2.0, 7.5), v(6.0, 8.0), v(10.0, 7.5)],
        16,
    )?
    .with_policy(ValidityPolicy::no_sharing_all_busy()))
}

/// Single robot, two targets almost collinear from its start: heading east
/// reads the same for both until the decoy is passed.
fn pe_corridor_decoy() -> Result<Scenario<f64>> {
    field(
        "pe-corridor-decoy",
        10.0,
        7.0,
        vec![v(5.0, 0.5), v(0.5, 5.5)],
        vec![v(5.0, 5.9), v(9.5, 5.5)],
        10,
    )
}

/// Near-mirror pair of targets around the robot; the slight offset keeps the
/// posterior off the exact 50/50 razor edge, and exclusive ownership keeps
/// every human class a single allocation.
fn pe_mirror_even() -> Result<Scenario<f64>> {
    Ok(field(
        "pe-mirror-even",
        6.0,
        7.0,
        vec![v(3.0, 0.5), v(3.0, 1.0)],
        vec![v(1.0, 6.0), v(5.0, 6.25)],
        10,
    )?
    .with_policy(ValidityPolicy::no_sharing_empties()))
}

/// Two robots flanking two targets straight ahead of each: exclusive
/// ownership, so motion pins the partition quickly.
fn pe_flank_even() -> Result<Scenario<f64>> {
    Ok(field(
        "pe-flank-even",
        12.0,
        8.0,
        vec![v(6.0, 0.5), v(3.0, 1.0), v(9.0, 1.0)],
        vec![v(3.0, 7.0), v(9.0, 7.0)],
        10,
    )?
    .with_policy(ValidityPolicy::no_sharing_empties()))
}

/// One robot, three targets; two lie on the same diagonal from its start.
fn pe_diagonal_uneven() -> Result<Scenario<f64>> {
    field(
        "pe-diagonal-uneven",
        11.0,
        8.0,
        vec![v(6.0, 0.5), v(0.5, 0.5)],
        vec![v(4.0, 3.0), v(1.0, 6.5), v(9.5, 7.0)],
        14,
    )
}

fn c(x: i64, y: i64) -> Cell {
    Cell::new(x, y)
}

fn hwall(y: i64, x0: i64, x1: i64) -> Vec<Cell> {
    (x0..=x1).map(|x| c(x, y)).collect()
}

/// Galley kitchen: one long counter with pass-throughs at both ends, three
/// stations behind it. The cheap split sends the robot up the left pass where
/// its prefix matches the robot-does-everything tour; claiming the far
/// station instead takes the long way round but is unmistakable.
fn gk_galley_uneven() -> Result<Scenario<f64>> {
    Scenario::grid(
        "gk-galley-uneven",
        9,
        5,
        vec![c(4, 0), c(0, 0)],
        vec![c(0, 4), c(4, 4), c(8, 4)],
        vec![],
        hwall(2, 1, 7),
        13,
    )
}

/// The symmetric galley: two counters with a center gap, one station straight
/// above each robot.
fn gk_galley_even() -> Result<Scenario<f64>> {
    let mut obstacles = hwall(2, 2, 3);
    obstacles.extend(hwall(2, 5, 6));
    Scenario::grid(
        "gk-galley-even",
        9,
        5,
        vec![c(4, 0), c(1, 0), c(7, 0)],
        vec![c(1, 4), c(7, 4)],
        vec![],
        obstacles,
        10,
    )
}

/// One robot between two stations behind a wall: the cheap station shares its
/// approach with the take-both tour, the dear one is reached by an opposite
/// first step.
fn gk_split_uneven() -> Result<Scenario<f64>> {
    Scenario::grid(
        "gk-split-uneven",
        7,
        6,
        vec![c(3, 0), c(4, 0)],
        vec![c(0, 5), c(6, 5)],
        vec![],
        hwall(3, 1, 5),
        10,
    )
}

/// Island counter in the middle; each robot's station sits straight ahead.
fn gk_island_even() -> Result<Scenario<f64>> {
    Scenario::grid(
        "gk-island-even",
        7,
        5,
        vec![c(3, 0), c(0, 0), c(6, 0)],
        vec![c(0, 4), c(6, 4)],
        vec![],
        vec![c(3, 2), c(3, 3)],
        10,
    )
}

/// Single robot, three stations behind a long pantry counter: the shared
/// run-up hides the destination until late.
fn gk_pantry_uneven() -> Result<Scenario<f64>> {
    Scenario::grid(
        "gk-pantry-uneven",
        8,
        6,
        vec![c(4, 0), c(0, 0)],
        vec![c(0, 5), c(3, 5), c(7, 5)],
        vec![],
        hwall(3, 1, 6),
        14,
    )
}

/// Prep line: two stations a half-step off each robot's column, islands in
/// between.
fn gk_prep_even() -> Result<Scenario<f64>> {
    Scenario::grid(
        "gk-prep-even",
        11,
        5,
        vec![c(5, 0), c(1, 0), c(9, 0)],
        vec![c(2, 4), c(8, 4)],
        vec![],
        vec![c(3, 2), c(7, 2)],
        10,
    )
}

/// The 12 bundled scenarios in suite order: six pursuit fields, then six
/// kitchens.
pub fn bundled() -> Vec<Scenario<f64>> {
    [
        pe_threeball_uneven(),
        pe_threeball_even(),
        pe_corridor_decoy(),
        pe_mirror_even(),
        pe_flank_even(),
        pe_diagonal_uneven(),
        gk_galley_uneven(),
        gk_galley_even(),
        gk_split_uneven(),
        gk_island_even(),
        gk_pantry_uneven(),
        gk_prep_even(),
    ]
    .into_iter()
    .map(|s| s.expect("bundled scenarios are well-formed"))
    .collect()
}

/// Scenarios whose decoy geometry makes direct paths ambiguous early — the
/// set on which the legibility gap is measured.
pub fn asymmetric_ids() -> &'static [&'static str] {
    &[
        "pe-threeball-uneven",
        "pe-corridor-decoy",
        "pe-diagonal-uneven",
        "gk-galley-uneven",
        "gk-split-uneven",
        "gk-pantry-uneven",
    ]
}
