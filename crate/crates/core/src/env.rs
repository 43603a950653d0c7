//! The two concrete environments: a continuous pursuit-evasion field and a
//! discrete kitchen grid. Both expose the same contract — deterministic
//! transition dynamics, per-allocation cost-to-go, Q and value functions,
//! and completion tests — which the observer and planner consume without
//! knowing which environment they are driving.

use crate::domain::{
    Allocation, JointAction, JointState, Step, SubtaskId, SubtaskMask, Trajectory, ValidityPolicy,
};
use crate::error::{Error, Result};
use crate::geom::{Cell, Rect, Vec2};
use crate::scalar::{real, real_of_usize, Real};
use std::collections::{BTreeSet, VecDeque};
use std::sync::OnceLock;

/// A continuous position within this distance of a target counts as reaching
/// it. Grid positions must match the target cell exactly.
pub const REACH_TOLERANCE: f64 = 1e-6;

/// Tolerance used when replaying trajectories through the dynamics.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Number of compass headings in the continuous observer action grid.
pub const COMPASS_HEADINGS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    /// Continuous field; agents move up to `step_size` in any direction.
    PursuitEvasion,
    /// Discrete kitchen; agents take one of five moves per step.
    GridKitchen,
}

/// Native moves of the grid environment, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridMove {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl GridMove {
    pub const ALL: [GridMove; 5] = [
        GridMove::Up,
        GridMove::Down,
        GridMove::Left,
        GridMove::Right,
        GridMove::Stay,
    ];

    pub fn delta(self) -> (i64, i64) {
        match self {
            GridMove::Up => (0, 1),
            GridMove::Down => (0, -1),
            GridMove::Left => (-1, 0),
            GridMove::Right => (1, 0),
            GridMove::Stay => (0, 0),
        }
    }

    pub fn displacement<T: Real>(self) -> Vec2<T> {
        let (dx, dy) = self.delta();
        Vec2::new(real(dx as f64), real(dy as f64))
    }

    pub fn name(self) -> &'static str {
        match self {
            GridMove::Up => "up",
            GridMove::Down => "down",
            GridMove::Left => "left",
            GridMove::Right => "right",
            GridMove::Stay => "stay",
        }
    }

    pub fn parse(s: &str) -> Option<GridMove> {
        GridMove::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Nearest native move to an arbitrary displacement (ties break toward
    /// the earlier entry of [`GridMove::ALL`]).
    pub fn nearest<T: Real>(v: Vec2<T>) -> GridMove {
        let mut best = GridMove::Up;
        let mut best_d = T::infinity();
        for m in GridMove::ALL {
            let d = v.dist(m.displacement());
            if d < best_d {
                best_d = d;
                best = m;
            }
        }
        best
    }
}

/// Per-scenario geometry caches: breadth-first distance fields (grid only)
/// and the optimal-visiting-order table over target subsets.
#[derive(Debug, Clone)]
struct Caches<T> {
    /// `fields[t][cell_index]` = shortest grid distance from the cell to
    /// target t, or None if walled off. Empty for the continuous kind.
    fields: Vec<Vec<Option<u32>>>,
    /// `tail[t][mask]` = cheapest cost of visiting every target in `mask`
    /// starting from target t's position; None when disconnected.
    tail: Vec<Vec<Option<T>>>,
}

/// One environment instance: geometry, dynamics parameters, and the
/// allocation-validity policy. Immutable after construction; the shortest-path
/// caches are built lazily behind a `OnceLock`.
#[derive(Debug)]
pub struct Scenario<T: Real> {
    id: String,
    kind: EnvKind,
    starts: Vec<Vec2<T>>,
    targets: Vec<Vec2<T>>,
    labels: Vec<String>,
    bounds: Rect<T>,
    obstacles: BTreeSet<Cell>,
    step_size: T,
    horizon: usize,
    policy: ValidityPolicy,
    caches: OnceLock<Caches<T>>,
}

impl<T: Real> Clone for Scenario<T> {
    fn clone(&self) -> Self {
        Scenario {
            id: self.id.clone(),
            kind: self.kind,
            starts: self.starts.clone(),
            targets: self.targets.clone(),
            labels: self.labels.clone(),
            bounds: self.bounds,
            obstacles: self.obstacles.clone(),
            step_size: self.step_size,
            horizon: self.horizon,
            policy: self.policy,
            caches: OnceLock::new(),
        }
    }
}

impl<T: Real> PartialEq for Scenario<T> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.starts == other.starts
            && self.targets == other.targets
            && self.labels == other.labels
            && self.bounds == other.bounds
            && self.obstacles == other.obstacles
            && self.step_size == other.step_size
            && self.horizon == other.horizon
            && self.policy == other.policy
    }
}

impl<T: Real> Scenario<T> {
    /// Continuous pursuit-evasion scenario. Defaults to the
    /// sharing-allowed + all-busy validity policy.
    pub fn continuous(
        id: impl Into<String>,
        bounds: Rect<T>,
        starts: Vec<Vec2<T>>,
        targets: Vec<Vec2<T>>,
        labels: Vec<String>,
        step_size: T,
        horizon: usize,
    ) -> Result<Self> {
        if !(step_size > T::zero()) {
            return Err(Error::Scenario(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        let s = Scenario {
            id: id.into(),
            kind: EnvKind::PursuitEvasion,
            starts,
            targets,
            labels,
            bounds,
            obstacles: BTreeSet::new(),
            step_size,
            horizon,
            policy: ValidityPolicy::sharing_all_busy(),
            caches: OnceLock::new(),
        };
        s.validate()
    }

    /// Discrete kitchen grid of `width` x `height` cells. Defaults to the
    /// no-sharing + empties-allowed validity policy.
    pub fn grid(
        id: impl Into<String>,
        width: usize,
        height: usize,
        starts: Vec<Cell>,
        targets: Vec<Cell>,
        labels: Vec<String>,
        obstacles: Vec<Cell>,
        horizon: usize,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Scenario("grid dimensions must be positive".into()));
        }
        let bounds = Rect::new(
            Vec2::zero(),
            Vec2::new(real((width - 1) as f64), real((height - 1) as f64)),
        );
        let s = Scenario {
            id: id.into(),
            kind: EnvKind::GridKitchen,
            starts: starts.into_iter().map(Cell::to_vec2).collect(),
            targets: targets.into_iter().map(Cell::to_vec2).collect(),
            labels,
            bounds,
            obstacles: obstacles.into_iter().collect(),
            step_size: T::one(),
            horizon,
            policy: ValidityPolicy::no_sharing_empties(),
            caches: OnceLock::new(),
        };
        s.validate()
    }

    /// Overrides the validity policy (the constructors install each
    /// environment's conventional policy).
    pub fn with_policy(mut self, policy: ValidityPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(mut self) -> Result<Self> {
        if self.id.is_empty() {
            return Err(Error::Scenario("scenario id must be nonempty".into()));
        }
        if self.starts.is_empty() {
            return Err(Error::Scenario("scenario needs at least one agent".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Scenario("scenario needs at least one subtask".into()));
        }
        if self.targets.len() > 16 {
            return Err(Error::SizeLimit {
                what: "subtask count",
                got: self.targets.len() as u64,
                limit: 16,
            });
        }
        if !self.bounds.is_proper() {
            return Err(Error::Scenario("bounds rectangle is inverted".into()));
        }
        if self.labels.is_empty() {
            self.labels = (0..self.targets.len()).map(|i| format!("t{i}")).collect();
        }
        if self.labels.len() != self.targets.len() {
            return Err(Error::Scenario(format!(
                "{} labels for {} subtasks",
                self.labels.len(),
                self.targets.len()
            )));
        }
        for (i, p) in self.starts.iter().chain(self.targets.iter()).enumerate() {
            if !self.bounds.contains(*p) {
                return Err(Error::Scenario(format!(
                    "position ({}, {}) lies outside the workspace bounds",
                    p.x, p.y
                )));
            }
            if self.kind == EnvKind::GridKitchen && !p.is_integral(real(1e-9)) {
                return Err(Error::Scenario(format!(
                    "grid position ({}, {}) is not on a cell (entry {i})",
                    p.x, p.y
                )));
            }
        }
        if self.kind == EnvKind::GridKitchen {
            for c in &self.obstacles {
                if !self.bounds.contains_cell(*c) {
                    return Err(Error::Scenario(format!(
                        "obstacle ({}, {}) lies outside the grid",
                        c.x, c.y
                    )));
                }
            }
            for p in self.starts.iter().chain(self.targets.iter()) {
                if self.obstacles.contains(&p.to_cell()) {
                    return Err(Error::Scenario(format!(
                        "position ({}, {}) sits on an obstacle",
                        p.x, p.y
                    )));
                }
            }
        } else if !self.obstacles.is_empty() {
            return Err(Error::Scenario(
                "obstacles are only supported on the kitchen grid".into(),
            ));
        }
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    pub fn agent_count(&self) -> usize {
        self.starts.len()
    }

    pub fn subtask_count(&self) -> usize {
        self.targets.len()
    }

    pub fn starts(&self) -> &[Vec2<T>] {
        &self.starts
    }

    pub fn targets(&self) -> &[Vec2<T>] {
        &self.targets
    }

    pub fn target(&self, t: SubtaskId) -> Vec2<T> {
        self.targets[t.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, t: SubtaskId) -> &str {
        &self.labels[t.0]
    }

    pub fn bounds(&self) -> &Rect<T> {
        &self.bounds
    }

    pub fn obstacles(&self) -> &BTreeSet<Cell> {
        &self.obstacles
    }

    pub fn step_size(&self) -> T {
        self.step_size
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn policy(&self) -> ValidityPolicy {
        self.policy
    }

    /// The enumerated allocation set Θ of this scenario, canonical order.
    pub fn allocations(&self) -> Result<Vec<Allocation>> {
        crate::domain::enumerate_allocations(self.agent_count(), self.subtask_count(), &self.policy)
    }

    /// All agents at their start positions, nothing reached yet except
    /// targets an agent happens to start on.
    pub fn initial_state(&self) -> JointState<T> {
        let mut s = JointState {
            positions: self.starts.clone(),
            reached: vec![SubtaskMask::empty(); self.starts.len()],
            step: 0,
        };
        self.mark_reached(&mut s);
        s
    }

    fn reach_tol(&self) -> T {
        real(REACH_TOLERANCE)
    }

    /// Targets touched by standing at `p`.
    pub fn touched_at(&self, p: Vec2<T>) -> SubtaskMask {
        let mut m = SubtaskMask::empty();
        for (t, g) in self.targets.iter().enumerate() {
            let hit = match self.kind {
                EnvKind::PursuitEvasion => p.dist(*g) <= self.reach_tol(),
                EnvKind::GridKitchen => p.to_cell() == g.to_cell(),
            };
            if hit {
                m.insert(SubtaskId(t));
            }
        }
        m
    }

    fn mark_reached(&self, s: &mut JointState<T>) {
        for (i, p) in s.positions.iter().enumerate() {
            s.reached[i] = s.reached[i].union(self.touched_at(*p));
        }
    }

    /// Single-agent dynamics: where a move lands one agent, with the same
    /// saturation rules as the joint transition.
    pub fn agent_transition(&self, p: Vec2<T>, m: Vec2<T>) -> Vec2<T> {
        match self.kind {
            EnvKind::PursuitEvasion => {
                let mag = m.norm();
                let m = if mag > self.step_size {
                    m.scale(self.step_size / mag)
                } else {
                    m
                };
                (p + m).clamp_to(&self.bounds)
            }
            EnvKind::GridKitchen => {
                let (dx, dy) = GridMove::nearest(m).delta();
                let c = p.to_cell().offset(dx, dy);
                if self.bounds.contains_cell(c) && !self.obstacles.contains(&c) {
                    c.to_vec2()
                } else {
                    p
                }
            }
        }
    }

    /// Deterministic one-step dynamics. Oversized continuous moves saturate
    /// to the step-size bound; blocked grid moves resolve to stay.
    pub fn transition(&self, s: &JointState<T>, a: &JointAction<T>) -> Result<JointState<T>> {
        let n = self.agent_count();
        if s.positions.len() != n || s.reached.len() != n {
            return Err(Error::Structural(format!(
                "state has {} agents, scenario has {n}",
                s.positions.len()
            )));
        }
        if a.moves.len() != n {
            return Err(Error::Structural(format!(
                "action has {} moves, scenario has {n} agents",
                a.moves.len()
            )));
        }
        let positions = s
            .positions
            .iter()
            .zip(&a.moves)
            .map(|(p, m)| self.agent_transition(*p, *m))
            .collect();
        let mut next = JointState {
            positions,
            reached: s.reached.clone(),
            step: s.step + 1,
        };
        self.mark_reached(&mut next);
        Ok(next)
    }

    /// The finite candidate action set of a single agent, identical for all
    /// agents: 33 displacements for the continuous kind (zero, then 16
    /// compass headings at full and half magnitude), the 5 native moves for
    /// the grid.
    pub fn agent_action_candidates(&self) -> Vec<Vec2<T>> {
        match self.kind {
            EnvKind::GridKitchen => GridMove::ALL.iter().map(|m| m.displacement()).collect(),
            EnvKind::PursuitEvasion => {
                let mut v = Vec::with_capacity(2 * COMPASS_HEADINGS + 1);
                v.push(Vec2::zero());
                let half = self.step_size / real(2.0);
                for j in 0..COMPASS_HEADINGS {
                    let ang = 2.0 * std::f64::consts::PI * (j as f64) / (COMPASS_HEADINGS as f64);
                    let dir = Vec2::new(real(ang.cos()), real(ang.sin()));
                    v.push(dir.scale(self.step_size));
                    v.push(dir.scale(half));
                }
                v
            }
        }
    }

    /// Snaps an arbitrary displacement to the nearest candidate action
    /// (ties break toward the lower candidate index).
    pub fn snap_action(&self, m: Vec2<T>) -> Vec2<T> {
        let mut best = Vec2::zero();
        let mut best_d = T::infinity();
        for c in self.agent_action_candidates() {
            let d = m.dist(c);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    fn caches(&self) -> &Caches<T> {
        self.caches.get_or_init(|| self.build_caches())
    }

    fn grid_dims(&self) -> (usize, usize) {
        let w = (self.bounds.max.x - self.bounds.min.x)
            .round()
            .to_usize()
            .expect("grid width")
            + 1;
        let h = (self.bounds.max.y - self.bounds.min.y)
            .round()
            .to_usize()
            .expect("grid height")
            + 1;
        (w, h)
    }

    fn cell_index(&self, c: Cell) -> usize {
        let (w, _) = self.grid_dims();
        let ox = self.bounds.min.x.round().to_i64().expect("origin x");
        let oy = self.bounds.min.y.round().to_i64().expect("origin y");
        ((c.y - oy) as usize) * w + ((c.x - ox) as usize)
    }

    /// Breadth-first distance field from `src` over free cells.
    fn bfs_field(&self, src: Cell) -> Vec<Option<u32>> {
        let (w, h) = self.grid_dims();
        let mut field = vec![None; w * h];
        let mut queue = VecDeque::new();
        field[self.cell_index(src)] = Some(0);
        queue.push_back(src);
        while let Some(c) = queue.pop_front() {
            let d = field[self.cell_index(c)].expect("visited cell");
            for m in [GridMove::Up, GridMove::Down, GridMove::Left, GridMove::Right] {
                let (dx, dy) = m.delta();
                let nc = c.offset(dx, dy);
                if !self.bounds.contains_cell(nc) || self.obstacles.contains(&nc) {
                    continue;
                }
                let idx = self.cell_index(nc);
                if field[idx].is_none() {
                    field[idx] = Some(d + 1);
                    queue.push_back(nc);
                }
            }
        }
        field
    }

    /// Distance from an arbitrary position to one target: Euclidean for the
    /// continuous kind, breadth-first grid distance otherwise. None when the
    /// target is walled off.
    fn point_to_target(&self, p: Vec2<T>, t: SubtaskId) -> Option<T> {
        match self.kind {
            EnvKind::PursuitEvasion => Some(p.dist(self.targets[t.0])),
            EnvKind::GridKitchen => self.caches().fields[t.0][self.cell_index(p.to_cell())]
                .map(|d| real_of_usize(d as usize)),
        }
    }

    fn build_caches(&self) -> Caches<T> {
        let fields = match self.kind {
            EnvKind::GridKitchen => self
                .targets
                .iter()
                .map(|g| self.bfs_field(g.to_cell()))
                .collect(),
            EnvKind::PursuitEvasion => Vec::new(),
        };
        // Distances between target pairs, straight from geometry (continuous)
        // or the fields just built (grid).
        let m = self.targets.len();
        let pair = |a: usize, b: usize| -> Option<T> {
            match self.kind {
                EnvKind::PursuitEvasion => Some(self.targets[a].dist(self.targets[b])),
                EnvKind::GridKitchen => {
                    let fields: &Vec<Vec<Option<u32>>> = &fields;
                    fields[b][self.cell_index(self.targets[a].to_cell())]
                        .map(|d| real_of_usize(d as usize))
                }
            }
        };
        // tail[t][mask] by dynamic programming over subsets in ascending
        // popcount order (a subset is always processed before its supersets).
        let mut tail = vec![vec![None; 1usize << m]; m];
        for row in tail.iter_mut() {
            row[0] = Some(T::zero());
        }
        for mask in 1usize..(1 << m) {
            for t in 0..m {
                let mut best: Option<T> = None;
                for s in 0..m {
                    if mask & (1 << s) == 0 {
                        continue;
                    }
                    let rest = mask & !(1 << s);
                    if let (Some(d), Some(r)) = (pair(t, s), tail[s][rest]) {
                        let c = d + r;
                        if best.map_or(true, |b| c < b) {
                            best = Some(c);
                        }
                    }
                }
                tail[t][mask] = best;
            }
        }
        Caches { fields, tail }
    }

    fn unreachable_error(&self, pos: Vec2<T>, remaining: SubtaskMask) -> Error {
        let t = remaining
            .iter()
            .find(|&t| self.point_to_target(pos, t).is_none())
            .or_else(|| remaining.iter().next())
            .expect("nonempty remaining set");
        Error::UnreachableSubtask {
            subtask: t.0,
            detail: format!("no path from ({}, {})", pos.x, pos.y),
        }
    }

    /// Cheapest cost for one agent at `pos` to visit every target in
    /// `remaining`, using the exact optimal visiting order.
    pub fn agent_cost_to_go(&self, pos: Vec2<T>, remaining: SubtaskMask) -> Result<T> {
        if remaining.is_empty() {
            return Ok(T::zero());
        }
        let caches = self.caches();
        let mut best: Option<T> = None;
        for t in remaining.iter() {
            let rest = remaining.minus(SubtaskMask::singleton(t));
            if let (Some(d), Some(r)) = (self.point_to_target(pos, t), caches.tail[t.0][rest.0 as usize]) {
                let c = d + r;
                if best.map_or(true, |b| c < b) {
                    best = Some(c);
                }
            }
        }
        best.ok_or_else(|| self.unreachable_error(pos, remaining))
    }

    /// The optimal visiting order realizing [`Scenario::agent_cost_to_go`]
    /// (ties break toward the lower subtask index).
    pub fn visit_order(&self, pos: Vec2<T>, remaining: SubtaskMask) -> Result<Vec<SubtaskId>> {
        let mut order = Vec::with_capacity(remaining.len());
        let mut cur = pos;
        let mut rem = remaining;
        let caches = self.caches();
        while !rem.is_empty() {
            let mut best: Option<(T, SubtaskId)> = None;
            for t in rem.iter() {
                let rest = rem.minus(SubtaskMask::singleton(t));
                if let (Some(d), Some(r)) =
                    (self.point_to_target(cur, t), caches.tail[t.0][rest.0 as usize])
                {
                    let c = d + r;
                    if best.map_or(true, |(b, _)| c < b) {
                        best = Some((c, t));
                    }
                }
            }
            let (_, t) = best.ok_or_else(|| self.unreachable_error(cur, rem))?;
            order.push(t);
            cur = self.targets[t.0];
            rem.remove(t);
        }
        Ok(order)
    }

    /// Joint remaining cost for allocation `theta` from state `s`: the sum of
    /// per-agent costs over each agent's unreached assigned targets.
    pub fn cost_to_go(&self, theta: &Allocation, s: &JointState<T>) -> Result<T> {
        self.check_state(theta, s)?;
        let mut total = T::zero();
        for i in theta.agents() {
            let remaining = theta.mask_of(i).minus(s.reached[i.0]);
            total = total + self.agent_cost_to_go(s.positions[i.0], remaining)?;
        }
        Ok(total)
    }

    fn check_state(&self, theta: &Allocation, s: &JointState<T>) -> Result<()> {
        if theta.agent_count() != self.agent_count() || s.positions.len() != self.agent_count() {
            return Err(Error::Structural(format!(
                "allocation has {} agents, state {}, scenario {}",
                theta.agent_count(),
                s.positions.len(),
                self.agent_count()
            )));
        }
        Ok(())
    }

    /// Q_θ(s, a) = −(joint cost-to-go of the successor state).
    pub fn q_value(&self, theta: &Allocation, s: &JointState<T>, a: &JointAction<T>) -> Result<T> {
        let next = self.transition(s, a)?;
        Ok(-self.cost_to_go(theta, &next)?)
    }

    /// Minimum steps for one agent to finish `remaining` from `pos`: grid
    /// path length on the kitchen, ceil(distance / step size) on the field.
    pub fn agent_completion_steps(&self, pos: Vec2<T>, remaining: SubtaskMask) -> Result<usize> {
        let c = self.agent_cost_to_go(pos, remaining)?;
        match self.kind {
            EnvKind::GridKitchen => Ok(c.round().to_usize().expect("grid steps")),
            EnvKind::PursuitEvasion => {
                let ratio = c / self.step_size;
                // Guard against float noise pushing an exact multiple up a step.
                Ok((ratio - real(1e-9)).ceil().max(T::zero()).to_usize().expect("steps"))
            }
        }
    }

    /// Minimum steps for the team (moving simultaneously) to complete all of
    /// theta's subtasks from `s`: the max over agents of their own steps.
    pub fn completion_steps(&self, theta: &Allocation, s: &JointState<T>) -> Result<usize> {
        self.check_state(theta, s)?;
        let mut k = 0;
        for i in theta.agents() {
            let remaining = theta.mask_of(i).minus(s.reached[i.0]);
            k = k.max(self.agent_completion_steps(s.positions[i.0], remaining)?);
        }
        Ok(k)
    }

    /// V_θ(s) = γ^k with k the team completion steps; lies in (0, 1].
    pub fn value(&self, theta: &Allocation, s: &JointState<T>, gamma: T) -> Result<T> {
        let k = self.completion_steps(theta, s)?;
        Ok(gamma.powi(k as i32))
    }

    /// True iff every agent has reached every target assigned to it at some
    /// step up to now (reach history, not instantaneous position).
    pub fn is_complete(&self, theta: &Allocation, s: &JointState<T>) -> bool {
        theta
            .agents()
            .all(|i| s.reached[i.0].contains_all(theta.mask_of(i)))
    }

    /// Shortest grid path from a cell to a target, both endpoints included.
    /// Reconstructed by descending the breadth-first field with a fixed
    /// neighbor order, so the route is deterministic.
    pub fn grid_route(&self, from: Cell, t: SubtaskId) -> Result<Vec<Cell>> {
        debug_assert_eq!(self.kind, EnvKind::GridKitchen);
        let field = &self.caches().fields[t.0];
        let mut d = field[self.cell_index(from)].ok_or_else(|| Error::UnreachableSubtask {
            subtask: t.0,
            detail: format!("no path on the grid from ({}, {})", from.x, from.y),
        })?;
        let mut route = vec![from];
        let mut cur = from;
        while d > 0 {
            let mut advanced = false;
            for m in [GridMove::Up, GridMove::Down, GridMove::Left, GridMove::Right] {
                let (dx, dy) = m.delta();
                let nc = cur.offset(dx, dy);
                if !self.bounds.contains_cell(nc) || self.obstacles.contains(&nc) {
                    continue;
                }
                if field[self.cell_index(nc)] == Some(d - 1) {
                    cur = nc;
                    d -= 1;
                    route.push(nc);
                    advanced = true;
                    break;
                }
            }
            debug_assert!(advanced, "breadth-first field must descend to its source");
        }
        Ok(route)
    }

    /// Shortest grid path between two free cells (both included), or None if
    /// they are disconnected. Same deterministic descent as `grid_route`, on
    /// an ad-hoc breadth-first field — used for detour waypoints that are not
    /// targets.
    pub fn grid_path_cells(&self, from: Cell, to: Cell) -> Option<Vec<Cell>> {
        debug_assert_eq!(self.kind, EnvKind::GridKitchen);
        let field = self.bfs_field(to);
        let mut d = field[self.cell_index(from)]?;
        let mut route = vec![from];
        let mut cur = from;
        while d > 0 {
            let mut advanced = false;
            for m in [GridMove::Up, GridMove::Down, GridMove::Left, GridMove::Right] {
                let (dx, dy) = m.delta();
                let nc = cur.offset(dx, dy);
                if !self.bounds.contains_cell(nc) || self.obstacles.contains(&nc) {
                    continue;
                }
                if field[self.cell_index(nc)] == Some(d - 1) {
                    cur = nc;
                    d -= 1;
                    route.push(nc);
                    advanced = true;
                    break;
                }
            }
            debug_assert!(advanced, "breadth-first field must descend to its source");
        }
        Some(route)
    }

    /// Replays a per-step action list through the dynamics from the initial
    /// state, yielding a consistent trajectory.
    pub fn trajectory_from_actions(&self, actions: &[JointAction<T>]) -> Result<Trajectory<T>> {
        let mut state = self.initial_state();
        let mut steps = Vec::with_capacity(actions.len());
        for a in actions {
            let next = self.transition(&state, a)?;
            steps.push(Step {
                state,
                action: a.clone(),
            });
            state = next;
        }
        Ok(Trajectory {
            steps,
            terminal: state,
        })
    }

    /// Validates raw action input step by step, naming the offending step:
    /// wrong agent count, continuous magnitude above the step-size bound, or
    /// a grid displacement that is not a native move.
    pub fn validate_actions(&self, actions: &[JointAction<T>]) -> Result<()> {
        let tol = real::<T>(CONSISTENCY_TOLERANCE);
        for (k, a) in actions.iter().enumerate() {
            if a.moves.len() != self.agent_count() {
                return Err(Error::Structural(format!(
                    "step {k}: {} moves for {} agents",
                    a.moves.len(),
                    self.agent_count()
                )));
            }
            for (i, m) in a.moves.iter().enumerate() {
                match self.kind {
                    EnvKind::PursuitEvasion => {
                        if m.norm() > self.step_size + tol {
                            return Err(Error::Structural(format!(
                                "step {k}: agent {i} moves {} which exceeds the step bound {}",
                                m.norm(),
                                self.step_size
                            )));
                        }
                    }
                    EnvKind::GridKitchen => {
                        let native = GridMove::nearest(*m).displacement();
                        if m.dist(native) > tol {
                            return Err(Error::Structural(format!(
                                "step {k}: agent {i} move ({}, {}) is not a grid move",
                                m.x, m.y
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Verifies the dynamics-consistency invariant: each stored successor
    /// state matches the transition of its predecessor.
    pub fn check_consistency(&self, xi: &Trajectory<T>) -> Result<()> {
        let tol = real::<T>(CONSISTENCY_TOLERANCE);
        for (k, step) in xi.steps.iter().enumerate() {
            let expect = self.transition(&step.state, &step.action)?;
            let got = xi.state_at(k + 1);
            let matches = expect.step == got.step
                && expect.reached == got.reached
                && expect
                    .positions
                    .iter()
                    .zip(&got.positions)
                    .all(|(a, b)| a.dist(*b) <= tol);
            if !matches {
                return Err(Error::Structural(format!(
                    "trajectory step {k} does not follow from the dynamics"
                )));
            }
        }
        Ok(())
    }
}
