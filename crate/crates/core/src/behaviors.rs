//! Per-agent decision policies.
//!
//! Each policy maps an agent and a frozen view of the current tick to the
//! patch the agent will walk toward. None of them mutate shared state; the
//! engine applies the resulting movement.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::EvacError;
use crate::grid::{ExitSide, GridSpec, Patch, PatchField};
use crate::utilities::{total_utility, BnePredictionParams, ExpectedComfortCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Shortest Route
    Sr,
    /// Random Follow
    Rf,
    /// Bayesian Nash Equilibrium
    Bne,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Sr => "SR",
            Policy::Rf => "RF",
            Policy::Bne => "BNE",
        })
    }
}

impl FromStr for Policy {
    type Err = EvacError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SR" => Ok(Policy::Sr),
            "RF" => Ok(Policy::Rf),
            "BNE" => Ok(Policy::Bne),
            other => Err(EvacError::InvalidConfig(format!(
                "unknown policy `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    /// Continuous position in patch units.
    pub x: f64,
    pub y: f64,
    pub policy: Policy,
    pub exit_side: ExitSide,
    /// Current speed in m/s.
    pub speed: f64,
    /// Leader picked on the latest tick (random-follow agents only).
    pub leader: Option<AgentId>,
}

impl AgentState {
    pub fn patch(&self) -> Patch {
        Patch::containing(self.x, self.y)
    }
}

/// Up to six patches a directed agent may move into: the forward three, the
/// two lateral ones and its own patch. Order is fixed:
/// lateral-up, forward-up, forward, forward-down, lateral-down, stay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    patches: [Patch; 6],
    len: usize,
}

impl CandidateSet {
    pub fn as_slice(&self) -> &[Patch] {
        &self.patches[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, p: Patch) -> bool {
        self.as_slice().contains(&p)
    }
}

pub fn candidate_patches(agent: &AgentState, spec: &GridSpec) -> CandidateSet {
    candidates_from(agent.patch(), agent.exit_side, spec)
}

pub fn candidates_from(p: Patch, side: ExitSide, spec: &GridSpec) -> CandidateSet {
    let f = side.forward_dx();
    let raw = [
        Patch::new(p.x, p.y + 1),
        Patch::new(p.x + f, p.y + 1),
        Patch::new(p.x + f, p.y),
        Patch::new(p.x + f, p.y - 1),
        Patch::new(p.x, p.y - 1),
        p,
    ];
    let mut patches = [p; 6];
    let mut len = 0;
    for q in raw {
        if spec.contains(q) {
            patches[len] = q;
            len += 1;
        }
    }
    CandidateSet { patches, len }
}

/// Index of the maximum score, ties broken uniformly at random.
pub fn argmax_random_tie<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> usize {
    assert!(!scores.is_empty(), "argmax over an empty score list");
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut tied = scores
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s == best)
        .map(|(i, _)| i);
    let n = tied.clone().count();
    let k = if n > 1 { rng.gen_range(0..n) } else { 0 };
    tied.nth(k).expect("maximum is attained")
}

/// Agents other than `agent` that may enter `candidate`, i.e. the tick-start
/// occupancy of the candidate's Moore block excluding the agent itself.
pub fn competitor_count(agent: &AgentState, candidate: Patch, field: &PatchField) -> usize {
    let block = field.snapshot_moore(candidate) as usize;
    let own = agent.patch();
    let self_inside = (own.x - candidate.x).abs() <= 1 && (own.y - candidate.y).abs() <= 1;
    if self_inside {
        block.saturating_sub(1)
    } else {
        block
    }
}

/// Scores every candidate with `weight_ud * ud + U_ec(competitors)` and
/// returns the best one.
pub fn bne_decide<R: Rng + ?Sized>(
    agent: &AgentState,
    field: &PatchField,
    params: &BnePredictionParams,
    comfort: &mut ExpectedComfortCache,
    rng: &mut R,
) -> Patch {
    let candidates = candidate_patches(agent, field.spec());
    let mut scores = [0.0f64; 6];
    for (slot, &c) in scores.iter_mut().zip(candidates.as_slice()) {
        let uec = comfort.get(competitor_count(agent, c, field));
        *slot = total_utility(field.ud(agent.exit_side, c), uec, params);
    }
    let best = argmax_random_tie(&scores[..candidates.len()], rng);
    candidates.as_slice()[best]
}

/// One king-move from `from` toward `to`: each axis steps by the sign of the
/// difference.
pub fn step_toward(from: Patch, to: Patch) -> Patch {
    Patch::new(
        from.x + (to.x - from.x).signum(),
        from.y + (to.y - from.y).signum(),
    )
}

/// Next patch on the way to the nearest band cell of the agent's exit.
pub fn sr_decide(agent: &AgentState, spec: &GridSpec) -> Patch {
    let here = agent.patch();
    step_toward(here, spec.nearest_exit_patch(here, agent.exit_side))
}

/// Exit chosen at initialization: the nearer one, midline ties resolved by a
/// fair coin.
pub fn choose_exit_side<R: Rng + ?Sized>(x: f64, spec: &GridSpec, rng: &mut R) -> ExitSide {
    let p = Patch::containing(x, 0.0);
    let to_left = (p.x - spec.exit_column(ExitSide::Left)).abs();
    let to_right = (spec.exit_column(ExitSide::Right) - p.x).abs();
    match to_left.cmp(&to_right) {
        std::cmp::Ordering::Less => ExitSide::Left,
        std::cmp::Ordering::Greater => ExitSide::Right,
        std::cmp::Ordering::Equal => {
            if rng.gen_bool(0.5) {
                ExitSide::Left
            } else {
                ExitSide::Right
            }
        }
    }
}

/// Where an agent stood at the start of the tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionSnapshot {
    pub id: AgentId,
    pub x: f64,
    pub y: f64,
    pub exit_side: ExitSide,
}

/// Bucket index over tick-start agent positions, one bucket per patch.
#[derive(Debug, Clone)]
pub struct PositionIndex {
    spec: GridSpec,
    buckets: Vec<Vec<PositionSnapshot>>,
}

impl PositionIndex {
    pub fn new(spec: GridSpec) -> Self {
        PositionIndex {
            spec,
            buckets: vec![Vec::new(); spec.patch_count()],
        }
    }

    pub fn from_agents<'a, I>(spec: GridSpec, agents: I) -> Self
    where
        I: IntoIterator<Item = &'a AgentState>,
    {
        let mut index = PositionIndex::new(spec);
        index.rebuild(agents);
        index
    }

    pub fn rebuild<'a, I>(&mut self, agents: I)
    where
        I: IntoIterator<Item = &'a AgentState>,
    {
        for b in &mut self.buckets {
            b.clear();
        }
        for a in agents {
            let i = self.spec.index(a.patch());
            self.buckets[i].push(PositionSnapshot {
                id: a.id,
                x: a.x,
                y: a.y,
                exit_side: a.exit_side,
            });
        }
    }

    /// Agents within `radius` of `(x, y)` heading for `side`, excluding
    /// `exclude`. Order is deterministic: row-major over patches, then
    /// insertion order.
    pub fn visible(
        &self,
        x: f64,
        y: f64,
        radius: f64,
        side: ExitSide,
        exclude: AgentId,
        out: &mut Vec<PositionSnapshot>,
    ) {
        out.clear();
        let r2 = radius * radius;
        let x0 = ((x - radius).floor() as i32).max(0);
        let x1 = ((x + radius).floor() as i32).min(self.spec.width as i32 - 1);
        let y0 = ((y - radius).floor() as i32).max(0);
        let y1 = ((y + radius).floor() as i32).min(self.spec.height as i32 - 1);
        for py in y0..=y1 {
            for px in x0..=x1 {
                for s in &self.buckets[self.spec.index(Patch::new(px, py))] {
                    if s.id == exclude || s.exit_side != side {
                        continue;
                    }
                    let (dx, dy) = (s.x - x, s.y - y);
                    if dx * dx + dy * dy <= r2 {
                        out.push(*s);
                    }
                }
            }
        }
    }
}

/// Picks a leader uniformly among the visible same-exit agents that stand
/// strictly closer to the exit, and steps toward it.
///
/// Without such a leader the agent takes its shortest-route step. Returns the
/// target and the chosen leader.
pub fn rf_decide<R: Rng + ?Sized>(
    agent: &AgentState,
    world: &PositionIndex,
    spec: &GridSpec,
    follow_radius: f64,
    rng: &mut R,
    scratch: &mut Vec<PositionSnapshot>,
) -> (Patch, Option<AgentId>) {
    let here = agent.patch();
    let own_distance = spec.exit_distance(here, agent.exit_side);
    world.visible(
        agent.x,
        agent.y,
        follow_radius,
        agent.exit_side,
        agent.id,
        scratch,
    );
    scratch.retain(|s| spec.exit_distance(Patch::containing(s.x, s.y), s.exit_side) < own_distance);
    if scratch.is_empty() {
        return (sr_decide(agent, spec), None);
    }
    let leader = scratch[rng.gen_range(0..scratch.len())];
    let target = step_toward(here, Patch::containing(leader.x, leader.y));
    (target, Some(leader.id))
}
