//! The tick loop.
//!
//! Every tick:
//! 1. occupancy is frozen and the expected-comfort field is recomputed from it;
//! 2. agents act one at a time in a fresh random order: each sets its speed
//!    from the live crowding around it, picks a target patch with its policy
//!    and walks toward the target's center, updating occupancy immediately;
//! 3. agents standing on an exit band are removed;
//! 4. the tick counter advances.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behaviors::{
    bne_decide, choose_exit_side, rf_decide, sr_decide, AgentId, AgentState, Policy, PositionIndex,
    PositionSnapshot,
};
use crate::config::{MovingPattern, SimConfig};
use crate::error::{EvacError, Result};
use crate::grid::{GridSpec, Patch, PatchField};
use crate::metrics::{finalize, record_tick_uec, RunRecord, UecSamples};
use crate::utilities::{speed_from_density, BnePredictionParams, ExpectedComfortCache};

/// Everything that changes while a run progresses.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tick: u64,
    pub agents: Vec<AgentState>,
    pub field: PatchField,
    pub evacuated: usize,
    rng: ChaCha8Rng,
}

/// What one call to [`Simulation::advance_tick`] observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickReport {
    /// Mean expected comfort over occupied patches at the start of the tick.
    pub uec_sample: Option<f64>,
    pub evacuated_this_tick: usize,
    /// Largest distance any agent moved, in patch units.
    pub max_displacement: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    spec: GridSpec,
    params: BnePredictionParams,
    comfort: ExpectedComfortCache,
    world: WorldState,
    samples: UecSamples,
    order: Vec<usize>,
    index: PositionIndex,
    scratch: Vec<PositionSnapshot>,
    has_followers: bool,
}

impl Simulation {
    /// Scatters the population, assigns policies and exits, sets initial
    /// speeds and computes the first comfort field.
    pub fn initialize(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.grid_spec();
        let params = config.prediction_params()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut field = PatchField::build_distance_fields(spec);

        let free: Vec<Patch> = (0..spec.patch_count())
            .map(|i| spec.patch_at(i))
            .filter(|&p| !spec.is_exit(p))
            .collect();

        let n = config.number_persons;
        let mut agents = Vec::with_capacity(n);
        for id in 0..n {
            let p = free[rng.gen_range(0..free.len())];
            let x = p.x as f64 + rng.gen::<f64>();
            let y = p.y as f64 + rng.gen::<f64>();
            let exit_side = choose_exit_side(x, &spec, &mut rng);
            agents.push(AgentState {
                id: AgentId(id as u32),
                x,
                y,
                policy: Policy::Sr,
                exit_side,
                speed: config.move_speed,
                leader: None,
            });
            field.add_agent(p);
        }

        let (fallback, bne) = match config.moving_pattern {
            MovingPattern::Sr => (Policy::Sr, 0),
            MovingPattern::Rf => (Policy::Rf, 0),
            MovingPattern::Bne => (Policy::Bne, n),
            MovingPattern::BneSr => (Policy::Sr, config.bne_count()),
            MovingPattern::BneRf => (Policy::Rf, config.bne_count()),
        };
        for a in agents.iter_mut() {
            a.policy = fallback;
        }
        if bne == n {
            agents.iter_mut().for_each(|a| a.policy = Policy::Bne);
        } else if bne > 0 {
            let mut ids: Vec<usize> = (0..n).collect();
            ids.shuffle(&mut rng);
            for &i in &ids[..bne] {
                agents[i].policy = Policy::Bne;
            }
        }

        for a in agents.iter_mut() {
            let rho = field.occupancy_moore(a.patch())? as f64 / 9.0;
            a.speed = speed_from_density(rho, config.move_speed)?;
        }

        let mut comfort = ExpectedComfortCache::new(params.p_m);
        field.freeze_snapshot();
        refresh_field(&mut field, &mut comfort);

        let has_followers = agents.iter().any(|a| a.policy == Policy::Rf);
        Ok(Simulation {
            config: config.clone(),
            spec,
            params,
            comfort,
            world: WorldState {
                tick: 0,
                agents,
                field,
                evacuated: 0,
                rng,
            },
            samples: UecSamples::default(),
            order: Vec::with_capacity(n),
            index: PositionIndex::new(spec),
            scratch: Vec::new(),
            has_followers,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn is_complete(&self) -> bool {
        self.world.agents.is_empty()
    }

    pub fn samples(&self) -> &UecSamples {
        &self.samples
    }

    /// Recomputes `uec` for every patch from the tick-start occupancy.
    pub fn refresh_expected_comfort(&mut self) {
        self.world.field.freeze_snapshot();
        refresh_field(&mut self.world.field, &mut self.comfort);
    }

    pub fn advance_tick(&mut self) -> Result<TickReport> {
        if self.world.agents.is_empty() {
            return Err(EvacError::RunComplete);
        }
        if self.world.tick >= self.config.max_ticks {
            return Err(EvacError::Stalled {
                tick: self.world.tick,
                remaining: self.world.agents.len(),
            });
        }

        self.refresh_expected_comfort();
        let uec_sample = record_tick_uec(&self.world.field);
        if let Some(s) = uec_sample {
            self.samples.push(s);
        }

        let world = &mut self.world;
        if self.has_followers {
            self.index.rebuild(world.agents.iter());
        }
        self.order.clear();
        self.order.extend(0..world.agents.len());
        self.order.shuffle(&mut world.rng);

        let dt = self.config.tick_seconds();
        let side = self.spec.patch_side;
        let mut max_displacement: f64 = 0.0;
        for &i in &self.order {
            let mut agent = world.agents[i].clone();
            let here = agent.patch();
            let rho = world.field.occupancy_moore(here)? as f64 / 9.0;
            agent.speed = speed_from_density(rho, self.config.move_speed)?;

            let target = match agent.policy {
                Policy::Sr => sr_decide(&agent, &self.spec),
                Policy::Rf => {
                    let (t, leader) = rf_decide(
                        &agent,
                        &self.index,
                        &self.spec,
                        self.config.follow_radius,
                        &mut world.rng,
                        &mut self.scratch,
                    );
                    agent.leader = leader;
                    t
                }
                Policy::Bne => bne_decide(
                    &agent,
                    &world.field,
                    &self.params,
                    &mut self.comfort,
                    &mut world.rng,
                ),
            };

            let (cx, cy) = target.center();
            let (dx, dy) = (cx - agent.x, cy - agent.y);
            let dist = dx.hypot(dy);
            let reach = agent.speed * dt / side;
            if dist > 0.0 {
                let step = reach.min(dist);
                if step >= dist {
                    agent.x = cx;
                    agent.y = cy;
                } else {
                    agent.x += dx / dist * step;
                    agent.y += dy / dist * step;
                }
                max_displacement = max_displacement.max(step);
            }
            let there = agent.patch();
            debug_assert!(
                self.spec.contains(there),
                "agent {} left the grid",
                agent.id
            );
            if there != here {
                world.field.remove_agent(here);
                world.field.add_agent(there);
            }
            world.agents[i] = agent;
        }

        let before = world.agents.len();
        let spec = &self.spec;
        let field = &mut world.field;
        world.agents.retain(|a| {
            let p = a.patch();
            if spec.is_exit(p) {
                field.remove_agent(p);
                false
            } else {
                true
            }
        });
        let evacuated_this_tick = before - world.agents.len();
        world.evacuated += evacuated_this_tick;
        world.tick += 1;

        Ok(TickReport {
            uec_sample,
            evacuated_this_tick,
            max_displacement,
        })
    }

    /// Runs until everybody is out or the tick cap is hit.
    pub fn run(mut self) -> RunRecord {
        self.run_with(|_| {})
    }

    /// Like [`run`](Self::run), calling `observe` before the first tick and
    /// after every tick.
    pub fn run_with<F: FnMut(&Simulation)>(&mut self, mut observe: F) -> RunRecord {
        observe(self);
        while !self.is_complete() && self.world.tick < self.config.max_ticks {
            self.advance_tick()
                .expect("loop guard keeps the tick preconditions");
            observe(self);
        }
        self.record()
    }

    /// Record for the run so far; stalled when agents remain.
    pub fn record(&self) -> RunRecord {
        finalize(
            self.world.tick,
            &self.samples,
            !self.is_complete(),
            &self.config,
        )
    }

    /// Plain-text occupancy grid: a `tick N` line followed by one line per
    /// row, top row first, counts separated by single spaces.
    pub fn snapshot(&self) -> String {
        snapshot(&self.world, &self.spec)
    }
}

fn refresh_field(field: &mut PatchField, comfort: &mut ExpectedComfortCache) {
    let spec = *field.spec();
    for i in 0..spec.patch_count() {
        let n = field.snapshot_moore(spec.patch_at(i)) as usize;
        field.uec[i] = comfort.get(n);
    }
}

pub fn snapshot(world: &WorldState, spec: &GridSpec) -> String {
    let mut out = String::with_capacity(spec.patch_count() * 2 + 16);
    let _ = writeln!(out, "tick {}", world.tick);
    for y in (0..spec.height).rev() {
        for x in 0..spec.width {
            if x > 0 {
                out.push(' ');
            }
            let c = world.field.occupancy[y * spec.width + x];
            let _ = write!(out, "{c}");
        }
        out.push('\n');
    }
    out
}

/// Initializes and runs one simulation.
pub fn run_to_completion(config: &SimConfig) -> Result<RunRecord> {
    Ok(Simulation::initialize(config)?.run())
}
