//! Grid world, agents and the per-tick schedule.
//!
//! Random streams: the root seed keys a ChaCha8 generator; stream 0 drives
//! placement and the fixed per-citizen draws, stream 1 drives everything that
//! happens during ticks (activation order, movement, arrests, jail terms).
//! Legitimacy schedules use stream 2 of their own seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{CopRatioScope, WorldParams};
use super::rules;
use crate::error::{Error, Result};

pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_DYNAMICS: u64 = 1;
pub(crate) const STREAM_SCHEDULE: u64 = 2;

/// Generator for legitimacy schedules keyed by `seed`.
pub(crate) fn schedule_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, STREAM_SCHEDULE)
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CitizenState {
    Quiet,
    Active,
    Jailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Citizen {
    pub state: CitizenState,
    pub risk_aversion: f64,
    pub perceived_hardship: f64,
    /// Ticks left to serve; non-zero exactly while Jailed.
    pub jail_remaining: u32,
    /// Current cell, or the cell of arrest while Jailed.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cop {
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovState {
    pub legitimacy: f64,
    pub propaganda: f64,
}

/// Population counts and government parameters recorded after one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickObservation {
    pub time: i64,
    pub quiet: usize,
    pub active: usize,
    pub jailed: usize,
    pub legitimacy: f64,
    pub propaganda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrestEvent {
    pub cop: usize,
    pub citizen: usize,
    pub jail_term: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Occupant {
    Empty,
    Citizen(u32),
    Cop(u32),
}

// compact per-cell view for neighbourhood scans
const EMPTY: u8 = 0;
const QUIET: u8 = 1;
const ACTIVE: u8 = 2;
const COP: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Agent {
    Citizen(u32),
    Cop(u32),
}

/// Full simulation state. Cloning and comparing two worlds compares every
/// agent, the grid and the generator position.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    params: WorldParams,
    citizens: Vec<Citizen>,
    cops: Vec<Cop>,
    grid: Vec<Occupant>,
    kind: Vec<u8>,
    gov: GovState,
    time: i64,
    rng: ChaCha8Rng,
    // cell -> cells within vision (row-major, includes the cell itself)
    vision: Vec<Vec<u16>>,
    adjacent: Vec<Vec<u16>>,
    jailed: usize,
    active: usize,
}

fn disk_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn neighbour_table(width: usize, height: usize, offsets: &[(i64, i64)]) -> Vec<Vec<u16>> {
    let (w, h) = (width as i64, height as i64);
    (0..width * height)
        .map(|cell| {
            let (x, y) = ((cell % width) as i64, (cell / width) as i64);
            let mut cells: Vec<u16> = offsets
                .iter()
                .map(|&(dx, dy)| {
                    let nx = (x + dx).rem_euclid(w);
                    let ny = (y + dy).rem_euclid(h);
                    (ny * w + nx) as u16
                })
                .collect();
            // small grids wrap onto the same cell more than once
            cells.sort_unstable();
            cells.dedup();
            cells
        })
        .collect()
}

impl World {
    /// Places every agent on a distinct random cell; all citizens start Quiet.
    pub fn new(params: WorldParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut init = stream_rng(seed, STREAM_INIT);
        let mut cells: Vec<usize> = (0..params.cells()).collect();
        cells.shuffle(&mut init);
        let citizens = cells[..params.n_citizens]
            .iter()
            .map(|&position| Citizen {
                state: CitizenState::Quiet,
                risk_aversion: init.random(),
                perceived_hardship: init.random(),
                jail_remaining: 0,
                position,
            })
            .collect();
        let cops = cells[params.n_citizens..params.n_citizens + params.n_cops]
            .iter()
            .map(|&position| Cop { position })
            .collect();
        Self::from_parts(params, citizens, cops, stream_rng(seed, STREAM_DYNAMICS))
    }

    /// Builds a world from explicit agents. Free agents must occupy distinct cells.
    pub fn from_parts(
        params: WorldParams,
        citizens: Vec<Citizen>,
        cops: Vec<Cop>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if citizens.len() != params.n_citizens || cops.len() != params.n_cops {
            return Err(Error::InvalidParameter(
                "agent counts disagree with params".into(),
            ));
        }
        params.validate()?;
        if params.cells() > u16::MAX as usize + 1 {
            return Err(Error::InvalidParameter("grid larger than 65536 cells".into()));
        }
        let mut grid = vec![Occupant::Empty; params.cells()];
        let mut place = |cell: usize, who: Occupant| -> Result<()> {
            match grid.get_mut(cell) {
                Some(slot @ Occupant::Empty) => {
                    *slot = who;
                    Ok(())
                }
                Some(_) => Err(Error::InvalidParameter(format!("cell {cell} occupied twice"))),
                None => Err(Error::InvalidParameter(format!("cell {cell} off grid"))),
            }
        };
        let mut jailed = 0;
        let mut active = 0;
        for (i, c) in citizens.iter().enumerate() {
            match c.state {
                CitizenState::Jailed => {
                    if c.jail_remaining == 0 {
                        return Err(Error::InvalidParameter("jailed citizen with no term".into()));
                    }
                    jailed += 1;
                }
                s => {
                    if c.jail_remaining != 0 {
                        return Err(Error::InvalidParameter("free citizen with jail term".into()));
                    }
                    if s == CitizenState::Active {
                        active += 1;
                    }
                    place(c.position, Occupant::Citizen(i as u32))?;
                }
            }
        }
        for (i, c) in cops.iter().enumerate() {
            place(c.position, Occupant::Cop(i as u32))?;
        }
        let vision = neighbour_table(params.width, params.height, &disk_offsets(params.vision));
        let moore: Vec<(i64, i64)> = (-1..=1)
            .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
            .collect();
        let adjacent = neighbour_table(params.width, params.height, &moore);
        let kind = grid
            .iter()
            .map(|o| match o {
                Occupant::Empty => EMPTY,
                Occupant::Cop(_) => COP,
                Occupant::Citizen(j) if citizens[*j as usize].state == CitizenState::Active => ACTIVE,
                Occupant::Citizen(_) => QUIET,
            })
            .collect();
        let gov = GovState {
            legitimacy: params.legitimacy,
            propaganda: params.propaganda,
        };
        Ok(Self {
            params,
            citizens,
            cops,
            grid,
            kind,
            gov,
            time: 0,
            rng,
            vision,
            adjacent,
            jailed,
            active,
        })
    }

    pub fn params(&self) -> &WorldParams {
        &self.params
    }

    pub fn citizens(&self) -> &[Citizen] {
        &self.citizens
    }

    pub fn cops(&self) -> &[Cop] {
        &self.cops
    }

    pub fn gov(&self) -> GovState {
        self.gov
    }

    pub fn set_legitimacy(&mut self, legitimacy: f64) {
        self.gov.legitimacy = legitimacy;
    }

    pub fn set_propaganda(&mut self, propaganda: f64) {
        self.gov.propaganda = propaganda;
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn observe(&self) -> TickObservation {
        TickObservation {
            time: self.time,
            quiet: self.citizens.len() - self.active - self.jailed,
            active: self.active,
            jailed: self.jailed,
            legitimacy: self.gov.legitimacy,
            propaganda: self.gov.propaganda,
        }
    }

    /// Cop ratio seen by citizen `idx`: cops per Active citizen in its scope,
    /// counting the citizen itself as a prospective Active.
    pub fn cop_ratio(&self, idx: usize) -> f64 {
        let cell = self.citizens[idx].position;
        let scope = match self.params.cop_ratio_scope {
            CopRatioScope::Vision => &self.vision[cell],
            CopRatioScope::Adjacent => &self.adjacent[cell],
        };
        let (mut cops, mut actives) = (0usize, 0usize);
        for &n in scope {
            match self.kind[n as usize] {
                COP => cops += 1,
                ACTIVE => actives += 1,
                _ => {}
            }
        }
        if self.citizens[idx].state == CitizenState::Active {
            actives -= 1;
        }
        let ratio = cops as f64 / (actives + 1) as f64;
        if self.params.cop_ratio_floor {
            ratio.floor()
        } else {
            ratio
        }
    }

    /// Local arrest probability estimated by citizen `idx`.
    pub fn local_arrest_probability(&self, idx: usize) -> f64 {
        rules::arrest_probability(self.cop_ratio(idx), self.params.k_arrest)
    }

    /// State citizen `idx` would choose under `propaganda`, all else as it is now.
    /// Jailed citizens stay Jailed.
    pub fn citizen_decision(&self, idx: usize, propaganda: f64) -> CitizenState {
        let c = &self.citizens[idx];
        if c.state == CitizenState::Jailed {
            return CitizenState::Jailed;
        }
        let g = rules::grievance(c.perceived_hardship, self.gov.legitimacy);
        if rules::decides_active(g, c.risk_aversion, self.local_arrest_probability(idx), propaganda) {
            CitizenState::Active
        } else {
            CitizenState::Quiet
        }
    }

    fn citizen_behavior(&mut self, idx: usize) {
        let next = self.citizen_decision(idx, self.gov.propaganda);
        let c = &mut self.citizens[idx];
        match (c.state, next) {
            (CitizenState::Quiet, CitizenState::Active) => self.active += 1,
            (CitizenState::Active, CitizenState::Quiet) => self.active -= 1,
            _ => {}
        }
        c.state = next;
        self.kind[c.position] = if next == CitizenState::Active { ACTIVE } else { QUIET };
    }

    fn random_empty_near(&mut self, cell: usize) -> Option<usize> {
        let near = &self.vision[cell];
        let free = near.iter().filter(|&&n| self.kind[n as usize] == EMPTY).count();
        if free == 0 {
            return None;
        }
        let pick = self.rng.random_range(0..free);
        near.iter()
            .filter(|&&n| self.kind[n as usize] == EMPTY)
            .nth(pick)
            .map(|&n| n as usize)
    }

    fn move_agent(&mut self, cell: usize, who: Occupant) -> usize {
        let Some(target) = self.random_empty_near(cell) else {
            return cell;
        };
        self.grid[cell] = Occupant::Empty;
        self.grid[target] = who;
        self.kind[target] = self.kind[cell];
        self.kind[cell] = EMPTY;
        target
    }

    /// Cop `idx` arrests one Active citizen within vision, chosen uniformly,
    /// if any and jail capacity allows. The cop moves into the arrest cell.
    pub fn enforce(&mut self, idx: usize) -> Option<ArrestEvent> {
        if let Some(cap) = self.params.jail_capacity {
            if self.jailed >= cap {
                return None;
            }
        }
        let cell = self.cops[idx].position;
        let is_suspect = |n: &&u16| self.kind[**n as usize] == ACTIVE;
        let count = self.vision[cell].iter().filter(is_suspect).count();
        if count == 0 {
            return None;
        }
        let pick = self.rng.random_range(0..count);
        let suspect = match self.vision[cell].iter().filter(is_suspect).nth(pick) {
            Some(&n) => match self.grid[n as usize] {
                Occupant::Citizen(j) => j,
                _ => unreachable!(),
            },
            None => unreachable!(),
        };
        let jail_term = self.rng.random_range(1..=self.params.max_jail_term);
        let c = &mut self.citizens[suspect as usize];
        c.state = CitizenState::Jailed;
        c.jail_remaining = jail_term;
        let target = c.position;
        self.active -= 1;
        self.jailed += 1;
        self.grid[cell] = Occupant::Empty;
        self.kind[cell] = EMPTY;
        self.grid[target] = Occupant::Cop(idx as u32);
        self.kind[target] = COP;
        self.cops[idx].position = target;
        Some(ArrestEvent {
            cop: idx,
            citizen: suspect as usize,
            jail_term,
        })
    }

    fn release(&mut self, idx: usize) {
        let home = self.citizens[idx].position;
        let cell = if self.kind[home] == EMPTY {
            home
        } else if let Some(n) = self.random_empty_near(home) {
            n
        } else {
            // agents never outnumber cells, so some cell is free
            let free = self.kind.iter().filter(|&&k| k == EMPTY).count();
            let pick = self.rng.random_range(0..free);
            (0..self.kind.len())
                .filter(|&n| self.kind[n] == EMPTY)
                .nth(pick)
                .expect("an empty cell")
        };
        let c = &mut self.citizens[idx];
        c.state = CitizenState::Quiet;
        c.position = cell;
        self.grid[cell] = Occupant::Citizen(idx as u32);
        self.kind[cell] = QUIET;
        self.jailed -= 1;
    }

    /// Advances one tick and returns the resulting observation.
    ///
    /// Order: jail countdown and release, then every free agent in a freshly
    /// shuffled order moves within vision and acts (citizens decide, cops
    /// enforce).
    pub fn step(&mut self) -> TickObservation {
        self.time += 1;

        for i in 0..self.citizens.len() {
            let c = &mut self.citizens[i];
            if c.state == CitizenState::Jailed {
                c.jail_remaining -= 1;
                if c.jail_remaining == 0 {
                    self.release(i);
                }
            }
        }

        let mut order: Vec<Agent> = self
            .citizens
            .iter()
            .enumerate()
            .filter(|(_, c)| c.state != CitizenState::Jailed)
            .map(|(i, _)| Agent::Citizen(i as u32))
            .chain((0..self.cops.len()).map(|i| Agent::Cop(i as u32)))
            .collect();
        order.shuffle(&mut self.rng);

        for agent in order {
            match agent {
                Agent::Citizen(i) => {
                    let i = i as usize;
                    if self.citizens[i].state == CitizenState::Jailed {
                        continue;
                    }
                    let cell = self.citizens[i].position;
                    self.citizens[i].position = self.move_agent(cell, Occupant::Citizen(i as u32));
                    self.citizen_behavior(i);
                }
                Agent::Cop(i) => {
                    let i = i as usize;
                    let cell = self.cops[i].position;
                    self.cops[i].position = self.move_agent(cell, Occupant::Cop(i as u32));
                    self.enforce(i);
                }
            }
        }

        self.observe()
    }
}
