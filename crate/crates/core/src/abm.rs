//! Agent-based tumour growth on a bounded square lattice.
//!
//! Sites are empty, immobile ECM obstacles, or hold one healthy or tumour
//! cell. The lattice is surrounded by a fence with one segment per boundary
//! site; a tumour cell on an intact segment may break it, escaping the
//! lattice. Each step visits the living cells in uniformly random order and
//! applies death, division (into an empty Moore neighbour, or by displacing a
//! weaker neighbour), and movement (a neighbour step or a jump).

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Ensemble, TimeSeries};

const DEFAULT_CONFIG: &str = include_str!("../config/abm_default.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeathProb {
    pub healthy: f64,
    pub tumour: f64,
}

/// Model parameters. Probabilities are per step of length `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbmConfig {
    pub lattice_size: usize,
    pub healthy_density: f64,
    pub tumour_density: f64,
    pub ecm_density: f64,
    pub ecm_breakdown_prob: f64,
    pub death_prob: DeathProb,
    pub movement_prob: f64,
    /// Age (time units) at which a cell may divide.
    pub division_age: f64,
    /// Tumour strength is `1 + competition_rate` (healthy is 1); a blocked
    /// tumour division displaces a healthy neighbour with probability
    /// `min(1, competition_rate)`.
    pub competition_rate: f64,
    /// A moving cell jumps with probability `1 / (1 + stickiness)` and steps
    /// to a neighbour otherwise.
    pub stickiness: f64,
    /// Chebyshev radius of jumps.
    pub jump_radius: usize,
    pub max_healthy_divisions: u32,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    /// Overrides `round(tumour_density · L²)` as the initial tumour count.
    #[serde(default)]
    pub initial_tumour_cells: Option<usize>,
}

impl Default for AbmConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("bundled default config is valid")
    }
}

impl AbmConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: AbmConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        if self.lattice_size == 0 {
            return Err(Error::InvalidArgument("lattice_size must be positive".into()));
        }
        unit("healthy_density", self.healthy_density)?;
        unit("tumour_density", self.tumour_density)?;
        unit("ecm_density", self.ecm_density)?;
        unit("ecm_breakdown_prob", self.ecm_breakdown_prob)?;
        unit("death_prob.healthy", self.death_prob.healthy)?;
        unit("death_prob.tumour", self.death_prob.tumour)?;
        unit("movement_prob", self.movement_prob)?;
        if self.healthy_density + self.tumour_density + self.ecm_density > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument("densities sum to more than 1".into()));
        }
        if !(self.division_age > 0.0) {
            return Err(Error::InvalidArgument("division_age must be positive".into()));
        }
        if !(self.competition_rate >= 0.0) || !(self.stickiness >= 0.0) {
            return Err(Error::InvalidArgument("competition_rate and stickiness must be >= 0".into()));
        }
        if self.jump_radius == 0 || self.max_healthy_divisions == 0 {
            return Err(Error::InvalidArgument("jump_radius and max_healthy_divisions must be positive".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        let (e, h, t) = self.initial_counts();
        if e + h + t > self.lattice_size * self.lattice_size {
            return Err(Error::InvalidArgument(format!("{e} obstacles + {h} healthy + {t} tumour cells do not fit")));
        }
        Ok(())
    }

    /// `(obstacles, healthy, tumour)` placed by [`init_state`].
    pub fn initial_counts(&self) -> (usize, usize, usize) {
        let sites = (self.lattice_size * self.lattice_size) as f64;
        let round = |d: f64| (d * sites).round() as usize;
        let tumour = self.initial_tumour_cells.unwrap_or_else(|| round(self.tumour_density).max(1));
        (round(self.ecm_density), round(self.healthy_density), tumour)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Healthy,
    Tumour,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kind: CellKind,
    pub division_count: u32,
    pub age: f64,
    pub strength: f64,
    acted: u64,
}

impl Cell {
    fn new(kind: CellKind, cfg: &AbmConfig, age: f64, acted: u64) -> Self {
        let strength = match kind {
            CellKind::Healthy => 1.0,
            CellKind::Tumour => 1.0 + cfg.competition_rate,
        };
        Cell { kind, division_count: 0, age, strength, acted }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Site {
    Empty,
    Obstacle,
    Occupied(Cell),
}

#[derive(Debug, Clone)]
pub struct LatticeState {
    size: usize,
    sites: Vec<Site>,
    fence: Vec<bool>,
    time: f64,
    step_index: u64,
    rng: ChaCha8Rng,
}

impl PartialEq for LatticeState {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
            && self.sites == other.sites
            && self.fence == other.fence
            && self.time == other.time
            && self.step_index == other.step_index
            && self.rng.get_word_pos() == other.rng.get_word_pos()
    }
}

/// Counts of each site type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Census {
    pub empty: usize,
    pub obstacles: usize,
    pub healthy: usize,
    pub tumour: usize,
}

pub fn init_state(cfg: &AbmConfig) -> Result<LatticeState> {
    cfg.validate()?;
    let l = cfg.lattice_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n_ecm, n_healthy, n_tumour) = cfg.initial_counts();
    let mut order: Vec<usize> = (0..l * l).collect();
    order.shuffle(&mut rng);
    let mut sites = vec![Site::Empty; l * l];
    let initial_age = |rng: &mut ChaCha8Rng| {
        if cfg.division_age.is_finite() {
            rng.random::<f64>() * cfg.division_age
        } else {
            0.0
        }
    };
    let mut it = order.into_iter();
    for idx in it.by_ref().take(n_ecm) {
        sites[idx] = Site::Obstacle;
    }
    for idx in it.by_ref().take(n_healthy) {
        sites[idx] = Site::Occupied(Cell::new(CellKind::Healthy, cfg, initial_age(&mut rng), 0));
    }
    for idx in it.by_ref().take(n_tumour) {
        sites[idx] = Site::Occupied(Cell::new(CellKind::Tumour, cfg, initial_age(&mut rng), 0));
    }
    let fence_len = if l == 1 { 1 } else { 4 * (l - 1) };
    Ok(LatticeState { size: l, sites, fence: vec![true; fence_len], time: 0.0, step_index: 0, rng })
}

impl LatticeState {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, row: usize, col: usize) -> &Site {
        &self.sites[row * self.size + col]
    }

    /// Integrity flag per boundary site, clockwise from the top-left corner.
    pub fn fence(&self) -> &[bool] {
        &self.fence
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.sites.iter().filter_map(|s| match s {
            Site::Occupied(c) => Some(c),
            _ => None,
        })
    }

    pub fn census(&self) -> Census {
        let mut c = Census::default();
        for s in &self.sites {
            match s {
                Site::Empty => c.empty += 1,
                Site::Obstacle => c.obstacles += 1,
                Site::Occupied(cell) => match cell.kind {
                    CellKind::Healthy => c.healthy += 1,
                    CellKind::Tumour => c.tumour += 1,
                },
            }
        }
        c
    }

    /// `(tumour, healthy)` densities relative to the full lattice.
    pub fn densities(&self) -> [f64; 2] {
        let c = self.census();
        let sites = (self.size * self.size) as f64;
        [c.tumour as f64 / sites, c.healthy as f64 / sites]
    }

    fn fence_index(&self, idx: usize) -> Option<usize> {
        let l = self.size;
        let (r, c) = (idx / l, idx % l);
        if l == 1 {
            Some(0)
        } else if r == 0 {
            Some(c)
        } else if c == l - 1 {
            Some(l - 1 + r)
        } else if r == l - 1 {
            Some(2 * (l - 1) + (l - 1 - c))
        } else if c == 0 {
            Some(3 * (l - 1) + (l - 1 - r))
        } else {
            None
        }
    }

    fn neighbours(&self, idx: usize, radius: usize, out: &mut Vec<usize>) {
        out.clear();
        let l = self.size as isize;
        let (r, c) = ((idx / self.size) as isize, (idx % self.size) as isize);
        let rad = radius as isize;
        for dr in -rad..=rad {
            for dc in -rad..=rad {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (rr, cc) = (r + dr, c + dc);
                if rr >= 0 && rr < l && cc >= 0 && cc < l {
                    out.push((rr * l + cc) as usize);
                }
            }
        }
    }

    /// Advances the lattice by one step of length `cfg.dt`.
    pub fn advance(&mut self, cfg: &AbmConfig) {
        self.step_index += 1;
        let stamp = self.step_index;
        let mut order: Vec<usize> = (0..self.sites.len())
            .filter(|&i| matches!(self.sites[i], Site::Occupied(_)))
            .collect();
        order.shuffle(&mut self.rng);
        let mut near = Vec::with_capacity(8);
        let mut candidates = Vec::with_capacity(8);
        let jump_prob = 1.0 / (1.0 + cfg.stickiness);
        let displace_prob = cfg.competition_rate.min(1.0);

        for idx in order {
            let mut cell = match self.sites[idx] {
                Site::Occupied(c) if c.acted != stamp => c,
                _ => continue,
            };
            cell.acted = stamp;

            let death = match cell.kind {
                CellKind::Healthy => cfg.death_prob.healthy,
                CellKind::Tumour => cfg.death_prob.tumour,
            };
            if self.rng.random::<f64>() < death {
                self.sites[idx] = Site::Empty;
                continue;
            }

            let mut pos = idx;
            let may_divide = cell.age >= cfg.division_age
                && (cell.kind == CellKind::Tumour || cell.division_count < cfg.max_healthy_divisions);
            let mut divided = false;
            if may_divide {
                self.neighbours(idx, 1, &mut near);
                candidates.clear();
                candidates.extend(near.iter().copied().filter(|&n| self.sites[n] == Site::Empty));
                let mut target = candidates.choose(&mut self.rng).copied();
                if target.is_none() && displace_prob > 0.0 {
                    candidates.clear();
                    candidates.extend(near.iter().copied().filter(
                        |&n| matches!(self.sites[n], Site::Occupied(o) if o.strength < cell.strength),
                    ));
                    if !candidates.is_empty() && self.rng.random::<f64>() < displace_prob {
                        target = candidates.choose(&mut self.rng).copied();
                    }
                }
                if let Some(t) = target {
                    cell.division_count += 1;
                    cell.age = 0.0;
                    let mut daughter = cell;
                    daughter.acted = stamp;
                    self.sites[t] = Site::Occupied(daughter);
                    divided = true;
                }
            }

            if !divided && self.rng.random::<f64>() < cfg.movement_prob {
                let radius = if self.rng.random::<f64>() < jump_prob { cfg.jump_radius } else { 1 };
                self.neighbours(idx, radius, &mut near);
                candidates.clear();
                candidates.extend(near.iter().copied().filter(|&n| self.sites[n] == Site::Empty));
                if let Some(&t) = candidates.choose(&mut self.rng) {
                    self.sites[idx] = Site::Empty;
                    pos = t;
                }
            }

            if cell.kind == CellKind::Tumour {
                if let Some(f) = self.fence_index(pos) {
                    if self.fence[f] && self.rng.random::<f64>() < cfg.ecm_breakdown_prob {
                        // The cell breaks through and leaves the lattice.
                        self.fence[f] = false;
                        self.sites[pos] = Site::Empty;
                        continue;
                    }
                }
            }
            self.sites[pos] = Site::Occupied(cell);
        }

        for s in &mut self.sites {
            if let Site::Occupied(c) = s {
                c.age += cfg.dt;
            }
        }
        self.time += cfg.dt;
    }
}

pub fn step(state: &LatticeState, cfg: &AbmConfig) -> LatticeState {
    let mut next = state.clone();
    next.advance(cfg);
    next
}

/// Initial state followed by `cfg.steps` steps; rows are
/// `(tumour density, healthy density)` at every step including t = 0.
pub fn run(cfg: &AbmConfig) -> Result<TimeSeries> {
    let mut state = init_state(cfg)?;
    let mut data = Vec::with_capacity(2 * (cfg.steps + 1));
    data.extend_from_slice(&state.densities());
    for _ in 0..cfg.steps {
        state.advance(cfg);
        data.extend_from_slice(&state.densities());
    }
    TimeSeries::new(0.0, cfg.dt, 2, data)
}

/// `runs` independent simulations with seeds `base_seed, base_seed + 1, ...`,
/// executed in parallel.
pub fn run_ensemble(cfg: &AbmConfig, runs: usize, base_seed: u64) -> Result<Ensemble> {
    if runs == 0 {
        return Err(Error::InvalidArgument("ensemble needs at least one run".into()));
    }
    cfg.validate()?;
    let series = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = base_seed.wrapping_add(i);
            run(&c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(series)
}
