//! Exact stochastic simulation (Gillespie direct method) of a reaction
//! library with count-based mass-action propensities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reactions::{RateVector, Reaction, ReactionLibrary};
use crate::series::{Ensemble, TimeSeries};

/// Uniform recording grid `t0 + n·h`, `n = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t0: f64,
    pub h: f64,
    pub len: usize,
}

impl Grid {
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    pub initial_counts: Vec<u64>,
    /// Densities are `count / volume`.
    pub volume: f64,
    pub t_end: f64,
    pub record: Grid,
    pub seed: u64,
}

impl SsaConfig {
    fn validate(&self, lib: &ReactionLibrary) -> Result<()> {
        if self.initial_counts.len() != lib.dim() {
            return Err(Error::DimensionMismatch { expected: lib.dim(), got: self.initial_counts.len() });
        }
        if !(self.volume > 0.0) {
            return Err(Error::InvalidArgument("volume must be positive".into()));
        }
        let g = &self.record;
        if g.len == 0 || !(g.h > 0.0) || !(g.t0 >= 0.0) {
            return Err(Error::InvalidArgument("recording grid needs len >= 1, h > 0, t0 >= 0".into()));
        }
        if g.len as f64 * g.h > self.t_end + g.h * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument("recording grid extends past t_end".into()));
        }
        Ok(())
    }
}

/// Count-based propensity: `k·n_i`, `k·n_i(n_i − 1)/(2V)` or `k·n_i n_j / V`.
fn count_propensity(r: &Reaction, k: f64, counts: &[u64], volume: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let c = r.reactants().counts();
    let mut a = k;
    let mut order = 0;
    for (i, &m) in c.iter().enumerate() {
        let n = counts[i] as f64;
        match m {
            0 => {}
            1 => a *= n,
            _ => a *= n * (n - 1.0) / 2.0,
        }
        order += m;
    }
    if order == 2 {
        a /= volume;
    }
    a
}

pub fn gillespie(lib: &ReactionLibrary, rates: &RateVector, cfg: &SsaConfig) -> Result<TimeSeries> {
    cfg.validate(lib)?;
    if rates.len() != lib.len() {
        return Err(Error::DimensionMismatch { expected: lib.len(), got: rates.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = lib.dim();
    let grid = cfg.record;
    let mut counts = cfg.initial_counts.clone();
    let mut data = Vec::with_capacity(grid.len * d);
    let mut props = vec![0.0; lib.len()];
    let mut t = 0.0;
    let mut next = 0;
    let record = |data: &mut Vec<f64>, counts: &[u64]| {
        data.extend(counts.iter().map(|&c| c as f64 / cfg.volume));
    };

    while next < grid.len {
        let mut total = 0.0;
        for (p, (r, &k)) in props.iter_mut().zip(lib.reactions().iter().zip(rates.values())) {
            *p = count_propensity(r, k, &counts, cfg.volume);
            total += *p;
        }
        if total <= 0.0 {
            while next < grid.len {
                record(&mut data, &counts);
                next += 1;
            }
            break;
        }
        let u: f64 = rng.random();
        let tau = -(1.0 - u).ln() / total;
        let t_next = t + tau;
        while next < grid.len && grid.time(next) < t_next {
            record(&mut data, &counts);
            next += 1;
        }
        if next == grid.len {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = props.len() - 1;
        for (j, &p) in props.iter().enumerate() {
            acc += p;
            if target < acc && p > 0.0 {
                chosen = j;
                break;
            }
        }
        // Guard against round-off in the cumulative sum picking a dead reaction.
        if props[chosen] == 0.0 {
            chosen = props.iter().rposition(|&p| p > 0.0).expect("total > 0");
        }
        for (c, &nu) in counts.iter_mut().zip(lib.reactions()[chosen].stoich()) {
            *c = (*c as i64 + i64::from(nu)) as u64;
        }
        t = t_next;
    }
    TimeSeries::new(grid.t0, grid.h, d, data)
}

/// `runs` independent paths with seeds `cfg.seed, cfg.seed + 1, ...`.
pub fn gillespie_ensemble(lib: &ReactionLibrary, rates: &RateVector, cfg: &SsaConfig, runs: usize) -> Result<Ensemble> {
    if runs == 0 {
        return Err(Error::InvalidArgument("ensemble needs at least one run".into()));
    }
    let paths = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(i);
            gillespie(lib, rates, &c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(counts: Vec<u64>, volume: f64, h: f64, len: usize, seed: u64) -> SsaConfig {
        SsaConfig { initial_counts: counts, volume, t_end: h * len as f64, record: Grid { t0: 0.0, h, len }, seed }
    }

    #[test]
    fn zero_rates_freeze_state() {
        let lib = ReactionLibrary::enumerate(2).unwrap();
        let ts = gillespie(&lib, &RateVector::zeros(17), &cfg(vec![10, 20], 10.0, 0.1, 5, 1)).unwrap();
        for r in ts.rows() {
            assert_eq!(r, &[1.0, 2.0]);
        }
    }

    #[test]
    fn counts_never_negative_and_deterministic() {
        let lib = ReactionLibrary::enumerate(2).unwrap();
        let rates = RateVector::new(vec![1.0; 17]).unwrap();
        let c = cfg(vec![5, 3], 5.0, 0.05, 100, 7);
        let a = gillespie(&lib, &rates, &c).unwrap();
        assert!(a.data().iter().all(|&v| v >= 0.0));
        assert_eq!(a, gillespie(&lib, &rates, &c).unwrap());
        // Everything decays away eventually with sinks present.
        assert_eq!(a.last(), &[0.0, 0.0]);
    }

    #[test]
    fn homodimer_needs_two_molecules() {
        let lib = ReactionLibrary::enumerate(1).unwrap();
        // Only X + X -> 0; a single molecule can never react.
        let ts = gillespie(&lib, &RateVector::unit(4, 2), &cfg(vec![1], 1.0, 0.1, 20, 3)).unwrap();
        assert!(ts.data().iter().all(|&v| v == 1.0));
        let ts = gillespie(&lib, &RateVector::unit(4, 2), &cfg(vec![3], 1.0, 1.0, 50, 3)).unwrap();
        assert_eq!(ts.last(), &[1.0]);
    }

    #[test]
    fn grid_validation() {
        let lib = ReactionLibrary::enumerate(1).unwrap();
        let mut c = cfg(vec![1], 1.0, 0.1, 20, 3);
        c.t_end = 0.5;
        assert!(gillespie(&lib, &RateVector::zeros(4), &c).is_err());
        let c = cfg(vec![1, 2], 1.0, 0.1, 20, 3);
        assert!(gillespie(&lib, &RateVector::zeros(4), &c).is_err());
    }

    #[test]
    fn logistic_plateau_at_large_volume() {
        // X -> X + X at rate 1 and X + X -> X at rate 2: the density ODE is
        // x' = x - x², with equilibrium 1.
        let lib = ReactionLibrary::enumerate(1).unwrap();
        let rates = RateVector::new(vec![0.0, 1.0, 0.0, 2.0]).unwrap();
        let v = 1e4;
        let ens = gillespie_ensemble(&lib, &rates, &cfg(vec![1000], v, 0.5, 30, 11), 20).unwrap();
        let m = ens.mean();
        let plateau: f64 = (20..30).map(|n| m.row(n)[0]).sum::<f64>() / 10.0;
        assert!((plateau - 1.0).abs() < 0.01, "plateau {plateau}");
    }
}
