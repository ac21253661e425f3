//! Confidence sequences for the mean: one coin-betting game per candidate
//! `mu` on a grid, all fed the same stream; the confidence set at time `n`
//! keeps the candidates whose log-wealth has not crossed `log(1/delta)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betting::{Strategy, StrategySpec};
use crate::error::{Error, Result};
use crate::game::WealthLedger;

/// Default number of candidate means.
pub const DEFAULT_MU_GRID: usize = 99;

/// `m` equispaced candidates `i / (m + 1)`, `i = 1..=m`.
pub fn mu_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|i| i as f64 / (m + 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsInterval {
    pub t: usize,
    pub lower: f64,
    pub upper: f64,
    pub alive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipRow {
    pub t: usize,
    pub mu: f64,
    pub log_wealth: f64,
    #[serde(serialize_with = "crate::io::bool_as_int", deserialize_with = "crate::io::int_as_bool")]
    pub in_set: bool,
}

#[derive(Debug, Clone)]
pub struct ConfidenceState {
    mu_grid: Vec<f64>,
    players: Vec<Strategy>,
    ledgers: Vec<WealthLedger>,
    delta: f64,
    running_intersect: bool,
}

impl ConfidenceState {
    /// Fresh, independent player per candidate.
    pub fn new(mu_grid: Vec<f64>, delta: f64, spec: &StrategySpec, running_intersect: bool) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parse(format!("delta = {delta} not in (0, 1)")));
        }
        if mu_grid.is_empty() {
            return Err(Error::InvalidSpace("empty mean grid".into()));
        }
        let players = mu_grid.iter().map(|&mu| spec.build(mu)).collect::<Result<Vec<_>>>()?;
        let ledgers = mu_grid.iter().map(|&mu| WealthLedger::new(mu, delta)).collect();
        Ok(Self { mu_grid, players, ledgers, delta, running_intersect })
    }

    pub fn mu_grid(&self) -> &[f64] {
        &self.mu_grid
    }

    pub fn ledgers(&self) -> &[WealthLedger] {
        &self.ledgers
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn running_intersect(&self) -> bool {
        self.running_intersect
    }

    pub fn set_running_intersect(&mut self, on: bool) {
        self.running_intersect = on;
    }

    pub fn rounds(&self) -> usize {
        self.ledgers[0].rounds()
    }

    /// Advances every candidate's game by one observation.
    pub fn cs_update(&mut self, x: f64) {
        self.players
            .par_iter_mut()
            .zip(self.ledgers.par_iter_mut())
            .with_min_len(8)
            .for_each(|(p, l)| {
                l.play_round(p, x);
            });
    }

    pub fn extend(&mut self, xs: &[f64]) {
        for &x in xs {
            self.cs_update(x);
        }
    }

    fn contains(&self, i: usize, n: usize) -> bool {
        let l = &self.ledgers[i];
        if self.running_intersect {
            l.rejected_at().is_none_or(|r| r > n)
        } else {
            l.log_wealth_at(n) <= l.threshold()
        }
    }

    /// Membership of each candidate in the confidence set after `n` rounds.
    pub fn membership(&self, n: usize) -> Vec<bool> {
        assert!(n <= self.rounds(), "round {n} not played yet");
        (0..self.mu_grid.len()).map(|i| self.contains(i, n)).collect()
    }

    /// Hull of the confidence set after `n` rounds; `NaN` bounds when empty.
    pub fn cs_interval(&self, n: usize) -> CsInterval {
        let members = self.membership(n);
        let mut lower = f64::NAN;
        let mut upper = f64::NAN;
        let mut alive = 0;
        for (&mu, _) in self.mu_grid.iter().zip(&members).filter(|(_, m)| **m) {
            if alive == 0 {
                lower = mu;
            }
            upper = mu;
            alive += 1;
        }
        CsInterval { t: n, lower, upper, alive }
    }

    /// Intervals for `t = 1..=rounds`.
    pub fn intervals(&self) -> Vec<CsInterval> {
        (1..=self.rounds()).map(|n| self.cs_interval(n)).collect()
    }

    /// Full `(t, mu)` membership matrix, row-major in `t`.
    pub fn membership_rows(&self) -> Vec<MembershipRow> {
        let mut out = Vec::with_capacity(self.rounds() * self.mu_grid.len());
        for n in 1..=self.rounds() {
            for (i, &mu) in self.mu_grid.iter().enumerate() {
                out.push(MembershipRow {
                    t: n,
                    mu,
                    log_wealth: self.ledgers[i].log_wealth_at(n),
                    in_set: self.contains(i, n),
                });
            }
        }
        out
    }

    /// Whether candidate `i` stayed in every confidence set so far.
    pub fn never_excluded(&self, i: usize) -> bool {
        self.ledgers[i].rejected_at().is_none()
    }

    /// Index of the grid candidate closest to `mu`.
    pub fn nearest(&self, mu: f64) -> usize {
        let mut best = 0;
        for (i, &m) in self.mu_grid.iter().enumerate() {
            if (m - mu).abs() < (self.mu_grid[best] - mu).abs() {
                best = i;
            }
        }
        best
    }
}

/// Runs a confidence sequence over a whole stream.
pub fn run_cs(
    xs: &[f64],
    mu_grid: Vec<f64>,
    delta: f64,
    spec: &StrategySpec,
    running_intersect: bool,
) -> Result<ConfidenceState> {
    let mut state = ConfidenceState::new(mu_grid, delta, spec, running_intersect)?;
    state.extend(xs);
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_excludes_endpoints() {
        let g = mu_grid(99);
        assert_eq!(g.len(), 99);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[98] - 0.99).abs() < 1e-15);
        assert!((g[29] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn no_data_gives_full_span() {
        let s = ConfidenceState::new(mu_grid(9), 0.05, &StrategySpec::Constant(0.0), false).unwrap();
        let iv = s.cs_interval(0);
        assert_eq!((iv.lower, iv.upper, iv.alive), (0.1, 0.9, 9));
    }

    #[test]
    fn trivial_strategy_keeps_everything() {
        let s = run_cs(&[1.0; 50], mu_grid(19), 0.05, &StrategySpec::Constant(0.0), false).unwrap();
        for iv in s.intervals() {
            assert_eq!(iv.alive, 19);
            assert_eq!((iv.lower, iv.upper), (0.05, 0.95));
        }
    }

    #[test]
    fn ones_reject_small_means_first() {
        let spec = StrategySpec::parse("up:201").unwrap();
        let s = run_cs(&[1.0; 40], mu_grid(99), 0.05, &spec, false).unwrap();
        let times: Vec<usize> = s.ledgers().iter().map(|l| l.rejected_at().unwrap_or(usize::MAX)).collect();
        assert!(times[0] < usize::MAX);
        for w in times.windows(2) {
            assert!(w[0] <= w[1], "rejection order not monotone: {times:?}");
        }
    }

    #[test]
    fn empty_set_reports_nan() {
        let spec = StrategySpec::parse("up:101").unwrap();
        // a constant stream at 0.5 wipes out candidates away from 0.5, and
        // the only surviving region collapses once no candidate sits at 0.5
        let grid = vec![0.2, 0.8];
        let s = run_cs(&[0.5; 400], grid, 0.05, &spec, true).unwrap();
        let iv = s.cs_interval(400);
        assert_eq!(iv.alive, 0);
        assert!(iv.lower.is_nan() && iv.upper.is_nan());
    }

    #[test]
    fn running_intersection_is_nested() {
        let xs = crate::domain::DiscreteDistribution::bernoulli(0.5).unwrap().sample_stream(300, 11);
        let spec = StrategySpec::parse("up:101").unwrap();
        let mut s = run_cs(&xs, mu_grid(49), 0.05, &spec, true).unwrap();
        let ivs = s.intervals();
        for w in ivs.windows(2) {
            assert!(w[1].alive <= w[0].alive);
            assert!(w[1].upper - w[1].lower <= w[0].upper - w[0].lower);
        }
        s.set_running_intersect(false);
        let raw = s.intervals();
        for (a, b) in raw.iter().zip(&ivs) {
            assert!(a.alive >= b.alive);
        }
        assert_eq!(s.membership_rows().len(), 300 * 49);
    }
}
