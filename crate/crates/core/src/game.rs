//! The testing-by-betting game: per-round bets, wealth accumulation and the
//! `log(1/delta)` rejection threshold.

use serde::{Deserialize, Serialize};

use crate::betting::BettingStrategy;
use crate::evariables::{dominating_lambda, eval_coinbet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: usize,
    pub x: f64,
    pub lambda: f64,
    pub e_value: f64,
    pub log_wealth: f64,
    /// Sticky: true from the first round whose wealth crosses the threshold.
    #[serde(serialize_with = "crate::io::bool_as_int", deserialize_with = "crate::io::int_as_bool")]
    pub rejected: bool,
}

/// Round-by-round record of one game testing the mean `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthLedger {
    mu: f64,
    delta: f64,
    threshold: f64,
    rows: Vec<LedgerRow>,
    rejected_at: Option<usize>,
}

impl WealthLedger {
    pub fn new(mu: f64, delta: f64) -> Self {
        Self {
            mu,
            delta,
            threshold: (1.0 / delta).ln(),
            rows: Vec::new(),
            rejected_at: None,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `log(1 / delta)`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn rounds(&self) -> usize {
        self.rows.len()
    }

    /// First round whose log-wealth exceeded the threshold.
    pub fn rejected_at(&self) -> Option<usize> {
        self.rejected_at
    }

    /// Log-wealth after `n` rounds (`0` for `n = 0`).
    pub fn log_wealth_at(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.rows[n - 1].log_wealth
        }
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_wealth_at(self.rows.len())
    }

    /// Whether the game is bankrupt (log-wealth saturated at `-inf`).
    pub fn is_bankrupt(&self) -> bool {
        self.log_wealth() == f64::NEG_INFINITY
    }

    /// Appends a round with an arbitrary non-negative e-value.
    pub fn record(&mut self, x: f64, lambda: f64, e_value: f64) -> &LedgerRow {
        let e_value = e_value.max(0.0);
        let log_wealth = self.log_wealth() + e_value.ln();
        let t = self.rows.len() + 1;
        if self.rejected_at.is_none() && log_wealth > self.threshold {
            self.rejected_at = Some(t);
        }
        self.rows.push(LedgerRow {
            t,
            x,
            lambda,
            e_value,
            log_wealth,
            rejected: self.rejected_at.is_some(),
        });
        self.rows.last().unwrap()
    }

    /// One coin-betting round: the bet is fixed before `x` is shown to the
    /// strategy.
    pub fn play_round<S: BettingStrategy + ?Sized>(&mut self, strategy: &mut S, x: f64) -> &LedgerRow {
        let lambda = strategy.bet();
        let e_value = eval_coinbet(self.mu, lambda, x);
        strategy.observe(x);
        self.record(x, lambda, e_value)
    }

    /// Log-wealth path recomputed from the stored e-values, summed in round
    /// order.
    pub fn recompute_log_wealth(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.rows
            .iter()
            .map(|r| {
                acc += r.e_value.ln();
                acc
            })
            .collect()
    }
}

pub fn run_game<S: BettingStrategy + ?Sized>(mu: f64, delta: f64, strategy: &mut S, xs: &[f64]) -> WealthLedger {
    let mut ledger = WealthLedger::new(mu, delta);
    for &x in xs {
        ledger.play_round(strategy, x);
    }
    ledger
}

/// Whether a game ever rejects, without keeping the ledger.
pub fn ever_rejects<S: BettingStrategy + ?Sized>(mu: f64, delta: f64, strategy: &mut S, xs: &[f64]) -> bool {
    let threshold = (1.0 / delta).ln();
    let mut log_wealth = 0.0;
    for &x in xs {
        let e = eval_coinbet(mu, strategy.bet(), x).max(0.0);
        strategy.observe(x);
        log_wealth += e.ln();
        if log_wealth > threshold {
            return true;
        }
    }
    false
}

/// Per-round Hoeffding parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AlphaSchedule {
    Constant(f64),
    /// `alphas[t - 1]` at round `t`; the last entry is held past the end.
    Sequence(Vec<f64>),
}

impl AlphaSchedule {
    pub fn alpha(&self, t: usize) -> f64 {
        match self {
            AlphaSchedule::Constant(a) => *a,
            AlphaSchedule::Sequence(v) => v.get(t - 1).or(v.last()).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: usize,
    #[serde(rename = "logW_hoeffding")]
    pub log_wealth_hoeffding: f64,
    #[serde(rename = "logW_coinbet")]
    pub log_wealth_coinbet: f64,
    pub gap: f64,
}

/// Plays a Hoeffding-class game and its coin-bet shadow on the same stream.
///
/// `rule(t, history)` picks `alpha_t` from the first `t - 1` observations;
/// the shadow bets `dominating_lambda(mu, alpha_t)` in the same round.
pub fn compare_hoeffding(
    mu: f64,
    xs: &[f64],
    mut rule: impl FnMut(usize, &[f64]) -> f64,
) -> Vec<ComparisonRow> {
    let mut log_h = 0.0;
    let mut log_cb = 0.0;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = i + 1;
            let alpha = rule(t, &xs[..i]);
            let lambda = dominating_lambda(mu, alpha);
            log_h += alpha * (x - mu) - alpha * alpha / 8.0;
            log_cb += eval_coinbet(mu, lambda, x).max(0.0).ln();
            ComparisonRow {
                t,
                log_wealth_hoeffding: log_h,
                log_wealth_coinbet: log_cb,
                gap: log_cb - log_h,
            }
        })
        .collect()
}

pub fn compare_schedule(mu: f64, xs: &[f64], schedule: &AlphaSchedule) -> Vec<ComparisonRow> {
    compare_hoeffding(mu, xs, |t, _| schedule.alpha(t))
}
