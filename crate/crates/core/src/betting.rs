//! Betting strategies for the coin-betting game. Every emitted bet lies in
//! `I_mu`, so every round's payoff `1 + lambda (x - mu)` is non-negative.

use serde::{Deserialize, Serialize};

use crate::domain::bet_interval;
use crate::error::{Error, Result};
use crate::evariables::clamp_bet;

/// Default number of quadrature nodes for the universal portfolio.
pub const DEFAULT_UP_NODES: usize = 1001;

/// A player in the coin-betting game. `bet` is queried before the round's
/// outcome is revealed, `observe` afterwards.
pub trait BettingStrategy {
    fn bet(&self) -> f64;
    fn observe(&mut self, x: f64);
}

/// Returns `lambda` whatever the history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantStrategy {
    lambda: f64,
}

impl ConstantStrategy {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        Ok(Self { lambda: constant_bet(mu, lambda)? })
    }
}

pub fn constant_bet(mu: f64, lambda: f64) -> Result<f64> {
    clamp_bet(mu, lambda)
}

impl BettingStrategy for ConstantStrategy {
    fn bet(&self) -> f64 {
        self.lambda
    }

    fn observe(&mut self, _x: f64) {}
}

/// Masses this small are negligible next to the total, which is kept in
/// `[1e-100, 1e100]`; zeroing them keeps the update loop out of subnormal arithmetic.
const FLUSH_BELOW: f64 = 1e-280;

/// Clamps negative factors and negligible weights to zero.
#[inline(always)]
fn flush(w: f64) -> f64 {
    if w > FLUSH_BELOW {
        w
    } else {
        0.0
    }
}

/// Multiplies `mass[i]` by `1 + lambda[i] * shift` and returns the new
/// `(sum mass * lambda, sum mass)`.
///
/// The AVX2 build of the same loop computes bit-identical results, since
/// no multiply-add is ever fused.
fn update_kernel(mass: &mut [f64], lambda: &[f64], shift: f64) -> (f64, f64) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the feature was detected at runtime.
        return unsafe { update_kernel_avx2(mass, lambda, shift) };
    }
    update_kernel_generic(mass, lambda, shift)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn update_kernel_avx2(mass: &mut [f64], lambda: &[f64], shift: f64) -> (f64, f64) {
    update_kernel_generic(mass, lambda, shift)
}

#[inline(always)]
fn update_kernel_generic(mass: &mut [f64], lambda: &[f64], shift: f64) -> (f64, f64) {
    let mut num = [0.0f64; 4];
    let mut den = [0.0f64; 4];
    for (m, l) in mass.chunks_exact_mut(4).zip(lambda.chunks_exact(4)) {
        for j in 0..4 {
            let nm = flush(m[j] * (1.0 + l[j] * shift));
            m[j] = nm;
            num[j] += nm * l[j];
            den[j] += nm;
        }
    }
    let tail = mass.len() / 4 * 4;
    for (m, &l) in mass[tail..].iter_mut().zip(&lambda[tail..]) {
        let nm = flush(*m * (1.0 + l * shift));
        *m = nm;
        num[0] += nm * l;
        den[0] += nm;
    }
    ((num[0] + num[1]) + (num[2] + num[3]), (den[0] + den[1]) + (den[2] + den[3]))
}

/// Posterior over bet fractions for the universal portfolio: a uniform prior
/// on `I_mu`, reweighted after each round by that round's wealth factor.
///
/// Weights are kept in linear scale relative to `exp(log_scale)`, already
/// multiplied by their quadrature coefficients; killed nodes hold exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioPosterior {
    mu: f64,
    lambda_grid: Vec<f64>,
    /// Composite Simpson coefficients.
    quad: Vec<f64>,
    /// Quadrature coefficient times posterior weight, per node.
    mass: Vec<f64>,
    log_scale: f64,
    /// Use the uncentred factor `1 + lambda x` instead of `1 + lambda (x - mu)`.
    raw: bool,
}

impl PortfolioPosterior {
    /// `nodes` equispaced points spanning `I_mu`; an even count is bumped to
    /// the next odd one so Simpson's rule applies.
    pub fn uniform(mu: f64, nodes: usize) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::InvalidSpace(format!("mu = {mu} not in (0, 1)")));
        }
        let k = if nodes.is_multiple_of(2) { nodes + 1 } else { nodes }.max(3);
        let (lo, hi) = bet_interval(mu);
        let step = (hi - lo) / (k - 1) as f64;
        let mut lambda_grid: Vec<f64> = (0..k).map(|i| lo + step * i as f64).collect();
        lambda_grid[k - 1] = hi;
        let quad: Vec<f64> = (0..k)
            .map(|i| {
                if i == 0 || i == k - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                }
            })
            .collect();
        Ok(Self {
            mu,
            lambda_grid,
            mass: quad.clone(),
            quad,
            log_scale: 0.0,
            raw: false,
        })
    }

    /// Switch to the uncentred per-round factor `1 + lambda x`.
    pub fn with_raw_factor(mut self, raw: bool) -> Self {
        self.raw = raw;
        self
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    /// Unnormalised log-density of each node; `-inf` for killed nodes.
    pub fn log_weights(&self) -> Vec<f64> {
        self.mass.iter().zip(&self.quad).map(|(m, c)| (m / c).ln() + self.log_scale).collect()
    }

    /// Multiplies each node by its wealth factor for outcome `x`.
    pub fn up_update(&mut self, x: f64) {
        self.update_with_sums(x);
    }

    /// Fused update: returns the quadrature sums `(sum c w lambda, sum c w)`
    /// of the updated posterior.
    fn update_with_sums(&mut self, x: f64) -> (f64, f64) {
        let shift = if self.raw { x } else { x - self.mu };
        let (mut num, mut den) = update_kernel(&mut self.mass, &self.lambda_grid, shift);
        if den > 0.0 && !(1e-100..=1e100).contains(&den) {
            let inv = 1.0 / den;
            self.mass.iter_mut().for_each(|m| *m *= inv);
            self.log_scale += den.ln();
            num *= inv;
            den = 1.0;
        }
        (num, den)
    }

    fn mean_from_sums(&self, num: f64, den: f64) -> Result<f64> {
        if den.is_nan() || den <= 0.0 {
            return Err(Error::DegeneratePosterior);
        }
        let (lo, hi) = bet_interval(self.mu);
        Ok((num / den).clamp(lo, hi))
    }

    /// Posterior mean of `lambda`.
    pub fn up_bet(&self) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&m, &lambda) in self.mass.iter().zip(&self.lambda_grid) {
            num += m * lambda;
            den += m;
        }
        self.mean_from_sums(num, den)
    }

    /// Posterior expectation of `g(lambda)`, by the same quadrature.
    pub fn posterior_mean_of(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&m, &lambda) in self.mass.iter().zip(&self.lambda_grid) {
            num += m * g(lambda);
            den += m;
        }
        if den.is_nan() || den <= 0.0 {
            return Err(Error::DegeneratePosterior);
        }
        Ok(num / den)
    }
}

/// Universal-portfolio player: bets the posterior mean of `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalPortfolio {
    posterior: PortfolioPosterior,
    current: f64,
}

impl UniversalPortfolio {
    pub fn new(mu: f64, nodes: usize) -> Result<Self> {
        Self::from_posterior(PortfolioPosterior::uniform(mu, nodes)?)
    }

    pub fn from_posterior(posterior: PortfolioPosterior) -> Result<Self> {
        let current = posterior.up_bet()?;
        Ok(Self { posterior, current })
    }

    pub fn posterior(&self) -> &PortfolioPosterior {
        &self.posterior
    }
}

impl BettingStrategy for UniversalPortfolio {
    fn bet(&self) -> f64 {
        self.current
    }

    fn observe(&mut self, x: f64) {
        let (num, den) = self.posterior.update_with_sums(x);
        // nodes strictly inside I_mu never die under the centred factor, and
        // lambda = 0 never dies under the raw one
        self.current = self.posterior.mean_from_sums(num, den).unwrap_or(0.0);
    }
}

/// Parsed form of the `--strategy` literal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StrategySpec {
    Constant(f64),
    UniversalPortfolio { nodes: usize, raw: bool },
}

impl StrategySpec {
    /// `constant:<lambda>`, `up` or `up:<K>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("constant", Some(a)) => a
                .trim()
                .parse()
                .map(StrategySpec::Constant)
                .map_err(|_| Error::Parse(format!("bad constant bet {a:?}"))),
            ("up", None) => Ok(StrategySpec::UniversalPortfolio { nodes: DEFAULT_UP_NODES, raw: false }),
            ("up", Some(a)) => match a.trim().parse::<usize>() {
                Ok(k) if k >= 2 => Ok(StrategySpec::UniversalPortfolio { nodes: k, raw: false }),
                _ => Err(Error::Parse(format!("bad node count {a:?}"))),
            },
            _ => Err(Error::Parse(format!("unknown strategy {s:?}"))),
        }
    }

    pub fn with_raw(self, raw: bool) -> Self {
        match self {
            StrategySpec::UniversalPortfolio { nodes, .. } => StrategySpec::UniversalPortfolio { nodes, raw },
            other => other,
        }
    }

    /// A fresh player for the game testing `mu`.
    pub fn build(&self, mu: f64) -> Result<Strategy> {
        Ok(match *self {
            StrategySpec::Constant(lambda) => Strategy::Constant(ConstantStrategy::new(mu, lambda)?),
            StrategySpec::UniversalPortfolio { nodes, raw } => Strategy::Up(UniversalPortfolio::from_posterior(
                PortfolioPosterior::uniform(mu, nodes)?.with_raw_factor(raw),
            )?),
        })
    }
}

/// Closed set of built-in strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    Constant(ConstantStrategy),
    Up(UniversalPortfolio),
}

impl BettingStrategy for Strategy {
    fn bet(&self) -> f64 {
        match self {
            Strategy::Constant(s) => s.bet(),
            Strategy::Up(s) => s.bet(),
        }
    }

    fn observe(&mut self, x: f64) {
        match self {
            Strategy::Constant(s) => s.observe(x),
            Strategy::Up(s) => s.observe(x),
        }
    }
}
