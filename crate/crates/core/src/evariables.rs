//! Single-round e-variables for the mean-`mu` hypothesis: the coin-betting
//! and Hoeffding classes, a grid validity oracle, and the construction of a
//! dominating coin-bet for any valid tabulated e-variable.

use serde::{Deserialize, Serialize};

use crate::domain::{bet_interval, SampleSpace, TwoPointMeasure, MEASURE_TOL};
use crate::error::{Error, Result};

/// Additive slack on expectations when certifying validity.
pub const VALIDITY_TOL: f64 = 1e-12;

/// `x -> 1 + lambda * (x - mu)` with `lambda` in `I_mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinBetEVariable {
    mu: f64,
    lambda: f64,
}

impl CoinBetEVariable {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        let lambda = clamp_bet(mu, lambda)?;
        Ok(Self { mu, lambda })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_coinbet(self.mu, self.lambda, x)
    }
}

/// Checks `lambda` against `I_mu`, snapping values within rounding distance
/// of an endpoint onto it.
pub fn clamp_bet(mu: f64, lambda: f64) -> Result<f64> {
    let (lo, hi) = bet_interval(mu);
    let slack = 1e-12 * hi.max(-lo);
    if !lambda.is_finite() || lambda < lo - slack || lambda > hi + slack {
        return Err(Error::OutOfRange { lambda, lo, hi });
    }
    Ok(lambda.clamp(lo, hi))
}

#[inline]
pub fn eval_coinbet(mu: f64, lambda: f64, x: f64) -> f64 {
    (1.0 + lambda * (x - mu)).max(0.0)
}

/// `x -> exp(alpha * (x - mu) - alpha^2 / 8)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingEVariable {
    pub mu: f64,
    pub alpha: f64,
}

impl HoeffdingEVariable {
    pub fn new(mu: f64, alpha: f64) -> Self {
        Self { mu, alpha }
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_hoeffding(self.mu, self.alpha, x)
    }
}

#[inline]
pub fn eval_hoeffding(mu: f64, alpha: f64, x: f64) -> f64 {
    (alpha * (x - mu) - alpha * alpha / 8.0).exp()
}

/// The pointwise envelope `F_mu` of all e-variables for the mean-`mu`
/// hypothesis: the coin-bet at `1/mu` right of `mu`, at `1/(mu-1)` left of it.
pub fn eval_majorizer(mu: f64, x: f64) -> f64 {
    let (lo, hi) = bet_interval(mu);
    if x >= mu {
        eval_coinbet(mu, hi, x)
    } else {
        eval_coinbet(mu, lo, x)
    }
}

/// Slope of the chord of the Hoeffding e-variable between `x = 0` and `x = 1`.
/// The coin-bet with this slope passes through `(mu, 1)` and lies above the
/// chord, hence above the Hoeffding e-variable on all of `[0, 1]`.
pub fn dominating_lambda(mu: f64, alpha: f64) -> f64 {
    let lambda = eval_hoeffding(mu, alpha, 1.0) - eval_hoeffding(mu, alpha, 0.0);
    let (lo, hi) = bet_interval(mu);
    lambda.clamp(lo, hi)
}

/// Non-negative values of an e-variable candidate on each point of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedEVariable {
    space: SampleSpace,
    values: Vec<f64>,
}

impl TabulatedEVariable {
    pub fn new(space: SampleSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Shape(format!(
                "{} values for {} grid points",
                values.len(),
                space.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Shape(format!("value {v} is not a finite non-negative number")));
        }
        Ok(Self { space, values })
    }

    pub fn from_fn(space: SampleSpace, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = space.points().iter().map(|&x| f(x)).collect();
        Self::new(space, values)
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mu(&self) -> f64 {
        self.space.mu()
    }

    /// Value at grid point `x`; `None` off the grid.
    pub fn get(&self, x: f64) -> Option<f64> {
        self.space.index_of(x).map(|i| self.values[i])
    }

    pub fn expectation(&self, m: &TwoPointMeasure) -> Result<f64> {
        let va = self.get(m.a).ok_or(Error::OffGrid(m.a))?;
        let vb = self.get(m.b).ok_or(Error::OffGrid(m.b))?;
        Ok(m.expectation(|x| if x == m.a { va } else { vb }))
    }
}

/// Outcome of [`check_evariable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    /// Largest expectation over the extreme measures.
    pub max_expectation: f64,
    /// The measure achieving `max_expectation` when it exceeds one.
    pub witness: Option<TwoPointMeasure>,
}

/// Certifies or refutes `E_P[e] <= 1` for every mean-`mu` law on the grid.
///
/// On a finite grid the expectation is linear in `P`, so it is enough to
/// look at the extreme points: the point mass at `mu` and the two-point
/// measures straddling `mu`.
pub fn check_evariable(e: &TabulatedEVariable) -> ValidityReport {
    let (best, arg) = max_two_point(e.space(), e.values());
    let valid = best <= 1.0 + VALIDITY_TOL;
    ValidityReport {
        valid,
        max_expectation: best,
        witness: (!valid).then_some(arg),
    }
}

/// Maximum of `E_Q[values]` over the extreme measures of `space`, with the
/// maximiser. Ties keep the first measure in [`SampleSpace::extreme_measures`]
/// order.
pub(crate) fn max_two_point(space: &SampleSpace, values: &[f64]) -> (f64, TwoPointMeasure) {
    let pts = space.points();
    let mu = space.mu();
    let mut best = f64::NEG_INFINITY;
    let mut arg = TwoPointMeasure { a: mu, b: mu, w: 1.0 };
    if let Some(i) = space.mu_index() {
        best = values[i];
        arg = TwoPointMeasure { a: pts[i], b: pts[i], w: 1.0 };
    }
    let split_lo = pts.partition_point(|p| *p < mu - MEASURE_TOL);
    let split_hi = pts.partition_point(|p| *p <= mu + MEASURE_TOL);
    for i in 0..split_lo {
        let a = pts[i];
        for j in split_hi..pts.len() {
            let b = pts[j];
            let w = (b - mu) / (b - a);
            let v = w * values[i] + (1.0 - w) * values[j];
            if v > best {
                best = v;
                arg = TwoPointMeasure { a, b, w };
            }
        }
    }
    (best, arg)
}

/// Interval `[beta1, beta0]` of coin-bet slopes dominating a valid e-variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationCertificate {
    pub beta0: f64,
    pub beta1: f64,
    pub lambda_hat: f64,
}

impl DominationCertificate {
    pub fn coinbet(&self, mu: f64) -> CoinBetEVariable {
        CoinBetEVariable { mu, lambda: self.lambda_hat }
    }
}

/// Finds the slopes `beta` whose coin-bet majorises `e` on the grid.
///
/// Points left of `mu` bound `beta` from above (`beta0`), points right of it
/// from below (`beta1`); validity of `e` forces `beta1 <= beta0`. The
/// returned bet is the midpoint. When rounding makes `beta1` exceed `beta0`
/// by a hair both collapse onto their midpoint.
pub fn beta_interval(e: &TabulatedEVariable) -> Result<DominationCertificate> {
    let report = check_evariable(e);
    if let Some(witness) = report.witness {
        return Err(Error::NotAnEVariable { witness, expectation: report.max_expectation });
    }
    Ok(beta_interval_unchecked(e.space(), e.values()))
}

pub(crate) fn beta_interval_unchecked(space: &SampleSpace, values: &[f64]) -> DominationCertificate {
    let mu = space.mu();
    let (lo, hi) = bet_interval(mu);
    let mut beta0 = hi;
    let mut beta1 = lo;
    for (&x, &v) in space.points().iter().zip(values) {
        if x < mu - MEASURE_TOL {
            beta0 = beta0.min((v - 1.0) / (x - mu));
        } else if x > mu + MEASURE_TOL {
            beta1 = beta1.max((v - 1.0) / (x - mu));
        }
    }
    beta0 = beta0.clamp(lo, hi);
    beta1 = beta1.clamp(lo, hi);
    if beta1 > beta0 {
        let mid = 0.5 * (beta0 + beta1);
        beta0 = mid;
        beta1 = mid;
    }
    DominationCertificate { beta0, beta1, lambda_hat: 0.5 * (beta0 + beta1) }
}
