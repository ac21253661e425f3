//! Multi-round coin-betting e-variables and e-processes for the hypothesis
//! that every observation has conditional mean `mu` given the past.
//!
//! Validity of an e-process is audited over finite trees of two-point
//! branchings (`TreeHypothesis`) and bounded stopping times
//! (`StoppingMask`); see [`audit_eprocess`]. [`dominate_t2`] builds a
//! two-round coin-bet majorising a given e-variable on `X^2`, or refutes it.

mod audit;
mod t2;
mod tree;

pub use audit::{audit_eprocess, AuditReport, MAX_AUDIT_DEPTH};
pub use t2::{dominate_t2, PairTable, T2Outcome, T2Refutation};
pub use tree::{best_mask, enumerate_masks, tree_expectation, StoppingMask, TreeHypothesis, MAX_MASK_DEPTH};

use crate::domain::SampleSpace;
use crate::error::{Error, Result};
use crate::evariables::{clamp_bet, eval_coinbet};

/// A process `(E_t)_{t <= max_depth}` with `E_t` a function of the first `t`
/// observations.
pub trait EProcess: Sync {
    fn mu(&self) -> f64;

    fn max_depth(&self) -> usize;

    /// `E_t(path)` with `t = path.len()`.
    fn value(&self, path: &[f64]) -> f64;

    /// Grid on which the process is defined, if it is only defined on one.
    fn support(&self) -> Option<&SampleSpace> {
        None
    }
}

fn path_index(space: &SampleSpace, path: &[f64]) -> Option<usize> {
    let g = space.len();
    path.iter().try_fold(0usize, |acc, &x| space.index_of(x).map(|i| acc * g + i))
}

/// `x^T -> prod_t (1 + lambda_t(x^{t-1}) (x_t - mu))` with each `lambda_t`
/// stored as a table over grid tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRoundCoinBet {
    space: SampleSpace,
    /// `lambdas[t]` has `g^t` entries: the bet of round `t + 1` indexed by
    /// the base-`g` digits of `x^t`, first observation most significant.
    lambdas: Vec<Vec<f64>>,
}

impl MultiRoundCoinBet {
    pub fn new(space: SampleSpace, lambdas: Vec<Vec<f64>>) -> Result<Self> {
        let g = space.len();
        let mu = space.mu();
        let mut checked = Vec::with_capacity(lambdas.len());
        for (t, row) in lambdas.into_iter().enumerate() {
            let expect = g.pow(t as u32);
            if row.len() != expect {
                return Err(Error::Shape(format!("round {} needs {expect} bets, got {}", t + 1, row.len())));
            }
            checked.push(row.into_iter().map(|l| clamp_bet(mu, l)).collect::<Result<Vec<_>>>()?);
        }
        Ok(Self { space, lambdas: checked })
    }

    /// Bets given by `f(t, indices of x^{t-1})` for `t = 1..=depth`.
    pub fn from_fn(space: SampleSpace, depth: usize, f: impl Fn(usize, &[usize]) -> f64) -> Result<Self> {
        let g = space.len();
        let mut lambdas = Vec::with_capacity(depth);
        for t in 0..depth {
            let mut digits = vec![0usize; t];
            let row = (0..g.pow(t as u32))
                .map(|mut idx| {
                    for k in (0..t).rev() {
                        digits[k] = idx % g;
                        idx /= g;
                    }
                    f(t + 1, &digits)
                })
                .collect();
            lambdas.push(row);
        }
        Self::new(space, lambdas)
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[Vec<f64>] {
        &self.lambdas
    }

    /// Bet of round `prefix.len() + 1` after the grid tuple `prefix`.
    pub fn lambda(&self, prefix: &[f64]) -> Result<f64> {
        let idx = path_index(&self.space, prefix).ok_or_else(|| Error::OffGrid(prefix[0]))?;
        Ok(self.lambdas[prefix.len()][idx])
    }

    /// Product of the first `xs.len()` coin-bet factors.
    pub fn eval_multiround(&self, xs: &[f64]) -> Result<f64> {
        if xs.len() > self.depth() {
            return Err(Error::Shape(format!("{} rounds for a depth-{} bet", xs.len(), self.depth())));
        }
        let mu = self.space.mu();
        let g = self.space.len();
        let mut idx = 0usize;
        let mut prod = 1.0;
        for (t, &x) in xs.iter().enumerate() {
            let i = self.space.index_of(x).ok_or(Error::OffGrid(x))?;
            prod *= eval_coinbet(mu, self.lambdas[t][idx], x).max(0.0);
            idx = idx * g + i;
        }
        Ok(prod)
    }
}

impl EProcess for MultiRoundCoinBet {
    fn mu(&self) -> f64 {
        self.space.mu()
    }

    fn max_depth(&self) -> usize {
        self.depth()
    }

    fn value(&self, path: &[f64]) -> f64 {
        self.eval_multiround(path).unwrap_or(f64::NAN)
    }

    fn support(&self) -> Option<&SampleSpace> {
        Some(&self.space)
    }
}

/// An e-process candidate given by a closure over real paths.
pub struct FnProcess<F> {
    mu: f64,
    depth: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnProcess<F> {
    pub fn new(mu: f64, depth: usize, f: F) -> Self {
        Self { mu, depth, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> EProcess for FnProcess<F> {
    fn mu(&self) -> f64 {
        self.mu
    }

    fn max_depth(&self) -> usize {
        self.depth
    }

    fn value(&self, path: &[f64]) -> f64 {
        (self.f)(path)
    }
}

/// An e-process candidate tabulated on every grid path of length `<= depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProcess {
    space: SampleSpace,
    /// `values[t]` has `g^t` entries indexed like [`MultiRoundCoinBet`].
    values: Vec<Vec<f64>>,
}

impl TabulatedProcess {
    pub fn new(space: SampleSpace, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape("missing E_0".into()));
        }
        let g = space.len();
        for (t, row) in values.iter().enumerate() {
            if row.len() != g.pow(t as u32) {
                return Err(Error::Shape(format!("depth {t} needs {} values, got {}", g.pow(t as u32), row.len())));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::Shape(format!("value {v} at depth {t} is not finite and non-negative")));
            }
        }
        Ok(Self { space, values })
    }

    /// Tabulates `p` on every grid path up to `depth`.
    pub fn from_process<P: EProcess + ?Sized>(p: &P, space: SampleSpace, depth: usize) -> Result<Self> {
        let g = space.len();
        let pts = space.points().to_vec();
        let mut values = Vec::with_capacity(depth + 1);
        let mut path = Vec::with_capacity(depth);
        for t in 0..=depth {
            let row = (0..g.pow(t as u32))
                .map(|mut idx| {
                    path.clear();
                    path.resize(t, 0.0);
                    for k in (0..t).rev() {
                        path[k] = pts[idx % g];
                        idx /= g;
                    }
                    p.value(&path)
                })
                .collect();
            values.push(row);
        }
        Self::new(space, values)
    }

    /// Multiplies `E_t` by `factor` for `t = depth`.
    pub fn scaled(mut self, depth: usize, factor: f64) -> Self {
        if let Some(row) = self.values.get_mut(depth) {
            row.iter_mut().for_each(|v| *v *= factor);
        }
        self
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// All `(depth, path, value)` entries in depth-then-index order.
    pub fn entries(&self) -> Vec<(usize, Vec<f64>, f64)> {
        let g = self.space.len();
        let pts = self.space.points();
        let mut out = Vec::new();
        for (t, row) in self.values.iter().enumerate() {
            for (mut idx, &v) in row.iter().enumerate() {
                let mut path = vec![0.0; t];
                for k in (0..t).rev() {
                    path[k] = pts[idx % g];
                    idx /= g;
                }
                out.push((t, path, v));
            }
        }
        out
    }
}

impl EProcess for TabulatedProcess {
    fn mu(&self) -> f64 {
        self.space.mu()
    }

    fn max_depth(&self) -> usize {
        self.values.len() - 1
    }

    fn value(&self, path: &[f64]) -> f64 {
        match (self.values.get(path.len()), path_index(&self.space, path)) {
            (Some(row), Some(i)) => row[i],
            _ => f64::NAN,
        }
    }

    fn support(&self) -> Option<&SampleSpace> {
        Some(&self.space)
    }
}
