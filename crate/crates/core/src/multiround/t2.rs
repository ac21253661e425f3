use serde::{Deserialize, Serialize};

use super::tree::{StoppingMask, TreeHypothesis};
use super::MultiRoundCoinBet;
use crate::domain::SampleSpace;
use crate::error::{Error, Result};
use crate::evariables::{beta_interval_unchecked, max_two_point, VALIDITY_TOL};

/// A non-negative function on `X^2`, row-major: `values[i * g + j] = e(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    space: SampleSpace,
    values: Vec<f64>,
}

impl PairTable {
    pub fn new(space: SampleSpace, values: Vec<f64>) -> Result<Self> {
        let g = space.len();
        if values.len() != g * g {
            return Err(Error::Shape(format!("{} values for a {g}x{g} grid", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Shape(format!("value {v} is not a finite non-negative number")));
        }
        Ok(Self { space, values })
    }

    pub fn from_fn(space: SampleSpace, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let pts = space.points();
        let values = pts.iter().flat_map(|&x| pts.iter().map(move |&y| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self::new(space, values)
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let g = self.space.len();
        &self.values[i * g..(i + 1) * g]
    }

    pub fn get(&self, x: f64, y: f64) -> Option<f64> {
        let i = self.space.index_of(x)?;
        let j = self.space.index_of(y)?;
        Some(self.values[i * self.space.len() + j])
    }
}

/// A depth-2 tree under which `e` has expectation above one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T2Refutation {
    pub d: TreeHypothesis,
    pub mask: StoppingMask,
    pub expectation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum T2Outcome {
    Dominated(MultiRoundCoinBet),
    Refuted(T2Refutation),
}

/// Two-round coin-bet majorising `e` on the grid, or a tree refuting that
/// `e` is an e-variable for the two-round conditional-mean hypothesis.
///
/// First bet: a dominating slope for `m(x) = max_Q E_Q[e(x, Y)]`. Second bet
/// after `x`: a dominating slope for `y -> e(x, y) / (1 + lambda_1 (x - mu))`,
/// or `0` when that factor vanishes.
pub fn dominate_t2(e: &PairTable) -> T2Outcome {
    let space = e.space();
    let mu = space.mu();
    let g = space.len();

    let inner: Vec<_> = (0..g).map(|i| max_two_point(space, e.row(i))).collect();
    let m: Vec<f64> = inner.iter().map(|(v, _)| *v).collect();
    let (outer, q) = max_two_point(space, &m);
    if outer > 1.0 + VALIDITY_TOL {
        let child = |x: f64| {
            let q = inner[space.index_of(x).expect("witness points lie on the grid")].1;
            (q.a, q.b)
        };
        let d = TreeHypothesis::new(mu, 2, vec![(q.a, q.b), child(q.a), child(q.b)])
            .expect("extreme measures straddle mu");
        return T2Outcome::Refuted(T2Refutation { d, mask: StoppingMask::full(2), expectation: outer });
    }

    let lambda1 = beta_interval_unchecked(space, &m).lambda_hat;
    let lambda2: Vec<f64> = space
        .points()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let factor = 1.0 + lambda1 * (x - mu);
            if factor > 1e-12 {
                let scaled: Vec<f64> = e.row(i).iter().map(|v| v / factor).collect();
                beta_interval_unchecked(space, &scaled).lambda_hat
            } else {
                0.0
            }
        })
        .collect();
    T2Outcome::Dominated(
        MultiRoundCoinBet::new(space.clone(), vec![vec![lambda1], lambda2]).expect("certified bets lie in I_mu"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiround::{tree_expectation, TabulatedProcess};

    fn grid3() -> SampleSpace {
        SampleSpace::uniform(3, 0.5).unwrap()
    }

    #[test]
    fn constant_one_gives_zero_bets() {
        let e = PairTable::from_fn(grid3(), |_, _| 1.0).unwrap();
        match dominate_t2(&e) {
            T2Outcome::Dominated(b) => {
                assert_eq!(b.lambdas()[0], vec![0.0]);
                assert!(b.lambdas()[1].iter().all(|&l| l == 0.0));
            }
            T2Outcome::Refuted(r) => panic!("refuted {r:?}"),
        }
    }

    #[test]
    fn conditional_counterexample_is_refuted() {
        let e = PairTable::from_fn(grid3(), |x, y| if x == 1.0 && y == 0.5 { 4.0 } else { 0.0 }).unwrap();
        let T2Outcome::Refuted(r) = dominate_t2(&e) else {
            panic!("should be refuted")
        };
        assert_eq!(r.expectation, 2.0);
        // first observation a fair coin on {0, 1}; after 1 the second is 1/2 surely
        assert_eq!(r.d.coeffs()[0], (0.0, 1.0));
        assert_eq!(r.d.coeffs()[2], (0.5, 0.5));
        let f = TabulatedProcess::new(grid3(), vec![vec![0.0], vec![0.0; 3], e.values().to_vec()]).unwrap();
        assert_eq!(tree_expectation(&r.d, r.mask, &f).unwrap(), 2.0);
    }

    #[test]
    fn refutes_large_value_at_mu_pair() {
        let e = PairTable::from_fn(grid3(), |x, y| if x == 0.5 && y == 0.5 { 1.2 } else { 0.0 }).unwrap();
        let T2Outcome::Refuted(r) = dominate_t2(&e) else { panic!() };
        assert!((r.expectation - 1.2).abs() < 1e-15);
        assert_eq!(r.d.coeffs()[0], (0.5, 0.5));
    }

    #[test]
    fn shape_checks() {
        assert!(PairTable::new(grid3(), vec![1.0; 8]).is_err());
        assert!(PairTable::new(grid3(), vec![-1.0; 9]).is_err());
        let e = PairTable::from_fn(grid3(), |x, y| x + y).unwrap();
        assert_eq!(e.get(1.0, 0.5), Some(1.5));
        assert_eq!(e.get(0.2, 0.5), None);
    }
}
