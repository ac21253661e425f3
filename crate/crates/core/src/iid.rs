//! E-variables for two i.i.d. draws with mean 1/2 on `X = {0, 1/2, 1}`.
//!
//! Every mean-1/2 law on `X` is `Q_q = ((1-q)/2, q, (1-q)/2)`, so
//! `E_{Q_q x Q_q}[e] = q^2 xi0 + 2q(1-q) xi1 + (1-q)^2 xi2` depends on the
//! table only through the three averages in [`XiStats`].

use serde::{Deserialize, Serialize};

use crate::domain::SampleSpace;
use crate::error::{Error, Result};
use crate::multiround::PairTable;

/// Slack for the closed-form inequalities.
pub const IID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiStats {
    /// `e(1/2, 1/2)`.
    pub xi0: f64,
    /// Mean of the four cells with exactly one coordinate at 1/2.
    pub xi1: f64,
    /// Mean of the four corner cells.
    pub xi2: f64,
}

impl XiStats {
    pub fn new(xi0: f64, xi1: f64, xi2: f64) -> Self {
        Self { xi0, xi1, xi2 }
    }

    /// `E_{P_q}[e]`.
    pub fn expectation(&self, q: f64) -> f64 {
        q * q * self.xi0 + 2.0 * q * (1.0 - q) * self.xi1 + (1.0 - q) * (1.0 - q) * self.xi2
    }

    /// Interior maximiser of the quadratic when it is concave.
    pub fn interior_maximizer(&self) -> Option<f64> {
        let curvature = self.xi0 + self.xi2 - 2.0 * self.xi1;
        if curvature >= 0.0 {
            return None;
        }
        let q = (self.xi2 - self.xi1) / curvature;
        (q > 0.0 && q < 1.0).then_some(q)
    }

    /// Value at [`Self::interior_maximizer`], `(xi1^2 - xi0 xi2) / (2 xi1 - xi0 - xi2)`.
    pub fn interior_max(&self) -> Option<f64> {
        self.interior_maximizer()
            .map(|_| (self.xi1 * self.xi1 - self.xi0 * self.xi2) / (2.0 * self.xi1 - self.xi0 - self.xi2))
    }
}

/// The grid `{0, 1/2, 1}` with `mu = 1/2`.
pub fn iid_space() -> SampleSpace {
    SampleSpace::new(vec![0.0, 0.5, 1.0], 0.5).expect("fixed grid is valid")
}

pub fn xi_stats(e: &PairTable) -> Result<XiStats> {
    if e.space() != &iid_space() {
        return Err(Error::Shape("expected the grid {0, 1/2, 1} with mu = 1/2".into()));
    }
    let v = |x: f64, y: f64| e.get(x, y).expect("grid cell");
    Ok(XiStats {
        xi0: v(0.5, 0.5),
        xi1: (v(1.0, 0.5) + v(0.5, 1.0) + v(0.5, 0.0) + v(0.0, 0.5)) / 4.0,
        xi2: (v(1.0, 1.0) + v(1.0, 0.0) + v(0.0, 1.0) + v(0.0, 0.0)) / 4.0,
    })
}

/// `xi0 <= 1`, `xi2 <= 1` and `xi1 <= 1 + sqrt((1 - xi0)(1 - xi2))`.
pub fn check_iid_closed_form(s: &XiStats) -> bool {
    s.xi0 <= 1.0 + IID_TOL
        && s.xi2 <= 1.0 + IID_TOL
        && s.xi1 <= 1.0 + ((1.0 - s.xi0).max(0.0) * (1.0 - s.xi2).max(0.0)).sqrt() + IID_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidMax {
    pub max_expectation: f64,
    pub argmax_q: f64,
}

/// Maximises `E_{P_q}[e]` over `q_steps` equispaced values of `q` in `[0, 1]`
/// and the analytic interior maximiser. The table is an e-variable for the
/// i.i.d. hypothesis iff the maximum is at most one.
pub fn check_iid_bruteforce(s: &XiStats, q_steps: usize) -> IidMax {
    let steps = q_steps.max(2);
    let mut best = IidMax { max_expectation: f64::NEG_INFINITY, argmax_q: 0.0 };
    let candidates = (0..steps).map(|i| i as f64 / (steps - 1) as f64).chain(s.interior_maximizer());
    for q in candidates {
        let v = s.expectation(q);
        if v > best.max_expectation {
            best = IidMax { max_expectation: v, argmax_q: q };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: impl Fn(f64, f64) -> f64) -> PairTable {
        PairTable::from_fn(iid_space(), f).unwrap()
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi_stats(&table(|_, _| 1.0)).unwrap(), XiStats::new(1.0, 1.0, 1.0));
        let s = xi_stats(&table(|x, y| if x == 1.0 && y == 0.5 { 4.0 } else { 0.0 })).unwrap();
        assert_eq!(s, XiStats::new(0.0, 1.0, 0.0));
        let s = xi_stats(&table(|x, y| if x != 0.5 && y != 0.5 { 2.0 } else { 0.0 })).unwrap();
        assert_eq!(s, XiStats::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn wrong_grid_is_rejected() {
        let t = PairTable::from_fn(SampleSpace::uniform(3, 0.4).unwrap(), |_, _| 1.0).unwrap();
        assert!(xi_stats(&t).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert!(check_iid_closed_form(&XiStats::new(1.0, 1.0, 1.0)));
        assert!(check_iid_closed_form(&XiStats::new(0.0, 2.0, 0.0)));
        assert!(!check_iid_closed_form(&XiStats::new(1.0, 1.01, 1.0)));
        assert!(!check_iid_closed_form(&XiStats::new(1.1, 0.0, 0.0)));
        assert!(!check_iid_closed_form(&XiStats::new(0.0, 0.0, 1.1)));
    }

    #[test]
    fn bruteforce_examples() {
        let r = check_iid_bruteforce(&XiStats::new(0.0, 2.0, 0.0), 10_000);
        assert!((r.max_expectation - 1.0).abs() < 1e-15);
        assert!((r.argmax_q - 0.5).abs() < 1e-12);

        let r = check_iid_bruteforce(&XiStats::new(0.0, 1.0, 0.0), 10_000);
        assert!((r.max_expectation - 0.5).abs() < 1e-15);
        assert!((r.argmax_q - 0.5).abs() < 1e-12);

        let s = XiStats::new(1.0, 1.0, 1.0);
        let r = check_iid_bruteforce(&s, 101);
        assert!((r.max_expectation - 1.0).abs() < 1e-15);
        for i in 0..=100 {
            assert!((s.expectation(i as f64 / 100.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn interior_max_matches_vertex_value() {
        // asymmetric case, where the vertex is away from 1/2
        let s = XiStats::new(0.9, 1.2, 0.1);
        let q = s.interior_maximizer().unwrap();
        assert!((s.expectation(q) - s.interior_max().unwrap()).abs() < 1e-14);
        // the vertex really is the maximiser
        for i in 0..=1000 {
            assert!(s.expectation(i as f64 / 1000.0) <= s.expectation(q) + 1e-15);
        }
        assert!(XiStats::new(1.0, 0.5, 1.0).interior_maximizer().is_none());
    }
}
