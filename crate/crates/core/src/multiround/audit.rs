use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{best_mask, StoppingMask, TreeHypothesis};
use super::EProcess;
use crate::domain::{replicate_seed, two_point_weight, MEASURE_TOL};
use crate::error::{Error, Result};

pub const MAX_AUDIT_DEPTH: usize = 4;

/// Tolerance on stopped expectations.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Largest stopped expectation found.
    pub max: f64,
    /// Tree attaining `max`.
    pub d: TreeHypothesis,
    /// Stopping rule attaining `max` on `d`.
    pub mask: StoppingMask,
    pub pass: bool,
}

/// Searches for a violation of `E_Q[E_tau] <= 1` over two-point trees of depth
/// `t` and stopping times bounded by `t`.
///
/// Every tree whose pairs come from `coarse_grid` is covered exactly, and
/// `n_random` further trees are drawn at random. A failing report is a
/// genuine counterexample; a passing one only certifies the trees searched.
pub fn audit_eprocess<P: EProcess + ?Sized>(
    e: &P,
    t: usize,
    coarse_grid: &[f64],
    n_random: usize,
    seed: u64,
) -> Result<AuditReport> {
    if t > MAX_AUDIT_DEPTH {
        return Err(Error::DepthTooLarge { depth: t, max: MAX_AUDIT_DEPTH });
    }
    if t > e.max_depth() {
        return Err(Error::Shape(format!("process has depth {}, audit asked for {t}", e.max_depth())));
    }
    let mu = e.mu();
    if let Some(space) = e.support() {
        if let Some(&x) = coarse_grid.iter().find(|&&x| space.index_of(x).is_none()) {
            return Err(Error::OffGrid(x));
        }
    }
    let lower: Vec<f64> = coarse_grid.iter().copied().filter(|&x| x <= mu + MEASURE_TOL).collect();
    let upper: Vec<f64> = coarse_grid.iter().copied().filter(|&x| x >= mu - MEASURE_TOL).collect();
    if lower.is_empty() || upper.is_empty() {
        return Err(Error::InvalidSpace("coarse grid must have points on both sides of mu".into()));
    }
    let mut pairs = Vec::new();
    for &a in &lower {
        for &b in &upper {
            pairs.push((a, b, two_point_weight(a, b, mu)?));
        }
    }

    let mut path = Vec::with_capacity(t);
    let (mut best, plan) = coarse_best(e, t, coarse_grid, &pairs, &mut path);
    let filler = (lower[0], upper[upper.len() - 1]);
    let mut coeffs = vec![filler; (1 << t) - 1];
    let mut mask = StoppingMask::STOP;
    plan.write(0, &mut coeffs, &mut mask);
    let mut best_d = TreeHypothesis::new(mu, t, coeffs)?;
    let mut best_mask_found = mask;

    let (lo_pts, hi_pts): (Vec<f64>, Vec<f64>) = match e.support() {
        Some(space) => (
            space.points().iter().copied().filter(|&x| x <= mu + MEASURE_TOL).collect(),
            space.points().iter().copied().filter(|&x| x >= mu - MEASURE_TOL).collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    let random: Vec<(f64, TreeHypothesis, StoppingMask)> = (0..n_random as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, i));
            let coeffs = (0..(1 << t) - 1)
                .map(|_| {
                    if lo_pts.is_empty() {
                        (rng.random::<f64>() * mu, mu + rng.random::<f64>() * (1.0 - mu))
                    } else {
                        (lo_pts[rng.random_range(0..lo_pts.len())], hi_pts[rng.random_range(0..hi_pts.len())])
                    }
                })
                .collect();
            let d = TreeHypothesis::new(mu, t, coeffs).expect("sampled pairs straddle mu");
            let (v, m) = best_mask(&d, e);
            (v, d, m)
        })
        .collect();
    for (v, d, m) in random {
        if v > best {
            best = v;
            best_d = d;
            best_mask_found = m;
        }
    }

    Ok(AuditReport {
        max: best,
        d: best_d,
        mask: best_mask_found,
        pass: best <= 1.0 + AUDIT_TOL,
    })
}

/// Optimal choice below one node of the coarse search.
enum Plan {
    Stop,
    Go { a: f64, b: f64, left: Box<Plan>, right: Box<Plan> },
}

impl Plan {
    fn write(&self, node: usize, coeffs: &mut [(f64, f64)], mask: &mut StoppingMask) {
        if let Plan::Go { a, b, left, right } = self {
            coeffs[node] = (*a, *b);
            *mask = mask.with_branch(node);
            left.write(2 * node + 1, coeffs, mask);
            right.write(2 * node + 2, coeffs, mask);
        }
    }
}

fn coarse_best<P: EProcess + ?Sized>(
    e: &P,
    t: usize,
    grid: &[f64],
    pairs: &[(f64, f64, f64)],
    path: &mut Vec<f64>,
) -> (f64, Plan) {
    let stop = e.value(path);
    if path.len() == t {
        return (stop, Plan::Stop);
    }
    let mut children: Vec<(f64, Option<Plan>)> = grid
        .iter()
        .map(|&x| {
            path.push(x);
            let (v, p) = coarse_best(e, t, grid, pairs, path);
            path.pop();
            (v, Some(p))
        })
        .collect();
    let pos = |x: f64| grid.iter().position(|&g| g == x).expect("pair points come from the grid");
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (k, &(a, b, w)) in pairs.iter().enumerate() {
        let v = w * children[pos(a)].0 + (1.0 - w) * children[pos(b)].0;
        if v > best.0 {
            best = (v, k);
        }
    }
    if best.0 > stop {
        let (a, b, _) = pairs[best.1];
        let (ia, ib) = (pos(a), pos(b));
        let left = children[ia].1.take().unwrap_or(Plan::Stop);
        let right = if ia == ib {
            Plan::Stop
        } else {
            children[ib].1.take().unwrap_or(Plan::Stop)
        };
        (best.0, Plan::Go { a, b, left: Box::new(left), right: Box::new(right) })
    } else {
        (stop, Plan::Stop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SampleSpace;
    use crate::multiround::{tree_expectation, FnProcess, MultiRoundCoinBet, TabulatedProcess};

    #[test]
    fn constant_one_passes_exactly() {
        let f = FnProcess::new(0.4, 3, |_: &[f64]| 1.0);
        let r = audit_eprocess(&f, 3, &[0.0, 0.4, 1.0], 200, 1).unwrap();
        assert!(r.pass);
        assert_eq!(r.max, 1.0);
    }

    #[test]
    fn coinbet_process_is_a_martingale() {
        let space = SampleSpace::uniform(5, 0.5).unwrap();
        let e = MultiRoundCoinBet::from_fn(space, 3, |t, p| {
            let s: usize = p.iter().sum();
            ((s as f64 + t as f64) * 0.7).sin() * 1.9
        })
        .unwrap();
        let r = audit_eprocess(&e, 3, &[0.0, 0.5, 1.0], 300, 9).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.max - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scaled_process_is_refuted_with_witness() {
        let space = SampleSpace::uniform(5, 0.5).unwrap();
        let e = MultiRoundCoinBet::from_fn(space.clone(), 2, |t, p| if t == 1 { 1.0 } else { p[0] as f64 / 2.0 - 1.0 })
            .unwrap();
        let tab = TabulatedProcess::from_process(&e, space, 2).unwrap().scaled(2, 1.5);
        let r = audit_eprocess(&tab, 2, &[0.0, 0.5, 1.0], 100, 3).unwrap();
        assert!(!r.pass);
        assert!((r.max - 1.5).abs() < 1e-9);
        assert_eq!(r.mask.depth(), 2);
        let check = tree_expectation(&r.d, r.mask, &tab).unwrap();
        assert!((check - r.max).abs() < 1e-12);
    }

    #[test]
    fn depth_and_grid_guards() {
        let f = FnProcess::new(0.5, 6, |_: &[f64]| 1.0);
        assert!(matches!(
            audit_eprocess(&f, 5, &[0.0, 1.0], 0, 0),
            Err(Error::DepthTooLarge { .. })
        ));
        assert!(audit_eprocess(&f, 2, &[0.0, 0.2], 0, 0).is_err());
        let space = SampleSpace::uniform(3, 0.5).unwrap();
        let e = MultiRoundCoinBet::from_fn(space, 2, |_, _| 0.0).unwrap();
        assert!(matches!(audit_eprocess(&e, 2, &[0.0, 0.25, 1.0], 0, 0), Err(Error::OffGrid(_))));
        assert!(audit_eprocess(&e, 3, &[0.0, 1.0], 0, 0).is_err());
    }

    #[test]
    fn audit_is_deterministic() {
        let f = FnProcess::new(0.3, 2, |p: &[f64]| 1.0 + 0.01 * p.iter().map(|x| (9.0 * x).cos()).sum::<f64>());
        let a = audit_eprocess(&f, 2, &[0.0, 0.3, 1.0], 500, 77).unwrap();
        let b = audit_eprocess(&f, 2, &[0.0, 0.3, 1.0], 500, 77).unwrap();
        assert_eq!(a, b);
    }
}
