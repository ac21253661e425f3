//! Binary-tree encodings of two-point sequential nulls and of stopping times
//! bounded by the tree depth.

use serde::{Deserialize, Serialize};

use super::EProcess;
use crate::domain::{two_point_weight, MEASURE_TOL};
use crate::error::{Error, Result};

/// Largest depth accepted by [`enumerate_masks`].
pub const MAX_MASK_DEPTH: usize = 5;

/// A depth-`T` tree of two-point branchings: node `i` (heap order, root 0)
/// carries a pair `(a, b)` with `a <= mu <= b`. From node `i` the process
/// moves to child `2i + 1` by observing `a` (probability `W(a, b)`) or to
/// child `2i + 2` by observing `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeHypothesis {
    mu: f64,
    depth: usize,
    coeffs: Vec<(f64, f64)>,
}

impl TreeHypothesis {
    pub fn new(mu: f64, depth: usize, coeffs: Vec<(f64, f64)>) -> Result<Self> {
        let nodes = (1usize << depth) - 1;
        if coeffs.len() != nodes {
            return Err(Error::Shape(format!("depth {depth} needs {nodes} pairs, got {}", coeffs.len())));
        }
        for &(a, b) in &coeffs {
            two_point_weight(a, b, mu)?;
            if a > mu + MEASURE_TOL || b < mu - MEASURE_TOL {
                return Err(Error::MeanOutsideSpan { a, b, mu });
            }
        }
        Ok(Self { mu, depth, coeffs })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn coeffs(&self) -> &[(f64, f64)] {
        &self.coeffs
    }

    /// `W(a, b)` at node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let (a, b) = self.coeffs[i];
        two_point_weight(a, b, self.mu).expect("pairs are validated on construction")
    }

    /// Probability of every depth-`T` leaf, in heap order of the leaves.
    pub fn leaf_masses(&self) -> Vec<f64> {
        let mut masses = vec![1.0];
        for level in 0..self.depth {
            let first = (1 << level) - 1;
            masses = masses
                .iter()
                .enumerate()
                .flat_map(|(k, &m)| {
                    let w = self.weight(first + k);
                    [m * w, m * (1.0 - w)]
                })
                .collect();
        }
        masses
    }
}

/// A pruned tree: the set of internal nodes (heap order) at which the
/// stopping time continues. Only nodes whose parent continues may be set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoppingMask {
    branch: u64,
}

impl StoppingMask {
    pub const STOP: StoppingMask = StoppingMask { branch: 0 };

    /// Continue everywhere up to depth `t`.
    pub fn full(t: usize) -> Self {
        Self { branch: (1u64 << ((1usize << t) - 1)) - 1 }
    }

    pub fn branches_at(&self, node: usize) -> bool {
        node < 64 && self.branch >> node & 1 == 1
    }

    /// Depth of the deepest stop.
    pub fn depth(&self) -> usize {
        (0..64usize)
            .filter(|&i| self.branches_at(i))
            .map(|i| node_level(i) + 1)
            .max()
            .unwrap_or(0)
    }

    /// Preorder code: `b` for continue, `s` for stop.
    pub fn code(&self) -> String {
        let mut out = String::new();
        self.write_code(0, &mut out);
        out
    }

    fn write_code(&self, node: usize, out: &mut String) {
        if self.branches_at(node) {
            out.push('b');
            self.write_code(2 * node + 1, out);
            self.write_code(2 * node + 2, out);
        } else {
            out.push('s');
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        fn walk(chars: &mut std::str::Chars<'_>, node: usize, bits: &mut u64) -> Result<()> {
            match chars.next() {
                Some('s') => Ok(()),
                Some('b') => {
                    if node >= 31 {
                        return Err(Error::DepthTooLarge { depth: node_level(node) + 1, max: MAX_MASK_DEPTH });
                    }
                    *bits |= 1 << node;
                    walk(chars, 2 * node + 1, bits)?;
                    walk(chars, 2 * node + 2, bits)
                }
                _ => Err(Error::Parse("malformed mask code".into())),
            }
        }
        let mut bits = 0;
        let mut chars = code.chars();
        walk(&mut chars, 0, &mut bits)?;
        if chars.next().is_some() {
            return Err(Error::Parse("trailing characters in mask code".into()));
        }
        Ok(Self { branch: bits })
    }

    pub(crate) fn with_branch(self, node: usize) -> Self {
        Self { branch: self.branch | 1 << node }
    }
}

impl Serialize for StoppingMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for StoppingMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        StoppingMask::from_code(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn node_level(node: usize) -> usize {
    (usize::BITS - 1 - (node + 1).leading_zeros()) as usize
}

/// Every pruned tree of depth at most `t`. Their number satisfies
/// `f(t) = 1 + f(t - 1)^2` with `f(0) = 1`.
pub fn enumerate_masks(t: usize) -> Result<Vec<StoppingMask>> {
    if t > MAX_MASK_DEPTH {
        return Err(Error::DepthTooLarge { depth: t, max: MAX_MASK_DEPTH });
    }
    Ok(masks_below(0, t))
}

fn masks_below(node: usize, remaining: usize) -> Vec<StoppingMask> {
    let mut out = vec![StoppingMask::STOP];
    if remaining == 0 {
        return out;
    }
    let left = masks_below(2 * node + 1, remaining - 1);
    let right = masks_below(2 * node + 2, remaining - 1);
    for l in &left {
        for r in &right {
            out.push(StoppingMask { branch: l.branch | r.branch }.with_branch(node));
        }
    }
    out
}

/// Stopped expectation `E_Q[f_tau]` for the pair `(Q, tau)` encoded by
/// `(d, mask)`.
pub fn tree_expectation<P: EProcess + ?Sized>(d: &TreeHypothesis, mask: StoppingMask, f: &P) -> Result<f64> {
    if mask.depth() > d.depth() {
        return Err(Error::Shape(format!(
            "mask depth {} exceeds tree depth {}",
            mask.depth(),
            d.depth()
        )));
    }
    let mut path = Vec::with_capacity(d.depth());
    Ok(expand(d, mask, f, 0, &mut path))
}

fn expand<P: EProcess + ?Sized>(d: &TreeHypothesis, mask: StoppingMask, f: &P, node: usize, path: &mut Vec<f64>) -> f64 {
    if !mask.branches_at(node) {
        return f.value(path);
    }
    let (a, b) = d.coeffs[node];
    let w = d.weight(node);
    let mut total = 0.0;
    if w > 0.0 {
        path.push(a);
        total += w * expand(d, mask, f, 2 * node + 1, path);
        path.pop();
    }
    if w < 1.0 {
        path.push(b);
        total += (1.0 - w) * expand(d, mask, f, 2 * node + 2, path);
        path.pop();
    }
    total
}

/// Best stopping rule on a fixed tree by backward induction: returns the
/// largest stopped expectation over all masks of depth `<= d.depth()` and a
/// mask attaining it (stopping is preferred on ties).
pub fn best_mask<P: EProcess + ?Sized>(d: &TreeHypothesis, f: &P) -> (f64, StoppingMask) {
    let mut path = Vec::with_capacity(d.depth());
    let mut mask = StoppingMask::STOP;
    let v = best_below(d, f, 0, &mut path, &mut mask);
    (v, mask)
}

fn best_below<P: EProcess + ?Sized>(
    d: &TreeHypothesis,
    f: &P,
    node: usize,
    path: &mut Vec<f64>,
    mask: &mut StoppingMask,
) -> f64 {
    let stop = f.value(path);
    if path.len() == d.depth() {
        return stop;
    }
    let (a, b) = d.coeffs[node];
    let w = d.weight(node);
    let mut sub = StoppingMask::STOP;
    let mut cont = 0.0;
    if w > 0.0 {
        path.push(a);
        cont += w * best_below(d, f, 2 * node + 1, path, &mut sub);
        path.pop();
    }
    if w < 1.0 {
        path.push(b);
        cont += (1.0 - w) * best_below(d, f, 2 * node + 2, path, &mut sub);
        path.pop();
    }
    if cont > stop {
        *mask = StoppingMask { branch: mask.branch | sub.branch }.with_branch(node);
        cont
    } else {
        stop
    }
}
