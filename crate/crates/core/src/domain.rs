//! Sample spaces, finite discrete distributions and the two-point measures
//! that form the extreme points of the mean-`mu` null hypothesis on a grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for measure-level invariants (masses, means).
pub const MEASURE_TOL: f64 = 1e-12;

/// The bet interval `I_mu = [1/(mu-1), 1/mu]`.
pub fn bet_interval(mu: f64) -> (f64, f64) {
    (1.0 / (mu - 1.0), 1.0 / mu)
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpace(format!("mu = {mu} not in (0, 1)")))
    }
}

/// A finite grid `X` in `[0, 1]` containing both endpoints, together with the
/// tested mean `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpace {
    points: Vec<f64>,
    mu: f64,
}

impl SampleSpace {
    pub fn new(points: Vec<f64>, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        if points.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::InvalidSpace("points must lie in [0, 1]".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpace("points must be strictly increasing".into()));
        }
        if points.first() != Some(&0.0) || points.last() != Some(&1.0) {
            return Err(Error::InvalidSpace("grid must contain 0 and 1".into()));
        }
        Ok(Self { points, mu })
    }

    /// `k >= 2` equispaced points `i / (k - 1)`.
    pub fn uniform(k: usize, mu: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidSpace(format!("need at least 2 points, got {k}")));
        }
        let pts = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        Self::new(pts, mu)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bet_interval(&self) -> (f64, f64) {
        bet_interval(self.mu)
    }

    /// Index of the grid point equal to `x` (within [`MEASURE_TOL`]).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.points.partition_point(|p| *p < x - MEASURE_TOL);
        (i < self.points.len() && (self.points[i] - x).abs() <= MEASURE_TOL).then_some(i)
    }

    /// Index of the grid point equal to `mu`, if there is one.
    pub fn mu_index(&self) -> Option<usize> {
        self.index_of(self.mu)
    }

    /// The extreme points of the mean-`mu` hypothesis on this grid: the
    /// point mass at `mu` (if on the grid) followed by every two-point measure
    /// on `a < mu < b`, in lexicographic `(a, b)` order.
    pub fn extreme_measures(&self) -> Vec<TwoPointMeasure> {
        let mu = self.mu;
        let mut out = Vec::new();
        if let Some(i) = self.mu_index() {
            let p = self.points[i];
            out.push(TwoPointMeasure { a: p, b: p, w: 1.0 });
        }
        let lower = self.points.iter().filter(|&&a| a < mu - MEASURE_TOL);
        for &a in lower {
            for &b in self.points.iter().filter(|&&b| b > mu + MEASURE_TOL) {
                out.push(TwoPointMeasure { a, b, w: (b - mu) / (b - a) });
            }
        }
        out
    }
}

/// Mass `W(a, b)` that the unique mean-`mu` measure on `{a, b}` puts on `a`.
///
/// Uses the `0/0 = 1` convention when `a = b = mu`.
pub fn two_point_weight(a: f64, b: f64, mu: f64) -> Result<f64> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if mu < lo - MEASURE_TOL || mu > hi + MEASURE_TOL {
        return Err(Error::MeanOutsideSpan { a, b, mu });
    }
    if (b - a).abs() <= MEASURE_TOL {
        return Ok(1.0);
    }
    Ok(((b - mu) / (b - a)).clamp(0.0, 1.0))
}

/// A mean-`mu` measure `w * delta_a + (1 - w) * delta_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointMeasure {
    pub a: f64,
    pub b: f64,
    /// Mass on `a`.
    pub w: f64,
}

impl TwoPointMeasure {
    pub fn new(a: f64, b: f64, mu: f64) -> Result<Self> {
        Ok(Self { a, b, w: two_point_weight(a, b, mu)? })
    }

    pub fn mean(&self) -> f64 {
        self.w * self.a + (1.0 - self.w) * self.b
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        if self.w >= 1.0 {
            f(self.a)
        } else if self.w <= 0.0 {
            f(self.b)
        } else {
            self.w * f(self.a) + (1.0 - self.w) * f(self.b)
        }
    }

    /// Mass assigned to the point `x`.
    pub fn mass_at(&self, x: f64) -> f64 {
        let mut m = 0.0;
        if (self.a - x).abs() <= MEASURE_TOL {
            m += self.w;
        }
        if (self.b - x).abs() <= MEASURE_TOL {
            m += 1.0 - self.w;
        }
        m
    }
}

/// The mean-`mu` measure putting mass on `x` and on the far endpoint: `{x, 0}`
/// when `x >= mu`, `{x, 1}` otherwise. Its mass on `x` is `1 / F_mu(x)`.
pub fn anchored_two_point(x: f64, mu: f64) -> Result<TwoPointMeasure> {
    check_mu(mu)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidDistribution(format!("anchor {x} outside [0, 1]")));
    }
    let other = if x >= mu { 0.0 } else { 1.0 };
    TwoPointMeasure::new(x, other, mu)
}

/// A probability measure with finitely many atoms in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        for &(p, m) in &atoms {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!("point {p} outside [0, 1]")));
            }
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidDistribution(format!("bad mass {m}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(Self { atoms })
    }

    pub fn point(v: f64) -> Result<Self> {
        Self::new(vec![(v, 1.0)])
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidDistribution(format!("bernoulli p = {p}")));
        }
        Self::new(vec![(0.0, 1.0 - p), (1.0, p)])
    }

    /// Uniform over the `k >= 2` equispaced points `i / (k - 1)`.
    pub fn uniform_grid(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidDistribution(format!("uniform-grid needs k >= 2, got {k}")));
        }
        let m = 1.0 / k as f64;
        let mut atoms: Vec<_> = (0..k).map(|i| (i as f64 / (k - 1) as f64, m)).collect();
        // absorb rounding so the masses sum to one
        let rest: f64 = atoms[..k - 1].iter().map(|a| a.1).sum();
        atoms[k - 1].1 = 1.0 - rest;
        Self::new(atoms)
    }

    pub fn from_two_point(m: &TwoPointMeasure) -> Self {
        let atoms = if m.w >= 1.0 {
            vec![(m.a, 1.0)]
        } else if m.w <= 0.0 {
            vec![(m.b, 1.0)]
        } else {
            vec![(m.a, m.w), (m.b, 1.0 - m.w)]
        };
        Self { atoms }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(p, m)| p * m).sum()
    }

    /// `n` i.i.d. draws, a pure function of `(self, n, seed)`.
    pub fn sample_stream(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let last = self.atoms.len() - 1;
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, &(p, m)) in self.atoms.iter().enumerate() {
                    acc += m;
                    if u < acc || i == last {
                        return p;
                    }
                }
                unreachable!()
            })
            .collect()
    }
}

/// Per-replicate seed derived from a master seed with the splitmix64
/// finaliser (increment `0x9E3779B97F4A7C15`, multipliers
/// `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`).
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        assert_eq!(two_point_weight(0.0, 1.0, 0.5).unwrap(), 0.5);
        assert_eq!(two_point_weight(0.5, 0.5, 0.5).unwrap(), 1.0);
        let w = two_point_weight(0.25, 1.0, 0.5).unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-15);
        let m = TwoPointMeasure { a: 0.25, b: 1.0, w };
        assert!((m.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weight_rejects_mean_outside_span() {
        assert!(matches!(
            two_point_weight(0.6, 1.0, 0.5),
            Err(Error::MeanOutsideSpan { .. })
        ));
        assert!(two_point_weight(0.2, 0.3, 0.5).is_err());
        // order of the endpoints does not matter for the span check
        assert!((two_point_weight(1.0, 0.0, 0.25).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn anchored_examples() {
        let m = anchored_two_point(1.0, 0.5).unwrap();
        assert_eq!(m.mass_at(1.0), 0.5);
        assert_eq!(m.mass_at(0.0), 0.5);

        let m = anchored_two_point(0.5, 0.5).unwrap();
        assert_eq!(m.mass_at(0.5), 1.0);

        let m = anchored_two_point(0.0, 0.5).unwrap();
        assert_eq!(m.mass_at(0.0), 0.5);
        assert_eq!(m.mass_at(1.0), 0.5);
        assert!((m.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn space_validation() {
        assert!(SampleSpace::new(vec![0.0, 0.5, 1.0], 0.5).is_ok());
        assert!(SampleSpace::new(vec![0.0, 0.5], 0.5).is_err());
        assert!(SampleSpace::new(vec![0.0, 0.5, 0.5, 1.0], 0.5).is_err());
        assert!(SampleSpace::new(vec![0.0, 1.0], 1.0).is_err());
        assert!(SampleSpace::new(vec![0.0, 1.2], 0.5).is_err());
        let s = SampleSpace::uniform(5, 0.5).unwrap();
        assert_eq!(s.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.mu_index(), Some(2));
        assert_eq!(s.index_of(0.75), Some(3));
        assert_eq!(s.index_of(0.7), None);
    }

    #[test]
    fn extreme_measures_on_small_grid() {
        let s = SampleSpace::uniform(3, 0.5).unwrap();
        let ms = s.extreme_measures();
        assert_eq!(ms.len(), 2);
        assert_eq!((ms[0].a, ms[0].b, ms[0].w), (0.5, 0.5, 1.0));
        assert_eq!((ms[1].a, ms[1].b, ms[1].w), (0.0, 1.0, 0.5));

        // mu off the grid: no point mass, 2 x 2 pairs
        let s = SampleSpace::new(vec![0.0, 0.2, 0.6, 1.0], 0.4).unwrap();
        let ms = s.extreme_measures();
        assert_eq!(ms.len(), 4);
        for m in ms {
            assert!((m.mean() - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_stream_examples() {
        let d = DiscreteDistribution::point(0.5).unwrap();
        assert_eq!(d.sample_stream(3, 7), vec![0.5; 3]);
        let d = DiscreteDistribution::bernoulli(1.0).unwrap();
        assert_eq!(d.sample_stream(2, 99), vec![1.0; 2]);
        assert!(d.sample_stream(0, 1).is_empty());

        let d = DiscreteDistribution::bernoulli(0.5).unwrap();
        let xs = d.sample_stream(10_000, 42);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn sample_stream_is_reproducible() {
        let d = DiscreteDistribution::uniform_grid(7).unwrap();
        assert_eq!(d.sample_stream(500, 3), d.sample_stream(500, 3));
        assert_ne!(d.sample_stream(500, 3), d.sample_stream(500, 4));
        assert!((d.mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDistribution::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(DiscreteDistribution::new(vec![(1.5, 1.0)]).is_err());
        assert!(DiscreteDistribution::new(vec![(0.2, -0.1), (0.4, 1.1)]).is_err());
        assert!(DiscreteDistribution::bernoulli(1.2).is_err());
    }

    #[test]
    fn replicate_seeds_differ() {
        let seeds: std::collections::HashSet<_> = (0..1000).map(|i| replicate_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(replicate_seed(7, 3), replicate_seed(7, 3));
    }
}
