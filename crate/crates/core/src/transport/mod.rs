//! Exact W1 distance between weighted point clouds in phase space.
//!
//! The ground cost is the Euclidean norm on the full coordinate vector, so
//! for phase-space measures position and velocity blocks weigh equally.

mod assignment;
mod brute;
mod simplex;

use rand::seq::index;
use serde::Serialize;

pub use brute::{w1_bruteforce, MAX_PERMUTATION_ATOMS, MAX_VERTEX_ATOMS};

use crate::dynamics::ParticleState;
use crate::error::{invalid, Error, Result};
use crate::regions::montecarlo::chunk_rng;

/// Largest accepted number of atoms per side.
pub const MAX_ATOMS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    pub dim: usize,
    /// Row-major `len() × dim` coordinates.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let mu = DiscreteMeasure { dim, points, weights };
        mu.validate()?;
        Ok(mu)
    }

    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("measure dimension must be positive"));
        }
        let n = points.len() / dim;
        Self::new(dim, points, vec![1.0 / n as f64; n])
    }

    pub fn dirac(point: &[f64]) -> Self {
        DiscreteMeasure { dim: point.len(), points: point.to_vec(), weights: vec![1.0] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("measure dimension must be positive"));
        }
        if self.points.len() != self.weights.len() * self.dim {
            return Err(invalid("point array does not match weights and dimension"));
        }
        if self.weights.is_empty() {
            return Err(Error::DegenerateMeasure("measure has no atoms".into()));
        }
        if self.points.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::DegenerateMeasure("weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateMeasure(format!("weights sum to {total}, expected 1")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    /// `∫ φ dμ`
    pub fn integrate(&self, phi: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|k| self.weights[k] * phi(self.point(k))).sum()
    }
}

impl From<&ParticleState> for DiscreteMeasure {
    fn from(st: &ParticleState) -> Self {
        st.to_measure()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
}

impl TransportPlan {
    pub fn cost(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        self.entries.iter().map(|e| e.mass * ground_cost(mu.point(e.source), nu.point(e.target))).sum()
    }

    /// Largest deviation of the plan marginals from the two weight vectors.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut rows = vec![0.0; mu.len()];
        let mut cols = vec![0.0; nu.len()];
        for e in &self.entries {
            rows[e.source] += e.mass;
            cols[e.target] += e.mass;
        }
        let dev = |s: &[f64], w: &[f64]| s.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        dev(&rows, &mu.weights).max(dev(&cols, &nu.weights))
    }
}

pub fn ground_cost(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn is_uniform(mu: &DiscreteMeasure) -> bool {
    let w0 = 1.0 / mu.len() as f64;
    mu.weights.iter().all(|&w| (w - w0).abs() <= 1e-15 * w0.max(1e-300) * 4.0)
}

fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    mu.validate()?;
    nu.validate()?;
    if mu.dim != nu.dim {
        return Err(Error::DimensionMismatch { expected: mu.dim, got: nu.dim });
    }
    Ok(())
}

/// Upper bound on every pairwise cost from the joint bounding box.
fn cost_bound(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let d = mu.dim;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in mu.points.chunks(d).chain(nu.points.chunks(d)) {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    lo.iter().zip(&hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt() * (1.0 + 1e-12)
}

/// Exact W1 and an optimal plan.
///
/// Equal-size uniform inputs are solved as an assignment problem; all other
/// inputs go through the network simplex.
pub fn w1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu)?;
    let atoms = mu.len().max(nu.len());
    if atoms > MAX_ATOMS {
        return Err(Error::SizeCap { atoms, cap: MAX_ATOMS });
    }
    if mu.len() == nu.len() && is_uniform(mu) && is_uniform(nu) {
        return Ok(w1_assignment(mu, nu));
    }
    w1_simplex(mu, nu)
}

/// W1 value only.
pub fn w1_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    w1(mu, nu).map(|(d, _)| d)
}

/// Assignment solver; callers must pass equal-size uniform inputs.
pub fn w1_assignment(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (f64, TransportPlan) {
    let n = mu.len();
    let cost = |i: usize, j: usize| ground_cost(mu.point(i), nu.point(j));
    let sol = assignment::solve(n, cost);
    let mass = 1.0 / n as f64;
    let total: f64 = sol.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    let entries = sol.iter().enumerate().map(|(i, &j)| PlanEntry { source: i, target: j, mass }).collect();
    (total / n as f64, TransportPlan { entries })
}

/// Network simplex on any pair of measures.
pub fn w1_simplex(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu)?;
    let cost = |i: usize, j: usize| ground_cost(mu.point(i), nu.point(j));
    let sol = simplex::solve(&mu.weights, &nu.weights, cost, cost_bound(mu, nu))?;
    let entries = sol.flows.into_iter().map(|(source, target, mass)| PlanEntry { source, target, mass }).collect();
    Ok((sol.cost, TransportPlan { entries }))
}

/// Test functions with Lipschitz constant at most 1 by construction.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `z ↦ z_k`
    Coordinate(usize),
    /// `z ↦ |z − p|`
    DistanceTo(Vec<f64>),
    /// `z ↦ clamp(⟨a, z⟩, lo, hi)` with `a` rescaled to norm ≤ 1.
    ClippedLinear { direction: Vec<f64>, lo: f64, hi: f64 },
}

impl TestFunction {
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::Coordinate(k) => z[*k],
            TestFunction::DistanceTo(p) => ground_cost(z, p),
            TestFunction::ClippedLinear { direction, lo, hi } => {
                let norm = direction.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
                let s: f64 = direction.iter().zip(z).map(|(a, x)| a * x).sum::<f64>() / norm;
                s.clamp(*lo, hi.max(*lo))
            }
        }
    }
}

/// `|∫φ dμ − ∫φ dν|`, a lower bound for W1 when `Lip φ ≤ 1`.
pub fn dual_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, phi: &TestFunction) -> f64 {
    (mu.integrate(|z| phi.eval(z)) - nu.integrate(|z| phi.eval(z))).abs()
}

/// `T # μ`: every atom moved by `map`, weights unchanged.
pub fn push_forward(mu: &DiscreteMeasure, map: impl Fn(&[f64]) -> Vec<f64>) -> DiscreteMeasure {
    let mut points = Vec::with_capacity(mu.points.len());
    let mut dim = mu.dim;
    for k in 0..mu.len() {
        let y = map(mu.point(k));
        dim = y.len();
        points.extend(y);
    }
    DiscreteMeasure { dim, points, weights: mu.weights.clone() }
}

/// `n` atoms drawn without replacement (seeded), weights renormalized.
pub fn subsample(mu: &DiscreteMeasure, n: usize, seed: u64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(invalid("subsample size must be positive"));
    }
    if n >= mu.len() {
        return Ok(mu.clone());
    }
    let mut rng = chunk_rng(seed, 0);
    let mut picked = index::sample(&mut rng, mu.len(), n).into_vec();
    picked.sort_unstable();
    let total: f64 = picked.iter().map(|&k| mu.weights[k]).sum();
    let points = picked.iter().flat_map(|&k| mu.point(k).to_vec()).collect();
    let weights = picked.iter().map(|&k| mu.weights[k] / total).collect();
    DiscreteMeasure::new(mu.dim, points, weights)
}
