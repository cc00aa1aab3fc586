//! Monte Carlo estimators for volumes of ε-boundaries, enlargements of
//! `Θ(v)` and symmetric differences, plus a sampled inclusion checker.
//!
//! Samples are uniform in the ball `B(0, R_K + 1)`. The budget is split in
//! one chunk per worker; chunk `c` draws from ChaCha stream `c` of the seed,
//! and chunk counts are summed in chunk order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::RegionFamily;
use crate::error::{invalid, Result};
use crate::geom::{self, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub hits: u64,
    pub n_samples: u64,
}

impl McEstimate {
    fn from_hits(hits: u64, n: u64, volume: f64) -> Self {
        let p = hits as f64 / n as f64;
        McEstimate { estimate: volume * p, std_err: volume * (p * (1.0 - p) / n as f64).sqrt(), hits, n_samples: n }
    }

    pub fn zero(n: u64) -> Self {
        McEstimate { estimate: 0.0, std_err: 0.0, hits: 0, n_samples: n }
    }
}

/// Sample budget shared by the estimators.
#[derive(Clone, Copy, Debug)]
pub struct MonteCarlo {
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
}

pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

impl MonteCarlo {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        MonteCarlo { n_samples, seed, workers: 1 }
    }

    /// Counts samples for which `hit` holds.
    pub fn count<F>(&self, hit: F) -> u64
    where
        F: Fn(&mut ChaCha8Rng) -> bool + Sync,
    {
        let workers = self.workers.max(1);
        let n = self.n_samples;
        let run = |c: usize| {
            let share = n / workers + usize::from(c < n % workers);
            let mut rng = chunk_rng(self.seed, c as u64);
            (0..share).filter(|_| hit(&mut rng)).count() as u64
        };
        if workers == 1 {
            return run(0);
        }
        let counts: Vec<u64> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|c| s.spawn(move || run(c))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        counts.into_iter().sum()
    }

    /// Estimates the volume of `{x ∈ B(0, R_K+1) : pred(x)}`.
    pub fn volume<P>(&self, region: &RegionFamily, pred: P) -> Result<McEstimate>
    where
        P: Fn(Vec3) -> bool + Sync,
    {
        if self.n_samples < 1000 {
            return Err(invalid(format!("need at least 1000 samples, got {}", self.n_samples)));
        }
        let radius = region.global_radius() + 1.0;
        let dim = region.dim;
        let hits = self.count(|rng| pred(geom::random_in_ball(rng, dim, radius)));
        let volume = geom::unit_ball_volume(dim) * radius.powi(dim as i32);
        Ok(McEstimate::from_hits(hits, self.n_samples as u64, volume))
    }

    pub fn eps_boundary(&self, region: &RegionFamily, v: Vec3, eps: f64) -> Result<McEstimate> {
        check_eps(eps)?;
        let sl = region.slice(v);
        self.volume(region, |x| sl.eps_boundary_contains(x, eps))
    }

    pub fn theta_enlargement(&self, region: &RegionFamily, v: Vec3, eps: f64) -> Result<McEstimate> {
        check_eps(eps)?;
        let sl = region.slice(v);
        self.volume(region, |x| sl.theta_enlarged_contains(x, eps))
    }

    pub fn symmetric_difference(&self, region: &RegionFamily, v: Vec3, w: Vec3) -> Result<McEstimate> {
        let (a, b) = (region.slice(v), region.slice(w));
        if v == w {
            return Ok(McEstimate::zero(self.n_samples as u64));
        }
        self.volume(region, |x| a.contains(x) != b.contains(x))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Monte Carlo volume of `∂^ε K(v)`.
pub fn measure_eps_boundary_mc(region: &RegionFamily, v: Vec3, eps: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    MonteCarlo::new(n_samples, seed).eps_boundary(region, v, eps)
}

/// Monte Carlo volume of `Θ(v)^{ε,+}`.
pub fn measure_theta_enlargement_mc(
    region: &RegionFamily,
    v: Vec3,
    eps: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    MonteCarlo::new(n_samples, seed).theta_enlargement(region, v, eps)
}

/// Monte Carlo volume of `K(v) Δ K(w)`.
pub fn measure_symmetric_difference_mc(
    region: &RegionFamily,
    v: Vec3,
    w: Vec3,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    MonteCarlo::new(n_samples, seed).symmetric_difference(region, v, w)
}

/// Number of sampled points where `a` holds and `b` fails.
pub fn check_inclusion_sampled<T, A, B, S>(a: A, b: B, mut sampler: S, n_samples: usize, seed: u64) -> u64
where
    A: Fn(&T) -> bool,
    B: Fn(&T) -> bool,
    S: FnMut(&mut ChaCha8Rng) -> T,
{
    let mut rng = chunk_rng(seed, 0);
    let mut violations = 0;
    for _ in 0..n_samples {
        let p = sampler(&mut rng);
        if a(&p) && !b(&p) {
            violations += 1;
        }
    }
    violations
}
