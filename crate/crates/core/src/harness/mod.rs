//! Experiment drivers: mean-field convergence, stability between solutions,
//! mollifier-width stability, geometric hypothesis checks and force-field
//! Lipschitz diagnostics.
//!
//! The unknown kinetic solution is proxied by a mollified high-resolution
//! particle ensemble (the reference). Distances of coarse runs to it bound
//! their distance to the true solution up to the reference's own sampling
//! error, by the triangle inequality.

mod hypotheses;
mod lipschitz;
mod studies;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use hypotheses::{hypothesis_check, lemma_suite, HypothesisReport, InclusionCheck, LemmaReport, VolumeFit};
pub use lipschitz::{lipschitz_diagnostic, probe_pairs, LipschitzReport, ProbePair};
pub use studies::{
    convergence_against, convergence_study, mollifier_study, reference_solution, stability_study, ConvergenceReport, ConvergenceRow,
    MollifierRow, MollifierStudyReport, Setup, StabilityReport, StabilityRow,
};

use crate::dynamics::ParticleState;
use crate::error::{invalid, Result};
use crate::geom::{self, Vec3};

/// Initial density `f0`, sampled i.i.d. to build particle ensembles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDensitySpec {
    /// Positions uniform in a box; velocities Gaussian, resampled outside
    /// `|v| ≤ velocity_cutoff`.
    UniformBoxGaussianV {
        box_lo: Vec<f64>,
        box_hi: Vec<f64>,
        #[serde(default)]
        velocity_mean: Option<Vec<f64>>,
        velocity_std: f64,
        velocity_cutoff: f64,
    },
    /// Gaussian position clusters, each with its own mean velocity; a
    /// particle picks a cluster uniformly.
    TwoClusterFlock {
        centers: Vec<Vec<f64>>,
        spreads: Vec<f64>,
        velocities: Vec<Vec<f64>>,
        velocity_std: f64,
        velocity_cutoff: f64,
    },
    /// Draws uniformly from a list of phase-space points `(x, v)`.
    Custom { samples: Vec<Vec<f64>> },
}

impl InitialDensitySpec {
    /// Box `[-3, 3]²`, velocities `N((1, 0), 0.5²)` cut at 3.
    pub fn default_study() -> Self {
        InitialDensitySpec::UniformBoxGaussianV {
            box_lo: vec![-3.0, -3.0],
            box_hi: vec![3.0, 3.0],
            velocity_mean: Some(vec![1.0, 0.0]),
            velocity_std: 0.5,
            velocity_cutoff: 3.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialDensitySpec::UniformBoxGaussianV { box_lo, .. } => box_lo.len(),
            InitialDensitySpec::TwoClusterFlock { centers, .. } => centers.first().map_or(0, Vec::len),
            InitialDensitySpec::Custom { samples } => samples.first().map_or(0, |s| s.len() / 2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d != 2 && d != 3 {
            return Err(invalid(format!("initial density dimension must be 2 or 3, got {d}")));
        }
        let check_cut = |mean: &[f64], std: f64, cut: f64| -> Result<()> {
            if !(std >= 0.0 && std.is_finite()) {
                return Err(invalid("velocity_std must be non-negative"));
            }
            if !(cut > 0.0 && cut.is_finite()) {
                return Err(invalid("velocity_cutoff must be positive"));
            }
            if mean.len() != d {
                return Err(invalid("velocity mean has the wrong dimension"));
            }
            if geom::norm(geom::from_slice(mean)) >= cut {
                return Err(invalid("velocity mean must lie strictly inside the cutoff ball"));
            }
            Ok(())
        };
        match self {
            InitialDensitySpec::UniformBoxGaussianV { box_lo, box_hi, velocity_mean, velocity_std, velocity_cutoff } => {
                if box_hi.len() != d || box_lo.iter().zip(box_hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                    return Err(invalid("box_lo/box_hi must be finite with box_lo <= box_hi"));
                }
                check_cut(velocity_mean.as_deref().unwrap_or(&vec![0.0; d]), *velocity_std, *velocity_cutoff)
            }
            InitialDensitySpec::TwoClusterFlock { centers, spreads, velocities, velocity_std, velocity_cutoff } => {
                if centers.len() != spreads.len() || centers.len() != velocities.len() {
                    return Err(invalid("centers, spreads and velocities must have equal length"));
                }
                if centers.iter().any(|c| c.len() != d) || spreads.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                    return Err(invalid("bad cluster centers or spreads"));
                }
                velocities.iter().try_for_each(|u| check_cut(u, *velocity_std, *velocity_cutoff))
            }
            InitialDensitySpec::Custom { samples } => {
                if samples.iter().any(|s| s.len() != 2 * d || s.iter().any(|x| !x.is_finite())) {
                    return Err(invalid("custom samples must be finite rows of 2d phase-space coordinates"));
                }
                Ok(())
            }
        }
    }

    /// Radius `R_v⁰` of a ball containing the velocity support.
    pub fn velocity_radius(&self) -> f64 {
        match self {
            InitialDensitySpec::UniformBoxGaussianV { velocity_cutoff, .. }
            | InitialDensitySpec::TwoClusterFlock { velocity_cutoff, .. } => *velocity_cutoff,
            InitialDensitySpec::Custom { samples } => {
                let d = self.dim();
                samples.iter().map(|s| geom::norm(geom::from_slice(&s[d..]))).fold(0.0, f64::max)
            }
        }
    }

    /// Same density shifted by `c` in position.
    pub fn translated(&self, c: &[f64]) -> Self {
        let shift = |p: &[f64]| p.iter().zip(c).map(|(a, b)| a + b).collect::<Vec<_>>();
        let mut out = self.clone();
        match &mut out {
            InitialDensitySpec::UniformBoxGaussianV { box_lo, box_hi, .. } => {
                *box_lo = shift(box_lo);
                *box_hi = shift(box_hi);
            }
            InitialDensitySpec::TwoClusterFlock { centers, .. } => centers.iter_mut().for_each(|p| *p = shift(p)),
            InitialDensitySpec::Custom { samples } => {
                for s in samples.iter_mut() {
                    let d = s.len() / 2;
                    let x = shift(&s[..d]);
                    s[..d].copy_from_slice(&x);
                }
            }
        }
        out
    }
}

fn gaussian_velocity(rng: &mut ChaCha8Rng, d: usize, mean: &[f64], std: f64, cut: f64) -> Vec3 {
    let normal = Normal::new(0.0, std).expect("validated std");
    loop {
        let mut v = geom::ZERO;
        for k in 0..d {
            v[k] = mean[k] + normal.sample(rng);
        }
        if geom::norm(v) <= cut {
            return v;
        }
    }
}

/// `n` i.i.d. samples of `spec` with weights `1/n`.
pub fn sample_initial(spec: &InitialDensitySpec, n: usize, seed: u64) -> Result<ParticleState> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("need at least one particle"));
    }
    let d = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for _ in 0..n {
        let (x, v) = match spec {
            InitialDensitySpec::UniformBoxGaussianV { box_lo, box_hi, velocity_mean, velocity_std, velocity_cutoff } => {
                let mut x = geom::ZERO;
                for k in 0..d {
                    x[k] = box_lo[k] + (box_hi[k] - box_lo[k]) * rng.random::<f64>();
                }
                let zero = vec![0.0; d];
                let mean = velocity_mean.as_deref().unwrap_or(&zero);
                (x, gaussian_velocity(&mut rng, d, mean, *velocity_std, *velocity_cutoff))
            }
            InitialDensitySpec::TwoClusterFlock { centers, spreads, velocities, velocity_std, velocity_cutoff } => {
                let c = rng.random_range(0..centers.len());
                let normal = Normal::new(0.0, spreads[c]).expect("validated spread");
                let mut x = geom::ZERO;
                for k in 0..d {
                    x[k] = centers[c][k] + normal.sample(&mut rng);
                }
                (x, gaussian_velocity(&mut rng, d, &velocities[c], *velocity_std, *velocity_cutoff))
            }
            InitialDensitySpec::Custom { samples } => {
                if samples.is_empty() {
                    return Err(invalid("custom density has no samples"));
                }
                let s = &samples[rng.random_range(0..samples.len())];
                (geom::from_slice(&s[..d]), geom::from_slice(&s[d..]))
            }
        };
        pos.push(x);
        vel.push(v);
    }
    ParticleState::uniform(d, pos, vel)
}

/// Seed for an independent stream labelled `tag`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    for _ in 0..2 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LinearFit { slope, intercept, r2 }
}

/// Worst-case growth rate `max_{t>0} log(d(t)/d(0)) / t` over the points
/// with `t ≤ horizon`.
pub fn max_log_slope(times: &[f64], d: &[f64], horizon: f64) -> Option<f64> {
    let d0 = d[0];
    times
        .iter()
        .zip(d)
        .filter(|(&t, _)| t > 0.0 && t <= horizon * (1.0 + 1e-12))
        .map(|(&t, &x)| (x / d0).ln() / t)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
}

/// Two rates agree within `rel` relative to the larger magnitude.
pub fn rates_agree(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// Snapshot stride that lands on every requested time.
pub(crate) fn record_stride(times: &[f64], dt: f64, t_end: f64) -> Result<usize> {
    let mut g = 0usize;
    for &t in times {
        if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
            return Err(invalid(format!("sample time {t} outside [0, {t_end}]")));
        }
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(invalid(format!("sample time {t} is not a multiple of dt = {dt}")));
        }
        g = gcd(g, k as usize);
    }
    Ok(g.max(1))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle_and_cutoff() {
        let spec = InitialDensitySpec::default_study();
        let one = sample_initial(&spec, 1, 3).unwrap();
        assert_eq!(one.weights, vec![1.0]);
        let st = sample_initial(&spec, 5000, 4).unwrap();
        assert!(st.max_speed() <= 3.0);
        assert!(st.positions.iter().all(|x| x[0].abs() <= 3.0 && x[1].abs() <= 3.0 && x[2] == 0.0));
    }

    #[test]
    fn position_mean_within_clt_bound() {
        let spec = InitialDensitySpec::default_study();
        let n = 10_000;
        let st = sample_initial(&spec, n, 5).unwrap();
        // uniform on [-3, 3]: sigma = 6 / sqrt(12)
        let sigma = 6.0 / 12f64.sqrt();
        for k in 0..2 {
            let mean = st.positions.iter().map(|x| x[k]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 4.0 * sigma / (n as f64).sqrt(), "coordinate {k}: {mean}");
        }
    }

    #[test]
    fn clusters_and_custom() {
        let spec = InitialDensitySpec::TwoClusterFlock {
            centers: vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
            spreads: vec![0.3, 0.3],
            velocities: vec![vec![0.5, 0.0], vec![-0.5, 0.0]],
            velocity_std: 0.1,
            velocity_cutoff: 1.0,
        };
        let st = sample_initial(&spec, 2000, 6).unwrap();
        let left = st.positions.iter().filter(|x| x[0] < 0.0).count();
        assert!((left as f64 - 1000.0).abs() < 4.0 * (500.0f64).sqrt());
        let custom = InitialDensitySpec::Custom { samples: vec![vec![1.0, 2.0, 0.5, 0.0]] };
        let st = sample_initial(&custom, 3, 0).unwrap();
        assert!(st.positions.iter().all(|x| *x == [1.0, 2.0, 0.0]));
        assert_eq!(custom.velocity_radius(), 0.5);
        let moved = custom.translated(&[1.0, 1.0]);
        assert_eq!(moved, InitialDensitySpec::Custom { samples: vec![vec![2.0, 3.0, 0.5, 0.0]] });
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = InitialDensitySpec::UniformBoxGaussianV {
            box_lo: vec![0.0, 0.0],
            box_hi: vec![1.0, 1.0],
            velocity_mean: Some(vec![5.0, 0.0]),
            velocity_std: 0.1,
            velocity_cutoff: 1.0,
        };
        assert!(sample_initial(&bad, 10, 0).is_err());
        assert!(sample_initial(&InitialDensitySpec::default_study(), 0, 0).is_err());
    }

    #[test]
    fn fits() {
        let f = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15 && f.r2 == 1.0);
        let t = [0.0, 0.5, 1.0];
        let d = [1.0, 1f64.exp(), 1.5f64.exp()];
        assert!((max_log_slope(&t, &d, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((max_log_slope(&t, &d, 0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!(rates_agree(1.0, 1.2, 0.25) && !rates_agree(1.0, 1.5, 0.25));
        assert_eq!(record_stride(&[0.0, 0.25, 0.5, 1.0], 1e-3, 1.0).unwrap(), 250);
        assert!(record_stride(&[0.00025], 1e-3, 1.0).is_err());
    }
}
