//! Monte Carlo checks of the geometric hypotheses on `Θ(v)` and of the
//! set-inclusion lemmas used by the stability proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derive_seed, linear_fit};
use crate::error::{invalid, Result};
use crate::geom::{self, Vec3};
use crate::regions::montecarlo::{chunk_rng, MonteCarlo};
use crate::regions::sampling::{sample_boundary, sample_theta};
use crate::regions::{Mollifier, MollifierParams, RegionFamily, RegionKind, Slice, TOL_GEOM};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeFit {
    pub v: Vec3,
    pub eps: Vec<f64>,
    pub volume: Vec<f64>,
    pub std_err: Vec<f64>,
    pub slope: f64,
    pub slope_std_err: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionCheck {
    pub name: String,
    pub pairs: usize,
    pub fit_samples: usize,
    pub validation_samples: usize,
    /// Largest observed `dist(x, Θ(v)) / |v − w|` on the fit samples.
    pub observed: f64,
    /// Constant the validation samples are checked against.
    pub fitted: f64,
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub region: RegionFamily,
    pub n_samples: usize,
    pub seed: u64,
    pub volume_fits: Vec<VolumeFit>,
    pub min_r2: f64,
    pub symmetric_difference: InclusionCheck,
    pub theta_inclusion: InclusionCheck,
    pub pass: bool,
}

/// Perturbation sizes `|v − w|` used for the inclusion checks.
pub const PAIR_STEPS: [f64; 4] = [0.01, 0.03, 0.1, 0.2];

/// Fitted constants carry this relative margin before validation.
pub const FIT_MARGIN: f64 = 1.1;

/// Linear fits of `|Θ(v)^{ε,+}|` against `ε` for every `v`, and fitted
/// constants for `K(v) Δ K(w) ⊂ Θ(v)^{C|v−w|,+}` and
/// `Θ(w) ⊂ Θ(v)^{C|v−w|,+}`, validated on fresh samples.
///
/// Volume estimates for the `k`-th `ε` use the same stream for every `v`,
/// so velocities with identical `Θ(v)` give identical fits.
pub fn hypothesis_check(
    region: &RegionFamily,
    v_samples: &[Vec3],
    eps_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<HypothesisReport> {
    region.validate()?;
    if eps_grid.len() < 2 || eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(invalid("eps grid needs at least two values in (0, 1)"));
    }
    let mut volume_fits = Vec::new();
    for &v in v_samples {
        let (mut volume, mut std_err) = (Vec::new(), Vec::new());
        for (k, &eps) in eps_grid.iter().enumerate() {
            let mc = MonteCarlo::new(n_samples, derive_seed(seed, k as u64));
            let e = mc.theta_enlargement(region, v, eps)?;
            volume.push(e.estimate);
            std_err.push(e.std_err);
        }
        let fit = linear_fit(eps_grid, &volume);
        let mean = eps_grid.iter().sum::<f64>() / eps_grid.len() as f64;
        let sxx: f64 = eps_grid.iter().map(|e| (e - mean).powi(2)).sum();
        let var: f64 = eps_grid.iter().zip(&std_err).map(|(e, s)| (e - mean).powi(2) * s * s).sum();
        volume_fits.push(VolumeFit {
            v,
            eps: eps_grid.to_vec(),
            volume,
            std_err,
            slope: fit.slope,
            slope_std_err: var.sqrt() / sxx,
            intercept: fit.intercept,
            r2: fit.r2,
        });
    }
    let min_r2 = volume_fits.iter().map(|f| f.r2).fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
    let pairs: Vec<(Vec3, Vec3)> = v_samples
        .iter()
        .flat_map(|&v| PAIR_STEPS.iter().map(move |&s| (v, s)).collect::<Vec<_>>())
        .map(|(v, s)| (v, geom::axpy(v, s, geom::random_unit(&mut rng, region.dim))))
        .collect();

    let radius = region.global_radius() + 1.0;
    let symmetric_difference = inclusion(
        "symmetric_difference_in_theta_enlargement",
        region,
        &pairs,
        n_samples,
        seed ^ 0x51,
        |a, b, rng| {
            // half uniform, half concentrated around the boundary of K(v)
            let x = if rng.random::<bool>() {
                geom::random_in_ball(rng, region.dim, radius)
            } else {
                geom::add(sample_boundary(a, rng), geom::random_in_ball(rng, region.dim, 0.5))
            };
            (a.contains(x) != b.contains(x)).then_some(x)
        },
    );
    let theta_inclusion = inclusion("theta_w_in_theta_v_enlargement", region, &pairs, n_samples, seed ^ 0x52, |_, b, rng| {
        Some(sample_theta(b, rng))
    });
    let pass = min_r2 >= 0.99 && symmetric_difference.violations == 0 && theta_inclusion.violations == 0;
    Ok(HypothesisReport {
        region: *region,
        n_samples,
        seed,
        volume_fits,
        min_r2,
        symmetric_difference,
        theta_inclusion,
        pass,
    })
}

/// Fits `C = max dist(x, Θ(v)) / |v − w|` over points drawn by `draw` on one
/// stream, then counts points of a second stream beyond `FIT_MARGIN · C`
/// (plus the geometric tolerance).
fn inclusion<F>(name: &str, region: &RegionFamily, pairs: &[(Vec3, Vec3)], n: usize, seed: u64, draw: F) -> InclusionCheck
where
    F: Fn(&Slice, &Slice, &mut ChaCha8Rng) -> Option<Vec3>,
{
    let ratio = |a: &Slice, x: Vec3, step: f64| a.theta_distance(x) / step;
    let mut observed: f64 = 0.0;
    for (k, &(v, w)) in pairs.iter().enumerate() {
        let (a, b) = (region.slice(v), region.slice(w));
        let step = geom::dist(v, w);
        let mut rng = chunk_rng(seed, 2 * k as u64);
        for _ in 0..n {
            if let Some(x) = draw(&a, &b, &mut rng) {
                observed = observed.max(ratio(&a, x, step));
            }
        }
    }
    let fitted = FIT_MARGIN * observed;
    let mut violations = 0;
    for (k, &(v, w)) in pairs.iter().enumerate() {
        let (a, b) = (region.slice(v), region.slice(w));
        let step = geom::dist(v, w);
        let mut rng = chunk_rng(seed, 2 * k as u64 + 1);
        for _ in 0..n {
            if let Some(x) = draw(&a, &b, &mut rng) {
                if !a.theta_enlarged_contains(x, fitted * step + TOL_GEOM) {
                    violations += 1;
                }
            }
        }
    }
    InclusionCheck {
        name: name.to_string(),
        pairs: pairs.len(),
        fit_samples: n,
        validation_samples: n,
        observed,
        fitted,
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub region: RegionFamily,
    pub n_samples: usize,
    pub seed: u64,
    pub checks: Vec<InclusionCheck>,
    pub pass: bool,
}

fn check(name: String, n: usize, violations: u64) -> InclusionCheck {
    InclusionCheck { name, pairs: 0, fit_samples: 0, validation_samples: n, observed: 0.0, fitted: 0.0, violations }
}

fn random_velocity(rng: &mut ChaCha8Rng, dim: usize) -> Vec3 {
    geom::scale(geom::random_unit(rng, dim), 3.0 * rng.random::<f64>())
}

/// Displacement drawn uniformly in `B(0, R_K + 1)` or near `∂K(v)`.
fn displacement(rng: &mut ChaCha8Rng, sl: &Slice, radius: f64, spread: f64) -> Vec3 {
    if rng.random::<bool>() {
        geom::random_in_ball(rng, sl.dim, radius)
    } else {
        geom::add(sample_boundary(sl, rng), geom::random_in_ball(rng, sl.dim, spread))
    }
}

/// Sampled set-inclusion lemmas: tube dilation, indicator differences,
/// support of the mollified indicator, nesting of enlargements and
/// reductions, `∂K(v) ⊂ Θ(v)`, and (for cones) monotonicity in `θ*`.
/// Every check uses `n_samples` points and must see zero violations.
pub fn lemma_suite(region: &RegionFamily, params: MollifierParams, n_samples: usize, seed: u64) -> Result<LemmaReport> {
    region.validate()?;
    params.validate()?;
    let dim = region.dim;
    let radius = region.global_radius() + 1.0;
    let mut checks = Vec::new();
    let mut stream = 0u64;
    let mut next_rng = || {
        stream += 1;
        chunk_rng(seed, stream)
    };

    // (∂^ε K)^{δ,+} ⊂ ∂^{ε+δ} K
    for eps in [0.05, 0.1, 0.2] {
        for delta in [0.05, 0.1, 0.2] {
            let mut rng = next_rng();
            let mut bad = 0;
            for _ in 0..n_samples {
                let sl = region.slice(random_velocity(&mut rng, dim));
                let y = geom::add(sample_boundary(&sl, &mut rng), geom::random_in_ball(&mut rng, dim, eps));
                let x = geom::add(y, geom::random_in_ball(&mut rng, dim, delta));
                let a = sl.eps_boundary_contains(y, eps) && geom::dist(x, y) <= delta;
                if a && !sl.eps_boundary_contains(x, eps + delta) {
                    bad += 1;
                }
            }
            checks.push(check(format!("tube_dilation eps={eps} delta={delta}"), n_samples, bad));
        }
    }

    // |1_K(y1−x1) − 1_K(y2−x2)| ≤ 1_{∂^{2ε1}K}(y1−x1) + 1_{∂^{2ε2}K}(y1−x1)
    {
        let mut rng = next_rng();
        let mut bad = 0;
        for _ in 0..n_samples {
            let sl = region.slice(random_velocity(&mut rng, dim));
            let x1 = geom::random_in_ball(&mut rng, dim, 1.0);
            let y1 = geom::add(x1, displacement(&mut rng, &sl, radius, 0.3));
            let x2 = geom::add(x1, geom::random_in_ball(&mut rng, dim, 0.3));
            let y2 = geom::add(y1, geom::random_in_ball(&mut rng, dim, 0.3));
            let (e1, e2) = (geom::dist(x1, x2), geom::dist(y1, y2));
            let z = geom::sub(y1, x1);
            let lhs = (sl.contains(z) as i32 - sl.contains(geom::sub(y2, x2)) as i32).abs();
            let rhs = sl.eps_boundary_contains(z, 2.0 * e1) as i32 + sl.eps_boundary_contains(z, 2.0 * e2) as i32;
            if lhs > rhs {
                bad += 1;
            }
        }
        checks.push(check("indicator_difference".into(), n_samples, bad));
    }

    // 1^{η,ε} ∈ [0, 1] and 1^{η,ε} > 0 ⇒ x ∈ K^{ε+η·Lip_K,+}
    {
        let moll = Mollifier::new(dim, params)?;
        let reach = params.eps + params.eta * region.velocity_lipschitz();
        let mut rng = next_rng();
        let mut bad = 0;
        for _ in 0..n_samples {
            let v = random_velocity(&mut rng, dim);
            let sl = region.slice(v);
            let x = displacement(&mut rng, &sl, radius, reach + 0.2);
            let m = moll.indicator(region, v, x);
            if !(0.0..=1.0).contains(&m) || (m > 0.0 && !sl.enlarged_contains(x, reach)) {
                bad += 1;
            }
        }
        checks.push(check("mollified_support".into(), n_samples, bad));
    }

    // nesting of boundary tubes, reductions and enlargements
    {
        let mut rng = next_rng();
        let mut bad = 0;
        for _ in 0..n_samples {
            let sl = region.slice(random_velocity(&mut rng, dim));
            let x = displacement(&mut rng, &sl, radius, 0.3);
            let eps = 0.3 * rng.random::<f64>() + 1e-3;
            let delta = eps * rng.random::<f64>();
            let tubes = !sl.eps_boundary_contains(x, delta) || sl.eps_boundary_contains(x, eps);
            let sets = (!sl.reduced_contains(x, eps) || sl.contains(x)) && (!sl.contains(x) || sl.enlarged_contains(x, eps));
            if !(tubes && sets) {
                bad += 1;
            }
        }
        checks.push(check("nesting".into(), n_samples, bad));
    }

    // points on ∂K(v) lie on Θ(v)
    {
        let mut rng = next_rng();
        let mut bad = 0;
        for _ in 0..n_samples {
            let sl = region.slice(random_velocity(&mut rng, dim));
            let y = sample_boundary(&sl, &mut rng);
            if sl.signed_distance(y).abs() <= TOL_GEOM && !sl.theta_contains(y) {
                bad += 1;
            }
        }
        checks.push(check("boundary_in_theta".into(), n_samples, bad));
    }

    if let RegionKind::VisionCone { radius: r, profile } = region.kind {
        let mut wider = profile;
        wider.theta_star = (profile.theta_star + 0.3).min(std::f64::consts::PI);
        let wide = RegionFamily::vision_cone(dim, r, wider);
        let mut rng = next_rng();
        let mut bad = 0;
        for _ in 0..n_samples {
            let v = random_velocity(&mut rng, dim);
            let x = geom::random_in_ball(&mut rng, dim, radius);
            if region.contains(v, x) && !wide.contains(v, x) {
                bad += 1;
            }
        }
        checks.push(check("cone_monotone_in_theta_star".into(), n_samples, bad));
    }

    let pass = checks.iter().all(|c| c.violations == 0);
    Ok(LemmaReport { region: *region, n_samples, seed, checks, pass })
}
