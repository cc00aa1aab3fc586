//! Local Lipschitz and linear-growth diagnostics of the mollified
//! mean-field force field.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::ParticleState;
use crate::error::{invalid, Result};
use crate::forces::{ForceEval, ForceKind, ForceModel, Indicator};
use crate::geom::{self, Vec3};
use crate::regions::MollifiedTable;

/// Two nearby phase-space points `z1 = (x1, v1)`, `z2 = (x2, v2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbePair {
    pub x1: Vec3,
    pub v1: Vec3,
    pub x2: Vec3,
    pub v2: Vec3,
}

impl ProbePair {
    pub fn separation(&self) -> f64 {
        (geom::norm2(geom::sub(self.x1, self.x2)) + geom::norm2(geom::sub(self.v1, self.v2))).sqrt()
    }
}

/// `n` probe pairs with `x1` uniform in the positional bounding box of
/// `state` and `v1` uniform in its velocity support ball; `z2` is `z1`
/// moved by `sep` in a uniformly random phase-space direction. The first
/// `k` pairs drawn with a given seed do not depend on `n`.
pub fn probe_pairs(state: &ParticleState, n: usize, sep: f64, seed: u64) -> Vec<ProbePair> {
    let d = state.dim;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &state.positions {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let s = state.max_speed();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut x1 = geom::ZERO;
            for k in 0..d {
                x1[k] = if hi[k] > lo[k] { rng.random_range(lo[k]..=hi[k]) } else { lo[k] };
            }
            let v1 = geom::random_in_ball(&mut rng, d, s);
            // direction uniform on the unit sphere of R^{2d}
            let (mut dx, mut dv) = (geom::random_in_ball(&mut rng, d, 1.0), geom::random_in_ball(&mut rng, d, 1.0));
            let mut len = (geom::norm2(dx) + geom::norm2(dv)).sqrt();
            while len < 1e-3 {
                dx = geom::random_in_ball(&mut rng, d, 1.0);
                dv = geom::random_in_ball(&mut rng, d, 1.0);
                len = (geom::norm2(dx) + geom::norm2(dv)).sqrt();
            }
            ProbePair { x1, v1, x2: geom::axpy(x1, sep / len, dx), v2: geom::axpy(v1, sep / len, dv) }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub probes: usize,
    /// Max of `|F(z1) − F(z2)| / ((1 + |v1|)|z1 − z2|)` over the first half.
    pub lip_half: f64,
    /// Same over all probes.
    pub lip_full: f64,
    /// `|lip_full − lip_half| / lip_half`, zero when both vanish.
    pub refinement_change: f64,
    pub stable: bool,
    /// Max of `|F(z)| / (1 + |v|)` over every probe endpoint.
    pub growth_constant: f64,
    /// Probe endpoints where `|F|` exceeds the analytic sup bound.
    pub growth_violations: usize,
    pub pass: bool,
}

/// Allowed relative change of the fitted constant when the probe count
/// doubles.
pub const REFINEMENT_TOL: f64 = 0.2;

fn ratio(f1: Vec3, f2: Vec3, pair: &ProbePair) -> f64 {
    let sep = pair.separation();
    if sep == 0.0 {
        return 0.0;
    }
    geom::dist(f1, f2) / ((1.0 + geom::norm(pair.v1)) * sep)
}

/// Pointwise bound on `|F(x, v)|` for a unit-mass reference with speeds at
/// most `ref_speed`.
fn analytic_bound(model: &ForceModel, ref_speed: f64, v: Vec3) -> f64 {
    match &model.kind {
        ForceKind::CuckerSmale { psi, h } => psi.sup() * h.sup_on(ref_speed + geom::norm(v)),
        ForceKind::AttractiveRepulsive { grad_phi } | ForceKind::FirstOrder { grad_phi, .. } => grad_phi.sup(),
    }
}

/// Evaluates the force field of `reference` through `table` at both ends
/// of every probe pair. The probe set is split in a first half and the full
/// set, so the stability check compares `n` against `2n` nested probes.
pub fn lipschitz_diagnostic(
    model: &ForceModel,
    reference: &ParticleState,
    table: &MollifiedTable,
    probes: &[ProbePair],
) -> Result<LipschitzReport> {
    if table.region != model.region {
        return Err(invalid("table region differs from the force model region"));
    }
    if probes.len() < 2 {
        return Err(invalid("need at least two probe pairs"));
    }
    let eval = ForceEval::new(model, Indicator::Tabulated(table));
    let mass: f64 = reference.weights.iter().sum();
    let ref_speed = reference.max_speed();
    let half = probes.len() / 2;
    let (mut lip_half, mut lip_full, mut growth, mut violations) = (0.0f64, 0.0f64, 0.0f64, 0);
    for (k, pair) in probes.iter().enumerate() {
        let f1 = eval.probe(reference, pair.x1, pair.v1);
        let f2 = eval.probe(reference, pair.x2, pair.v2);
        for (f, v) in [(f1, pair.v1), (f2, pair.v2)] {
            let m = geom::norm(f);
            growth = growth.max(m / (1.0 + geom::norm(v)));
            if m > mass * analytic_bound(model, ref_speed, v) * (1.0 + 1e-9) + 1e-12 {
                violations += 1;
            }
        }
        let r = ratio(f1, f2, pair);
        if k < half {
            lip_half = lip_half.max(r);
        }
        lip_full = lip_full.max(r);
    }
    let refinement_change = if lip_half > 0.0 {
        (lip_full - lip_half) / lip_half
    } else if lip_full > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let stable = lip_full.is_finite() && refinement_change <= REFINEMENT_TOL;
    let pass = stable && growth.is_finite() && violations == 0;
    Ok(LipschitzReport {
        probes: probes.len(),
        lip_half,
        lip_full,
        refinement_change,
        stable,
        growth_constant: growth,
        growth_violations: violations,
        pass,
    })
}
