//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Set `ACCEPTANCE_ONLY=3,7` to run a subset.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use swarmlab::dynamics::{Mode, ParticleState, SimConfig, Simulator, Trajectory};
use swarmlab::forces::ForceModel;
use swarmlab::geom::{self, Vec3};
use swarmlab::harness::{
    convergence_against, derive_seed, hypothesis_check, lemma_suite, lipschitz_diagnostic, mollifier_study,
    probe_pairs, reference_solution, sample_initial, InitialDensitySpec, Setup,
};
use swarmlab::regions::montecarlo::MonteCarlo;
use swarmlab::regions::{AngleProfile, MollifiedTable, MollifierParams, RegionFamily, SpeedRadius};
use swarmlab::transport::{w1_bruteforce, w1_distance, DiscreteMeasure};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_measure(rng: &mut ChaCha8Rng, atoms: usize, dim: usize, uniform: bool) -> DiscreteMeasure {
    let points: Vec<f64> = (0..atoms * dim).map(|_| StandardNormal.sample(rng)).collect();
    if uniform {
        return DiscreteMeasure::uniform(dim, points).unwrap();
    }
    let raw: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let rest: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - rest;
    DiscreteMeasure::new(dim, points, weights).unwrap()
}

fn c1_w1_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let (m, n) = (rng.random_range(1..=6), rng.random_range(1..=6));
        // a quarter of the instances are equal-size uniform (assignment path)
        let uniform = k % 4 == 0;
        let n = if uniform { m } else { n };
        let mu = random_measure(&mut rng, m, 4, uniform);
        let nu = random_measure(&mut rng, n, 4, uniform);
        let fast = w1_distance(&mu, &nu).unwrap();
        let exact = w1_bruteforce(&mu, &nu).unwrap();
        worst = worst.max((fast - exact).abs());
    }
    outcome(worst <= 1e-9, format!("200 instances, max |w1 - brute| = {worst:.3e}"))
}

fn c2_metric_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut sym, mut ident, mut tri): (f64, f64, f64) = (0.0, 0.0, f64::NEG_INFINITY);
    for k in 0..100 {
        let uniform = k % 2 == 0;
        let size = |rng: &mut ChaCha8Rng| rng.random_range(1..=50);
        let s = size(&mut rng);
        let sizes = if uniform { [s, s, s] } else { [size(&mut rng), size(&mut rng), size(&mut rng)] };
        let [a, b, c] = sizes.map(|n| random_measure(&mut rng, n, 4, uniform));
        let ab = w1_distance(&a, &b).unwrap();
        let ba = w1_distance(&b, &a).unwrap();
        let bc = w1_distance(&b, &c).unwrap();
        let ac = w1_distance(&a, &c).unwrap();
        sym = sym.max((ab - ba).abs());
        ident = ident.max(w1_distance(&a, &a).unwrap().abs());
        tri = tri.max(ac - ab - bc);
    }
    outcome(
        sym <= 1e-10 && ident <= 1e-10 && tri <= 1e-9,
        format!("100 triples, symmetry {sym:.2e}, identity {ident:.2e}, triangle excess {tri:.2e}"),
    )
}

fn c3_eps_boundary() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for dim in [2, 3] {
        let ball = RegionFamily::ball(dim, 1.0);
        for (k, eps) in [0.05, 0.1, 0.2].into_iter().enumerate() {
            let est = MonteCarlo::new(1_000_000, derive_seed(303, (10 * dim + k) as u64)).eps_boundary(&ball, geom::ZERO, eps).unwrap();
            let exact = geom::unit_ball_volume(dim) * ((1.0 + eps).powi(dim as i32) - (1.0 - eps).powi(dim as i32));
            let z = (est.estimate - exact) / est.std_err;
            ok &= z.abs() <= 3.0;
            detail.push(format!("d={dim} eps={eps}: z={z:+.2}"));
        }
    }
    outcome(ok, detail.join(", "))
}

fn cone() -> RegionFamily {
    RegionFamily::vision_cone(2, 1.0, AngleProfile { theta_star: PI / 3.0, k: 1.0 })
}

fn c4_hypotheses() -> Outcome {
    let v_samples: Vec<Vec3> = [0.25, 0.75, 1.5, 5.0]
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let a = 0.7 * k as f64;
            [s * a.cos(), s * a.sin(), 0.0]
        })
        .collect();
    let eps: Vec<f64> = vec![0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
    let rep = hypothesis_check(&cone(), &v_samples, &eps, 100_000, 404).unwrap();
    let slopes: Vec<String> = rep.volume_fits.iter().map(|f| format!("{:.3}", f.slope)).collect();
    outcome(
        rep.pass,
        format!(
            "min R2 {:.5}, slopes [{}], (iii) C={:.3} violations {}, (iv) C={:.3} violations {}",
            rep.min_r2,
            slopes.join(", "),
            rep.symmetric_difference.fitted,
            rep.symmetric_difference.violations,
            rep.theta_inclusion.fitted,
            rep.theta_inclusion.violations
        ),
    )
}

fn c5_lemmas() -> Outcome {
    let params = MollifierParams::new(0.05, 0.05);
    let families = [
        ("ball", RegionFamily::ball(2, 1.0)),
        ("speed_ball", RegionFamily::speed_ball(2, SpeedRadius::ClampedLinear { base: 0.5, slope: 0.5, min: 0.5, max: 2.0 })),
        ("cone2", cone()),
        ("cone3", RegionFamily::vision_cone(3, 1.0, AngleProfile::default())),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, (name, region)) in families.iter().enumerate() {
        let rep = lemma_suite(region, params, 100_000, derive_seed(505, k as u64)).unwrap();
        let bad: u64 = rep.checks.iter().map(|c| c.violations).sum();
        ok &= rep.pass;
        detail.push(format!("{name}: {} checks, {bad} violations", rep.checks.len()));
    }
    outcome(ok, detail.join(", "))
}

fn c6_dynamics() -> Outcome {
    let model = ForceModel::cucker_smale(RegionFamily::ball(2, 1.0));
    let initial = sample_initial(&InitialDensitySpec::default_study(), 200, 606).unwrap();
    let cfg = SimConfig::new(model, 1e-3, 1.0, Mode::default());
    let traj = Simulator::new(cfg, initial.max_speed()).unwrap().run(&initial).unwrap();
    let d = &traj.diagnostics;
    let worst_rise = d.windows(2).map(|w| w[1].max_speed - w[0].max_speed).fold(f64::NEG_INFINITY, f64::max);
    let p0 = d[0].momentum;
    let drift = d.iter().map(|x| geom::dist(x.momentum, p0)).fold(0.0, f64::max);
    let mass0: f64 = initial.weights.iter().sum();
    let mass_exact = traj
        .snapshots
        .iter()
        .all(|s| s.weights == initial.weights && s.weights.iter().sum::<f64>().to_bits() == mass0.to_bits());
    outcome(
        worst_rise <= 1e-12 && drift <= 1e-10 && mass_exact && d.len() == 1001,
        format!("{} steps, max speed rise {worst_rise:.2e}, momentum drift {drift:.2e}, mass exact {mass_exact}", d.len() - 1),
    )
}

/// Smallest `|signed distance|` over every ordered pair within reach, across
/// all recorded snapshots.
fn boundary_margin(region: &RegionFamily, traj: &Trajectory) -> f64 {
    let mut m = f64::INFINITY;
    for st in &traj.snapshots {
        for i in 0..st.len() {
            let sl = region.slice(st.velocities[i]);
            for j in 0..st.len() {
                if i != j {
                    m = m.min(sl.signed_distance(geom::sub(st.positions[i], st.positions[j])).abs());
                }
            }
        }
    }
    m
}

fn max_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    let mut g: f64 = 0.0;
    for (s, t) in a.snapshots.iter().zip(&b.snapshots) {
        for i in 0..s.len() {
            g = g.max(geom::dist(s.positions[i], t.positions[i])).max(geom::dist(s.velocities[i], t.velocities[i]));
        }
    }
    g
}

fn sharp_vs_mollified(region: RegionFamily, initial: &ParticleState, params: MollifierParams) -> (f64, f64, f64) {
    let model = ForceModel::cucker_smale(region);
    let s0 = initial.max_speed();
    let sharp = Simulator::new(SimConfig::new(model.clone(), 1e-3, 1.0, Mode::default()), s0).unwrap().run(initial).unwrap();
    // few particles: direct quadrature is cheaper than a fine table
    let moll_cfg = SimConfig::new(model, 1e-3, 1.0, Mode::Mollified { params, tabulate: false });
    let moll = Simulator::new(moll_cfg, s0).unwrap().run(initial).unwrap();
    let required = 2.0 * (params.eps + params.eta * region.velocity_lipschitz());
    (boundary_margin(&region, &sharp).min(boundary_margin(&region, &moll)), required, max_gap(&sharp, &moll))
}

fn c7_mollified_equals_sharp() -> Outcome {
    let params = MollifierParams::new(0.02, 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(707);

    // two tight clusters far apart, small relative velocities
    let (mut pos, mut vel) = (Vec::new(), Vec::new());
    for c in [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]] {
        for _ in 0..20 {
            pos.push(geom::add(c, geom::random_in_ball(&mut rng, 2, 0.2)));
            vel.push(geom::add([0.5, 0.2, 0.0], geom::random_in_ball(&mut rng, 2, 0.1)));
        }
    }
    let ball_state = ParticleState::uniform(2, pos, vel).unwrap();
    let (m_ball, r_ball, g_ball) = sharp_vs_mollified(RegionFamily::ball(2, 1.0), &ball_state, params);

    // fast pairs 0.3 apart along their heading, groups 10 apart
    let (mut pos, mut vel) = (Vec::new(), Vec::new());
    for g in 0..8 {
        let base = [0.0, 10.0 * g as f64, 0.0];
        let lead_v = [2.0, 0.1 * rng.random::<f64>(), 0.0];
        pos.push(base);
        vel.push(lead_v);
        pos.push(geom::add(base, [0.3, 0.0, 0.0]));
        vel.push(geom::add(lead_v, [0.05, -0.05, 0.0]));
    }
    let cone_state = ParticleState::uniform(2, pos, vel).unwrap();
    let (m_cone, r_cone, g_cone) = sharp_vs_mollified(cone(), &cone_state, params);

    let valid = m_ball >= r_ball && m_cone >= r_cone;
    outcome(
        valid && g_ball <= 1e-12 && g_cone <= 1e-12,
        format!(
            "ball: margin {m_ball:.3} >= {r_ball:.3}, gap {g_ball:.1e}; cone: margin {m_cone:.3} >= {r_cone:.3}, gap {g_cone:.1e}"
        ),
    )
}

fn grid(step: f64, t_end: f64) -> Vec<f64> {
    let n = (t_end / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

fn c8_mollifier_scaling() -> Outcome {
    let setup = Setup::default_study();
    let params = [MollifierParams::new(0.2, 0.2), MollifierParams::new(0.1, 0.1), MollifierParams::new(0.05, 0.05)];
    let rep = mollifier_study(&InitialDensitySpec::default_study(), &setup, 3200, &params, &grid(0.25, 1.0), 808).unwrap();
    let finals: Vec<String> = rep.rows.iter().map(|r| format!("{:.4e}", r.d1.last().unwrap())).collect();
    outcome(
        rep.pass,
        format!("d1(T) [{}], slope {:.4}, fitted C {:.4}", finals.join(", "), rep.slope, rep.c_fit),
    )
}

const STUDY_SEED: u64 = 909;

fn default_reference() -> (Setup, Vec<f64>, Trajectory) {
    let setup = Setup::default_study();
    let times = grid(0.1, 1.0);
    let reference =
        reference_solution(&InitialDensitySpec::default_study(), &setup, 6400, setup.reference, &times, STUDY_SEED).unwrap();
    (setup, times, reference)
}

fn c9_convergence(setup: &Setup, times: &[f64], reference: &Trajectory) -> Outcome {
    let spec = InitialDensitySpec::default_study();
    let rep = convergence_against(&spec, setup, &[100, 200, 400, 800, 1600], reference, times, STUDY_SEED).unwrap();
    let finals: Vec<String> = rep.d1_final.iter().map(|d| format!("{d:.4}")).collect();
    outcome(
        rep.pass,
        format!(
            "d1(T) [{}], C {:.4} on [0,T], {:.4} on [0,T/2], bound {}, monotone {}, observed rate {:.3}",
            finals.join(", "),
            rep.c_hat.unwrap_or(f64::NAN),
            rep.c_hat_half.unwrap_or(f64::NAN),
            rep.bound_holds,
            rep.monotone_in_n,
            rep.observed_rate.unwrap_or(f64::NAN)
        ),
    )
}

fn c10_lipschitz(setup: &Setup, reference: &Trajectory) -> Outcome {
    let snap = reference.last();
    let sep = 1e-3;
    let params = setup.reference;
    let table = MollifiedTable::new(setup.force.region, params, snap.max_speed() + params.eta + sep).unwrap();
    let probes = probe_pairs(snap, 2000, sep, 1010);
    let rep = lipschitz_diagnostic(&setup.force, snap, &table, &probes).unwrap();
    outcome(
        rep.pass,
        format!(
            "L(n=1000) {:.4}, L(n=2000) {:.4}, change {:.1}%, growth c {:.4}, growth violations {}",
            rep.lip_half,
            rep.lip_full,
            100.0 * rep.refinement_change,
            rep.growth_constant,
            rep.growth_violations
        ),
    )
}

fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().is_none_or(|o| o.contains(&k));
    let secs = Duration::from_secs;
    let report = |k: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(k) {
            return;
        }
        let t0 = Instant::now();
        let o = f();
        let el = t0.elapsed();
        let in_time = limit.is_none_or(|l| el < l);
        let verdict = if o.pass && in_time { "PASS" } else { "FAIL" };
        let limit = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
        println!("{verdict} {k:>2} {name}: {} [{:.1}s{limit}]", o.detail, el.as_secs_f64());
    };
    report(1, "w1 matches brute force", Some(secs(10)), &mut c1_w1_oracle);
    report(2, "w1 metric axioms", Some(secs(30)), &mut c2_metric_axioms);
    report(3, "eps-boundary measure of the ball", Some(secs(20)), &mut c3_eps_boundary);
    report(4, "vision cone hypotheses", Some(secs(120)), &mut c4_hypotheses);
    report(5, "set-inclusion lemmas", Some(secs(60)), &mut c5_lemmas);
    report(6, "dynamics invariants", Some(secs(10)), &mut c6_dynamics);
    report(7, "mollified equals sharp off the boundary", Some(secs(10)), &mut c7_mollified_equals_sharp);
    report(8, "mollifier stability scaling", None, &mut c8_mollifier_scaling);
    if wanted(9) || wanted(10) {
        let t0 = Instant::now();
        let (setup, times, reference) = default_reference();
        let ref_time = t0.elapsed();
        println!("     reference run (N=6400, mollified) took {:.1}s", ref_time.as_secs_f64());
        // the reference is part of the convergence study's budget
        report(9, "mean-field convergence", Some(secs(600).saturating_sub(ref_time)), &mut || {
            c9_convergence(&setup, &times, &reference)
        });
        report(10, "force Lipschitz diagnostic", None, &mut || c10_lipschitz(&setup, &reference));
    }
}
