use proptest::prelude::*;

use swarmlab::dynamics::{Mode, ParticleState, SimConfig, Simulator};
use swarmlab::forces::ForceModel;
use swarmlab::geom::{self, Vec3};
use swarmlab::harness::{sample_initial, InitialDensitySpec};
use swarmlab::io;
use swarmlab::regions::{AngleProfile, Mollifier, MollifierParams, RegionFamily, SpeedRadius};
use swarmlab::transport::{dual_check, push_forward, w1, w1_bruteforce, w1_distance, DiscreteMeasure, TestFunction};

fn measure(max_atoms: usize, dim: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_atoms).prop_flat_map(move |n| {
        (prop::collection::vec(-5.0..5.0f64, n * dim), prop::collection::vec(0.05..1.0f64, n)).prop_map(move |(p, w)| {
            let total: f64 = w.iter().sum();
            let mut w: Vec<f64> = w.iter().map(|x| x / total).collect();
            let rest: f64 = w[1..].iter().sum();
            w[0] = 1.0 - rest;
            DiscreteMeasure::new(dim, p, w).unwrap()
        })
    })
}

fn region() -> impl Strategy<Value = RegionFamily> {
    prop_oneof![
        (0.5..2.0f64).prop_map(|r| RegionFamily::ball(2, r)),
        (0.5..2.0f64).prop_map(|r| RegionFamily::ball(3, r)),
        (0.5..1.5f64, 0.0..1.0f64)
            .prop_map(|(b, s)| RegionFamily::speed_ball(2, SpeedRadius::ClampedLinear { base: b, slope: s, min: 0.5, max: 2.0 })),
        (0.3..2.5f64, 0.5..2.0f64, prop::sample::select(vec![2usize, 3]))
            .prop_map(|(t, k, d)| RegionFamily::vision_cone(d, 1.0, AngleProfile { theta_star: t, k })),
    ]
}

fn vec3(dim: usize, r: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-r..r).prop_map(move |mut v| {
        if dim == 2 {
            v[2] = 0.0;
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w1_matches_exhaustive(mu in measure(5, 4), nu in measure(5, 4)) {
        let d = w1_distance(&mu, &nu).unwrap();
        prop_assert!((d - w1_bruteforce(&mu, &nu).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn w1_plan_is_feasible_and_priced(mu in measure(30, 4), nu in measure(30, 4)) {
        let (d, plan) = w1(&mu, &nu).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!(plan.marginal_error(&mu, &nu) <= 1e-12);
        prop_assert!((plan.cost(&mu, &nu) - d).abs() <= 1e-12 * (1.0 + d));
    }

    #[test]
    fn w1_is_a_metric(a in measure(20, 2), b in measure(20, 2), c in measure(20, 2)) {
        let ab = w1_distance(&a, &b).unwrap();
        prop_assert!((ab - w1_distance(&b, &a).unwrap()).abs() <= 1e-10);
        prop_assert!(w1_distance(&a, &a).unwrap().abs() <= 1e-10);
        prop_assert!(w1_distance(&a, &c).unwrap() <= ab + w1_distance(&b, &c).unwrap() + 1e-9);
    }

    #[test]
    fn w1_bounds_lipschitz_duals(a in measure(15, 2), b in measure(15, 2), p in prop::collection::vec(-3.0..3.0f64, 2)) {
        let d = w1_distance(&a, &b).unwrap();
        for f in [TestFunction::Coordinate(0), TestFunction::Coordinate(1), TestFunction::DistanceTo(p.clone())] {
            prop_assert!(dual_check(&a, &b, &f) <= d + 1e-10);
        }
    }

    #[test]
    fn translation_costs_at_most_its_length(a in measure(15, 2), c in prop::array::uniform2(-2.0..2.0f64)) {
        let moved = push_forward(&a, |z| vec![z[0] + c[0], z[1] + c[1]]);
        let d = w1_distance(&a, &moved).unwrap();
        prop_assert!(d <= (c[0] * c[0] + c[1] * c[1]).sqrt() + 1e-10);
    }

    #[test]
    fn measure_csv_round_trips(a in measure(10, 4)) {
        let mut buf = Vec::new();
        io::write_measure(&mut buf, &a).unwrap();
        prop_assert_eq!(io::read_measure(&buf[..]).unwrap(), a);
    }

    #[test]
    fn enlargement_nesting(r in region(), v in vec3(3, 3.0), x in vec3(3, 3.0), eps in 0.001..0.5f64) {
        let (v, x) = if r.dim == 2 { ([v[0], v[1], 0.0], [x[0], x[1], 0.0]) } else { (v, x) };
        let sl = r.slice(v);
        prop_assert!(!sl.reduced_contains(x, eps) || sl.contains(x));
        prop_assert!(!sl.contains(x) || sl.enlarged_contains(x, eps));
        prop_assert!(!sl.eps_boundary_contains(x, eps / 2.0) || sl.eps_boundary_contains(x, eps));
    }

    #[test]
    fn signed_distance_is_one_lipschitz(r in region(), v in vec3(3, 3.0), x in vec3(3, 3.0), y in vec3(3, 3.0)) {
        let (v, x, y) = if r.dim == 2 {
            ([v[0], v[1], 0.0], [x[0], x[1], 0.0], [y[0], y[1], 0.0])
        } else {
            (v, x, y)
        };
        let sl = r.slice(v);
        prop_assert!((sl.signed_distance(x) - sl.signed_distance(y)).abs() <= geom::dist(x, y) + 1e-9);
    }

    #[test]
    fn mollified_indicator_in_unit_interval(v in vec3(2, 2.5), x in vec3(2, 1.5)) {
        let cone = RegionFamily::vision_cone(2, 1.0, AngleProfile::default());
        let m = Mollifier::new(2, MollifierParams::new(0.1, 0.1)).unwrap();
        let val = m.indicator(&cone, v, x);
        prop_assert!((0.0..=1.0).contains(&val));
        let reach = 0.1 + 0.1 * cone.velocity_lipschitz();
        prop_assert!(val == 0.0 || cone.slice(v).enlarged_contains(x, reach));
    }

    #[test]
    fn sampled_velocities_respect_cutoff(n in 1usize..200, seed in any::<u64>(), cut in 0.5..3.0f64) {
        let spec = InitialDensitySpec::UniformBoxGaussianV {
            box_lo: vec![-1.0, -1.0],
            box_hi: vec![1.0, 1.0],
            velocity_mean: Some(vec![0.5, 0.0]),
            velocity_std: 1.0,
            velocity_cutoff: cut,
        };
        let st = sample_initial(&spec, n, seed).unwrap();
        prop_assert_eq!(st.len(), n);
        prop_assert!(st.max_speed() <= cut);
        prop_assert!(st.weights.iter().all(|&w| w == 1.0 / n as f64));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn alignment_conserves_momentum_and_contracts_speed(
        pos in prop::collection::vec(prop::array::uniform2(-1.5..1.5f64), 2..30),
        seed in any::<u64>(),
    ) {
        let n = pos.len();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let vel: Vec<Vec3> = (0..n).map(|_| geom::random_in_ball(&mut rng, 2, 2.0)).collect();
        let pos: Vec<Vec3> = pos.iter().map(|p| [p[0], p[1], 0.0]).collect();
        let st = ParticleState::uniform(2, pos, vel).unwrap();
        let model = ForceModel::cucker_smale(RegionFamily::ball(2, 1.0));
        let traj = Simulator::new(SimConfig::new(model, 0.01, 0.5, Mode::default()), st.max_speed()).unwrap().run(&st).unwrap();
        let p0 = traj.diagnostics[0].momentum;
        for w in traj.diagnostics.windows(2) {
            prop_assert!(w[1].max_speed <= w[0].max_speed + 1e-12);
            prop_assert!(geom::dist(w[1].momentum, p0) <= 1e-12);
        }
        prop_assert_eq!(&traj.last().weights, &st.weights);
    }
}
