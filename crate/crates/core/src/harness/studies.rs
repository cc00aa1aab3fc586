//! Convergence, stability and mollifier-width studies.

use serde::Serialize;

use super::{derive_seed, linear_fit, max_log_slope, rates_agree, record_stride, sample_initial, InitialDensitySpec};
use crate::dynamics::{Mode, ParticleState, SimConfig, Simulator, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::forces::{ForceKind, ForceModel, VelocityCoupling};
use crate::regions::{MollifiedTable, MollifierParams};
use crate::transport::w1_distance;

/// Everything a study needs besides the initial density.
#[derive(Clone, Debug, PartialEq)]
pub struct Setup {
    pub force: ForceModel,
    pub dt: f64,
    pub t_end: f64,
    /// Mode of the study (coarse) runs.
    pub mode: Mode,
    /// Mollifier of the reference runs.
    pub reference: MollifierParams,
    pub neighbor_grid: bool,
    pub workers: usize,
}

impl Setup {
    /// Two-dimensional vision cone (r = 1, θ* = π/3, k = 1), Cucker-Smale
    /// with ψ ≡ 1 and h = id, dt = 1e−3, T = 1, ε = η = 0.05.
    pub fn default_study() -> Self {
        let region = crate::regions::RegionFamily::vision_cone(2, 1.0, Default::default());
        Setup {
            force: ForceModel::cucker_smale(region),
            dt: 1e-3,
            t_end: 1.0,
            mode: Mode::default(),
            reference: MollifierParams::new(0.05, 0.05),
            neighbor_grid: true,
            workers: 1,
        }
    }

    pub fn sim_config(&self, mode: Mode, record_every: usize) -> SimConfig {
        let mut cfg = SimConfig::new(self.force.clone(), self.dt, self.t_end, mode);
        cfg.record_every = record_every;
        cfg.neighbor_grid = self.neighbor_grid;
        cfg.workers = self.workers;
        cfg.check_max_speed = self.monotone_speed();
        cfg
    }

    /// Whether the max-speed bound of the convex-combination argument applies.
    fn monotone_speed(&self) -> bool {
        matches!(self.force.kind, ForceKind::CuckerSmale { psi, h: VelocityCoupling::Identity } if self.dt * psi.sup() <= 1.0)
    }
}

fn with_zero(times: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = times.to_vec();
    if t.first() != Some(&0.0) {
        t.insert(0, 0.0);
    }
    t
}

fn snapshots<'a>(traj: &'a Trajectory, times: &[f64], dt: f64) -> Result<Vec<&'a ParticleState>> {
    times
        .iter()
        .map(|&t| traj.at_time(t, dt).ok_or_else(|| Error::Numerical(format!("no snapshot recorded at t = {t}"))))
        .collect()
}

fn run(setup: &Setup, mode: Mode, initial: &ParticleState, times: &[f64], table: Option<&MollifiedTable>) -> Result<Trajectory> {
    let stride = record_stride(times, setup.dt, setup.t_end)?;
    let cfg = setup.sim_config(mode, stride);
    match table {
        Some(t) => Simulator::with_table(cfg, t)?.run(initial),
        None => Simulator::new(cfg, initial.max_speed())?.run(initial),
    }
}

fn table_for(setup: &Setup, params: MollifierParams, s0: f64) -> Result<MollifiedTable> {
    let cfg = setup.sim_config(Mode::Mollified { params, tabulate: true }, 1);
    MollifiedTable::new(setup.force.region, params, cfg.speed_bound(s0) + params.eta)
}

/// Mollified `N_ref`-particle run sampled with `derive_seed(seed, n_ref)`.
pub fn reference_solution(
    spec: &InitialDensitySpec,
    setup: &Setup,
    n_ref: usize,
    params: MollifierParams,
    times: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    let initial = sample_initial(spec, n_ref, derive_seed(seed, n_ref as u64))?;
    let table = table_for(setup, params, spec.velocity_radius())?;
    run(setup, Mode::Mollified { params, tabulate: true }, &initial, &with_zero(times), Some(&table))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub t: f64,
    pub d1: f64,
    /// `d1(t)/d1(0)`; absent when every distance is zero.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub times: Vec<f64>,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    /// `max over N, t of log(d1(t)/d1(0))/t` on `[0, T]`.
    pub c_hat: Option<f64>,
    /// Same fit restricted to `[0, T/2]`.
    pub c_hat_half: Option<f64>,
    /// The two fits agree within 25 %.
    pub gronwall_consistent: bool,
    /// `d1(t) ≤ e^{Ĉt} d1(0)` at every row.
    pub bound_holds: bool,
    pub slack: f64,
    /// `d1(T)` for consecutive `N` never grows by more than `slack`.
    pub monotone_in_n: bool,
    pub d1_final: Vec<f64>,
    /// Log-log slope of `d1(0)` against `N` (observed sampling rate).
    pub observed_rate: Option<f64>,
    pub reference_max_speed: Vec<f64>,
    pub pass: bool,
}

/// Runs every `N` in `n_list` from an independent sample (seed
/// `derive_seed(seed, N)`) in the study mode and measures `d1` to the
/// mollified reference at each time.
pub fn convergence_study(
    spec: &InitialDensitySpec,
    setup: &Setup,
    n_list: &[usize],
    n_ref: usize,
    times: &[f64],
    seed: u64,
) -> Result<ConvergenceReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("N list must be non-empty and strictly ascending"));
    }
    let largest = *n_list.last().expect("non-empty");
    if n_ref < 4 * largest && n_ref != largest {
        return Err(invalid(format!("N_ref = {n_ref} must be at least 4x the largest study N = {largest}")));
    }
    let times = with_zero(times);
    let reference = reference_solution(spec, setup, n_ref, setup.reference, &times, seed)?;
    convergence_against(spec, setup, n_list, &reference, &times, seed)
}

/// Convergence study against a precomputed reference trajectory, which must
/// hold snapshots at every time in `times`.
pub fn convergence_against(
    spec: &InitialDensitySpec,
    setup: &Setup,
    n_list: &[usize],
    reference: &Trajectory,
    times: &[f64],
    seed: u64,
) -> Result<ConvergenceReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("N list must be non-empty and strictly ascending"));
    }
    let n_ref = reference.last().len();
    let times = with_zero(times);
    let slack = 1.15;
    let ref_snaps = snapshots(reference, &times, setup.dt)?;
    let ref_measures: Vec<_> = ref_snaps.iter().map(|s| s.to_measure()).collect();

    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &n in n_list {
        let initial = sample_initial(spec, n, derive_seed(seed, n as u64))?;
        let traj = run(setup, setup.mode, &initial, &times, None)?;
        let snaps = snapshots(&traj, &times, setup.dt)?;
        let d: Vec<f64> =
            snaps.iter().zip(&ref_measures).map(|(s, r)| w1_distance(&s.to_measure(), r)).collect::<Result<_>>()?;
        series.push(d);
    }
    let all_zero = series.iter().flatten().all(|&d| d == 0.0);
    if !all_zero {
        if let Some(k) = series.iter().position(|d| d[0] == 0.0) {
            return Err(Error::DegenerateMeasure(format!(
                "d1(0) = 0 for N = {}; choose another seed so the sample differs from the reference",
                n_list[k]
            )));
        }
    }
    for (&n, d) in n_list.iter().zip(&series) {
        for (&t, &x) in times.iter().zip(d) {
            rows.push(ConvergenceRow { n, t, d1: x, ratio: (!all_zero).then(|| x / d[0]) });
        }
    }
    let fit = |h: f64| {
        if all_zero {
            return None;
        }
        series.iter().filter_map(|d| max_log_slope(&times, d, h)).fold(None, |a: Option<f64>, s| Some(a.map_or(s, |a| a.max(s))))
    };
    let c_hat = fit(setup.t_end);
    let c_hat_half = fit(0.5 * setup.t_end);
    let gronwall_consistent = match (c_hat, c_hat_half) {
        (Some(a), Some(b)) => a.is_finite() && rates_agree(a, b, 0.25),
        _ => all_zero,
    };
    let bound_holds = match c_hat {
        Some(c) => series.iter().all(|d| times.iter().zip(d).all(|(&t, &x)| x <= (c * t).exp() * d[0] * (1.0 + 1e-12))),
        None => all_zero,
    };
    let d1_final: Vec<f64> = series.iter().map(|d| *d.last().expect("at least t = 0")).collect();
    let monotone_in_n = d1_final.windows(2).all(|w| w[1] <= slack * w[0]);
    let observed_rate = (n_list.len() >= 2 && !all_zero).then(|| {
        let x: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
        let y: Vec<f64> = series.iter().map(|d| d[0].ln()).collect();
        linear_fit(&x, &y).slope
    });
    let pass = monotone_in_n && bound_holds && gronwall_consistent && c_hat.is_none_or(f64::is_finite);
    Ok(ConvergenceReport {
        n_list: n_list.to_vec(),
        n_ref,
        times,
        seed,
        rows,
        c_hat,
        c_hat_half,
        gronwall_consistent,
        bound_holds,
        slack,
        monotone_in_n,
        d1_final,
        observed_rate,
        reference_max_speed: ref_snaps.iter().map(|s| s.max_speed()).collect(),
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub t: f64,
    pub d1: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    pub seed: u64,
    /// Both inputs are the same density with the same seed.
    pub identical: bool,
    pub rows: Vec<StabilityRow>,
    pub c_hat: Option<f64>,
    pub c_hat_half: Option<f64>,
    pub gronwall_consistent: bool,
    pub ratios_finite: bool,
    pub pass: bool,
}

/// Two mollified `n`-particle runs from `spec_a` and `spec_b`, sampled with
/// the same seed, compared in `d1` over time.
pub fn stability_study(
    spec_a: &InitialDensitySpec,
    spec_b: &InitialDensitySpec,
    setup: &Setup,
    n: usize,
    times: &[f64],
    seed: u64,
) -> Result<StabilityReport> {
    let times = with_zero(times);
    let sample_seed = derive_seed(seed, n as u64);
    if spec_a == spec_b {
        spec_a.validate()?;
        let rows = times.iter().map(|&t| StabilityRow { t, d1: 0.0, ratio: None }).collect();
        return Ok(StabilityReport {
            n,
            seed,
            identical: true,
            rows,
            c_hat: None,
            c_hat_half: None,
            gronwall_consistent: true,
            ratios_finite: true,
            pass: true,
        });
    }
    let params = setup.reference;
    let mode = Mode::Mollified { params, tabulate: true };
    let table = table_for(setup, params, spec_a.velocity_radius().max(spec_b.velocity_radius()))?;
    let a = run(setup, mode, &sample_initial(spec_a, n, sample_seed)?, &times, Some(&table))?;
    let b = run(setup, mode, &sample_initial(spec_b, n, sample_seed)?, &times, Some(&table))?;
    let (sa, sb) = (snapshots(&a, &times, setup.dt)?, snapshots(&b, &times, setup.dt)?);
    let d: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| w1_distance(&x.to_measure(), &y.to_measure())).collect::<Result<_>>()?;
    if d[0] == 0.0 {
        return Err(Error::DegenerateMeasure("the two initial samples coincide; d1(0) = 0".into()));
    }
    let rows: Vec<StabilityRow> =
        times.iter().zip(&d).map(|(&t, &x)| StabilityRow { t, d1: x, ratio: Some(x / d[0]) }).collect();
    let ratios_finite = rows.iter().all(|r| r.ratio.is_some_and(f64::is_finite));
    let c_hat = max_log_slope(&times, &d, setup.t_end);
    let c_hat_half = max_log_slope(&times, &d, 0.5 * setup.t_end);
    let gronwall_consistent = match (c_hat, c_hat_half) {
        (Some(a), Some(b)) => rates_agree(a, b, 0.25),
        _ => true,
    };
    Ok(StabilityReport {
        n,
        seed,
        identical: false,
        rows,
        c_hat,
        c_hat_half,
        gronwall_consistent,
        ratios_finite,
        pass: ratios_finite && gronwall_consistent && c_hat.is_none_or(f64::is_finite),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MollifierRow {
    pub eps: f64,
    pub eta: f64,
    /// `d1` to the finest run at each time.
    pub d1: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MollifierStudyReport {
    pub n: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub rows: Vec<MollifierRow>,
    /// `d1(T)` strictly decreases from the coarsest to the finest width.
    pub decreasing: bool,
    /// Least-squares slope of `d1(T)` against `ε + η`.
    pub slope: f64,
    /// Least-squares `C` in `d1(T) ≈ C (ε + η + ε_f + η_f)` over the
    /// non-finest widths.
    pub c_fit: f64,
    pub pass: bool,
}

/// Same `n`-particle sample run with each mollifier in `params` (coarse to
/// fine); every run is compared with the last one.
pub fn mollifier_study(
    spec: &InitialDensitySpec,
    setup: &Setup,
    n: usize,
    params: &[MollifierParams],
    times: &[f64],
    seed: u64,
) -> Result<MollifierStudyReport> {
    if params.len() < 2 {
        return Err(invalid("need at least two mollifier widths"));
    }
    let times = with_zero(times);
    let initial = sample_initial(spec, n, derive_seed(seed, n as u64))?;
    let mut measures = Vec::new();
    for &p in params {
        let table = table_for(setup, p, initial.max_speed())?;
        let traj = run(setup, Mode::Mollified { params: p, tabulate: true }, &initial, &times, Some(&table))?;
        measures.push(snapshots(&traj, &times, setup.dt)?.iter().map(|s| s.to_measure()).collect::<Vec<_>>());
    }
    let finest = measures.last().expect("non-empty");
    let mut rows = Vec::new();
    for (p, m) in params.iter().zip(&measures) {
        let d1 = m.iter().zip(finest).map(|(a, b)| w1_distance(a, b)).collect::<Result<Vec<_>>>()?;
        rows.push(MollifierRow { eps: p.eps, eta: p.eta, d1 });
    }
    let last = |r: &MollifierRow| *r.d1.last().expect("at least t = 0");
    let decreasing = rows.windows(2).all(|w| last(&w[1]) < last(&w[0]));
    let x: Vec<f64> = params.iter().map(|p| p.eps + p.eta).collect();
    let y: Vec<f64> = rows.iter().map(last).collect();
    let slope = linear_fit(&x, &y).slope;
    let pf = params.last().expect("non-empty");
    let xs: Vec<f64> = params[..params.len() - 1].iter().map(|p| p.eps + p.eta + pf.eps + pf.eta).collect();
    let c_fit = xs.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / xs.iter().map(|a| a * a).sum::<f64>();
    Ok(MollifierStudyReport {
        n,
        seed,
        times,
        rows,
        decreasing,
        slope,
        c_fit,
        pass: decreasing && slope > 0.0 && slope.is_finite() && c_fit.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::RegionFamily;

    fn small_setup() -> Setup {
        let mut s = Setup::default_study();
        s.force = ForceModel::cucker_smale(RegionFamily::ball(2, 1.0));
        s.dt = 0.01;
        s.t_end = 0.2;
        s.reference = MollifierParams::new(0.2, 0.2);
        s
    }

    #[test]
    fn reference_against_itself_is_zero() {
        let setup = small_setup();
        let spec = InitialDensitySpec::default_study();
        let times = [0.0, 0.1, 0.2];
        let mut same = setup.clone();
        same.mode = Mode::Mollified { params: setup.reference, tabulate: true };
        let rep = convergence_study(&spec, &same, &[60], 60, &times, 7).unwrap();
        assert!(rep.rows.iter().all(|r| r.d1 == 0.0 && r.ratio.is_none()));
        assert!(rep.pass);
    }

    #[test]
    fn ratio_is_one_at_time_zero() {
        let setup = small_setup();
        let spec = InitialDensitySpec::default_study();
        let rep = convergence_study(&spec, &setup, &[20, 40], 160, &[0.1, 0.2], 8).unwrap();
        assert_eq!(rep.times, vec![0.0, 0.1, 0.2]);
        for r in rep.rows.iter().filter(|r| r.t == 0.0) {
            assert_eq!(r.ratio, Some(1.0));
        }
        assert!(rep.rows.iter().all(|r| r.d1 > 0.0));
        assert!(rep.bound_holds);
        assert!(convergence_study(&spec, &setup, &[20, 40], 100, &[0.1], 8).is_err());
        assert!(convergence_study(&spec, &setup, &[40, 20], 160, &[0.1], 8).is_err());
    }

    #[test]
    fn reference_keeps_speed_bound() {
        let setup = small_setup();
        let spec = InitialDensitySpec::default_study();
        let traj = reference_solution(&spec, &setup, 80, setup.reference, &[0.2], 1).unwrap();
        let r0 = spec.velocity_radius();
        assert!(traj.diagnostics.iter().all(|d| d.max_speed <= r0));
    }

    #[test]
    fn stability_identical_and_translated() {
        let setup = small_setup();
        let spec = InitialDensitySpec::default_study();
        let rep = stability_study(&spec, &spec, &setup, 30, &[0.1], 2).unwrap();
        assert!(rep.identical && rep.c_hat.is_none());
        let c = [0.3, -0.4];
        let moved = spec.translated(&c);
        let rep = stability_study(&spec, &moved, &setup, 30, &[0.1, 0.2], 2).unwrap();
        assert!(rep.rows[0].d1 <= 0.5 + 1e-12);
        assert!(rep.ratios_finite);
    }

    #[test]
    fn mollifier_study_runs() {
        let setup = small_setup();
        let spec = InitialDensitySpec::default_study();
        let params = [MollifierParams::new(0.4, 0.4), MollifierParams::new(0.2, 0.2)];
        let rep = mollifier_study(&spec, &setup, 40, &params, &[0.2], 3).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert!(rep.rows[1].d1.iter().all(|&d| d == 0.0));
    }
}
