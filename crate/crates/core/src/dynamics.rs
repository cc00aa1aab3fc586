//! Explicit Euler integration of the particle system.
//!
//! One step is a Jacobi update: every force is evaluated on the pre-step
//! snapshot, then `X ← X + dt V`, `V ← V + dt A`. First-order models move
//! positions with the computed velocity field and store it in `V`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forces::{Candidates, ForceEval, ForceKind, ForceModel, Indicator, NeighborGrid, SelectionRule, VelocityCoupling};
use crate::geom::{self, Vec3};
use crate::regions::{MollifiedTable, Mollifier, MollifierParams, DEFAULT_TOL_B};
use crate::transport::DiscreteMeasure;

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    pub dim: usize,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl ParticleState {
    pub fn new(dim: usize, positions: Vec<Vec3>, velocities: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        let st = ParticleState { dim, positions, velocities, weights };
        st.validate()?;
        Ok(st)
    }

    /// Equal weights `1/N`.
    pub fn uniform(dim: usize, positions: Vec<Vec3>, velocities: Vec<Vec3>) -> Result<Self> {
        let n = positions.len();
        Self::new(dim, positions, velocities, vec![1.0 / n as f64; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        let n = self.positions.len();
        if n == 0 {
            return Err(invalid("state needs at least one particle"));
        }
        if self.velocities.len() != n || self.weights.len() != n {
            return Err(invalid("positions, velocities and weights differ in length"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(invalid("weights must be positive and finite"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, expected 1")));
        }
        if self.dim == 2 && self.positions.iter().chain(&self.velocities).any(|p| p[2] != 0.0) {
            return Err(invalid("two-dimensional state has a nonzero third component"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().map(|v| geom::norm(*v)).fold(0.0, f64::max)
    }

    /// `Σ m_i V_i`
    pub fn momentum(&self) -> Vec3 {
        self.velocities.iter().zip(&self.weights).fold(geom::ZERO, |acc, (v, &m)| geom::axpy(acc, m, *v))
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.velocities.iter().zip(&self.weights).map(|(v, m)| 0.5 * m * geom::norm2(*v)).sum()
    }

    /// Empirical measure in phase space, coordinates `(x, v)`.
    pub fn to_measure(&self) -> DiscreteMeasure {
        let d = self.dim;
        let mut pts = Vec::with_capacity(self.len() * 2 * d);
        for (x, v) in self.positions.iter().zip(&self.velocities) {
            pts.extend_from_slice(&x[..d]);
            pts.extend_from_slice(&v[..d]);
        }
        DiscreteMeasure::new(2 * d, pts, self.weights.clone()).expect("a valid state is a valid measure")
    }

    /// Inverse of [`to_measure`](Self::to_measure).
    pub fn from_measure(mu: &DiscreteMeasure) -> Result<Self> {
        if mu.dim != 4 && mu.dim != 6 {
            return Err(invalid(format!("phase space dimension must be 4 or 6, got {}", mu.dim)));
        }
        let d = mu.dim / 2;
        let (pos, vel) = (0..mu.len()).map(|k| {
            let z = mu.point(k);
            (geom::from_slice(&z[..d]), geom::from_slice(&z[d..]))
        }).unzip();
        Self::new(d, pos, vel, mu.weights.clone())
    }
}

/// How indicator values are produced during a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    Sharp {
        #[serde(default)]
        selection: SelectionRule,
        #[serde(default = "default_tol_b")]
        tol_b: f64,
    },
    Mollified {
        params: MollifierParams,
        /// Use the interpolated cache instead of direct quadrature.
        #[serde(default = "default_true")]
        tabulate: bool,
    },
}

fn default_tol_b() -> f64 {
    DEFAULT_TOL_B
}

fn default_true() -> bool {
    true
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Sharp { selection: SelectionRule::Midpoint, tol_b: DEFAULT_TOL_B }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub force: ForceModel,
    pub dt: f64,
    pub t_end: f64,
    pub mode: Mode,
    pub record_every: usize,
    pub seed: u64,
    /// Use the cell grid for pair candidates (identical sums, faster for sparse states).
    pub neighbor_grid: bool,
    pub workers: usize,
    /// Fail the run if the maximal speed increases in a step.
    pub check_max_speed: bool,
}

impl SimConfig {
    pub fn new(force: ForceModel, dt: f64, t_end: f64, mode: Mode) -> Self {
        SimConfig { force, dt, t_end, mode, record_every: 1, seed: 0, neighbor_grid: false, workers: 1, check_max_speed: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt >= 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be non-negative, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be at least 1"));
        }
        match self.mode {
            Mode::Sharp { tol_b, .. } if !(tol_b > 0.0) => return Err(invalid("tol_b must be positive")),
            Mode::Mollified { params, .. } => params.validate()?,
            _ => {}
        }
        if self.check_max_speed {
            match self.force.kind {
                ForceKind::CuckerSmale { psi, h: VelocityCoupling::Identity } if self.dt * psi.sup() <= 1.0 => {}
                _ => return Err(invalid("max-speed check needs Cucker-Smale with h = id and dt * sup psi <= 1")),
            }
        }
        Ok(())
    }

    /// Number of Euler steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        if self.dt == 0.0 {
            0
        } else {
            (self.t_end / self.dt).round() as usize
        }
    }

    /// Speed bound used to size the mollifier table for a run starting at
    /// maximal speed `s0`.
    pub fn speed_bound(&self, s0: f64) -> f64 {
        let growth = match &self.force.kind {
            ForceKind::CuckerSmale { psi, h } => match h {
                VelocityCoupling::Identity if self.dt * psi.sup() <= 1.0 => 0.0,
                _ => psi.sup() * h.sup_on(2.0 * s0 + 1.0),
            },
            ForceKind::AttractiveRepulsive { grad_phi } => grad_phi.sup(),
            ForceKind::FirstOrder { w_field, .. } => return w_field.min_norm(),
        };
        s0 + growth * self.t_end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub max_speed: f64,
    pub momentum: Vec3,
    pub kinetic_energy: f64,
}

impl Diagnostics {
    fn of(t: f64, st: &ParticleState) -> Self {
        Diagnostics { t, max_speed: st.max_speed(), momentum: st.momentum(), kinetic_energy: st.kinetic_energy() }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<ParticleState>,
    /// One entry per step, including `t = 0`.
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    /// Snapshot recorded at time `t` (within half a step), if any.
    pub fn at_time(&self, t: f64, dt: f64) -> Option<&ParticleState> {
        self.times.iter().position(|&s| (s - t).abs() <= 0.5 * dt.max(1e-15)).map(|k| &self.snapshots[k])
    }

    pub fn last(&self) -> &ParticleState {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }
}

/// Maximal speed per step.
pub fn velocity_support_radius(traj: &Trajectory) -> Vec<f64> {
    traj.diagnostics.iter().map(|d| d.max_speed).collect()
}

pub fn max_speed(st: &ParticleState) -> f64 {
    st.max_speed()
}

pub fn momentum(st: &ParticleState) -> Vec3 {
    st.momentum()
}

pub fn to_measure(st: &ParticleState) -> DiscreteMeasure {
    st.to_measure()
}

/// Owned indicator backend for a run.
pub enum Backend {
    Sharp { selection: SelectionRule, tol_b: f64 },
    Direct(Mollifier),
    Table(MollifiedTable),
}

/// Integrator bound to one configuration.
pub struct Simulator<'t> {
    pub config: SimConfig,
    backend: Backend,
    shared_table: Option<&'t MollifiedTable>,
}

impl<'t> Simulator<'t> {
    /// Builds the indicator backend; the table (if any) covers speeds up to
    /// `config.speed_bound(s0)`.
    pub fn new(config: SimConfig, s0: f64) -> Result<Self> {
        config.validate()?;
        let dim = config.force.region.dim;
        let backend = match config.mode {
            Mode::Sharp { selection, tol_b } => Backend::Sharp { selection, tol_b },
            Mode::Mollified { params, tabulate: false } => Backend::Direct(Mollifier::new(dim, params)?),
            Mode::Mollified { params, tabulate: true } => {
                let s_max = config.speed_bound(s0) + params.eta;
                Backend::Table(MollifiedTable::new(config.force.region, params, s_max)?)
            }
        };
        Ok(Simulator { config, backend, shared_table: None })
    }

    /// Reuses an existing table; its region and parameters must match the mode.
    pub fn with_table(config: SimConfig, table: &'t MollifiedTable) -> Result<Self> {
        config.validate()?;
        match config.mode {
            Mode::Mollified { params, tabulate: true } if params == table.mollifier.params && config.force.region == table.region => {}
            _ => return Err(invalid("table does not match the configured mollified mode")),
        }
        let dim = config.force.region.dim;
        let params = table.mollifier.params;
        Ok(Simulator { config, backend: Backend::Direct(Mollifier::new(dim, params)?), shared_table: Some(table) })
    }

    fn indicator(&self, step: u64) -> Indicator<'_> {
        if let Some(t) = self.shared_table {
            return Indicator::Tabulated(t);
        }
        match &self.backend {
            Backend::Sharp { selection, tol_b } => Indicator::Sharp { selection: *selection, tol_b: *tol_b, step },
            Backend::Direct(m) => Indicator::Mollified(m),
            Backend::Table(t) => Indicator::Tabulated(t),
        }
    }

    /// Forces (or first-order velocities) of every particle on `st`.
    pub fn forces(&self, st: &ParticleState, step: u64) -> Vec<Vec3> {
        let eval = ForceEval::new(&self.config.force, self.indicator(step));
        let grid = self.config.neighbor_grid.then(|| NeighborGrid::build(&st.positions, st.dim, eval.reach()));
        let n = st.len();
        let reach = eval.reach();
        // Particles are visited by increasing speed so consecutive lookups
        // hit the same slab of a mollifier table. Each force is its own sum,
        // so the visiting order does not change any value.
        let mut order: Vec<usize> = (0..n).collect();
        if matches!(eval.indicator, Indicator::Tabulated(_)) {
            order.sort_by(|&a, &b| geom::norm2(st.velocities[a]).total_cmp(&geom::norm2(st.velocities[b])));
        }
        let run = |part: &[usize]| {
            let mut buf = Vec::new();
            part.iter()
                .map(|&i| match &grid {
                    Some(g) => {
                        g.candidates_within(i, &st.positions, reach, &mut buf);
                        eval.particle(st, i, Candidates::List(&buf))
                    }
                    None => eval.particle(st, i, Candidates::All),
                })
                .collect::<Vec<_>>()
        };
        let workers = self.config.workers.clamp(1, n.max(1));
        let computed: Vec<Vec3> = if workers == 1 {
            run(&order)
        } else {
            let chunk = n.div_ceil(workers);
            std::thread::scope(|s| {
                let handles: Vec<_> = order.chunks(chunk).map(|part| {
                    let run = &run;
                    s.spawn(move || run(part))
                }).collect();
                handles.into_iter().flat_map(|h| h.join().expect("force worker panicked")).collect()
            })
        };
        let mut out = vec![geom::ZERO; n];
        for (&i, f) in order.iter().zip(computed) {
            out[i] = f;
        }
        out
    }

    /// One Euler step from `st` at step index `step`.
    pub fn step(&self, st: &ParticleState, step: u64) -> Result<ParticleState> {
        let dt = self.config.dt;
        if dt == 0.0 {
            return Ok(st.clone());
        }
        let f = self.forces(st, step);
        let first_order = self.config.force.is_first_order();
        let mut next = st.clone();
        let t = (step + 1) as f64 * dt;
        for i in 0..st.len() {
            if first_order {
                next.positions[i] = geom::axpy(st.positions[i], dt, f[i]);
                next.velocities[i] = f[i];
            } else {
                next.positions[i] = geom::axpy(st.positions[i], dt, st.velocities[i]);
                next.velocities[i] = geom::axpy(st.velocities[i], dt, f[i]);
            }
            if next.positions[i].iter().chain(&next.velocities[i]).any(|c| !c.is_finite()) {
                return Err(Error::NonFinite { time: t, particle: i });
            }
        }
        Ok(next)
    }

    pub fn run(&self, initial: &ParticleState) -> Result<Trajectory> {
        initial.validate()?;
        if initial.dim != self.config.force.region.dim {
            return Err(Error::DimensionMismatch { expected: self.config.force.region.dim, got: initial.dim });
        }
        let cfg = &self.config;
        let steps = cfg.steps();
        let mut st = initial.clone();
        let mut traj = Trajectory { times: vec![0.0], snapshots: vec![st.clone()], diagnostics: vec![Diagnostics::of(0.0, &st)] };
        for k in 0..steps {
            let next = self.step(&st, k as u64)?;
            let t = (k + 1) as f64 * cfg.dt;
            let diag = Diagnostics::of(t, &next);
            if cfg.check_max_speed {
                let prev = traj.diagnostics.last().expect("initial diagnostics").max_speed;
                if diag.max_speed > prev + 1e-12 {
                    return Err(Error::Numerical(format!(
                        "max speed increased from {prev} to {} at t = {t}",
                        diag.max_speed
                    )));
                }
            }
            traj.diagnostics.push(diag);
            if (k + 1) % cfg.record_every == 0 {
                traj.times.push(t);
                traj.snapshots.push(next.clone());
            }
            st = next;
        }
        Ok(traj)
    }
}

/// One Euler step with a freshly built backend.
pub fn step(state: &ParticleState, config: &SimConfig) -> Result<ParticleState> {
    Simulator::new(config.clone(), state.max_speed())?.step(state, 0)
}

pub fn simulate(initial: &ParticleState, config: &SimConfig) -> Result<Trajectory> {
    Simulator::new(config.clone(), initial.max_speed())?.run(initial)
}
