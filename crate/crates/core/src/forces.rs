//! Interaction laws and per-particle force evaluation.
//!
//! All three model classes share one pair loop: for particle `i` and every
//! `j ≠ i` in ascending order, the displacement `x = X_i − X_j` is weighted
//! by an indicator coefficient `α_ij ∈ [0, 1]` and by the model's pair term.
//! The coefficient comes from slope selection (sharp mode), the mollified
//! indicator, or its tabulated cache.

use serde::{Deserialize, Serialize};

use crate::dynamics::ParticleState;
use crate::error::{invalid, Result};
use crate::geom::{self, Vec3};
use crate::regions::mollifier::Bounds;
use crate::regions::{Mollifier, MollifiedTable, MollifierParams, RegionFamily, SlopeSet, DEFAULT_TOL_B};

/// Communication weight `ψ(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    Constant { value: f64 },
    /// `(1 + |x|²)^(−γ)`
    Rational { gamma: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, x: Vec3) -> f64 {
        match *self {
            Kernel::Constant { value } => value,
            Kernel::Rational { gamma } => (1.0 + geom::norm2(x)).powf(-gamma),
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Kernel::Constant { value } => value.abs(),
            Kernel::Rational { .. } => 1.0,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Kernel::Constant { .. } => 0.0,
            Kernel::Rational { gamma } => {
                let r = 1.0 / (2.0 * gamma + 1.0).sqrt();
                2.0 * gamma * r * (1.0 + r * r).powf(-gamma - 1.0)
            }
        }
    }

    pub fn is_even(&self) -> bool {
        true
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Constant { value } if !value.is_finite() => Err(invalid("psi value must be finite")),
            Kernel::Rational { gamma } if !(gamma >= 0.0 && gamma.is_finite()) => {
                Err(invalid(format!("psi gamma must be non-negative, got {gamma}")))
            }
            _ => Ok(()),
        }
    }
}

/// Velocity coupling `h(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityCoupling {
    Identity,
    /// `u · min(1, max/|u|)`
    Clipped { max: f64 },
}

impl VelocityCoupling {
    #[inline]
    pub fn eval(&self, u: Vec3) -> Vec3 {
        match *self {
            VelocityCoupling::Identity => u,
            VelocityCoupling::Clipped { max } => {
                let n = geom::norm(u);
                if n > max {
                    geom::scale(u, max / n)
                } else {
                    u
                }
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    /// Bound on `|h(u)|` for `|u| ≤ reach`.
    pub fn sup_on(&self, reach: f64) -> f64 {
        match *self {
            VelocityCoupling::Identity => reach,
            VelocityCoupling::Clipped { max } => max.min(reach),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            VelocityCoupling::Clipped { max } if !(max > 0.0 && max.is_finite()) => {
                Err(invalid(format!("clipped coupling needs max > 0, got {max}")))
            }
            _ => Ok(()),
        }
    }
}

/// Pair term of the potential models, entered as-is in the sum
/// `Σ m_j ∇φ(X_i − X_j) 1_K(X_i − X_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorKernel {
    /// `2x [ (C_r/l_r²) e^{−|x|²/l_r²} − (C_a/l_a²) e^{−|x|²/l_a²} ]`:
    /// repulsive (along `X_i − X_j`) at short range, attractive further out.
    GaussianMorse { c_r: f64, l_r: f64, c_a: f64, l_a: f64 },
}

impl VectorKernel {
    #[inline]
    pub fn eval(&self, x: Vec3) -> Vec3 {
        let VectorKernel::GaussianMorse { c_r, l_r, c_a, l_a } = *self;
        let s = geom::norm2(x);
        let rep = c_r / (l_r * l_r) * (-s / (l_r * l_r)).exp();
        let att = c_a / (l_a * l_a) * (-s / (l_a * l_a)).exp();
        geom::scale(x, 2.0 * (rep - att))
    }

    pub fn sup(&self) -> f64 {
        let VectorKernel::GaussianMorse { c_r, l_r, c_a, l_a } = *self;
        std::f64::consts::SQRT_2 * (-0.5f64).exp() * (c_r.abs() / l_r + c_a.abs() / l_a)
    }

    pub fn lipschitz(&self) -> f64 {
        let VectorKernel::GaussianMorse { c_r, l_r, c_a, l_a } = *self;
        2.0 * (c_r.abs() / (l_r * l_r) + c_a.abs() / (l_a * l_a))
    }

    fn validate(&self) -> Result<()> {
        let VectorKernel::GaussianMorse { c_r, l_r, c_a, l_a } = *self;
        if !(l_r > 0.0 && l_a > 0.0 && c_r.is_finite() && c_a.is_finite()) {
            return Err(invalid("Morse kernel needs positive length scales and finite amplitudes"));
        }
        Ok(())
    }
}

/// Orientation field `w(x)` of the first-order model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrientationField {
    Constant { w: Vec<f64> },
    /// `speed · (cos ω|x|, sin ω|x|, 0)`
    Rotational { speed: f64, omega: f64 },
}

impl OrientationField {
    #[inline]
    pub fn eval(&self, x: Vec3) -> Vec3 {
        match self {
            OrientationField::Constant { w } => geom::from_slice(w),
            OrientationField::Rotational { speed, omega } => {
                let a = omega * geom::norm(x);
                [speed * a.cos(), speed * a.sin(), 0.0]
            }
        }
    }

    /// Lower bound `w0` on `|w|`.
    pub fn min_norm(&self) -> f64 {
        match self {
            OrientationField::Constant { w } => w.iter().map(|c| c * c).sum::<f64>().sqrt(),
            OrientationField::Rotational { speed, .. } => speed.abs(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            OrientationField::Constant { .. } => 0.0,
            OrientationField::Rotational { speed, omega } => (speed * omega).abs(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let OrientationField::Constant { w } = self {
            if w.len() != dim {
                return Err(invalid(format!("orientation has {} components, dimension is {dim}", w.len())));
            }
        }
        if !(self.min_norm() > 0.0 && self.min_norm().is_finite()) {
            return Err(invalid("orientation field must satisfy |w| >= w0 > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceKind {
    CuckerSmale { psi: Kernel, h: VelocityCoupling },
    AttractiveRepulsive { grad_phi: VectorKernel },
    FirstOrder { grad_phi: VectorKernel, w_field: OrientationField },
}

impl Default for ForceKind {
    fn default() -> Self {
        ForceKind::CuckerSmale { psi: Kernel::Constant { value: 1.0 }, h: VelocityCoupling::Identity }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForceModel {
    pub kind: ForceKind,
    pub region: RegionFamily,
}

impl ForceModel {
    pub fn new(kind: ForceKind, region: RegionFamily) -> Result<Self> {
        region.validate()?;
        match &kind {
            ForceKind::CuckerSmale { psi, h } => {
                psi.validate()?;
                h.validate()?;
            }
            ForceKind::AttractiveRepulsive { grad_phi } => grad_phi.validate()?,
            ForceKind::FirstOrder { grad_phi, w_field } => {
                grad_phi.validate()?;
                w_field.validate(region.dim)?;
            }
        }
        Ok(ForceModel { kind, region })
    }

    pub fn cucker_smale(region: RegionFamily) -> Self {
        Self::new(ForceKind::default(), region).expect("valid default model")
    }

    pub fn is_first_order(&self) -> bool {
        matches!(self.kind, ForceKind::FirstOrder { .. })
    }

    /// Sup-norm of `ψ` for Cucker-Smale models, of `∇φ` otherwise.
    pub fn amplitude(&self) -> f64 {
        match &self.kind {
            ForceKind::CuckerSmale { psi, .. } => psi.sup(),
            ForceKind::AttractiveRepulsive { grad_phi } | ForceKind::FirstOrder { grad_phi, .. } => grad_phi.sup(),
        }
    }
}

/// Choice of `α ∈ [0, 1]` where the admissible slope set is `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionRule {
    #[default]
    Midpoint,
    Lower,
    Upper,
    /// Uniform draw determined by `(seed, step, i, j)`.
    SeededRandom { seed: u64 },
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SelectionRule {
    #[inline]
    pub fn alpha(&self, step: u64, i: usize, j: usize) -> f64 {
        match *self {
            SelectionRule::Midpoint => 0.5,
            SelectionRule::Lower => 0.0,
            SelectionRule::Upper => 1.0,
            SelectionRule::SeededRandom { seed } => {
                let h = splitmix(splitmix(splitmix(seed ^ step) ^ i as u64) ^ j as u64);
                (h >> 11) as f64 / (1u64 << 53) as f64
            }
        }
    }
}

/// Source of the indicator coefficients.
#[derive(Clone, Copy)]
pub enum Indicator<'a> {
    Sharp { selection: SelectionRule, tol_b: f64, step: u64 },
    Mollified(&'a Mollifier),
    Tabulated(&'a MollifiedTable),
}

/// Candidate `j` indices for one particle, ascending.
#[derive(Clone, Copy)]
pub enum Candidates<'a> {
    All,
    List(&'a [u32]),
}

/// Force evaluation against one state snapshot.
pub struct ForceEval<'a> {
    pub model: &'a ForceModel,
    pub indicator: Indicator<'a>,
}

impl<'a> ForceEval<'a> {
    pub fn new(model: &'a ForceModel, indicator: Indicator<'a>) -> Self {
        ForceEval { model, indicator }
    }

    /// Displacements beyond this length never contribute.
    pub fn reach(&self) -> f64 {
        let slack = match self.indicator {
            Indicator::Sharp { tol_b, .. } => tol_b,
            Indicator::Mollified(m) => m.params.eps,
            Indicator::Tabulated(t) => t.mollifier.params.eps,
        };
        self.model.region.global_radius() + slack + 1e-9
    }

    /// Velocity argument of the region for particle `i`.
    #[inline]
    fn orientation(&self, st: &ParticleState, i: usize) -> Vec3 {
        match &self.model.kind {
            ForceKind::FirstOrder { w_field, .. } => w_field.eval(st.positions[i]),
            _ => st.velocities[i],
        }
    }

    /// Acceleration (or first-order velocity) of particle `i`.
    pub fn particle(&self, st: &ParticleState, i: usize, cand: Candidates<'_>) -> Vec3 {
        let orient = self.orientation(st, i);
        self.evaluate(st, st.positions[i], st.velocities[i], orient, Some(i), cand)
    }

    /// Mean-field force of the empirical measure `st` at the phase-space
    /// point `(x, v)`, summed over every particle.
    pub fn probe(&self, st: &ParticleState, x: Vec3, v: Vec3) -> Vec3 {
        let orient = match &self.model.kind {
            ForceKind::FirstOrder { w_field, .. } => w_field.eval(x),
            _ => v,
        };
        self.evaluate(st, x, v, orient, None, Candidates::All)
    }

    fn evaluate(&self, st: &ParticleState, xi: Vec3, vi: Vec3, orient: Vec3, skip: Option<usize>, cand: Candidates<'_>) -> Vec3 {
        let region = &self.model.region;
        let i = skip.unwrap_or(usize::MAX);
        match self.indicator {
            Indicator::Sharp { selection, tol_b, step } => {
                let sl = region.slice(orient);
                self.sum(st, xi, vi, i, cand, |j, x| match sl.slope_set(x, tol_b) {
                    SlopeSet::Zero => 0.0,
                    SlopeSet::One => 1.0,
                    SlopeSet::Full => selection.alpha(step, i, j),
                })
            }
            Indicator::Mollified(m) => {
                let b = Bounds::new(region, orient, &m.params);
                self.sum(st, xi, vi, i, cand, |_, x| b.saturate(x).unwrap_or_else(|| m.quadrature(region, orient, x)))
            }
            Indicator::Tabulated(t) => {
                let p = t.prepare(orient);
                self.sum(st, xi, vi, i, cand, |_, x| p.value(x))
            }
        }
    }

    #[inline]
    fn sum<A: Fn(usize, Vec3) -> f64>(
        &self,
        st: &ParticleState,
        xi: Vec3,
        vi: Vec3,
        i: usize,
        cand: Candidates<'_>,
        alpha: A,
    ) -> Vec3 {
        let reach = self.reach();
        let reach2 = reach * reach;
        let mut acc = geom::ZERO;
        let mut visit = |j: usize| {
            if j == i {
                return;
            }
            let x = geom::sub(xi, st.positions[j]);
            if geom::norm2(x) > reach2 {
                return;
            }
            let a = alpha(j, x);
            if a == 0.0 {
                return;
            }
            let term = match &self.model.kind {
                ForceKind::CuckerSmale { psi, h } => {
                    geom::scale(h.eval(geom::sub(st.velocities[j], vi)), a * st.weights[j] * psi.eval(x))
                }
                ForceKind::AttractiveRepulsive { grad_phi } | ForceKind::FirstOrder { grad_phi, .. } => {
                    geom::scale(grad_phi.eval(x), a * st.weights[j])
                }
            };
            acc = geom::add(acc, term);
        };
        match cand {
            Candidates::All => (0..st.len()).for_each(&mut visit),
            Candidates::List(list) => list.iter().for_each(|&j| visit(j as usize)),
        }
        acc
    }
}

/// Sharp-mode acceleration of particle `i`.
pub fn accel_sharp(model: &ForceModel, state: &ParticleState, i: usize, selection: SelectionRule, tol_b: f64) -> Vec3 {
    ForceEval::new(model, Indicator::Sharp { selection, tol_b, step: 0 }).particle(state, i, Candidates::All)
}

/// Mollified-mode acceleration of particle `i` using direct quadrature.
pub fn accel_mollified(model: &ForceModel, state: &ParticleState, i: usize, params: MollifierParams) -> Result<Vec3> {
    let m = Mollifier::new(model.region.dim, params)?;
    Ok(ForceEval::new(model, Indicator::Mollified(&m)).particle(state, i, Candidates::All))
}

/// First-order velocity `u(X_i)` with midpoint selection at the boundary.
pub fn velocity_first_order(model: &ForceModel, state: &ParticleState, i: usize) -> Result<Vec3> {
    if !model.is_first_order() {
        return Err(invalid("velocity_first_order needs a first-order model"));
    }
    Ok(accel_sharp(model, state, i, SelectionRule::Midpoint, DEFAULT_TOL_B))
}

/// Uniform cell grid for neighbor candidates. Cells are at least `cell`
/// wide, so every particle within distance `cell` of particle `i` lies in
/// one of the `3^d` cells around it.
pub struct NeighborGrid {
    dim: usize,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    start: Vec<u32>,
    items: Vec<u32>,
    cell_of: Vec<usize>,
}

const MAX_CELLS: usize = 1 << 20;

impl NeighborGrid {
    pub fn build(positions: &[Vec3], dim: usize, cell: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in positions {
            for c in 0..dim {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let mut cell = cell;
        let mut dims = [1usize; 3];
        loop {
            let mut total = 1usize;
            for c in 0..dim {
                dims[c] = ((hi[c] - lo[c]) / cell).floor() as usize + 1;
                total = total.saturating_mul(dims[c]);
            }
            if total <= MAX_CELLS.max(positions.len()) {
                break;
            }
            cell *= 2.0;
        }
        let origin = if positions.is_empty() { geom::ZERO } else { [lo[0], lo[1], if dim == 3 { lo[2] } else { 0.0 }] };
        let ncell = dims[0] * dims[1] * dims[2];
        let mut grid = NeighborGrid { dim, origin, cell, dims, start: vec![0; ncell + 1], items: vec![0; positions.len()], cell_of: Vec::with_capacity(positions.len()) };
        for p in positions {
            let c = grid.cell_index(*p);
            grid.cell_of.push(c);
            grid.start[c + 1] += 1;
        }
        for c in 0..ncell {
            grid.start[c + 1] += grid.start[c];
        }
        let mut fill = grid.start.clone();
        for (i, &c) in grid.cell_of.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn coords(&self, p: Vec3) -> [usize; 3] {
        let mut out = [0usize; 3];
        for c in 0..self.dim {
            out[c] = (((p[c] - self.origin[c]) / self.cell).floor().max(0.0) as usize).min(self.dims[c] - 1);
        }
        out
    }

    fn cell_index(&self, p: Vec3) -> usize {
        let k = self.coords(p);
        (k[2] * self.dims[1] + k[1]) * self.dims[0] + k[0]
    }

    /// Fills `out` with the sorted indices of particles in the cells around `i`.
    pub fn candidates(&self, i: usize, out: &mut Vec<u32>) {
        out.clear();
        let c = self.cell_of[i];
        let k = [c % self.dims[0], (c / self.dims[0]) % self.dims[1], c / (self.dims[0] * self.dims[1])];
        let range = |kc: usize, n: usize| kc.saturating_sub(1)..(kc + 2).min(n);
        for z in range(k[2], self.dims[2]) {
            for y in range(k[1], self.dims[1]) {
                for x in range(k[0], self.dims[0]) {
                    let idx = (z * self.dims[1] + y) * self.dims[0] + x;
                    out.extend_from_slice(&self.items[self.start[idx] as usize..self.start[idx + 1] as usize]);
                }
            }
        }
        out.sort_unstable();
    }

    /// Like [`candidates`](Self::candidates), keeping only particles within
    /// `radius` of particle `i`, so less is sorted.
    pub fn candidates_within(&self, i: usize, positions: &[Vec3], radius: f64, out: &mut Vec<u32>) {
        out.clear();
        let xi = positions[i];
        let r2 = radius * radius;
        let c = self.cell_of[i];
        let k = [c % self.dims[0], (c / self.dims[0]) % self.dims[1], c / (self.dims[0] * self.dims[1])];
        let range = |kc: usize, n: usize| kc.saturating_sub(1)..(kc + 2).min(n);
        for z in range(k[2], self.dims[2]) {
            for y in range(k[1], self.dims[1]) {
                for x in range(k[0], self.dims[0]) {
                    let idx = (z * self.dims[1] + y) * self.dims[0] + x;
                    let cell = &self.items[self.start[idx] as usize..self.start[idx + 1] as usize];
                    out.extend(cell.iter().filter(|&&j| geom::norm2(geom::sub(xi, positions[j as usize])) <= r2));
                }
            }
        }
        out.sort_unstable();
    }
}
