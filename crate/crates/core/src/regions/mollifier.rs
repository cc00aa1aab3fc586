//! Mollified indicators `1^{η,ε}_{K(v)}(x) = ∫∫ 1_{K(v−w)}(x−y) φ_η(w) ψ_ε(y) dw dy`.
//!
//! Both bumps are `exp(−1/(1−|u|²))` on the unit ball, rescaled, and the
//! double integral is replaced by a tensor Gauss-Legendre rule. The rule's
//! weights are normalized to sum to one, so the normalization constant of
//! the bump comes from the same quadrature.
//!
//! Far from the boundary the integrand is constant over the whole support;
//! [`Bounds`] detects this with a conservative geometric test and returns
//! the exact value without any quadrature.

use serde::{Deserialize, Serialize};

use super::{RegionFamily, RegionKind};
use crate::error::{invalid, Result};
use crate::geom::{self, Vec3};

fn default_quad_nodes() -> usize {
    8
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierParams {
    pub eps: f64,
    pub eta: f64,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
}

impl MollifierParams {
    pub fn new(eps: f64, eta: f64) -> Self {
        MollifierParams { eps, eta, quad_nodes: default_quad_nodes() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite() && self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("mollifier widths must be positive, got eps={} eta={}", self.eps, self.eta)));
        }
        if self.quad_nodes == 0 || self.quad_nodes > 64 {
            return Err(invalid(format!("quad_nodes must be in 1..=64, got {}", self.quad_nodes)));
        }
        Ok(())
    }
}

/// Quadrature nodes of the normalized bump on the unit ball of `R^dim`.
pub fn bump_nodes(dim: usize, n: usize) -> Vec<(Vec3, f64)> {
    let (x, w) = geom::gauss_legendre(n);
    let mut out = Vec::new();
    let mut idx = [0usize; 3];
    loop {
        let mut u = geom::ZERO;
        let mut wt = 1.0;
        for c in 0..dim {
            u[c] = x[idx[c]];
            wt *= w[idx[c]];
        }
        let r2 = geom::norm2(u);
        if r2 < 1.0 {
            let b = (-1.0 / (1.0 - r2)).exp();
            if b > 0.0 {
                out.push((u, wt * b));
            }
        }
        // odometer over the tensor grid
        let mut c = 0;
        loop {
            if c == dim {
                let total: f64 = out.iter().map(|p| p.1).sum();
                for p in out.iter_mut() {
                    p.1 /= total;
                }
                return out;
            }
            idx[c] += 1;
            if idx[c] < n {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

/// Prepared quadrature for one dimension and one parameter set.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub dim: usize,
    pub params: MollifierParams,
    /// `(ε u, weight)`
    space: Vec<(Vec3, f64)>,
    /// `(η u, weight)`
    vel: Vec<(Vec3, f64)>,
}

impl Mollifier {
    pub fn new(dim: usize, params: MollifierParams) -> Result<Self> {
        params.validate()?;
        let nodes = bump_nodes(dim, params.quad_nodes);
        let space = nodes.iter().map(|&(u, w)| (geom::scale(u, params.eps), w)).collect();
        let vel = nodes.iter().map(|&(u, w)| (geom::scale(u, params.eta), w)).collect();
        Ok(Mollifier { dim, params, space, vel })
    }

    pub fn node_count(&self) -> usize {
        self.space.len()
    }

    /// Mollified indicator with the exact shortcut away from the boundary.
    pub fn indicator(&self, region: &RegionFamily, v: Vec3, x: Vec3) -> f64 {
        match Bounds::new(region, v, &self.params).saturate(x) {
            Some(val) => val,
            None => self.quadrature(region, v, x),
        }
    }

    /// The quadrature sum itself, without the saturation shortcut.
    pub fn quadrature(&self, region: &RegionFamily, v: Vec3, x: Vec3) -> f64 {
        let r_max = region.global_radius();
        let shifted: Vec<(Vec3, f64, f64)> = self
            .space
            .iter()
            .filter_map(|&(y, w)| {
                let p = geom::sub(x, y);
                let n2 = geom::norm2(p);
                (n2 <= r_max * r_max).then_some((p, n2, w))
            })
            .collect();
        let total = match region.kind {
            RegionKind::Ball { radius } => {
                let r2 = radius * radius;
                shifted.iter().filter(|s| s.1 <= r2).map(|s| s.2).sum()
            }
            _ => {
                let mut total = 0.0;
                for &(w, wk) in &self.vel {
                    let sl = region.slice(geom::sub(v, w));
                    let mut part = 0.0;
                    for &(p, _, wl) in &shifted {
                        if sl.contains(p) {
                            part += wl;
                        }
                    }
                    total += wk * part;
                }
                total
            }
        };
        total.clamp(0.0, 1.0)
    }
}

/// Convenience wrapper building the quadrature on every call.
pub fn mollified_indicator(region: &RegionFamily, v: Vec3, x: Vec3, params: MollifierParams) -> Result<f64> {
    Ok(Mollifier::new(region.dim, params)?.indicator(region, v, x))
}

const MARGIN: f64 = 1e-12;

/// Certified saturation test for one velocity: if every perturbed pair
/// `(v − w, x − y)` with `|w| < η`, `|y| < ε` agrees on membership, the
/// mollified indicator is exactly 0 or 1.
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    eps: f64,
    axis: Vec3,
    /// radially inside for every perturbation when `|x| + ε < r_in`
    r_in: f64,
    /// radially outside for every perturbation when `|x| − ε > r_out`
    r_out: f64,
    /// every perturbed slice is a full ball
    full: bool,
    /// `(cos β, sin β, β)`: inside in angle when `∠(x, v) + asin(ε/|x|) < β`
    ang_in: Option<(f64, f64, f64)>,
    /// `(cos γ, sin γ, γ)`: outside in angle when `∠(x, v) − asin(ε/|x|) > γ`
    ang_out: Option<(f64, f64, f64)>,
}

impl Bounds {
    pub fn new(region: &RegionFamily, v: Vec3, params: &MollifierParams) -> Self {
        let eps = params.eps;
        let eta = params.eta;
        let s = geom::norm(v);
        let axis = geom::unit_or_e1(v);
        let mut b = Bounds { eps, axis, r_in: 0.0, r_out: 0.0, full: true, ang_in: None, ang_out: None };
        match region.kind {
            RegionKind::Ball { radius } => {
                b.r_in = radius;
                b.r_out = radius;
            }
            RegionKind::SpeedBall { profile } => {
                let r = profile.radius(s);
                let dr = profile.lipschitz() * eta;
                b.r_in = (r - dr).max(profile.inf());
                b.r_out = (r + dr).min(profile.sup());
            }
            RegionKind::VisionCone { radius, profile } => {
                b.r_in = radius;
                b.r_out = radius;
                let pi = std::f64::consts::PI;
                let theta_min = profile.theta(s + eta);
                let theta_max = profile.theta((s - eta).max(0.0));
                b.full = theta_min >= pi;
                if !b.full && s > eta {
                    let dv = (eta / s).asin();
                    let beta = theta_min - dv - MARGIN;
                    if beta > 0.0 {
                        b.ang_in = Some((beta.cos(), beta.sin(), beta));
                    }
                    let gamma = theta_max + dv + MARGIN;
                    if gamma < pi {
                        b.ang_out = Some((gamma.cos(), gamma.sin(), gamma));
                    }
                }
            }
        }
        b
    }

    #[inline]
    pub fn saturate(&self, x: Vec3) -> Option<f64> {
        let n2 = geom::norm2(x);
        let n = n2.sqrt();
        if n - self.eps > self.r_out + MARGIN {
            return Some(0.0);
        }
        let eps = self.eps;
        if n <= eps {
            return if self.full && n + eps < self.r_in - MARGIN { Some(1.0) } else { None };
        }
        let half = std::f64::consts::FRAC_PI_2;
        if n + eps < self.r_in - MARGIN {
            if self.full {
                return Some(1.0);
            }
            if let Some((cb, sb, beta)) = self.ang_in {
                // δ = asin(ε/|x|) ≤ β, then ∠(x,v) < β − δ  ⇔  a > cos(β−δ)|x|
                if beta >= half || eps <= n * sb {
                    let a = geom::dot(x, self.axis);
                    if a > cb * (n2 - eps * eps).sqrt() + sb * eps {
                        return Some(1.0);
                    }
                }
            }
        }
        if let Some((cg, sg, gamma)) = self.ang_out {
            // γ + δ ≤ π, then ∠(x,v) > γ + δ  ⇔  a < cos(γ+δ)|x|
            if gamma <= half || eps <= n * sg {
                let a = geom::dot(x, self.axis);
                if a < cg * (n2 - eps * eps).sqrt() - sg * eps {
                    return Some(0.0);
                }
            }
        }
        None
    }
}

/// Tabulated mollified indicator.
///
/// By rotation invariance the value depends on `(|v|, a, ρ)` only, where
/// `(a, ρ)` are the meridian coordinates of `x` about `v`. Balls drop the
/// unused coordinates. Grid nodes hold the quadrature value; queries use
/// the exact shortcut first, then trilinear interpolation, then direct
/// quadrature for speeds beyond the table.
#[derive(Clone, Debug)]
pub struct MollifiedTable {
    pub region: RegionFamily,
    pub mollifier: Mollifier,
    pub s_max: f64,
    axes: [Axis; 3],
    values: Vec<f32>,
}

#[derive(Clone, Copy, Debug)]
struct Axis {
    min: f64,
    step: f64,
    count: usize,
}

impl Axis {
    fn new(min: f64, max: f64, step: f64) -> Self {
        let count = (((max - min) / step).ceil() as usize + 1).max(2);
        Axis { min, step: (max - min) / (count - 1) as f64, count }
    }

    fn single() -> Self {
        Axis { min: 0.0, step: 1.0, count: 1 }
    }

    fn at(&self, i: usize) -> f64 {
        self.min + self.step * i as f64
    }

    /// Cell index and fractional offset, clamped to the grid.
    #[inline]
    fn locate(&self, c: f64) -> (usize, f64) {
        if self.count == 1 {
            return (0, 0.0);
        }
        let t = ((c - self.min) / self.step).max(0.0);
        let i = (t as usize).min(self.count - 2);
        (i, (t - i as f64).min(1.0))
    }
}

/// Grid spacing as a fraction of the mollifier widths.
pub const TABLE_RESOLUTION: f64 = 6.0;

/// Number of rotated copies of the quadrature averaged at each node.
pub const TABLE_ROTATIONS: usize = 4;

impl MollifiedTable {
    pub fn new(region: RegionFamily, params: MollifierParams, s_max: f64) -> Result<Self> {
        let mollifier = Mollifier::new(region.dim, params)?;
        let reach = region.global_radius() + params.eps;
        let hx = params.eps / TABLE_RESOLUTION;
        let hs = params.eta / TABLE_RESOLUTION;
        let axes = match region.kind {
            RegionKind::Ball { .. } => [Axis::single(), Axis::new(0.0, reach, hx), Axis::single()],
            RegionKind::SpeedBall { .. } => [Axis::new(0.0, s_max, hs), Axis::new(0.0, reach, hx), Axis::single()],
            RegionKind::VisionCone { .. } => [Axis::new(0.0, s_max, hs), Axis::new(-reach, reach, hx), Axis::new(0.0, reach, hx)],
        };
        let mut table = MollifiedTable { region, mollifier, s_max, axes, values: Vec::new() };
        table.fill();
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn fill(&mut self) {
        let [a0, a1, a2] = self.axes;
        let mut values = vec![0f32; a0.count * a1.count * a2.count];
        let region = self.region;
        let m = &self.mollifier;
        let vel = &m.vel;
        let space = &m.space;
        let r_max = region.global_radius();
        // the tensor rule is not rotation invariant; node values average it
        // over rotations of the (e1, e2) plane to remove the bias of the
        // single direction the table samples
        let rotations: Vec<(f64, f64)> = (0..TABLE_ROTATIONS)
            .map(|m| {
                let phi = std::f64::consts::FRAC_PI_2 * m as f64 / TABLE_ROTATIONS as f64;
                (phi.cos(), phi.sin())
            })
            .collect();
        let rot = |p: Vec3, (c, s): (f64, f64)| [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]];
        for i0 in 0..a0.count {
            let v = [a0.at(i0), 0.0, 0.0];
            let bounds = Bounds::new(&region, v, &m.params);
            let slices: Vec<Vec<(super::Slice, f64)>> = rotations
                .iter()
                .map(|&cs| vel.iter().map(|&(w, wk)| (region.slice(geom::sub(rot(v, cs), w)), wk)).collect())
                .collect();
            for i1 in 0..a1.count {
                for i2 in 0..a2.count {
                    let x = [a1.at(i1), a2.at(i2), 0.0];
                    let val = match bounds.saturate(x) {
                        Some(s) => s,
                        None => {
                            let mut acc = 0.0;
                            for (&cs, slices) in rotations.iter().zip(&slices) {
                                let xr = rot(x, cs);
                                let mut total = 0.0;
                                for &(y, wl) in space {
                                    let p = geom::sub(xr, y);
                                    if geom::norm2(p) > r_max * r_max {
                                        continue;
                                    }
                                    let mut part = 0.0;
                                    for (sl, wk) in slices {
                                        if sl.contains(p) {
                                            part += wk;
                                        }
                                    }
                                    total += wl * part;
                                }
                                acc += total;
                            }
                            (acc / TABLE_ROTATIONS as f64).clamp(0.0, 1.0)
                        }
                    };
                    values[(i0 * a1.count + i1) * a2.count + i2] = val as f32;
                }
            }
        }
        self.values = values;
    }

    /// Per-velocity view for repeated queries.
    pub fn prepare(&self, v: Vec3) -> PreparedTable<'_> {
        let s = geom::norm(v);
        let (i0, f0) = self.axes[0].locate(s);
        PreparedTable {
            table: self,
            v,
            s,
            axis: geom::unit_or_e1(v),
            bounds: Bounds::new(&self.region, v, &self.mollifier.params),
            i0,
            f0,
            direct: s > self.s_max,
        }
    }

    pub fn value(&self, v: Vec3, x: Vec3) -> f64 {
        self.prepare(v).value(x)
    }
}

pub struct PreparedTable<'a> {
    table: &'a MollifiedTable,
    v: Vec3,
    s: f64,
    axis: Vec3,
    bounds: Bounds,
    i0: usize,
    f0: f64,
    direct: bool,
}

impl PreparedTable<'_> {
    #[inline]
    pub fn value(&self, x: Vec3) -> f64 {
        if let Some(val) = self.bounds.saturate(x) {
            return val;
        }
        let t = self.table;
        if self.direct {
            return t.mollifier.quadrature(&t.region, self.v, x);
        }
        let (c1, c2) = match t.region.kind {
            RegionKind::VisionCone { .. } => {
                let a = geom::dot(x, self.axis);
                (a, geom::norm(geom::axpy(x, -a, self.axis)))
            }
            _ => (geom::norm(x), 0.0),
        };
        let [a0, a1, a2] = t.axes;
        let (i1, f1) = a1.locate(c1);
        let (i2, f2) = a2.locate(c2);
        let n1 = a1.count;
        let n2 = a2.count;
        let at = |j0: usize, j1: usize, j2: usize| t.values[(j0 * n1 + j1) * n2 + j2] as f64;
        let j0b = if a0.count > 1 { self.i0 + 1 } else { self.i0 };
        let j2b = if n2 > 1 { i2 + 1 } else { i2 };
        let lerp2 = |j0: usize| {
            let lo = at(j0, i1, i2) * (1.0 - f2) + at(j0, i1, j2b) * f2;
            let hi = at(j0, i1 + 1, i2) * (1.0 - f2) + at(j0, i1 + 1, j2b) * f2;
            lo * (1.0 - f1) + hi * f1
        };
        let val = lerp2(self.i0) * (1.0 - self.f0) + lerp2(j0b) * self.f0;
        val.clamp(0.0, 1.0)
    }

    pub fn speed(&self) -> f64 {
        self.s
    }
}
