//! Velocity-dependent sensitivity regions `K(v)` and the surrogate boundary
//! families `Θ(v)` that control them.
//!
//! Every query goes through a [`Slice`], the region frozen at one velocity.
//! Building a slice costs a norm and a few transcendental calls; querying it
//! afterwards is cheap, which matters inside the pair loops of the dynamics.

mod cone;
pub mod mollifier;
pub mod montecarlo;
pub mod sampling;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{self, Vec3};

pub use mollifier::{MollifiedTable, Mollifier, MollifierParams};

/// Tolerance for analytic geometry (boundary membership, distance checks).
pub const TOL_GEOM: f64 = 1e-9;

/// Default boundary tolerance used by slope selection in the dynamics.
pub const DEFAULT_TOL_B: f64 = 1e-7;

/// Half-opening angle `θ(z)` of the vision cone as a function of speed.
///
/// `θ(z) = π` for `z ≤ 1` and `θ(z) = θ* + (π − θ*) exp(−k (z − 1)²)` above.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleProfile {
    pub theta_star: f64,
    pub k: f64,
}

impl Default for AngleProfile {
    fn default() -> Self {
        AngleProfile { theta_star: std::f64::consts::FRAC_PI_3, k: 1.0 }
    }
}

impl AngleProfile {
    pub fn validate(&self) -> Result<()> {
        let pi = std::f64::consts::PI;
        if !(self.theta_star > 0.0 && self.theta_star < pi) {
            return Err(invalid(format!("theta_star must lie in (0, pi), got {}", self.theta_star)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(invalid(format!("angle profile k must be positive, got {}", self.k)));
        }
        Ok(())
    }

    #[inline]
    pub fn theta(&self, z: f64) -> f64 {
        let pi = std::f64::consts::PI;
        if z <= 1.0 {
            pi
        } else {
            let s = z - 1.0;
            self.theta_star + (pi - self.theta_star) * (-self.k * s * s).exp()
        }
    }

    /// Exact Lipschitz constant: the maximum of `|θ'|`, attained at
    /// `z = 1 + 1/sqrt(2k)`.
    pub fn lipschitz(&self) -> f64 {
        (std::f64::consts::PI - self.theta_star) * (2.0 * self.k).sqrt() * (-0.5f64).exp()
    }
}

/// Radius of the speed-dependent ball as a function of speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedRadius {
    /// `clamp(base + slope * z, min, max)`
    ClampedLinear { base: f64, slope: f64, min: f64, max: f64 },
}

impl SpeedRadius {
    pub fn validate(&self) -> Result<()> {
        let SpeedRadius::ClampedLinear { base, slope, min, max } = *self;
        if !(min > 0.0 && min <= max && max.is_finite() && base.is_finite() && slope.is_finite()) {
            return Err(invalid("speed radius needs 0 < min <= max and finite base/slope"));
        }
        Ok(())
    }

    #[inline]
    pub fn radius(&self, z: f64) -> f64 {
        let SpeedRadius::ClampedLinear { base, slope, min, max } = *self;
        (base + slope * z).clamp(min, max)
    }

    pub fn lipschitz(&self) -> f64 {
        let SpeedRadius::ClampedLinear { slope, .. } = *self;
        slope.abs()
    }

    pub fn sup(&self) -> f64 {
        let SpeedRadius::ClampedLinear { max, .. } = *self;
        max
    }

    pub fn inf(&self) -> f64 {
        let SpeedRadius::ClampedLinear { min, .. } = *self;
        min
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionKind {
    Ball { radius: f64 },
    SpeedBall { profile: SpeedRadius },
    VisionCone { radius: f64, profile: AngleProfile },
}

/// A family of compact sets `K(v) ⊂ R^dim` indexed by velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionFamily {
    pub dim: usize,
    pub kind: RegionKind,
}

/// Admissible indicator values at a point: `{0}`, `{1}` or `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlopeSet {
    Zero,
    One,
    Full,
}

impl RegionFamily {
    pub fn new(dim: usize, kind: RegionKind) -> Result<Self> {
        let r = RegionFamily { dim, kind };
        r.validate()?;
        Ok(r)
    }

    pub fn ball(dim: usize, radius: f64) -> Self {
        Self::new(dim, RegionKind::Ball { radius }).expect("invalid ball")
    }

    pub fn vision_cone(dim: usize, radius: f64, profile: AngleProfile) -> Self {
        Self::new(dim, RegionKind::VisionCone { radius, profile }).expect("invalid cone")
    }

    pub fn speed_ball(dim: usize, profile: SpeedRadius) -> Self {
        Self::new(dim, RegionKind::SpeedBall { profile }).expect("invalid speed ball")
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        match self.kind {
            RegionKind::Ball { radius } | RegionKind::VisionCone { radius, .. }
                if !(radius > 0.0 && radius.is_finite()) =>
            {
                Err(invalid(format!("region radius must be positive, got {radius}")))
            }
            RegionKind::SpeedBall { profile } => profile.validate(),
            RegionKind::VisionCone { profile, .. } => profile.validate(),
            RegionKind::Ball { .. } => Ok(()),
        }
    }

    /// Radius `R_K` of a ball containing every `K(v)`.
    pub fn global_radius(&self) -> f64 {
        match self.kind {
            RegionKind::Ball { radius } | RegionKind::VisionCone { radius, .. } => radius,
            RegionKind::SpeedBall { profile } => profile.sup(),
        }
    }

    /// Constant `L` with `K(v − w) ⊂ K(v)^{L|w|,+}` for all `v, w`.
    ///
    /// For the cone the axis turns by less than `2|w|` once the speed exceeds
    /// one and the opening moves by at most `Lip θ · |w|`, so points move by
    /// at most `r (2 + Lip θ) |w|`; the bound below is twice the larger term.
    pub fn velocity_lipschitz(&self) -> f64 {
        match self.kind {
            RegionKind::Ball { .. } => 0.0,
            RegionKind::SpeedBall { profile } => profile.lipschitz(),
            RegionKind::VisionCone { radius, profile } => 2.0 * profile.lipschitz().max(2.0) * radius,
        }
    }

    /// The region frozen at velocity `v`.
    pub fn slice(&self, v: Vec3) -> Slice {
        let speed = geom::norm(v);
        let axis = geom::unit_or_e1(v);
        match self.kind {
            RegionKind::Ball { radius } => Slice::ball(self.dim, radius, axis),
            RegionKind::SpeedBall { profile } => Slice::ball(self.dim, profile.radius(speed), axis),
            RegionKind::VisionCone { radius, profile } => {
                let theta = profile.theta(speed);
                let segment = if speed > 0.5 && speed <= 1.0 {
                    Some((-radius, 2.0 * radius * (speed - 1.0)))
                } else {
                    None
                };
                Slice::cone(self.dim, radius, axis, theta, segment)
            }
        }
    }

    pub fn contains(&self, v: Vec3, x: Vec3) -> bool {
        self.slice(v).contains(x)
    }

    pub fn signed_distance(&self, v: Vec3, x: Vec3) -> f64 {
        self.slice(v).signed_distance(x)
    }

    pub fn eps_boundary_contains(&self, v: Vec3, x: Vec3, eps: f64) -> bool {
        self.slice(v).eps_boundary_contains(x, eps)
    }

    pub fn theta_contains(&self, v: Vec3, x: Vec3) -> bool {
        self.slice(v).theta_contains(x)
    }

    pub fn theta_enlarged_contains(&self, v: Vec3, x: Vec3, eps: f64) -> bool {
        self.slice(v).theta_enlarged_contains(x, eps)
    }

    pub fn slope_set(&self, v: Vec3, x: Vec3, tol_b: f64) -> SlopeSet {
        self.slice(v).slope_set(x, tol_b)
    }
}

/// `K(v)` at a fixed velocity: a ball, or a cone of half-angle `theta`
/// around `axis` cut at radius `r`, plus the optional axial segment that
/// belongs to `Θ(v)` in the transition band of the vision cone.
#[derive(Clone, Copy, Debug)]
pub struct Slice {
    pub dim: usize,
    pub r: f64,
    pub axis: Vec3,
    pub theta: f64,
    cos_t: f64,
    sin_t: f64,
    full: bool,
    /// Axial coordinates `[lo, hi]` of the extra segment of `Θ(v)`.
    pub segment: Option<(f64, f64)>,
}

impl Slice {
    fn ball(dim: usize, r: f64, axis: Vec3) -> Self {
        Slice { dim, r, axis, theta: std::f64::consts::PI, cos_t: -1.0, sin_t: 0.0, full: true, segment: None }
    }

    fn cone(dim: usize, r: f64, axis: Vec3, theta: f64, segment: Option<(f64, f64)>) -> Self {
        let full = theta >= std::f64::consts::PI;
        Slice { dim, r, axis, theta, cos_t: theta.cos(), sin_t: theta.sin(), full, segment }
    }

    /// True when the slice is a whole ball.
    #[inline]
    pub fn is_ball(&self) -> bool {
        self.full
    }

    #[inline]
    pub fn cos_theta(&self) -> f64 {
        self.cos_t
    }

    /// Axial and radial coordinates of `x` in the meridian plane.
    #[inline]
    pub fn meridian(&self, x: Vec3) -> (f64, f64) {
        let a = geom::dot(x, self.axis);
        (a, geom::norm(geom::axpy(x, -a, self.axis)))
    }

    #[inline]
    pub fn contains(&self, x: Vec3) -> bool {
        let n2 = geom::norm2(x);
        if n2 > self.r * self.r {
            return false;
        }
        self.full || geom::dot(x, self.axis) >= n2.sqrt() * self.cos_t
    }

    /// Unsigned distance from `x` to `∂K(v)`.
    pub fn boundary_distance(&self, x: Vec3) -> f64 {
        let (a, rho) = self.meridian(x);
        cone::boundary_distance(a, rho, self.r, self.full, self.cos_t, self.sin_t)
    }

    pub fn signed_distance(&self, x: Vec3) -> f64 {
        let d = self.boundary_distance(x);
        if self.contains(x) {
            -d
        } else {
            d
        }
    }

    /// Distance from `x` to `Θ(v)`.
    pub fn theta_distance(&self, x: Vec3) -> f64 {
        let (a, rho) = self.meridian(x);
        let d = cone::boundary_distance(a, rho, self.r, self.full, self.cos_t, self.sin_t);
        match self.segment {
            Some((lo, hi)) => d.min(geom::point_segment_dist2d([a, rho], [lo, 0.0], [hi, 0.0])),
            None => d,
        }
    }

    pub fn eps_boundary_contains(&self, x: Vec3, eps: f64) -> bool {
        self.boundary_distance(x) <= eps
    }

    /// Membership in `K^{ε,+} = K + B(0, ε)`.
    pub fn enlarged_contains(&self, x: Vec3, eps: f64) -> bool {
        self.signed_distance(x) <= eps
    }

    /// Membership in `K^{ε,−} = K \ ∂^ε K`.
    pub fn reduced_contains(&self, x: Vec3, eps: f64) -> bool {
        self.signed_distance(x) < -eps
    }

    pub fn theta_contains(&self, x: Vec3) -> bool {
        self.theta_distance(x) <= TOL_GEOM
    }

    pub fn theta_enlarged_contains(&self, x: Vec3, eps: f64) -> bool {
        self.theta_distance(x) <= eps
    }

    pub fn slope_set(&self, x: Vec3, tol_b: f64) -> SlopeSet {
        let n2 = geom::norm2(x);
        let reach = self.r + tol_b;
        if n2 > reach * reach {
            return SlopeSet::Zero;
        }
        if self.theta_distance(x) <= tol_b {
            SlopeSet::Full
        } else if self.contains(x) {
            SlopeSet::One
        } else {
            SlopeSet::Zero
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn cone() -> RegionFamily {
        RegionFamily::vision_cone(2, 1.0, AngleProfile::default())
    }

    #[test]
    fn contains_examples() {
        let ball = RegionFamily::ball(2, 1.0);
        assert!(ball.contains([3.0, 0.0, 0.0], [0.5, 0.0, 0.0]));
        assert!(cone().contains([0.5, 0.0, 0.0], [-0.9, 0.0, 0.0]));
        assert!(!cone().contains([100.0, 0.0, 0.0], [0.0, 0.9, 0.0]));
        // apex and the zero velocity
        assert!(cone().contains([5.0, 0.0, 0.0], [0.0, 0.0, 0.0]));
        assert!(cone().contains([0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]));
    }

    #[test]
    fn angle_profile_shape() {
        let p = AngleProfile::default();
        assert_eq!(p.theta(0.0), PI);
        assert_eq!(p.theta(1.0), PI);
        assert!((p.theta(100.0) - FRAC_PI_3).abs() < 1e-15);
        let mut prev = PI;
        for i in 0..2000 {
            let z = 1.0 + i as f64 * 0.005;
            let t = p.theta(z);
            assert!(t <= prev);
            prev = t;
        }
        // the closed form is the max of a finite-difference slope
        let h = 1e-6;
        let fd = (0..40000)
            .map(|i| {
                let z = 1.0 + i as f64 * 1e-4;
                (p.theta(z + h) - p.theta(z)).abs() / h
            })
            .fold(0.0, f64::max);
        assert!((fd - p.lipschitz()).abs() < 1e-4, "{fd} vs {}", p.lipschitz());
    }

    #[test]
    fn signed_distance_examples() {
        let ball = RegionFamily::ball(2, 1.0);
        assert!((ball.signed_distance([7.0, 1.0, 0.0], [0.25, 0.0, 0.0]) + 0.75).abs() < 1e-15);
        assert!((ball.signed_distance([0.0; 3], [2.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        // half-disk: theta(5) = pi/2 with a profile whose limit is pi/2
        let half = RegionFamily::vision_cone(2, 1.0, AngleProfile { theta_star: FRAC_PI_2, k: 50.0 });
        assert!((half.slice([5.0, 0.0, 0.0]).theta - FRAC_PI_2).abs() < 1e-15);
        assert!(half.signed_distance([5.0, 0.0, 0.0], [0.0, 0.5, 0.0]).abs() < TOL_GEOM);
        assert!(half.eps_boundary_contains([5.0, 0.0, 0.0], [0.0, 0.5, 0.0], 0.01));
    }

    #[test]
    fn eps_boundary_examples() {
        let ball = RegionFamily::ball(2, 1.0);
        assert!(ball.eps_boundary_contains([0.0; 3], [1.05, 0.0, 0.0], 0.1));
        assert!(!ball.eps_boundary_contains([0.0; 3], [0.5, 0.0, 0.0], 0.1));
    }

    #[test]
    fn theta_examples() {
        let c = cone();
        assert!(c.theta_contains([0.75, 0.0, 0.0], [-0.6, 0.0, 0.0]));
        assert!(!c.theta_contains([0.75, 0.0, 0.0], [-0.4, 0.0, 0.0]));
        assert!(!c.theta_contains([0.5, 0.0, 0.0], [-0.6, 0.0, 0.0]));
        let ball = RegionFamily::ball(2, 1.0);
        assert!(ball.theta_enlarged_contains([0.0; 3], [1.0, 0.0, 0.0], 0.0));
        // interior point of the cone at |v| = 2, depth 0.3
        let v = [2.0, 0.0, 0.0];
        let x = [0.7, 0.0, 0.0];
        assert!((c.signed_distance(v, x) + 0.3).abs() < 1e-12);
        assert!(!c.theta_enlarged_contains(v, x, 0.1));
    }

    #[test]
    fn slope_set_examples() {
        let ball = RegionFamily::ball(2, 1.0);
        assert_eq!(ball.slope_set([0.0; 3], [0.2, 0.0, 0.0], 1e-6), SlopeSet::One);
        assert_eq!(ball.slope_set([0.0; 3], [5.0, 0.0, 0.0], 1e-6), SlopeSet::Zero);
        assert_eq!(ball.slope_set([0.0; 3], [1.0 + 1e-8, 0.0, 0.0], 1e-6), SlopeSet::Full);
    }

    #[test]
    fn full_ball_for_slow_speeds() {
        let c = cone();
        for s in [0.0, 0.3, 0.9, 1.0] {
            let sl = c.slice([s, 0.0, 0.0]);
            assert!(sl.is_ball());
            assert!(sl.contains([-1.0, 0.0, 0.0]));
        }
        assert!(!c.slice([1.0 + 1e-6, 0.0, 0.0]).is_ball());
    }

    #[test]
    fn global_radius_bounds_members() {
        let sb = RegionFamily::speed_ball(3, SpeedRadius::ClampedLinear { base: 1.0, slope: 1.0, min: 1.0, max: 2.0 });
        assert_eq!(sb.global_radius(), 2.0);
        assert!(sb.contains([10.0, 0.0, 0.0], [0.0, 0.0, 2.0]));
        assert!(!sb.contains([0.5, 0.0, 0.0], [0.0, 0.0, 1.6]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RegionFamily::new(4, RegionKind::Ball { radius: 1.0 }).is_err());
        assert!(RegionFamily::new(2, RegionKind::Ball { radius: 0.0 }).is_err());
        let bad = AngleProfile { theta_star: PI, k: 1.0 };
        assert!(RegionFamily::new(2, RegionKind::VisionCone { radius: 1.0, profile: bad }).is_err());
    }
}
