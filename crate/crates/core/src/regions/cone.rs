//! Distance to the boundary of a truncated cone, computed in the meridian
//! half-plane. A ball is the cone with `full = true`.
//!
//! In the half-plane `(a, ρ)`, `ρ ≥ 0`, the boundary consists of the arc
//! `r (cos φ, sin φ)`, `0 ≤ φ ≤ θ`, and, unless the cone is a full ball, the
//! segment from the apex to `r (cos θ, sin θ)`. Rotational symmetry makes
//! the planar distance equal to the distance in `R^2` or `R^3`.

use crate::geom::point_segment_dist2d;

#[inline]
pub(crate) fn boundary_distance(a: f64, rho: f64, r: f64, full: bool, cos_t: f64, sin_t: f64) -> f64 {
    let p = a.hypot(rho);
    if full {
        return (p - r).abs();
    }
    let edge = [r * cos_t, r * sin_t];
    // inside the angular sector the closest arc point is the radial projection
    let in_sector = a >= p * cos_t;
    let arc = if in_sector {
        (p - r).abs()
    } else {
        (a - edge[0]).hypot(rho - edge[1])
    };
    arc.min(point_segment_dist2d([a, rho], [0.0, 0.0], edge))
}
