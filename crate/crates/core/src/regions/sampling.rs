//! Random points on `∂K(v)` and on `Θ(v)`.

use rand::Rng;

use super::Slice;
use crate::geom::{self, Vec3};

/// Pieces of the boundary surrogate with their sampling weights.
#[derive(Clone, Copy, Debug)]
struct Pieces {
    cap: f64,
    lateral: f64,
    segment: f64,
}

fn pieces(sl: &Slice, with_segment: bool) -> Pieces {
    let r = sl.r;
    let (cap, lateral) = if sl.dim == 2 {
        (2.0 * sl.theta * r, if sl.is_ball() { 0.0 } else { 2.0 * r })
    } else {
        let pi = std::f64::consts::PI;
        (2.0 * pi * r * r * (1.0 - sl.cos_theta()), if sl.is_ball() { 0.0 } else { pi * r * r * sl.theta.sin() })
    };
    // the segment has zero (d−1)-measure in 3D; give it the weight of a
    // tube of radius r around it so it is still visited
    let segment = match (with_segment, sl.segment) {
        (true, Some((lo, hi))) => (hi - lo) * if sl.dim == 2 { 1.0 } else { r },
        _ => 0.0,
    };
    Pieces { cap, lateral, segment }
}

/// `(d−1)`-dimensional measure of `∂K(v)`.
pub fn boundary_measure(sl: &Slice) -> f64 {
    let p = pieces(sl, false);
    p.cap + p.lateral
}

fn frame(sl: &Slice) -> (Vec3, Vec3) {
    let p = geom::perp(sl.axis, sl.dim);
    let q = if sl.dim == 3 { geom::cross(sl.axis, p) } else { geom::ZERO };
    (p, q)
}

/// Point at polar angle `ang` from the axis, radius `len`, azimuth drawn
/// from `rng` (a random sign in 2D).
fn polar_point<R: Rng + ?Sized>(sl: &Slice, ang: f64, len: f64, rng: &mut R) -> Vec3 {
    let (p, q) = frame(sl);
    let side = if sl.dim == 2 {
        if rng.random::<bool>() { p } else { geom::scale(p, -1.0) }
    } else {
        let phi = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        geom::add(geom::scale(p, phi.cos()), geom::scale(q, phi.sin()))
    };
    geom::scale(geom::add(geom::scale(sl.axis, ang.cos()), geom::scale(side, ang.sin())), len)
}

fn sample<R: Rng + ?Sized>(sl: &Slice, rng: &mut R, with_segment: bool) -> Vec3 {
    let w = pieces(sl, with_segment);
    let u = rng.random::<f64>() * (w.cap + w.lateral + w.segment);
    if u < w.cap {
        // uniform on the arc or the spherical cap
        let ang = if sl.dim == 2 {
            sl.theta * rng.random::<f64>()
        } else {
            let c = 1.0 - rng.random::<f64>() * (1.0 - sl.cos_theta());
            c.clamp(-1.0, 1.0).acos()
        };
        polar_point(sl, ang, sl.r, rng)
    } else if u < w.cap + w.lateral {
        let t = if sl.dim == 2 { rng.random::<f64>() } else { rng.random::<f64>().sqrt() };
        polar_point(sl, sl.theta, sl.r * t, rng)
    } else {
        let (lo, hi) = sl.segment.expect("segment weight without segment");
        geom::scale(sl.axis, lo + (hi - lo) * rng.random::<f64>())
    }
}

/// Uniform point on `∂K(v)`.
pub fn sample_boundary<R: Rng + ?Sized>(sl: &Slice, rng: &mut R) -> Vec3 {
    sample(sl, rng, false)
}

/// Point on `Θ(v)`: uniform on `∂K(v)` mixed with the segment `R(v)` when present.
pub fn sample_theta<R: Rng + ?Sized>(sl: &Slice, rng: &mut R) -> Vec3 {
    sample(sl, rng, true)
}
