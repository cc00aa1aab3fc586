//! Small vector helpers and samplers shared by the geometry code.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Vec3 = [f64; 3];

pub const ZERO: Vec3 = [0.0; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy(a: Vec3, s: f64, b: Vec3) -> Vec3 {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm2(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Unit vector along `v`, or `e1` when `v` vanishes.
#[inline]
pub fn unit_or_e1(v: Vec3) -> Vec3 {
    let n = norm(v);
    if n > 0.0 {
        scale(v, 1.0 / n)
    } else {
        [1.0, 0.0, 0.0]
    }
}

/// Pads a slice of length `d` into a `Vec3`.
pub fn from_slice(s: &[f64]) -> Vec3 {
    let mut out = ZERO;
    out[..s.len()].copy_from_slice(s);
    out
}

/// Unit vector orthogonal to the unit vector `u`. In two dimensions the
/// result stays in the plane; in three it is one of two basis vectors.
pub fn perp(u: Vec3, dim: usize) -> Vec3 {
    if dim == 2 {
        return [-u[1], u[0], 0.0];
    }
    let pick = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let w = axpy(pick, -dot(pick, u), u);
    scale(w, 1.0 / norm(w))
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Uniform direction on the unit sphere of `R^dim`.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec3 {
    loop {
        let mut g = ZERO;
        for c in g.iter_mut().take(dim) {
            *c = StandardNormal.sample(rng);
        }
        let n = norm(g);
        if n > 1e-12 {
            return scale(g, 1.0 / n);
        }
    }
}

/// Uniform point in the ball `B(0, r)` of `R^dim`.
pub fn random_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, r: f64) -> Vec3 {
    let u: f64 = rng.random();
    scale(random_unit(rng, dim), r * u.powf(1.0 / dim as f64))
}

/// Volume of the unit ball in `R^dim` for `dim` in 1..=3.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("dimension {dim} not supported"),
    }
}

/// Angle between nonzero `a` and `b`, in `[0, π]`.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    let c = cross(a, b);
    norm(c).atan2(dot(a, b))
}

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, 0.0);
    for k in 0..n {
        let p2 = p1;
        p1 = p0;
        p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
    }
    (p0, n as f64 * (z * p0 - p1) / (z * z - 1.0))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Distance from `p` to the segment `[a, b]` in the plane.
#[inline]
pub fn point_segment_dist2d(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let dx = ap[0] - t * ab[0];
    let dy = ap[1] - t * ab[1];
    (dx * dx + dy * dy).sqrt()
}
