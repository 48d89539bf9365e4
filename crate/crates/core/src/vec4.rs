//! Small helpers for vectors in R^4.
//!
//! Points and directions are plain `[f64; 4]` throughout the crate; this
//! module holds the handful of operations everything else leans on.

use std::f64::consts::PI;

pub type Vec4 = [f64; 4];

pub fn add(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn sub(a: Vec4, b: Vec4) -> Vec4 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

pub fn scale(a: Vec4, s: f64) -> Vec4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

pub fn dot(a: Vec4, b: Vec4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm(a: Vec4) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: Vec4, b: Vec4) -> f64 {
    norm(sub(a, b))
}

pub fn normalize(a: Vec4) -> Vec4 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Determinant of the 4x4 matrix with the given columns.
pub fn det4(c0: Vec4, c1: Vec4, c2: Vec4, c3: Vec4) -> f64 {
    let m = [c0, c1, c2, c3];
    let minor = |r: [usize; 3], c: [usize; 3]| -> f64 {
        m[c[0]][r[0]] * (m[c[1]][r[1]] * m[c[2]][r[2]] - m[c[1]][r[2]] * m[c[2]][r[1]])
            - m[c[1]][r[0]] * (m[c[0]][r[1]] * m[c[2]][r[2]] - m[c[0]][r[2]] * m[c[2]][r[1]])
            + m[c[2]][r[0]] * (m[c[0]][r[1]] * m[c[1]][r[2]] - m[c[0]][r[2]] * m[c[1]][r[1]])
    };
    m[0][0] * minor([1, 2, 3], [1, 2, 3]) - m[0][1] * minor([0, 2, 3], [1, 2, 3])
        + m[0][2] * minor([0, 1, 3], [1, 2, 3])
        - m[0][3] * minor([0, 1, 2], [1, 2, 3])
}

/// The vector `v` with `det4(a, b, c, v) = |v|^2 > 0`; the 4D analogue of
/// the cross product, orthogonal to `a`, `b` and `c`.
pub fn cross4(a: Vec4, b: Vec4, c: Vec4) -> Vec4 {
    let mut v = [0.0; 4];
    for (i, out) in v.iter_mut().enumerate() {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        *out = det4(a, b, c, e);
    }
    v
}

/// Wrap an angle to the principal branch `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Component of `v` orthogonal to the span of `basis` (vectors need not be
/// orthogonal; Gram-Schmidt is run on a copy).
pub fn perp_component(v: Vec4, basis: &[Vec4]) -> Vec4 {
    let mut ortho: Vec<Vec4> = Vec::with_capacity(basis.len());
    for &b in basis {
        let mut u = b;
        for &o in &ortho {
            u = sub(u, scale(o, dot(u, o)));
        }
        let n = norm(u);
        if n > 1e-14 {
            ortho.push(scale(u, 1.0 / n));
        }
    }
    let mut r = v;
    for &o in &ortho {
        r = sub(r, scale(o, dot(r, o)));
    }
    r
}
