//! SO(4) rotations as pairs of unit quaternions.
//!
//! R^4 is identified with the quaternions via
//! `(e1, e2, e3, e4) = (1, i, j, k)`; a rotation acts as
//! `x -> qL * x * conj(qR)`. The pair `(qL, qR)` and its negation
//! `(-qL, -qR)` denote the same rotation, so comparisons quotient by that
//! sign. U(1) is the subgroup fixing the (e1, e2) plane pointwise; `h_theta`
//! rotates (e3, e4) by `theta` and corresponds to the pair
//! `(exp(i theta/2), exp(i theta/2))`.
//!
//! On top of the group arithmetic the module provides Haar sampling, the
//! unit-modulus phase cocycle `Phi^s` built from a two-chart section of
//! SO(4)/U(1), and the alignment rotations (triangle, tetrahedron, marked
//! triangle reordering) used to evaluate the rotation-trace form of a
//! 4-simplex weight.

use crate::geometry4d::{reference_triangle, EdgeLengthSet, GeomError};
use crate::vec4::{self, Vec4};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum So4Error {
    #[error("rotation does not lie in U(1): residual {residual:.3e}")]
    NotInU1 { residual: f64 },
    #[error("configurations are not congruent: residual {residual:.3e}")]
    NotCongruent { residual: f64 },
    #[error("matrix is not a rotation: residual {residual:.3e}")]
    NotRotation { residual: f64 },
    #[error("degenerate alignment input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Unit quaternion `w + x i + y j + z k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const ONE: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    pub fn from_vec(v: Vec4) -> Self {
        Quat { w: v[0], x: v[1], y: v[2], z: v[3] }
    }

    pub fn to_vec(self) -> Vec4 {
        [self.w, self.x, self.y, self.z]
    }

    pub fn conj(self) -> Self {
        Quat { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Quat { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    /// Unit complex `exp(i a)` embedded as `cos a + sin a i`.
    pub fn exp_i(a: f64) -> Quat {
        Quat { w: a.cos(), x: a.sin(), y: 0.0, z: 0.0 }
    }
}

/// An element of SO(4), stored exactly as a pair of unit quaternions acting
/// by `x -> qL * x * conj(qR)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub ql: Quat,
    pub qr: Quat,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation { ql: Quat::ONE, qr: Quat::ONE }
    }

    pub fn new(ql: Quat, qr: Quat) -> Self {
        Rotation { ql: ql.normalized(), qr: qr.normalized() }
    }

    /// Composition acting as `x -> a(b(x))`.
    pub fn compose(a: &Rotation, b: &Rotation) -> Rotation {
        Rotation::new(a.ql * b.ql, a.qr * b.qr)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation { ql: self.ql.conj(), qr: self.qr.conj() }
    }

    pub fn apply(&self, v: Vec4) -> Vec4 {
        (self.ql * Quat::from_vec(v) * self.qr.conj()).to_vec()
    }

    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for c in 0..4 {
            let mut e = [0.0; 4];
            e[c] = 1.0;
            let img = self.apply(e);
            for r in 0..4 {
                m[r][c] = img[r];
            }
        }
        m
    }

    /// Distance between rotations modulo the `(-qL, -qR)` sign quotient.
    pub fn dist(&self, other: &Rotation) -> f64 {
        let d = |a: Quat, b: Quat, s: f64| -> f64 {
            vec4::norm(vec4::sub(a.to_vec(), vec4::scale(b.to_vec(), s)))
        };
        let plus = d(self.ql, other.ql, 1.0) + d(self.qr, other.qr, 1.0);
        let minus = d(self.ql, other.ql, -1.0) + d(self.qr, other.qr, -1.0);
        plus.min(minus)
    }

    pub fn approx_eq(&self, other: &Rotation, tol: f64) -> bool {
        self.dist(other) < tol
    }
}

impl std::ops::Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation::compose(&self, &rhs)
    }
}

/// U(1) element `h_theta`: fixes (e1, e2) pointwise, rotates (e3, e4) by
/// `theta` (e3 towards e4).
pub fn u1(theta: f64) -> Rotation {
    let q = Quat::exp_i(theta / 2.0);
    Rotation { ql: q, qr: q }
}

/// Rotation of the (e1, e2) plane by `theta`, fixing (e3, e4) pointwise.
pub fn rot12(theta: f64) -> Rotation {
    Rotation { ql: Quat::exp_i(theta / 2.0), qr: Quat::exp_i(-theta / 2.0) }
}

/// Rotation of the (e2, e3) plane by `theta`, fixing e1 and e4; together
/// with [`rot12`] it generates the SO(3) subgroup fixing e4.
pub fn rot23(theta: f64) -> Rotation {
    let q = Quat::new((theta / 2.0).cos(), 0.0, 0.0, (theta / 2.0).sin());
    Rotation { ql: q, qr: q }
}

/// Rotation of angle pi around the (e1, e4) plane: negates e2 and e3.
pub fn a_pi() -> Rotation {
    let k = Quat::new(0.0, 0.0, 0.0, 1.0);
    Rotation { ql: k, qr: k }
}

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    (r * t.cos(), r * t.sin())
}

fn sample_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quat {
    let (a, b) = gaussian_pair(rng);
    let (c, d) = gaussian_pair(rng);
    Quat::new(a, b, c, d).normalized()
}

/// Haar-distributed rotation: both quaternions independent and uniform on
/// the unit 3-sphere.
pub fn haar_sample<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let ql = sample_unit_quaternion(rng);
    let qr = sample_unit_quaternion(rng);
    Rotation { ql, qr }
}

/// Extract `xi` with `g = u1(xi)`, on the principal branch `(-pi, pi]`.
///
/// Fails with the offending residual when `g` does not fix the (e1, e2)
/// plane pointwise within `tol`.
pub fn u1_angle_of_tol(g: &Rotation, tol: f64) -> Result<f64, So4Error> {
    let e1 = g.apply([1.0, 0.0, 0.0, 0.0]);
    let e2 = g.apply([0.0, 1.0, 0.0, 0.0]);
    let residual = vec4::distance(e1, [1.0, 0.0, 0.0, 0.0])
        .max(vec4::distance(e2, [0.0, 1.0, 0.0, 0.0]));
    if residual > tol {
        return Err(So4Error::NotInU1 { residual });
    }
    let e3 = g.apply([0.0, 0.0, 1.0, 0.0]);
    Ok(e3[3].atan2(e3[2]))
}

pub fn u1_angle_of(g: &Rotation) -> Result<f64, So4Error> {
    u1_angle_of_tol(g, 1e-8)
}

fn quat_from_rot3(r: &[[f64; 3]; 3]) -> Quat {
    // Shepperd's method: branch on the largest of trace and diagonal terms.
    let t = r[0][0] + r[1][1] + r[2][2];
    let q = if t >= r[0][0].max(r[1][1]).max(r[2][2]) {
        let s = (1.0 + t).sqrt() * 2.0;
        Quat::new(
            0.25 * s,
            (r[2][1] - r[1][2]) / s,
            (r[0][2] - r[2][0]) / s,
            (r[1][0] - r[0][1]) / s,
        )
    } else if r[0][0] >= r[1][1].max(r[2][2]) {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        Quat::new(
            (r[2][1] - r[1][2]) / s,
            0.25 * s,
            (r[0][1] + r[1][0]) / s,
            (r[0][2] + r[2][0]) / s,
        )
    } else if r[1][1] >= r[2][2] {
        let s = (1.0 - r[0][0] + r[1][1] - r[2][2]).sqrt() * 2.0;
        Quat::new(
            (r[0][2] - r[2][0]) / s,
            (r[0][1] + r[1][0]) / s,
            0.25 * s,
            (r[1][2] + r[2][1]) / s,
        )
    } else {
        let s = (1.0 - r[0][0] - r[1][1] + r[2][2]).sqrt() * 2.0;
        Quat::new(
            (r[1][0] - r[0][1]) / s,
            (r[0][2] + r[2][0]) / s,
            (r[1][2] + r[2][1]) / s,
            0.25 * s,
        )
    };
    q.normalized()
}

/// Decompose an orthogonal 4x4 matrix with determinant +1 into a quaternion
/// pair.
///
/// Uses the conjugation trick: `x -> M(x) * conj(M(e1))` is conjugation by
/// the left quaternion, recoverable by a standard 3x3 extraction.
pub fn from_matrix(m: &[[f64; 4]; 4]) -> Result<Rotation, So4Error> {
    let col = |c: usize| -> Vec4 { [m[0][c], m[1][c], m[2][c], m[3][c]] };
    let mut residual: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let d = vec4::dot(col(a), col(b)) - if a == b { 1.0 } else { 0.0 };
            residual = residual.max(d.abs());
        }
    }
    let det = vec4::det4(col(0), col(1), col(2), col(3));
    residual = residual.max((det - 1.0).abs());
    if residual > 1e-8 {
        return Err(So4Error::NotRotation { residual });
    }
    let c = Quat::from_vec(col(0)); // M(e1) = qL * conj(qR)
    let mut r3 = [[0.0; 3]; 3];
    for (bc, column) in (1..4).enumerate() {
        let img = Quat::from_vec(col(column)) * c.conj();
        let v = img.to_vec();
        for (br, row) in r3.iter_mut().enumerate() {
            row[bc] = v[br + 1];
        }
    }
    let ql = quat_from_rot3(&r3);
    let qr = (c.conj() * ql).normalized();
    let rot = Rotation { ql, qr };
    // Guard the branch choices above.
    let mm = rot.matrix();
    let mut err: f64 = 0.0;
    for r in 0..4 {
        for cidx in 0..4 {
            err = err.max((mm[r][cidx] - m[r][cidx]).abs());
        }
    }
    if err > 1e-7 {
        return Err(So4Error::NotRotation { residual: err });
    }
    Ok(rot)
}

/// Section charts for the phase cocycle.
///
/// Each unit quaternion `q = z1 + z2 j` (complex pair `z1 = w + x i`,
/// `z2 = y + z i`) yields a U(1) phase from `arg z1` (chart A) or
/// `-arg z2` (chart B). `Auto` picks the chart whose complex coordinate is
/// larger; the forced variants fall back to the other chart only when their
/// coordinate vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChartRule {
    #[default]
    Auto,
    PreferA,
    PreferB,
}

fn quat_phase(q: Quat, rule: ChartRule) -> f64 {
    let n1 = q.w * q.w + q.x * q.x;
    let n2 = q.y * q.y + q.z * q.z;
    let use_a = match rule {
        ChartRule::Auto => n1 >= n2,
        ChartRule::PreferA => n1 >= 1e-9,
        ChartRule::PreferB => n2 < 1e-9,
    };
    if use_a {
        q.x.atan2(q.w)
    } else {
        -q.z.atan2(q.y)
    }
}

/// Nowhere-vanishing unit-modulus function `Phi^s` on SO(4) with
/// `Phi^s(1) = 1` and `Phi^s(g h_theta) = exp(i s theta) Phi^s(g)`.
///
/// Realized as `exp(i s (phi(qL) + phi(qR)))` where `phi` is a per-component
/// section phase; the chart choice is invariant along U(1) cosets, so the
/// cocycle law holds exactly, and flipping both quaternion signs shifts the
/// total phase by `2 pi`, so the value only depends on the SO(4) element.
#[derive(Debug, Clone, Copy)]
pub struct PhaseCocycle {
    pub s: i64,
    pub chart: ChartRule,
}

impl PhaseCocycle {
    pub fn new(s: i64) -> Self {
        PhaseCocycle { s, chart: ChartRule::Auto }
    }

    pub fn with_chart(s: i64, chart: ChartRule) -> Self {
        PhaseCocycle { s, chart }
    }

    /// Section angle `theta(g)` with `g = k(g) h_{theta(g)}`.
    pub fn section_angle(&self, g: &Rotation) -> f64 {
        quat_phase(g.ql, self.chart) + quat_phase(g.qr, self.chart)
    }

    pub fn phi(&self, g: &Rotation) -> Complex64 {
        Complex64::from_polar(1.0, self.s as f64 * self.section_angle(g))
    }
}

/// Convenience wrapper: `Phi^s(g)` in the default charts.
pub fn phi_s(s: i64, g: &Rotation) -> Complex64 {
    PhaseCocycle::new(s).phi(g)
}

fn cross3(a: Vec4, b: Vec4) -> Vec4 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
        0.0,
    ]
}

fn orthonormal_pair(v1: Vec4, v2: Vec4) -> Result<(Vec4, Vec4), So4Error> {
    let n1 = vec4::norm(v1);
    if n1 < 1e-14 {
        return Err(So4Error::Degenerate("zero edge vector".into()));
    }
    let a1 = vec4::scale(v1, 1.0 / n1);
    let p = vec4::sub(v2, vec4::scale(a1, vec4::dot(v2, a1)));
    let n2 = vec4::norm(p);
    if n2 < 1e-12 * n1.max(vec4::norm(v2)) {
        return Err(So4Error::Degenerate("collinear triangle".into()));
    }
    Ok((a1, vec4::scale(p, 1.0 / n2)))
}

/// Unique SO(3) rotation (fixing e4) taking the vector pair `src` to the
/// congruent pair `dst`; both pairs must lie in the span of (e1, e2, e3).
pub fn align_triangle(src: (Vec4, Vec4), dst: (Vec4, Vec4)) -> Result<Rotation, So4Error> {
    let scale = vec4::norm(src.0).max(vec4::norm(src.1)).max(1e-300);
    for v in [src.0, src.1, dst.0, dst.1] {
        if v[3].abs() > 1e-9 * scale {
            return Err(So4Error::Degenerate(
                "triangle alignment inputs must lie in span(e1,e2,e3)".into(),
            ));
        }
    }
    let congruence = (vec4::norm(src.0) - vec4::norm(dst.0))
        .abs()
        .max((vec4::norm(src.1) - vec4::norm(dst.1)).abs())
        .max((vec4::dot(src.0, src.1) - vec4::dot(dst.0, dst.1)).abs() / scale);
    if congruence > 1e-8 * scale {
        return Err(So4Error::NotCongruent { residual: congruence });
    }
    let (a1, a2) = orthonormal_pair(src.0, src.1)?;
    let a3 = cross3(a1, a2);
    let (b1, b2) = orthonormal_pair(dst.0, dst.1)?;
    let b3 = cross3(b1, b2);
    let mut m = [[0.0; 4]; 4];
    for (a, b) in [(a1, b1), (a2, b2), (a3, b3)] {
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += b[r] * a[c];
            }
        }
    }
    m[3][3] = 1.0;
    let rot = from_matrix(&m)?;
    let residual = vec4::distance(rot.apply(src.0), dst.0)
        .max(vec4::distance(rot.apply(src.1), dst.1));
    if residual > 1e-9 * scale.max(1.0) {
        return Err(So4Error::NotCongruent { residual });
    }
    Ok(rot)
}

/// Unique SO(4) rotation mapping one 4-point configuration onto a congruent
/// one, vertexwise on difference vectors from the first point.
pub fn align_tetrahedron(reference: &[Vec4], dst: &[Vec4]) -> Result<Rotation, So4Error> {
    if reference.len() != 4 || dst.len() != 4 {
        return Err(So4Error::Degenerate(format!(
            "tetrahedron alignment needs 4 + 4 points, got {} + {}",
            reference.len(),
            dst.len()
        )));
    }
    let rv: Vec<Vec4> = (1..4).map(|i| vec4::sub(reference[i], reference[0])).collect();
    let dv: Vec<Vec4> = (1..4).map(|i| vec4::sub(dst[i], dst[0])).collect();
    let scale = rv.iter().map(|v| vec4::norm(*v)).fold(0.0, f64::max);
    let mut congruence: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            congruence = congruence.max((vec4::dot(rv[a], rv[b]) - vec4::dot(dv[a], dv[b])).abs());
        }
    }
    if congruence > 1e-8 * scale * scale {
        return Err(So4Error::NotCongruent { residual: congruence });
    }
    let frame = |v: &[Vec4]| -> Result<[Vec4; 4], So4Error> {
        let (a1, a2) = orthonormal_pair(v[0], v[1])?;
        let p = vec4::perp_component(v[2], &[a1, a2]);
        let n = vec4::norm(p);
        if n < 1e-12 * scale {
            return Err(So4Error::Degenerate("flat tetrahedron".into()));
        }
        let a3 = vec4::scale(p, 1.0 / n);
        let a4 = vec4::normalize(vec4::cross4(a1, a2, a3));
        Ok([a1, a2, a3, a4])
    };
    let av = frame(&rv)?;
    let bv = frame(&dv)?;
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] += bv[i][r] * av[i][c];
            }
        }
    }
    let rot = from_matrix(&m)?;
    let mut residual: f64 = 0.0;
    for (r, d) in rv.iter().zip(dv.iter()) {
        residual = residual.max(vec4::distance(rot.apply(*r), *d));
    }
    if residual > 1e-9 * scale.max(1.0) {
        return Err(So4Error::NotCongruent { residual });
    }
    Ok(rot)
}

fn permutation_parity_3(order: [usize; 3]) -> bool {
    // true = even
    let mut inversions = 0;
    for a in 0..3 {
        for b in (a + 1)..3 {
            if order[a] > order[b] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

/// Position of the directed edge `p -> q` in the standard placement of the
/// marked triple `(i, j, k)` with pair `(x, z)` from [`reference_triangle`].
fn directed_edge_position(triple: [usize; 3], x: Vec4, z: Vec4, p: usize, q: usize) -> Vec4 {
    let [i, j, k] = triple;
    let y = vec4::sub(z, x);
    if (p, q) == (i, j) {
        x
    } else if (p, q) == (j, i) {
        vec4::scale(x, -1.0)
    } else if (p, q) == (i, k) {
        z
    } else if (p, q) == (k, i) {
        vec4::scale(z, -1.0)
    } else if (p, q) == (j, k) {
        y
    } else if (p, q) == (k, j) {
        vec4::scale(y, -1.0)
    } else {
        panic!("edge ({p},{q}) is not an edge of {triple:?}");
    }
}

/// Rotation relating the standard placement of a marked triangle ordering
/// to the placement of its ascending ordering.
///
/// For an even marked ordering this is a rotation of the (e1, e2) plane;
/// for an odd ordering it picks up the extra factor [`a_pi`]. Either way it
/// normalizes U(1): even parity commutes with every `h_theta`, odd parity
/// conjugates `h_theta` to `h_{-theta}`.
pub fn sigma_rotation(marked: [usize; 3], lengths: &EdgeLengthSet) -> Result<Rotation, So4Error> {
    let [i, j, k] = marked;
    if i == j || j == k || i == k {
        return Err(So4Error::Degenerate(format!(
            "marked triple {marked:?} has repeated vertices"
        )));
    }
    let mut sorted = marked;
    sorted.sort_unstable();
    let even = permutation_parity_3(marked);

    let (xm, zm) = reference_triangle(
        lengths.get(i, j),
        lengths.get(j, k),
        lengths.get(i, k),
    )?;
    let (xc, zc) = reference_triangle(
        lengths.get(sorted[0], sorted[1]),
        lengths.get(sorted[1], sorted[2]),
        lengths.get(sorted[0], sorted[2]),
    )?;

    // Positions of the directed edges (a->b), (a->c) in both placements.
    let u1v = directed_edge_position(marked, xm, zm, sorted[0], sorted[1]);
    let u2v = directed_edge_position(marked, xm, zm, sorted[0], sorted[2]);
    let det_u = u1v[0] * u2v[1] - u1v[1] * u2v[0];
    if det_u.abs() < 1e-14 {
        return Err(So4Error::Degenerate("flat marked triangle".into()));
    }
    // Solve the 2x2 system M [u1 u2] = [xc zc] in the (e1, e2) plane.
    let inv = [
        [u2v[1] / det_u, -u2v[0] / det_u],
        [-u1v[1] / det_u, u1v[0] / det_u],
    ];
    let mut m2 = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m2[r][c] = xc[r] * inv[0][c] + zc[r] * inv[1][c];
        }
    }
    let delta = m2[1][0].atan2(m2[0][0]);
    let sigma = if even {
        rot12(delta)
    } else {
        rot12(delta) * a_pi()
    };
    let scale = lengths.max_length();
    let residual = vec4::distance(sigma.apply(u1v), xc).max(vec4::distance(sigma.apply(u2v), zc));
    if residual > 1e-9 * scale {
        return Err(So4Error::NotCongruent { residual });
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const E1: Vec4 = [1.0, 0.0, 0.0, 0.0];
    const E2: Vec4 = [0.0, 1.0, 0.0, 0.0];
    const E3: Vec4 = [0.0, 0.0, 1.0, 0.0];
    const E4: Vec4 = [0.0, 0.0, 0.0, 1.0];

    fn mat_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                for t in 0..4 {
                    m[r][c] += a[r][t] * b[t][c];
                }
            }
        }
        m
    }

    #[test]
    fn compose_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = haar_sample(&mut rng);
            let b = haar_sample(&mut rng);
            let lhs = Rotation::compose(&a, &b).matrix();
            let rhs = mat_mul(&a.matrix(), &b.matrix());
            for r in 0..4 {
                for c in 0..4 {
                    assert!((lhs[r][c] - rhs[r][c]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn compose_identity_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = haar_sample(&mut rng);
        assert!(Rotation::compose(&g, &Rotation::identity()).approx_eq(&g, 1e-12));
        let gi = Rotation::compose(&g, &g.inverse());
        assert!(gi.approx_eq(&Rotation::identity(), 1e-12));
    }

    #[test]
    fn u1_action() {
        let h = u1(std::f64::consts::PI);
        assert!(vec4::distance(h.apply(E1), E1) < 1e-15);
        assert!(vec4::distance(h.apply(E3), vec4::scale(E3, -1.0)) < 1e-12);
        let a = u1(0.4);
        let b = u1(1.1);
        assert!((a * b).approx_eq(&u1(1.5), 1e-12));
        assert!(u1(0.0).approx_eq(&Rotation::identity(), 1e-15));
    }

    #[test]
    fn u1_angle_extraction() {
        assert!((u1_angle_of(&u1(0.7)).unwrap() - 0.7).abs() < 1e-12);
        assert!(u1_angle_of(&Rotation::identity()).unwrap().abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = haar_sample(&mut rng);
        assert!(matches!(u1_angle_of(&g), Err(So4Error::NotInU1 { .. })));
    }

    #[test]
    fn a_pi_matrix_and_u1_inversion() {
        let a = a_pi();
        assert!(vec4::distance(a.apply(E1), E1) < 1e-15);
        assert!(vec4::distance(a.apply(E2), vec4::scale(E2, -1.0)) < 1e-15);
        assert!(vec4::distance(a.apply(E3), vec4::scale(E3, -1.0)) < 1e-15);
        assert!(vec4::distance(a.apply(E4), E4) < 1e-15);
        // a_pi h^{-1} a_pi = h
        let h = u1(0.83);
        let conj = a * h.inverse() * a;
        assert!(conj.approx_eq(&h, 1e-12));
    }

    #[test]
    fn from_matrix_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let g = haar_sample(&mut rng);
            let back = from_matrix(&g.matrix()).unwrap();
            assert!(back.approx_eq(&g, 1e-9), "dist = {}", back.dist(&g));
        }
    }

    #[test]
    fn haar_sample_is_seeded_and_reproducible() {
        let a = haar_sample(&mut ChaCha8Rng::seed_from_u64(7));
        let b = haar_sample(&mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn haar_first_moments_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let mut mean = [[0.0; 4]; 4];
        let mut m2 = 0.0;
        for _ in 0..n {
            let g = haar_sample(&mut rng);
            let m = g.matrix();
            for r in 0..4 {
                for c in 0..4 {
                    mean[r][c] += m[r][c];
                }
            }
            m2 += m[0][0] * m[0][0];
        }
        let sigma = 3.0 / (n as f64).sqrt(); // entries have variance ~ 1/4
        for row in &mean {
            for &v in row {
                assert!((v / n as f64).abs() < sigma, "first moment too large: {v}");
            }
        }
        // E[(g e1 . e1)^2] = 1/4 for a Haar column.
        let second = m2 / n as f64;
        assert!((second - 0.25).abs() < 0.01, "second moment {second}");
    }

    #[test]
    fn phase_cocycle_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for s in [-10i64, -3, -1, 0, 1, 2, 7, 10] {
            let c = PhaseCocycle::new(s);
            for _ in 0..200 {
                let g = haar_sample(&mut rng);
                let theta: f64 = rng.gen_range(-6.0..6.0);
                let lhs = c.phi(&(g * u1(theta)));
                let rhs = Complex64::from_polar(1.0, s as f64 * theta) * c.phi(&g);
                assert!((lhs - rhs).norm() < 1e-10, "s={s}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn phase_cocycle_basics() {
        let c = PhaseCocycle::new(5);
        assert!((c.phi(&Rotation::identity()) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let theta = 0.37;
        let expected = Complex64::from_polar(1.0, 5.0 * theta);
        assert!((c.phi(&u1(theta)) - expected).norm() < 1e-12);
        // Nowhere vanishing, sign-quotient invariant.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let g = haar_sample(&mut rng);
            assert!((c.phi(&g).norm() - 1.0).abs() < 1e-12);
            let neg = Rotation { ql: Quat::new(-g.ql.w, -g.ql.x, -g.ql.y, -g.ql.z), qr: Quat::new(-g.qr.w, -g.qr.x, -g.qr.y, -g.qr.z) };
            assert!((c.phi(&g) - c.phi(&neg)).norm() < 1e-10);
        }
    }

    #[test]
    fn phase_cocycle_law_holds_in_both_forced_charts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for chart in [ChartRule::PreferA, ChartRule::PreferB] {
            let c = PhaseCocycle::with_chart(3, chart);
            for _ in 0..100 {
                let g = haar_sample(&mut rng);
                let theta: f64 = rng.gen_range(-3.0..3.0);
                let lhs = c.phi(&(g * u1(theta)));
                let rhs = Complex64::from_polar(1.0, 3.0 * theta) * c.phi(&g);
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn align_triangle_identity_and_rotation() {
        let (x0, z0) = reference_triangle(1.0, 1.2, 0.9).unwrap();
        let k = align_triangle((x0, z0), (x0, z0)).unwrap();
        assert!(k.approx_eq(&Rotation::identity(), 1e-10));

        let rho = rot12(0.8);
        let dst = (rho.apply(x0), rho.apply(z0));
        let k = align_triangle((x0, z0), dst).unwrap();
        assert!(k.approx_eq(&rho, 1e-10));
        assert!(vec4::distance(k.apply(x0), dst.0) < 1e-12);

        // Fixes e4 by construction.
        assert!(vec4::distance(k.apply(E4), E4) < 1e-12);
    }

    #[test]
    fn align_triangle_rejects_incongruent() {
        let (x0, z0) = reference_triangle(1.0, 1.0, 1.0).unwrap();
        let (x1, z1) = reference_triangle(1.0, 1.0, 1.3).unwrap();
        assert!(matches!(
            align_triangle((x0, z0), (x1, z1)),
            Err(So4Error::NotCongruent { .. })
        ));
    }

    #[test]
    fn align_tetrahedron_roundtrip() {
        let l = EdgeLengthSet::new(4, vec![1.0, 1.2, 0.9, 1.1, 1.3, 0.95]).unwrap();
        let reference = crate::geometry4d::reference_tetrahedron(&l).unwrap();
        let refq: Vec<Vec4> = reference.points.clone();
        assert!(align_tetrahedron(&refq, &refq)
            .unwrap()
            .approx_eq(&Rotation::identity(), 1e-10));

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = haar_sample(&mut rng);
        let dst: Vec<Vec4> = refq.iter().map(|p| g.apply(*p)).collect();
        let got = align_tetrahedron(&refq, &dst).unwrap();
        assert!(got.approx_eq(&g, 1e-9), "dist {}", got.dist(&g));
        for (p, d) in refq.iter().zip(dst.iter()) {
            assert!(vec4::distance(got.apply(*p), *d) < 1e-11);
        }

        let theta = 1.234;
        let dst: Vec<Vec4> = refq.iter().map(|p| u1(theta).apply(*p)).collect();
        let got = align_tetrahedron(&refq, &dst).unwrap();
        assert!(got.approx_eq(&u1(theta), 1e-9));
    }

    #[test]
    fn sigma_rotation_parities() {
        let l = EdgeLengthSet::new(3, vec![1.0, 1.2, 0.9]).unwrap();
        // Ascending order: already canonical.
        let s = sigma_rotation([0, 1, 2], &l).unwrap();
        assert!(s.approx_eq(&Rotation::identity(), 1e-10));

        // Even non-trivial ordering commutes with U(1).
        let s = sigma_rotation([1, 2, 0], &l).unwrap();
        let h = u1(0.9);
        assert!((s * h).approx_eq(&(h * s), 1e-10));
        assert!(vec4::distance(s.apply(E4), E4) < 1e-12);

        // Odd ordering conjugates h to h^{-1}.
        let s = sigma_rotation([1, 0, 2], &l).unwrap();
        let conj = s.inverse() * h * s;
        assert!(conj.approx_eq(&h.inverse(), 1e-10));
    }
}
