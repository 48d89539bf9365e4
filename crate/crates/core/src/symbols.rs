//! The 10j 2-symbol and its independent rotation-trace oracle.
//!
//! The closed form assigns to ten edge lengths and ten triangle spins the
//! real number `(-1)^{Σ s_t} cos(Σ s_t φ_t) / V`, where `φ_t` are the ten
//! interior dihedral angles of the 4-simplex and `V` is `4!` times its
//! volume. The oracle evaluates the same quantity a completely different
//! way: it embeds the simplex, aligns each boundary tetrahedron against its
//! reference frame (the two odd-position tetrahedra against the flipped
//! reference), reads off a U(1) angle per triangle from the mismatch of the
//! two alignments, and multiplies the resulting unit phases. The per-triangle
//! angles satisfy `ξ_t = π + ε φ_t (mod 2π)` with a single sign `ε` per
//! orientation; summing the two orientations reproduces the cosine.
//!
//! The module also carries Monte Carlo checks of the measure normalizations
//! behind the construction: the spherical measure, the triangle-orbit
//! measure (total mass `2A`), and the orbit-decomposition constant `κ`.

use crate::geometry4d::{
    dihedral_angle, embed, reference_tetrahedron, reference_triangle, simplex_v, triangle_area,
    EdgeLengthSet, GeomError,
};
use crate::so4::{
    align_tetrahedron, align_triangle, sigma_rotation, u1, u1_angle_of_tol, ChartRule,
    PhaseCocycle, Rotation, So4Error,
};
use crate::vec4::{self, wrap_angle, Vec4};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

/// Edges of the 4-simplex on vertices 0..5, lexicographic.
pub const PENT_EDGES: [[usize; 2]; 10] = [
    [0, 1], [0, 2], [0, 3], [0, 4], [1, 2], [1, 3], [1, 4], [2, 3], [2, 4], [3, 4],
];

/// Triangles of the 4-simplex on vertices 0..5, lexicographic.
pub const PENT_TRIANGLES: [[usize; 3]; 10] = [
    [0, 1, 2], [0, 1, 3], [0, 1, 4], [0, 2, 3], [0, 2, 4],
    [0, 3, 4], [1, 2, 3], [1, 2, 4], [1, 3, 4], [2, 3, 4],
];

/// Tetrahedron opposite each vertex: `PENT_TETS[i]` omits vertex `i`.
pub const PENT_TETS: [[usize; 4]; 5] = [
    [1, 2, 3, 4], [0, 2, 3, 4], [0, 1, 3, 4], [0, 1, 2, 4], [0, 1, 2, 3],
];

/// Sign of the tetrahedron opposite vertex `i` in the oriented boundary of
/// the standard 4-simplex (alternating, starting positive).
pub fn boundary_sign(i: usize) -> i8 {
    if i.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Index of a triangle in [`PENT_TRIANGLES`].
pub fn triangle_index(t: [usize; 3]) -> usize {
    let mut s = t;
    s.sort_unstable();
    PENT_TRIANGLES
        .iter()
        .position(|x| *x == s)
        .unwrap_or_else(|| panic!("{t:?} is not a triangle of the 4-simplex"))
}

fn permutation_parity_5(p: [usize; 5]) -> bool {
    let mut inv = 0;
    for a in 0..5 {
        for b in (a + 1)..5 {
            if p[a] > p[b] {
                inv += 1;
            }
        }
    }
    inv % 2 == 0
}

/// Ordered tetrahedron pair `(î, ĵ)` for a triangle: the complement pair
/// arranged so that `(i, j, a, b, c)` is an even permutation of `(0..5)`.
pub fn ordered_pair_for_triangle(t: [usize; 3]) -> (usize, usize) {
    let comp: Vec<usize> = (0..5).filter(|v| !t.contains(v)).collect();
    let (d, e) = (comp[0], comp[1]);
    if permutation_parity_5([d, e, t[0], t[1], t[2]]) {
        (d, e)
    } else {
        (e, d)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Align(#[from] So4Error),
    #[error("angle lemma violated: residual {residual:.3e}")]
    LemmaViolation { residual: f64 },
    #[error("statistics error: achieved relative error {achieved:.3e} exceeds target {target:.3e}")]
    Statistics { target: f64, achieved: f64 },
    #[error("bad input: {0}")]
    BadInput(String),
}

/// Labels of a 10j 2-symbol: ten edge lengths and ten triangle spins on the
/// standard 4-simplex, both in lexicographic face order.
#[derive(Debug, Clone, PartialEq)]
pub struct TenJInput {
    pub lengths: EdgeLengthSet,
    pub spins: [i64; 10],
}

impl TenJInput {
    pub fn new(lengths: EdgeLengthSet, spins: [i64; 10]) -> Result<Self, SymbolError> {
        if lengths.n_vertices() != 5 {
            return Err(SymbolError::BadInput(format!(
                "10j input needs 5 vertices, got {}",
                lengths.n_vertices()
            )));
        }
        Ok(TenJInput { lengths, spins })
    }

    pub fn spin(&self, t: [usize; 3]) -> i64 {
        self.spins[triangle_index(t)]
    }

    pub fn spin_sum(&self) -> i64 {
        self.spins.iter().sum()
    }
}

/// Value of a 10j 2-symbol together with its geometric ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct TenJResult {
    pub value: f64,
    /// `4!` times the 4-simplex volume.
    pub v: f64,
    /// Dihedral angles in [`PENT_TRIANGLES`] order.
    pub dihedrals: [f64; 10],
    /// `(-1)^{Σ s_t}`.
    pub sign: i8,
    /// `Σ s_t φ_t`.
    pub spin_angle: f64,
}

/// Closed-form 10j 2-symbol.
///
/// Length sets that fail to be a nondegenerate Euclidean 4-simplex report
/// [`GeomError::DegenerateSimplex`]; callers treat that as weight zero.
pub fn ten_j(input: &TenJInput) -> Result<TenJResult, SymbolError> {
    let v = simplex_v(&input.lengths)?;
    let emb = embed(&input.lengths, 1).map_err(|e| match e {
        GeomError::NotRealizable(msg) => GeomError::DegenerateSimplex(msg),
        other => other,
    })?;
    let mut dihedrals = [0.0; 10];
    let mut spin_angle = 0.0;
    for (idx, &t) in PENT_TRIANGLES.iter().enumerate() {
        let phi = dihedral_angle(&emb, t)?;
        dihedrals[idx] = phi;
        spin_angle += input.spins[idx] as f64 * phi;
    }
    let sign = if input.spin_sum() % 2 == 0 { 1 } else { -1 };
    let value = sign as f64 * spin_angle.cos() / v;
    Ok(TenJResult { value, v, dihedrals, sign, spin_angle })
}

/// Gauge knobs for the trace oracle; every observable must be invariant
/// under all of them except `flip_reference`, which rescales a single
/// tetrahedron's contribution by `(-1)^{Σ_i s_i}`.
#[derive(Debug, Clone, Default)]
pub struct GaugeOptions {
    /// Rotate the embedded simplex globally before aligning.
    pub global_rotation: Option<Rotation>,
    /// Rotate tetrahedron `i`'s reference by an SO(3) element.
    pub reference_twist: [Option<Rotation>; 5],
    /// Exchange tetrahedron `i`'s reference for its flipped partner.
    pub flip_reference: [bool; 5],
    /// Section chart for the phase cocycle.
    pub chart: ChartRule,
}

/// Per-tetrahedron alignment data: the composite `g k_△` for each face.
struct TetFrame {
    /// (face triple on pentagon vertices, `g ∘ k` for that face)
    faces: Vec<([usize; 3], Rotation)>,
}

impl TetFrame {
    fn face(&self, t: [usize; 3]) -> &Rotation {
        &self
            .faces
            .iter()
            .find(|(f, _)| *f == t)
            .expect("face not in tetrahedron")
            .1
    }
}

fn build_tet_frame(
    input: &TenJInput,
    points: &[Vec4],
    tet: usize,
    opts: &GaugeOptions,
) -> Result<TetFrame, SymbolError> {
    let verts = PENT_TETS[tet];
    let sub = input.lengths.subset(&verts);
    let reference = reference_tetrahedron(&sub)?;
    let mut ref_pts = reference.points.clone();
    let flip = (boundary_sign(tet) < 0) != opts.flip_reference[tet];
    if flip {
        let h = u1(PI);
        for p in &mut ref_pts {
            *p = h.apply(*p);
        }
    }
    if let Some(u) = &opts.reference_twist[tet] {
        for p in &mut ref_pts {
            *p = u.apply(*p);
        }
    }
    let actual: Vec<Vec4> = verts.iter().map(|&v| points[v]).collect();
    let g = align_tetrahedron(&ref_pts, &actual)?;
    let mut faces = Vec::with_capacity(4);
    for local in [[0usize, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
        let (la, lb, lc) = (local[0], local[1], local[2]);
        let global = [verts[la], verts[lb], verts[lc]];
        let canonical =
            reference_triangle(sub.get(la, lb), sub.get(lb, lc), sub.get(la, lc))?;
        let dst = (
            vec4::sub(ref_pts[lb], ref_pts[la]),
            vec4::sub(ref_pts[lc], ref_pts[la]),
        );
        let k = align_triangle(canonical, dst)?;
        faces.push((global, Rotation::compose(&g, &k)));
    }
    Ok(TetFrame { faces })
}

fn build_frames(
    input: &TenJInput,
    orientation: i8,
    opts: &GaugeOptions,
) -> Result<(Vec<Vec4>, Vec<TetFrame>), SymbolError> {
    let emb = embed(&input.lengths, orientation)?;
    let mut points = emb.points;
    if let Some(r) = &opts.global_rotation {
        for p in &mut points {
            *p = r.apply(*p);
        }
    }
    let mut frames = Vec::with_capacity(5);
    for tet in 0..5 {
        frames.push(build_tet_frame(input, &points, tet, opts)?);
    }
    Ok((points, frames))
}

/// U(1) mismatch angle per triangle: the angle of
/// `(g_ĵ k^ĵ)^{-1} (g_î k^î)` with the pair ordered by
/// [`ordered_pair_for_triangle`].
fn triangle_mismatch(
    frames: &[TetFrame],
    t: [usize; 3],
) -> Result<(Rotation, Rotation, f64), SymbolError> {
    let (i, j) = ordered_pair_for_triangle(t);
    let gk_i = *frames[i].face(t);
    let gk_j = *frames[j].face(t);
    let u = Rotation::compose(&gk_j.inverse(), &gk_i);
    let chi = u1_angle_of_tol(&u, 1e-6).map_err(|e| match e {
        So4Error::NotInU1 { residual } => SymbolError::LemmaViolation { residual },
        other => SymbolError::Align(other),
    })?;
    Ok((gk_i, gk_j, chi))
}

/// Trace oracle with explicit gauge options.
pub fn trace_oracle_with(
    input: &TenJInput,
    orientation: i8,
    opts: &GaugeOptions,
) -> Result<Complex64, SymbolError> {
    let (_, frames) = build_frames(input, orientation, opts)?;
    let mut product = Complex64::new(1.0, 0.0);
    for (idx, &t) in PENT_TRIANGLES.iter().enumerate() {
        let (gk_i, gk_j, _) = triangle_mismatch(&frames, t)?;
        let cocycle = PhaseCocycle::with_chart(input.spins[idx], opts.chart);
        product *= cocycle.phi(&gk_j).conj() * cocycle.phi(&gk_i);
    }
    Ok(product)
}

/// Phase product of the five-tetrahedron intertwiner trace at one
/// orientation of the embedded 4-simplex.
///
/// Equals `exp(i Σ_t s_t χ_t)` where `χ_t` is the per-triangle U(1)
/// mismatch angle; every `χ_t` is `π + ε φ_t (mod 2π)` for an
/// orientation-dependent global sign `ε`.
pub fn trace_oracle(input: &TenJInput, orientation: i8) -> Result<Complex64, SymbolError> {
    trace_oracle_with(input, orientation, &GaugeOptions::default())
}

/// Oracle evaluation of the 10j symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    /// `(Σ_η trace) / (2V)` — directly comparable to [`ten_j`].
    pub value: f64,
    /// `(Σ_η trace) / V` before dividing out the two-orientation sum.
    pub eta_sum: f64,
    pub v: f64,
    /// Imaginary part of the η-sum over `2V`; vanishes when the two
    /// orientations are complex conjugates.
    pub imag_residual: f64,
}

/// Evaluate the 10j symbol by the rotation-trace route: sum the trace over
/// the two orientations and divide by `V`, then by the orientation count.
pub fn ten_j_from_oracle(input: &TenJInput) -> Result<OracleValue, SymbolError> {
    ten_j_from_oracle_with(input, &GaugeOptions::default())
}

pub fn ten_j_from_oracle_with(
    input: &TenJInput,
    opts: &GaugeOptions,
) -> Result<OracleValue, SymbolError> {
    let v = simplex_v(&input.lengths)?;
    let plus = trace_oracle_with(input, 1, opts)?;
    let minus = trace_oracle_with(input, -1, opts)?;
    let sum = plus + minus;
    Ok(OracleValue {
        value: sum.re / (2.0 * v),
        eta_sum: sum.re / v,
        v,
        imag_residual: (sum.im / (2.0 * v)).abs(),
    })
}

/// Per-triangle record of the angle-lemma check.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaTriangle {
    pub triangle: [usize; 3],
    /// Extracted U(1) angle.
    pub xi: f64,
    /// Interior dihedral angle at the triangle.
    pub phi: f64,
    /// Sign preferred by this triangle alone.
    pub eps: i8,
    /// `|ξ - π - ε φ| mod 2π` under the global ε.
    pub residual: f64,
}

/// Outcome of the angle-lemma verification at one orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub orientation: i8,
    /// The single global sign relating `ξ_t` to `π + ε φ_t`.
    pub epsilon: i8,
    pub max_residual: f64,
    /// Worst deviation of the edge-exchange rotations from fixing the
    /// (e1, e4) plane pointwise.
    pub max_a_plane_residual: f64,
    pub triangles: Vec<LemmaTriangle>,
}

/// Verify the angle lemma on the positively oriented embedding.
pub fn verify_lemma(input: &TenJInput) -> Result<LemmaReport, SymbolError> {
    verify_lemma_oriented(input, 1)
}

/// Verify `ξ_t = π + ε φ_t (mod 2π)` with a single global `ε`, extracting
/// `ξ_t` through marked-triangle reordering rotations of both parities, and
/// check that the edge-exchange rotations fix the (e1, e4) plane.
pub fn verify_lemma_oriented(input: &TenJInput, orientation: i8) -> Result<LemmaReport, SymbolError> {
    let opts = GaugeOptions::default();
    let (_, frames) = build_frames(input, orientation, &opts)?;
    let emb = embed(&input.lengths, orientation)?;

    let mut xis = [0.0; 10];
    let mut phis = [0.0; 10];
    for (idx, &t) in PENT_TRIANGLES.iter().enumerate() {
        phis[idx] = dihedral_angle(&emb, t)?;
        // Alternate marked parity across the ten triangles so both branches
        // of the reordering rotation are exercised.
        let marked = if idx % 2 == 0 {
            t
        } else {
            [t[1], t[0], t[2]]
        };
        let sigma = sigma_rotation(marked, &input.lengths)?;
        let comp: Vec<usize> = (0..5).filter(|v| !t.contains(v)).collect();
        let (l, m) = if permutation_parity_5([marked[0], marked[1], marked[2], comp[0], comp[1]])
        {
            (comp[0], comp[1])
        } else {
            (comp[1], comp[0])
        };
        let gk_l = *frames[l].face(t);
        let gk_m = *frames[m].face(t);
        let h = Rotation::compose(
            &sigma.inverse(),
            &Rotation::compose(&Rotation::compose(&gk_l.inverse(), &gk_m), &sigma),
        );
        xis[idx] = u1_angle_of_tol(&h, 1e-6).map_err(|e| match e {
            So4Error::NotInU1 { residual } => SymbolError::LemmaViolation { residual },
            other => SymbolError::Align(other),
        })?;
    }

    let residual_for = |eps: f64| -> Vec<f64> {
        (0..10)
            .map(|i| wrap_angle(xis[i] - PI - eps * phis[i]).abs())
            .collect()
    };
    let plus = residual_for(1.0);
    let minus = residual_for(-1.0);
    let max_plus = plus.iter().cloned().fold(0.0, f64::max);
    let max_minus = minus.iter().cloned().fold(0.0, f64::max);
    let (epsilon, max_residual, residuals) = if max_plus <= max_minus {
        (1i8, max_plus, plus.clone())
    } else {
        (-1i8, max_minus, minus.clone())
    };
    if max_residual > 1e-6 {
        return Err(SymbolError::LemmaViolation { residual: max_residual });
    }

    let triangles = PENT_TRIANGLES
        .iter()
        .enumerate()
        .map(|(i, &t)| LemmaTriangle {
            triangle: t,
            xi: xis[i],
            phi: phis[i],
            eps: if plus[i] <= minus[i] { 1 } else { -1 },
            residual: residuals[i],
        })
        .collect();

    let max_a_plane_residual = a_rotation_plane_residual(input, &frames)?;

    Ok(LemmaReport {
        orientation,
        epsilon,
        max_residual,
        max_a_plane_residual,
        triangles,
    })
}

/// Edge-exchange rotations `a = σ_{ijk}^{-1} (k_{ijk})^{-1} k_{ijl} σ_{ijl}`
/// for faces of one tetrahedron sharing the edge (i, j) must fix e1 and e4.
fn a_rotation_plane_residual(
    input: &TenJInput,
    frames: &[TetFrame],
) -> Result<f64, SymbolError> {
    let e1 = [1.0, 0.0, 0.0, 0.0];
    let e4 = [0.0, 0.0, 0.0, 1.0];
    let mut worst: f64 = 0.0;
    for (tet, frame) in frames.iter().enumerate() {
        let verts = PENT_TETS[tet];
        for a in 0..4 {
            for b in 0..4 {
                if a == b {
                    continue;
                }
                let (i, j) = (verts[a], verts[b]);
                let rest: Vec<usize> = verts.iter().cloned().filter(|v| *v != i && *v != j).collect();
                let (k, l) = (rest[0], rest[1]);
                let mut fijk = [i, j, k];
                fijk.sort_unstable();
                let mut fijl = [i, j, l];
                fijl.sort_unstable();
                let sig_ijk = sigma_rotation([i, j, k], &input.lengths)?;
                let sig_ijl = sigma_rotation([i, j, l], &input.lengths)?;
                let k_ijk = frame.face(fijk);
                let k_ijl = frame.face(fijl);
                let a_rot = sig_ijk.inverse()
                    * k_ijk.inverse()
                    * *k_ijl
                    * sig_ijl;
                let r = vec4::distance(a_rot.apply(e1), e1)
                    .max(vec4::distance(a_rot.apply(e4), e4));
                worst = worst.max(r);
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Monte Carlo measure checks
// ---------------------------------------------------------------------------

/// Gaussian widths (absolute, in squared-length units) used to widen delta
/// functions; estimates are Richardson-extrapolated over the three values.
pub const DELTA_WIDTHS: [f64; 3] = [0.02, 0.01, 0.005];

/// Monte Carlo estimate with a one-sigma error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
}

impl McEstimate {
    fn from_samples(sum: f64, sum_sq: f64, n: u64) -> McEstimate {
        let n = n as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        McEstimate { value: mean, std_err: (var / n).sqrt() }
    }
}

fn gaussian_density(x: f64, w: f64) -> f64 {
    (-(x * x) / (2.0 * w * w)).exp() / (w * (2.0 * PI).sqrt())
}

/// Richardson combination eliminating the `w^2` and `w^4` widening bias for
/// widths in ratio 4:2:1.
fn richardson3(values: [f64; 3]) -> f64 {
    let s1 = (4.0 * values[1] - values[0]) / 3.0;
    let s2 = (4.0 * values[2] - values[1]) / 3.0;
    (16.0 * s2 - s1) / 15.0
}

fn gaussian4<R: Rng + ?Sized>(rng: &mut R) -> Vec4 {
    let mut v = [0.0; 4];
    for pair in 0..2 {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * PI * u2;
        v[2 * pair] = r * t.cos();
        v[2 * pair + 1] = r * t.sin();
    }
    v
}

fn gaussian1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn unit4<R: Rng + ?Sized>(rng: &mut R) -> Vec4 {
    vec4::normalize(gaussian4(rng))
}

/// MC estimate of the total spherical measure `(1/π) ∫ d⁴x δ(|x|² - l²)`.
///
/// Points are drawn with the squared radius importance-sampled from a
/// Gaussian proposal at the widest delta width (the proposal has the
/// heaviest tails of the three, so weights stay bounded).
///
/// The exact value of the defining integral is `π l²`; the often-quoted
/// round number `π l³` agrees with it only at `l = 1`.
pub fn mc_sphere_volume<R: Rng + ?Sized>(l: f64, samples: u64, rng: &mut R) -> McEstimate {
    let w_max = DELTA_WIDTHS[0];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let u = l * l + w_max * gaussian1(rng);
        let f = if u > 0.0 {
            let x = vec4::scale(unit4(rng), u.sqrt());
            let u_eval = vec4::dot(x, x);
            let vals = DELTA_WIDTHS.map(|w| gaussian_density(u_eval - l * l, w));
            PI * u_eval * richardson3(vals) / gaussian_density(u - l * l, w_max)
        } else {
            0.0
        };
        sum += f;
        sum_sq += f * f;
    }
    McEstimate::from_samples(sum, sum_sq, samples)
}

/// MC estimate of the triangle-orbit measure total `μ_T(T)`; equals twice
/// the triangle area for side lengths `(l, m, n)`.
///
/// Both sphere points are sampled; the relative angle is importance-sampled
/// so the closure constraint `|x + y| = n` is hit with useful frequency.
/// The cosine of the angle between uniform points on S³ has density
/// `(2/π) sqrt(1 - t²)`, which enters as an importance weight.
pub fn mc_triangle_measure<R: Rng + ?Sized>(
    l: f64,
    m: f64,
    n: f64,
    samples: u64,
    rng: &mut R,
) -> McEstimate {
    let w_max = DELTA_WIDTHS[0];
    let t_star = (n * n - l * l - m * m) / (2.0 * l * m);
    let sigma_t = w_max / (2.0 * l * m);
    let factor = PI * l * l * m * m;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let t = t_star + sigma_t * gaussian1(rng);
        let f = if t.abs() < 1.0 {
            let x_hat = unit4(rng);
            // Uniform direction orthogonal to x_hat.
            let w_dir = {
                let g = gaussian4(rng);
                vec4::normalize(vec4::perp_component(g, &[x_hat]))
            };
            let y_hat = vec4::add(vec4::scale(x_hat, t), vec4::scale(w_dir, (1.0 - t * t).sqrt()));
            let x = vec4::scale(x_hat, l);
            let y = vec4::scale(y_hat, m);
            let u = vec4::dot(vec4::add(x, y), vec4::add(x, y));
            let density_t = (2.0 / PI) * (1.0 - t * t).sqrt();
            let proposal = gaussian_density(t - t_star, sigma_t);
            let vals = DELTA_WIDTHS.map(|w| gaussian_density(u - n * n, w));
            factor * density_t * richardson3(vals) / proposal
        } else {
            0.0
        };
        sum += f;
        sum_sq += f * f;
    }
    McEstimate::from_samples(sum, sum_sq, samples)
}

/// Orbit-measure constant measured against the closed 4-simplex
/// configuration integral; `1/(64π)` reproduces the decomposition
/// `dμ = (1/V) dg Σ_η` with the spherical measures normalized by `1/π`.
pub const KAPPA_DERIVED: f64 = 1.0 / (64.0 * PI);

/// Alternative quoted values for κ; they disagree with each other and with
/// [`KAPPA_DERIVED`], and are carried for reporting.
pub const KAPPA_QUOTED: [f64; 2] = [
    PI * PI * PI * PI / 64.0,
    PI * PI * PI * PI * PI * PI * PI * PI * PI / 64.0,
];

struct PathGram {
    g: [[f64; 4]; 4],
    minors: [f64; 4],
}

/// Gram matrix of the consecutive edge vectors `v_a = P_{a+1} - P_a` of the
/// pentagon path, from squared distances.
fn path_gram(lengths: &EdgeLengthSet) -> Result<PathGram, SymbolError> {
    let d_sq = |i: usize, j: usize| -> f64 {
        if i == j {
            0.0
        } else {
            lengths.get_sq(i, j)
        }
    };
    let mut g = [[0.0; 4]; 4];
    for (a, row) in g.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = 0.5 * (d_sq(a, b + 1) + d_sq(a + 1, b) - d_sq(a, b) - d_sq(a + 1, b + 1));
        }
    }
    let mut minors = [0.0; 4];
    for k in 1..=4 {
        let m = DMatrix::from_fn(k, k, |r, c| g[r][c]);
        minors[k - 1] = m.determinant();
        if minors[k - 1] <= 0.0 {
            return Err(SymbolError::Geometry(GeomError::DegenerateSimplex(format!(
                "path Gram minor {k} is not positive"
            ))));
        }
    }
    Ok(PathGram { g, minors })
}

fn orthonormal_complement(span: &[Vec4]) -> Vec<Vec4> {
    let mut basis: Vec<Vec4> = Vec::new();
    for &v in span {
        let p = vec4::perp_component(v, &basis);
        let n = vec4::norm(p);
        if n > 1e-12 {
            basis.push(vec4::scale(p, 1.0 / n));
        }
    }
    let span_rank = basis.len();
    for i in 0..4 {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        let p = vec4::perp_component(e, &basis);
        let n = vec4::norm(p);
        if n > 1e-9 {
            basis.push(vec4::scale(p, 1.0 / n));
        }
    }
    basis.split_off(span_rank)
}

/// One-chunk κ estimator; see [`mc_kappa`].
fn mc_kappa_chunk(lengths: &EdgeLengthSet, v: f64, samples: u64, seed: u64) -> (f64, f64, u64) {
    let pg = path_gram(lengths).expect("checked by caller");
    let g = &pg.g;
    let s2 = pg.minors[1] / pg.minors[0];
    let s3 = pg.minors[2] / pg.minors[1];
    let s4 = pg.minors[3] / pg.minors[2];
    let w_max = DELTA_WIDTHS[0];
    let z_half = (s4 + 7.0 * w_max).sqrt() * 1.02;

    // Deterministic slice weights for the nine constraints solved exactly.
    let w1 = PI * PI * g[0][0];
    let w2 = 2.0 * PI * s2.sqrt() / g[0][0].sqrt();
    let w3 = PI / pg.minors[1].sqrt();
    let w4_pre = 1.0 / pg.minors[2].sqrt();
    let prefactor = (1.0 / 64.0) * w1 * w2 * w3 * w4_pre * v / (2.0 * PI.powi(5));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        // v1 uniform on its sphere.
        let v1 = vec4::scale(unit4(&mut rng), g[0][0].sqrt());
        // v2: fixed component along v1, uniform 2-sphere in the complement.
        let comp1 = orthonormal_complement(&[v1]);
        let dir3 = vec4::normalize({
            let gv = gaussian4(&mut rng);
            vec4::add(
                vec4::add(vec4::scale(comp1[0], gv[0]), vec4::scale(comp1[1], gv[1])),
                vec4::scale(comp1[2], gv[2]),
            )
        });
        let v2 = vec4::add(vec4::scale(v1, g[0][1] / g[0][0]), vec4::scale(dir3, s2.sqrt()));
        // v3: two linear constraints solved in span(v1, v2), uniform circle.
        let det2 = pg.minors[1];
        let c1 = (g[0][2] * g[1][1] - g[1][2] * g[0][1]) / det2;
        let c2 = (g[1][2] * g[0][0] - g[0][2] * g[0][1]) / det2;
        let v3_par = vec4::add(vec4::scale(v1, c1), vec4::scale(v2, c2));
        let comp2 = orthonormal_complement(&[v1, v2]);
        let theta: f64 = rng.gen_range(0.0..(2.0 * PI));
        let circle = vec4::add(
            vec4::scale(comp2[0], theta.cos()),
            vec4::scale(comp2[1], theta.sin()),
        );
        let v3 = vec4::add(v3_par, vec4::scale(circle, s3.sqrt()));
        // v4: three linear constraints solved, last quadratic one widened.
        let m3 = DMatrix::from_fn(3, 3, |r, c| g[r][c]);
        let rhs = nalgebra::DVector::from_vec(vec![g[0][3], g[1][3], g[2][3]]);
        let c = m3.lu().solve(&rhs).expect("positive definite");
        let v4_par = vec4::add(
            vec4::add(vec4::scale(v1, c[0]), vec4::scale(v2, c[1])),
            vec4::scale(v3, c[2]),
        );
        let comp3 = orthonormal_complement(&[v1, v2, v3]);
        let z: f64 = rng.gen_range(-z_half..z_half);
        let v4 = vec4::add(v4_par, vec4::scale(comp3[0], z));
        let u = vec4::dot(v4, v4);
        let vals = DELTA_WIDTHS.map(|w| gaussian_density(u - g[3][3], w));
        let f = prefactor * 2.0 * z_half * richardson3(vals);
        sum += f;
        sum_sq += f * f;
    }
    (sum, sum_sq, samples)
}

/// Measure the orbit-decomposition constant κ by Monte Carlo.
///
/// Nine of the ten squared-length delta constraints are solved exactly by
/// conditional sampling along the pentagon path; the last is widened to a
/// Gaussian and Richardson-extrapolated. The estimate times `V/(2π⁵)` is
/// the constant relating the constrained configuration measure to the
/// Haar-times-orientation decomposition.
pub fn mc_kappa<R: Rng + ?Sized>(
    lengths: &EdgeLengthSet,
    samples: u64,
    rng: &mut R,
) -> Result<McEstimate, SymbolError> {
    let v = simplex_v(lengths)?;
    path_gram(lengths)?;
    let n_chunks: u64 = 64;
    let seeds: Vec<u64> = (0..n_chunks).map(|_| rng.gen()).collect();
    let per_chunk = samples / n_chunks;
    let remainder = samples - per_chunk * n_chunks;
    let results: Vec<(f64, f64, u64)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let n = per_chunk + if (i as u64) < remainder { 1 } else { 0 };
            mc_kappa_chunk(lengths, v, n, seed)
        })
        .collect();
    let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0u64);
    for (s, ss, c) in results {
        sum += s;
        sum_sq += ss;
        n += c;
    }
    Ok(McEstimate::from_samples(sum, sum_sq, n))
}

/// Joint report of the measure normalization checks.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureReport {
    pub sphere_radius: f64,
    pub sphere_volume: McEstimate,
    /// Exact total of the defining integral: `π l²`.
    pub sphere_volume_formula: f64,
    /// The quoted round value `π l³` (agrees with the formula at l = 1).
    pub sphere_volume_quoted: f64,
    pub triangle_sides: [f64; 3],
    pub triangle_measure: McEstimate,
    /// `2 A(l, m, n)`.
    pub triangle_measure_expected: f64,
    pub kappa: McEstimate,
    pub kappa_derived: f64,
    pub kappa_quoted: [f64; 2],
}

/// Run the three measure normalization checks on the faces of a pentagon
/// length set: the sphere total on edge (0,1), the triangle-orbit total on
/// face (0,1,2), and the orbit constant κ on the full simplex.
pub fn measure_constant_check<R: Rng + ?Sized>(
    lengths: &EdgeLengthSet,
    samples: u64,
    target_rel_err: f64,
    rng: &mut R,
) -> Result<MeasureReport, SymbolError> {
    if lengths.n_vertices() != 5 {
        return Err(SymbolError::BadInput(
            "measure check needs a 5-vertex length set".into(),
        ));
    }
    let l = lengths.get(0, 1);
    let sphere = mc_sphere_volume(l, samples, rng);
    let (tl, tm, tn) = (lengths.get(0, 1), lengths.get(1, 2), lengths.get(0, 2));
    let triangle = mc_triangle_measure(tl, tm, tn, samples, rng);
    let kappa = mc_kappa(lengths, samples, rng)?;
    let report = MeasureReport {
        sphere_radius: l,
        sphere_volume: sphere,
        sphere_volume_formula: PI * l * l,
        sphere_volume_quoted: PI * l * l * l,
        triangle_sides: [tl, tm, tn],
        triangle_measure: triangle,
        triangle_measure_expected: 2.0 * triangle_area(tl, tm, tn)?,
        kappa,
        kappa_derived: KAPPA_DERIVED,
        kappa_quoted: KAPPA_QUOTED,
    };
    for (est, reference) in [
        (&report.sphere_volume, report.sphere_volume_formula),
        (&report.triangle_measure, report.triangle_measure_expected),
        (&report.kappa, report.kappa_derived),
    ] {
        let achieved = est.std_err / reference.abs();
        if achieved > target_rel_err {
            return Err(SymbolError::Statistics { target: target_rel_err, achieved });
        }
    }
    Ok(report)
}
