//! Metric geometry of Euclidean simplices from edge lengths.
//!
//! Everything here is driven by squared-distance data: triangle areas via
//! Heron's formula, k-simplex volumes via Cayley–Menger determinants,
//! coordinate embeddings via a pivoted symmetric factorization of the Gram
//! matrix, and interior dihedral angles from embedded points. The module
//! also builds the canonical reference triangle and reference tetrahedron
//! used to normalize intertwiner data elsewhere in the crate.
//!
//! Conventions:
//! - A set of edge lengths for a k-simplex is stored against the vertex
//!   indices `0..=k` with pairs enumerated lexicographically.
//! - Embeddings place vertex 0 at the origin; a 5-point embedding carries
//!   an orientation sign equal to the determinant sign of its difference
//!   vectors.
//! - `acos` arguments are clamped to `[-1, 1]` so near-degenerate
//!   configurations yield angles instead of NaN.

use crate::vec4::{self, Vec4};
use nalgebra::DMatrix;
use thiserror::Error;

/// Relative tolerance against which Cayley–Menger determinants are declared
/// degenerate, scaled by `max_length^(2k)`.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("edge length must be strictly positive (got {0})")]
    NonPositiveLength(f64),
    #[error("bad edge length set: {0}")]
    BadLengthSet(String),
    #[error("lengths are not realizable in Euclidean space: {0}")]
    NotRealizable(String),
    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("bad argument: {0}")]
    BadInput(String),
}

/// Complete assignment of positive lengths to the `C(n,2)` vertex pairs of
/// an `(n-1)`-simplex, pairs enumerated lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLengthSet {
    n_vertices: usize,
    lengths: Vec<f64>,
}

impl EdgeLengthSet {
    /// Build from lengths listed in lexicographic pair order
    /// `(0,1), (0,2), ..., (n-2,n-1)`.
    pub fn new(n_vertices: usize, lengths: Vec<f64>) -> Result<Self, GeomError> {
        let expected = n_vertices * (n_vertices - 1) / 2;
        if n_vertices < 2 {
            return Err(GeomError::BadLengthSet(format!(
                "need at least 2 vertices, got {n_vertices}"
            )));
        }
        if lengths.len() != expected {
            return Err(GeomError::BadLengthSet(format!(
                "expected {expected} lengths for {n_vertices} vertices, got {}",
                lengths.len()
            )));
        }
        for &l in &lengths {
            if l <= 0.0 || !l.is_finite() {
                return Err(GeomError::NonPositiveLength(l));
            }
        }
        Ok(Self { n_vertices, lengths })
    }

    /// All edges set to the same length (regular simplex).
    pub fn regular(n_vertices: usize, l: f64) -> Result<Self, GeomError> {
        Self::new(n_vertices, vec![l; n_vertices * (n_vertices - 1) / 2])
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        assert!(a != b && b < self.n_vertices, "bad vertex pair ({i},{j})");
        a * self.n_vertices - a * (a + 1) / 2 + (b - a - 1)
    }

    /// Length of the edge between vertices `i` and `j` (order irrelevant).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lengths[self.pair_index(i, j)]
    }

    pub fn get_sq(&self, i: usize, j: usize) -> f64 {
        let l = self.get(i, j);
        l * l
    }

    /// Lengths in lexicographic pair order.
    pub fn as_slice(&self) -> &[f64] {
        &self.lengths
    }

    pub fn max_length(&self) -> f64 {
        self.lengths.iter().cloned().fold(0.0, f64::max)
    }

    /// Restriction to a sub-simplex on the given vertices; vertex `verts[a]`
    /// of `self` becomes vertex `a` of the result.
    pub fn subset(&self, verts: &[usize]) -> EdgeLengthSet {
        let k = verts.len();
        let mut lengths = Vec::with_capacity(k * (k - 1) / 2);
        for a in 0..k {
            for b in (a + 1)..k {
                lengths.push(self.get(verts[a], verts[b]));
            }
        }
        EdgeLengthSet { n_vertices: k, lengths }
    }

    /// Strict triangle inequality on all C(n,3) triangle faces.
    pub fn all_triangles_strict(&self) -> bool {
        let n = self.n_vertices;
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let (l, m, nn) = (self.get(a, b), self.get(b, c), self.get(a, c));
                    if l + m <= nn || m + nn <= l || l + nn <= m {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Labeled points in R^4 realizing a simplex, vertex 0 at the origin.
///
/// For a 5-point embedding `orientation` equals the sign of the determinant
/// of the four difference vectors from vertex 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub points: Vec<Vec4>,
    pub orientation: i8,
}

impl Embedding {
    /// Wrap explicit points; for 5 points the orientation is read off the
    /// determinant of the difference vectors.
    pub fn from_points(points: Vec<Vec4>) -> Self {
        let orientation = if points.len() == 5 {
            let d = diff_det(&points);
            if d < 0.0 {
                -1
            } else {
                1
            }
        } else {
            1
        };
        Embedding { points, orientation }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        vec4::distance(self.points[i], self.points[j])
    }

    /// Largest absolute error between embedded distances and a length set.
    pub fn max_distance_error(&self, lengths: &EdgeLengthSet) -> f64 {
        let n = self.points.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.distance(i, j) - lengths.get(i, j)).abs());
            }
        }
        worst
    }
}

fn diff_det(points: &[Vec4]) -> f64 {
    vec4::det4(
        vec4::sub(points[1], points[0]),
        vec4::sub(points[2], points[0]),
        vec4::sub(points[3], points[0]),
        vec4::sub(points[4], points[0]),
    )
}

/// Gram matrix of difference vectors from vertex 0, together with its
/// numerical rank and a factor `X` with `X X^T = G` (rows are embedded
/// difference vectors).
#[derive(Debug, Clone)]
pub struct GramFactorization {
    pub gram: DMatrix<f64>,
    pub rank: usize,
    pub factor: DMatrix<f64>,
}

/// Area of a triangle with side lengths `l, m, n`.
///
/// Returns the Heron area when the strict triangle inequality holds and
/// exactly zero otherwise (degenerate and violating configurations alike).
pub fn triangle_area(l: f64, m: f64, n: f64) -> Result<f64, GeomError> {
    for &x in &[l, m, n] {
        if x <= 0.0 || !x.is_finite() {
            return Err(GeomError::NonPositiveLength(x));
        }
    }
    if l + m <= n || m + n <= l || l + n <= m {
        return Ok(0.0);
    }
    let (a2, b2, c2) = (l * l, m * m, n * n);
    let sixteen_a_sq = 2.0 * (a2 * b2 + b2 * c2 + c2 * a2) - a2 * a2 - b2 * b2 - c2 * c2;
    if sixteen_a_sq <= 0.0 {
        return Ok(0.0);
    }
    Ok(0.25 * sixteen_a_sq.sqrt())
}

fn cayley_menger_matrix(lengths: &EdgeLengthSet) -> DMatrix<f64> {
    let n = lengths.n_vertices();
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 1..=n {
        m[(0, i)] = 1.0;
        m[(i, 0)] = 1.0;
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[(i + 1, j + 1)] = lengths.get_sq(i, j);
            }
        }
    }
    m
}

/// k-dimensional volume of a k-simplex from its edge lengths via the
/// Cayley–Menger determinant.
///
/// Returns 0 when the determinant is within the degeneracy tolerance and a
/// [`GeomError::NotRealizable`] when its sign is wrong beyond tolerance.
pub fn cm_volume(k: usize, lengths: &EdgeLengthSet) -> Result<f64, GeomError> {
    if !(1..=4).contains(&k) {
        return Err(GeomError::BadInput(format!("k must be in 1..=4, got {k}")));
    }
    if lengths.n_vertices() != k + 1 {
        return Err(GeomError::BadLengthSet(format!(
            "k={k} needs {} vertices, length set has {}",
            k + 1,
            lengths.n_vertices()
        )));
    }
    let det = cayley_menger_matrix(lengths).determinant();
    // CM determinant of a realizable k-simplex has sign (-1)^(k+1).
    let signed = if k.is_multiple_of(2) { -det } else { det };
    let scale = lengths.max_length();
    let tol = DEGENERACY_TOL * scale.powi(2 * k as i32);
    if signed < -tol {
        return Err(GeomError::NotRealizable(format!(
            "Cayley-Menger determinant has the wrong sign (signed value {signed:.3e})"
        )));
    }
    if signed <= tol {
        return Ok(0.0);
    }
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    Ok((signed / (2f64.powi(k as i32) * factorial * factorial)).sqrt())
}

/// `4!` times the volume of the 4-simplex with the given ten edge lengths.
///
/// Degenerate or non-realizable length sets are reported as
/// [`GeomError::DegenerateSimplex`]; callers decide whether that means
/// weight zero.
pub fn simplex_v(lengths: &EdgeLengthSet) -> Result<f64, GeomError> {
    if lengths.n_vertices() != 5 {
        return Err(GeomError::BadLengthSet(format!(
            "a 4-simplex needs 5 vertices, got {}",
            lengths.n_vertices()
        )));
    }
    if !lengths.all_triangles_strict() {
        return Err(GeomError::DegenerateSimplex(
            "a triangle inequality fails".into(),
        ));
    }
    let vol = match cm_volume(4, lengths) {
        Ok(v) => v,
        Err(GeomError::NotRealizable(msg)) => {
            return Err(GeomError::DegenerateSimplex(msg));
        }
        Err(e) => return Err(e),
    };
    if vol == 0.0 {
        return Err(GeomError::DegenerateSimplex("zero volume".into()));
    }
    Ok(24.0 * vol)
}

/// Gram matrix of the difference vectors from vertex 0, factored by its
/// symmetric eigendecomposition with eigenvalues sorted descending.
pub fn gram_factorization(lengths: &EdgeLengthSet) -> Result<GramFactorization, GeomError> {
    let n = lengths.n_vertices();
    let dim = n - 1;
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let d_sq = |i: usize, j: usize| if i == j { 0.0 } else { lengths.get_sq(i, j) };
    for a in 0..dim {
        for b in 0..dim {
            gram[(a, b)] = 0.5 * (d_sq(0, a + 1) + d_sq(0, b + 1) - d_sq(a + 1, b + 1));
        }
    }
    let scale_sq = lengths.max_length() * lengths.max_length();
    let eig = gram.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let tol = 1e-9 * scale_sq;
    let mut factor = DMatrix::<f64>::zeros(dim, dim);
    let mut rank = 0;
    for (col, &src) in order.iter().enumerate() {
        let lam = eig.eigenvalues[src];
        if lam < -tol {
            return Err(GeomError::NotRealizable(format!(
                "Gram matrix has negative eigenvalue {lam:.3e}"
            )));
        }
        let s = lam.max(0.0).sqrt();
        if lam > tol {
            rank += 1;
        }
        for row in 0..dim {
            factor[(row, col)] = eig.eigenvectors[(row, src)] * s;
        }
    }
    if rank > 4 {
        return Err(GeomError::NotRealizable(format!(
            "Gram rank {rank} exceeds ambient dimension 4"
        )));
    }
    Ok(GramFactorization { gram, rank, factor })
}

/// Embed a simplex with the given edge lengths into R^4, vertex 0 at the
/// origin.
///
/// The construction is deterministic given the input ordering: Gram matrix
/// from the polarization identity, pivoted symmetric square root, and for
/// 5-point embeddings a reflection of the 4th coordinate when needed so the
/// difference-vector determinant sign equals `orientation`.
pub fn embed(lengths: &EdgeLengthSet, orientation: i8) -> Result<Embedding, GeomError> {
    let n = lengths.n_vertices();
    if !(2..=5).contains(&n) {
        return Err(GeomError::BadLengthSet(format!(
            "can embed 2..=5 vertices, got {n}"
        )));
    }
    if !(orientation == 1 || orientation == -1) {
        return Err(GeomError::BadInput("orientation must be +1 or -1".into()));
    }
    let fact = gram_factorization(lengths)?;
    let dim = n - 1;
    let mut points: Vec<Vec4> = vec![[0.0; 4]];
    for a in 0..dim {
        let mut p = [0.0; 4];
        for (c, slot) in p.iter_mut().enumerate().take(dim.min(4)) {
            *slot = fact.factor[(a, c)];
        }
        points.push(p);
    }
    let mut emb = Embedding { points, orientation };
    if n == 5 {
        let d = diff_det(&emb.points);
        let scale = lengths.max_length();
        if d.abs() < DEGENERACY_TOL * scale.powi(4) {
            return Err(GeomError::DegenerateSimplex(
                "cannot orient a degenerate 4-simplex".into(),
            ));
        }
        if (d < 0.0) != (orientation < 0) {
            for p in &mut emb.points {
                p[3] = -p[3];
            }
        }
    }
    let err = emb.max_distance_error(lengths);
    if err > 1e-7 * lengths.max_length() {
        return Err(GeomError::NotRealizable(format!(
            "embedded distances deviate by {err:.3e}"
        )));
    }
    Ok(emb)
}

/// Interior dihedral angle of an embedded 4-simplex at one of its triangles.
///
/// Computed as the angle between the unit normals of the triangle inside
/// the two tetrahedra that share it, each normal pointing from the triangle
/// towards the tetrahedron's remaining vertex. Mirror-invariant.
pub fn dihedral_angle(emb: &Embedding, triangle: [usize; 3]) -> Result<f64, GeomError> {
    if emb.points.len() != 5 {
        return Err(GeomError::BadInput(format!(
            "dihedral angles need a 5-point embedding, got {} points",
            emb.points.len()
        )));
    }
    let mut seen = [false; 5];
    for &v in &triangle {
        if v >= 5 || seen[v] {
            return Err(GeomError::BadInput(format!(
                "triangle {triangle:?} is not a face"
            )));
        }
        seen[v] = true;
    }
    let opp: Vec<usize> = (0..5).filter(|v| !seen[*v]).collect();
    let base = emb.points[triangle[0]];
    let v1 = vec4::sub(emb.points[triangle[1]], base);
    let v2 = vec4::sub(emb.points[triangle[2]], base);
    let scale = vec4::norm(v1).max(vec4::norm(v2)).max(1e-300);
    if vec4::norm(vec4::perp_component(v2, &[v1])) < 1e-12 * scale {
        return Err(GeomError::DegenerateTriangle);
    }
    let mut normals = Vec::with_capacity(2);
    for &o in &opp {
        let u = vec4::perp_component(vec4::sub(emb.points[o], base), &[v1, v2]);
        let nu = vec4::norm(u);
        if nu < 1e-12 * scale {
            return Err(GeomError::DegenerateSimplex(format!(
                "vertex {o} lies in the plane of triangle {triangle:?}"
            )));
        }
        normals.push(vec4::scale(u, 1.0 / nu));
    }
    let c = vec4::dot(normals[0], normals[1]).clamp(-1.0, 1.0);
    Ok(c.acos())
}

/// Interior dihedral angle of an embedded tetrahedron along one of its
/// edges (the angle between the two faces meeting there).
pub fn tet_dihedral(emb: &Embedding, edge: [usize; 2]) -> Result<f64, GeomError> {
    if emb.points.len() != 4 {
        return Err(GeomError::BadInput(format!(
            "tetrahedron dihedrals need a 4-point embedding, got {} points",
            emb.points.len()
        )));
    }
    if edge[0] == edge[1] || edge[0] >= 4 || edge[1] >= 4 {
        return Err(GeomError::BadInput(format!("bad edge {edge:?}")));
    }
    let others: Vec<usize> = (0..4).filter(|v| *v != edge[0] && *v != edge[1]).collect();
    let base = emb.points[edge[0]];
    let e = vec4::sub(emb.points[edge[1]], base);
    let scale = vec4::norm(e);
    let mut dirs = Vec::with_capacity(2);
    for &o in &others {
        let u = vec4::perp_component(vec4::sub(emb.points[o], base), &[e]);
        let nu = vec4::norm(u);
        if nu < 1e-12 * scale {
            return Err(GeomError::DegenerateSimplex(format!(
                "vertex {o} lies on edge {edge:?}"
            )));
        }
        dirs.push(vec4::scale(u, 1.0 / nu));
    }
    let c = vec4::dot(dirs[0], dirs[1]).clamp(-1.0, 1.0);
    Ok(c.acos())
}

/// Canonical positively oriented triangle in the (e1, e2) plane with side
/// lengths `|x0| = l`, `|z0 - x0| = m`, `|z0| = n`.
///
/// Returns the pair `(x0, z0)`; the first vertex sits at the origin,
/// `x0 = l e1`, and `z0` has a strictly positive e2 component.
pub fn reference_triangle(l: f64, m: f64, n: f64) -> Result<(Vec4, Vec4), GeomError> {
    for &x in &[l, m, n] {
        if x <= 0.0 || !x.is_finite() {
            return Err(GeomError::NonPositiveLength(x));
        }
    }
    if l + m <= n || m + n <= l || l + n <= m {
        return Err(GeomError::NotRealizable(format!(
            "triangle inequality fails for ({l}, {m}, {n})"
        )));
    }
    let x0 = [l, 0.0, 0.0, 0.0];
    let t = (l * l + n * n - m * m) / (2.0 * l);
    let h_sq = (n * n - t * t).max(0.0);
    let z0 = [t, h_sq.sqrt(), 0.0, 0.0];
    Ok((x0, z0))
}

/// Canonical positively oriented tetrahedron in the span of (e1, e2, e3).
///
/// Vertex 0 at the origin, vertex 1 on the positive e1 axis, vertex 2 in
/// the upper (e1, e2) half-plane, vertex 3 with a strictly positive e3
/// component. Edge lengths are taken from a 4-vertex length set.
pub fn reference_tetrahedron(lengths: &EdgeLengthSet) -> Result<Embedding, GeomError> {
    if lengths.n_vertices() != 4 {
        return Err(GeomError::BadLengthSet(format!(
            "a tetrahedron needs 4 vertices, got {}",
            lengths.n_vertices()
        )));
    }
    let (l01, l02, l03) = (lengths.get(0, 1), lengths.get(0, 2), lengths.get(0, 3));
    let (l12, l13, l23) = (lengths.get(1, 2), lengths.get(1, 3), lengths.get(2, 3));
    let (x0, z0) = reference_triangle(l01, l12, l02)?;
    let scale = lengths.max_length();
    if z0[1] <= 1e-12 * scale {
        return Err(GeomError::DegenerateSimplex("base triangle is flat".into()));
    }
    let w1 = (l01 * l01 + l03 * l03 - l13 * l13) / (2.0 * l01);
    let w_dot_z = 0.5 * (l02 * l02 + l03 * l03 - l23 * l23);
    let w2 = (w_dot_z - z0[0] * w1) / z0[1];
    let w3_sq = l03 * l03 - w1 * w1 - w2 * w2;
    let tol = DEGENERACY_TOL * scale * scale;
    if w3_sq < tol {
        return Err(GeomError::DegenerateSimplex(if w3_sq < -tol {
            format!("apex is not realizable (w3^2 = {w3_sq:.3e})")
        } else {
            "flat tetrahedron".to_string()
        }));
    }
    let w0 = [w1, w2, w3_sq.sqrt(), 0.0];
    let emb = Embedding {
        points: vec![[0.0; 4], x0, z0, w0],
        orientation: 1,
    };
    let err = emb.max_distance_error(lengths);
    if err > 1e-7 * scale {
        return Err(GeomError::NotRealizable(format!(
            "reference tetrahedron distances deviate by {err:.3e}"
        )));
    }
    Ok(emb)
}
