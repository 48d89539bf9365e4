//! Triangulated 4-manifolds and the state-sum weight.
//!
//! A triangulation is a list of labeled vertices and oriented 4-simplices
//! ("pents"); lower faces and incidences are derived. Validity means every
//! tetrahedron lies in one pent (boundary) or two (interior), and the two
//! induced boundary orientations of every interior tetrahedron are
//! opposite.
//!
//! Given a labeling (edge lengths and triangle spins) the weight is the
//! product of `2 A_t` over interior triangles, `(-1)^{Σ s}` over interior
//! tetrahedra, and the 10j symbol over pents. Degenerate length data gives
//! weight zero rather than an error. Deficit angles and the discrete action
//! use the per-pent orientation signs; the cutoff partition estimate sums
//! the weight over sampled labels with the measure `d l² x (1/2π) Σ_s`.

use crate::geometry4d::{dihedral_angle, embed, triangle_area, EdgeLengthSet, GeomError};
use crate::symbols::{ten_j, SymbolError, TenJInput, TenJResult, PENT_TRIANGLES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateSumError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid triangulation: {0}")]
    Invalid(String),
    #[error("labeling error: {0}")]
    Labeling(String),
    #[error("degenerate pent #{pent}: {msg}")]
    DegeneratePent { pent: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("no geometric samples accepted after {samples} draws")]
    NoGeometricSamples { samples: u64 },
    #[error("triangulation is not closed: {0}")]
    NotClosed(String),
}

/// Oriented 4-simplex: vertex indices in the order given by the source,
/// plus an explicit orientation sign for that ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pent {
    pub verts: [usize; 5],
    pub sign: i8,
}

fn sort_parity<const N: usize>(t: [usize; N]) -> ([usize; N], i8) {
    let mut s = t;
    let mut parity = 1i8;
    // insertion sort, counting swaps
    for i in 1..N {
        let mut j = i;
        while j > 0 && s[j - 1] > s[j] {
            s.swap(j - 1, j);
            parity = -parity;
            j -= 1;
        }
    }
    (s, parity)
}

fn relative_parity4(a: [usize; 4], b: [usize; 4]) -> i8 {
    let (sa, pa) = sort_parity(a);
    let (sb, pb) = sort_parity(b);
    debug_assert_eq!(sa, sb);
    pa * pb
}

/// Combinatorial closed or bounded 4-manifold triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation4 {
    labels: Vec<String>,
    pents: Vec<Pent>,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    tets: Vec<[usize; 4]>,
    tet_pents: Vec<Vec<usize>>,
    triangle_pents: Vec<Vec<usize>>,
    edge_index: BTreeMap<[usize; 2], usize>,
    triangle_index: BTreeMap<[usize; 3], usize>,
    tet_index: BTreeMap<[usize; 4], usize>,
    interior_triangle: Vec<bool>,
    interior_tet: Vec<bool>,
}

impl Triangulation4 {
    /// Validate and derive the face lattice from labeled, oriented pents.
    pub fn from_pents(labels: Vec<String>, pents: Vec<Pent>) -> Result<Self, StateSumError> {
        let n = labels.len();
        {
            let mut seen = BTreeSet::new();
            for l in &labels {
                if !seen.insert(l.clone()) {
                    return Err(StateSumError::Invalid(format!(
                        "duplicate vertex label {l}"
                    )));
                }
            }
        }
        let mut pent_sets = BTreeSet::new();
        for p in &pents {
            let mut distinct = p.verts;
            distinct.sort_unstable();
            if distinct.windows(2).any(|w| w[0] == w[1]) {
                return Err(StateSumError::Invalid(format!(
                    "pent {:?} repeats a vertex",
                    p.verts
                )));
            }
            if p.verts.iter().any(|&v| v >= n) {
                return Err(StateSumError::Invalid(format!(
                    "pent {:?} references an undeclared vertex",
                    p.verts
                )));
            }
            if p.sign != 1 && p.sign != -1 {
                return Err(StateSumError::Invalid("pent sign must be +1 or -1".into()));
            }
            if !pent_sets.insert(distinct) {
                return Err(StateSumError::Invalid(format!(
                    "pent {:?} declared twice",
                    p.verts
                )));
            }
        }
        if pents.is_empty() {
            return Err(StateSumError::Invalid("no pents declared".into()));
        }

        let mut edge_set = BTreeSet::new();
        let mut tri_set = BTreeSet::new();
        let mut tet_set = BTreeSet::new();
        for p in &pents {
            let (sv, _) = sort_parity(p.verts);
            for a in 0..5 {
                for b in (a + 1)..5 {
                    edge_set.insert([sv[a], sv[b]]);
                    for c in (b + 1)..5 {
                        tri_set.insert([sv[a], sv[b], sv[c]]);
                        for d in (c + 1)..5 {
                            tet_set.insert([sv[a], sv[b], sv[c], sv[d]]);
                        }
                    }
                }
            }
        }
        let edges: Vec<[usize; 2]> = edge_set.into_iter().collect();
        let triangles: Vec<[usize; 3]> = tri_set.into_iter().collect();
        let tets: Vec<[usize; 4]> = tet_set.into_iter().collect();
        let edge_index: BTreeMap<_, _> =
            edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let triangle_index: BTreeMap<_, _> =
            triangles.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let tet_index: BTreeMap<_, _> = tets.iter().enumerate().map(|(i, t)| (*t, i)).collect();

        let mut tet_pents = vec![Vec::new(); tets.len()];
        let mut triangle_pents = vec![Vec::new(); triangles.len()];
        for (pi, p) in pents.iter().enumerate() {
            let (sv, _) = sort_parity(p.verts);
            for omit in 0..5 {
                let mut tet = [0; 4];
                let mut k = 0;
                for (i, &v) in sv.iter().enumerate() {
                    if i != omit {
                        tet[k] = v;
                        k += 1;
                    }
                }
                tet_pents[tet_index[&tet]].push(pi);
            }
            for a in 0..5 {
                for b in (a + 1)..5 {
                    for c in (b + 1)..5 {
                        triangle_pents[triangle_index[&[sv[a], sv[b], sv[c]]]].push(pi);
                    }
                }
            }
        }

        for (ti, ps) in tet_pents.iter().enumerate() {
            if ps.len() > 2 {
                return Err(StateSumError::Invalid(format!(
                    "tetrahedron {:?} lies in {} pents; a 4-manifold allows at most 2",
                    tets[ti],
                    ps.len()
                )));
            }
        }

        // Interior tetrahedra must receive opposite induced orientations
        // from their two pents.
        for (ti, ps) in tet_pents.iter().enumerate() {
            if ps.len() != 2 {
                continue;
            }
            let induced: Vec<([usize; 4], i8)> = ps
                .iter()
                .map(|&pi| {
                    let p = &pents[pi];
                    let pos = p
                        .verts
                        .iter()
                        .position(|v| !tets[ti].contains(v))
                        .expect("pent contains the tet plus one vertex");
                    let mut tuple = [0; 4];
                    let mut k = 0;
                    for (i, &v) in p.verts.iter().enumerate() {
                        if i != pos {
                            tuple[k] = v;
                            k += 1;
                        }
                    }
                    let induced_sign = p.sign * if pos % 2 == 0 { 1 } else { -1 };
                    (tuple, induced_sign)
                })
                .collect();
            let rel = relative_parity4(induced[0].0, induced[1].0);
            if induced[0].1 * rel * induced[1].1 != -1 {
                return Err(StateSumError::Invalid(format!(
                    "interior tetrahedron {:?} receives matching orientations from its two pents",
                    tets[ti]
                )));
            }
        }

        let interior_tet: Vec<bool> = tet_pents.iter().map(|ps| ps.len() == 2).collect();
        // Boundary faces are the faces of boundary tetrahedra.
        let mut boundary_tri = vec![false; triangles.len()];
        for (ti, interior) in interior_tet.iter().enumerate() {
            if !interior {
                let t = tets[ti];
                for omit in 0..4 {
                    let mut tri = [0; 3];
                    let mut k = 0;
                    for (i, &v) in t.iter().enumerate() {
                        if i != omit {
                            tri[k] = v;
                            k += 1;
                        }
                    }
                    boundary_tri[triangle_index[&tri]] = true;
                }
            }
        }
        let interior_triangle: Vec<bool> = boundary_tri.iter().map(|b| !b).collect();

        Ok(Triangulation4 {
            labels,
            pents,
            edges,
            triangles,
            tets,
            tet_pents,
            triangle_pents,
            edge_index,
            triangle_index,
            tet_index,
            interior_triangle,
            interior_tet,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_of(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn pents(&self) -> &[Pent] {
        &self.pents
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn tet_cofaces(&self, tet: usize) -> &[usize] {
        &self.tet_pents[tet]
    }

    pub fn triangle_cofaces(&self, triangle: usize) -> &[usize] {
        &self.triangle_pents[triangle]
    }

    pub fn edge_index_of(&self, e: [usize; 2]) -> Option<usize> {
        let (s, _) = sort_parity(e);
        self.edge_index.get(&s).copied()
    }

    pub fn triangle_index_of(&self, t: [usize; 3]) -> Option<usize> {
        let (s, _) = sort_parity(t);
        self.triangle_index.get(&s).copied()
    }

    pub fn tet_index_of(&self, t: [usize; 4]) -> Option<usize> {
        let (s, _) = sort_parity(t);
        self.tet_index.get(&s).copied()
    }

    pub fn is_interior_triangle(&self, idx: usize) -> bool {
        self.interior_triangle[idx]
    }

    pub fn is_interior_tet(&self, idx: usize) -> bool {
        self.interior_tet[idx]
    }

    pub fn is_closed(&self) -> bool {
        self.interior_tet.iter().all(|&b| b)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
            - self.tets.len() as i64
            + self.pents.len() as i64
    }

    /// Orientation sign of pent `pi` relative to its ascending vertex order.
    pub fn sorted_sign(&self, pi: usize) -> i8 {
        let p = &self.pents[pi];
        let (_, parity) = sort_parity(p.verts);
        p.sign * parity
    }

    /// Ascending vertex tuple of pent `pi`.
    pub fn sorted_pent(&self, pi: usize) -> [usize; 5] {
        let (s, _) = sort_parity(self.pents[pi].verts);
        s
    }
}

/// Edge-length and triangle-spin assignment, keyed by ascending vertex
/// tuples. Spins default to zero; lengths must be assigned explicitly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labeling {
    lengths: BTreeMap<[usize; 2], f64>,
    spins: BTreeMap<[usize; 3], i64>,
}

impl Labeling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_length(&mut self, e: [usize; 2], l: f64) -> Result<(), StateSumError> {
        if l <= 0.0 || !l.is_finite() {
            return Err(StateSumError::Labeling(format!(
                "length for edge {e:?} must be positive, got {l}"
            )));
        }
        let (s, _) = sort_parity(e);
        self.lengths.insert(s, l);
        Ok(())
    }

    pub fn set_spin(&mut self, t: [usize; 3], s: i64) {
        let (key, _) = sort_parity(t);
        self.spins.insert(key, s);
    }

    pub fn length(&self, e: [usize; 2]) -> Option<f64> {
        let (s, _) = sort_parity(e);
        self.lengths.get(&s).copied()
    }

    pub fn spin(&self, t: [usize; 3]) -> i64 {
        let (s, _) = sort_parity(t);
        self.spins.get(&s).copied().unwrap_or(0)
    }

    pub fn lengths(&self) -> &BTreeMap<[usize; 2], f64> {
        &self.lengths
    }

    pub fn spins(&self) -> &BTreeMap<[usize; 3], i64> {
        &self.spins
    }

    /// Same length on every edge of a triangulation.
    pub fn uniform_lengths(tri: &Triangulation4, l: f64) -> Result<Self, StateSumError> {
        let mut lab = Labeling::new();
        for &e in tri.edges() {
            lab.set_length(e, l)?;
        }
        Ok(lab)
    }

    fn require_length(&self, e: [usize; 2]) -> Result<f64, StateSumError> {
        self.length(e).ok_or_else(|| {
            StateSumError::Labeling(format!("no length assigned to edge {e:?}"))
        })
    }
}

/// Parsed triangulation file: the complex plus any length/spin lines.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangulationFile {
    pub triangulation: Triangulation4,
    pub labeling: Labeling,
}

/// Parse the line-oriented triangulation format.
///
/// ```text
/// dim 4
/// vertex <label>
/// pent <v1> <v2> <v3> <v4> <v5> <+1|-1>
/// length <va> <vb> <positive real>       # optional
/// spin <va> <vb> <vc> <integer>          # optional
/// ```
///
/// `#` starts a comment; duplicate declarations are errors.
pub fn parse_triangulation(text: &str) -> Result<TriangulationFile, StateSumError> {
    let mut labels: Vec<String> = Vec::new();
    let mut label_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut pents: Vec<Pent> = Vec::new();
    let mut raw_lengths: Vec<(usize, [usize; 2], f64)> = Vec::new();
    let mut raw_spins: Vec<(usize, [usize; 3], i64)> = Vec::new();
    let mut seen_dim = false;

    let err = |line: usize, msg: String| StateSumError::Parse { line, msg };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !seen_dim {
            if tokens != ["dim", "4"] {
                return Err(err(line_no, "expected header `dim 4`".into()));
            }
            seen_dim = true;
            continue;
        }
        let resolve = |tok: &str, line_no: usize| -> Result<usize, StateSumError> {
            label_index
                .get(tok)
                .copied()
                .ok_or_else(|| err(line_no, format!("unknown vertex `{tok}`")))
        };
        match tokens[0] {
            "vertex" => {
                if tokens.len() != 2 {
                    return Err(err(line_no, "vertex takes exactly one label".into()));
                }
                let label = tokens[1].to_string();
                if label_index.contains_key(&label) {
                    return Err(err(line_no, format!("vertex `{label}` declared twice")));
                }
                label_index.insert(label.clone(), labels.len());
                labels.push(label);
            }
            "pent" => {
                if tokens.len() != 7 {
                    return Err(err(
                        line_no,
                        "pent takes five vertices and a sign (+1|-1)".into(),
                    ));
                }
                let mut verts = [0usize; 5];
                for (k, tok) in tokens[1..6].iter().enumerate() {
                    verts[k] = resolve(tok, line_no)?;
                }
                let sign = match tokens[6] {
                    "+1" => 1i8,
                    "-1" => -1i8,
                    other => {
                        return Err(err(line_no, format!("bad sign `{other}`, want +1 or -1")))
                    }
                };
                pents.push(Pent { verts, sign });
            }
            "length" => {
                if tokens.len() != 4 {
                    return Err(err(line_no, "length takes two vertices and a value".into()));
                }
                let a = resolve(tokens[1], line_no)?;
                let b = resolve(tokens[2], line_no)?;
                let v: f64 = tokens[3]
                    .parse()
                    .map_err(|_| err(line_no, format!("bad length value `{}`", tokens[3])))?;
                if v <= 0.0 || !v.is_finite() {
                    return Err(err(line_no, format!("length must be positive, got {v}")));
                }
                if a == b {
                    return Err(err(line_no, "length endpoints must differ".into()));
                }
                let (key, _) = sort_parity([a, b]);
                if raw_lengths.iter().any(|(_, k, _)| *k == key) {
                    return Err(err(line_no, format!("length for edge {key:?} declared twice")));
                }
                raw_lengths.push((line_no, key, v));
            }
            "spin" => {
                if tokens.len() != 5 {
                    return Err(err(line_no, "spin takes three vertices and an integer".into()));
                }
                let a = resolve(tokens[1], line_no)?;
                let b = resolve(tokens[2], line_no)?;
                let c = resolve(tokens[3], line_no)?;
                if a == b || b == c || a == c {
                    return Err(err(line_no, "spin vertices must be distinct".into()));
                }
                let s: i64 = tokens[4]
                    .parse()
                    .map_err(|_| err(line_no, format!("bad spin value `{}`", tokens[4])))?;
                let (key, _) = sort_parity([a, b, c]);
                if raw_spins.iter().any(|(_, k, _)| *k == key) {
                    return Err(err(line_no, format!("spin for triangle {key:?} declared twice")));
                }
                raw_spins.push((line_no, key, s));
            }
            other => return Err(err(line_no, format!("unknown directive `{other}`"))),
        }
    }
    if !seen_dim {
        return Err(err(1, "empty file; expected header `dim 4`".into()));
    }

    let triangulation = Triangulation4::from_pents(labels, pents)?;
    let mut labeling = Labeling::new();
    for (line_no, key, v) in raw_lengths {
        if triangulation.edge_index_of(key).is_none() {
            return Err(err(line_no, format!("edge {key:?} is not a face of the complex")));
        }
        labeling.set_length(key, v)?;
    }
    for (line_no, key, s) in raw_spins {
        if triangulation.triangle_index_of(key).is_none() {
            return Err(err(
                line_no,
                format!("triangle {key:?} is not a face of the complex"),
            ));
        }
        labeling.set_spin(key, s);
    }
    Ok(TriangulationFile { triangulation, labeling })
}

/// Render a triangulation (and any labeling data) in the file format
/// accepted by [`parse_triangulation`].
pub fn format_triangulation(tri: &Triangulation4, lab: &Labeling) -> String {
    let mut out = String::from("dim 4\n");
    for l in tri.labels() {
        out.push_str(&format!("vertex {l}\n"));
    }
    for p in tri.pents() {
        let verts: Vec<&str> = p.verts.iter().map(|&v| tri.label_of(v)).collect();
        out.push_str(&format!(
            "pent {} {}\n",
            verts.join(" "),
            if p.sign > 0 { "+1" } else { "-1" }
        ));
    }
    for (e, l) in lab.lengths() {
        if tri.edge_index_of(*e).is_some() {
            out.push_str(&format!(
                "length {} {} {:.17e}\n",
                tri.label_of(e[0]),
                tri.label_of(e[1]),
                l
            ));
        }
    }
    for (t, s) in lab.spins() {
        if *s != 0 && tri.triangle_index_of(*t).is_some() {
            out.push_str(&format!(
                "spin {} {} {} {s}\n",
                tri.label_of(t[0]),
                tri.label_of(t[1]),
                tri.label_of(t[2])
            ));
        }
    }
    out
}

/// The single positively oriented pent on five vertices.
pub fn single_pent() -> Triangulation4 {
    let labels = (1..=5).map(|i| i.to_string()).collect();
    Triangulation4::from_pents(
        labels,
        vec![Pent { verts: [0, 1, 2, 3, 4], sign: 1 }],
    )
    .expect("static complex is valid")
}

/// The boundary of the 5-simplex: six pents with alternating signs, a
/// triangulation of the 4-sphere.
pub fn boundary_of_5_simplex() -> Triangulation4 {
    let labels = (1..=6).map(|i| i.to_string()).collect();
    let mut pents = Vec::new();
    for omit in 0..6 {
        let mut verts = [0usize; 5];
        let mut k = 0;
        for v in 0..6 {
            if v != omit {
                verts[k] = v;
                k += 1;
            }
        }
        let sign = if omit % 2 == 0 { 1 } else { -1 };
        pents.push(Pent { verts, sign });
    }
    Triangulation4::from_pents(labels, pents).expect("static complex is valid")
}

fn pent_tenj_input(
    tri: &Triangulation4,
    lab: &Labeling,
    pi: usize,
) -> Result<TenJInput, StateSumError> {
    let sv = tri.sorted_pent(pi);
    let mut lens = Vec::with_capacity(10);
    for a in 0..5 {
        for b in (a + 1)..5 {
            lens.push(lab.require_length([sv[a], sv[b]])?);
        }
    }
    let lengths = EdgeLengthSet::new(5, lens).map_err(StateSumError::Geometry)?;
    let mut spins = [0i64; 10];
    for (idx, t) in PENT_TRIANGLES.iter().enumerate() {
        spins[idx] = lab.spin([sv[t[0]], sv[t[1]], sv[t[2]]]);
    }
    TenJInput::new(lengths, spins).map_err(StateSumError::Symbol)
}

/// Factorized state-sum weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightReport {
    /// Product of all factors (the model weight).
    pub total: f64,
    /// `Π 2A · Π cos(Σ s φ)/V` with tetrahedron signs and the 10j sign
    /// factor dropped; for a closed complex this equals `total`.
    pub unsigned_total: f64,
    /// Interior triangle index → `2 A_t`.
    pub area_factors: Vec<(usize, f64)>,
    /// Interior tetrahedron index → `(-1)^{Σ s}`.
    pub tet_sign_factors: Vec<(usize, i8)>,
    /// Pent index → 10j evaluation.
    pub pent_factors: Vec<(usize, TenJResult)>,
    /// Set when the weight is exactly zero on geometric grounds.
    pub zero_reason: Option<String>,
}

/// First triangle of a pent that violates the strict triangle inequality,
/// if any (to annotate weight-zero results).
fn offending_triangle(tri: &Triangulation4, lab: &Labeling, pi: usize) -> Option<[usize; 3]> {
    let sv = tri.sorted_pent(pi);
    for a in 0..5 {
        for b in (a + 1)..5 {
            for c in (b + 1)..5 {
                let l = lab.length([sv[a], sv[b]])?;
                let m = lab.length([sv[b], sv[c]])?;
                let n = lab.length([sv[a], sv[c]])?;
                if l + m <= n || m + n <= l || l + n <= m {
                    return Some([sv[a], sv[b], sv[c]]);
                }
            }
        }
    }
    None
}

/// Evaluate the state-sum weight with its full factor breakdown.
///
/// Factors are multiplied in face-index order, so the result is bit-stable
/// under permutations of the pent list.
pub fn weight_report(tri: &Triangulation4, lab: &Labeling) -> Result<WeightReport, StateSumError> {
    let mut report = WeightReport {
        total: 1.0,
        unsigned_total: 1.0,
        area_factors: Vec::new(),
        tet_sign_factors: Vec::new(),
        pent_factors: Vec::new(),
        zero_reason: None,
    };

    for pi in 0..tri.pents().len() {
        let input = pent_tenj_input(tri, lab, pi)?;
        match ten_j(&input) {
            Ok(r) => report.pent_factors.push((pi, r)),
            Err(SymbolError::Geometry(GeomError::DegenerateSimplex(msg))) => {
                report.total = 0.0;
                report.unsigned_total = 0.0;
                report.zero_reason = Some(match offending_triangle(tri, lab, pi) {
                    Some(t) => format!(
                        "pent #{pi} {:?} is not a Euclidean 4-simplex: triangle {t:?} violates the triangle inequality",
                        tri.sorted_pent(pi)
                    ),
                    None => format!(
                        "pent #{pi} {:?} is not a Euclidean 4-simplex: {msg}",
                        tri.sorted_pent(pi)
                    ),
                });
                return Ok(report);
            }
            Err(e) => return Err(e.into()),
        }
    }
    // Multiply in ascending-vertex order rather than storage order.
    let mut order: Vec<usize> = (0..report.pent_factors.len()).collect();
    order.sort_by_key(|&i| tri.sorted_pent(report.pent_factors[i].0));
    for &i in &order {
        let r = &report.pent_factors[i].1;
        report.total *= r.value;
        report.unsigned_total *= r.sign as f64 * r.value;
    }

    for (ti, t) in tri.triangles().iter().enumerate() {
        if !tri.is_interior_triangle(ti) {
            continue;
        }
        let (l, m, n) = (
            lab.require_length([t[0], t[1]])?,
            lab.require_length([t[1], t[2]])?,
            lab.require_length([t[0], t[2]])?,
        );
        let a = triangle_area(l, m, n).map_err(StateSumError::Geometry)?;
        let factor = 2.0 * a;
        report.area_factors.push((ti, factor));
        report.total *= factor;
        report.unsigned_total *= factor;
        if factor == 0.0 && report.zero_reason.is_none() {
            report.zero_reason = Some(format!(
                "interior triangle {t:?} violates the triangle inequality"
            ));
        }
    }

    for (ti, t) in tri.tets().iter().enumerate() {
        if !tri.is_interior_tet(ti) {
            continue;
        }
        let mut s = 0i64;
        for omit in 0..4 {
            let mut tri3 = [0; 3];
            let mut k = 0;
            for (i, &v) in t.iter().enumerate() {
                if i != omit {
                    tri3[k] = v;
                    k += 1;
                }
            }
            s += lab.spin(tri3);
        }
        let sign: i8 = if s % 2 == 0 { 1 } else { -1 };
        report.tet_sign_factors.push((ti, sign));
        report.total *= sign as f64;
    }

    Ok(report)
}

/// State-sum weight of a labeled triangulation; zero when any pent fails to
/// be a Euclidean 4-simplex.
pub fn weight(tri: &Triangulation4, lab: &Labeling) -> Result<f64, StateSumError> {
    Ok(weight_report(tri, lab)?.total)
}

/// Deficit angle per triangle: `ω_t = Σ_{σ ⊃ t} η_σ φ_t^σ`, using the
/// stored pent orientations. Entries follow `triangulation.triangles()`.
pub fn deficit_angles(tri: &Triangulation4, lab: &Labeling) -> Result<Vec<f64>, StateSumError> {
    deficit_angles_with(tri, lab, None)
}

/// Deficit angles with explicit per-pent orientation signs (same
/// convention as the stored signs: orientation of the listed vertex order).
pub fn deficit_angles_with(
    tri: &Triangulation4,
    lab: &Labeling,
    eta: Option<&[i8]>,
) -> Result<Vec<f64>, StateSumError> {
    if let Some(e) = eta {
        if e.len() != tri.pents().len() {
            return Err(StateSumError::Labeling(format!(
                "eta has {} entries for {} pents",
                e.len(),
                tri.pents().len()
            )));
        }
    }
    let mut deficits = vec![0.0; tri.triangles().len()];
    for pi in 0..tri.pents().len() {
        let sv = tri.sorted_pent(pi);
        let input = pent_tenj_input(tri, lab, pi)?;
        let emb = embed(&input.lengths, 1).map_err(|e| StateSumError::DegeneratePent {
            pent: pi,
            msg: e.to_string(),
        })?;
        let (_, parity) = sort_parity(tri.pents()[pi].verts);
        let given = eta.map(|e| e[pi]).unwrap_or(tri.pents()[pi].sign);
        let eta_sorted = (given * parity) as f64;
        for t in PENT_TRIANGLES {
            let phi = dihedral_angle(&emb, t).map_err(|e| StateSumError::DegeneratePent {
                pent: pi,
                msg: e.to_string(),
            })?;
            let global = [sv[t[0]], sv[t[1]], sv[t[2]]];
            let ti = tri
                .triangle_index_of(global)
                .expect("pent face is in the complex");
            deficits[ti] += eta_sorted * phi;
        }
    }
    Ok(deficits)
}

/// Discrete action `S = Σ_t s_t ω_t(l, η)` for explicit orientation signs.
pub fn action(tri: &Triangulation4, lab: &Labeling, eta: &[i8]) -> Result<f64, StateSumError> {
    let deficits = deficit_angles_with(tri, lab, Some(eta))?;
    let mut s = 0.0;
    for (ti, t) in tri.triangles().iter().enumerate() {
        s += lab.spin(*t) as f64 * deficits[ti];
    }
    Ok(s)
}

/// Cutoffs and sampling controls for the partition estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffConfig {
    /// Lengths sampled with measure `d l²` on `(0, L²]`.
    pub length_cutoff: f64,
    /// Spins summed over `|s| ≤ S` with measure `1/(2π)` each.
    pub spin_cutoff: i64,
    pub samples: u64,
    pub seed: u64,
}

/// Cutoff Monte Carlo estimate of the (regularized) partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEstimate {
    pub estimate: f64,
    pub std_err: f64,
    /// Fraction of samples with every pent realizable.
    pub acceptance: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Cutoff Monte Carlo estimate of `∫ Π dl² (1/2π)^{#t} Σ_{|s|≤S} W`.
///
/// Lengths are drawn from the `dl²` measure (uniform in `l²` on
/// `(0, L²]`); spin configurations are drawn uniformly from the cutoff box
/// and the sum is recovered by multiplying with the box size. This is a
/// regularized diagnostic: the uncut sum is formal and generally divergent,
/// so estimates are cutoff-dependent by construction.
pub fn partition_estimate(
    tri: &Triangulation4,
    cfg: &CutoffConfig,
) -> Result<PartitionEstimate, StateSumError> {
    if !tri.is_closed() {
        return Err(StateSumError::NotClosed(
            "partition estimates are defined for closed triangulations".into(),
        ));
    }
    if cfg.length_cutoff <= 0.0 || cfg.spin_cutoff < 0 || cfg.samples == 0 {
        return Err(StateSumError::Labeling(
            "cutoff config needs L > 0, S >= 0 and at least one sample".into(),
        ));
    }
    let n_edges = tri.edges().len() as i32;
    let n_tris = tri.triangles().len() as i32;
    let l_sq = cfg.length_cutoff * cfg.length_cutoff;
    let box_size = (2 * cfg.spin_cutoff + 1) as f64;
    let scale = l_sq.powi(n_edges) * (box_size / (2.0 * PI)).powi(n_tris);

    let n_chunks: u64 = 64;
    let per_chunk = cfg.samples / n_chunks;
    let remainder = cfg.samples - per_chunk * n_chunks;
    let results: Vec<(f64, f64, u64, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let n = per_chunk + if chunk < remainder { 1 } else { 0 };
            let mut rng =
                ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(chunk.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut accepted = 0u64;
            for _ in 0..n {
                let mut lab = Labeling::new();
                for &e in tri.edges() {
                    let u: f64 = rng.gen::<f64>();
                    let l = ((1.0 - u) * l_sq).sqrt().max(f64::MIN_POSITIVE);
                    lab.set_length(e, l).expect("positive by construction");
                }
                for &t in tri.triangles() {
                    let s = rng.gen_range(-cfg.spin_cutoff..=cfg.spin_cutoff);
                    lab.set_spin(t, s);
                }
                let report = weight_report(tri, &lab).expect("lengths are complete");
                if report.zero_reason.is_none() {
                    accepted += 1;
                }
                let w = report.total;
                sum += w;
                sum_sq += w * w;
            }
            (sum, sum_sq, accepted, n)
        })
        .collect();

    let (mut sum, mut sum_sq, mut accepted, mut n) = (0.0, 0.0, 0u64, 0u64);
    for (s, ss, a, c) in results {
        sum += s;
        sum_sq += ss;
        accepted += a;
        n += c;
    }
    if accepted == 0 {
        return Err(StateSumError::NoGeometricSamples { samples: n });
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    Ok(PartitionEstimate {
        estimate: scale * mean,
        std_err: scale * (var / n as f64).sqrt(),
        acceptance: accepted as f64 / n as f64,
        samples: n,
        seed: cfg.seed,
    })
}
