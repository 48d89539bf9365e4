//! Bistellar (Pachner) moves in dimension four and flatness diagnostics.
//!
//! Every 4d Pachner move exchanges a k-pent ball inside the boundary of a
//! 5-simplex for the complementary (6-k)-pent ball, k = 1, 2, 3 (and the
//! inverses). The implementation is one generic engine: locate the old
//! side, match it against the oriented boundary chain of the 5-simplex on
//! the six support vertices, and glue in the complementary pents with the
//! opposite chain signs.
//!
//! The geometric counterpart is the 3-3 flatness identity: for six points
//! in R^4, the signed dihedral angles of the three 4-simplices around an
//! interior triangle cancel mod 2π. `hexagon_residual` builds on it to
//! tabulate the spin-summed two-sided comparison at a finite cutoff.

use crate::geometry4d::{dihedral_angle, Embedding, GeomError};
use crate::statesum::{weight, Labeling, Pent, StateSumError, Triangulation4};
use crate::vec4::{self, wrap_angle, Vec4};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MoveError {
    #[error("move not applicable: {0}")]
    Inapplicable(String),
    #[error("unknown vertex label `{0}`")]
    UnknownVertex(String),
    #[error("fresh vertex label `{0}` already exists")]
    FreshVertexExists(String),
    #[error(transparent)]
    Triangulation(#[from] StateSumError),
}

/// A Pachner move, targeted by vertex labels.
///
/// `ThreeThree`, `TwoFour` and `OneFive` are the forward moves; `FourTwo`
/// and `FiveOne` are their inverses and part of the same bistellar family.
#[derive(Debug, Clone, PartialEq)]
pub enum MoveSpec {
    /// Replace the three pents around the triangle by the three around the
    /// complementary triangle.
    ThreeThree { triangle: [String; 3] },
    /// Replace the two pents sharing the tetrahedron by four.
    TwoFour { tet: [String; 4] },
    /// Replace the four pents around the edge by two.
    FourTwo { edge: [String; 2] },
    /// Cone a single pent from a fresh interior vertex.
    OneFive { pent: [String; 5], fresh: String },
    /// Remove an interior vertex whose star is exactly five pents.
    FiveOne { vertex: String },
}

fn sorted<const N: usize>(mut t: [usize; N]) -> [usize; N] {
    t.sort_unstable();
    t
}

fn parity_of_sort<const N: usize>(t: [usize; N]) -> i8 {
    let mut s = t;
    let mut parity = 1i8;
    for i in 1..N {
        let mut j = i;
        while j > 0 && s[j - 1] > s[j] {
            s.swap(j - 1, j);
            parity = -parity;
            j -= 1;
        }
    }
    parity
}

/// Apply a Pachner move, returning the new triangulation.
pub fn apply_move(tri: &Triangulation4, spec: &MoveSpec) -> Result<Triangulation4, MoveError> {
    let resolve = |label: &String| -> Result<usize, MoveError> {
        tri.vertex_by_label(label)
            .ok_or_else(|| MoveError::UnknownVertex(label.clone()))
    };

    // Old-side pent indices plus the vertex labels after the move.
    let mut new_labels: Vec<String> = tri.labels().to_vec();
    let (old_side, support): (Vec<usize>, Vec<usize>) = match spec {
        MoveSpec::ThreeThree { triangle } => {
            let t = [
                resolve(&triangle[0])?,
                resolve(&triangle[1])?,
                resolve(&triangle[2])?,
            ];
            let ti = tri
                .triangle_index_of(t)
                .ok_or_else(|| MoveError::Inapplicable(format!("triangle {triangle:?} not in complex")))?;
            let pents = tri.triangle_cofaces(ti).to_vec();
            if pents.len() != 3 {
                return Err(MoveError::Inapplicable(format!(
                    "triangle {triangle:?} lies in {} pents, need exactly 3",
                    pents.len()
                )));
            }
            let support = support_vertices(tri, &pents)?;
            (pents, support)
        }
        MoveSpec::TwoFour { tet } => {
            let t = [
                resolve(&tet[0])?,
                resolve(&tet[1])?,
                resolve(&tet[2])?,
                resolve(&tet[3])?,
            ];
            let ti = tri
                .tet_index_of(t)
                .ok_or_else(|| MoveError::Inapplicable(format!("tetrahedron {tet:?} not in complex")))?;
            let pents = tri.tet_cofaces(ti).to_vec();
            if pents.len() != 2 {
                return Err(MoveError::Inapplicable(format!(
                    "tetrahedron {tet:?} lies in {} pents, need exactly 2 (interior)",
                    pents.len()
                )));
            }
            let support = support_vertices(tri, &pents)?;
            (pents, support)
        }
        MoveSpec::FourTwo { edge } => {
            let e = [resolve(&edge[0])?, resolve(&edge[1])?];
            let se = sorted(e);
            let pents: Vec<usize> = (0..tri.pents().len())
                .filter(|&pi| {
                    let sv = tri.sorted_pent(pi);
                    se.iter().all(|v| sv.contains(v))
                })
                .collect();
            if pents.len() != 4 {
                return Err(MoveError::Inapplicable(format!(
                    "edge {edge:?} lies in {} pents, need exactly 4",
                    pents.len()
                )));
            }
            let support = support_vertices(tri, &pents)?;
            (pents, support)
        }
        MoveSpec::OneFive { pent, fresh } => {
            if tri.vertex_by_label(fresh).is_some() {
                return Err(MoveError::FreshVertexExists(fresh.clone()));
            }
            let mut verts = [0usize; 5];
            for (i, l) in pent.iter().enumerate() {
                verts[i] = resolve(l)?;
            }
            let sv = sorted(verts);
            let pi = (0..tri.pents().len())
                .find(|&pi| tri.sorted_pent(pi) == sv)
                .ok_or_else(|| MoveError::Inapplicable(format!("pent {pent:?} not in complex")))?;
            let fresh_idx = new_labels.len();
            new_labels.push(fresh.clone());
            let mut support = sv.to_vec();
            support.push(fresh_idx);
            (vec![pi], support)
        }
        MoveSpec::FiveOne { vertex } => {
            let v = resolve(vertex)?;
            let pents: Vec<usize> = (0..tri.pents().len())
                .filter(|&pi| tri.sorted_pent(pi).contains(&v))
                .collect();
            if pents.len() != 5 {
                return Err(MoveError::Inapplicable(format!(
                    "vertex `{vertex}` lies in {} pents, need exactly 5",
                    pents.len()
                )));
            }
            let support = support_vertices(tri, &pents)?;
            (pents, support)
        }
    };

    if support.len() != 6 {
        return Err(MoveError::Inapplicable(format!(
            "move support has {} vertices, need exactly 6",
            support.len()
        )));
    }
    let mut u = support.clone();
    u.sort_unstable();

    // Match the old side against the boundary chain of the 5-simplex on u:
    // the pent omitting u[i] carries chain sign (-1)^i, all scaled by a
    // global rho.
    let chain_slot = |sorted_pent: [usize; 5]| -> Option<usize> {
        u.iter().position(|v| !sorted_pent.contains(v))
    };
    let mut rho: Option<i8> = None;
    let mut old_slots = Vec::with_capacity(old_side.len());
    for &pi in &old_side {
        let sv = tri.sorted_pent(pi);
        let slot = chain_slot(sv).ok_or_else(|| {
            MoveError::Inapplicable("old-side pent does not fit the support".into())
        })?;
        let chain = if slot % 2 == 0 { 1i8 } else { -1i8 };
        let r = tri.sorted_sign(pi) * chain;
        match rho {
            None => rho = Some(r),
            Some(prev) if prev != r => {
                return Err(MoveError::Inapplicable(
                    "old-side orientations do not match a coherent 5-simplex boundary".into(),
                ));
            }
            _ => {}
        }
        old_slots.push(slot);
    }
    let rho = rho.expect("old side is nonempty");

    // Complementary side with opposite chain signs.
    let mut new_pents: Vec<Pent> = Vec::new();
    for slot in 0..6 {
        if old_slots.contains(&slot) {
            continue;
        }
        let mut verts = [0usize; 5];
        let mut k = 0;
        for (i, &v) in u.iter().enumerate() {
            if i != slot {
                verts[k] = v;
                k += 1;
            }
        }
        let chain = if slot % 2 == 0 { 1i8 } else { -1i8 };
        new_pents.push(Pent { verts, sign: -rho * chain });
    }

    // The replacement pents must not already exist elsewhere.
    for np in &new_pents {
        let nset = sorted(np.verts);
        if (0..tri.pents().len()).any(|pi| tri.sorted_pent(pi) == nset) {
            return Err(MoveError::Inapplicable(format!(
                "replacement pent {:?} already present",
                np.verts
            )));
        }
    }

    let mut pents: Vec<Pent> = tri
        .pents()
        .iter()
        .enumerate()
        .filter(|(pi, _)| !old_side.contains(pi))
        .map(|(_, p)| *p)
        .collect();
    pents.extend(new_pents);

    // Drop vertices that no longer appear (the 5-1 move removes one).
    let mut used = vec![false; new_labels.len()];
    for p in &pents {
        for &v in &p.verts {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; new_labels.len()];
    let mut kept_labels = Vec::new();
    for (v, &is_used) in used.iter().enumerate() {
        if is_used {
            remap[v] = kept_labels.len();
            kept_labels.push(new_labels[v].clone());
        }
    }
    for p in &mut pents {
        for v in &mut p.verts {
            *v = remap[*v];
        }
    }

    Ok(Triangulation4::from_pents(kept_labels, pents)?)
}

fn support_vertices(tri: &Triangulation4, pents: &[usize]) -> Result<Vec<usize>, MoveError> {
    let mut support: Vec<usize> = Vec::new();
    for &pi in pents {
        for v in tri.sorted_pent(pi) {
            if !support.contains(&v) {
                support.push(v);
            }
        }
    }
    support.sort_unstable();
    Ok(support)
}

/// Exact combinatorial-isomorphism check (orientation up to a global
/// flip), by signature-pruned backtracking on vertex bijections.
pub fn is_isomorphic(a: &Triangulation4, b: &Triangulation4) -> bool {
    if a.n_vertices() != b.n_vertices()
        || a.pents().len() != b.pents().len()
        || a.edges().len() != b.edges().len()
        || a.triangles().len() != b.triangles().len()
        || a.tets().len() != b.tets().len()
    {
        return false;
    }
    let n = a.n_vertices();
    let signature = |t: &Triangulation4| -> Vec<(usize, usize, Vec<usize>)> {
        (0..t.n_vertices())
            .map(|v| {
                let pent_deg = (0..t.pents().len())
                    .filter(|&pi| t.sorted_pent(pi).contains(&v))
                    .count();
                let edge_deg = t.edges().iter().filter(|e| e.contains(&v)).count();
                let mut nbr: Vec<usize> = t
                    .edges()
                    .iter()
                    .filter(|e| e.contains(&v))
                    .map(|e| if e[0] == v { e[1] } else { e[0] })
                    .map(|w| {
                        (0..t.pents().len())
                            .filter(|&pi| t.sorted_pent(pi).contains(&w))
                            .count()
                    })
                    .collect();
                nbr.sort_unstable();
                (pent_deg, edge_deg, nbr)
            })
            .collect()
    };
    let sig_a = signature(a);
    let sig_b = signature(b);

    let pent_key = |t: &Triangulation4, pi: usize| -> ([usize; 5], i8) {
        (t.sorted_pent(pi), t.sorted_sign(pi))
    };
    let b_pents: Vec<([usize; 5], i8)> = (0..b.pents().len()).map(|pi| pent_key(b, pi)).collect();

    // Backtracking over vertex maps a -> b, pruned by signatures.
    fn extend(
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        a: &Triangulation4,
        sig_a: &[(usize, usize, Vec<usize>)],
        sig_b: &[(usize, usize, Vec<usize>)],
        b_pents: &[([usize; 5], i8)],
    ) -> bool {
        let v = map.len();
        if v == sig_a.len() {
            // All vertices mapped: pent sets must match with a global sign.
            let mut global: Option<i8> = None;
            for pi in 0..a.pents().len() {
                let mut img = a.sorted_pent(pi).map(|x| map[x]);
                let parity = parity_of_sort(img);
                img.sort_unstable();
                let want_sign = a.sorted_sign(pi) * parity;
                match b_pents.iter().find(|(verts, _)| *verts == img) {
                    Some((_, got_sign)) => {
                        let rel = want_sign * got_sign;
                        match global {
                            None => global = Some(rel),
                            Some(g) if g != rel => return false,
                            _ => {}
                        }
                    }
                    None => return false,
                }
            }
            return true;
        }
        for w in 0..sig_b.len() {
            if used[w] || sig_a[v] != sig_b[w] {
                continue;
            }
            map.push(w);
            used[w] = true;
            if extend(map, used, a, sig_a, sig_b, b_pents) {
                return true;
            }
            map.pop();
            used[w] = false;
        }
        false
    }
    let mut map = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend(&mut map, &mut used, a, &sig_a, &sig_b, &b_pents)
}

/// The three pents of the 3-3 configuration around `side`, as (sorted
/// vertex tuple, chain sign) pairs; `points` supplies the labels 0..6.
fn three_three_pents(side: [usize; 3]) -> Vec<([usize; 5], i8)> {
    let comp: Vec<usize> = (0..6).filter(|v| !side.contains(v)).collect();
    comp.iter()
        .map(|&omit| {
            let mut verts = [0usize; 5];
            let mut k = 0;
            for v in 0..6 {
                if v != omit && (side.contains(&v) || comp.contains(&v)) {
                    verts[k] = v;
                    k += 1;
                }
            }
            let sign = if omit % 2 == 0 { 1i8 } else { -1i8 };
            (verts, sign)
        })
        .collect()
}

/// Deficit of the interior triangle of a 3-3 configuration built from six
/// points in R^4, reduced to `(-π, π]`. Vanishes for every flat embedding.
pub fn flatness_check(points: &[Vec4; 6], side: [usize; 3]) -> Result<f64, GeomError> {
    let mut seen = [false; 6];
    for &v in &side {
        if v >= 6 || seen[v] {
            return Err(GeomError::BadInput(format!("bad side triangle {side:?}")));
        }
        seen[v] = true;
    }
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, &c| m.max(c.abs()))
        .max(1e-300);
    for i in 0..6 {
        for j in (i + 1)..6 {
            if vec4::distance(points[i], points[j]) < 1e-9 * scale {
                return Err(GeomError::DegenerateSimplex(format!(
                    "points {i} and {j} coincide"
                )));
            }
        }
    }

    let sorted_side = sorted(side);
    let mut omega = 0.0;
    for (verts, chain) in three_three_pents(sorted_side) {
        let emb = Embedding::from_points(verts.iter().map(|&v| points[v]).collect());
        let det = {
            let p0 = emb.points[0];
            vec4::det4(
                vec4::sub(emb.points[1], p0),
                vec4::sub(emb.points[2], p0),
                vec4::sub(emb.points[3], p0),
                vec4::sub(emb.points[4], p0),
            )
        };
        if det.abs() < 1e-10 * scale.powi(4) {
            return Err(GeomError::DegenerateSimplex(format!(
                "pent {verts:?} is flat in R^4"
            )));
        }
        let local: Vec<usize> = sorted_side
            .iter()
            .map(|v| verts.iter().position(|w| w == v).expect("side in pent"))
            .collect();
        let phi = dihedral_angle(&emb, [local[0], local[1], local[2]])?;
        let eta = chain as f64 * det.signum();
        omega += eta * phi;
    }
    Ok(wrap_angle(omega))
}

/// One spin term of the two-sided 3-3 comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct HexTerm {
    pub s: i64,
    pub term_a: f64,
    pub term_b: f64,
}

/// Truncated two-sided comparison of the 3-3 configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HexagonReport {
    pub interior_a: [usize; 3],
    pub interior_b: [usize; 3],
    pub per_spin: Vec<HexTerm>,
    pub sum_a: f64,
    pub sum_b: f64,
    pub difference: f64,
}

/// Evaluate both sides of the 3-3 configuration with the interior-triangle
/// spin summed over `|s| ≤ cutoff` and the measure `1/(2π)` per term.
///
/// The sides share their 15 edge lengths (from the flat 6-point embedding)
/// and the spins on the 18 common boundary triangles; each side adds its
/// own interior triangle. The tabulation is a truncated diagnostic; no
/// convergence of the two partial sums is asserted.
pub fn hexagon_residual(
    points: &[Vec4; 6],
    side_a: [usize; 3],
    boundary_spins: &BTreeMap<[usize; 3], i64>,
    cutoff: i64,
) -> Result<HexagonReport, StateSumError> {
    let interior_a = sorted(side_a);
    let comp: Vec<usize> = (0..6).filter(|v| !interior_a.contains(v)).collect();
    let interior_b = [comp[0], comp[1], comp[2]];
    flatness_check(points, interior_a).map_err(StateSumError::Geometry)?;
    for key in boundary_spins.keys() {
        if *key == interior_a || *key == interior_b {
            return Err(StateSumError::Labeling(format!(
                "triangle {key:?} is interior to a side; its spin is the summation variable"
            )));
        }
    }

    let build_side = |interior: [usize; 3]| -> Result<(Triangulation4, Labeling), StateSumError> {
        let labels: Vec<String> = (0..6).map(|v| v.to_string()).collect();
        let pents = three_three_pents(interior)
            .into_iter()
            .map(|(verts, sign)| Pent { verts, sign })
            .collect();
        let tri = Triangulation4::from_pents(labels, pents)?;
        let mut lab = Labeling::new();
        for &e in tri.edges() {
            lab.set_length(e, vec4::distance(points[e[0]], points[e[1]]))?;
        }
        for (t, s) in boundary_spins {
            if tri.triangle_index_of(*t).is_some() {
                lab.set_spin(*t, *s);
            }
        }
        Ok((tri, lab))
    };
    let (tri_a, lab_a) = build_side(interior_a)?;
    let (tri_b, lab_b) = build_side(interior_b)?;

    let mut per_spin = Vec::with_capacity((2 * cutoff + 1) as usize);
    let (mut sum_a, mut sum_b) = (0.0, 0.0);
    for s in -cutoff..=cutoff {
        let mut la = lab_a.clone();
        la.set_spin(interior_a, s);
        let mut lb = lab_b.clone();
        lb.set_spin(interior_b, s);
        let term_a = weight(&tri_a, &la)? / (2.0 * PI);
        let term_b = weight(&tri_b, &lb)? / (2.0 * PI);
        sum_a += term_a;
        sum_b += term_b;
        per_spin.push(HexTerm { s, term_a, term_b });
    }
    Ok(HexagonReport {
        interior_a,
        interior_b,
        per_spin,
        sum_a,
        sum_b,
        difference: sum_a - sum_b,
    })
}
