//! Property tests for the length-based geometry: Heron consistency,
//! embedding round trips, volume consistency, and dihedral closure.

use proptest::prelude::*;
use statesum_core::geometry4d::{
    cm_volume, dihedral_angle, embed, simplex_v, triangle_area, EdgeLengthSet, Embedding,
};
use statesum_core::vec4::{self, Vec4};

/// Random five points in a box with decent shape quality: the determinant
/// must be a reasonable fraction of the fourth power of the diameter, so
/// relative comparisons stay meaningful.
fn five_points() -> impl Strategy<Value = [Vec4; 5]> {
    prop::array::uniform5(prop::array::uniform4(-1.0f64..1.0))
        .prop_filter("nondegenerate", |pts| {
            let d = vec4::det4(
                vec4::sub(pts[1], pts[0]),
                vec4::sub(pts[2], pts[0]),
                vec4::sub(pts[3], pts[0]),
                vec4::sub(pts[4], pts[0]),
            );
            let mut diameter: f64 = 0.0;
            for i in 0..5 {
                for j in (i + 1)..5 {
                    diameter = diameter.max(vec4::distance(pts[i], pts[j]));
                }
            }
            d.abs() > 1e-3 * diameter.powi(4)
        })
}

fn lengths_of(points: &[Vec4]) -> EdgeLengthSet {
    let n = points.len();
    let mut lens = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            lens.push(vec4::distance(points[i], points[j]));
        }
    }
    EdgeLengthSet::new(n, lens).expect("distinct points give positive lengths")
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn heron_matches_cayley_menger(l in 0.1f64..10.0, m in 0.1f64..10.0, n in 0.1f64..10.0) {
        let heron = triangle_area(l, m, n).unwrap();
        if heron > 0.0 {
            let set = EdgeLengthSet::new(3, vec![l, m, n]).unwrap();
            let cm = cm_volume(2, &set).unwrap();
            prop_assert!((heron - cm).abs() <= 1e-12 * heron.max(1.0),
                "heron {heron} vs cm {cm}");
        }
    }

    #[test]
    fn embedding_reproduces_lengths(pts in five_points()) {
        let lengths = lengths_of(&pts);
        for ori in [1i8, -1] {
            let emb = embed(&lengths, ori).unwrap();
            let err = emb.max_distance_error(&lengths);
            prop_assert!(err <= 1e-10 * lengths.max_length(), "distance error {err}");
        }
    }

    #[test]
    fn volume_matches_embedded_determinant(pts in five_points()) {
        let lengths = lengths_of(&pts);
        let v = simplex_v(&lengths).unwrap();
        for ori in [1i8, -1] {
            let emb = embed(&lengths, ori).unwrap();
            let det = vec4::det4(
                vec4::sub(emb.points[1], emb.points[0]),
                vec4::sub(emb.points[2], emb.points[0]),
                vec4::sub(emb.points[3], emb.points[0]),
                vec4::sub(emb.points[4], emb.points[0]),
            );
            prop_assert!((v - det.abs()).abs() <= 1e-10 * v,
                "V {v} vs |det| {}", det.abs());
        }
    }

    #[test]
    fn dihedral_angles_are_mirror_invariant(pts in five_points()) {
        let lengths = lengths_of(&pts);
        let plus = embed(&lengths, 1).unwrap();
        let minus = embed(&lengths, -1).unwrap();
        for t in statesum_core::symbols::PENT_TRIANGLES {
            let a = dihedral_angle(&plus, t).unwrap();
            let b = dihedral_angle(&minus, t).unwrap();
            prop_assert!((a - b).abs() < 1e-11);
            prop_assert!(a > 0.0 && a < std::f64::consts::PI);
        }
    }

    /// Schläfli-type closure: three 4-simplices around the interior
    /// triangle of a 3-3 configuration have vanishing signed angle sum.
    #[test]
    fn dihedral_closure_around_shared_triangle(
        pts in prop::array::uniform6(prop::array::uniform4(-1.0f64..1.0))
    ) {
        let ok = statesum_core::pachner::flatness_check(&pts, [0, 1, 2]);
        if let Ok(residual) = ok {
            prop_assert!(residual.abs() < 1e-9, "residual {residual}");
        }
    }

    /// Dihedral angles computed from an explicit point embedding agree with
    /// the length-only route.
    #[test]
    fn dihedral_from_points_matches_length_route(pts in five_points()) {
        let lengths = lengths_of(&pts);
        let from_points = Embedding::from_points(pts.to_vec());
        let from_lengths = embed(&lengths, 1).unwrap();
        for t in statesum_core::symbols::PENT_TRIANGLES {
            let a = dihedral_angle(&from_points, t).unwrap();
            let b = dihedral_angle(&from_lengths, t).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "triangle {t:?}: {a} vs {b}");
        }
    }
}
