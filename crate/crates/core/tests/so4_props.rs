//! Property tests for the rotation group layer: homomorphism, cocycle law,
//! alignment uniqueness, and Haar invariance.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statesum_core::geometry4d::reference_tetrahedron;
use statesum_core::geometry4d::EdgeLengthSet;
use statesum_core::so4::{
    align_tetrahedron, haar_sample, u1, PhaseCocycle, Quat, Rotation,
};
use statesum_core::vec4::{self, Vec4};

fn rotation_strategy() -> impl Strategy<Value = Rotation> {
    prop::array::uniform8(-1.0f64..1.0)
        .prop_filter("away from zero", |v| {
            let n1 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
            let n2 = v[4] * v[4] + v[5] * v[5] + v[6] * v[6] + v[7] * v[7];
            n1 > 1e-2 && n2 > 1e-2
        })
        .prop_map(|v| {
            Rotation::new(
                Quat::new(v[0], v[1], v[2], v[3]),
                Quat::new(v[4], v[5], v[6], v[7]),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn action_is_a_homomorphism(a in rotation_strategy(), b in rotation_strategy(),
                                x in prop::array::uniform4(-2.0f64..2.0)) {
        let lhs = Rotation::compose(&a, &b).apply(x);
        let rhs = a.apply(b.apply(x));
        prop_assert!(vec4::distance(lhs, rhs) < 1e-12);
    }

    #[test]
    fn rotations_preserve_norms(g in rotation_strategy(), x in prop::array::uniform4(-2.0f64..2.0)) {
        prop_assert!((vec4::norm(g.apply(x)) - vec4::norm(x)).abs() < 1e-12);
    }

    #[test]
    fn cocycle_law(g in rotation_strategy(), theta in -7.0f64..7.0, s in -10i64..=10) {
        let c = PhaseCocycle::new(s);
        let lhs = c.phi(&(g * u1(theta)));
        let rhs = Complex64::from_polar(1.0, s as f64 * theta) * c.phi(&g);
        prop_assert!((lhs - rhs).norm() < 1e-10);
        prop_assert!((c.phi(&g).norm() - 1.0).abs() < 1e-12, "nowhere vanishing");
    }

    /// The tetrahedron alignment maps all four vertices, not just the frame
    /// it was solved from.
    #[test]
    fn alignment_moves_every_vertex(seed in any::<u64>()) {
        let lens = EdgeLengthSet::new(4, vec![1.0, 1.2, 0.9, 1.1, 1.3, 0.95]).unwrap();
        let reference = reference_tetrahedron(&lens).unwrap();
        let g = haar_sample(&mut ChaCha8Rng::seed_from_u64(seed));
        let dst: Vec<Vec4> = reference.points.iter().map(|p| g.apply(*p)).collect();
        let got = align_tetrahedron(&reference.points, &dst).unwrap();
        for (p, d) in reference.points.iter().zip(dst.iter()) {
            prop_assert!(vec4::distance(got.apply(*p), *d) < 1e-11);
        }
    }
}

/// Left translation by a fixed rotation leaves Haar moments unchanged.
#[test]
fn haar_left_invariance_of_moments() {
    let n = 40_000;
    let fixed = haar_sample(&mut ChaCha8Rng::seed_from_u64(7));
    let mut plain = [[0.0f64; 4]; 4];
    let mut translated = [[0.0f64; 4]; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..n {
        let g = haar_sample(&mut rng);
        let m = g.matrix();
        let tm = Rotation::compose(&fixed, &g).matrix();
        for r in 0..4 {
            for c in 0..4 {
                plain[r][c] += m[r][c] * m[r][c];
                translated[r][c] += tm[r][c] * tm[r][c];
            }
        }
    }
    // Second moments of matrix entries are 1/4 with sampling error ~ n^{-1/2}.
    let sigma = 4.0 / (n as f64).sqrt();
    for r in 0..4 {
        for c in 0..4 {
            let a = plain[r][c] / n as f64;
            let b = translated[r][c] / n as f64;
            assert!((a - 0.25).abs() < sigma, "plain moment {a}");
            assert!((b - 0.25).abs() < sigma, "translated moment {b}");
        }
    }
}
