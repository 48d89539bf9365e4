//! Euclidean state-sum engine on triangulated 4-manifolds.
//!
//! The crate computes the 4-simplex weights of a state-sum model whose
//! labels are edge lengths (positive reals) and triangle spins (integers):
//! the `10j 2-symbol` `(-1)^{Σ s_t} cos(Σ s_t φ_t) / V` built from the
//! dihedral angles `φ_t` and the scaled volume `V` of a Euclidean
//! 4-simplex. Alongside the closed form it carries an independent
//! rotation-trace oracle: alignment rotations in SO(4), a U(1) phase
//! cocycle, and the angle extraction that ties the two routes together.
//!
//! Module map:
//! - [`geometry4d`] — metric geometry from edge lengths: areas,
//!   Cayley–Menger volumes, embeddings, dihedral angles, reference frames.
//! - [`so4`] — SO(4) as pairs of unit quaternions, Haar sampling, the
//!   phase cocycle `Φ^s`, and alignment rotations.
//! - [`symbols`] — the 10j symbol, the trace oracle, the angle-lemma
//!   verifier, and Monte Carlo measure normalization checks.
//! - [`statesum`] — triangulated 4-manifolds, weights, deficit angles,
//!   and cutoff partition estimates.
//! - [`pachner`] — bistellar moves and flatness diagnostics.

pub mod geometry4d;
pub mod pachner;
pub mod so4;
pub mod statesum;
pub mod symbols;
pub mod vec4;

pub use geometry4d::{EdgeLengthSet, Embedding, GeomError, GramFactorization};
pub use so4::{PhaseCocycle, Rotation};
pub use statesum::{Labeling, Triangulation4};
pub use symbols::{TenJInput, TenJResult};
