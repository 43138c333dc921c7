//! Numerical toolkit for toric Kähler quantization.
//!
//! Everything happens in action-angle coordinates `(x, θ)` on the open orbit
//! `P̊ × Tⁿ` of a toric manifold built from a Delzant polytope `P`:
//!
//! * [`polytope`]: exact halfspace data, vertices, lattice points, slices.
//! * [`subtorus`]: the projection `i_k*`, adapted lattice bases, convex functions.
//! * [`potential`]: the canonical potential `g₀` and the family `g₀ + t·φ∘i_k*`.
//! * [`legendre`]: `y = ∇g(x)`, its Newton inverse, the Kähler potential.
//! * [`polarization`]: complex structures, polarization frames, principal angles.
//! * [`sections`]: monomial section norms and concentration weights.
//! * [`quadrature`]: integration over polytopes and slices, concentration runs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod expr;
pub mod fixtures;
pub mod legendre;
pub mod linalg;
pub mod polarization;
pub mod polytope;
pub mod potential;
pub mod quadrature;
pub mod rational;
pub mod sampling;
pub mod sections;
pub mod subtorus;

pub use error::{Error, Result};
pub use polytope::{DelzantPolytope, Facet, LatticePoint, Slice, Vertex};
pub use potential::SymplecticPotential;
pub use subtorus::{AdaptedBasis, ConvexFunction, SubtorusProjection};
