//! Geodesic flow on the cylinder and on the mapping torus.
//!
//! The phase space is `T*(Tⁿ × ℝ)` with the symplectic form
//! `Σ dxⁱ ∧ dpᵢ + dz ∧ dp_z` and `H = ½(pᵀG⁻¹(z)p + p_z²)`. Since `H` does
//! not depend on `x`, the fiber momenta are conserved on the cylinder.

pub mod bracket;
pub mod flow;
pub mod ode;
mod tableau;

pub use bracket::{
    bracket_jets, gradient_matrix, poisson_bracket, poisson_bracket_scaled, relative_bracket, Energy, LocalIntegral,
    Momentum, Numeric, PhaseFunction, PhaseJet,
};
pub use flow::{
    equations_of_motion, hamiltonian, integrate, integrate_quotient, integrate_sampled, jacobian, random_unit_state,
    reduce_mod_deck, reduce_with_tangents, Diagnostics, PhaseState, SampleOptions, Trajectory, UNIT_BUNDLE_TOL,
};
pub use ode::{OdeOptions, OdeStats, TOL_RANGE};
