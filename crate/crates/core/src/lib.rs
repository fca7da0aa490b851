//! Integrable geodesic flows on mapping tori of toral automorphisms.
//!
//! The crate is organised along the pipeline:
//!
//! * [`matrix_lab`]: validation of `A ∈ SL(n,ℤ)`, spectra, Jordan structure
//!   of the dual action `Ã = (Aᵀ)⁻¹`.
//! * [`curve_factory`]: the curve `γ(z)` with `γ(z+1) = γ(z)A⁻¹` and the
//!   metric `G(z) = γ(z)ᵀ Ĝ γ(z)`.
//! * [`invariant_forge`]: exact polynomial invariants and the smooth
//!   first-integral families.
//! * [`geodesic_engine`]: Hamiltonian, integrator, deck reduction, Poisson
//!   brackets.
//! * [`dynamics_probe`]: Lyapunov spectra, orbit classification and the other
//!   numerical checks on the SOL model.

pub mod algebra;
pub mod curve_factory;
pub mod dynamics_probe;
pub mod error;
pub mod geodesic_engine;
pub mod invariant_forge;
pub mod matrix_lab;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/monodromy.md")]
    mod monodromy {}
    #[doc = include_str!("../../../book/src/metric.md")]
    mod metric {}
    #[doc = include_str!("../../../book/src/invariants.md")]
    mod invariants {}
    #[doc = include_str!("../../../book/src/flow.md")]
    mod flow {}
    #[doc = include_str!("../../../book/src/probes.md")]
    mod probes {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
