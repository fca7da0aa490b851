//! Exact construction of the first-integral families.

pub mod expr;
pub mod family;
pub mod lemma;
pub mod poly;
pub mod rotation;

pub use expr::{Evaluation, Expr, Jet, SmoothIntegral, FLAT_GUARD};
pub use family::{
    build_q, coordinate_family, jordan_layout, q_integral, smooth_family, verify_q_invariance, JordanLayout,
    QInvariance,
};
pub use lemma::{apply_l, defining_relation_defect, shifted_jk, solve_gk, solve_gk_formal, Jk};
pub use poly::{momentum_names, CompiledPoly, Monomial, MultiPoly, RatPoly};
pub use rotation::{rotation_invariants, RotationInvariants};
