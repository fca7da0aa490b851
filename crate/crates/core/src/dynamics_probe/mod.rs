//! Numerical probes of the SOL geodesic flow: orbit types, Lyapunov
//! spectra, asymptotics, the fiber return map, independence and entropy.

pub mod asymptotics;
pub mod classify;
pub mod entropy;
pub mod independence;
pub mod lyapunov;
pub mod return_map;
pub mod sol;

pub use asymptotics::{asymptotic_check, AsymptoticReport, DirectionReport};
pub use classify::{classify_state, sol_state, OrbitClass, OrbitTag, Witness, CLASSIFY_EPS};
pub use entropy::{entropy_report, EntropyReport, ENTROPY_GAP};
pub use independence::{independence_rank, jacobian_rank, RankStats, RANK_THRESHOLD};
pub use lyapunov::{lyapunov_spectrum, LyapunovOptions, LyapunovReport, MIN_HORIZON};
pub use return_map::{fiber_return_map, return_point, ReturnMapReport};
pub use sol::{sol_triple, SolAxes};
