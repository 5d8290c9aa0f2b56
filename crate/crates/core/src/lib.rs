//! Extended reduced state of the field (RSF) for open multimode bosonic dynamics.
//!
//! The state of an `N`-mode field is represented by its low-order moments
//! ([`ReducedState`]): the single-particle matrix `rho`, the mean field
//! `alpha`, the anomalous moment `r`, the fourth-order matrix `rho4` and the
//! third-order tensor `beta`. Composite indices are zero-based and row-major,
//! `idx(i, j) = i * N + j`.
//!
//! A brute-force truncated Fock-space implementation lives in [`fock`] and
//! serves as the reference for everything else.

pub mod entanglement;
pub mod error;
pub mod evolution;
pub mod factory;
pub mod fock;
pub mod moments;
pub mod ode;
pub mod optics;
pub mod second_order;
pub mod state;
pub mod tensor;

pub use entanglement::{
    covariance_from_reduced, covariance_ppt, critical_time, gen_q, mandel_q, ppt_report,
    rsf_entropy, CovarianceMatrix, PptReport, Verdict,
};
pub use error::{Result, RsfError};
pub use evolution::{
    bath_to_gamma, integrate, rhs, rhs_projected, GeneratorSpec, ProjectedState, Schedule,
    ThermalBathSpec,
};
pub use factory::{build, reduce_from_fock, StatePreset};
pub use fock::{FockSpace, FockState};
pub use optics::{
    apply_mode_unitary, beamsplitter_unitary, detector_efficiency, diagonalize_hamiltonian,
    phase_segment, phase_shifter, phase_unitary,
};
pub use second_order::{integrate_second_order, rhs_second_order, SecondOrderState};
pub use state::{
    compose_product, expectation, normalize_projected, partial_transpose_second,
    project_bipartition, Bipartition, Observable, ReducedState, TwoQuditState,
};
pub use tensor::{swap_matrix, tau_left, tau_right};

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;
pub type CVec = nalgebra::DVector<C64>;

/// Numerical thresholds shared across modules.
pub mod tol {
    /// Structural checks (Hermiticity, symmetry, unitarity).
    pub const STRUCT: f64 = 1e-10;
    /// Below this trace a projected block counts as empty.
    pub const TRACE: f64 = 1e-12;
    /// PPT eigenvalues below `-DETECT` are reported as entangled.
    pub const DETECT: f64 = 1e-10;
    /// Anti-Hermitian part of a projected block that is treated as a bug.
    pub const HERMITICITY_GUARD: f64 = 1e-8;
    /// Edge population of a truncated Fock state that triggers a warning.
    pub const LEAKAGE_WARN: f64 = 1e-8;
    /// Edge population that aborts an oracle run.
    pub const LEAKAGE_ABORT: f64 = 1e-6;
}
