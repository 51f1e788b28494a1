//! Retrodictively optimal joint measurements of rotated quadratures.
//!
//! A measurement is described by a matrix `M` in SL(2,R). Its outcome density
//! depends only on the phase-space metric `MᵀM`, and equals the Wigner function
//! smoothed by a unit-determinant Gaussian kernel built from that metric
//! (a generalized Husimi function).
//!
//! * [`sl2r`] parameterizes and classifies measurement matrices.
//! * [`states`] holds Gaussian and Fock-basis states, Wigner functions and the
//!   rotation/squeeze/displacement operator algebra.
//! * [`husimi`] computes the outcome density three independent ways.
//! * [`sampler`] draws synthetic outcomes from it.

pub mod error;
pub mod husimi;
pub mod sampler;
pub mod sl2r;
pub mod states;

pub use error::{Error, Result};
pub use husimi::{HusimiResult, Method};
pub use sl2r::{CanonicalParams, Decomposition, MetricTensor, Sl2Matrix};
pub use states::{FockDensity, FockVector, GaussianState, GridSpec, PhaseSpaceGrid};
