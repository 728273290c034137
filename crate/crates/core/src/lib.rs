//! Quantifying the outcome-number resource of quantum measurements.
//!
//! An m-outcome POVM that cannot be produced by classically mixing and
//! relabeling n-outcome measurements is a resource relative to the
//! n-outcome-simulable set. This crate computes that resource:
//!
//! - [`robustness`]: the noise robustness of a POVM with respect to the
//!   n-outcome-simulable set, via a primal/dual pair of SDPs solved and
//!   cross-checked against each other.
//! - [`discrimination`]: state-discrimination scores, the optimal-measurement
//!   SDP, the simulable-set optimum, and certification of outcome counts
//!   from observed guessing probabilities.
//! - [`advantage`]: see-saw search for the maximal discrimination advantage,
//!   the m/n upper bound, and the saturating construction for d >= m.
//! - [`generalized`]: linear prepare-and-measure scores beyond plain state
//!   discrimination, witness shifting, and sampled-free-set separations.
//! - [`catalog`]: canonical and seeded-random instances.
//!
//! [`quantum`] holds the dense Hermitian linear algebra and domain types;
//! [`relabeling`] the combinatorics of deterministic outcome relabelings;
//! [`sdp`] the conic adapter that lowers Hermitian programs to a real
//! interior-point backend.

pub mod advantage;
pub mod catalog;
pub mod discrimination;
pub mod error;
pub mod generalized;
pub mod quantum;
pub mod relabeling;
pub mod robustness;
pub mod sdp;

pub use error::{Error, Result};
pub use quantum::{Ensemble, HermitianMatrix, MeasurementAssemblage, Povm};
pub use relabeling::RelabelingScheme;
