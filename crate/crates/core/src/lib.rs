//! Numerical toolkit for renormings of `c_0`-type spaces.
//!
//! The crate evaluates a family of equivalent norms on finitely supported
//! vectors and checks their quantitative geometry:
//!
//! * [`psi`] solves the implicit fixed point that describes the seed norm
//!   inside its cone,
//! * [`seed_norm`] evaluates the seed norm and its derivative, slice and cone
//!   bounds,
//! * [`smooth`] builds the smooth bump profile, Minkowski functionals of
//!   implicit bodies, the two-norm combination and the approximators,
//! * [`cascade`] glues countably many approximated seed norms into one norm
//!   that stabilizes exactly on finitely supported inputs,
//! * [`analysis`] runs difference quotients, non-uniform Gateaux witnesses
//!   and slice diameter estimates,
//! * [`biortho`] extracts almost biorthogonal systems from weak*-null
//!   functional streams,
//! * [`verify`] drives every suite and writes reproducible report bundles.

// NaN-rejecting range checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod biortho;
pub mod cascade;
pub mod directions;
pub mod error;
pub mod norm;
pub mod psi;
pub mod report;
pub mod rng;
pub mod seed_norm;
pub mod smooth;
pub mod vectors;
pub mod verify;

pub use error::{RenormError, Result};
pub use norm::{Norm, NormOracle, Provenance};
pub use report::{Check, Report};
pub use vectors::{cone_side, pairing, sup_norm, ConeSide, DualFunctional, SparseVector};
