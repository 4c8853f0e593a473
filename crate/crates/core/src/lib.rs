//! Order unit spaces, symmetric cones and Jordan structure recovery.
//!
//! The crate builds a JB-algebra out of nothing but a gauge-reversing bijection
//! of an open cone, evaluated as a black box: exact derivatives come from Hua's
//! identity, symmetries and the inversion `j` from normalizing those
//! derivatives, the quadratic representation from `j` alone, and the Jordan
//! product from polarizing the quadratic representation.
//!
//! Module map:
//! - [`linalg`], [`cone`], [`space`]: numeric substrate, cone membership,
//!   order-unit norm, gauges, Thompson metric, sampling.
//! - [`jordan`]: builtin Euclidean Jordan algebras and axiom checkers.
//! - [`maps`]: gauge maps with exact inverses, and their property checkers.
//! - [`reconstruction`]: derivative, symmetry, quadratic representation and
//!   product extraction, plus the full identity suite.
//! - [`extremal`]: pure states, extremal vectors and strong atomicity checks.
//! - [`report`]: verification reports and their canonical JSON form.

// `!(a <= b)` is used on purpose so that NaN residuals count as failures.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
pub mod error;
pub mod extremal;
pub mod linalg;
pub mod maps;
pub mod reconstruction;
pub mod jordan;
pub mod report;
pub mod space;

pub use cone::ConeSpec;
pub use error::{Error, Result};
pub use extremal::{ExtremalVector, PureState};
pub use linalg::{Matrix, Vector};
pub use maps::GaugeMapSpec;
pub use jordan::{AlgebraHandle, ProductTensor};
pub use report::VerificationReport;
pub use space::OrderUnitSpace;
