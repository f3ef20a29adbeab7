//! Mixed Tate filtered (φ, N)-modules over p-adic fields as explicit matrix data.
//!
//! The crate is organised bottom-up:
//!
//! * [`padic`]: capped-precision arithmetic in `K = Q_p[π]`, Teichmüller lifts and
//!   the branched p-adic logarithm.
//! * [`matrix`] and [`linalg`]: dense matrices and valuation-pivoted elimination.
//! * [`filmod`]: filtered (φ, N)-modules, slope decomposition, mixed-Tate recognition,
//!   weight filtration, morphisms, kernels, cokernels and tensor operations.
//! * [`logpoint`]: the logarithmic points η and η_st, extension classes and the
//!   Kummer / Bloch–Kato builders.
//! * [`grading`] and [`lie`]: graded spaces with a unipotent automorphism, the
//!   equivalence with mixed Tate modules, and free graded Lie algebra dimensions.
//! * [`archimedean`]: real mixed Tate Hodge structures and polylogarithm values.
//! * [`json`]: the interchange formats.

pub mod archimedean;
pub mod corpus;
pub mod error;
pub mod filmod;
pub mod grading;
pub mod json;
pub mod kst;
pub mod lie;
pub mod linalg;
pub mod logpoint;
pub mod matrix;
pub mod padic;

pub use error::{Error, Result};
pub use filmod::{FilPhiNModule, Filtration};
pub use matrix::Mat;
pub use padic::{LocalField, Qp, Scalar};
