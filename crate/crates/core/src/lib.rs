//! Quadratic matrix inequalities: solution-set analysis, parameterization,
//! projection, S-lemma type certificates, a small LMI solver, and
//! data-driven stabilization built on top of them.
//!
//! Everything is generic over the scalar type through [`scalar::Real`]
//! (`f32` and `f64`); the `*64` aliases below fix double precision.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod data;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod projection;
pub mod random;
pub mod scalar;
pub mod sets;
pub mod textfmt;

pub use error::{QmiError, Result};
pub use linalg::{Definiteness, PartitionedSym, SymMatrix, Tolerances};
pub use scalar::Real;
pub use sets::SetKind;
pub use textfmt::Document;

pub type SymMatrix64 = SymMatrix<f64>;
pub type PartitionedSym64 = PartitionedSym<f64>;
pub type Tolerances64 = Tolerances<f64>;
pub type LmiProblem64 = lmi::LmiProblem<f64>;
pub type ExperimentData64 = data::ExperimentData<f64>;
pub type StabilizationResult64 = data::StabilizationResult<f64>;

pub type SymMatrix32 = SymMatrix<f32>;
pub type PartitionedSym32 = PartitionedSym<f32>;
pub type Tolerances32 = Tolerances<f32>;
