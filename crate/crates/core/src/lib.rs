//! Immanant-filtered randomized benchmarking for passive linear-optical
//! (bosonic) devices.
//!
//! The crate is organised bottom-up:
//!
//! * [`rep_theory`], [`symmetric_group`], [`gt_basis`]: exact combinatorics of
//!   SU(m) irreps, `S_d` characters and Gelfand–Tsetlin patterns.
//! * [`immanant`]: immanants, permanents and determinants over any [`Ring`].
//! * [`irrep_matrices`], [`kostant_check`]: matrix realisations of irreps and the
//!   zero-weight trace identity tying them to immanants.
//! * [`simulator`], [`analysis`]: noisy benchmarking experiments and the
//!   filter / fit / figure-of-merit pipeline.
//! * [`config`], [`pipeline`], [`selfcheck`], [`io`]: orchestration used by the CLI.

pub mod analysis;
pub mod config;
pub mod error;
pub mod scalar;
pub mod selfcheck;

pub mod gt_basis;
pub mod immanant;
pub mod io;
pub mod irrep_matrices;
pub mod kostant_check;
pub mod linalg;
pub mod pipeline;
pub mod rep_theory;
pub mod simulator;
pub mod symmetric_group;

pub use error::{Error, Result};
pub use rep_theory::Partition;
pub use scalar::{Real, Ring};

/// Complex scalar used by the numerical code paths.
pub type Complex<T> = num_complex::Complex<T>;
/// Dense matrix over a generic scalar.
pub type Matrix<T> = nalgebra::DMatrix<T>;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;
/// Single-precision complex scalar.
pub type C32 = Complex<f32>;
/// Dense double-precision complex matrix.
pub type CMatrix = Matrix<C64>;
/// Exact rational scalar for identities that must hold without rounding.
pub type Rational = num_rational::Ratio<i64>;
