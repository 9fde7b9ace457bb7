//! Oscillator-qubit generalized quantum signal processing for vibronic dynamics.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] and [`wigner`]: truncated bosonic operators, hybrid states, phase-space maps.
//! * [`potentials`] and [`dataset`]: one-dimensional potentials and the uracil-cation parameter set.
//! * [`fourier`]: windowed Fourier approximation of `exp(-i dt f(Q)/hbar)`.
//! * [`poly`], [`gqsp`] and [`refine`]: complementary-polynomial completion, angle finding, refinement.
//! * [`compiler`] and [`simulator`]: the hybrid instruction set, circuit builders and a state-vector executor.
//! * [`vibronic`], [`dynamics`] and [`resources`]: model assembly, Trotterized evolution, resource accounting.
//!
//! Energies are in eV, times in fs and mode coordinates are dimensionless.

pub mod compiler;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fock;
pub mod fourier;
pub mod gqsp;
pub mod linalg;
pub mod poly;
pub mod potentials;
pub mod refine;
pub mod resources;
pub mod simulator;
pub mod units;
pub mod vibronic;
pub mod wigner;

pub use error::{Error, Result};
pub use exec::Exec;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
