//! Numerical tolerances used across the crate.
//!
//! Values are fixed by the contracts of the operations they guard, not tuned
//! per test.

/// State-vector normalization and Hermiticity of stored matrices.
pub const STATE: f64 = 1e-12;

/// Unitarity of operator matrices and trace conditions on density matrices.
pub const OPERATOR: f64 = 1e-10;

/// Exact-arithmetic comparisons passed through short dense products.
pub const EXACT: f64 = 1e-10;

/// Compiled pulse sequences against their circuit unitaries.
pub const COMPILED: f64 = 1e-8;

/// Simulated observables against closed-form predictions.
pub const OBSERVABLE: f64 = 1e-6;

/// Amplitudes below this are treated as absent when building spectra.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;
