//! Synthesis, compilation and simulation of multi-qubit controlled phase gates
//! on weakly-coupled NMR spin systems.
//!
//! The crate is organised as a small compiler pipeline:
//!
//! * [`qstate`] — dense complex linear algebra, state vectors, density matrices.
//! * [`gate`] — the gate set, circuit IR, and the dense controlled-phase oracle.
//! * [`synth`] — recursive decomposition of the controlled phase gate into
//!   controlled z-rotations plus a half-angle compensatory module, with
//!   rewrite passes and an oracle-backed verifier.
//! * [`spin`] — weakly-coupled spin systems (offsets and scalar couplings).
//! * [`pulse`] — pulse-sequence IR and the unitaries/channels of its elements.
//! * [`compile`] — lowering circuits to pulse sequences for a spin system.
//! * [`experiment`] — pseudo-pure state preparation, phase-gate experiments,
//!   spectrum extraction and phase-slope fits.
//!
//! The linear-algebra and gate layers are generic over the scalar type via
//! [`scalar::Scalar`]; the spin-physics layers work in `f64` through the
//! aliases below.

pub mod angle;
pub mod compile;
pub mod error;
pub mod experiment;
pub mod gate;
pub mod pulse;
pub mod qstate;
pub mod scalar;
pub mod spin;
pub mod synth;
pub mod tol;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Default real scalar used by the spin-physics layers.
pub type Real = f64;
/// Complex scalar over [`Real`].
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix over [`Real`].
pub type Matrix = qstate::CMatrix<f64>;
/// State vector over [`Real`].
pub type State = qstate::StateVector<f64>;
/// Density matrix over [`Real`].
pub type Density = qstate::DensityMatrix<f64>;
/// Unitary matrix over [`Real`].
pub type Unitary = qstate::UnitaryMatrix<f64>;
/// Gate over [`Real`] angles.
pub type Gate = gate::Gate<f64>;
/// Circuit over [`Real`] angles.
pub type Circuit = gate::Circuit<f64>;
