//! Exact discretizations of the harmonic oscillator and the numerical
//! schemes built on top of them.
//!
//! The crate is organised bottom-up:
//!
//! * [`phasefun`] evaluates `cos(Ωε)`, `Ω⁻¹ sin(Ωε)` and friends from `Ω²`.
//! * [`exact1d`] and [`exactnd`] hold the exact steppers, recurrences and
//!   discrete energy invariants.
//! * [`geofamily`] is the three-parameter family of symplectic linear maps.
//! * [`refschemes`] and [`locexact`] are the derived integrators (Gautschi,
//!   exponential integrators, locally exact discrete gradients).
//! * [`apps`] covers Kepler orbits through the Binet equation and spectral
//!   wave stepping.
//! * [`harness`] runs configurations, compares steppers and serializes
//!   trajectories; [`acceptance`] is the end-to-end self test.

pub mod acceptance;
pub mod apps;
pub mod error;
pub mod exact1d;
pub mod exactnd;
pub mod geofamily;
pub mod harness;
pub mod locexact;
pub mod phasefun;
pub mod reference;
pub mod refschemes;

pub use error::{OscError, Result};
pub use exact1d::{EnergyQuad, Osc1DSpec, Phase1D};
pub use exactnd::{Forcing, OscNDSpec, PhaseND};
pub use harness::{RunConfig, StepperKind, Trajectory};
pub use phasefun::{PhaseFunctionSet, SquareMatrix};
