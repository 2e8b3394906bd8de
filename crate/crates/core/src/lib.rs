//! Computable q-Meixner Markov processes.
//!
//! The transition law `P_{s,t}(x, dy)` of a q-Meixner process is the
//! orthogonality measure of an explicit monic three-term recurrence, and so
//! is the measure `nu_{x,t}` against which the weak infinitesimal generator
//! acts as a singular integral. This crate turns those recurrences into
//! Gauss quadrature rules and builds transition operators, generators,
//! identity checks and path simulation on top of them.
//!
//! * [`qnum`]: q-integers, q-factorials, q-binomials.
//! * [`poly`]: dense polynomials and divided differences.
//! * [`recurrence`]: the `Q`, `W` and martingale families.
//! * [`spectra`]: Jacobi matrices, the tridiagonal eigensolver, quadrature.
//! * [`markov`]: transition operators and generators.
//! * [`simulate`]: seeded path simulation.
//! * [`verify`]: identity suites over parameter grids.

pub mod cli;
pub mod error;
pub mod markov;
pub mod poly;
pub mod qnum;
pub mod recurrence;
pub mod report;
pub mod simulate;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use poly::Poly;
pub use qnum::ProcessParams;
pub use recurrence::RecurrenceCoeffs;
pub use spectra::{DiscreteMeasure, JacobiMatrix};
