//! Numerical laboratory for the Lorentz group SO(n,1).
//!
//! Modules, bottom-up:
//! - [`liealg`]: so(n,1) generators, brackets, decompositions, Iwasawa.
//! - [`harmonics`]: special functions, spherical harmonics, sphere quadrature.
//! - [`reps`]: spherical complementary series realized on S^{n-1}.
//! - [`shearing`]: sublevel intervals, effective gaps, ε-blocks, shearing experiments.
//! - [`timechange`]: cocycles and time changes over abstract measured flows.
//! - [`renorm`]: geodesic renormalization recurrences for ergodic-average coefficients.

pub mod error;
pub mod harmonics;
pub mod liealg;
pub mod linalg;
pub mod renorm;
pub mod reps;
pub mod shearing;
pub mod stats;
pub mod timechange;

pub use error::{LabError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
