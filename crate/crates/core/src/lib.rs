//! Hypergeometric functions `F_{L,N}` (Gauss `2F1`, Thomae `LF(L-1)`,
//! Lauricella `F_D`) through their rank `N(L-1)+1` Pfaffian system.
//!
//! * [`params`]: parameter sets, derived exponents, affine reparameterizations.
//! * [`series`]: the power series and the holomorphic solution at the origin.
//! * [`pfaffian`]: residue matrices, connection, Riemann scheme, flatness.
//! * [`continuation`]: analytic continuation along paths and monodromy.
//! * [`euler`]: Euler-type integrals and fundamental systems of solutions.
//! * [`isomono`]: Fuchsian/Lax systems and Hamiltonians of the associated
//!   isomonodromic deformation.
//! * [`acceptance`]: the end-to-end checks shared by the test suite and the CLI.
//!
//! Coordinate indices `i, j` are 0-based throughout. Level indices `n, k`
//! keep their `1..=L-1` numbering, since level `0` is meaningful.

pub mod acceptance;
pub mod continuation;
pub mod error;
pub mod euler;
pub mod gamma;
pub mod isomono;
pub mod matrix;
pub mod params;
pub mod pfaffian;
pub mod poly;
pub mod quadrature;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use params::{IsoParams, ParameterSet, ParamsDoc};
pub use pfaffian::{build_system, DivisorId, PfaffianSystem};
pub use scalar::{rat, Rational, Scalar};
pub use series::{eval_series, eval_series_auto, holomorphic_solution_vector, SeriesValue};
