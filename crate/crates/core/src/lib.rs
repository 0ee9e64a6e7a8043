//! Multiple orthogonal polynomials of mixed type: moment matrices,
//! Gauss–Borel factorization, banded recurrences and Christoffel chains.

pub mod christoffel;
pub mod cli;
pub mod error;
pub mod gaussborel;
pub mod matrix;
pub mod measures;
pub mod moments;
pub mod oracles;
pub mod recurrence;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use gaussborel::{factorize, GaussBorelFactors, PolySet, PolynomialTable, Side};
pub use matrix::Matrix;
pub use measures::{CyclingOrder, Family, JacobiPineiroParams, LaguerreFirstKindParams, MeasureMatrix};
pub use moments::MomentMatrix;
pub use recurrence::{build_t, build_t_via_upper, BandedRecurrence};
pub use scalar::{Mode, PrecisionContext, Scalar};
