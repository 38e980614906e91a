//! Numerical logarithmic potential theory in the complex plane.
//!
//! Compact sets are handled through boundary discretizations
//! ([`geometry::SetDiscretization`]) and all measures are discrete
//! ([`measures::DiscreteMeasure`]). On top of these the crate computes
//! capacities and Green functions ([`potential`]), orthonormal polynomials and
//! Bernstein–Markov ratios ([`bergman`]), mass-density criteria and separating
//! maps ([`criteria`]), and rational approximation rates ([`meromorphic`]).

pub mod bergman;
pub mod criteria;
pub mod error;
pub mod expr;
mod fit;
pub mod geometry;
pub mod measures;
pub mod meromorphic;
pub mod par;
pub mod potential;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
