//! Whitney decompositions, tree coverings, the Hardy-type tree operator,
//! zero-mean decompositions subordinate to tree coverings, and quadrature of
//! weighted Gagliardo-type seminorms on rectilinear domains.

pub mod constants;
pub mod covering;
pub mod decomposition;
pub mod error;
pub mod field;
pub mod functional;
pub mod geometry;
pub mod io;
pub mod report;
pub mod scalar;
pub mod whitney;

pub use error::{FracError, Result};
pub use scalar::{Dyadic, ExactScalar, Rational, Real};

/// Planar domain.
pub type Domain2 = geometry::RectilinearDomain<2>;
/// Planar sampling grid.
pub type Grid2 = field::Grid<2>;
/// Double-precision planar field.
pub type Field2 = field::Field<f64, 2>;
/// Planar kernel.
pub type Kernel2 = functional::KernelSpec<2>;
/// Assembled planar quadratic form.
pub type Form2 = functional::GagliardoForm<2>;
/// Planar Whitney-based covering with dyadic coordinates.
pub type JohnCovering2 = covering::TreeCovering<Dyadic, 2>;
/// Planar cube covering with rational coordinates.
pub type CubeCovering2 = covering::TreeCovering<Rational, 2>;
