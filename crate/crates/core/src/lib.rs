//! Numerical laboratory for constant mean curvature graphs over strips.
//!
//! The crate solves the Dirichlet problem
//! `div(∇u / √(1 + |∇u|²)) = 2H` on truncations of the strip `ℝ × (−l, l)`
//! and provides the comparison surfaces (half-cylinders, nodoids, horizontal
//! cylinders), the rolling-circle certificates for the boundary datum, and
//! the flux 1-form used to study uniqueness.

pub mod barrier;
pub mod boundary_geometry;
pub mod error;
pub mod field;
pub mod flux;
pub mod nodoid;
pub mod quadrature;
pub mod solver;

pub use boundary_geometry::{BoundaryFunction, Expr};
pub use error::{Error, Result};
pub use field::{Grid, RowSpacing, ScalarField};
pub use nodoid::{NodoidParams, NodoidProfile};
pub use solver::{Case, SidePolicy, SolverConfig, StripProblem};
