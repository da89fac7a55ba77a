//! Energy-stable IMEX time integrators for two-dimensional incompressible
//! magneto-hydrodynamics on a MAC staggered grid.
//!
//! The nonlinear terms are handled explicitly through a scalar auxiliary
//! variable, so each step costs four solves against two constant-coefficient
//! factorizations plus one scalar equation.

pub mod field;
pub mod grid;
pub mod harness;
pub mod ops;
pub mod solver;
pub mod stepper;

pub use field::{inner_product, norms, FaceBc, Field, FieldError, FieldNorms, Location, ScalarField, VectorField};
pub use grid::{GridError, StaggeredGrid};

// The guide's code blocks run as doc-tests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/schemes.md")]
    mod schemes {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
