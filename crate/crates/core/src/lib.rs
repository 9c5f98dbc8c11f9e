//! Patch-reconstructed discontinuous Galerkin solvers for elliptic eigenvalue
//! problems.
//!
//! The approximation space carries one degree of freedom per mesh element. On
//! every element a polynomial of degree `m` is fitted by least squares to the
//! values sampled at the barycenters of a small element patch; the resulting
//! piecewise polynomials are used inside symmetric interior penalty forms for
//! the Laplace (`-Δu = λu`) and biharmonic (`Δ²u = λu`) operators.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: generators, MSH 2.2 and polygon readers, face topology, element geometry.
//! * [`quadrature`]: simplex and face rules.
//! * [`patch`]: element patches grown by nearest face neighbours.
//! * [`reconstruction`]: local least-squares fits and the global space.
//! * [`assembly`]: stiffness, mass and energy norms in symmetric sparse storage.
//! * [`eigensolve`]: dense and shift-invert generalized eigensolvers.
//! * [`analysis`]: exact spectra, error measurement, convergence and reliability studies.

pub mod analysis;
pub mod assembly;
pub mod eigensolve;
mod error;
pub mod mesh;
pub mod patch;
pub mod quadrature;
pub mod reconstruction;

pub use error::{Error, Result};

/// Coordinates are always stored with three components; 2D meshes keep `z = 0`.
pub type Point = [f64; 3];

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}
