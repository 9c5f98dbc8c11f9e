use thiserror::Error;

use crate::eigensolve::SolveError;
use crate::mesh::MeshError;
use crate::patch::PatchError;
use crate::quadrature::QuadratureError;
use crate::reconstruction::ReconstructionError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("biharmonic forms need degree m >= 2, got {0}")]
    DegreeTooLow(usize),
    #[error("cannot match exact eigenvalue #{index}: neighbouring exact eigenvalues closer than twice the discrete cluster spread")]
    ClusterAmbiguous { index: usize },
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Reconstruction(_)
                | Error::Solve(_)
                | Error::Patch(_)
                | Error::ClusterAmbiguous { .. }
        )
    }
}
