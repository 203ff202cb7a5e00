use thiserror::Error;

use crate::geometry::GeometryError;
use crate::kernels::KernelError;
use crate::operators::SolveError;
use crate::specfun::SpecfunError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("normal data has weighted mean {0:e}; it must vanish")]
    Compatibility(f64),
    #[error("vortex {index} is within {distance:e} of a sheet node")]
    Proximity { index: usize, distance: f64 },
    #[error("vortices {0} and {1} coincide")]
    CoincidentVortices(usize, usize),
    #[error("fixed point did not converge in {iterations} iterations (last increment {increment:e})")]
    FixedPoint { iterations: usize, increment: f64 },
    #[error("tangent length fell to {ratio:e} of its initial minimum at node {index}")]
    Degenerate { index: usize, ratio: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
