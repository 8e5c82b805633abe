use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("unresolved vortex core at boundary node {node}: |u| = {modulus:.4}")]
    UnresolvedCore { node: usize, modulus: f64 },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("unresolved phase across edge ({0}, {1})")]
    UnresolvedPhase(usize, usize),
    #[error("interior vortex: cycle phase sum {0:.6}")]
    InteriorVortex(f64),
    #[error("vortex inside projector cell {cell}: min |w| = {min_modulus:.4}")]
    VortexInCell { cell: usize, min_modulus: f64 },
    #[error("line search failed at iteration {iteration} (energy {energy:.6e}, grad norm {grad_norm:.3e})")]
    LineSearch {
        iteration: usize,
        energy: f64,
        grad_norm: f64,
    },
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: Box<Error> },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
