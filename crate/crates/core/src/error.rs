use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera pose: {0}")]
    InvalidPose(String),

    /// The two optical axes are parallel within tolerance, so the point closest
    /// to both is not unique.
    #[error("degenerate axes: |1 - |cos angle|| = {deviation:.3e} is below the parallel tolerance")]
    DegenerateAxes { deviation: f64 },

    #[error("camera pair ({i}, {j}) has parallel optical axes")]
    DegeneratePair { i: usize, j: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate scale: maximum translation norm {max_norm:.3e} is too small to normalize")]
    DegenerateScale { max_norm: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("training diverged at epoch {epoch}: l_ori = {l_ori}, l_tgraph = {l_tgraph}")]
    Diverged { epoch: usize, l_ori: f64, l_tgraph: f64 },
}
