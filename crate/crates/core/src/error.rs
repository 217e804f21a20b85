use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not unitary (max |UU† - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("unsupported basis {name} for {modes} mode(s)")]
    UnsupportedBasis { name: String, modes: usize },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("heralding probability {0:.3e} vanishes; the state cannot be photon-subtracted")]
    Unheralded(f64),

    #[error("truncation leak {leak:.3e} exceeds bound {bound:.1e}; raise the cutoff")]
    Truncation { leak: f64, bound: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
