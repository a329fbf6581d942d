use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid grid size {0}: need an even m >= 16")]
    InvalidGrid(usize),
    #[error("curve is not regular: speed {speed:e} at t = {t}")]
    NonRegular { t: f64, speed: f64 },
    #[error("curve does not close: residual {residual:e} in derivative order {order}")]
    NotClosed { residual: f64, order: usize },
    #[error("inflexion point at t = {t} (|r'xr''| = {norm:e})")]
    InflexionPoint { t: f64, norm: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("frame overlap vanishes (min {min_overlap:e}); phase winding ill-defined")]
    OverlapVanishes { min_overlap: f64 },
    #[error("curve self-intersects on the grid: chord {distance:e}")]
    SelfIntersection { distance: f64 },
    #[error("curves touch: distance {distance:e}")]
    CurvesTouch { distance: f64 },
    #[error("{quantity} not converged: delta {delta:e} at m = {m}")]
    NotConverged { quantity: String, delta: f64, m: usize },
    #[error("ribbon offset {epsilon} too large (limit {limit})")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },
    #[error("point outside asymptotic window: {0}")]
    OutsideWindow(String),
    #[error("insufficient rows: {0}")]
    InsufficientRows(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl GeomError {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            GeomError::InvalidGrid(_)
                | GeomError::LengthMismatch { .. }
                | GeomError::OutsideWindow(_)
                | GeomError::InvalidInput(_)
                | GeomError::Io(_)
                | GeomError::EpsilonTooLarge { .. }
                | GeomError::InsufficientRows(_)
        )
    }

    /// Short stable code for machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            GeomError::InvalidGrid(_) => "invalid_grid",
            GeomError::NonRegular { .. } => "non_regular",
            GeomError::NotClosed { .. } => "not_closed",
            GeomError::InflexionPoint { .. } => "inflexion_point",
            GeomError::LengthMismatch { .. } => "length_mismatch",
            GeomError::OverlapVanishes { .. } => "overlap_vanishes",
            GeomError::SelfIntersection { .. } => "self_intersection",
            GeomError::CurvesTouch { .. } => "curves_touch",
            GeomError::NotConverged { .. } => "not_converged",
            GeomError::EpsilonTooLarge { .. } => "epsilon_too_large",
            GeomError::OutsideWindow(_) => "outside_window",
            GeomError::InsufficientRows(_) => "insufficient_rows",
            GeomError::InvalidInput(_) => "invalid_input",
            GeomError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
