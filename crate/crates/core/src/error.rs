use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value at t = {t} in component {index}")]
    NumericalBlowup { t: f64, index: usize },

    #[error("adaptive step fell below h_min = {h_min} at t = {t}")]
    StepUnderflow { t: f64, h_min: f64 },

    #[error("input gain bracket expansion failed at t = {t} (|u| reached {bound})")]
    GainFloorViolated { t: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("section was never crossed after the transient window")]
    NoCrossings,

    #[error("period estimates failed to converge (last relative spread {spread:e})")]
    PeriodUnstable { spread: f64 },

    #[error("trajectory endpoint differs from anchor by {gap:e} (tolerance {tol:e})")]
    PeriodMismatch { gap: f64, tol: f64 },

    #[error("polynomial has zero leading coefficient")]
    ZeroLeadingCoefficient,

    #[error("no amplitude on the grid yields a Hurwitz averaged matrix")]
    NoStabilizingAmplitude,

    #[error("tangent first component max |v_1| = {max:e} is degenerate")]
    TangentDegenerate { max: f64 },

    #[error("reference leaves admissible range at t = {t}: {detail}")]
    RangeViolation { t: f64, detail: String },

    #[error("adaptive quadrature did not converge (error estimate {estimate:e})")]
    QuadratureNonConvergence { estimate: f64 },

    #[error("closed-loop response |G(jw)| = {magnitude:e} is too small to invert")]
    ZeroResponse { magnitude: f64 },

    #[error("inverse system failed the contraction probe (rate {rate})")]
    InverseNotContracting { rate: f64 },

    #[error("antiderivative mismatch at y = {y}: finite difference {fd}, regressor {h}")]
    AntiderivativeMismatch { y: f64, fd: f64, h: f64 },

    #[error("signal does not provide derivative of order {order}")]
    UnsupportedDerivative { order: usize },

    #[error("time window [{t0}, {t1}] is outside the trajectory span [{lo}, {hi}]")]
    OutsideSpan { t0: f64, t1: f64, lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Whether the failure comes from bad inputs rather than from the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::InvalidParameter(_) | Self::DimensionMismatch { .. } | Self::UnsupportedDerivative { .. })
    }
}
