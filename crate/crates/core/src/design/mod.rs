//! Input-perturbation designs and their certificates.

mod averaging;
mod conductance;
mod describing;
mod feedforward;
mod impulse;
mod lorenz;

pub use averaging::{averaged_gain, averaged_polynomial, kapitza_design, AmplitudeCandidate, KapitzaDesign};
pub use conductance::{hh_certificate, hh_square_reference, orbit_scale, CertificateBounds, CertificateReport, SQUARE_LEVELS};
pub use describing::{
    chua_closed_form, chua_closed_form_gap, constant_gain_threshold, describing_function, describing_function_with,
    lure_input_reconstruct, lure_stability, DescribingConvention, DescribingFunctionResult, DescribingMethod, LureInput,
    LureStability,
};
pub use feedforward::{feedforward_from_reference, FeedforwardOptions, FeedforwardResult, InverseSystem};
pub use impulse::{fhn_impulse_design, shifted_prediction, FhnImpulseDesign, PHASE_GRID};
pub use lorenz::{lorenz_region_check, lorenz_region_check_beta_centred, lorenz_symmetric_part, max_symmetric_eigenvalue};
