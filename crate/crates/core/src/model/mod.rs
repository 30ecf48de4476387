//! Domain types shared by the solver, metrics and CLI layers.

mod params;
mod pulse;
mod records;

pub use params::{
    is_transverse_angle, normalize, PhysicalParams, ResolutionPolicy, Scales, SimParams,
};
pub use pulse::{synthesize_pulse, Pulse, PulseShape, PulseSpec, PulseWarning};
pub use records::{trapezoid, FieldRecord, HalfMax, SpinMap};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("grid does not resolve the chirp phase: |chirp|/{axis} = {ratio:.4} (must be < 0.5)")]
    UnresolvedChirp { axis: &'static str, ratio: f64 },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
