//! Joint source models `(X, Y)` with exact conditional structure, moments
//! and samplers.

pub mod dist;
pub mod joint;
pub mod law;
pub mod parse;

pub use dist::{GridDist, ScalarDist};
pub use joint::{JointModel, Moments};
pub use law::{Component, Law, Posterior};
pub use parse::parse_dist;

/// The filter `Z = √γ·Y + N` with `N` standard Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub gamma: f64,
}

impl Channel {
    pub fn new(gamma: f64) -> crate::Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(crate::Error::InvalidParameter(format!(
                "gamma must be finite and nonnegative, got {gamma}"
            )));
        }
        Ok(Channel { gamma })
    }

    pub fn sqrt_gamma(&self) -> f64 {
        self.gamma.sqrt()
    }
}
