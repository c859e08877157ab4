//! Deterministic numerical kernels: quadrature rules, adaptive integration,
//! monotone root-finding, Monte-Carlo averaging and cumulative profiles.

pub mod montecarlo;
pub mod profile;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use montecarlo::mc_mean;
pub use profile::CumulativeProfile;
pub use quadrature::{adaptive_integrate, gauss_hermite, gauss_legendre, Tolerance};
pub use roots::bisect_monotone;

use crate::error::{Error, Result};

/// Quadrature orders, tolerances and Monte-Carlo settings shared by every
/// numerical routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    pub hermite_order: usize,
    pub legendre_order: usize,
    pub max_panels: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            hermite_order: 64,
            legendre_order: 32,
            max_panels: 4096,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            mc_samples: 1_000_000,
            seed: 0,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hermite_order < 2 || self.legendre_order < 2 {
            return Err(Error::InvalidParameter(format!(
                "quadrature orders must be at least 2 (hermite {}, legendre {})",
                self.hermite_order, self.legendre_order
            )));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_panels < 1 {
            return Err(Error::InvalidParameter("max_panels must be at least 1".into()));
        }
        Ok(())
    }

    /// Tolerance for integrals nested inside an outer integral or a
    /// root-finder, tight enough that their noise stays below the outer target.
    pub fn inner(&self) -> Tolerance {
        Tolerance {
            abs: self.abs_tol * 1e-3,
            rel: self.rel_tol * 1e-4,
            max_panels: self.max_panels,
        }
    }
}

/// How an [`Estimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    MonteCarlo,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
            Method::ClosedForm => "closed_form",
        }
    }
}

/// A value with an estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
    pub method: Method,
}

impl Estimate {
    pub fn closed_form(value: f64) -> Self {
        Estimate {
            value,
            err: 0.0,
            method: Method::ClosedForm,
        }
    }

    pub fn quadrature(value: f64, err: f64) -> Self {
        Estimate {
            value,
            err: err.abs(),
            method: Method::Quadrature,
        }
    }

    pub fn monte_carlo(value: f64, err: f64) -> Self {
        Estimate {
            value,
            err: err.abs(),
            method: Method::MonteCarlo,
        }
    }

    /// Combines the method tags of two inputs to a derived quantity: closed
    /// form only if both are closed form.
    pub fn merge_method(a: Method, b: Method) -> Method {
        match (a, b) {
            (Method::MonteCarlo, _) | (_, Method::MonteCarlo) => Method::MonteCarlo,
            (Method::ClosedForm, Method::ClosedForm) => Method::ClosedForm,
            _ => Method::Quadrature,
        }
    }

    /// Result of a derived computation with the given propagated error.
    pub fn derived(value: f64, err: f64, method: Method) -> Self {
        let err = if method == Method::ClosedForm { 0.0 } else { err.abs() };
        Estimate { value, err, method }
    }

    /// `true` when `|self - other|` is within the combined errors plus `slack`.
    pub fn agrees_with(&self, other: f64, slack: f64) -> bool {
        (self.value - other).abs() <= self.err + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = NumericsConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.hermite_order, 64);
        assert_eq!(cfg.mc_samples, 1_000_000);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = NumericsConfig {
            hermite_order: 1,
            ..NumericsConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = NumericsConfig {
            abs_tol: 0.0,
            ..NumericsConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn closed_form_has_zero_err() {
        let e = Estimate::derived(1.0, 0.5, Method::ClosedForm);
        assert_eq!(e.err, 0.0);
    }
}
