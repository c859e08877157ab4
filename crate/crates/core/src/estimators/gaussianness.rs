//! Non-Gaussianness `D(Y)`, its conditional analogue `D(Z_γ|X)`, and the
//! decomposition of `I(X;Z_γ)` into a Gaussian part and non-Gaussianness terms.

use crate::error::{Error, Result};
use crate::models::{Component, JointModel, Law};
use crate::numerics::{Estimate, NumericsConfig};

use super::mmse::{channel_moments, check_gamma, mi_x_z, HALF_LN_2PIE};

fn is_plain_gaussian(law: &Law) -> bool {
    matches!(
        law.parts(),
        [(_, Component::Gaussian { lo, hi, .. })] if lo.is_infinite() && hi.is_infinite()
    )
}

/// `D(Y) = ½ ln(2πe·var Y) − h(Y)` in nats for an atom-free law.
pub fn non_gaussianness(law: &Law, cfg: &NumericsConfig) -> Result<Estimate> {
    if is_plain_gaussian(law) {
        return Ok(Estimate::closed_form(0.0));
    }
    let v = law.var();
    if !(v > 0.0) {
        return Err(Error::DegenerateModel("zero variance".into()));
    }
    let h = law.entropy(cfg.inner())?;
    let d = HALF_LN_2PIE + 0.5 * v.ln() - h.value;
    Ok(Estimate::quadrature(d.max(0.0), h.err))
}

/// `D(Y)` for the `Y` marginal of a model.
pub fn marginal_non_gaussianness(model: &JointModel, cfg: &NumericsConfig) -> Result<Estimate> {
    match model {
        JointModel::BivariateGaussian { .. } => Ok(Estimate::closed_form(0.0)),
        JointModel::Clipped { y, .. } if y.is_gaussian() => Ok(Estimate::closed_form(0.0)),
        JointModel::AdditiveNoise { x, noise, .. } if x.is_gaussian() && noise.is_gaussian() => {
            Ok(Estimate::closed_form(0.0))
        }
        _ => non_gaussianness(&model.y_law(cfg.hermite_order, cfg.legendre_order)?, cfg),
    }
}

fn not_supported(what: &str) -> Error {
    Error::unsupported(
        what,
        "the clipped model has an atom in X and no Gaussian surrogate conditional; \
         only models with absolutely continuous X are supported",
    )
}

/// Conditional variance `1 + γ·var(Y)(1 − ρ²(X,Y))` of `Z_γ` given `X`
/// under the jointly Gaussian surrogate pair.
fn surrogate_cond_var(model: &JointModel, gamma: f64) -> Result<f64> {
    let m = model.moments()?;
    Ok(1.0 + gamma * m.var_y * (1.0 - m.corr * m.corr))
}

/// `h(Z_γ | X)` in nats, with its error; defined for models where `Y` given
/// `X` is a shift of a fixed law (jointly Gaussian and additive noise).
pub fn cond_output_entropy(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    check_gamma(gamma)?;
    match model {
        JointModel::BivariateGaussian { var_y, rho, .. } => Ok(Estimate::closed_form(
            HALF_LN_2PIE + 0.5 * (gamma * var_y * (1.0 - rho * rho)).ln_1p(),
        )),
        JointModel::AdditiveNoise { noise, .. } => {
            // Z given X = x is √γ·(a x + M) + N, a shift of √γ·M + N
            let c = channel_moments(&noise.law(), gamma, cfg.inner())?;
            Ok(Estimate::quadrature(c.entropy, c.err[2]))
        }
        JointModel::Clipped { .. } => Err(not_supported("conditional non-Gaussianness")),
    }
}

/// `D(Z_γ|X)`: the expected divergence of `P_{Z|X=x}` from the Gaussian
/// conditional of the jointly Gaussian surrogate pair, in nats.
///
/// The surrogate conditional has the same mean as `Z` given `X = x` for the
/// supported models (the regression of `Y` on `X` is linear), so the
/// divergence reduces to `½ ln(2πe·s²) − h(Z|X)`.
pub fn cond_non_gaussianness(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    check_gamma(gamma)?;
    if matches!(model, JointModel::Clipped { .. }) {
        return Err(not_supported("conditional non-Gaussianness"));
    }
    if gamma == 0.0 || matches!(model, JointModel::BivariateGaussian { .. }) {
        return Ok(Estimate::closed_form(0.0));
    }
    if let JointModel::AdditiveNoise { noise, .. } = model {
        if noise.is_gaussian() {
            return Ok(Estimate::closed_form(0.0));
        }
    }
    let s2 = surrogate_cond_var(model, gamma)?;
    let h = cond_output_entropy(model, gamma, cfg)?;
    Ok(Estimate::quadrature(HALF_LN_2PIE + 0.5 * s2.ln() - h.value, h.err))
}

/// The pieces of `I(X;Z) = I(X_G;Z_G) + D(Z|X) − D(Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    /// `I(X;Z_γ)` from I-MMSE integration.
    pub mi_x_z: Estimate,
    /// `−½ ln(1 − ρ²(X,Z_γ))`
    pub gaussian_part: f64,
    /// `D(Z_γ|X)`
    pub cond_non_gaussianness: Estimate,
    /// `D(Z_γ)`
    pub non_gaussianness: Estimate,
    /// left side minus right side, with the combined error
    pub residual: Estimate,
}

/// Evaluates both sides of the decomposition; the two sides come from
/// independent pipelines (I-MMSE integration on one side, channel-output
/// entropies on the other).
pub fn decomposition(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Decomposition> {
    check_gamma(gamma)?;
    if matches!(model, JointModel::Clipped { .. }) {
        return Err(not_supported("mutual-information decomposition"));
    }
    if gamma == 0.0 {
        let zero = Estimate::closed_form(0.0);
        return Ok(Decomposition {
            mi_x_z: zero,
            gaussian_part: 0.0,
            cond_non_gaussianness: zero,
            non_gaussianness: zero,
            residual: zero,
        });
    }
    let m = model.moments()?;
    let s = gamma * m.var_y;
    let cov = m.corr * (m.var_x * m.var_y).sqrt();
    let rho2_xz = gamma * cov * cov / (m.var_x * (1.0 + s));
    let gaussian_part = -0.5 * (-rho2_xz).ln_1p();
    let ixz = mi_x_z(model, gamma, cfg)?;
    let dzx = cond_non_gaussianness(model, gamma, cfg)?;
    let dz = match model {
        JointModel::BivariateGaussian { .. } => Estimate::closed_form(0.0),
        _ => {
            let y = model.y_law(cfg.hermite_order, cfg.legendre_order)?;
            let c = channel_moments(&y, gamma, cfg.inner())?;
            Estimate::quadrature(HALF_LN_2PIE + 0.5 * s.ln_1p() - c.entropy, c.err[2])
        }
    };
    let rhs = gaussian_part + dzx.value - dz.value;
    let round = 64.0 * f64::EPSILON * (1.0 + ixz.value.abs() + gaussian_part.abs() + dz.value.abs());
    let residual = Estimate::quadrature(ixz.value - rhs, ixz.err + dzx.err + dz.err + round);
    Ok(Decomposition {
        mi_x_z: ixz,
        gaussian_part,
        cond_non_gaussianness: dzx,
        non_gaussianness: dz,
        residual,
    })
}

/// `I(X;Z_γ) − [I(X_G;Z_G) + D(Z_γ|X) − D(Z_γ)]`; zero up to the reported error.
pub fn decomposition_residual(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    Ok(decomposition(model, gamma, cfg)?.residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ScalarDist;

    fn cfg() -> NumericsConfig {
        NumericsConfig::default()
    }

    #[test]
    fn uniform_non_gaussianness() {
        let law = ScalarDist::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap().law();
        let d = non_gaussianness(&law, &cfg()).unwrap();
        let want = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E / 12.0).ln();
        assert!((d.value - want).abs() < 1e-9, "{} vs {want}", d.value);
        assert_eq!(non_gaussianness(&Law::gaussian(1.0, 3.0), &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn residual_vanishes() {
        let g = JointModel::gaussian(0.5, 1.0, 1.0).unwrap();
        let r = decomposition_residual(&g, 2.0, &cfg()).unwrap();
        assert!(r.value.abs() <= r.err, "{r:?}");
        let a = JointModel::additive(
            ScalarDist::standard_gaussian(),
            1.0,
            ScalarDist::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap(),
        )
        .unwrap();
        let r = decomposition_residual(&a, 0.5, &cfg()).unwrap();
        assert!(r.value.abs() <= r.err, "{r:?}");
        assert_eq!(decomposition_residual(&a, 0.0, &cfg()).unwrap().value, 0.0);
    }

    #[test]
    fn clipped_is_rejected() {
        let c = JointModel::clipped(ScalarDist::standard_gaussian(), 1.0).unwrap();
        assert!(matches!(
            cond_non_gaussianness(&c, 1.0, &cfg()),
            Err(Error::ModelNotSupported { .. })
        ));
    }
}
