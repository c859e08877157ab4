//! Conditional MMSEs of `Y` behind the filter and the mutual informations
//! obtained from them by I-MMSE integration.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::models::{JointModel, Law, Moments};
use crate::numerics::quadrature::{adaptive_integrate_with, integrate_vec};
use crate::numerics::{CumulativeProfile, Estimate, NumericsConfig, Tolerance};

/// `½ ln(2πe)`, the entropy of a standard Gaussian.
pub(crate) const HALF_LN_2PIE: f64 = 1.418_938_533_204_672_7;

/// Moments of the Gaussian channel output `Z = √γ·Y + N` for one prior law.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ChannelMoments {
    /// `E var(Y|Z)`
    pub mmse: f64,
    /// `E var²(Y|Z)`
    pub var2: f64,
    /// `h(Z)` in nats
    pub entropy: f64,
    pub err: [f64; 3],
}

/// Integration breakpoints in `z` for the prior `law` at `sg = √γ`.
fn z_breaks(law: &Law, sg: f64) -> Vec<f64> {
    let (a, b) = law.span();
    let lo = sg * a - 12.0;
    let hi = sg * b + 12.0;
    // each landmark is flanked by breaks 2 and 8 noise widths away: at high
    // SNR the posterior changes only in that layer, and a single wide panel
    // would put no Kronrod node inside it
    let mut raw: Vec<f64> = law
        .landmarks()
        .into_iter()
        .flat_map(|y| [-8.0, -2.0, 0.0, 2.0, 8.0].map(|d| sg * y + d))
        .filter(|z| *z > lo && *z < hi)
        .collect();
    raw.sort_by(f64::total_cmp);
    let gap = (0.5f64).max((hi - lo) / 256.0).min(2.0);
    let mut out = vec![lo];
    for z in raw {
        if z - out[out.len() - 1] >= gap && hi - z >= gap {
            out.push(z);
        }
    }
    out.push(hi);
    out
}

/// `E var(Y|Z)`, `E var²(Y|Z)` and `h(Z)` for `Y ~ law`.
pub(crate) fn channel_moments(law: &Law, gamma: f64, tol: Tolerance) -> Result<ChannelMoments> {
    if gamma == 0.0 {
        let v = law.var();
        return Ok(ChannelMoments {
            mmse: v,
            var2: v * v,
            entropy: HALF_LN_2PIE,
            err: [0.0; 3],
        });
    }
    let sg = gamma.sqrt();
    let breaks = z_breaks(law, sg);
    let (v, e) = integrate_vec(
        |z| {
            let p = law.posterior(z, sg);
            if p.ln_p == f64::NEG_INFINITY {
                return Ok([0.0; 3]);
            }
            let d = p.ln_p.exp();
            Ok([d * p.var, d * p.var * p.var, -d * p.ln_p])
        },
        &breaks,
        tol,
    )?;
    Ok(ChannelMoments {
        mmse: v[0].max(0.0),
        var2: v[1].max(0.0),
        entropy: v[2],
        err: e,
    })
}

/// The conditional MMSEs of `Y` at one SNR together with the squared
/// posterior-variance moments entering second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsePair {
    /// `mmse(Y | Z_γ)`
    pub mmse_y_z: Estimate,
    /// `mmse(Y | Z_γ, X)`
    pub mmse_y_zx: Estimate,
    /// `E[var²(Y | Z_γ)]`
    pub var2_y_z: Estimate,
    /// `E[var²(Y | Z_γ, X)]`
    pub var2_y_zx: Estimate,
}

/// Mutual informations (nats) at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoPoint {
    pub gamma: f64,
    pub mi_y_z: Estimate,
    pub mi_x_z: Estimate,
}

/// Model data every SNR evaluation needs; shared with the cached profile.
#[derive(Debug)]
pub(crate) struct Shared {
    pub model: JointModel,
    pub tol: Tolerance,
    pub moments: Moments,
    pub y_law: Law,
    pub branches: Vec<(f64, Law)>,
}

impl Shared {
    pub fn new(model: &JointModel, cfg: &NumericsConfig) -> Result<Self> {
        cfg.validate()?;
        model.validate()?;
        Ok(Shared {
            model: model.clone(),
            tol: cfg.inner(),
            moments: model.moments()?,
            y_law: model.y_law(cfg.hermite_order, cfg.legendre_order)?,
            branches: model.y_given_x_branches()?,
        })
    }

    pub fn y_channel(&self, gamma: f64) -> Result<ChannelMoments> {
        channel_moments(&self.y_law, gamma, self.tol)
    }

    /// `(mmse(Y|Z,X), E var²(Y|Z,X), errors)`.
    pub fn cond_channel(&self, gamma: f64) -> Result<(Estimate, Estimate)> {
        if let JointModel::BivariateGaussian { var_y, rho, .. } = self.model {
            let c = (1.0 - rho * rho) * var_y;
            let m = c / (1.0 + gamma * c);
            return Ok((Estimate::closed_form(m), Estimate::closed_form(m * m)));
        }
        let (mut m, mut v2, mut em, mut ev) = (0.0, 0.0, 0.0, 0.0);
        for (p, law) in &self.branches {
            let c = channel_moments(law, gamma, self.tol)?;
            m += p * c.mmse;
            v2 += p * c.var2;
            em += p * c.err[0];
            ev += p * c.err[1];
        }
        Ok((Estimate::quadrature(m, em), Estimate::quadrature(v2, ev)))
    }

    pub fn pair(&self, gamma: f64) -> Result<MmsePair> {
        check_gamma(gamma)?;
        let y = self.y_channel(gamma)?;
        let (mmse_y_zx, var2_y_zx) = self.cond_channel(gamma)?;
        Ok(MmsePair {
            mmse_y_z: Estimate::quadrature(y.mmse, y.err[0]),
            mmse_y_zx,
            var2_y_z: Estimate::quadrature(y.var2, y.err[1]),
            var2_y_zx,
        })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma must be finite and nonnegative, got {gamma}"
        )));
    }
    Ok(())
}

/// A model prepared for repeated evaluation at many SNRs.
///
/// The marginal and conditional laws are built once, and the running
/// integrals `∫ mmse` behind `I(Y;Z_γ)` and `I(X;Z_γ)` are tabulated lazily
/// so that root-finding in `γ` does not redo the outer integration.
#[derive(Debug)]
pub struct Context {
    shared: Arc<Shared>,
    cfg: NumericsConfig,
    profile: OnceLock<CumulativeProfile<2>>,
    mi_xy: OnceLock<Result<Estimate>>,
}

impl Context {
    pub fn new(model: &JointModel, cfg: &NumericsConfig) -> Result<Self> {
        Ok(Context {
            shared: Arc::new(Shared::new(model, cfg)?),
            cfg: *cfg,
            profile: OnceLock::new(),
            mi_xy: OnceLock::new(),
        })
    }

    pub fn model(&self) -> &JointModel {
        &self.shared.model
    }

    pub fn cfg(&self) -> &NumericsConfig {
        &self.cfg
    }

    pub fn moments(&self) -> Moments {
        self.shared.moments
    }

    pub fn y_law(&self) -> &Law {
        &self.shared.y_law
    }

    pub fn mmse_pair(&self, gamma: f64) -> Result<MmsePair> {
        self.shared.pair(gamma)
    }

    /// `I(X;Y)` in nats, computed once.
    pub fn mutual_information(&self) -> Result<Estimate> {
        self.mi_xy
            .get_or_init(|| self.shared.model.mutual_information(&self.cfg))
            .clone()
    }

    fn profile(&self) -> &CumulativeProfile<2> {
        self.profile.get_or_init(|| {
            let shared = Arc::clone(&self.shared);
            let tol = Tolerance {
                abs: self.cfg.abs_tol * 1e-2,
                rel: self.cfg.rel_tol * 1e-3,
                max_panels: self.cfg.max_panels,
            };
            CumulativeProfile::new(
                move |g| {
                    let y = shared.y_channel(g)?;
                    let (zx, _) = shared.cond_channel(g)?;
                    Ok([y.mmse, (y.mmse - zx.value).max(0.0)])
                },
                0.25 / self.shared.moments.var_y,
                tol,
            )
        })
    }

    /// `I(Y;Z_γ)` and `I(X;Z_γ)` from the tabulated running integrals. This
    /// is the numerical pipeline for every model kind, jointly Gaussian
    /// included.
    pub fn info(&self, gamma: f64) -> Result<InfoPoint> {
        check_gamma(gamma)?;
        let (v, e) = self.profile().integral(gamma)?;
        // pointwise noise of the nested integrals accumulates linearly in γ
        let noise = gamma * (self.shared.tol.abs + self.shared.tol.rel * self.shared.moments.var_y);
        Ok(InfoPoint {
            gamma,
            mi_y_z: Estimate::quadrature(0.5 * v[0], 0.5 * e[0] + noise),
            mi_x_z: Estimate::quadrature(0.5 * v[1], 0.5 * e[1] + noise),
        })
    }
}

/// Breakpoints on `[0, γ]` refined geometrically towards zero, where the
/// MMSE curves vary fastest on a relative scale.
fn gamma_breaks(gamma: f64, var_y: f64) -> Vec<f64> {
    let mut pts = vec![gamma];
    let mut g = gamma;
    while g * var_y > 0.25 && pts.len() < 60 {
        g *= 0.5;
        pts.push(g);
    }
    pts.push(0.0);
    pts.reverse();
    pts
}

/// `½∫_0^γ f(t) dt` by adaptive quadrature, `f` fallible.
fn half_integral<F>(f: F, gamma: f64, var_y: f64, cfg: &NumericsConfig) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(Estimate::quadrature(0.0, 0.0));
    }
    let est = adaptive_integrate_with(f, &gamma_breaks(gamma, var_y), cfg.into())?;
    Ok(Estimate::quadrature(0.5 * est.value, 0.5 * est.err))
}

/// `mmse(Y|Z_γ)`, `mmse(Y|Z_γ,X)` and the matching `E var²` moments.
pub fn mmse_pair(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<MmsePair> {
    Shared::new(model, cfg)?.pair(gamma)
}

/// `I(Y;Z_γ) = ½∫_0^γ mmse(Y|Z_t) dt` in nats.
pub fn mi_y_z(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    let s = Shared::new(model, cfg)?;
    half_integral(|t| Ok(s.y_channel(t)?.mmse), gamma, s.moments.var_y, cfg)
}

/// `I(X;Z_γ) = ½∫_0^γ [mmse(Y|Z_t) − mmse(Y|Z_t,X)] dt` in nats.
pub fn mi_x_z(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    let s = Shared::new(model, cfg)?;
    half_integral(
        |t| Ok((s.y_channel(t)?.mmse - s.cond_channel(t)?.0.value).max(0.0)),
        gamma,
        s.moments.var_y,
        cfg,
    )
}

/// Differential entropy `h(√γ·Y + N)` in nats for `Y ~ law`, from the
/// output density itself rather than from any MMSE integral.
pub fn output_entropy(law: &Law, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    check_gamma(gamma)?;
    let c = channel_moments(law, gamma, cfg.inner())?;
    Ok(Estimate::quadrature(c.entropy, c.err[2]))
}

/// Both mutual informations at `gamma` by direct integration.
pub fn info_point(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<InfoPoint> {
    Ok(InfoPoint {
        gamma,
        mi_y_z: mi_y_z(model, gamma, cfg)?,
        mi_x_z: mi_x_z(model, gamma, cfg)?,
    })
}
