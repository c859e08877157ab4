//! The rate-privacy function `g_ε(X,Y)` of the filter `Z_γ = √γ·Y + N`, its
//! derivatives and bounds, the strong data-processing ratios, and the
//! estimation noise-to-signal ratio (ENSR) under maximal-correlation or
//! one-sided correlation constraints.
//!
//! `ε` and `g` are in nats unless a [`Units`] value says otherwise. `g″` and
//! `Δ` are always in the nats convention: in bits the `ε²` coefficient picks
//! up a factor `ln 2`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::estimators::{
    ace, delta_coeff, eta_sq, marginal_non_gaussianness, maximal_correlation_xy, Context, PairCorrelation,
};
use crate::models::{JointModel, ScalarDist};
use crate::numerics::roots::bisect_monotone;
use crate::numerics::{Estimate, Method, NumericsConfig};

/// Unit of informations at the API boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    pub fn to_nats(self, v: f64) -> f64 {
        match self {
            Units::Nats => v,
            Units::Bits => v * std::f64::consts::LN_2,
        }
    }

    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            Units::Nats => v,
            Units::Bits => v / std::f64::consts::LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nats" | "nat" => Ok(Units::Nats),
            "bits" | "bit" => Ok(Units::Bits),
            other => Err(Error::Parse {
                key: "units".into(),
                reason: format!("expected `nats` or `bits`, got `{other}`"),
            }),
        }
    }
}

/// One point of the rate-privacy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub eps: f64,
    pub gamma_eps: f64,
    pub g_eps: Estimate,
    /// `dg/dε`, unit-free
    pub g_prime: Estimate,
    /// `d²g/dε²` in the nats convention
    pub g_second: Estimate,
    /// entropy-power lower bound `½ ln(1 + γ_ε e^{−2D(Y)} var Y)`
    pub lower_epi: f64,
    /// Gaussian upper bound `½ ln(1 + γ_ε var Y)`
    pub upper_epi: f64,
    /// `ε / η²_X(Y)`, reported only for additive models with Gaussian noise,
    /// where it is a guaranteed lower bound on `g_ε`
    pub sdpi_lower: Option<f64>,
}

impl TradeoffPoint {
    /// The same point with `eps`, `g_eps` and the bounds expressed in `units`.
    pub fn in_units(&self, units: Units) -> TradeoffPoint {
        let c = |v: f64| units.from_nats(v);
        TradeoffPoint {
            eps: c(self.eps),
            g_eps: Estimate {
                value: c(self.g_eps.value),
                err: c(self.g_eps.err),
                method: self.g_eps.method,
            },
            lower_epi: c(self.lower_epi),
            upper_epi: c(self.upper_epi),
            sdpi_lower: self.sdpi_lower.map(c),
            ..*self
        }
    }
}

/// Which correlation constrains the ENSR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsrMode {
    /// `ρ_m²(X, Z_γ) ≤ ε`, giving `M_ε`
    Strong,
    /// `η²_{Z_γ}(X) ≤ ε`, giving `W_ε`
    Weak,
}

/// One point of the ENSR curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsrPoint {
    /// constraint level on the squared correlation, in `[0, 1]`
    pub eps: f64,
    pub gamma_eps: f64,
    /// `mmse(Y|Z_γ) / var(Y)` at `γ_ε`
    pub ensr: Estimate,
    /// `1 − ε / ρ_m²(X,Y)`
    pub gaussian_upper: f64,
    /// entropic lower bound, for Gaussian `X` with additive noise only
    pub thm4_lower: Option<f64>,
    /// its linearization in `ε`
    pub linear_lower: Option<f64>,
}

/// Error of `f(inputs)` from perturbing each input by its own error.
fn propagate<F: Fn(&[f64]) -> f64>(f: F, inputs: &[Estimate]) -> (f64, f64) {
    let vals: Vec<f64> = inputs.iter().map(|e| e.value).collect();
    let base = f(&vals);
    let mut err = 0.0;
    for (k, e) in inputs.iter().enumerate() {
        if e.err == 0.0 {
            continue;
        }
        let mut v = vals.clone();
        v[k] += e.err;
        let up = f(&v);
        v[k] = vals[k] - e.err;
        let down = f(&v);
        err += 0.5 * ((up - base).abs() + (down - base).abs());
    }
    (base, err)
}

fn method_of(inputs: &[Estimate]) -> Method {
    inputs
        .iter()
        .fold(Method::ClosedForm, |m, e| Estimate::merge_method(m, e.method))
}

/// Log-spaced SNR grid used for the strong data-processing ratios.
pub fn ratio_grid() -> Vec<f64> {
    (0..=40).map(|k| 10f64.powf(-4.0 + k as f64 / 4.0)).collect()
}

/// A model with every derived quantity it needs computed once and shared by
/// all `ε` points.
#[derive(Debug)]
pub struct Analysis {
    ctx: Context,
    eta: OnceLock<Result<Estimate>>,
    delta: OnceLock<Result<Estimate>>,
    d_y: OnceLock<Result<Estimate>>,
    pair: OnceLock<Result<PairCorrelation>>,
}

impl Analysis {
    pub fn new(model: &JointModel, cfg: &NumericsConfig) -> Result<Self> {
        Ok(Analysis {
            ctx: Context::new(model, cfg)?,
            eta: OnceLock::new(),
            delta: OnceLock::new(),
            d_y: OnceLock::new(),
            pair: OnceLock::new(),
        })
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    pub fn model(&self) -> &JointModel {
        self.ctx.model()
    }

    pub fn cfg(&self) -> &NumericsConfig {
        self.ctx.cfg()
    }

    /// `I(X;Y)` in nats.
    pub fn mutual_information(&self) -> Result<Estimate> {
        self.ctx.mutual_information()
    }

    /// `η²_X(Y)`.
    pub fn eta_sq(&self) -> Result<Estimate> {
        self.eta.get_or_init(|| eta_sq(self.model(), self.cfg())).clone()
    }

    /// `Δ(X,Y)`, nats convention.
    pub fn delta(&self) -> Result<Estimate> {
        self.delta.get_or_init(|| delta_coeff(self.model(), self.cfg())).clone()
    }

    /// `D(Y)` in nats.
    pub fn non_gaussianness_y(&self) -> Result<Estimate> {
        self.d_y
            .get_or_init(|| marginal_non_gaussianness(self.model(), self.cfg()))
            .clone()
    }

    /// `ρ_m²(X,Y)` and `η²_Y(X)`.
    pub fn pair_correlation(&self) -> Result<PairCorrelation> {
        self.pair
            .get_or_init(|| maximal_correlation_xy(self.model(), self.cfg()))
            .clone()
    }

    fn check_eps(&self, eps: f64) -> Result<()> {
        let limit = self.mutual_information()?.value;
        if !(eps >= 0.0) || !(eps < limit) {
            return Err(Error::EpsOutOfRange { eps, limit });
        }
        Ok(())
    }

    /// The SNR at which `I(X;Z_γ) = ε` (nats).
    pub fn gamma_eps(&self, eps: f64) -> Result<f64> {
        self.check_eps(eps)?;
        if eps == 0.0 {
            return Ok(0.0);
        }
        let var_y = self.ctx.moments().var_y;
        let hint = match self.eta_sq() {
            Ok(e) if e.value > 0.0 => 2.0 * eps / (e.value * var_y),
            _ => 1.0 / var_y,
        };
        bisect_monotone(|g| Ok(self.ctx.info(g)?.mi_x_z.value), eps, hint, self.cfg())
    }

    /// The rate-privacy point at privacy level `eps` (nats).
    pub fn g_eps(&self, eps: f64) -> Result<TradeoffPoint> {
        let gamma = self.gamma_eps(eps)?;
        let info = self.ctx.info(gamma)?;
        let pair = self.ctx.mmse_pair(gamma)?;
        let inputs = [pair.mmse_y_z, pair.mmse_y_zx, pair.var2_y_z, pair.var2_y_zx];
        let method = method_of(&inputs);
        let (gp, gp_err) = propagate(|v| v[0] / (v[0] - v[1]), &inputs);
        let (gs, gs_err) = propagate(
            |v| {
                let d = v[0] - v[1];
                2.0 * (v[1] * v[2] - v[0] * v[3]) / (d * d * d)
            },
            &inputs,
        );
        // the root is located to within abs_tol in ε (plus the integral error),
        // which moves g by g′ times that amount
        let g_err = if gamma == 0.0 {
            0.0
        } else {
            info.mi_y_z.err + gp.abs() * (self.cfg().abs_tol + info.mi_x_z.err)
        };
        let var_y = self.ctx.moments().var_y;
        let d_y = self.non_gaussianness_y()?.value;
        let sdpi_lower = match self.model() {
            JointModel::AdditiveNoise {
                noise: ScalarDist::Gaussian { .. },
                ..
            } => Some(eps / self.eta_sq()?.value),
            _ => None,
        };
        Ok(TradeoffPoint {
            eps,
            gamma_eps: gamma,
            g_eps: Estimate::quadrature(info.mi_y_z.value, g_err),
            g_prime: Estimate::derived(gp, gp_err, method),
            g_second: Estimate::derived(gs, gs_err, method),
            lower_epi: 0.5 * (gamma * (-2.0 * d_y).exp() * var_y).ln_1p(),
            upper_epi: 0.5 * (gamma * var_y).ln_1p(),
            sdpi_lower,
        })
    }

    /// Second-order approximation `ε/η² + Δ ε²` (nats).
    pub fn taylor(&self, eps: f64) -> Result<f64> {
        let e = self.eta_sq()?.value;
        if !(e > 0.0) {
            return Err(Error::DegenerateModel("eta^2 = 0".into()));
        }
        Ok(eps / e + self.delta()?.value * eps * eps)
    }

    fn require_gaussian_noise(&self, op: &str) -> Result<()> {
        match self.model() {
            JointModel::AdditiveNoise {
                noise: ScalarDist::Gaussian { .. },
                ..
            } => Ok(()),
            _ => Err(Error::unsupported(op, "needs an additive model with Gaussian noise")),
        }
    }

    /// `I(X;Z_γ)/I(Y;Z_γ)` on [`ratio_grid`].
    pub fn mi_ratio_curve(&self) -> Result<Vec<(f64, Estimate)>> {
        ratio_grid()
            .into_iter()
            .map(|g| {
                let i = self.ctx.info(g)?;
                let r = i.mi_x_z.value / i.mi_y_z.value;
                let err = (i.mi_x_z.err + r * i.mi_y_z.err) / i.mi_y_z.value;
                Ok((g, Estimate::quadrature(r, err)))
            })
            .collect()
    }

    /// `sup_γ I(X;Z_γ)/I(Y;Z_γ)` over the grid. The ratio is largest as
    /// `γ → 0`, so the grid maximum is complemented by a Richardson
    /// extrapolation of the two smallest grid points towards zero; the
    /// extrapolation step is reported as error.
    pub fn sdpi_ratio_sup(&self) -> Result<Estimate> {
        self.require_gaussian_noise("sdpi_ratio_sup")?;
        let curve = self.mi_ratio_curve()?;
        let (g0, r0) = curve[0];
        let (g1, r1) = curve[1];
        // linear in γ near zero: r(γ) ≈ r(0) − cγ
        let extrap = r0.value + (r0.value - r1.value) * g0 / (g1 - g0);
        let grid_max = curve.iter().map(|p| p.1.value).fold(f64::NEG_INFINITY, f64::max);
        let value = extrap.max(grid_max);
        Ok(Estimate::quadrature(value, (extrap - r0.value).abs() + r0.err))
    }

    /// `inf_γ mmse(Y|Z_γ,X)/mmse(Y|Z_γ)` over `{0} ∪` the grid.
    pub fn mmse_ratio_inf(&self) -> Result<Estimate> {
        self.require_gaussian_noise("mmse_ratio_inf")?;
        let mut best = Estimate::quadrature(f64::INFINITY, 0.0);
        for g in std::iter::once(0.0).chain(ratio_grid()) {
            let p = self.ctx.mmse_pair(g)?;
            let r = p.mmse_y_zx.value / p.mmse_y_z.value;
            if r < best.value {
                let err = (p.mmse_y_zx.err + r * p.mmse_y_z.err) / p.mmse_y_z.value;
                best = Estimate::quadrature(r, err);
            }
        }
        Ok(best)
    }

    /// Upper end of the admissible `ε` range for the ENSR in `mode`.
    pub fn ensr_limit(&self, mode: EnsrMode) -> Result<f64> {
        let p = self.pair_correlation()?;
        Ok(match mode {
            EnsrMode::Strong => p.rho_m2.value,
            EnsrMode::Weak => p.eta_sq_y.value,
        })
    }

    fn check_ensr_eps(&self, eps: f64, mode: EnsrMode) -> Result<()> {
        let limit = self.ensr_limit(mode)?;
        if !(eps >= 0.0) || eps > limit {
            return Err(Error::EpsOutOfRange { eps, limit });
        }
        Ok(())
    }

    fn gaussian_upper(&self, eps: f64) -> Result<f64> {
        Ok(1.0 - eps / self.pair_correlation()?.rho_m2.value)
    }

    fn with_bounds(&self, eps: f64, gamma_eps: f64, ensr: Estimate) -> Result<EnsrPoint> {
        let bounds = match self.ensr_lower_bounds(eps) {
            Ok(t) => Some(t),
            Err(Error::ModelNotSupported { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(EnsrPoint {
            eps,
            gamma_eps,
            ensr,
            gaussian_upper: self.gaussian_upper(eps)?,
            thm4_lower: bounds.map(|t| t.0),
            linear_lower: bounds.map(|t| t.1),
        })
    }

    /// ENSR at constraint level `eps`; closed form for jointly Gaussian
    /// models, where both modes coincide.
    pub fn ensr(&self, eps: f64, mode: EnsrMode) -> Result<EnsrPoint> {
        if let JointModel::BivariateGaussian { var_y, rho, .. } = *self.model() {
            self.check_ensr_eps(eps, mode)?;
            let r2 = rho * rho;
            let gamma = if eps < r2 { eps / (var_y * (r2 - eps)) } else { f64::INFINITY };
            return self.with_bounds(eps, gamma, Estimate::closed_form(1.0 - eps / r2));
        }
        self.ensr_numerical(eps, mode)
    }

    /// ENSR by root-finding on the numerically computed constraint curve,
    /// for every model kind.
    pub fn ensr_numerical(&self, eps: f64, mode: EnsrMode) -> Result<EnsrPoint> {
        self.check_ensr_eps(eps, mode)?;
        if eps == 0.0 {
            return self.with_bounds(0.0, 0.0, Estimate::closed_form(1.0));
        }
        let cfg = *self.cfg();
        let constraint = |g: f64| -> Result<Estimate> {
            let r = ace(self.model(), g, &cfg)?;
            Ok(match mode {
                EnsrMode::Strong => r.rho_m2,
                EnsrMode::Weak => r.eta_sq_z,
            })
        };
        let mut probes: Vec<(f64, Estimate)> = Vec::new();
        let var_y = self.ctx.moments().var_y;
        let gamma = bisect_monotone(
            |g| {
                let c = constraint(g)?;
                probes.push((g, c));
                Ok(c.value)
            },
            eps,
            eps / var_y,
            &cfg,
        )?;
        probes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in probes.windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            if b.value < a.value - a.err - b.err - cfg.abs_tol {
                return Err(Error::no_convergence(
                    "ENSR constraint",
                    format!(
                        "constraint curve decreases between gamma {} and {} ({} -> {})",
                        w[0].0, w[1].0, a.value, b.value
                    ),
                ));
            }
        }
        let pair = self.ctx.mmse_pair(gamma)?;
        let value = pair.mmse_y_z.value / var_y;
        // sensitivity of the located root to the constraint error
        let c0 = constraint(gamma)?;
        let h = 0.01 * gamma;
        let slope = (constraint(gamma + h)?.value - c0.value) / h;
        let dgamma = if slope > 0.0 { (c0.err + cfg.abs_tol) / slope } else { 0.0 };
        let err = pair.mmse_y_z.err / var_y + pair.var2_y_z.value / var_y * dgamma;
        self.with_bounds(eps, gamma, Estimate::quadrature(value, err))
    }

    /// `(2^{−D(Y)}·2^{−2g}, 2^{−D(Y)}(1 − 2ε/η²))` with `D` and `g` in bits.
    ///
    /// `eps` enters twice: as the constraint level of the ENSR it is compared
    /// with, and as a mutual-information level in bits at which `g` is
    /// evaluated. Only defined for Gaussian `X` with additive noise. Levels at
    /// or beyond `I(X;Y)` make `g` infinite and the bound 0.
    pub fn ensr_lower_bounds(&self, eps: f64) -> Result<(f64, f64)> {
        let gaussian_x = match self.model() {
            JointModel::BivariateGaussian { .. } => true,
            JointModel::AdditiveNoise { x, .. } => x.is_gaussian(),
            JointModel::Clipped { .. } => false,
        };
        if !gaussian_x {
            return Err(Error::unsupported(
                "ensr_thm4_lower",
                "needs Gaussian X with additive noise",
            ));
        }
        let ln2 = std::f64::consts::LN_2;
        let d_bits = self.non_gaussianness_y()?.value / ln2;
        let eps_nats = eps * ln2;
        let g_nats = if eps_nats >= self.mutual_information()?.value {
            f64::INFINITY
        } else if eps == 0.0 {
            0.0
        } else {
            self.g_eps(eps_nats)?.g_eps.value
        };
        let front = (-d_bits * ln2).exp();
        let bound = front * (-2.0 * g_nats).exp();
        let linear = (front * (1.0 - 2.0 * eps / self.eta_sq()?.value)).clamp(0.0, 1.0);
        Ok((bound, linear))
    }

    /// Rate-privacy points on a grid of levels given in `units`; each point
    /// is computed independently and failures are kept in place.
    pub fn curve(&self, eps_grid: &[f64], units: Units) -> Vec<Result<TradeoffPoint>> {
        let run = |e: &f64| self.g_eps(units.to_nats(*e)).map(|p| p.in_units(units));
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            eps_grid.par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            eps_grid.iter().map(run).collect()
        }
    }

    /// ENSR points on a grid; failures are kept in place.
    pub fn ensr_curve(&self, eps_grid: &[f64], mode: EnsrMode) -> Vec<Result<EnsrPoint>> {
        let run = |e: &f64| self.ensr(*e, mode);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            eps_grid.par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            eps_grid.iter().map(run).collect()
        }
    }
}

/// `γ_ε` for `eps` in nats.
pub fn gamma_eps(model: &JointModel, eps: f64, cfg: &NumericsConfig) -> Result<f64> {
    Analysis::new(model, cfg)?.gamma_eps(eps)
}

/// The rate-privacy point at `eps` nats.
pub fn g_eps(model: &JointModel, eps: f64, cfg: &NumericsConfig) -> Result<TradeoffPoint> {
    Analysis::new(model, cfg)?.g_eps(eps)
}

/// `ε/η²_X(Y) + Δ(X,Y)·ε²` in nats.
pub fn taylor_g_eps(model: &JointModel, eps: f64, cfg: &NumericsConfig) -> Result<f64> {
    Analysis::new(model, cfg)?.taylor(eps)
}

/// `sup_γ I(X;Z_γ)/I(Y;Z_γ)` for additive models with Gaussian noise.
pub fn sdpi_ratio_sup(model: &JointModel, cfg: &NumericsConfig) -> Result<Estimate> {
    Analysis::new(model, cfg)?.sdpi_ratio_sup()
}

/// `inf_γ mmse(Y|Z_γ,X)/mmse(Y|Z_γ)` for additive models with Gaussian noise.
pub fn mmse_ratio_inf(model: &JointModel, cfg: &NumericsConfig) -> Result<Estimate> {
    Analysis::new(model, cfg)?.mmse_ratio_inf()
}

/// ENSR point at constraint level `eps`.
pub fn ensr(model: &JointModel, eps: f64, mode: EnsrMode, cfg: &NumericsConfig) -> Result<EnsrPoint> {
    Analysis::new(model, cfg)?.ensr(eps, mode)
}

/// Entropic lower bound on the ENSR and its linearization.
pub fn ensr_thm4_lower(model: &JointModel, eps: f64, cfg: &NumericsConfig) -> Result<(f64, f64)> {
    Analysis::new(model, cfg)?.ensr_lower_bounds(eps)
}

/// Rate-privacy points for a grid of levels given in `units`.
pub fn rate_privacy_curve(
    model: &JointModel,
    eps_grid: &[f64],
    units: Units,
    cfg: &NumericsConfig,
) -> Result<Vec<Result<TradeoffPoint>>> {
    Ok(Analysis::new(model, cfg)?.curve(eps_grid, units))
}
