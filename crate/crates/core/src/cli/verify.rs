//! The invariant battery run by `privfilter verify`: three jointly Gaussian
//! pairs, two additive-noise pairs, the clipped pair and an additive pair
//! with a piecewise-linear `X`.
//!
//! Checks tagged `quad` are deterministic and independent of the seed;
//! `mc` checks use the seeded sampler and move with it, within their error.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::estimators::{
    ace, cond_output_entropy, decomposition_residual, e_var2_y_x, mmse_y_x, output_entropy, s_star_lower_bound,
};
use crate::models::JointModel;
use crate::numerics::{mc_mean, NumericsConfig};
use crate::tradeoff::{ratio_grid, Analysis, EnsrMode, Units};

use super::format::num;
use super::{Outcome, EXIT_FAILED, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `|measured − expected| ≤ tol`
    Close,
    /// `measured ≤ expected + tol`
    AtMost,
    /// `measured ≥ expected − tol`
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub measured: f64,
    pub expected: f64,
    pub tol: f64,
    pub relation: Relation,
}

impl Measured {
    pub fn passed(&self) -> bool {
        let (m, e, t) = (self.measured, self.expected, self.tol);
        match self.relation {
            Relation::Close => (m - e).abs() <= t,
            Relation::AtMost => m <= e + t,
            Relation::AtLeast => m >= e - t,
        }
    }
}

fn close(measured: f64, expected: f64, tol: f64) -> Result<Measured> {
    Ok(Measured {
        measured,
        expected,
        tol,
        relation: Relation::Close,
    })
}

fn at_most(measured: f64, bound: f64, tol: f64) -> Result<Measured> {
    Ok(Measured {
        measured,
        expected: bound,
        tol,
        relation: Relation::AtMost,
    })
}

fn at_least(measured: f64, bound: f64, tol: f64) -> Result<Measured> {
    Ok(Measured {
        measured,
        expected: bound,
        tol,
        relation: Relation::AtLeast,
    })
}

#[derive(Debug, Clone)]
pub struct Check {
    pub model: String,
    pub name: String,
    pub source: Source,
    pub result: Result<Measured>,
}

impl Check {
    pub fn passed(&self) -> bool {
        matches!(&self.result, Ok(m) if m.passed())
    }

    /// One report line.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let src = match self.source {
            Source::Quadrature => "quad",
            Source::MonteCarlo => "mc",
        };
        let body = match &self.result {
            Ok(m) => {
                let rel = match m.relation {
                    Relation::Close => "|measured - expected| <= tol",
                    Relation::AtMost => "measured <= expected + tol",
                    Relation::AtLeast => "measured >= expected - tol",
                };
                format!(
                    "measured {} expected {} tol {} ({rel})",
                    num(m.measured),
                    num(m.expected),
                    num(m.tol)
                )
            }
            Err(e) => format!("error: {e}"),
        };
        format!("{status} [{src}] {} :: {} :: {body}", self.model, self.name)
    }
}

/// The built-in models with their display labels.
pub fn battery() -> Vec<(String, JointModel)> {
    [
        "kind=gaussian rho=0.3",
        "kind=gaussian rho=0.5",
        "kind=gaussian rho=0.8",
        "kind=additive a=1 x=uniform:-1.7320508075688772,1.7320508075688772 noise=gaussian:0,1",
        "kind=additive a=1 x=gaussian:0,1 noise=uniform:-1.7320508075688772,1.7320508075688772",
        "kind=clipped L=1",
        "kind=additive a=1 x=grid:-1/0;0/1;1/0 noise=gaussian:0,0.5",
    ]
    .iter()
    .map(|s| (s.to_string(), s.parse().expect("built-in model parses")))
    .collect()
}

struct Suite<'a> {
    label: &'a str,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn add(&mut self, name: &str, source: Source, f: impl FnOnce() -> Result<Measured>) {
        self.checks.push(Check {
            model: self.label.to_string(),
            name: name.to_string(),
            source,
            result: f(),
        });
    }

    fn quad(&mut self, name: &str, f: impl FnOnce() -> Result<Measured>) {
        self.add(name, Source::Quadrature, f)
    }
}

const FD_STEP: f64 = 1e-3;
/// `mc_mean` reports three standard errors; checks allow five.
const SIGMA_BAND: f64 = 5.0 / 3.0;
const PROBE_GAMMA: f64 = 1.0;

/// `I(X;Z_γ)` from output entropies, independent of any MMSE integral.
fn mi_x_z_entropic(an: &Analysis, gamma: f64) -> Result<(f64, f64)> {
    let cfg = an.cfg();
    let hz = output_entropy(an.context().y_law(), gamma, cfg)?;
    let hzx = cond_output_entropy(an.model(), gamma, cfg)?;
    Ok((hz.value - hzx.value, hz.err + hzx.err))
}

fn mi_y_z_entropic(an: &Analysis, gamma: f64) -> Result<(f64, f64)> {
    let hz = output_entropy(an.context().y_law(), gamma, an.cfg())?;
    let hn = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    Ok((hz.value - hn, hz.err))
}

fn is_clipped(m: &JointModel) -> bool {
    matches!(m, JointModel::Clipped { .. })
}

fn gaussian_noise_additive(m: &JointModel) -> bool {
    matches!(m, JointModel::AdditiveNoise { noise, .. } if noise.is_gaussian())
}

/// Standard normal upper tail `Q(t)` and density `φ(t)`.
fn tail(t: f64) -> (f64, f64) {
    let q = 0.5 * libm::erfc(t / std::f64::consts::SQRT_2);
    let phi = (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (q, phi)
}

fn model_checks(label: &str, model: &JointModel, cfg: &NumericsConfig) -> Vec<Check> {
    let mut s = Suite {
        label,
        checks: Vec::new(),
    };
    let an = match Analysis::new(model, cfg) {
        Ok(a) => a,
        Err(e) => {
            s.quad("setup", || Err(e));
            return s.checks;
        }
    };
    let mom = an.context().moments();
    let eta = an.eta_sq();
    let pair = an.pair_correlation();

    // sampler against exact moments
    s.add("sampler mean of Y", Source::MonteCarlo, || {
        let e = mc_mean(|r| model.draw(r).1, cfg);
        close(e.value, mom.mean_y, SIGMA_BAND * e.err + 1e-12)
    });
    s.add("sampler variance of Y", Source::MonteCarlo, || {
        let e = mc_mean(|r| (model.draw(r).1 - mom.mean_y).powi(2), cfg);
        close(e.value, mom.var_y, SIGMA_BAND * e.err + 1e-12)
    });
    s.add("sampler covariance of X and Y", Source::MonteCarlo, || {
        let e = mc_mean(
            |r| {
                let (x, y) = model.draw(r);
                (x - mom.mean_x) * (y - mom.mean_y)
            },
            cfg,
        );
        close(e.value, mom.corr * (mom.var_x * mom.var_y).sqrt(), SIGMA_BAND * e.err + 1e-12)
    });

    let small = NumericsConfig {
        mc_samples: 10_000,
        ..*cfg
    };
    s.add("sampler variance of Y at n=1e4", Source::MonteCarlo, || {
        let e = mc_mean(|r| (model.draw(r).1 - mom.mean_y).powi(2), &small);
        close(e.value, mom.var_y, SIGMA_BAND * e.err + 1e-12)
    });

    // correlation ordering
    s.quad("linear correlation <= eta^2", || {
        let e = eta.clone()?;
        at_most(mom.corr * mom.corr, e.value, e.err + 1e-12)
    });
    s.quad("eta^2 <= rho_m^2(X,Y)", || {
        let (e, p) = (eta.clone()?, pair.clone()?);
        at_most(e.value, p.rho_m2.value, e.err + p.rho_m2.err + 1e-9)
    });
    s.quad("eta_Y^2(X) <= rho_m^2(X,Y)", || {
        let p = pair.clone()?;
        at_most(p.eta_sq_y.value, p.rho_m2.value, p.eta_sq_y.err + p.rho_m2.err + 1e-9)
    });
    s.quad("S* lower bound >= eta^2", || {
        let (st, e) = (s_star_lower_bound(model, cfg)?, eta.clone()?);
        at_least(st.value, e.value, 0.01 + st.err + e.err)
    });

    // I-MMSE and the second-derivative identity at γ = 1
    let (g, h) = (PROBE_GAMMA, FD_STEP);
    s.quad("dI(Y;Z)/dgamma = mmse(Y|Z)/2", || {
        let (up, e1) = mi_y_z_entropic(&an, g + h)?;
        let (dn, e2) = mi_y_z_entropic(&an, g - h)?;
        let m = an.context().mmse_pair(g)?.mmse_y_z;
        close((up - dn) / (2.0 * h), 0.5 * m.value, 1e-6 + (e1 + e2) / (2.0 * h) + m.err)
    });
    s.quad("dI(X;Z)/dgamma = [mmse(Y|Z) - mmse(Y|Z,X)]/2", || {
        let p = an.context().mmse_pair(g)?;
        let want = 0.5 * (p.mmse_y_z.value - p.mmse_y_zx.value);
        let want_err = p.mmse_y_z.err + p.mmse_y_zx.err;
        let (slope, err) = if is_clipped(model) {
            // no closed conditional entropy: difference the integrated profile
            let up = an.context().info(g + h)?.mi_x_z;
            let dn = an.context().info(g - h)?.mi_x_z;
            ((up.value - dn.value) / (2.0 * h), (up.err + dn.err) / (2.0 * h))
        } else {
            let (up, e1) = mi_x_z_entropic(&an, g + h)?;
            let (dn, e2) = mi_x_z_entropic(&an, g - h)?;
            ((up - dn) / (2.0 * h), (e1 + e2) / (2.0 * h))
        };
        close(slope, want, 1e-6 + err + want_err)
    });
    s.quad("dmmse(Y|Z)/dgamma = -E var^2(Y|Z)", || {
        let c = an.context();
        let (up, dn, mid) = (c.mmse_pair(g + h)?, c.mmse_pair(g - h)?, c.mmse_pair(g)?);
        let fd = (up.mmse_y_z.value - dn.mmse_y_z.value) / (2.0 * h);
        let err = (up.mmse_y_z.err + dn.mmse_y_z.err) / (2.0 * h) + mid.var2_y_z.err;
        close(fd, -mid.var2_y_z.value, 1e-5 + err)
    });
    s.quad("dmmse(Y|Z,X)/dgamma = -E var^2(Y|Z,X)", || {
        let c = an.context();
        let (up, dn, mid) = (c.mmse_pair(g + h)?, c.mmse_pair(g - h)?, c.mmse_pair(g)?);
        let fd = (up.mmse_y_zx.value - dn.mmse_y_zx.value) / (2.0 * h);
        let err = (up.mmse_y_zx.err + dn.mmse_y_zx.err) / (2.0 * h) + mid.var2_y_zx.err;
        close(fd, -mid.var2_y_zx.value, 1e-5 + err)
    });
    s.quad("mmse(Y|Z) <= Gaussian mmse at gamma=2", || {
        let m = an.context().mmse_pair(2.0)?.mmse_y_z;
        at_most(m.value, mom.var_y / (1.0 + 2.0 * mom.var_y), m.err + 1e-12)
    });
    s.quad("mmse(Y|Z,X) <= mmse(Y|Z) at gamma=2", || {
        let p = an.context().mmse_pair(2.0)?;
        at_most(p.mmse_y_zx.value, p.mmse_y_z.value, p.mmse_y_zx.err + p.mmse_y_z.err + 1e-12)
    });

    s.quad("mmse(Y|X) = var Y (1 - eta^2)", || {
        let (m, e) = (mmse_y_x(model, cfg)?, eta.clone()?);
        close(m.value, mom.var_y * (1.0 - e.value), 1e-10 + m.err + mom.var_y * e.err)
    });
    s.quad("I(Y;Z) and I(X;Z) strictly increasing in gamma", || {
        let pts = ratio_grid()
            .into_iter()
            .map(|g| an.context().info(g))
            .collect::<Result<Vec<_>>>()?;
        let step = pts
            .windows(2)
            .map(|w| (w[1].mi_y_z.value - w[0].mi_y_z.value).min(w[1].mi_x_z.value - w[0].mi_x_z.value))
            .fold(f64::INFINITY, f64::min);
        at_least(step, f64::MIN_POSITIVE, 0.0)
    });

    // derivatives of g at zero
    let origin = an.g_eps(0.0);
    s.quad("g'(0) = 1/eta^2", || {
        let (p, e) = (origin.clone()?, eta.clone()?);
        let want = 1.0 / e.value;
        close(p.g_prime.value, want, 1e-4 * want + p.g_prime.err + want * e.err / e.value)
    });
    s.quad("g''(0) = 2 Delta", || {
        let (p, d) = (origin.clone()?, an.delta()?);
        close(p.g_second.value, 2.0 * d.value, 1e-4 * d.value.abs() + p.g_second.err + 2.0 * d.err)
    });

    // curve shape on four interior levels (nats)
    let top = an
        .mutual_information()
        .map(|i| (0.8 * i.value).min(1.0))
        .unwrap_or(0.5);
    let levels: Vec<f64> = (1..=4).map(|k| top * k as f64 / 4.0).collect();
    let curve: Result<Vec<_>> = an.curve(&levels, Units::Nats).into_iter().collect();
    s.quad("g_eps >= eps on the grid", || {
        let c = curve.clone()?;
        let worst = c.iter().map(|p| p.g_eps.value - p.eps).fold(f64::INFINITY, f64::min);
        let tol = c.iter().map(|p| p.g_eps.err).fold(0.0, f64::max);
        at_least(worst, 0.0, tol)
    });
    s.quad("gamma_eps strictly increasing", || {
        let c = curve.clone()?;
        let step = c
            .windows(2)
            .map(|w| w[1].gamma_eps - w[0].gamma_eps)
            .fold(f64::INFINITY, f64::min);
        at_least(step, f64::MIN_POSITIVE, 0.0)
    });
    s.quad("entropy-power bounds bracket g_eps", || {
        let c = curve.clone()?;
        let worst = c
            .iter()
            .map(|p| (p.lower_epi - p.g_eps.value).max(p.g_eps.value - p.upper_epi))
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = c.iter().map(|p| p.g_eps.err).fold(0.0, f64::max) + 1e-9;
        at_most(worst, 0.0, tol)
    });

    s.quad("g_eps nondecreasing on the grid", || {
        let c = curve.clone()?;
        let step = c
            .windows(2)
            .map(|w| w[1].g_eps.value - w[0].g_eps.value)
            .fold(f64::INFINITY, f64::min);
        let tol = c.iter().map(|p| p.g_eps.err).fold(0.0, f64::max);
        at_least(step, 0.0, 2.0 * tol)
    });
    s.quad("finite difference of g matches g'", || {
        let mid = levels[1];
        let (up, dn, at) = (an.g_eps(mid + FD_STEP)?, an.g_eps(mid - FD_STEP)?, an.g_eps(mid)?);
        let fd = (up.g_eps.value - dn.g_eps.value) / (2.0 * FD_STEP);
        let err = (up.g_eps.err + dn.g_eps.err) / (2.0 * FD_STEP) + at.g_prime.err;
        close(fd, at.g_prime.value, (1e-3 * at.g_prime.value).max(1e-3) + err)
    });

    // estimation privacy
    let level = pair
        .clone()
        .map(|p| 0.5 * p.eta_sq_y.value.min(p.rho_m2.value))
        .unwrap_or(0.0);
    let strong = an.ensr(level, EnsrMode::Strong);
    s.quad("W_eps <= M_eps at half the weak limit", || {
        let m = strong.clone()?;
        let w = an.ensr(level, EnsrMode::Weak)?;
        at_most(w.ensr.value, m.ensr.value, w.ensr.err + m.ensr.err + 1e-9)
    });
    s.quad("M_eps <= 1 - eps/rho_m^2", || {
        let m = strong.clone()?;
        at_most(m.ensr.value, m.gaussian_upper, m.ensr.err + 1e-9)
    });

    if !is_clipped(model) {
        s.quad("decomposition residual at gamma=1", || {
            let r = decomposition_residual(model, 1.0, cfg)?;
            close(r.value, 0.0, r.err)
        });
    }

    if let JointModel::BivariateGaussian { rho, var_y, .. } = *model {
        let r2 = rho * rho;
        let ln2 = std::f64::consts::LN_2;
        let eps_bits = 0.5 * an.mutual_information().map(|i| i.value).unwrap_or(0.0) / ln2;
        let p = an.g_eps(eps_bits * ln2);
        let t = (-2.0 * eps_bits).exp2();
        s.quad("g_eps matches the closed form (bits)", || {
            let p = p.clone()?;
            let want = 0.5 * (r2 / (t + r2 - 1.0)).log2();
            close(p.g_eps.value / ln2, want, 1e-5 + p.g_eps.err / ln2)
        });
        s.quad("gamma_eps matches the closed form", || {
            let p = p.clone()?;
            let want = (1.0 - t) / (t + r2 - 1.0) / var_y;
            close(p.gamma_eps, want, 1e-4 * want)
        });
        s.quad("g'(eps) matches the closed form", || {
            let p = p.clone()?;
            let want = t / (t + r2 - 1.0);
            close(p.g_prime.value, want, 1e-4 * want + p.g_prime.err)
        });
        s.quad("numerical ENSR = 1 - eps/rho^2", || {
            let m = an.ensr_numerical(0.5 * r2, EnsrMode::Strong)?;
            close(m.ensr.value, 0.5, 1e-3 + m.ensr.err)
        });
        s.quad("rho_m^2(X,Z) closed form at gamma=1", || {
            let a = ace(model, 1.0, cfg)?;
            close(a.rho_m2.value, r2 * var_y / (1.0 + var_y), 1e-5 + a.rho_m2.err)
        });
        s.quad("shift identity mmse(Y|Z,X) at gamma=1", || {
            let c = an.context();
            let shift = r2 / ((1.0 - r2) * var_y);
            let (a, b) = (c.mmse_pair(1.0)?.mmse_y_zx, c.mmse_pair(1.0 + shift)?.mmse_y_z);
            close(a.value, b.value, 1e-10 + a.err + b.err)
        });
        s.quad("g_eps equals the Gaussian rate-distortion function", || {
            let p = p.clone()?;
            let d = (t - (1.0 - r2)) / r2;
            close(p.g_eps.value / ln2, 0.5 * (1.0 / d).log2(), 1e-9 + p.g_eps.err / ln2)
        });
        s.quad("S* lower bound <= rho^2", || {
            let st = s_star_lower_bound(model, cfg)?;
            at_most(st.value, r2, 1e-6)
        });
    }

    if gaussian_noise_additive(model) {
        s.quad("sup I(X;Z)/I(Y;Z) = eta^2", || {
            let (r, e) = (an.sdpi_ratio_sup()?, eta.clone()?);
            close(r.value, e.value, 1e-3)
        });
        s.quad("inf mmse(Y|Z,X)/mmse(Y|Z) = 1 - eta^2", || {
            let (r, e) = (an.mmse_ratio_inf()?, eta.clone()?);
            close(r.value, 1.0 - e.value, 1e-3)
        });
        s.quad("I(X;Z) <= eta^2 I(Y;Z) on the SNR grid", || {
            let e = eta.clone()?;
            let worst = an
                .mi_ratio_curve()?
                .iter()
                .map(|(_, r)| r.value - r.err - e.value)
                .fold(f64::NEG_INFINITY, f64::max);
            at_most(worst, 0.0, e.err)
        });
        s.quad("g_eps >= eps/eta^2 on the grid", || {
            let c = curve.clone()?;
            let worst = c
                .iter()
                .map(|p| p.g_eps.value - p.sdpi_lower.unwrap_or(f64::NAN))
                .fold(f64::INFINITY, f64::min);
            let tol = c.iter().map(|p| p.g_eps.err).fold(0.0, f64::max);
            at_least(worst, 0.0, tol)
        });
    }

    if let JointModel::AdditiveNoise { x, a, noise } = model {
        if noise.is_gaussian() && a * a * x.var() >= noise.var() {
            s.quad("g_eps convex on the grid", || {
                let c = curve.clone()?;
                let worst = c
                    .windows(3)
                    .map(|w| w[2].g_eps.value - 2.0 * w[1].g_eps.value + w[0].g_eps.value)
                    .fold(f64::INFINITY, f64::min);
                let tol = c.iter().map(|p| p.g_eps.err).fold(0.0, f64::max);
                at_least(worst, 0.0, 4.0 * tol)
            });
        }
    }

    if matches!(model, JointModel::Clipped { .. }) {
        // Y is Gaussian; its jointly Gaussian surrogate shares corr(X,Y)
        s.quad("g_eps(X,Y_G) <= g_eps(X_G,Y_G) on the grid", || {
            let sur = JointModel::gaussian(mom.corr, mom.var_x, mom.var_y)?;
            let sa = Analysis::new(&sur, cfg)?;
            let top_g = sa.mutual_information()?.value;
            let lv: Vec<f64> = levels.iter().map(|l| l.min(0.9 * top_g)).collect();
            let mut worst = f64::NEG_INFINITY;
            let mut tol: f64 = 0.0;
            for e in lv {
                let (p, q) = (an.g_eps(e)?, sa.g_eps(e)?);
                worst = worst.max(p.g_eps.value - q.g_eps.value);
                tol = tol.max(p.g_eps.err + q.g_eps.err);
            }
            at_most(worst, 0.0, tol)
        });
    }

    if let JointModel::Clipped { threshold, .. } = *model {
        // standard Gaussian Y: given X = 0, Y is Y restricted to |Y| > L
        let (q, phi) = tail(threshold);
        let var_x = 1.0 - 2.0 * q - 2.0 * threshold * phi;
        let tail_var = 1.0 + threshold * phi / q;
        s.quad("E var^2(Y|X) Gaussian tail oracle", || {
            let e = e_var2_y_x(model, cfg)?;
            close(e.value, 2.0 * q * tail_var * tail_var, 1e-8 + e.err)
        });
        s.quad("eta^2 = var X / var Y", || {
            let e = eta.clone()?;
            close(e.value, var_x, 1e-8 + e.err)
        });
        s.quad("Delta < 0", || {
            let d = an.delta()?;
            at_most(d.value, -d.err, 0.0)
        });
        s.quad("g_eps < eps/eta^2 at eps=0.05 nats", || {
            let (p, e) = (an.g_eps(0.05)?, eta.clone()?);
            at_most(p.g_eps.value + p.g_eps.err, 0.05 / e.value, 0.0)
        });
    }

    if let JointModel::AdditiveNoise { x, noise, .. } = model {
        if x.is_gaussian() && !noise.is_gaussian() {
            s.quad("entropic ENSR lower bound <= M_eps", || {
                let rm = pair.clone()?.rho_m2.value;
                let m = an.ensr(0.1 * rm, EnsrMode::Strong)?;
                let lower = m.thm4_lower.ok_or_else(|| Error::unsupported("verify", "no bound"))?;
                at_most(lower, m.ensr.value, m.ensr.err)
            });
        }
    }

    s.checks
}

/// Every check of the battery, in battery order.
pub fn run_checks(cfg: &NumericsConfig) -> Vec<Check> {
    let models = battery();
    let run = |(label, m): &(String, JointModel)| model_checks(label, m, cfg);
    #[cfg(feature = "parallel")]
    let per_model: Vec<Vec<Check>> = {
        use rayon::prelude::*;
        models.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_model: Vec<Vec<Check>> = models.iter().map(run).collect();
    per_model.into_iter().flatten().collect()
}

/// The report text and whether every check passed.
pub fn report(checks: &[Check]) -> (String, bool) {
    let mut out = String::new();
    for c in checks {
        let _ = writeln!(out, "{}", c.line());
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    let all = passed == checks.len();
    let _ = writeln!(out, "{} {passed}/{}", if all { "PASS" } else { "FAIL" }, checks.len());
    if !all {
        let names: Vec<String> = checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| format!("{} :: {}", c.model, c.name))
            .collect();
        let _ = writeln!(out, "failed checks:\n  {}", names.join("\n  "));
    }
    (out, all)
}

pub fn run_verify(cfg: &NumericsConfig) -> Outcome {
    let checks = run_checks(cfg);
    let (text, ok) = report(&checks);
    Outcome {
        stdout: text,
        stderr: String::new(),
        code: if ok { EXIT_OK } else { EXIT_FAILED },
    }
}
