//! Finite mixtures of truncated Gaussians, linear density pieces and atoms.
//!
//! Every component has a closed-form posterior under the Gaussian channel
//! `Z = √γ·Y + N`, so posterior means and variances of a mixture are exact
//! for any SNR; only the outer integral over `z` needs quadrature.

use crate::error::{Error, Result};
use crate::numerics::quadrature::{gauss_hermite, gauss_legendre};
use crate::numerics::special::{ln_gauss, ln_norm_pdf, trunc_std_normal};

/// Number of standard deviations treated as the effective support of an
/// untruncated Gaussian.
pub const GAUSS_SPAN: f64 = 12.0;

/// One mixture component, normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// `N(mean, var)` restricted to `[lo, hi]`; `ln_mass` is the log of the
    /// untruncated probability of that interval.
    Gaussian {
        mean: f64,
        var: f64,
        lo: f64,
        hi: f64,
        ln_mass: f64,
    },
    /// Density running linearly from `p_lo` at `lo` to `p_hi` at `hi`.
    Linear { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },
    Atom(f64),
}

/// Posterior summary for one observation `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    /// Log density of `z`.
    pub ln_p: f64,
    pub mean: f64,
    pub var: f64,
}

impl Component {
    pub fn gaussian(mean: f64, var: f64) -> Self {
        Component::Gaussian {
            mean,
            var,
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            ln_mass: 0.0,
        }
    }

    pub fn truncated_gaussian(mean: f64, var: f64, lo: f64, hi: f64) -> Self {
        let s = var.sqrt();
        let ln_mass = if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            0.0
        } else {
            trunc_std_normal((lo - mean) / s, (hi - mean) / s).ln_mass
        };
        Component::Gaussian {
            mean,
            var,
            lo,
            hi,
            ln_mass,
        }
    }

    /// Linear piece with the given (unnormalized) endpoint densities.
    pub fn linear(lo: f64, hi: f64, p_lo: f64, p_hi: f64) -> Self {
        let mass = 0.5 * (hi - lo) * (p_lo + p_hi);
        Component::Linear {
            lo,
            hi,
            p_lo: p_lo / mass,
            p_hi: p_hi / mass,
        }
    }

    fn is_truncated(lo: f64, hi: f64) -> bool {
        lo > f64::NEG_INFINITY || hi < f64::INFINITY
    }

    /// Mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Component::Gaussian {
                mean, var, lo, hi, ..
            } => {
                if !Self::is_truncated(lo, hi) {
                    return (mean, var);
                }
                let s = var.sqrt();
                let t = trunc_std_normal((lo - mean) / s, (hi - mean) / s);
                (mean + s * t.mean, var * t.var)
            }
            Component::Linear { lo, hi, p_lo, p_hi } => {
                let h = hi - lo;
                // moments about lo of the trapezoid
                let m1 = h * h * (p_lo / 2.0 + (p_hi - p_lo) / 3.0);
                let m2 = h * h * h * (p_lo / 3.0 + (p_hi - p_lo) / 4.0);
                (lo + m1, (m2 - m1 * m1).max(0.0))
            }
            Component::Atom(a) => (a, 0.0),
        }
    }

    /// Density at `y` (zero for atoms).
    pub fn pdf(&self, y: f64) -> f64 {
        match *self {
            Component::Gaussian {
                mean,
                var,
                lo,
                hi,
                ln_mass,
            } => {
                if y < lo || y > hi {
                    0.0
                } else {
                    (ln_gauss(y, mean, var) - ln_mass).exp()
                }
            }
            Component::Linear { lo, hi, p_lo, p_hi } => {
                // half-open so adjacent pieces do not double count a shared node
                if y < lo || y >= hi {
                    0.0
                } else {
                    p_lo + (p_hi - p_lo) * (y - lo) / (hi - lo)
                }
            }
            Component::Atom(_) => 0.0,
        }
    }

    /// Effective support used for integration ranges.
    pub fn span(&self) -> (f64, f64) {
        match *self {
            Component::Gaussian {
                mean, var, lo, hi, ..
            } => {
                let s = var.sqrt();
                (lo.max(mean - GAUSS_SPAN * s), hi.min(mean + GAUSS_SPAN * s))
            }
            Component::Linear { lo, hi, .. } => (lo, hi),
            Component::Atom(a) => (a, a),
        }
    }

    /// Posterior of this component given `z = sg·y + noise` with `sg = √γ > 0`.
    pub fn posterior(&self, z: f64, sg: f64) -> Posterior {
        match *self {
            Component::Gaussian {
                mean,
                var,
                lo,
                hi,
                ln_mass,
            } => {
                let g = sg * sg;
                let denom = 1.0 + g * var;
                let pv = var / denom;
                let pm = (mean + var * sg * z) / denom;
                let ln_p = ln_gauss(z, sg * mean, denom);
                if !Self::is_truncated(lo, hi) {
                    return Posterior {
                        ln_p,
                        mean: pm,
                        var: pv,
                    };
                }
                let ps = pv.sqrt();
                let t = trunc_std_normal((lo - pm) / ps, (hi - pm) / ps);
                Posterior {
                    ln_p: ln_p + t.ln_mass - ln_mass,
                    mean: pm + ps * t.mean,
                    var: pv * t.var,
                }
            }
            Component::Linear { lo, hi, p_lo, p_hi } => {
                // flat prior times likelihood is N(z/sg, 1/γ) up to 1/sg
                let m = z / sg;
                let s = 1.0 / sg;
                let t = trunc_std_normal((lo - m) / s, (hi - m) / s);
                let ybar = (m + s * t.mean).clamp(lo, hi);
                let slope = (p_hi - p_lo) / (hi - lo);
                let f = (p_lo + slope * (ybar - lo)).max(f64::MIN_POSITIVE);
                let v = s * s * t.var;
                let k3 = s * s * s * t.skew;
                let shift = slope * v / f;
                Posterior {
                    ln_p: -sg.ln() + t.ln_mass + f.ln(),
                    mean: ybar + shift,
                    var: (v + slope * k3 / f - shift * shift).max(0.0),
                }
            }
            Component::Atom(a) => Posterior {
                ln_p: ln_norm_pdf(z - sg * a),
                mean: a,
                var: 0.0,
            },
        }
    }

    /// Restriction to `[a, b]` with the retained probability, or `None` when
    /// the component has no mass there.
    fn restrict(&self, a: f64, b: f64) -> Option<(f64, Component)> {
        match *self {
            Component::Gaussian {
                mean,
                var,
                lo,
                hi,
                ln_mass,
            } => {
                let (nlo, nhi) = (lo.max(a), hi.min(b));
                if !(nhi > nlo) {
                    return None;
                }
                let c = Component::truncated_gaussian(mean, var, nlo, nhi);
                let Component::Gaussian { ln_mass: nm, .. } = c else {
                    unreachable!()
                };
                Some(((nm - ln_mass).exp(), c))
            }
            Component::Linear { lo, hi, p_lo, p_hi } => {
                let (nlo, nhi) = (lo.max(a), hi.min(b));
                if !(nhi > nlo) {
                    return None;
                }
                let at = |y: f64| p_lo + (p_hi - p_lo) * (y - lo) / (hi - lo);
                let (q0, q1) = (at(nlo), at(nhi));
                let mass = 0.5 * (nhi - nlo) * (q0 + q1);
                (mass > 0.0).then(|| (mass, Component::linear(nlo, nhi, q0, q1)))
            }
            Component::Atom(x) => (x >= a && x <= b).then_some((1.0, Component::Atom(x))),
        }
    }

    fn shifted(&self, c: f64) -> Component {
        match *self {
            Component::Gaussian {
                mean,
                var,
                lo,
                hi,
                ln_mass,
            } => Component::Gaussian {
                mean: mean + c,
                var,
                lo: lo + c,
                hi: hi + c,
                ln_mass,
            },
            Component::Linear { lo, hi, p_lo, p_hi } => Component::Linear {
                lo: lo + c,
                hi: hi + c,
                p_lo,
                p_hi,
            },
            Component::Atom(a) => Component::Atom(a + c),
        }
    }
}

/// A probability law on the real line as a weighted mixture of components.
#[derive(Debug, Clone, PartialEq)]
pub struct Law {
    parts: Vec<(f64, Component)>,
    ln_w: Vec<f64>,
}

impl Law {
    /// Mixture with the given weights (renormalized; zero weights dropped).
    pub fn new(parts: Vec<(f64, Component)>) -> Self {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        assert!(total > 0.0, "law needs positive total weight");
        let parts: Vec<_> = parts
            .into_iter()
            .filter(|p| p.0 > 0.0)
            .map(|(w, c)| (w / total, c))
            .collect();
        let ln_w = parts.iter().map(|p| p.0.ln()).collect();
        Law { parts, ln_w }
    }

    pub fn gaussian(mean: f64, var: f64) -> Self {
        Law::new(vec![(1.0, Component::gaussian(mean, var))])
    }

    pub fn atom(x: f64) -> Self {
        Law::new(vec![(1.0, Component::Atom(x))])
    }

    /// Weighted mixture of laws.
    pub fn mixture(laws: Vec<(f64, Law)>) -> Self {
        let parts = laws
            .into_iter()
            .flat_map(|(w, l)| l.parts.into_iter().map(move |(v, c)| (w * v, c)))
            .collect();
        Law::new(parts)
    }

    pub fn parts(&self) -> &[(f64, Component)] {
        &self.parts
    }

    /// `Some(x)` when the law is a single point mass at `x`.
    pub fn point_mass(&self) -> Option<f64> {
        match self.parts.as_slice() {
            [(_, Component::Atom(a))] => Some(*a),
            _ => None,
        }
    }

    pub fn has_atoms(&self) -> bool {
        self.parts.iter().any(|p| matches!(p.1, Component::Atom(_)))
    }

    pub fn mean(&self) -> f64 {
        self.parts.iter().map(|(w, c)| w * c.moments().0).sum()
    }

    pub fn var(&self) -> f64 {
        let m = self.mean();
        self.parts
            .iter()
            .map(|(w, c)| {
                let (cm, cv) = c.moments();
                w * (cv + (cm - m) * (cm - m))
            })
            .sum()
    }

    /// Density of the absolutely continuous part at `y`.
    pub fn pdf(&self, y: f64) -> f64 {
        self.parts.iter().map(|(w, c)| w * c.pdf(y)).sum()
    }

    /// Interval outside which the law has negligible mass.
    pub fn span(&self) -> (f64, f64) {
        self.parts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, c)| {
            let (lo, hi) = c.span();
            (a.min(lo), b.max(hi))
        })
    }

    /// Points where the density or its derivative may jump, plus component
    /// centres; sorted and deduplicated.
    pub fn landmarks(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for (_, c) in &self.parts {
            match *c {
                Component::Gaussian {
                    mean, var, lo, hi, ..
                } => {
                    let (a, b) = c.span();
                    let s = var.sqrt();
                    if lo.is_finite() {
                        pts.push(lo);
                    }
                    if hi.is_finite() {
                        pts.push(hi);
                    }
                    if mean > a && mean < b {
                        pts.push(mean);
                    }
                    pts.push(a.max(mean - 4.0 * s).min(b));
                    pts.push(b.min(mean + 4.0 * s).max(a));
                }
                Component::Linear { lo, hi, .. } => {
                    pts.push(lo);
                    pts.push(hi);
                }
                Component::Atom(a) => pts.push(a),
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// The law of `Y + c`.
    pub fn shifted(&self, c: f64) -> Law {
        Law {
            parts: self.parts.iter().map(|(w, comp)| (*w, comp.shifted(c))).collect(),
            ln_w: self.ln_w.clone(),
        }
    }

    /// Conditional law on `[a, b]` together with the probability of `[a, b]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<(Law, f64)> {
        let parts: Vec<_> = self
            .parts
            .iter()
            .filter_map(|(w, c)| c.restrict(a, b).map(|(m, nc)| (w * m, nc)))
            .collect();
        let mass: f64 = parts.iter().map(|p| p.0).sum();
        if !(mass > 0.0) {
            return Err(Error::DegenerateModel(format!("no probability mass in [{a}, {b}]")));
        }
        Ok((Law::new(parts), mass))
    }

    /// Posterior mean and variance of `Y` given `Z = √γ·Y + N = z`; `sg = √γ`.
    pub fn posterior(&self, z: f64, sg: f64) -> Posterior {
        if sg == 0.0 {
            return Posterior {
                ln_p: ln_norm_pdf(z),
                mean: self.mean(),
                var: self.var(),
            };
        }
        // streaming weighted mean/variance in the log domain
        let mut lmax = f64::NEG_INFINITY;
        let mut s = 0.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for ((_, c), lw) in self.parts.iter().zip(&self.ln_w) {
            let p = c.posterior(z, sg);
            let l = lw + p.ln_p;
            if !(l > f64::NEG_INFINITY) {
                continue;
            }
            if l > lmax {
                let r = (lmax - l).exp();
                s *= r;
                m2 *= r;
                lmax = l;
            }
            let w = (l - lmax).exp();
            if w == 0.0 {
                continue;
            }
            let ns = s + w;
            let d = p.mean - mean;
            mean += d * w / ns;
            m2 += w * p.var + w * d * (p.mean - mean);
            s = ns;
        }
        if s == 0.0 {
            return Posterior {
                ln_p: f64::NEG_INFINITY,
                mean: self.mean(),
                var: 0.0,
            };
        }
        Posterior {
            ln_p: lmax + s.ln(),
            mean,
            var: (m2 / s).max(0.0),
        }
    }

    /// Quadrature nodes `(y, weight)` for expectations under the law.
    pub fn nodes(&self, hermite: usize, legendre: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (w, c) in &self.parts {
            match *c {
                Component::Gaussian {
                    mean,
                    var,
                    lo,
                    hi,
                    ln_mass,
                } => {
                    if !Component::is_truncated(lo, hi) {
                        let (t, tw) = gauss_hermite(hermite);
                        let scale = (2.0 * var).sqrt();
                        let norm = std::f64::consts::PI.sqrt();
                        out.extend(t.iter().zip(&tw).map(|(ti, wi)| (mean + scale * ti, w * wi / norm)));
                    } else {
                        let (a, b) = c.span();
                        let s = var.sqrt();
                        let panels = (((b - a) / s).ceil() as usize).max(1);
                        let (t, tw) = gauss_legendre(legendre.min(16));
                        let h = (b - a) / panels as f64;
                        let mut local = Vec::with_capacity(panels * t.len());
                        for k in 0..panels {
                            let pa = a + k as f64 * h;
                            for (ti, wi) in t.iter().zip(&tw) {
                                let y = pa + 0.5 * h * (ti + 1.0);
                                let dens = (ln_gauss(y, mean, var) - ln_mass).exp();
                                local.push((y, 0.5 * h * wi * dens));
                            }
                        }
                        let tot: f64 = local.iter().map(|p| p.1).sum();
                        out.extend(local.into_iter().map(|(y, q)| (y, w * q / tot)));
                    }
                }
                Component::Linear { lo, hi, .. } => {
                    let (t, tw) = gauss_legendre(legendre.min(16));
                    let h = hi - lo;
                    out.extend(t.iter().zip(&tw).map(|(ti, wi)| {
                        let y = lo + 0.5 * h * (ti + 1.0);
                        (y, w * 0.5 * h * wi * c.pdf(y))
                    }));
                }
                Component::Atom(a) => out.push((a, *w)),
            }
        }
        out
    }

    /// `E[f(Y)]` by quadrature on [`Law::nodes`].
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, hermite: usize, legendre: usize) -> f64 {
        self.nodes(hermite, legendre).iter().map(|(y, w)| w * f(*y)).sum()
    }

    /// Differential entropy `-∫ p ln p` (nats) of an atom-free law.
    pub fn entropy(&self, tol: crate::numerics::Tolerance) -> Result<crate::numerics::Estimate> {
        if self.has_atoms() {
            return Err(Error::DegenerateModel("law has atoms, no differential entropy".into()));
        }
        let breaks = self.landmarks();
        crate::numerics::quadrature::adaptive_integrate_with(
            |y| {
                let p = self.pdf(y);
                Ok(if p > 0.0 { -p * p.ln() } else { 0.0 })
            },
            &breaks,
            tol,
        )
    }
}
