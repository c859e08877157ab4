use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::montecarlo::{chunk_rng, CHUNK};
use crate::numerics::quadrature::{gauss_hermite, gauss_legendre};
use crate::numerics::special::{norm_cdf, norm_sf};

use super::dist::ScalarDist;
use super::law::{Component, Law};

/// A bivariate source `(X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum JointModel {
    /// Jointly Gaussian pair with correlation `rho`.
    BivariateGaussian {
        mean_x: f64,
        mean_y: f64,
        var_x: f64,
        var_y: f64,
        rho: f64,
    },
    /// `Y = a·X + M` with `M` independent of `X`.
    AdditiveNoise { x: ScalarDist, a: f64, noise: ScalarDist },
    /// `X = Y·1{|Y| ≤ L}`: `X` equals `Y` inside `[-L, L]` and is `0` outside.
    Clipped { y: ScalarDist, threshold: f64 },
}

/// First and second moments of a joint model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    /// Pearson correlation of `X` and `Y`.
    pub corr: f64,
}

impl JointModel {
    pub fn gaussian(rho: f64, var_x: f64, var_y: f64) -> Result<Self> {
        let m = JointModel::BivariateGaussian {
            mean_x: 0.0,
            mean_y: 0.0,
            var_x,
            var_y,
            rho,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn additive(x: ScalarDist, a: f64, noise: ScalarDist) -> Result<Self> {
        let m = JointModel::AdditiveNoise { x, a, noise };
        m.validate()?;
        Ok(m)
    }

    pub fn clipped(y: ScalarDist, threshold: f64) -> Result<Self> {
        let m = JointModel::Clipped { y, threshold };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            JointModel::BivariateGaussian {
                mean_x,
                mean_y,
                var_x,
                var_y,
                rho,
            } => {
                if !(mean_x.is_finite() && mean_y.is_finite()) {
                    return Err(Error::InvalidParameter("means must be finite".into()));
                }
                if !(*var_x > 0.0 && *var_y > 0.0) || !var_x.is_finite() || !var_y.is_finite() {
                    return Err(Error::DegenerateModel(format!(
                        "variances must be positive (var_x {var_x}, var_y {var_y})"
                    )));
                }
                if !(rho.abs() < 1.0) {
                    return Err(Error::InvalidParameter(format!("rho must lie in (-1, 1), got {rho}")));
                }
            }
            JointModel::AdditiveNoise { x, a, noise } => {
                x.validate()?;
                noise.validate()?;
                if !(*a != 0.0 && a.is_finite()) {
                    return Err(Error::InvalidParameter(format!("a must be finite and nonzero, got {a}")));
                }
            }
            JointModel::Clipped { y, threshold } => {
                y.validate()?;
                if !(*threshold > 0.0) || !threshold.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "threshold must be positive, got {threshold}"
                    )));
                }
                let p_in = y.cdf(*threshold) - y.cdf(-threshold);
                if !(p_in > 0.0 && p_in < 1.0) {
                    return Err(Error::DegenerateModel(format!(
                        "P(|Y| <= L) = {p_in} must lie strictly between 0 and 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            JointModel::BivariateGaussian { .. } => "gaussian",
            JointModel::AdditiveNoise { .. } => "additive",
            JointModel::Clipped { .. } => "clipped",
        }
    }

    /// Probability that `X` is the atom at zero (Clipped only).
    pub fn clip_tail_mass(&self) -> Option<f64> {
        match self {
            JointModel::Clipped { y, threshold } => Some(clip_masses(y, *threshold).1),
            _ => None,
        }
    }

    pub fn moments(&self) -> Result<Moments> {
        let m = match self {
            JointModel::BivariateGaussian {
                mean_x,
                mean_y,
                var_x,
                var_y,
                rho,
            } => Moments {
                mean_x: *mean_x,
                mean_y: *mean_y,
                var_x: *var_x,
                var_y: *var_y,
                corr: *rho,
            },
            JointModel::AdditiveNoise { x, a, noise } => {
                let vx = x.var();
                let vy = a * a * vx + noise.var();
                Moments {
                    mean_x: x.mean(),
                    mean_y: a * x.mean() + noise.mean(),
                    var_x: vx,
                    var_y: vy,
                    corr: a * vx / (vx * vy).sqrt(),
                }
            }
            JointModel::Clipped { y, .. } => {
                let xl = self.x_law()?;
                let (mx, vx) = (xl.mean(), xl.var());
                let my = y.mean();
                let vy = y.var();
                // E[XY] = E[Y² 1{|Y| <= L}] = E[X²]
                let cov = vx + mx * mx - mx * my;
                Moments {
                    mean_x: mx,
                    mean_y: my,
                    var_x: vx,
                    var_y: vy,
                    corr: if vx > 0.0 { cov / (vx * vy).sqrt() } else { 0.0 },
                }
            }
        };
        if !(m.var_x > 0.0) || !(m.var_y > 0.0) {
            return Err(Error::DegenerateModel(format!(
                "zero variance (var_x {}, var_y {})",
                m.var_x, m.var_y
            )));
        }
        Ok(m)
    }

    /// Law of `X`.
    pub fn x_law(&self) -> Result<Law> {
        Ok(match self {
            JointModel::BivariateGaussian { mean_x, var_x, .. } => Law::gaussian(*mean_x, *var_x),
            JointModel::AdditiveNoise { x, .. } => x.law(),
            JointModel::Clipped { y, threshold } => {
                let (inner, p_in) = y.law().restrict(-threshold, *threshold)?;
                Law::mixture(vec![(p_in, inner), (1.0 - p_in, Law::atom(0.0))])
            }
        })
    }

    /// Law of `Y`.
    ///
    /// For additive models with two non-Gaussian factors the convolution is
    /// tabulated on `legendre·64 + 1` nodes and interpolated linearly.
    pub fn y_law(&self, hermite: usize, legendre: usize) -> Result<Law> {
        Ok(match self {
            JointModel::BivariateGaussian { mean_y, var_y, .. } => Law::gaussian(*mean_y, *var_y),
            JointModel::Clipped { y, .. } => y.law(),
            JointModel::AdditiveNoise { x, a, noise } => match (x, noise) {
                (ScalarDist::Gaussian { mean: mx, var: vx }, ScalarDist::Gaussian { mean, var }) => {
                    Law::gaussian(a * mx + mean, a * a * vx + var)
                }
                (_, ScalarDist::Gaussian { mean, var }) => {
                    let s = var.sqrt();
                    let nodes = dense_nodes(&x.law(), 0.5 * s / a.abs(), hermite);
                    Law::new(
                        nodes
                            .into_iter()
                            .map(|(xi, w)| (w, Component::gaussian(a * xi + mean, *var)))
                            .collect(),
                    )
                }
                (ScalarDist::Gaussian { mean, var }, _) => {
                    let sv = a * a * var;
                    let nodes = dense_nodes(&noise.law(), 0.5 * sv.sqrt(), hermite);
                    Law::new(
                        nodes
                            .into_iter()
                            .map(|(m, w)| (w, Component::gaussian(a * mean + m, sv)))
                            .collect(),
                    )
                }
                _ => convolve_bounded(x, *a, noise, legendre * 64 + 1),
            },
        })
    }

    /// Conditional law of `Y` given `X = x`.
    pub fn cond_density_y_given_x(&self, x: f64) -> Result<Law> {
        match self {
            JointModel::BivariateGaussian {
                mean_x,
                mean_y,
                var_x,
                var_y,
                rho,
            } => {
                let m = mean_y + rho * (var_y / var_x).sqrt() * (x - mean_x);
                Ok(Law::gaussian(m, (1.0 - rho * rho) * var_y))
            }
            JointModel::AdditiveNoise { x: xd, a, noise } => {
                let (lo, hi) = xd.support();
                if !x.is_finite() || x < lo || x > hi {
                    return Err(Error::UnsupportedPoint {
                        x,
                        reason: "outside the support of X".into(),
                    });
                }
                Ok(noise.law().shifted(a * x))
            }
            JointModel::Clipped { y, threshold } => {
                if !x.is_finite() || x.abs() > *threshold {
                    return Err(Error::UnsupportedPoint {
                        x,
                        reason: format!("|x| exceeds the threshold {threshold}"),
                    });
                }
                if x != 0.0 {
                    Ok(Law::atom(x))
                } else {
                    self.clip_tail_law(y, *threshold)
                }
            }
        }
    }

    /// Law of `Y` on `{|Y| > L}` (the branch where `X = 0`).
    fn clip_tail_law(&self, y: &ScalarDist, threshold: f64) -> Result<Law> {
        let law = y.law();
        let (lo, m_lo) = law.restrict(f64::NEG_INFINITY, -threshold)?;
        let (hi, m_hi) = law.restrict(threshold, f64::INFINITY)?;
        Ok(Law::mixture(vec![(m_lo, lo), (m_hi, hi)]))
    }

    /// Conditional branches `(probability, law of Y given the branch)` whose
    /// mixture is the joint law seen through `X`: the mmse given `X` is the
    /// weighted mmse of the branches. Atoms contribute zero.
    pub fn y_given_x_branches(&self) -> Result<Vec<(f64, Law)>> {
        Ok(match self {
            JointModel::BivariateGaussian { .. } | JointModel::AdditiveNoise { .. } => {
                // shift-invariant: every x gives the same centred law
                vec![(1.0, self.cond_density_y_given_x(self.x_law()?.mean())?)]
            }
            JointModel::Clipped { y, threshold } => {
                let (_, p_out) = clip_masses(y, *threshold);
                vec![(p_out, self.clip_tail_law(y, *threshold)?)]
            }
        })
    }

    /// `I(X;Y)` in nats (infinite for the clipped model, whose `X` reveals `Y`
    /// exactly on a set of positive probability).
    pub fn mutual_information(&self, cfg: &crate::numerics::NumericsConfig) -> Result<crate::numerics::Estimate> {
        use crate::numerics::Estimate;
        match self {
            JointModel::BivariateGaussian { rho, .. } => {
                Ok(Estimate::closed_form(-0.5 * (1.0 - rho * rho).ln()))
            }
            JointModel::Clipped { .. } => Ok(Estimate::closed_form(f64::INFINITY)),
            JointModel::AdditiveNoise { x, a, noise } => {
                if x.is_gaussian() && noise.is_gaussian() {
                    let snr = a * a * x.var() / noise.var();
                    return Ok(Estimate::closed_form(0.5 * snr.ln_1p()));
                }
                let hy = self.y_law(cfg.hermite_order, cfg.legendre_order)?.entropy(cfg.inner())?;
                let hm = noise.entropy();
                Ok(Estimate::quadrature(hy.value - hm, hy.err))
            }
        }
    }

    /// `n` i.i.d. draws of `(x, y)`; chunk `k` of `CHUNK` draws uses stream `k`
    /// of the seeded generator, so the output does not depend on threading.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let chunks = n.div_ceil(CHUNK);
        let run = |k: usize| {
            let mut rng = chunk_rng(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len).map(|_| self.draw(&mut rng)).collect::<Vec<_>>()
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<Vec<(f64, f64)>> = {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Vec<(f64, f64)>> = (0..chunks).map(run).collect();
        parts.into_iter().flatten().collect()
    }

    /// One draw of `(x, y)`.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            JointModel::BivariateGaussian {
                mean_x,
                mean_y,
                var_x,
                var_y,
                rho,
            } => {
                let u: f64 = rng.sample(rand_distr::StandardNormal);
                let v: f64 = rng.sample(rand_distr::StandardNormal);
                let x = mean_x + var_x.sqrt() * u;
                let y = mean_y + var_y.sqrt() * (rho * u + (1.0 - rho * rho).sqrt() * v);
                (x, y)
            }
            JointModel::AdditiveNoise { x, a, noise } => {
                let xv = x.sample(rng);
                (xv, a * xv + noise.sample(rng))
            }
            JointModel::Clipped { y, threshold } => {
                let yv = y.sample(rng);
                (if yv.abs() <= *threshold { yv } else { 0.0 }, yv)
            }
        }
    }
}

/// `(P(|Y| <= L), P(|Y| > L))` computed without cancellation for Gaussians.
pub(crate) fn clip_masses(y: &ScalarDist, l: f64) -> (f64, f64) {
    match y {
        ScalarDist::Gaussian { mean, var } => {
            let s = var.sqrt();
            let out = norm_sf((l - mean) / s) + norm_cdf((-l - mean) / s);
            (1.0 - out, out)
        }
        _ => {
            let p_in = y.cdf(l) - y.cdf(-l);
            (p_in, 1.0 - p_in)
        }
    }
}

/// Quadrature nodes for a law with panels no wider than `width`, so that a
/// kernel of that scale is integrated accurately.
fn dense_nodes(law: &Law, width: f64, hermite: usize) -> Vec<(f64, f64)> {
    const ORDER: usize = 8;
    let (t, tw) = gauss_legendre(ORDER);
    let mut out = Vec::new();
    for (w, c) in law.parts() {
        match c {
            Component::Atom(a) => out.push((*a, *w)),
            Component::Gaussian { var, .. } if var.sqrt() < 0.5 * width => {
                let (gt, gw) = gauss_hermite(hermite);
                let (m, _) = c.moments();
                let sc = (2.0 * var).sqrt();
                let norm = std::f64::consts::PI.sqrt();
                out.extend(gt.iter().zip(&gw).map(|(ti, wi)| (m + sc * ti, w * wi / norm)));
            }
            _ => {
                let (a, b) = c.span();
                let panels = (((b - a) / width).ceil() as usize).max(1);
                let h = (b - a) / panels as f64;
                let mut local = Vec::with_capacity(panels * ORDER);
                for k in 0..panels {
                    let pa = a + k as f64 * h;
                    for (ti, wi) in t.iter().zip(&tw) {
                        let x = pa + 0.5 * h * (ti + 1.0);
                        local.push((x, 0.5 * h * wi * c.pdf(x)));
                    }
                }
                let tot: f64 = local.iter().map(|p| p.1).sum();
                out.extend(local.into_iter().map(|(x, q)| (x, w * q / tot)));
            }
        }
    }
    out
}

/// Law of `a·X + M` for bounded-support, non-Gaussian factors, tabulated on a
/// uniform grid and represented as linear pieces.
fn convolve_bounded(x: &ScalarDist, a: f64, noise: &ScalarDist, nodes: usize) -> Law {
    let (xl, xh) = x.support();
    let (ml, mh) = noise.support();
    let (al, ah) = if a > 0.0 { (a * xl, a * xh) } else { (a * xh, a * xl) };
    let (lo, hi) = (al + ml, ah + mh);
    let xlaw = x.law();
    let breaks: Vec<f64> = {
        let mut b: Vec<f64> = xlaw.landmarks();
        b.retain(|v| v.is_finite());
        b
    };
    let (t, tw) = gauss_legendre(16);
    let density = |y: f64| -> f64 {
        // p_Y(y) = ∫ p_X(x) p_M(y - a x) dx, split at the kinks of both factors
        let mut pts = breaks.clone();
        if let ScalarDist::Grid(g) = noise {
            pts.extend(g.points().iter().map(|m| (y - m) / a));
        } else {
            pts.push((y - ml) / a);
            pts.push((y - mh) / a);
        }
        pts.retain(|p| *p >= xl && *p <= xh);
        pts.push(xl);
        pts.push(xh);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut s = 0.0;
        for w in pts.windows(2) {
            let (p, q) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            for (ti, wi) in t.iter().zip(&tw) {
                let xv = 0.5 * (p + q) + 0.5 * (q - p) * ti;
                s += 0.5 * (q - p) * wi * x.pdf(xv) * noise.pdf(y - a * xv);
            }
        }
        s / a.abs()
    };
    let h = (hi - lo) / (nodes - 1) as f64;
    let ys: Vec<f64> = (0..nodes).map(|i| lo + i as f64 * h).collect();
    let ps: Vec<f64> = ys.iter().map(|y| density(*y)).collect();
    let parts = (0..nodes - 1)
        .filter_map(|i| {
            let mass = 0.5 * h * (ps[i] + ps[i + 1]);
            (mass > 0.0).then(|| (mass, Component::linear(ys[i], ys[i + 1], ps[i], ps[i + 1])))
        })
        .collect();
    Law::new(parts)
}

impl fmt::Display for ScalarDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarDist::Gaussian { mean, var } => write!(f, "gaussian:{mean},{var}"),
            ScalarDist::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            ScalarDist::Grid(g) => {
                write!(f, "grid:")?;
                for (i, (x, p)) in g.points().iter().zip(g.pdf_values()).enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x}/{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for JointModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JointModel::BivariateGaussian {
                mean_x,
                mean_y,
                var_x,
                var_y,
                rho,
            } => write!(
                f,
                "kind=gaussian rho={rho} var_x={var_x} var_y={var_y} mean_x={mean_x} mean_y={mean_y}"
            ),
            JointModel::AdditiveNoise { x, a, noise } => write!(f, "kind=additive a={a} x={x} noise={noise}"),
            JointModel::Clipped { y, threshold } => write!(f, "kind=clipped L={threshold} y={y}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::norm_pdf;

    #[test]
    fn gaussian_moments_are_parameters() {
        let m = JointModel::gaussian(0.5, 1.0, 1.0).unwrap().moments().unwrap();
        assert_eq!((m.mean_x, m.mean_y, m.var_x, m.var_y, m.corr), (0.0, 0.0, 1.0, 1.0, 0.5));
    }

    #[test]
    fn additive_moments() {
        let m = JointModel::additive(ScalarDist::standard_gaussian(), 1.0, ScalarDist::standard_gaussian())
            .unwrap()
            .moments()
            .unwrap();
        assert!((m.var_y - 2.0).abs() < 1e-15);
        assert!((m.corr - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn clipped_moments_match_quadrature_oracle() {
        let m = JointModel::clipped(ScalarDist::standard_gaussian(), 1.0)
            .unwrap()
            .moments()
            .unwrap();
        // ∫_{-1}^{1} y² φ(y) dy = 2Φ(1) - 1 - 2φ(1)
        let oracle = 2.0 * norm_cdf(1.0) - 1.0 - 2.0 * norm_pdf(1.0);
        assert!((m.var_x - oracle).abs() < 1e-12, "{} vs {oracle}", m.var_x);
        assert!((m.var_x - 0.19876).abs() < 2e-5);
        assert!((m.corr - oracle.sqrt()).abs() < 1e-12);
        assert!((m.corr - 0.44583).abs() < 3e-5);
    }

    #[test]
    fn conditional_laws() {
        let g = JointModel::gaussian(0.5, 1.0, 1.0).unwrap();
        let c = g.cond_density_y_given_x(0.0).unwrap();
        assert!(c.mean().abs() < 1e-15 && (c.var() - 0.75).abs() < 1e-15);

        let add = JointModel::additive(ScalarDist::standard_gaussian(), 2.0, ScalarDist::standard_gaussian())
            .unwrap();
        let c = add.cond_density_y_given_x(1.0).unwrap();
        assert!((c.mean() - 2.0).abs() < 1e-15 && (c.var() - 1.0).abs() < 1e-15);

        let clip = JointModel::clipped(ScalarDist::standard_gaussian(), 1.0).unwrap();
        assert_eq!(clip.cond_density_y_given_x(0.4).unwrap().point_mass(), Some(0.4));
        let tail = clip.cond_density_y_given_x(0.0).unwrap();
        assert!(tail.point_mass().is_none());
        assert!(tail.pdf(0.5) == 0.0);
        let p_out = 1.0 - (2.0 * norm_cdf(1.0) - 1.0);
        assert!((tail.pdf(1.5) - norm_pdf(1.5) / p_out).abs() < 1e-12);
        assert!(clip.cond_density_y_given_x(1.5).is_err());
    }

    #[test]
    fn y_law_additive_is_convolution() {
        let add = JointModel::additive(
            ScalarDist::uniform(-1.0, 1.0).unwrap(),
            1.0,
            ScalarDist::standard_gaussian(),
        )
        .unwrap();
        let law = add.y_law(64, 32).unwrap();
        for y in [-2.0, 0.0, 0.7, 3.0] {
            let exact = 0.5 * (norm_cdf(y + 1.0) - norm_cdf(y - 1.0));
            assert!((law.pdf(y) - exact).abs() < 1e-12, "y = {y}");
        }
        assert!((law.var() - (1.0 / 3.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn convolution_of_uniforms_is_triangular() {
        let add = JointModel::additive(
            ScalarDist::uniform(0.0, 1.0).unwrap(),
            1.0,
            ScalarDist::uniform(0.0, 1.0).unwrap(),
        )
        .unwrap();
        let law = add.y_law(64, 32).unwrap();
        for y in [0.25, 0.5, 1.0, 1.5] {
            let exact = 1.0 - (y - 1.0f64).abs();
            assert!((law.pdf(y) - exact).abs() < 1e-9, "y = {y}: {}", law.pdf(y));
        }
        assert!((law.var() - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn sampler_is_deterministic() {
        let m = JointModel::clipped(ScalarDist::standard_gaussian(), 1.0).unwrap();
        let a = m.sample(100, 7);
        let b = m.sample(100, 7);
        assert_eq!(a.len(), 100);
        assert!(a.iter().zip(&b).all(|(p, q)| p.0.to_bits() == q.0.to_bits() && p.1.to_bits() == q.1.to_bits()));
    }

    #[test]
    fn mutual_information_closed_forms() {
        let cfg = crate::numerics::NumericsConfig::default();
        let g = JointModel::gaussian(0.5, 1.0, 1.0).unwrap();
        assert!((g.mutual_information(&cfg).unwrap().value - 0.143_841_036_225_890_2).abs() < 1e-15);
        let add = JointModel::additive(
            ScalarDist::uniform(-3f64.sqrt(), 3f64.sqrt()).unwrap(),
            1.0,
            ScalarDist::standard_gaussian(),
        )
        .unwrap();
        let mi = add.mutual_information(&cfg).unwrap();
        // below the Gaussian-input value ½ln2 and above zero
        assert!(mi.value > 0.3 && mi.value < 0.5 * 2f64.ln());
    }
}
