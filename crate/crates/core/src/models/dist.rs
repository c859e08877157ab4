use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::special::{norm_cdf, norm_pdf, norm_quantile};

use super::law::{Component, Law};

/// Piecewise-linear density on sorted nodes, normalized by the trapezoidal
/// rule on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDist {
    points: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridDist {
    /// Builds a grid density; the pdf values are rescaled so that the
    /// trapezoidal integral is 1.
    pub fn new(points: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.len() != pdf.len() {
            return Err(Error::InvalidParameter(format!(
                "grid needs matching point/pdf vectors of length >= 2 (got {} and {})",
                points.len(),
                pdf.len()
            )));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid points must be finite and strictly increasing".into(),
            ));
        }
        if pdf.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("grid pdf values must be finite and nonnegative".into()));
        }
        let mut cdf = vec![0.0; points.len()];
        for i in 1..points.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (points[i] - points[i - 1]) * (pdf[i] + pdf[i - 1]);
        }
        let total = *cdf.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("grid pdf has zero mass".into()));
        }
        let pdf: Vec<f64> = pdf.iter().map(|p| p / total).collect();
        let cdf: Vec<f64> = cdf.iter().map(|c| c / total).collect();
        Ok(GridDist { points, pdf, cdf })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn pdf_values(&self) -> &[f64] {
        &self.pdf
    }

    fn segment_of(&self, x: f64) -> Option<usize> {
        let n = self.points.len();
        if x < self.points[0] || x > self.points[n - 1] {
            return None;
        }
        let i = self.points.partition_point(|p| *p <= x);
        Some(i.clamp(1, n - 1) - 1)
    }

    fn pdf(&self, x: f64) -> f64 {
        match self.segment_of(x) {
            None => 0.0,
            Some(i) => {
                let (x0, x1) = (self.points[i], self.points[i + 1]);
                let t = (x - x0) / (x1 - x0);
                self.pdf[i] + t * (self.pdf[i + 1] - self.pdf[i])
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.points.len();
        if x <= self.points[0] {
            return 0.0;
        }
        if x >= self.points[n - 1] {
            return 1.0;
        }
        let i = self.segment_of(x).unwrap();
        let d = x - self.points[i];
        let slope = (self.pdf[i + 1] - self.pdf[i]) / (self.points[i + 1] - self.points[i]);
        self.cdf[i] + self.pdf[i] * d + 0.5 * slope * d * d
    }

    fn quantile(&self, u: f64) -> f64 {
        let n = self.points.len();
        let u = u.clamp(0.0, 1.0);
        let i = (self.cdf.partition_point(|c| *c < u)).clamp(1, n - 1) - 1;
        let r = u - self.cdf[i];
        let h = self.points[i + 1] - self.points[i];
        let p0 = self.pdf[i];
        let slope = (self.pdf[i + 1] - p0) / h;
        // solve p0 d + slope d²/2 = r in the cancellation-free form
        let disc = (p0 * p0 + 2.0 * slope * r).max(0.0);
        let denom = p0 + disc.sqrt();
        let d = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.points[i] + d.clamp(0.0, h)
    }

    /// `∫ x^k p(x) dx` for k = 0..=2, exact for the piecewise-linear density.
    fn raw_moments(&self) -> [f64; 3] {
        let (t, w) = gauss_legendre(3);
        let mut m = [0.0; 3];
        for i in 0..self.points.len() - 1 {
            let (a, b) = (self.points[i], self.points[i + 1]);
            for (ti, wi) in t.iter().zip(&w) {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * ti;
                let p = self.pdf(x) * 0.5 * (b - a) * wi;
                m[0] += p;
                m[1] += p * x;
                m[2] += p * x * x;
            }
        }
        m
    }
}

/// A univariate law: Gaussian, uniform, or a piecewise-linear grid density.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarDist {
    Gaussian { mean: f64, var: f64 },
    Uniform { lo: f64, hi: f64 },
    Grid(GridDist),
}

impl ScalarDist {
    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        let d = ScalarDist::Gaussian { mean, var };
        d.validate()?;
        Ok(d)
    }

    pub fn standard_gaussian() -> Self {
        ScalarDist::Gaussian { mean: 0.0, var: 1.0 }
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = ScalarDist::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn grid(points: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        Ok(ScalarDist::Grid(GridDist::new(points, pdf)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarDist::Gaussian { mean, var } => {
                if !mean.is_finite() || !(*var > 0.0) || !var.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "Gaussian needs finite mean and var > 0 (mean {mean}, var {var})"
                    )));
                }
            }
            ScalarDist::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
                    return Err(Error::InvalidParameter(format!(
                        "Uniform needs finite lo < hi (lo {lo}, hi {hi})"
                    )));
                }
            }
            ScalarDist::Grid(_) => {}
        }
        Ok(())
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, ScalarDist::Gaussian { .. })
    }

    pub fn mean(&self) -> f64 {
        match self {
            ScalarDist::Gaussian { mean, .. } => *mean,
            ScalarDist::Uniform { lo, hi } => 0.5 * (lo + hi),
            ScalarDist::Grid(g) => {
                let m = g.raw_moments();
                m[1] / m[0]
            }
        }
    }

    pub fn var(&self) -> f64 {
        match self {
            ScalarDist::Gaussian { var, .. } => *var,
            ScalarDist::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            ScalarDist::Grid(g) => {
                let m = g.raw_moments();
                let mean = m[1] / m[0];
                m[2] / m[0] - mean * mean
            }
        }
    }

    /// Smallest interval holding the support (infinite for the Gaussian).
    pub fn support(&self) -> (f64, f64) {
        match self {
            ScalarDist::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ScalarDist::Uniform { lo, hi } => (*lo, *hi),
            ScalarDist::Grid(g) => (g.points[0], *g.points.last().unwrap()),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            ScalarDist::Gaussian { mean, var } => {
                let s = var.sqrt();
                norm_pdf((x - mean) / s) / s
            }
            ScalarDist::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            ScalarDist::Grid(g) => g.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ScalarDist::Gaussian { mean, var } => norm_cdf((x - mean) / var.sqrt()),
            ScalarDist::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ScalarDist::Grid(g) => g.cdf(x),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            ScalarDist::Gaussian { mean, var } => mean + var.sqrt() * norm_quantile(u),
            ScalarDist::Uniform { lo, hi } => lo + u * (hi - lo),
            ScalarDist::Grid(g) => g.quantile(u),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarDist::Gaussian { mean, var } => {
                let n: f64 = rng.sample(StandardNormal);
                mean + var.sqrt() * n
            }
            ScalarDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ScalarDist::Grid(g) => g.quantile(rng.random::<f64>()),
        }
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        match self {
            ScalarDist::Gaussian { var, .. } => {
                0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln()
            }
            ScalarDist::Uniform { lo, hi } => (hi - lo).ln(),
            ScalarDist::Grid(g) => {
                let mut h = 0.0;
                for i in 0..g.points.len() - 1 {
                    let w = g.points[i + 1] - g.points[i];
                    h -= w * mean_p_ln_p(g.pdf[i], g.pdf[i + 1]);
                }
                h
            }
        }
    }

    /// The same law as a [`Law`] mixture.
    pub fn law(&self) -> Law {
        match self {
            ScalarDist::Gaussian { mean, var } => Law::gaussian(*mean, *var),
            ScalarDist::Uniform { lo, hi } => Law::new(vec![(
                1.0,
                Component::linear(*lo, *hi, 1.0, 1.0),
            )]),
            ScalarDist::Grid(g) => {
                let parts = (0..g.points.len() - 1)
                    .filter_map(|i| {
                        let mass = g.cdf[i + 1] - g.cdf[i];
                        (mass > 0.0).then(|| {
                            (
                                mass,
                                Component::linear(g.points[i], g.points[i + 1], g.pdf[i], g.pdf[i + 1]),
                            )
                        })
                    })
                    .collect();
                Law::new(parts)
            }
        }
    }
}

/// Average of `p ln p` over a segment where `p` runs linearly from `p0` to `p1`.
fn mean_p_ln_p(p0: f64, p1: f64) -> f64 {
    let xlx = |p: f64| if p > 0.0 { p * p * (0.5 * p.ln() - 0.25) } else { 0.0 };
    if (p1 - p0).abs() > 1e-3 * (p0 + p1) {
        (xlx(p1) - xlx(p0)) / (p1 - p0)
    } else {
        // nearly constant: midpoint expansion, second-order accurate in p1 - p0
        let m = 0.5 * (p0 + p1);
        let d = p1 - p0;
        if m > 0.0 {
            m * m.ln() + d * d / (24.0 * m)
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::montecarlo::chunk_rng;

    #[test]
    fn grid_normalizes_by_trapezoid() {
        let g = ScalarDist::grid(vec![0.0, 1.0, 2.0], vec![1.0, 3.0, 1.0]).unwrap();
        if let ScalarDist::Grid(gd) = &g {
            let pts = gd.points();
            let p = gd.pdf_values();
            let trap: f64 = (0..2).map(|i| 0.5 * (pts[i + 1] - pts[i]) * (p[i] + p[i + 1])).sum();
            assert!((trap - 1.0).abs() < 1e-12);
        }
        assert!((g.mean() - 1.0).abs() < 1e-12);
        assert!((g.cdf(2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ScalarDist::gaussian(0.0, 0.0).is_err());
        assert!(ScalarDist::uniform(1.0, 1.0).is_err());
        assert!(ScalarDist::grid(vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(ScalarDist::grid(vec![0.0, 1.0], vec![-1.0, 1.0]).is_err());
    }

    #[test]
    fn grid_quantile_inverts_cdf() {
        let g = ScalarDist::grid(vec![-1.0, 0.0, 0.5, 2.0], vec![0.0, 2.0, 1.0, 0.0]).unwrap();
        for u in [0.0, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let x = g.quantile(u);
            assert!((g.cdf(x) - u).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn uniform_grid_matches_uniform() {
        let u = ScalarDist::uniform(-1.0, 3.0).unwrap();
        let g = ScalarDist::grid(vec![-1.0, 1.0, 3.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert!((u.var() - g.var()).abs() < 1e-12);
        assert!((u.entropy() - g.entropy()).abs() < 1e-12);
    }

    #[test]
    fn triangular_entropy() {
        // triangular density on [0, 2] peaked at 1: h = 1/2 + ln 1 = 0.5
        let g = ScalarDist::grid(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!((g.entropy() - 0.5).abs() < 1e-12);
        assert!((g.var() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_moments() {
        let d = ScalarDist::grid(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let mut rng = chunk_rng(3, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (d.var() / n as f64).sqrt();
        assert!((m - 1.0).abs() < 5.0 * sd);
    }
}
