//! Lazily built piecewise-Chebyshev representation of a vector function on
//! `[0, ∞)` together with its running integral.
//!
//! The half-line is cut into dyadic segments `[0, s0]`, `[s0, 2 s0]`,
//! `[2 s0, 4 s0]`, ... Each segment is built on first use, split adaptively
//! into panels until a 17-point Chebyshev-Lobatto interpolant resolves the
//! integrand, and cached. Evaluating `∫_0^γ f` afterwards costs a handful of
//! interpolant evaluations, which makes repeated root-finding on the
//! integral cheap.

use std::sync::OnceLock;

use crate::error::{Error, Result};

use super::quadrature::{gauss_legendre, Tolerance};

const DEGREE: usize = 16;
const SEGMENTS: usize = 56;
const MAX_DEPTH: u32 = 14;

type Integrand<const N: usize> = dyn Fn(f64) -> Result<[f64; N]> + Send + Sync;

#[derive(Debug, Clone)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    coeffs: [[f64; DEGREE + 1]; N],
    integral: [f64; N],
    err: [f64; N],
}

#[derive(Debug, Clone)]
struct Segment<const N: usize> {
    panels: Vec<Panel<N>>,
    integral: [f64; N],
    err: [f64; N],
}

/// Running integral `F(γ) = ∫_0^γ f(t) dt` of a vector integrand.
pub struct CumulativeProfile<const N: usize> {
    f: Box<Integrand<N>>,
    s0: f64,
    tol: Tolerance,
    segments: Vec<OnceLock<Result<Segment<N>>>>,
}

impl<const N: usize> std::fmt::Debug for CumulativeProfile<N> {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let built = self.segments.iter().filter(|s| s.get().is_some()).count();
        fm.debug_struct("CumulativeProfile")
            .field("s0", &self.s0)
            .field("built_segments", &built)
            .finish()
    }
}

fn lobatto_nodes() -> [f64; DEGREE + 1] {
    let mut t = [0.0; DEGREE + 1];
    for (j, tj) in t.iter_mut().enumerate() {
        *tj = (std::f64::consts::PI * j as f64 / DEGREE as f64).cos();
    }
    t
}

/// Chebyshev coefficients of the interpolant through Lobatto samples.
fn cheb_coeffs(vals: &[f64; DEGREE + 1]) -> [f64; DEGREE + 1] {
    let n = DEGREE;
    let mut c = [0.0; DEGREE + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, v) in vals.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            s += w * v * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
        }
        let scale = if k == 0 || k == n { 1.0 } else { 2.0 };
        *ck = scale * s / n as f64;
    }
    c
}

fn clenshaw(c: &[f64; DEGREE + 1], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c[1..].iter().rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}

/// `∫_{-1}^{1}` of the Chebyshev series.
fn cheb_integral(c: &[f64; DEGREE + 1]) -> f64 {
    c.iter()
        .enumerate()
        .step_by(2)
        .map(|(k, ck)| ck * 2.0 / (1.0 - (k * k) as f64))
        .sum()
}

impl<const N: usize> CumulativeProfile<N> {
    /// `s0` is the width of the first segment; tolerances apply to the
    /// integrand pointwise and are relative to its magnitude on each panel.
    pub fn new<F>(f: F, s0: f64, tol: Tolerance) -> Self
    where
        F: Fn(f64) -> Result<[f64; N]> + Send + Sync + 'static,
    {
        assert!(s0 > 0.0);
        CumulativeProfile {
            f: Box::new(f),
            s0,
            tol,
            segments: (0..SEGMENTS).map(|_| OnceLock::new()).collect(),
        }
    }

    fn bounds(&self, k: usize) -> (f64, f64) {
        if k == 0 {
            (0.0, self.s0)
        } else {
            let a = self.s0 * 2f64.powi(k as i32 - 1);
            (a, 2.0 * a)
        }
    }

    fn segment_index(&self, gamma: f64) -> usize {
        if gamma <= self.s0 {
            0
        } else {
            ((gamma / self.s0).log2().ceil() as usize).max(1)
        }
    }

    fn fit(&self, a: f64, b: f64) -> Result<Panel<N>> {
        let t = lobatto_nodes();
        let mut vals = [[0.0; DEGREE + 1]; N];
        for (j, tj) in t.iter().enumerate() {
            let x = 0.5 * (a + b) + 0.5 * (b - a) * tj;
            let y = (self.f)(x)?;
            for n in 0..N {
                vals[n][j] = y[n];
            }
        }
        let mut coeffs = [[0.0; DEGREE + 1]; N];
        let mut integral = [0.0; N];
        let mut err = [0.0; N];
        let half = 0.5 * (b - a);
        for n in 0..N {
            coeffs[n] = cheb_coeffs(&vals[n]);
            integral[n] = half * cheb_integral(&coeffs[n]);
            let tail: f64 = coeffs[n][DEGREE - 3..].iter().map(|c| c.abs()).sum();
            err[n] = half * 2.0 * tail;
        }
        Ok(Panel {
            a,
            b,
            coeffs,
            integral,
            err,
        })
    }

    fn panel_ok(&self, p: &Panel<N>) -> bool {
        (0..N).all(|n| {
            let scale = p.coeffs[n].iter().map(|c| c.abs()).sum::<f64>();
            let pointwise = p.err[n] / (p.b - p.a);
            pointwise <= self.tol.abs.max(self.tol.rel * scale)
        })
    }

    fn build_segment(&self, k: usize) -> Result<Segment<N>> {
        let (a, b) = self.bounds(k);
        let mut stack = vec![(a, b, 0u32)];
        let mut panels = Vec::new();
        while let Some((lo, hi, depth)) = stack.pop() {
            let p = self.fit(lo, hi)?;
            if self.panel_ok(&p) {
                panels.push(p);
            } else if depth >= MAX_DEPTH {
                return Err(Error::no_convergence(
                    "cumulative profile",
                    format!("integrand not resolved on [{lo:e}, {hi:e}]"),
                ));
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        let mut integral = [0.0; N];
        let mut err = [0.0; N];
        for p in &panels {
            for n in 0..N {
                integral[n] += p.integral[n];
                err[n] += p.err[n];
            }
        }
        Ok(Segment {
            panels,
            integral,
            err,
        })
    }

    fn segment(&self, k: usize) -> Result<&Segment<N>> {
        if k >= SEGMENTS {
            return Err(Error::InvalidParameter(format!(
                "profile argument beyond {:e}",
                self.bounds(SEGMENTS - 1).1
            )));
        }
        self.segments[k]
            .get_or_init(|| self.build_segment(k))
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Interpolated integrand at `gamma`.
    pub fn value(&self, gamma: f64) -> Result<[f64; N]> {
        let seg = self.segment(self.segment_index(gamma))?;
        let p = seg
            .panels
            .iter()
            .find(|p| gamma <= p.b)
            .unwrap_or_else(|| seg.panels.last().expect("segment has panels"));
        let t = ((2.0 * gamma - p.a - p.b) / (p.b - p.a)).clamp(-1.0, 1.0);
        let mut out = [0.0; N];
        for n in 0..N {
            out[n] = clenshaw(&p.coeffs[n], t);
        }
        Ok(out)
    }

    /// `(∫_0^γ f, error bound)` componentwise.
    pub fn integral(&self, gamma: f64) -> Result<([f64; N], [f64; N])> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "profile argument must be finite and nonnegative, got {gamma}"
            )));
        }
        let mut total = [0.0; N];
        let mut err = [0.0; N];
        if gamma == 0.0 {
            return Ok((total, err));
        }
        let kmax = self.segment_index(gamma);
        for k in 0..kmax {
            let s = self.segment(k)?;
            for n in 0..N {
                total[n] += s.integral[n];
                err[n] += s.err[n];
            }
        }
        let seg = self.segment(kmax)?;
        let (xg, wg) = gauss_legendre(DEGREE / 2 + 2);
        for p in &seg.panels {
            if p.b <= gamma {
                for n in 0..N {
                    total[n] += p.integral[n];
                    err[n] += p.err[n];
                }
                continue;
            }
            if p.a < gamma {
                let (lo, hi) = (p.a, gamma);
                let frac = (hi - lo) / (p.b - p.a);
                for n in 0..N {
                    let mut s = 0.0;
                    for (x, w) in xg.iter().zip(&wg) {
                        let g = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                        let t = (2.0 * g - p.a - p.b) / (p.b - p.a);
                        s += w * clenshaw(&p.coeffs[n], t);
                    }
                    total[n] += 0.5 * (hi - lo) * s;
                    err[n] += frac * p.err[n];
                }
            }
            break;
        }
        Ok((total, err))
    }

    /// Number of integrand evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.segments
            .iter()
            .filter_map(|s| s.get())
            .filter_map(|s| s.as_ref().ok())
            .map(|s| s.panels.len() * (DEGREE + 1))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance {
            abs: 1e-11,
            rel: 1e-10,
            max_panels: 4096,
        }
    }

    #[test]
    fn gaussian_mi_profile() {
        let p = CumulativeProfile::new(|t: f64| Ok([0.5 / (1.0 + t)]), 0.25, tol());
        for g in [0.0, 0.1, 1.0, 7.3, 1e3, 1e8] {
            let (v, e) = p.integral(g).unwrap();
            let exact = 0.5 * (1.0 + g).ln();
            assert!((v[0] - exact).abs() < 1e-8, "g={g}: {} vs {exact}", v[0]);
            assert!(e[0] < 1e-6);
        }
    }

    #[test]
    fn value_interpolates() {
        let p = CumulativeProfile::new(|t: f64| Ok([(-t).exp(), t.sin()]), 0.5, tol());
        for g in [0.01, 0.5, 0.77, 3.0, 20.0] {
            let v = p.value(g).unwrap();
            assert!((v[0] - (-g).exp()).abs() < 1e-9);
            assert!((v[1] - g.sin()).abs() < 1e-9);
        }
        let (v, _) = p.integral(3.0).unwrap();
        assert!((v[1] - (1.0 - 3f64.cos())).abs() < 1e-9);
    }

    #[test]
    fn propagates_errors() {
        let p = CumulativeProfile::new(
            |t: f64| {
                if t > 2.0 {
                    Err(Error::no_convergence("test", "boom"))
                } else {
                    Ok([t])
                }
            },
            1.0,
            tol(),
        );
        assert!(p.integral(1.5).is_ok());
        assert!(p.integral(3.0).is_err());
    }
}
