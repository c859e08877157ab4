//! Gaussian quadrature rules and globally adaptive Gauss-Kronrod integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

use super::{Estimate, NumericsConfig};

/// Gauss-Hermite rule for `∫ f(t) exp(-t²) dt`, nodes ascending.
///
/// Newton iteration on the orthonormal Hermite recurrence, seeded with the
/// usual asymptotic guesses for the largest roots.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 2, "Gauss-Hermite order must be >= 2");
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => {
                let s = (2 * n + 1) as f64;
                s.sqrt() - 1.85575 * s.powf(-1.0 / 6.0)
            }
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = 0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                converged += 1;
                // one polishing step after the fixed point is reached
                if converged == 2 {
                    break;
                }
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // roots were generated from the largest down
    x.reverse();
    w.reverse();
    (x, w)
}

/// Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be >= 1");
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel with the embedded 7-point Gauss estimate.
fn gk15<const N: usize, F>(f: &F, a: f64, b: f64) -> Result<([f64; N], [f64; N])>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let mut mag = [0.0; N];
    for n in 0..N {
        k[n] = WGK[7] * fc[n];
        g[n] = WG[3] * fc[n];
        mag[n] = WGK[7] * fc[n].abs();
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        for n in 0..N {
            let s = f1[n] + f2[n];
            k[n] += WGK[j] * s;
            mag[n] += WGK[j] * (f1[n].abs() + f2[n].abs());
            if j % 2 == 1 {
                g[n] += WG[j / 2] * s;
            }
        }
    }
    let mut val = [0.0; N];
    let mut err = [0.0; N];
    for n in 0..N {
        val[n] = k[n] * h;
        err[n] = ((k[n] - g[n]) * h).abs() + 50.0 * f64::EPSILON * mag[n] * h.abs();
        if !val[n].is_finite() {
            return Err(Error::no_convergence(
                "adaptive_integrate",
                format!("non-finite integrand on [{a}, {b}]"),
            ));
        }
    }
    Ok((val, err))
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    val: [f64; N],
    err: [f64; N],
    score: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Absolute and relative tolerance pair used by the adaptive integrators.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl From<&NumericsConfig> for Tolerance {
    fn from(cfg: &NumericsConfig) -> Self {
        Tolerance {
            abs: cfg.abs_tol,
            rel: cfg.rel_tol,
            max_panels: cfg.max_panels,
        }
    }
}

/// Vector-valued global adaptive Gauss-Kronrod integration.
///
/// `breaks` must be sorted and hold at least two points; every interval
/// between consecutive breaks starts as its own panel. All channels share
/// the panel tree and each must meet its own tolerance.
pub fn integrate_vec<const N: usize, F>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<([f64; N], [f64; N])>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut total = [0.0; N];
    let mut total_err = [0.0; N];
    let score = |err: &[f64; N], totals: &[f64; N]| -> f64 {
        (0..N).fold(0.0f64, |s, n| {
            s.max(err[n] / tol.target(totals[n]).max(f64::MIN_POSITIVE))
        })
    };
    let mut panels = Vec::new();
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (val, err) = gk15(&f, w[0], w[1])?;
        for n in 0..N {
            total[n] += val[n];
            total_err[n] += err[n];
        }
        panels.push((w[0], w[1], val, err));
    }
    let mut rescored: BinaryHeap<Panel<N>> = panels
        .into_iter()
        .map(|(a, b, val, err)| Panel {
            a,
            b,
            val,
            err,
            score: score(&err, &total),
        })
        .collect();
    let done = |total: &[f64; N], total_err: &[f64; N]| {
        (0..N).all(|n| total_err[n] <= tol.target(total[n]))
    };
    while !done(&total, &total_err) {
        if rescored.len() >= tol.max_panels {
            return Err(Error::no_convergence(
                "adaptive_integrate",
                format!(
                    "{} panels used, error {:e} above tolerance {:e}",
                    rescored.len(),
                    total_err.iter().cloned().fold(0.0, f64::max),
                    tol.target(total[0])
                ),
            ));
        }
        let worst = rescored.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::no_convergence(
                "adaptive_integrate",
                format!("panel [{}, {}] cannot be split further", worst.a, worst.b),
            ));
        }
        let (v1, e1) = gk15(&f, worst.a, mid)?;
        let (v2, e2) = gk15(&f, mid, worst.b)?;
        for n in 0..N {
            total[n] += v1[n] + v2[n] - worst.val[n];
            total_err[n] += e1[n] + e2[n] - worst.err[n];
        }
        for (a, b, val, err) in [(worst.a, mid, v1, e1), (mid, worst.b, v2, e2)] {
            let s = score(&err, &total);
            rescored.push(Panel {
                a,
                b,
                val,
                err,
                score: s,
            });
        }
    }
    // re-sum to shed accumulated rounding from the running updates
    let mut val = [0.0; N];
    let mut err = [0.0; N];
    let mut all: Vec<_> = rescored.into_vec();
    all.sort_by(|p, q| p.a.total_cmp(&q.a));
    for p in &all {
        for n in 0..N {
            val[n] += p.val[n];
            err[n] += p.err[n];
        }
    }
    Ok((val, err))
}

/// Adaptive integration of a scalar function over `[lo, hi]`.
pub fn adaptive_integrate<F>(f: F, lo: f64, hi: f64, cfg: &NumericsConfig) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let (v, e) = integrate_vec(|x| Ok([f(x)]), &[lo, hi], cfg.into())?;
    Ok(Estimate::quadrature(v[0], e[0]))
}

/// Fallible variant of [`adaptive_integrate`] for integrands that may fail.
pub fn adaptive_integrate_with<F>(
    f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let (v, e) = integrate_vec(|x| f(x).map(|y| [y]), breaks, tol)?;
    Ok(Estimate::quadrature(v[0], e[0]))
}

/// Fixed composite Gauss-Legendre rule: `panels` equal panels, `per_panel`
/// nodes each, returned as `(nodes, weights)` on `[lo, hi]`.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(per_panel);
    let h = (hi - lo) / panels as f64;
    let mut xs = Vec::with_capacity(panels * per_panel);
    let mut ws = Vec::with_capacity(panels * per_panel);
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (ti, wi) in t.iter().zip(&w) {
            xs.push(a + 0.5 * h * (ti + 1.0));
            ws.push(0.5 * h * wi);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_two_point_rule() {
        let (x, w) = gauss_hermite(2);
        assert!((x[0] + 0.5f64.sqrt()).abs() < 1e-15);
        assert!((x[1] - 0.5f64.sqrt()).abs() < 1e-15);
        for wi in w {
            assert!((wi - PI.sqrt() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_64_moments() {
        let (x, w) = gauss_hermite(64);
        let sum: f64 = w.iter().sum();
        assert!((sum - PI.sqrt()).abs() < 1e-12);
        assert!(w.iter().all(|&wi| wi > 0.0));
        for i in 0..32 {
            assert!((x[i] + x[63 - i]).abs() < 1e-13);
        }
        let m2: f64 = x.iter().zip(&w).map(|(t, wi)| t * t * wi).sum();
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
        // E[T^4] under N(0,1) via t = sqrt(2) s
        let m4: f64 = x
            .iter()
            .zip(&w)
            .map(|(s, wi)| (2f64.sqrt() * s).powi(4) * wi)
            .sum::<f64>()
            / PI.sqrt();
        assert!((m4 - 3.0).abs() < 1e-10);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(32);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(t, wi)| t.powi(10) * wi).sum();
        assert!((i - 2.0 / 11.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn integrates_linear_function() {
        let cfg = NumericsConfig::default();
        let e = adaptive_integrate(|x| x, 0.0, 1.0, &cfg).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_immse_integrand() {
        let cfg = NumericsConfig::default();
        let e = adaptive_integrate(|t| 0.5 / (1.0 + t), 0.0, 1.0, &cfg).unwrap();
        assert!((e.value - 0.5 * 2f64.ln()).abs() < 1e-10);
        assert!((e.value - 0.34657).abs() < 1e-5);
    }

    #[test]
    fn kinked_integrand_has_honest_error() {
        // |x - 1/3| + sqrt|x - 0.7| on [0,1]
        let f = |x: f64| (x - 1.0 / 3.0).abs() + (x - 0.7f64).abs().sqrt();
        let truth = {
            let a: f64 = 1.0 / 3.0;
            let part1 = a * a / 2.0 + (1.0 - a) * (1.0 - a) / 2.0;
            let part2 = (2.0 / 3.0) * (0.7f64.powf(1.5) + 0.3f64.powf(1.5));
            part1 + part2
        };
        for tol in [1e-4, 1e-6, 1e-8] {
            let cfg = NumericsConfig {
                abs_tol: tol,
                rel_tol: 1e-14,
                ..NumericsConfig::default()
            };
            let e = adaptive_integrate(f, 0.0, 1.0, &cfg).unwrap();
            assert!(e.err >= (e.value - truth).abs(), "tol {tol}: err {} actual {}", e.err, (e.value - truth).abs());
            assert!((e.value - truth).abs() <= tol);
        }
    }

    #[test]
    fn impossible_tolerance_reports_no_convergence() {
        let cfg = NumericsConfig {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_panels: 64,
            ..NumericsConfig::default()
        };
        let r = adaptive_integrate(|x| (x - 0.5f64).abs().sqrt(), 0.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
