//! Standard-normal special functions and truncated-normal moments.
//!
//! Everything here is written to stay finite far out in the tails, since the
//! posterior kernels evaluate truncated Gaussians whose bounds can sit tens of
//! standard deviations away from the mode.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use super::quadrature::gauss_legendre;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

#[inline]
pub fn ln_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Log-density of `N(mean, var)` at `x`.
#[inline]
pub fn ln_gauss(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * d * d / var - 0.5 * var.ln() - LN_SQRT_2PI
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        if x < -26.0 {
            return f64::INFINITY;
        }
        return 2.0 * exp_sq(x) - erfcx(-x);
    }
    if x < 25.0 {
        exp_sq(x) * libm::erfc(x)
    } else {
        // asymptotic series, terms shrink by (2k-1)/(2x^2) <= 1/1250
        let inv = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            term *= -((2 * k - 1) as f64) * inv;
            sum += term;
        }
        sum / (x * PI.sqrt())
    }
}

/// `exp(x²)` with the square split so the rounding of `x*x` does not leak
/// into the exponent.
fn exp_sq(x: f64) -> f64 {
    let hi = f64::from_bits(x.to_bits() & 0xFFFF_FFFF_F800_0000);
    let lo = x - hi;
    (hi * hi).exp() * (lo * (2.0 * hi + lo)).exp()
}

/// Moments of a standard normal restricted to `[alpha, beta]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncMoments {
    /// `ln P(alpha < U < beta)`.
    pub ln_mass: f64,
    pub mean: f64,
    pub var: f64,
    /// Third central moment.
    pub skew: f64,
}

const NARROW: f64 = 0.05;

/// Truncated standard-normal mass, mean and variance on `[alpha, beta]`.
///
/// Either bound may be infinite. Far-tail intervals are handled through
/// `erfcx`, narrow intervals through a local Gauss-Legendre rule.
pub fn trunc_std_normal(alpha: f64, beta: f64) -> TruncMoments {
    debug_assert!(alpha < beta, "empty interval [{alpha}, {beta}]");
    if beta - alpha < NARROW {
        return narrow_interval(alpha, beta);
    }
    if alpha >= 0.0 {
        upper_tail(alpha, beta)
    } else if beta <= 0.0 {
        let t = upper_tail(-beta, -alpha);
        TruncMoments {
            mean: -t.mean,
            skew: -t.skew,
            ..t
        }
    } else {
        let mass = 1.0 - norm_sf(beta) - norm_sf(-alpha);
        let (pa, apa) = if alpha.is_finite() {
            let p = norm_pdf(alpha);
            (p, alpha * p)
        } else {
            (0.0, 0.0)
        };
        let (pb, bpb) = if beta.is_finite() {
            let p = norm_pdf(beta);
            (p, beta * p)
        } else {
            (0.0, 0.0)
        };
        let mean = (pa - pb) / mass;
        let second = 1.0 + (apa - bpb) / mass;
        let var = (second - mean * mean).max(0.0);
        let da = if alpha.is_finite() { alpha - mean } else { 0.0 };
        let db = if beta.is_finite() { beta - mean } else { 0.0 };
        TruncMoments {
            ln_mass: mass.ln(),
            mean,
            var,
            skew: (da * da * pa - db * db * pb) / mass - mean * var,
        }
    }
}

const FAR: f64 = 8.0;

fn upper_tail(alpha: f64, beta: f64) -> TruncMoments {
    if alpha >= FAR {
        return far_tail(alpha, beta);
    }
    let ea = erfcx(alpha * FRAC_1_SQRT_2);
    let (ratio, eb) = if beta.is_finite() {
        (
            (-0.5 * (beta - alpha) * (beta + alpha)).exp(),
            erfcx(beta * FRAC_1_SQRT_2),
        )
    } else {
        (0.0, 0.0)
    };
    let d = ea - ratio * eb;
    let ka = 2.0 / (SQRT_2PI * d);
    let kb = ratio * ka;
    let mean = ka - kb;
    let bkb = if beta.is_finite() { beta * kb } else { 0.0 };
    let second = 1.0 + alpha * ka - bkb;
    let var = (second - mean * mean).max(0.0);
    let da = alpha - mean;
    let tail_b = if beta.is_finite() {
        (beta - mean) * (beta - mean) * kb
    } else {
        0.0
    };
    TruncMoments {
        ln_mass: -0.5 * alpha * alpha + (0.5 * d).ln(),
        mean,
        var,
        skew: da * da * ka - tail_b - mean * var,
    }
}

/// Far upper tail in the scaled offset `u = alpha·(t - alpha)`, whose density
/// is `exp(-u - u²/(2 alpha²))`; avoids the cancellation in `E[t²] - E[t]²`.
fn far_tail(alpha: f64, beta: f64) -> TruncMoments {
    const EDGES: [f64; 5] = [0.0, 5.0, 12.0, 25.0, 50.0];
    let (nodes, weights) = gl16();
    let umax = if beta.is_finite() {
        (alpha * (beta - alpha)).min(EDGES[4])
    } else {
        EDGES[4]
    };
    let a2 = alpha * alpha;
    let mut m = [0.0f64; 4];
    for pair in EDGES.windows(2) {
        let (lo, hi) = (pair[0], pair[1].min(umax));
        if hi <= lo {
            break;
        }
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (t, w) in nodes.iter().zip(weights) {
            let u = c + h * t;
            let e = h * w * (-u - 0.5 * u * u / a2).exp();
            m[0] += e;
            m[1] += e * u;
            m[2] += e * u * u;
            m[3] += e * u * u * u;
        }
    }
    let eu = m[1] / m[0];
    let vu = m[2] / m[0] - eu * eu;
    let su = m[3] / m[0] - 3.0 * eu * m[2] / m[0] + 2.0 * eu * eu * eu;
    TruncMoments {
        ln_mass: -0.5 * a2 - LN_SQRT_2PI - alpha.ln() + m[0].ln(),
        mean: alpha + eu / alpha,
        var: vu / a2,
        skew: su / (a2 * alpha),
    }
}

fn gl16() -> (&'static [f64], &'static [f64]) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let r = RULE.get_or_init(|| gauss_legendre(16));
    (&r.0, &r.1)
}

fn gl12() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(12))
}

fn narrow_interval(alpha: f64, beta: f64) -> TruncMoments {
    let (nodes, weights) = gl12();
    let mid = 0.5 * (alpha + beta);
    let half = 0.5 * (beta - alpha);
    // reference point closest to the mode keeps the exponentials <= 1
    let anchor = if alpha > 0.0 {
        alpha
    } else if beta < 0.0 {
        beta
    } else {
        0.0
    };
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    for (t, w) in nodes.iter().zip(weights) {
        let u = mid + half * t;
        let e = w * (-0.5 * (u - anchor) * (u + anchor)).exp();
        m0 += e;
        m1 += e * (u - mid);
    }
    let shift = m1 / m0;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for (t, w) in nodes.iter().zip(weights) {
        let u = mid + half * t;
        let e = w * (-0.5 * (u - anchor) * (u + anchor)).exp();
        let d = u - mid - shift;
        m2 += e * d * d;
        m3 += e * d * d * d;
    }
    TruncMoments {
        ln_mass: (m0 * half).ln() - 0.5 * anchor * anchor - LN_SQRT_2PI,
        mean: mid + shift,
        var: m2 / m0,
        skew: m3 / m0,
    }
}

/// `ln(exp(a) + exp(b))`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Standard normal quantile (Acklam's rational approximation refined by one
/// Halley step against `norm_cdf`).
pub fn norm_quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let plow = 0.02425;
    let x = if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = if x < 0.0 {
        norm_cdf(x) - p
    } else {
        (1.0 - p) - norm_sf(x)
    };
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}
