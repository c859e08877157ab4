use crate::error::{Error, Result};

use super::NumericsConfig;

/// Largest argument the bracket may grow to before giving up.
pub const GAMMA_CAP: f64 = 1e12;

/// Solves `f(x) = target` for an increasing `f` on `[0, ∞)`.
///
/// The upper end of the bracket starts at `lo_hint` (or 1 when the hint is not
/// positive) and doubles until `f` reaches the target; the bracket is then
/// bisected until `|f(x) - target| <= cfg.abs_tol` or it collapses to
/// floating-point resolution.
pub fn bisect_monotone<F>(mut f: F, target: f64, lo_hint: f64, cfg: &NumericsConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(0.0)?;
    if (f0 - target).abs() <= cfg.abs_tol {
        return Ok(0.0);
    }
    if f0 > target {
        return Err(Error::InvalidParameter(format!(
            "bisect_monotone: f(0) = {f0} already exceeds target {target}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = if lo_hint > 0.0 { lo_hint } else { 1.0 };
    loop {
        let fh = f(hi)?;
        if (fh - target).abs() <= cfg.abs_tol {
            return Ok(hi);
        }
        if fh > target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > GAMMA_CAP {
            return Err(Error::TargetUnreachable {
                target,
                cap: GAMMA_CAP,
            });
        }
    }
    bisect_bracket(f, target, lo, hi, cfg)
}

/// Bisection on a bracket `[lo, hi]` with `f(lo) <= target <= f(hi)`.
pub fn bisect_bracket<F>(mut f: F, target: f64, mut lo: f64, mut hi: f64, cfg: &NumericsConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if (fm - target).abs() <= cfg.abs_tol {
            return Ok(mid);
        }
        if fm < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_function() {
        let cfg = NumericsConfig::default();
        let x = bisect_monotone(Ok, 3.0, 1.0, &cfg).unwrap();
        assert!((x - 3.0).abs() <= cfg.abs_tol);
    }

    #[test]
    fn gaussian_privacy_level_root() {
        // I(X;Z_gamma) for unit-variance Gaussians, rho = 0.5, in nats
        let rho2 = 0.25;
        let f = |g: f64| Ok(0.5 * ((1.0 + g) / (1.0 + g - g * rho2)).ln());
        let target = 0.1 * std::f64::consts::LN_2;
        let cfg = NumericsConfig::default();
        let g = bisect_monotone(f, target, 1.0, &cfg).unwrap();
        let p = 2f64.powf(-0.2);
        let exact = (1.0 - p) / (p + rho2 - 1.0);
        assert!((g - exact).abs() < 1e-4, "{g} vs {exact}");
        assert!((g - 1.0738).abs() < 1e-4);
    }

    #[test]
    fn saturating_function_is_unreachable() {
        let cfg = NumericsConfig::default();
        let r = bisect_monotone(|g| Ok(g / (1.0 + g)), 1.1, 1.0, &cfg);
        assert!(matches!(r, Err(Error::TargetUnreachable { .. })));
    }

    proptest! {
        #[test]
        fn composes_to_identity(a in 0.1f64..5.0, b in 0.0f64..3.0, p in 0.5f64..3.0, t in 0.01f64..50.0) {
            let cfg = NumericsConfig::default();
            let f = |x: f64| a * x.powf(p) + b * x;
            let x = bisect_monotone(|x| Ok(f(x)), t, 0.5, &cfg).unwrap();
            prop_assert!((f(x) - t).abs() <= cfg.abs_tol * 1.0001);
        }
    }
}
