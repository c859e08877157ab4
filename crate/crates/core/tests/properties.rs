//! Randomized invariants of the numerical pipeline.

use privfilter::estimators::{
    cond_output_entropy, eta_sq, maximal_correlation_xy, mmse_y_x, output_entropy, Context,
};
use privfilter::models::{JointModel, ScalarDist};
use privfilter::numerics::{adaptive_integrate, bisect_monotone, NumericsConfig};
use privfilter::tradeoff::{Analysis, Units};
use proptest::prelude::*;

const HALF_LN_2PIE: f64 = 1.418_938_533_204_672_7;

fn cfg() -> NumericsConfig {
    NumericsConfig::default()
}

fn dist() -> impl Strategy<Value = ScalarDist> {
    prop_oneof![
        (-1.0..1.0f64, 0.3..3.0f64).prop_map(|(m, v)| ScalarDist::gaussian(m, v).unwrap()),
        (-2.0..0.0f64, 0.5..3.0f64).prop_map(|(lo, w)| ScalarDist::uniform(lo, lo + w).unwrap()),
        (0.3..2.0f64).prop_map(|h| ScalarDist::grid(vec![-h, 0.0, h], vec![0.0, 1.0 / h, 0.0]).unwrap()),
    ]
}

fn gaussian_model() -> impl Strategy<Value = JointModel> {
    (0.1..0.9f64, any::<bool>(), 0.3..3.0f64, 0.3..3.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(
        |(r, neg, vx, vy, mx, my)| {
            let rho = if neg { -r } else { r };
            format!("kind=gaussian rho={rho} var_x={vx} var_y={vy} mean_x={mx} mean_y={my}")
                .parse()
                .unwrap()
        },
    )
}

fn additive_model() -> impl Strategy<Value = JointModel> {
    (dist(), 0.3..2.0f64, any::<bool>(), dist())
        .prop_map(|(x, a, neg, m)| JointModel::additive(x, if neg { -a } else { a }, m).unwrap())
}

fn clipped_model() -> impl Strategy<Value = JointModel> {
    (0.3..2.0f64, 0.5..2.0f64)
        .prop_map(|(l, v)| JointModel::clipped(ScalarDist::gaussian(0.0, v).unwrap(), l).unwrap())
}

fn any_model() -> impl Strategy<Value = JointModel> {
    prop_oneof![gaussian_model(), additive_model(), clipped_model()]
}

fn is_clipped(m: &JointModel) -> bool {
    matches!(m, JointModel::Clipped { .. })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn i_mmse_for_y(model in any_model(), gamma in 0.05..20.0f64) {
        let c = cfg();
        let ctx = Context::new(&model, &c).unwrap();
        let h = 1e-3 * gamma;
        let up = output_entropy(ctx.y_law(), gamma + h, &c).unwrap();
        let dn = output_entropy(ctx.y_law(), gamma - h, &c).unwrap();
        let fd = (up.value - dn.value) / (2.0 * h);
        let m = ctx.mmse_pair(gamma).unwrap().mmse_y_z;
        let err = (up.err + dn.err) / (2.0 * h) + m.err;
        let tol = (1e-4f64).max(10.0 * err);
        prop_assert!((fd - 0.5 * m.value).abs() <= tol, "{model} γ={gamma}: {fd} vs {}", 0.5 * m.value);
    }

    #[test]
    fn i_mmse_for_x(model in any_model(), gamma in 0.05..20.0f64) {
        let c = cfg();
        let ctx = Context::new(&model, &c).unwrap();
        let h = 1e-3 * gamma;
        let (fd, fd_err) = if is_clipped(&model) {
            let up = ctx.info(gamma + h).unwrap().mi_x_z;
            let dn = ctx.info(gamma - h).unwrap().mi_x_z;
            ((up.value - dn.value) / (2.0 * h), (up.err + dn.err) / (2.0 * h))
        } else {
            let mi = |g: f64| {
                let hz = output_entropy(ctx.y_law(), g, &c).unwrap();
                let hzx = cond_output_entropy(&model, g, &c).unwrap();
                (hz.value - hzx.value, hz.err + hzx.err)
            };
            let (up, e1) = mi(gamma + h);
            let (dn, e2) = mi(gamma - h);
            ((up - dn) / (2.0 * h), (e1 + e2) / (2.0 * h))
        };
        let p = ctx.mmse_pair(gamma).unwrap();
        let want = 0.5 * (p.mmse_y_z.value - p.mmse_y_zx.value);
        let tol = (1e-4f64).max(10.0 * (fd_err + p.mmse_y_z.err + p.mmse_y_zx.err));
        prop_assert!((fd - want).abs() <= tol, "{model} γ={gamma}: {fd} vs {want}");
    }

    #[test]
    fn second_derivative_identity(model in any_model(), gamma in 0.05..20.0f64) {
        let ctx = Context::new(&model, &cfg()).unwrap();
        let h = 1e-3 * gamma;
        let (up, dn, mid) = (
            ctx.mmse_pair(gamma + h).unwrap(),
            ctx.mmse_pair(gamma - h).unwrap(),
            ctx.mmse_pair(gamma).unwrap(),
        );
        let fd_zx = (up.mmse_y_zx.value - dn.mmse_y_zx.value) / (2.0 * h);
        let fd_z = (up.mmse_y_z.value - dn.mmse_y_z.value) / (2.0 * h);
        // central difference truncation is O(h²·|mmse'''|) with mmse''' ≲ 6 var³
        let var_y = ctx.moments().var_y;
        let trunc = h * h * var_y.powi(4);
        let tol_zx = (1e-4f64).max(10.0 * ((up.mmse_y_zx.err + dn.mmse_y_zx.err) / (2.0 * h) + mid.var2_y_zx.err)) + trunc;
        let tol_z = (1e-4f64).max(10.0 * ((up.mmse_y_z.err + dn.mmse_y_z.err) / (2.0 * h) + mid.var2_y_z.err)) + trunc;
        prop_assert!((fd_zx + mid.var2_y_zx.value).abs() <= tol_zx, "{model} γ={gamma}: {fd_zx} vs {}", -mid.var2_y_zx.value);
        prop_assert!((fd_z + mid.var2_y_z.value).abs() <= tol_z, "{model} γ={gamma}: {fd_z} vs {}", -mid.var2_y_z.value);
    }

    #[test]
    fn gaussian_is_hardest(model in any_model(), gamma in 0.01..100.0f64) {
        let ctx = Context::new(&model, &cfg()).unwrap();
        let v = ctx.moments().var_y;
        let m = ctx.mmse_pair(gamma).unwrap();
        prop_assert!(m.mmse_y_z.value <= v / (1.0 + gamma * v) + m.mmse_y_z.err + 1e-12);
        prop_assert!(m.mmse_y_zx.value <= m.mmse_y_z.value + m.mmse_y_zx.err + m.mmse_y_z.err + 1e-12);
    }

    #[test]
    fn shift_identity(r in 0.05..0.95f64, vy in 0.3..3.0f64, gamma in 0.0..10.0f64) {
        let model: JointModel = format!("kind=gaussian rho={r} var_y={vy}").parse().unwrap();
        let ctx = Context::new(&model, &cfg()).unwrap();
        // conditioning on X scales the prior variance by 1 − ρ², which for
        // unit variance is an SNR shift of ρ²/(1 − ρ²); here in general form
        let c = (1.0 - r * r) * vy;
        let shifted = gamma + (vy - c) / (c * vy);
        let a = ctx.mmse_pair(gamma).unwrap().mmse_y_zx.value;
        let b = ctx.mmse_pair(shifted).unwrap().mmse_y_z.value;
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn correlation_ordering(model in any_model()) {
        let c = cfg();
        let mom = model.moments().unwrap();
        let eta = eta_sq(&model, &c).unwrap();
        let pair = maximal_correlation_xy(&model, &c).unwrap();
        prop_assert!(mom.corr * mom.corr <= eta.value + eta.err + 1e-12);
        prop_assert!(eta.value <= pair.rho_m2.value + pair.rho_m2.err + eta.err + 1e-9, "{model}: {eta:?} {pair:?}");
    }

    #[test]
    fn law_of_total_variance(model in any_model()) {
        let c = cfg();
        let v = model.moments().unwrap().var_y;
        let m = mmse_y_x(&model, &c).unwrap();
        let e = eta_sq(&model, &c).unwrap();
        prop_assert!((m.value - v * (1.0 - e.value)).abs() <= 1e-10 + m.err + v * e.err);
    }

    #[test]
    fn clipped_regression_is_identity(model in clipped_model()) {
        // E[Y|X] = X, so η² is var X / var Y
        let c = cfg();
        let mom = model.moments().unwrap();
        let e = eta_sq(&model, &c).unwrap();
        prop_assert!((e.value - mom.var_x / mom.var_y).abs() <= 1e-10 + e.err);
    }

    #[test]
    fn informations_increase_in_gamma(model in any_model()) {
        let ctx = Context::new(&model, &cfg()).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| 10f64.powf(-2.0 + k as f64 / 5.0)).collect();
        let pts: Vec<_> = grid.iter().map(|g| ctx.info(*g).unwrap()).collect();
        for w in pts.windows(2) {
            prop_assert!(w[1].mi_y_z.value > w[0].mi_y_z.value, "{model} at γ={}", w[1].gamma);
            prop_assert!(w[1].mi_x_z.value > w[0].mi_x_z.value, "{model} at γ={}", w[1].gamma);
        }
    }

    #[test]
    fn sampler_moments(model in any_model(), seed in any::<u64>()) {
        let mom = model.moments().unwrap();
        for n in [10_000usize, 1_000_000] {
            let s = model.sample(n, seed);
            let nf = n as f64;
            let my = s.iter().map(|p| p.1).sum::<f64>() / nf;
            let mx = s.iter().map(|p| p.0).sum::<f64>() / nf;
            let vy = s.iter().map(|p| (p.1 - mom.mean_y).powi(2)).sum::<f64>() / nf;
            let four = s.iter().map(|p| (p.1 - mom.mean_y).powi(4)).sum::<f64>() / nf;
            prop_assert!((my - mom.mean_y).abs() <= 5.0 * (mom.var_y / nf).sqrt());
            prop_assert!((mx - mom.mean_x).abs() <= 5.0 * (mom.var_x / nf).sqrt());
            let sd_v = ((four - vy * vy).max(0.0) / nf).sqrt();
            prop_assert!((vy - mom.var_y).abs() <= 5.0 * sd_v + 1e-12, "n={n}: {vy} vs {}", mom.var_y);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn curve_shape(model in prop_oneof![gaussian_model(), additive_model(), clipped_model()]) {
        let an = Analysis::new(&model, &cfg()).unwrap();
        let top = (0.8 * an.mutual_information().unwrap().value).min(1.0);
        let levels: Vec<f64> = (0..=6).map(|k| top * k as f64 / 6.0).collect();
        let pts: Vec<_> = an.curve(&levels, Units::Nats).into_iter().map(|p| p.unwrap()).collect();
        prop_assert_eq!(pts[0].g_eps.value, 0.0);
        for w in pts.windows(2) {
            let tol = w[0].g_eps.err + w[1].g_eps.err;
            prop_assert!(w[1].g_eps.value >= w[0].g_eps.value - tol);
            prop_assert!(w[1].gamma_eps > w[0].gamma_eps);
        }
        for p in &pts {
            prop_assert!(p.lower_epi <= p.g_eps.value + p.g_eps.err + 1e-12);
            prop_assert!(p.g_eps.value <= p.upper_epi + p.g_eps.err + 1e-12);
            if let Some(lb) = p.sdpi_lower {
                prop_assert!(p.g_eps.value >= lb - p.g_eps.err, "{model}: {p:?}");
            }
        }
    }

    #[test]
    fn convex_when_signal_dominates(x in dist(), a in 1.0..2.0f64, nv in 0.2..1.0f64) {
        let noise = ScalarDist::gaussian(0.0, nv * a * a * x.var()).unwrap();
        let model = JointModel::additive(x, a, noise).unwrap();
        let an = Analysis::new(&model, &cfg()).unwrap();
        let top = 0.8 * an.mutual_information().unwrap().value;
        let levels: Vec<f64> = (0..=8).map(|k| top * k as f64 / 8.0).collect();
        let pts: Vec<_> = an.curve(&levels, Units::Nats).into_iter().map(|p| p.unwrap()).collect();
        for w in pts.windows(3) {
            let tol = 2.0 * (w[0].g_eps.err + 2.0 * w[1].g_eps.err + w[2].g_eps.err);
            prop_assert!(w[2].g_eps.value - 2.0 * w[1].g_eps.value + w[0].g_eps.value >= -tol);
        }
    }

    #[test]
    fn gaussian_y_domination(l in 0.3..2.0f64, frac in 0.1..0.8f64) {
        // clipped pairs have Gaussian Y; the jointly Gaussian surrogate with the
        // same correlation releases at least as much about Y
        let c = cfg();
        let model = JointModel::clipped(ScalarDist::standard_gaussian(), l).unwrap();
        let mom = model.moments().unwrap();
        let sur = JointModel::gaussian(mom.corr, mom.var_x, mom.var_y).unwrap();
        let (a, b) = (Analysis::new(&model, &c).unwrap(), Analysis::new(&sur, &c).unwrap());
        let eps = frac * b.mutual_information().unwrap().value;
        let (p, q) = (a.g_eps(eps).unwrap(), b.g_eps(eps).unwrap());
        prop_assert!(p.g_eps.value <= q.g_eps.value + p.g_eps.err + q.g_eps.err, "{p:?} {q:?}");
    }

    #[test]
    fn gaussian_rate_distortion_identity(r in 0.2..0.95f64, frac in 0.05..0.9f64) {
        let c = NumericsConfig { abs_tol: 1e-11, rel_tol: 1e-9, ..cfg() };
        let model = JointModel::gaussian(r, 1.0, 1.0).unwrap();
        let an = Analysis::new(&model, &c).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let i_bits = an.mutual_information().unwrap().value / ln2;
        let eps_bits = frac * i_bits;
        let g_bits = an.g_eps(eps_bits * ln2).unwrap().g_eps.value / ln2;
        let d = ((-2.0 * eps_bits).exp2() - (-2.0 * i_bits).exp2()) / (r * r);
        let rate = 0.5 * (1.0 / d).log2();
        prop_assert!((g_bits - rate).abs() <= 1e-9, "{g_bits} vs {rate}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bisection_inverts_monotone_functions(
        a in 0.1..10.0f64, p in 0.5..3.0f64, b in -1.0..1.0f64, frac in 0.01..0.99f64, hint in 0.01..100.0f64,
    ) {
        // f(x) = b + a·x^p/(1 + x^p) rises from b towards b + a
        let f = |x: f64| b + a * x.powf(p) / (1.0 + x.powf(p));
        let target = b + frac * a;
        let c = cfg();
        let x = bisect_monotone(|x| Ok(f(x)), target, hint, &c).unwrap();
        prop_assert!((f(x) - target).abs() <= c.abs_tol, "f({x}) = {} vs {target}", f(x));
    }

    #[test]
    fn integration_is_linear(
        c1 in -3.0..3.0f64, c2 in -3.0..3.0f64, k in 0.1..5.0f64, lo in -3.0..0.0f64, w in 0.1..5.0f64,
    ) {
        let cf = cfg();
        let f = |x: f64| (k * x).sin();
        let g = |x: f64| (-x * x).exp();
        let hi = lo + w;
        let sum = adaptive_integrate(|x| c1 * f(x) + c2 * g(x), lo, hi, &cf).unwrap();
        let a = adaptive_integrate(f, lo, hi, &cf).unwrap();
        let b = adaptive_integrate(g, lo, hi, &cf).unwrap();
        let parts = c1 * a.value + c2 * b.value;
        let tol = 2.0 * cf.abs_tol.max(cf.rel_tol * parts.abs());
        prop_assert!((sum.value - parts).abs() <= tol, "{} vs {parts}", sum.value);
    }
}

#[test]
fn output_entropy_of_gaussian_prior() {
    // √γ·Y + N with Y ~ N(0, v) is N(0, 1 + γv)
    let law = ScalarDist::gaussian(0.0, 2.0).unwrap().law();
    let h = output_entropy(&law, 3.0, &cfg()).unwrap();
    assert!((h.value - (HALF_LN_2PIE + 0.5 * 7f64.ln())).abs() < 1e-9);
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let model: JointModel = "kind=additive a=1 x=gaussian:0,1 noise=uniform:-1.7320508075688772,1.7320508075688772"
        .parse()
        .unwrap();
    let levels = [0.05, 0.1, 0.2, 0.3];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let an = Analysis::new(&model, &cfg()).unwrap();
            let pts: Vec<_> = an.curve(&levels, Units::Nats).into_iter().map(|p| p.unwrap()).collect();
            let mc = model.sample(50_000, 7);
            (pts, mc)
        })
    };
    assert_eq!(run(1), run(4));
}
