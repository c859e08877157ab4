//! One-sided and full maximal correlations and the Taylor coefficient `Δ`.

use crate::error::{Error, Result};
use crate::models::{Component, JointModel, Law, ScalarDist};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::{Estimate, NumericsConfig};

use super::mmse::check_gamma;

/// Largest number of `x` nodes in a maximal-correlation discretization.
const MAX_X_NODES: usize = 384;
/// Largest number of `z` nodes in a maximal-correlation discretization.
const MAX_Z_NODES: usize = 768;
/// Number of `y` cells used for `ρ_m²(X,Y)` of additive models.
const Y_CELLS: usize = 512;
/// Largest Krylov dimension of a maximal-correlation solve.
const MAX_LANCZOS: usize = 300;

/// `E var(Y|X)`, `E var²(Y|X)` and `var(E[Y|X])` by quadrature over `P_X`.
fn cond_var_moments(model: &JointModel, hermite: usize, legendre: usize) -> Result<[f64; 3]> {
    let nodes = model.x_law()?.nodes(hermite, legendre);
    let mut rows = Vec::with_capacity(nodes.len());
    for (x, w) in nodes {
        if w == 0.0 {
            continue;
        }
        let law = model.cond_density_y_given_x(x)?;
        rows.push((w, law.mean(), law.var()));
    }
    let total: f64 = rows.iter().map(|r| r.0).sum();
    let mean: f64 = rows.iter().map(|r| r.0 * r.1).sum::<f64>() / total;
    let mut out = [0.0; 3];
    for (w, m, v) in rows {
        out[0] += w * v;
        out[1] += w * v * v;
        out[2] += w * (m - mean) * (m - mean);
    }
    Ok(out.map(|s| s / total))
}

/// Quadrature at the configured orders, with the error taken from a rerun at
/// half the orders.
fn cond_var_estimates(model: &JointModel, cfg: &NumericsConfig) -> Result<[Estimate; 3]> {
    let hi = cond_var_moments(model, cfg.hermite_order, cfg.legendre_order)?;
    let lo = cond_var_moments(model, (cfg.hermite_order / 2).max(2), (cfg.legendre_order / 2).max(2))?;
    Ok([0, 1, 2].map(|k| Estimate::quadrature(hi[k], (hi[k] - lo[k]).abs())))
}

/// `mmse(Y|X) = E var(Y|X)`.
pub fn mmse_y_x(model: &JointModel, cfg: &NumericsConfig) -> Result<Estimate> {
    if let JointModel::BivariateGaussian { var_y, rho, .. } = model {
        return Ok(Estimate::closed_form((1.0 - rho * rho) * var_y));
    }
    Ok(cond_var_estimates(model, cfg)?[0])
}

/// `E[var²(Y|X)]`.
pub fn e_var2_y_x(model: &JointModel, cfg: &NumericsConfig) -> Result<Estimate> {
    if let JointModel::BivariateGaussian { var_y, rho, .. } = model {
        let c = (1.0 - rho * rho) * var_y;
        return Ok(Estimate::closed_form(c * c));
    }
    Ok(cond_var_estimates(model, cfg)?[1])
}

/// One-sided maximal correlation `η²_X(Y) = var(E[Y|X]) / var(Y)`.
pub fn eta_sq(model: &JointModel, cfg: &NumericsConfig) -> Result<Estimate> {
    let mom = model.moments()?;
    if let JointModel::BivariateGaussian { rho, .. } = model {
        return Ok(Estimate::closed_form(rho * rho));
    }
    let v = cond_var_estimates(model, cfg)?[2];
    Ok(Estimate::quadrature(v.value / mom.var_y, v.err / mom.var_y))
}

/// `Δ(X,Y) = η⁻⁴ [(var²Y − E var²(Y|X)) / (var²Y · η²) − 1]`, the
/// second-order coefficient of `g_ε` at `ε = 0` (nats).
pub fn delta_coeff(model: &JointModel, cfg: &NumericsConfig) -> Result<Estimate> {
    if let JointModel::BivariateGaussian { rho, .. } = model {
        let r2 = rho * rho;
        if r2 == 0.0 {
            return Err(Error::DegenerateModel("X and Y are independent, eta^2 = 0".into()));
        }
        return Ok(Estimate::closed_form((1.0 - r2) / (r2 * r2)));
    }
    let mom = model.moments()?;
    let [_, ev2, vm] = cond_var_estimates(model, cfg)?;
    let v = mom.var_y;
    let e2 = vm.value / v;
    if !(e2 > 1e-12) {
        return Err(Error::DegenerateModel(format!("eta^2 = {e2} is zero")));
    }
    let value = ((v * v - ev2.value) / (v * v * e2) - 1.0) / (e2 * e2);
    // first-order propagation of both quadrature errors
    let de2 = vm.err / v;
    let d_ev2 = ev2.err / (v * v * e2 * e2 * e2);
    let d_eta = de2 * ((3.0 * (v * v - ev2.value) / (v * v * e2) - 2.0) / (e2 * e2 * e2)).abs();
    Ok(Estimate::quadrature(value, d_ev2 + d_eta))
}

/// A discretized joint law of `X` and a second variable: `x` nodes with
/// weights, column coordinates, and the matrix `π_ij` of joint masses.
struct Discretization {
    xs: Vec<f64>,
    cols: Vec<f64>,
    /// row-major `xs.len() × cols.len()`
    pi: Vec<f64>,
}

/// Result of one spectral solve.
struct Spectral {
    rho_m2: f64,
    eta_sq_cols: f64,
}

impl Discretization {
    fn solve(&self, tol: f64) -> Result<Spectral> {
        let (nx, nz) = (self.xs.len(), self.cols.len());
        let mut r = vec![0.0; nx];
        let mut c = vec![0.0; nz];
        for i in 0..nx {
            for j in 0..nz {
                let p = self.pi[i * nz + j];
                r[i] += p;
                c[j] += p;
            }
        }
        let total: f64 = r.iter().sum();
        let mut b = vec![0.0; nx * nz];
        for i in 0..nx {
            for j in 0..nz {
                let d = (r[i] * c[j]).sqrt();
                b[i * nz + j] = if d > 0.0 { self.pi[i * nz + j] / d } else { 0.0 };
            }
        }
        let sc: Vec<f64> = c.iter().map(|v| (v / total).sqrt()).collect();

        // η² of X on the columns: var(E[X | column]) / var(X)
        let mx: f64 = (0..nx).map(|i| r[i] * self.xs[i]).sum::<f64>() / total;
        let vx: f64 = (0..nx).map(|i| r[i] * (self.xs[i] - mx).powi(2)).sum::<f64>() / total;
        let mut between = 0.0;
        for j in 0..nz {
            if c[j] <= 0.0 {
                continue;
            }
            let m: f64 = (0..nx).map(|i| self.pi[i * nz + j] * self.xs[i]).sum::<f64>() / c[j];
            between += c[j] * (m - mx) * (m - mx);
        }
        let eta_sq_cols = if vx > 0.0 { between / total / vx } else { 0.0 };

        let deflate = |v: &mut [f64]| {
            let d: f64 = v.iter().zip(&sc).map(|(a, s)| a * s).sum();
            for (a, s) in v.iter_mut().zip(&sc) {
                *a -= d * s;
            }
        };
        let normalize = |v: &mut [f64]| -> f64 {
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 0.0 {
                v.iter_mut().for_each(|a| *a /= n);
            }
            n
        };
        let apply = |v: &[f64], u: &mut [f64]| {
            for i in 0..nx {
                let row = &b[i * nz..(i + 1) * nz];
                u[i] = row.iter().zip(v).map(|(p, q)| p * q).sum();
            }
        };
        let apply_t = |u: &[f64], v: &mut [f64]| {
            v.iter_mut().for_each(|a| *a = 0.0);
            for i in 0..nx {
                let row = &b[i * nz..(i + 1) * nz];
                for (a, p) in v.iter_mut().zip(row) {
                    *a += p * u[i];
                }
            }
        };

        let mut v: Vec<f64> = self
            .cols
            .iter()
            .zip(&sc)
            .map(|(t, s)| s * (t + t * t + (3.0 * t).sin()))
            .collect();
        deflate(&mut v);
        if normalize(&mut v) == 0.0 {
            return Ok(Spectral {
                rho_m2: 0.0,
                eta_sq_cols,
            });
        }

        // Lanczos on BᵀB restricted to the complement of the constant
        // function, with full reorthogonalization
        let steps = MAX_LANCZOS.min(nz);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let (mut alpha, mut beta) = (Vec::<f64>::new(), Vec::<f64>::new());
        let mut u = vec![0.0; nx];
        let mut w = vec![0.0; nz];
        let mut theta = f64::NAN;
        let mut settled = 0;
        for j in 0..steps {
            apply(&basis[j], &mut u);
            apply_t(&u, &mut w);
            alpha.push(w.iter().zip(&basis[j]).map(|(a, b)| a * b).sum());
            for _ in 0..2 {
                for q in &basis {
                    let d: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                    w.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
                }
                deflate(&mut w);
            }
            let next = top_eigenvalue(&alpha, &beta);
            let b = normalize(&mut w);
            if b <= 1e-14 * next.abs().max(1e-300) {
                return Ok(Spectral {
                    rho_m2: next.clamp(0.0, 1.0),
                    eta_sq_cols,
                });
            }
            if (next - theta).abs() <= 1e-3 * tol {
                settled += 1;
                if settled == 2 {
                    return Ok(Spectral {
                        rho_m2: next.clamp(0.0, 1.0),
                        eta_sq_cols,
                    });
                }
            } else {
                settled = 0;
            }
            theta = next;
            beta.push(b);
            basis.push(w.clone());
        }
        Err(Error::no_convergence(
            "maximal correlation Lanczos iteration",
            format!("no convergence after {steps} steps (last value {theta})"),
        ))
    }
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, by Sturm-sequence bisection.
fn top_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    let off = |i: usize| if i < beta.len() && i + 1 < m { beta[i].abs() } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = off(i) + if i > 0 { off(i - 1) } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    // number of eigenvalues strictly below x
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..m {
            let b2 = if i > 0 { off(i - 1).powi(2) } else { 0.0 };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quadrature nodes for `law` with panels no wider than `width`: atoms are
/// kept as exact nodes, the continuous part uses composite 4-point
/// Gauss-Legendre panels between landmarks.
fn fine_nodes(law: &Law, width: f64, budget: usize) -> Vec<(f64, f64)> {
    let (t, tw) = gauss_legendre(4);
    let mut atoms = Vec::new();
    let mut atom_mass = 0.0;
    for (w, c) in law.parts() {
        if let Component::Atom(a) = c {
            atoms.push((*a, *w));
            atom_mass += w;
        }
    }
    let mut out = atoms;
    if atom_mass >= 1.0 - 1e-15 {
        return out;
    }
    let (lo, hi) = law.span();
    let width = width.max(4.0 * (hi - lo) / budget as f64);
    let mut pts: Vec<f64> = law.landmarks().into_iter().filter(|p| *p > lo && *p < hi).collect();
    pts.sort_by(f64::total_cmp);
    let mut breaks = vec![lo];
    for p in pts {
        if p - breaks[breaks.len() - 1] >= 0.25 * width && hi - p >= 0.25 * width {
            breaks.push(p);
        }
    }
    breaks.push(hi);
    let mut cont = Vec::new();
    for win in breaks.windows(2) {
        let n = ((win[1] - win[0]) / width).ceil().max(1.0) as usize;
        let h = (win[1] - win[0]) / n as f64;
        for k in 0..n {
            let a = win[0] + k as f64 * h;
            for (ti, wi) in t.iter().zip(&tw) {
                let x = a + 0.5 * h * (ti + 1.0);
                let q = 0.5 * h * wi * law.pdf(x);
                if q > 0.0 {
                    cont.push((x, q));
                }
            }
        }
    }
    let s: f64 = cont.iter().map(|p| p.1).sum();
    if s > 0.0 {
        let scale = (1.0 - atom_mass) / s;
        out.extend(cont.into_iter().map(|(x, q)| (x, q * scale)));
    }
    out
}

/// Composite 4-point Gauss-Legendre nodes on `[lo, hi]`.
fn uniform_nodes(lo: f64, hi: f64, width: f64, budget: usize) -> Vec<(f64, f64)> {
    let (t, tw) = gauss_legendre(4);
    let n = (((hi - lo) / width).ceil() as usize).clamp(1, budget / 4);
    let h = (hi - lo) / n as f64;
    let mut out = Vec::with_capacity(4 * n);
    for k in 0..n {
        let a = lo + k as f64 * h;
        for (ti, wi) in t.iter().zip(&tw) {
            out.push((a + 0.5 * h * (ti + 1.0), 0.5 * h * wi));
        }
    }
    out
}

/// `|d E[Y|X=x] / dx|`, the rate at which the conditional law moves with `x`.
fn regression_slope(model: &JointModel) -> f64 {
    match model {
        JointModel::BivariateGaussian {
            var_x, var_y, rho, ..
        } => (rho.abs() * (var_y / var_x).sqrt()).max(1e-3),
        JointModel::AdditiveNoise { a, .. } => a.abs(),
        JointModel::Clipped { .. } => 1.0,
    }
}

/// Discretized law of `(X, Z_γ)` with at most `nx` and `nz` nodes.
fn xz_grid(model: &JointModel, gamma: f64, nx: usize, nz: usize, y_law: &Law) -> Result<Discretization> {
    let sg = gamma.sqrt();
    let xl = model.x_law()?;
    let xw = 0.5 / (sg * regression_slope(model));
    let xn = fine_nodes(&xl, xw, nx);
    let (ylo, yhi) = y_law.span();
    let (my, sy) = (y_law.mean(), y_law.var().sqrt());
    let (ylo, yhi) = (ylo.max(my - 9.0 * sy), yhi.min(my + 9.0 * sy));
    let zn = uniform_nodes(sg * ylo - 9.0, sg * yhi + 9.0, 0.5, nz);
    let nzl = zn.len();
    let mut pi = vec![0.0; xn.len() * nzl];
    for (i, (x, a)) in xn.iter().enumerate() {
        let cond = model.cond_density_y_given_x(*x)?;
        for (j, (z, b)) in zn.iter().enumerate() {
            let lp = cond.posterior(*z, sg).ln_p;
            pi[i * nzl + j] = a * b * lp.exp();
        }
    }
    Ok(Discretization {
        xs: xn.into_iter().map(|p| p.0).collect(),
        cols: zn.into_iter().map(|p| p.0).collect(),
        pi,
    })
}

/// `ρ_m²(X, Z_γ)` and `η²_{Z_γ}(X)` from the same discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AceResult {
    pub rho_m2: Estimate,
    pub eta_sq_z: Estimate,
}

/// Numerical maximal correlation of `X` and `Z_γ` by power iteration of the
/// conditional-expectation operator on a discretized joint law, for every
/// model kind. The error is the change when node counts are halved.
pub fn ace(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<AceResult> {
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(AceResult {
            rho_m2: Estimate::closed_form(0.0),
            eta_sq_z: Estimate::closed_form(0.0),
        });
    }
    let y_law = model.y_law(cfg.hermite_order, cfg.legendre_order)?;
    let fine = xz_grid(model, gamma, MAX_X_NODES, MAX_Z_NODES, &y_law)?.solve(cfg.abs_tol)?;
    let coarse = xz_grid(model, gamma, MAX_X_NODES / 2, MAX_Z_NODES / 2, &y_law)?.solve(cfg.abs_tol)?;
    Ok(AceResult {
        rho_m2: Estimate::quadrature(fine.rho_m2, (fine.rho_m2 - coarse.rho_m2).abs() + cfg.abs_tol),
        eta_sq_z: Estimate::quadrature(fine.eta_sq_cols, (fine.eta_sq_cols - coarse.eta_sq_cols).abs()),
    })
}

/// `ρ²·γ·var(Y) / (1 + γ·var(Y))` for jointly Gaussian models.
fn gaussian_xz(model: &JointModel, gamma: f64) -> Option<f64> {
    match model {
        JointModel::BivariateGaussian { var_y, rho, .. } => {
            let s = gamma * var_y;
            Some(rho * rho * s / (1.0 + s))
        }
        _ => None,
    }
}

/// Maximal correlation `ρ_m²(X, Z_γ)`; closed form for jointly Gaussian
/// models, [`ace`] otherwise.
pub fn maximal_correlation(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    check_gamma(gamma)?;
    if let Some(v) = gaussian_xz(model, gamma) {
        return Ok(Estimate::closed_form(v));
    }
    Ok(ace(model, gamma, cfg)?.rho_m2)
}

/// One-sided maximal correlation `η²_{Z_γ}(X) = var(E[X|Z_γ]) / var(X)`.
pub fn eta_sq_z(model: &JointModel, gamma: f64, cfg: &NumericsConfig) -> Result<Estimate> {
    check_gamma(gamma)?;
    if let Some(v) = gaussian_xz(model, gamma) {
        return Ok(Estimate::closed_form(v));
    }
    Ok(ace(model, gamma, cfg)?.eta_sq_z)
}

/// Discretized law of `(X, Y)` for an additive model, `Y` binned in cells.
fn xy_grid(x: &ScalarDist, a: f64, noise: &ScalarDist, nx: usize, cells: usize) -> Discretization {
    let xl = x.law();
    let sm = noise.var().sqrt();
    let xn = fine_nodes(&xl, 0.25 * sm / a.abs(), nx);
    let (nlo, nhi) = noise.law().span();
    let (xlo, xhi) = xl.span();
    let (ylo, yhi) = {
        let (p, q) = (a * xlo, a * xhi);
        (p.min(q) + nlo, p.max(q) + nhi)
    };
    let h = (yhi - ylo) / cells as f64;
    let edges: Vec<f64> = (0..=cells).map(|k| ylo + k as f64 * h).collect();
    let mut pi = vec![0.0; xn.len() * cells];
    for (i, (xv, w)) in xn.iter().enumerate() {
        let mut prev = noise.cdf(edges[0] - a * xv);
        for j in 0..cells {
            let next = noise.cdf(edges[j + 1] - a * xv);
            pi[i * cells + j] = w * (next - prev).max(0.0);
            prev = next;
        }
    }
    Discretization {
        xs: xn.into_iter().map(|p| p.0).collect(),
        cols: edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect(),
        pi,
    }
}

/// `ρ_m²(X,Y)` and `η²_Y(X)` of the source pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelation {
    pub rho_m2: Estimate,
    /// `η²_Y(X) = var(E[X|Y]) / var(X)`
    pub eta_sq_y: Estimate,
}

/// Maximal correlation of the source pair. Jointly Gaussian pairs give `ρ²`;
/// the clipped model gives 1 because `1{X = 0} = 1{|Y| > L}`; additive
/// models are discretized with `Y` in cells, which can only under-estimate.
pub fn maximal_correlation_xy(model: &JointModel, cfg: &NumericsConfig) -> Result<PairCorrelation> {
    match model {
        JointModel::BivariateGaussian { rho, .. } => Ok(PairCorrelation {
            rho_m2: Estimate::closed_form(rho * rho),
            eta_sq_y: Estimate::closed_form(rho * rho),
        }),
        JointModel::Clipped { .. } => Ok(PairCorrelation {
            rho_m2: Estimate::closed_form(1.0),
            eta_sq_y: Estimate::closed_form(1.0),
        }),
        JointModel::AdditiveNoise { x, a, noise } => {
            let fine = xy_grid(x, *a, noise, MAX_X_NODES, Y_CELLS).solve(cfg.abs_tol)?;
            let coarse = xy_grid(x, *a, noise, MAX_X_NODES / 2, Y_CELLS / 2).solve(cfg.abs_tol)?;
            Ok(PairCorrelation {
                rho_m2: Estimate::quadrature(fine.rho_m2, (fine.rho_m2 - coarse.rho_m2).abs() + cfg.abs_tol),
                eta_sq_y: Estimate::quadrature(
                    fine.eta_sq_cols,
                    (fine.eta_sq_cols - coarse.eta_sq_cols).abs(),
                ),
            })
        }
    }
}
