//! Browser bindings: rate-privacy curves, ENSR curves and model summaries,
//! each returned as a JSON string.
//!
//! The `*_json` functions hold the logic and are plain Rust so they can be
//! tested natively; the exported wrappers only translate errors.

use privfilter::models::JointModel;
use privfilter::numerics::{Estimate, NumericsConfig};
use privfilter::tradeoff::{Analysis, EnsrMode, Units};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Grids larger than this are refused to keep the page responsive.
const MAX_POINTS: usize = 400;

fn analysis(model: &str) -> Result<Analysis, String> {
    let m: JointModel = model.parse().map_err(|e: privfilter::Error| e.to_string())?;
    Analysis::new(&m, &NumericsConfig::default()).map_err(|e| e.to_string())
}

fn grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>, String> {
    if !(start.is_finite() && stop.is_finite()) || stop < start {
        return Err(format!("bad range {start}..{stop}"));
    }
    if count == 0 || count > MAX_POINTS {
        return Err(format!("count must lie in 1..={MAX_POINTS}"));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect())
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn estimate(e: &Estimate) -> Value {
    json!({ "value": finite(e.value), "err": finite(e.err) })
}

/// Rate-privacy curve on `count` levels from `start` to `stop`, clipped
/// below `I(X;Y)`. Points that fail carry an `error` field.
pub fn curve_json(model: &str, start: f64, stop: f64, count: usize, units: &str) -> Result<String, String> {
    let units: Units = units.parse().map_err(|e: privfilter::Error| e.to_string())?;
    let an = analysis(model)?;
    let limit = units.from_nats(an.mutual_information().map_err(|e| e.to_string())?.value);
    let stop = if limit.is_finite() && stop >= limit { 0.999 * limit } else { stop };
    let levels = grid(start, stop, count)?;
    let eta = an.eta_sq().map_err(|e| e.to_string())?.value;
    let points: Vec<Value> = levels
        .iter()
        .zip(an.curve(&levels, units))
        .map(|(eps, p)| match p {
            Ok(p) => json!({
                "eps": eps,
                "gamma": finite(p.gamma_eps),
                "g": estimate(&p.g_eps),
                "tangent": units.from_nats(units.to_nats(*eps) / eta),
                "lower_epi": finite(p.lower_epi),
                "upper_epi": finite(p.upper_epi),
            }),
            Err(e) => json!({ "eps": eps, "error": e.to_string() }),
        })
        .collect();
    Ok(json!({ "units": units.as_str(), "limit": finite(limit), "points": points }).to_string())
}

/// ENSR curve in the given mode on `count` levels from `start` to `stop`.
pub fn ensr_json(model: &str, start: f64, stop: f64, count: usize, weak: bool) -> Result<String, String> {
    let mode = if weak { EnsrMode::Weak } else { EnsrMode::Strong };
    let an = analysis(model)?;
    let limit = an.ensr_limit(mode).map_err(|e| e.to_string())?;
    let stop = if stop >= limit { 0.999 * limit } else { stop };
    let levels = grid(start, stop, count)?;
    let points: Vec<Value> = levels
        .iter()
        .zip(an.ensr_curve(&levels, mode))
        .map(|(eps, p)| match p {
            Ok(p) => json!({
                "eps": eps,
                "gamma": finite(p.gamma_eps),
                "ensr": estimate(&p.ensr),
                "gaussian_upper": finite(p.gaussian_upper),
                "thm4_lower": p.thm4_lower.map(finite),
                "linear_lower": p.linear_lower.map(finite),
            }),
            Err(e) => json!({ "eps": eps, "error": e.to_string() }),
        })
        .collect();
    Ok(json!({ "limit": limit, "points": points }).to_string())
}

/// Summary quantities of a model, in nats.
pub fn info_json(model: &str) -> Result<String, String> {
    let an = analysis(model)?;
    let field = |r: privfilter::Result<Estimate>| match r {
        Ok(e) => estimate(&e),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let pair = an.pair_correlation().map(|p| p.rho_m2);
    Ok(json!({
        "model": an.model().to_string(),
        "mutual_information": field(an.mutual_information()),
        "eta_sq": field(an.eta_sq()),
        "delta": field(an.delta()),
        "rho_m2": field(pair),
        "non_gaussianness_y": field(an.non_gaussianness_y()),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn curve(model: &str, start: f64, stop: f64, count: usize, units: &str) -> Result<String, JsError> {
    curve_json(model, start, stop, count, units).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ensr(model: &str, start: f64, stop: f64, count: usize, weak: bool) -> Result<String, JsError> {
    ensr_json(model, start, stop, count, weak).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn info(model: &str) -> Result<String, JsError> {
    info_json(model).map_err(|e| JsError::new(&e))
}
