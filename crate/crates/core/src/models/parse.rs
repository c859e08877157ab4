//! Flat `key=value` model specifications, e.g.
//! `kind=gaussian rho=0.5 var_x=1 var_y=1`,
//! `kind=additive a=1 x=gaussian:0,1 noise=uniform:-1.732,1.732`,
//! `kind=clipped L=1`.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::dist::ScalarDist;
use super::joint::JointModel;

fn parse_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn number(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(key, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(key, format!("`{s}` is not finite")));
    }
    Ok(v)
}

/// Parses `gaussian:mean,var`, `uniform:lo,hi` or `grid:x0/p0;x1/p1;...`;
/// `key` names the field in error messages.
pub fn parse_dist(key: &str, s: &str) -> Result<ScalarDist> {
    let (kind, args) = s
        .split_once(':')
        .ok_or_else(|| parse_err(key, format!("expected `family:params`, got `{s}`")))?;
    let wrap = |e: Error| match e {
        Error::Parse { .. } => e,
        other => parse_err(key, other.to_string()),
    };
    match kind.trim().to_ascii_lowercase().as_str() {
        "gaussian" | "normal" => {
            let v: Vec<&str> = args.split(',').collect();
            if v.len() != 2 {
                return Err(parse_err(key, "gaussian takes `mean,var`"));
            }
            ScalarDist::gaussian(number(key, v[0])?, number(key, v[1])?).map_err(wrap)
        }
        "uniform" => {
            let v: Vec<&str> = args.split(',').collect();
            if v.len() != 2 {
                return Err(parse_err(key, "uniform takes `lo,hi`"));
            }
            ScalarDist::uniform(number(key, v[0])?, number(key, v[1])?).map_err(wrap)
        }
        "grid" => {
            let mut xs = Vec::new();
            let mut ps = Vec::new();
            for item in args.split(';').filter(|t| !t.trim().is_empty()) {
                let (x, p) = item
                    .split_once('/')
                    .ok_or_else(|| parse_err(key, format!("grid entry `{item}` is not `x/pdf`")))?;
                xs.push(number(key, x)?);
                ps.push(number(key, p)?);
            }
            ScalarDist::grid(xs, ps).map_err(wrap)
        }
        other => Err(parse_err(key, format!("unknown distribution family `{other}`"))),
    }
}

fn fields(s: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for tok in s.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(tok, "expected `key=value`"))?;
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(parse_err(k, "given more than once"));
        }
    }
    Ok(map)
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn num(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(key) {
            Some(v) => number(key, &v),
            None => default.ok_or_else(|| parse_err(key, "missing")),
        }
    }

    fn dist(&mut self, key: &str, default: Option<ScalarDist>) -> Result<ScalarDist> {
        match self.take(key) {
            Some(v) => parse_dist(key, &v),
            None => default.ok_or_else(|| parse_err(key, "missing")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(parse_err(k, "unknown key for this model kind")),
            None => Ok(()),
        }
    }
}

impl FromStr for JointModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut f = Fields { map: fields(s)? };
        let kind = f.take("kind").ok_or_else(|| parse_err("kind", "missing"))?;
        let in_key = |key: &'static str| {
            move |e: Error| match e {
                Error::Parse { .. } => e,
                other => parse_err(key, other.to_string()),
            }
        };
        let model = match kind.to_ascii_lowercase().as_str() {
            "gaussian" => {
                let rho = f.num("rho", None)?;
                let var_x = f.num("var_x", Some(1.0))?;
                let var_y = f.num("var_y", Some(1.0))?;
                let mean_x = f.num("mean_x", Some(0.0))?;
                let mean_y = f.num("mean_y", Some(0.0))?;
                if !(rho.abs() < 1.0) {
                    return Err(parse_err("rho", format!("must lie in (-1, 1), got {rho}")));
                }
                for (k, v) in [("var_x", var_x), ("var_y", var_y)] {
                    if !(v > 0.0) {
                        return Err(parse_err(k, format!("must be positive, got {v}")));
                    }
                }
                JointModel::BivariateGaussian {
                    mean_x,
                    mean_y,
                    var_x,
                    var_y,
                    rho,
                }
            }
            "additive" => {
                let a = f.num("a", Some(1.0))?;
                if a == 0.0 {
                    return Err(parse_err("a", "must be nonzero"));
                }
                let x = f.dist("x", None)?;
                let noise = f.dist("noise", None)?;
                JointModel::additive(x, a, noise).map_err(in_key("a"))?
            }
            "clipped" => {
                let l = f.num("L", Some(1.0))?;
                if !(l > 0.0) {
                    return Err(parse_err("L", format!("must be positive, got {l}")));
                }
                let y = f.dist("y", Some(ScalarDist::standard_gaussian()))?;
                JointModel::clipped(y, l).map_err(in_key("L"))?
            }
            other => return Err(parse_err("kind", format!("unknown model kind `{other}`"))),
        };
        f.finish()?;
        Ok(model)
    }
}
