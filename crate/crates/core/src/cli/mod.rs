//! Command-line front end: `curve`, `ensr`, `approx`, `verify` and `info`.
//!
//! Every table is CSV with 12 significant digits. Exit codes: 0 success,
//! 1 failed verification, 2 parse or usage error, 3 privacy level out of
//! range, 4 numerical non-convergence.

pub mod format;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::models::JointModel;
use crate::numerics::{Estimate, NumericsConfig};
use crate::tradeoff::{Analysis, EnsrMode, Units};

use format::{num, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_EPS_RANGE: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::InvalidParameter(_) | Error::DegenerateModel(_) | Error::ModelNotSupported { .. } => {
            EXIT_PARSE
        }
        Error::EpsOutOfRange { .. } | Error::TargetUnreachable { .. } => EXIT_EPS_RANGE,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::UnsupportedPoint { .. } => EXIT_FAILED,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "privfilter",
    version,
    about = "Rate-privacy and estimation-privacy tradeoffs for the filter Z = sqrt(gamma)*Y + N"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Rate-privacy curve g_eps with derivatives and entropy-power bounds
    Curve(CurveArgs),
    /// Estimation noise-to-signal ratio under a correlation constraint
    Ensr(EnsrArgs),
    /// g_eps next to its linear and second-order approximations
    Approx(CurveArgs),
    /// Run the invariant checks over the built-in model battery
    Verify(VerifyArgs),
    /// Summary quantities of a model in nats and bits
    Info(InfoArgs),
}

#[derive(Debug, Args)]
struct NumericsArgs {
    /// Gauss-Hermite order
    #[arg(long)]
    hermite: Option<usize>,
    /// Gauss-Legendre order per panel
    #[arg(long)]
    legendre: Option<usize>,
    /// absolute tolerance
    #[arg(long = "tol-abs", allow_hyphen_values = true)]
    tol_abs: Option<f64>,
    /// relative tolerance
    #[arg(long = "tol-rel", allow_hyphen_values = true)]
    tol_rel: Option<f64>,
    /// Monte-Carlo sample count
    #[arg(long)]
    mc: Option<usize>,
    /// Monte-Carlo seed
    #[arg(long)]
    seed: Option<u64>,
}

impl NumericsArgs {
    fn config(&self) -> Result<NumericsConfig> {
        let mut cfg = NumericsConfig::default();
        if let Some(v) = self.hermite {
            cfg.hermite_order = v;
        }
        if let Some(v) = self.legendre {
            cfg.legendre_order = v;
        }
        if let Some(v) = self.tol_abs {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.tol_rel {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.mc {
            cfg.mc_samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// model specification, or a file containing one
    #[arg(long)]
    model: String,
    /// privacy levels: `start:stop:count` or a comma-separated list
    #[arg(long, allow_hyphen_values = true)]
    eps: String,
    /// units of eps and g
    #[arg(long, default_value = "bits")]
    units: String,
    /// write the table here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    numerics: NumericsArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Strong,
    Weak,
}

#[derive(Debug, Args)]
struct EnsrArgs {
    #[arg(long)]
    model: String,
    /// squared-correlation levels: `start:stop:count` or a list
    #[arg(long, allow_hyphen_values = true)]
    eps: String,
    /// maximal-correlation (strong) or one-sided (weak) constraint
    #[arg(long, value_enum, default_value = "strong")]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    numerics: NumericsArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    numerics: NumericsArgs,
}

#[derive(Debug, Args)]
struct InfoArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    numerics: NumericsArgs,
}

/// Which table a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Curve,
    Ensr,
    Approx,
    Verify,
    Info,
}

/// A grid of privacy levels.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsGrid {
    /// `count` equally spaced levels from `start` to `stop` inclusive
    Range { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

impl FromStr for EpsGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::Parse {
            key: "eps".into(),
            reason,
        };
        let number = |t: &str| -> Result<f64> {
            let v: f64 = t.trim().parse().map_err(|_| bad(format!("`{t}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("`{t}` is not finite")))
            }
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(bad(format!("expected `start:stop:count`, got `{s}`")));
            }
            let start = number(parts[0])?;
            let stop = number(parts[1])?;
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| bad(format!("count `{}` is not a positive integer", parts[2])))?;
            if count == 0 {
                return Err(bad("count must be at least 1".into()));
            }
            if stop < start {
                return Err(bad(format!("stop {stop} is below start {start}")));
            }
            Ok(EpsGrid::Range { start, stop, count })
        } else {
            let values = s.split(',').map(number).collect::<Result<Vec<_>>>()?;
            Ok(EpsGrid::List(values))
        }
    }
}

impl EpsGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsGrid::List(v) => v.clone(),
            EpsGrid::Range { start, count: 1, .. } => vec![*start],
            EpsGrid::Range { start, stop, count } => (0..*count)
                .map(|k| {
                    if k + 1 == *count {
                        *stop
                    } else {
                        start + (stop - start) * k as f64 / (*count - 1) as f64
                    }
                })
                .collect(),
        }
    }

    /// A range whose stop reaches `limit` is pulled back to `0.999·limit`;
    /// the message says so. Explicit lists are left alone.
    pub fn clipped(&self, limit: f64) -> (EpsGrid, Option<String>) {
        match *self {
            EpsGrid::Range { start, stop, count } if limit.is_finite() && stop >= limit => {
                let new_stop = 0.999 * limit;
                let grid = EpsGrid::Range {
                    start: start.min(new_stop),
                    stop: new_stop,
                    count,
                };
                let msg = format!(
                    "warning: eps stop {} is outside the admissible range [0, {}); clipped to {}",
                    num(stop),
                    num(limit),
                    num(new_stop)
                );
                (grid, Some(msg))
            }
            _ => (self.clone(), None),
        }
    }
}

/// Everything one invocation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub model_spec: String,
    pub eps_grid: Option<EpsGrid>,
    pub units: Units,
    pub mode: EnsrMode,
    pub numerics: NumericsConfig,
    /// `None` writes to standard output
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    fn from_cli(cli: Cli) -> Result<Self> {
        let base = |command, model_spec: String, out, numerics: &NumericsArgs| -> Result<RunConfig> {
            Ok(RunConfig {
                command,
                model_spec,
                eps_grid: None,
                units: Units::Bits,
                mode: EnsrMode::Strong,
                numerics: numerics.config()?,
                output_path: out,
            })
        };
        let curve_like = |command, a: CurveArgs| -> Result<RunConfig> {
            Ok(RunConfig {
                eps_grid: Some(a.eps.parse()?),
                units: a.units.parse()?,
                ..base(command, a.model, a.out, &a.numerics)?
            })
        };
        match cli.command {
            CommandArgs::Curve(a) => curve_like(Command::Curve, a),
            CommandArgs::Approx(a) => curve_like(Command::Approx, a),
            CommandArgs::Ensr(a) => Ok(RunConfig {
                eps_grid: Some(a.eps.parse()?),
                mode: match a.mode {
                    ModeArg::Strong => EnsrMode::Strong,
                    ModeArg::Weak => EnsrMode::Weak,
                },
                ..base(Command::Ensr, a.model, a.out, &a.numerics)?
            }),
            CommandArgs::Verify(a) => base(Command::Verify, String::new(), a.out, &a.numerics),
            CommandArgs::Info(a) => base(Command::Info, a.model, a.out, &a.numerics),
        }
    }
}

/// Parses a model given inline or as the path of a file holding the
/// `key=value` pairs (whitespace or newline separated, `#` comments allowed).
pub fn load_model(spec: &str) -> Result<JointModel> {
    let path = Path::new(spec);
    if !spec.contains('=') && path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            key: "model".into(),
            reason: format!("cannot read `{spec}`: {e}"),
        })?;
        let flat: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .collect();
        return flat.join(" ").parse();
    }
    spec.parse()
}

/// Output of one run: the text for the output sink, diagnostics for
/// standard error, and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn failed(err: &Error) -> Self {
        Outcome {
            stdout: String::new(),
            stderr: format!("error: {err}\n"),
            code: exit_code(err),
        }
    }
}

fn est_cells(e: &Estimate) -> [String; 2] {
    [num(e.value), num(e.err)]
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Collects per-row failures: the first one in grid order sets the exit code.
#[derive(Default)]
struct RowErrors {
    first: Option<Error>,
    messages: String,
}

impl RowErrors {
    fn record(&mut self, eps: f64, err: &Error) {
        self.messages.push_str(&format!("error at eps = {}: {err}\n", num(eps)));
        if self.first.is_none() {
            self.first = Some(err.clone());
        }
    }

    fn finish(self, table: &Table, mut stderr: String) -> Outcome {
        stderr.push_str(&self.messages);
        Outcome {
            stdout: table.render(),
            stderr,
            code: self.first.as_ref().map_or(EXIT_OK, exit_code),
        }
    }
}

fn grid_with_limit(cfg: &RunConfig, limit: f64) -> (Vec<f64>, String) {
    let grid = cfg.eps_grid.clone().unwrap_or(EpsGrid::List(vec![0.0]));
    let (grid, warning) = grid.clipped(limit);
    (grid.values(), warning.map(|w| w + "\n").unwrap_or_default())
}

pub fn run_curve(cfg: &RunConfig) -> Outcome {
    let res = (|| -> Result<Outcome> {
        let model = load_model(&cfg.model_spec)?;
        let an = Analysis::new(&model, &cfg.numerics)?;
        let units = cfg.units;
        let limit = units.from_nats(an.mutual_information()?.value);
        let (grid, warning) = grid_with_limit(cfg, limit);
        let points = an.curve(&grid, units);
        let mut table = Table::new(&[
            "eps",
            "gamma_eps",
            "g_eps",
            "g_eps_err",
            "g_prime",
            "g_second",
            "taylor2",
            "lower_epi",
            "upper_epi",
        ]);
        let mut errors = RowErrors::default();
        for (eps, p) in grid.iter().zip(points) {
            let row = p.and_then(|p| {
                let taylor = units.from_nats(an.taylor(units.to_nats(*eps))?);
                let [g, g_err] = est_cells(&p.g_eps);
                Ok(vec![
                    num(p.eps),
                    num(p.gamma_eps),
                    g,
                    g_err,
                    num(p.g_prime.value),
                    num(p.g_second.value),
                    num(taylor),
                    num(p.lower_epi),
                    num(p.upper_epi),
                ])
            });
            match row {
                Ok(cells) => table.push(cells),
                Err(e) => {
                    errors.record(*eps, &e);
                    table.push_error(*eps, e.to_string());
                }
            }
        }
        Ok(errors.finish(&table, warning))
    })();
    res.unwrap_or_else(|e| Outcome::failed(&e))
}

pub fn run_ensr(cfg: &RunConfig) -> Outcome {
    let res = (|| -> Result<Outcome> {
        let model = load_model(&cfg.model_spec)?;
        let an = Analysis::new(&model, &cfg.numerics)?;
        let limit = an.ensr_limit(cfg.mode)?;
        // the closed form reaches the limit itself; the numerical root runs
        // off to infinity there, so those grids stop just short of it
        let gaussian = matches!(model, JointModel::BivariateGaussian { .. });
        let requested = cfg.eps_grid.clone().unwrap_or(EpsGrid::List(vec![0.0]));
        let (grid, warning) = match requested {
            EpsGrid::Range { stop, .. } if gaussian && stop <= limit => (requested, None),
            g => g.clipped(limit),
        };
        let grid = grid.values();
        let warning = warning.map(|w| w + "\n").unwrap_or_default();
        let points = an.ensr_curve(&grid, cfg.mode);
        let mut table = Table::new(&[
            "eps",
            "gamma_eps",
            "ensr",
            "ensr_err",
            "gaussian_upper",
            "thm4_lower",
            "linear_lower",
        ]);
        let mut errors = RowErrors::default();
        for (eps, p) in grid.iter().zip(points) {
            match p {
                Ok(p) => {
                    let [m, m_err] = est_cells(&p.ensr);
                    table.push(vec![
                        num(p.eps),
                        num(p.gamma_eps),
                        m,
                        m_err,
                        num(p.gaussian_upper),
                        opt(p.thm4_lower),
                        opt(p.linear_lower),
                    ]);
                }
                Err(e) => {
                    errors.record(*eps, &e);
                    table.push_error(*eps, e.to_string());
                }
            }
        }
        Ok(errors.finish(&table, warning))
    })();
    res.unwrap_or_else(|e| Outcome::failed(&e))
}

pub fn run_approx(cfg: &RunConfig) -> Outcome {
    let res = (|| -> Result<Outcome> {
        let model = load_model(&cfg.model_spec)?;
        let an = Analysis::new(&model, &cfg.numerics)?;
        let units = cfg.units;
        let eta = an.eta_sq()?.value;
        let delta = an.delta()?.value;
        let limit = units.from_nats(an.mutual_information()?.value);
        let (grid, warning) = grid_with_limit(cfg, limit);
        let points = an.curve(&grid, units);
        let mut table = Table::new(&["eps", "g_eps", "linear", "taylor2", "eta_sq", "delta"]);
        let mut errors = RowErrors::default();
        for (eps, p) in grid.iter().zip(points) {
            let row = p.and_then(|p| {
                let taylor = units.from_nats(an.taylor(units.to_nats(*eps))?);
                Ok(vec![
                    num(p.eps),
                    num(p.g_eps.value),
                    num(p.eps / eta),
                    num(taylor),
                    num(eta),
                    num(delta),
                ])
            });
            match row {
                Ok(cells) => table.push(cells),
                Err(e) => {
                    errors.record(*eps, &e);
                    table.push_error(*eps, e.to_string());
                }
            }
        }
        Ok(errors.finish(&table, warning))
    })();
    res.unwrap_or_else(|e| Outcome::failed(&e))
}

/// `quantity,nats,bits,err_nats` rows. Unit-free quantities repeat the same
/// value; `delta` is the `ε²` coefficient, which gains a factor `ln 2` when
/// both `g` and `ε` are measured in bits.
pub fn run_info(cfg: &RunConfig) -> Outcome {
    let res = (|| -> Result<Outcome> {
        let model = load_model(&cfg.model_spec)?;
        let an = Analysis::new(&model, &cfg.numerics)?;
        let ln2 = std::f64::consts::LN_2;
        let mi = an.mutual_information()?;
        let eta = an.eta_sq()?;
        let delta = an.delta()?;
        let rho = an.pair_correlation()?.rho_m2;
        let d_y = an.non_gaussianness_y()?;
        let mut table = Table::new(&["quantity", "nats", "bits", "err_nats"]);
        let mut row = |name: &str, e: &Estimate, bits: f64| {
            table.push(vec![name.to_string(), num(e.value), num(bits), num(e.err)]);
        };
        row("mutual_information", &mi, mi.value / ln2);
        row("eta_sq", &eta, eta.value);
        row("delta", &delta, delta.value * ln2);
        row("rho_m2", &rho, rho.value);
        row("non_gaussianness_y", &d_y, d_y.value / ln2);
        Ok(Outcome {
            stdout: table.render(),
            stderr: format!("model: {model}\n"),
            code: EXIT_OK,
        })
    })();
    res.unwrap_or_else(|e| Outcome::failed(&e))
}

/// Runs one configured command.
pub fn execute(cfg: &RunConfig) -> Outcome {
    match cfg.command {
        Command::Curve => run_curve(cfg),
        Command::Ensr => run_ensr(cfg),
        Command::Approx => run_approx(cfg),
        Command::Info => run_info(cfg),
        Command::Verify => verify::run_verify(&cfg.numerics),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() {
    if let Some(n) = std::env::var("PRIVFILTER_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() {}

/// Parses `args` (including the program name), runs the command, writes the
/// table and diagnostics, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    configure_threads();
    let outcome = execute(&cfg);
    eprint!("{}", outcome.stderr);
    let written = match &cfg.output_path {
        Some(p) => std::fs::write(p, &outcome.stdout),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(outcome.stdout.as_bytes()).and_then(|_| out.flush())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return EXIT_FAILED;
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_grids() {
        let g: EpsGrid = "0:1:5".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g: EpsGrid = "0:0:1".parse().unwrap();
        assert_eq!(g.values(), vec![0.0]);
        let g: EpsGrid = "0.1,0.3".parse().unwrap();
        assert_eq!(g.values(), vec![0.1, 0.3]);
        for bad in ["0:1", "0:1:0", "1:0:3", "a,b", "0:1:x"] {
            match bad.parse::<EpsGrid>() {
                Err(Error::Parse { key, .. }) => assert_eq!(key, "eps"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn range_clipped_below_limit() {
        let g: EpsGrid = "0:2:3".parse().unwrap();
        let (c, w) = g.clipped(1.0);
        assert!(w.is_some());
        assert_eq!(c.values(), vec![0.0, 0.4995, 0.999]);
        let (c, w) = g.clipped(f64::INFINITY);
        assert!(w.is_none());
        assert_eq!(c, g);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::EpsOutOfRange { eps: 1.0, limit: 0.5 }), 3);
        assert_eq!(exit_code(&Error::no_convergence("x", "y")), 4);
        assert_eq!(
            exit_code(&Error::Parse {
                key: "k".into(),
                reason: "r".into()
            }),
            2
        );
    }
}
