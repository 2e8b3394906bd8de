//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numerical failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::markov::{convergence_study, generator_poly, generator_smooth, ConvergenceStudy, Side, SmoothFn};
use crate::poly::Poly;
use crate::qnum::ProcessParams;
use crate::report::{fmt_f64, sig17, sig17_vec};
use crate::simulate::{empirical_stats, simulate_paths, DEFAULT_PATHS};
use crate::spectra::{nu_measure, transition_measure, DiscreteMeasure, DEFAULT_POINTS};
use crate::verify::{run_suites, VerifyGrid, VERIFY_POINTS};

/// Environment variable naming the directory that relative `--output` paths resolve against.
pub const OUT_DIR_ENV: &str = "QMEIXNER_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "qmeixner", version, about = "Transition laws, generators and simulation for q-Meixner processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format (default: json for verify, csv otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Transition,
    Nu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// `1 / (1 + y^2)`
    Cauchy,
    /// `exp(-y^2 / 2)`
    Gaussian,
    /// `cos(y)`
    Cosine,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<ProcessParams, CliError> {
        Ok(ProcessParams::new(self.q, self.theta, self.tau)?)
    }
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value_t = Kind::Transition)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub x: f64,
    /// Start time (transition only).
    #[arg(long, default_value_t = 0.2)]
    pub s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Quadrature size.
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    pub n: usize,
}

impl MeasureArgs {
    fn measure(&self) -> Result<DiscreteMeasure, CliError> {
        let p = self.params.params()?;
        Ok(match self.kind {
            Kind::Transition => transition_measure(p, self.x, self.s, self.t, self.n)?,
            Kind::Nu => nu_measure(p, self.x, self.t, self.n)?,
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nodes and weights of a transition law or of nu_{x,t}.
    Measure(MeasureArgs),
    /// Raw and central moments of a transition law or of nu_{x,t}.
    Moments {
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
    },
    /// The generator A_t f(x) of a polynomial or a built-in smooth function.
    Generator {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated monomial coefficients, constant term first.
        #[arg(
            long,
            value_parser = parse_poly,
            allow_hyphen_values = true,
            conflicts_with = "builtin",
            required_unless_present = "builtin"
        )]
        poly: Option<Poly>,
        #[arg(long, value_enum)]
        builtin: Option<Builtin>,
        #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        n: usize,
    },
    /// Run the identity suites over a parameter grid.
    Verify {
        /// Suite names or name prefixes, comma-separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Replace the q axis of the grid.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        tau: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long, default_value_t = VERIFY_POINTS)]
        n: usize,
    },
    /// Moment errors of (y-x)^2/h P against nu_{x,t} over a sweep of h.
    Converge {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = SideArg::Both)]
        side: SideArg,
        /// Strictly decreasing step sizes, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
        h: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        n: usize,
    },
    /// Seeded sample paths, or their per-time statistics with --stats.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        /// Starting state at the first time point.
        #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
        x: f64,
        /// Strictly increasing time grid, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
        times: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_PATHS)]
        paths: usize,
        #[arg(long, default_value_t = crate::simulate::DEFAULT_POINTS)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        stats: bool,
    },
}

fn parse_poly(s: &str) -> Result<Poly, String> {
    let coeffs = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("bad coefficient '{c}': {e}")))
        .collect::<Result<Vec<f64>, String>>()?;
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err("coefficients must be finite".into());
    }
    Ok(Poly::new(coeffs))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

/// Result of a successful command run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub body: String,
    /// False only when a verification suite failed.
    pub ok: bool,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, ok: true }
    }
}

#[derive(Serialize)]
struct MomentsOut {
    kind: &'static str,
    #[serde(serialize_with = "sig17_vec")]
    moments: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    central_moments: Vec<f64>,
}

#[derive(Serialize)]
struct GeneratorOut {
    #[serde(serialize_with = "sig17")]
    x: f64,
    #[serde(serialize_with = "sig17")]
    t: f64,
    #[serde(serialize_with = "sig17")]
    value: f64,
}

#[derive(Serialize)]
struct ConvergeOut {
    #[serde(serialize_with = "sig17")]
    x: f64,
    #[serde(serialize_with = "sig17")]
    t: f64,
    studies: Vec<ConvergenceStudy>,
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Transition => "transition",
        Kind::Nu => "nu",
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

/// Runs a parsed command and renders its output.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let format = cli.format.unwrap_or(match cli.command {
        Command::Verify { .. } => Format::Json,
        _ => Format::Csv,
    });
    match &cli.command {
        Command::Measure(args) => {
            let m = args.measure()?;
            Ok(Outcome::ok(match format {
                Format::Csv => m.to_csv(),
                Format::Json => m.to_json(),
            }))
        }
        Command::Moments { measure, kmax } => {
            let m = measure.measure()?;
            let moments = m.moments(*kmax)?;
            let central_moments = m.moments_about(m.mean(), *kmax)?;
            Ok(Outcome::ok(match format {
                Format::Csv => {
                    let mut out = String::from("order,moment,central_moment\n");
                    for (k, (a, c)) in moments.iter().zip(&central_moments).enumerate() {
                        let _ = writeln!(out, "{k},{},{}", fmt_f64(*a), fmt_f64(*c));
                    }
                    out
                }
                Format::Json => to_json(&MomentsOut { kind: kind_name(measure.kind), moments, central_moments }),
            }))
        }
        Command::Generator { params, poly, builtin, x, t, n } => {
            let p = params.params()?;
            let value = match (poly, builtin) {
                (Some(poly), _) => generator_poly(poly, p, *x, *t, *n)?,
                (None, Some(b)) => {
                    let f = match b {
                        Builtin::Cauchy => SmoothFn::cauchy(),
                        Builtin::Gaussian => SmoothFn::gaussian(),
                        Builtin::Cosine => SmoothFn::cosine(),
                    };
                    generator_smooth(&f, p, *x, *t, *n)?
                }
                (None, None) => return Err(CliError::Usage("one of --poly or --builtin is required".into())),
            };
            Ok(Outcome::ok(match format {
                Format::Csv => format!("x,t,value\n{},{},{}\n", fmt_f64(*x), fmt_f64(*t), fmt_f64(value)),
                Format::Json => to_json(&GeneratorOut { x: *x, t: *t, value }),
            }))
        }
        Command::Verify { only, q, theta, tau, x, s, t, u, n } => {
            let mut grid = VerifyGrid::default();
            for (axis, given) in [(&mut grid.q, q), (&mut grid.theta, theta), (&mut grid.tau, tau), (&mut grid.x, x)] {
                if !given.is_empty() {
                    axis.clone_from(given);
                }
            }
            grid.s = s.unwrap_or(grid.s);
            grid.t = t.unwrap_or(grid.t);
            grid.u = u.unwrap_or(grid.u);
            let report = run_suites(&grid, *n, only)?;
            for r in report.suites.iter().filter(|r| !r.pass) {
                log::warn!(
                    "suite {} failed: max residual {:e} vs tolerance {:e}",
                    r.check,
                    r.max_residual,
                    r.tolerance
                );
            }
            let body = match format {
                Format::Json => report.to_json(),
                Format::Csv => {
                    let mut out = String::from("check,max_residual,tolerance,pass\n");
                    for r in &report.suites {
                        let _ = writeln!(
                            out,
                            "{},{},{},{}",
                            r.check,
                            fmt_f64(r.max_residual),
                            fmt_f64(r.tolerance),
                            r.pass
                        );
                    }
                    out
                }
            };
            Ok(Outcome { body, ok: report.pass })
        }
        Command::Converge { params, side, h, kmax, x, t, n } => {
            let p = params.params()?;
            if h.is_empty() || h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(CliError::Usage("--h needs positive finite step sizes".into()));
            }
            if !h.windows(2).all(|w| w[0] > w[1]) {
                return Err(CliError::Usage("--h must be strictly decreasing".into()));
            }
            let sides: &[Side] = match side {
                SideArg::Left => &[Side::Left],
                SideArg::Right => &[Side::Right],
                SideArg::Both => &[Side::Left, Side::Right],
            };
            let studies = sides
                .iter()
                .map(|&sd| convergence_study(p, *x, *t, h, *kmax, *n, sd))
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(Outcome::ok(match format {
                Format::Csv => {
                    let mut out = String::from("side,h,order,rescaled_moment,nu_moment,abs_error,fitted_slope\n");
                    for st in &studies {
                        for r in &st.rows {
                            let slope = st.fits[r.order].slope.map(fmt_f64).unwrap_or_default();
                            let _ = writeln!(
                                out,
                                "{},{},{},{},{},{},{}",
                                st.side,
                                fmt_f64(r.h),
                                r.order,
                                fmt_f64(r.rescaled_moment),
                                fmt_f64(r.nu_moment),
                                fmt_f64(r.abs_error),
                                slope
                            );
                        }
                    }
                    out
                }
                Format::Json => to_json(&ConvergeOut { x: *x, t: *t, studies }),
            }))
        }
        Command::Simulate { params, x, times, paths, n, seed, stats } => {
            let p = params.params()?;
            let ps = simulate_paths(p, *x, times, *paths, *n, *seed)?;
            if *stats {
                let st = empirical_stats(&ps)?;
                return Ok(Outcome::ok(match format {
                    Format::Json => to_json(&st),
                    Format::Csv => {
                        let mut out = String::from("time,mean,variance,increment_mean,increment_variance\n");
                        for i in 0..st.times.len() {
                            let (im, iv) = match i {
                                0 => (String::new(), String::new()),
                                _ => (fmt_f64(st.increment_mean[i - 1]), fmt_f64(st.increment_variance[i - 1])),
                            };
                            let _ = writeln!(
                                out,
                                "{},{},{},{im},{iv}",
                                fmt_f64(st.times[i]),
                                fmt_f64(st.mean[i]),
                                fmt_f64(st.variance[i])
                            );
                        }
                        out
                    }
                }));
            }
            Ok(Outcome::ok(match format {
                Format::Csv => ps.to_csv(),
                Format::Json => ps.to_json(),
            }))
        }
    }
}

/// Resolves a relative output path against `QMEIXNER_OUT_DIR` when it is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(body: &str, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = body.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(path) => {
            let path = resolve_output(path);
            let io = |source| CliError::Io { path: path.clone(), source };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
            std::fs::write(&path, text).map_err(io)
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
    }
}

/// Runs the command, writes its output and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(cli).and_then(|out| emit(&out.body, cli.output.as_deref()).map(|()| out.ok));
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("qmeixner").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn negative_values_parse() {
        let cli = parse(&["generator", "--poly", "-1,0,2", "--x", "-0.5", "--q", "-0.3"]);
        match cli.command {
            Command::Generator { poly, x, params, .. } => {
                assert_eq!(poly.unwrap().coeffs(), &[-1.0, 0.0, 2.0]);
                assert_eq!(x, -0.5);
                assert_eq!(params.q, -0.3);
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn generator_of_square_is_one() {
        let out = execute(&parse(&["generator", "--poly", "0,0,1", "--format", "json"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.body).unwrap();
        assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn converge_rejects_unsorted_steps() {
        let err = execute(&parse(&["converge", "--h", "0.01,0.1"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn numerical_errors_exit_three() {
        assert_eq!(CliError::Lib(Error::NoConvergence(3)).exit_code(), 3);
        assert_eq!(CliError::Lib(Error::InvalidTime(0.0)).exit_code(), 2);
    }

    #[test]
    fn poly_and_builtin_conflict() {
        let r = Cli::try_parse_from(["qmeixner", "generator", "--poly", "1", "--builtin", "cauchy"]);
        assert!(r.is_err());
        assert!(Cli::try_parse_from(["qmeixner", "generator"]).is_err());
    }

    #[test]
    fn output_dir_resolution() {
        let abs = Path::new("/tmp/abs.csv");
        assert_eq!(resolve_output(abs), abs);
    }
}
