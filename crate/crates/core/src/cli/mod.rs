//! Command-line front end.
//!
//! Every command prints one JSON report on stdout. Exit codes: 0 success,
//! 1 validation or parse failure, 2 numerical non-convergence, 3 usage error.

pub mod json;
pub mod parse;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::error::Error;
use crate::harmonic::{
    character_residual, default_test_points, harmonicity_residual, limit_experiment, mc_harmonicity, CharacterMixture,
};
use crate::laplace::{log_laplace, Status};
use crate::levelset::{
    closure_schedule, counterexample_report, curve_point, roots_1d, solve_on_ray, trace_csv, trace_level_curve_with,
    trace_svg, ClosureReport, RayOutcome, Roots1d, TraceOptions,
};
use crate::measures::{build_counterexample, classify_moment, Exponent, LatticeMeasure, MomentClass, Variant};

use json::{ints, num, nums, object, signed_log};
use parse::{parse_list, parse_measure_file, parse_measure_str, parse_mixture_file, ParsedMeasure};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "HARMONIC_LIMITS_OUT";

/// Comma-separated real vector, e.g. `-1,0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVec(pub Vec<f64>);

impl FromStr for RealVec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        parse_list(0, s)
            .map(RealVec)
            .map_err(|_| Error::InvalidArgument(format!("expected comma-separated numbers, got {s:?}")))
    }
}

/// Comma-separated integer vector, e.g. `3,-2`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntVec(pub Vec<i64>);

impl FromStr for IntVec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        s.split(',')
            .map(|w| w.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map(IntVec)
            .map_err(|_| Error::InvalidArgument(format!("expected comma-separated integers, got {s:?}")))
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if t > 0.0 && t <= 1e-2 {
        Ok(t)
    } else {
        Err("tolerance must lie in (0, 1e-2]".into())
    }
}

/// Semicolon-separated list of real vectors, e.g. `0,0;0.1,0.2`.
fn parse_vectors(s: &str) -> Result<Vec<Vec<f64>>, Error> {
    s.split(';').map(|v| RealVec::from_str(v).map(|r| r.0)).collect()
}

fn parse_int_vectors(s: &str) -> Result<Vec<Vec<i64>>, Error> {
    s.split(';').map(|v| IntVec::from_str(v).map(|r| r.0)).collect()
}

#[derive(Debug, Parser)]
#[command(
    name = "harmonic-limits",
    version,
    about = "Laplace transforms, harmonic characters and level sets of lattice measures"
)]
pub struct Cli {
    /// Measure file, or a builtin such as `biased-walk p=0.25` or `counterexample-A`.
    #[arg(long, global = true)]
    pub measure: Option<String>,
    /// Relative tolerance, in (0, 1e-2].
    #[arg(long, global = true, default_value_t = 1e-10, value_parser = parse_tolerance)]
    pub tolerance: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for report files; defaults to $HARMONIC_LIMITS_OUT.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the measure has total mass one.
    Validate,
    /// Moment regime of the measure.
    Classify,
    /// Evaluate log Phi at a point.
    Phi {
        #[arg(long, allow_hyphen_values = true)]
        at: RealVec,
    },
    /// Roots of Phi = 1 for a measure on Z.
    Roots1d {
        #[arg(long, default_value_t = 1.0)]
        bracket: f64,
    },
    /// Solve Phi(base + t dir) = 1 for t in a range.
    RaySolve {
        #[arg(long, allow_hyphen_values = true)]
        base: RealVec,
        #[arg(long, allow_hyphen_values = true)]
        dir: RealVec,
        #[arg(long, allow_hyphen_values = true)]
        range: RealVec,
    },
    /// Trace the level curve Phi = 1 in the plane.
    Trace {
        #[arg(long, allow_hyphen_values = true)]
        start: Option<RealVec>,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 2000)]
        max_steps: usize,
        /// Initial tracing direction.
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<RealVec>,
        /// Points are computed as offsets from this point (also drawn as the SVG marker).
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<RealVec>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Full report on the non-closed level set counterexample.
    Counterexample {
        #[arg(long, default_value = "A")]
        variant: Variant,
        #[arg(long)]
        x_grid: Option<RealVec>,
    },
    /// Harmonicity residual of a character mixture at a point.
    HarmonicResidual {
        #[arg(long)]
        mixture: Option<PathBuf>,
        /// A single character exp(x.s) instead of a mixture file.
        #[arg(long, allow_hyphen_values = true)]
        character: Option<RealVec>,
        #[arg(long, allow_hyphen_values = true)]
        at: IntVec,
    },
    /// Limit of a sequence of harmonic characters.
    LimitExp {
        /// Use the counterexample curve approaching its witness.
        #[arg(long)]
        variant: Option<Variant>,
        /// Sequence `s1;s2;...` of comma-separated exponents.
        #[arg(long, allow_hyphen_values = true)]
        sequence: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        limit: Option<RealVec>,
        /// Test points `x1;x2;...`.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
        #[arg(long, default_value_t = 12)]
        count: u32,
    },
    /// Monte Carlo check of harmonicity.
    McCheck {
        #[arg(long)]
        mixture: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        character: Option<RealVec>,
        #[arg(long, allow_hyphen_values = true)]
        at: IntVec,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Classify => "classify",
            Command::Phi { .. } => "phi",
            Command::Roots1d { .. } => "roots1d",
            Command::RaySolve { .. } => "ray-solve",
            Command::Trace { .. } => "trace",
            Command::Counterexample { .. } => "counterexample",
            Command::HarmonicResidual { .. } => "harmonic-residual",
            Command::LimitExp { .. } => "limit-exp",
            Command::McCheck { .. } => "mc-check",
        }
    }
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type Run<T> = Result<T, Failure>;

/// Exit code for a run-time error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Inconclusive { .. } | Error::NoConvergence(_) | Error::Diverged => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: 3,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> Outcome {
    match execute(cli) {
        Ok(report) => {
            let mut text = serde_json::to_string_pretty(&report).expect("JSON values serialize");
            text.push('\n');
            let out_dir = cli
                .out_dir
                .clone()
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
            if let Some(dir) = out_dir {
                let path = dir.join(format!("{}.json", cli.command.name()));
                if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(&path, &text)) {
                    return Outcome {
                        code: 1,
                        stdout: text,
                        stderr: format!("error: cannot write {}: {e}\n", path.display()),
                    };
                }
            }
            Outcome {
                code: 0,
                stdout: text,
                stderr: String::new(),
            }
        }
        Err(Failure::Usage(msg)) => Outcome {
            code: 3,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(Failure::Run(e)) => Outcome {
            code: exit_code(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

/// Loads a measure from a file path, or from builtin text when no such file exists.
pub fn load_measure(arg: &str) -> Result<ParsedMeasure, Error> {
    let path = Path::new(arg);
    if path.is_file() {
        return parse_measure_file(path);
    }
    let text = arg.trim();
    if text.starts_with("builtin ") {
        parse_measure_str(text)
    } else {
        parse_measure_str(&format!("builtin {text}"))
    }
}

fn need_measure(cli: &Cli) -> Run<ParsedMeasure> {
    match &cli.measure {
        Some(m) => Ok(load_measure(m)?),
        None => Err(Failure::Usage(format!("`{}` needs --measure", cli.command.name()))),
    }
}

fn resolve_out(cli: &Cli, p: &Path) -> PathBuf {
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    match dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p.to_path_buf(),
    }
}

fn write_file(path: &Path, text: &str) -> Run<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(Error::from)?;
    }
    std::fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

fn mixture_arg(mixture: &Option<PathBuf>, character: &Option<RealVec>) -> Run<CharacterMixture<f64>> {
    match (mixture, character) {
        (Some(p), None) => Ok(parse_mixture_file(p)?),
        (None, Some(s)) => Ok(CharacterMixture::character(s.0.clone())),
        _ => Err(Failure::Usage("give exactly one of --mixture and --character".into())),
    }
}

fn header(cli: &Cli, measure: Option<&LatticeMeasure<f64>>) -> Vec<(&'static str, Value)> {
    let mut h = vec![("command", Value::from(cli.command.name()))];
    if let Some(m) = measure {
        h.push(("measure", Value::from(m.label())));
        h.push(("dim", Value::from(m.dim())));
    }
    h.push(("tolerance", num(cli.tolerance)));
    h
}

fn status_fail(status: Status, terms_used: u64) -> Option<Error> {
    match status {
        Status::Inconclusive => Some(Error::Inconclusive { terms_used }),
        _ => None,
    }
}

fn closure_json(c: &ClosureReport<f64>) -> Value {
    let seq: Vec<Value> = c
        .sequence_points
        .iter()
        .zip(&c.sequence_residuals)
        .zip(&c.distances)
        .map(|((p, &r), &d)| {
            object([
                ("offset", nums(p.offset())),
                ("point", nums(&p.resolve())),
                ("residual", num(r)),
                ("distance", num(d)),
            ])
        })
        .collect();
    let probes: Vec<Value> = c
        .boundary_probes
        .iter()
        .map(|b| {
            object([
                ("axis", Value::from(b.axis)),
                ("delta", num(b.delta)),
                ("membership", Value::from(format!("{:?}", b.membership))),
            ])
        })
        .collect();
    object([
        ("candidate", nums(&c.candidate.resolve())),
        ("sequence", Value::Array(seq)),
        ("candidate_phi", signed_log(c.candidate_log_phi)),
        ("candidate_tail_bound", signed_log(c.candidate_tail_bound)),
        ("boundary_probes", Value::Array(probes)),
        ("verdict", Value::from(c.verdict.name())),
    ])
}

fn execute(cli: &Cli) -> Run<Value> {
    let tol = cli.tolerance;
    match &cli.command {
        Command::Validate => {
            let pm = need_measure(cli)?;
            let mu = &pm.measure;
            let r = log_laplace(mu, Exponent::zeros(mu.dim()), tol.min(1e-13))?;
            let mut h = header(cli, Some(mu));
            let log_total = r.log_phi().unwrap_or(f64::NAN);
            h.extend([
                ("raw_log_total", num(pm.raw_log_total)),
                ("log_phi_zero", num(log_total)),
                ("terms_used", Value::from(r.terms_used)),
                ("tail_bound", signed_log(r.tail_bound)),
            ]);
            if !(log_total.abs() <= tol) {
                return Err(Error::NotNormalized { excess: log_total }.into());
            }
            h.push(("normalized", Value::from(true)));
            Ok(object(h))
        }
        Command::Classify => {
            let pm = need_measure(cli)?;
            let class = classify_moment(&pm.measure);
            let mut h = header(cli, Some(&pm.measure));
            h.push(("class", Value::from(class.tag())));
            match class {
                MomentClass::SuperExponential { epsilon } => h.push(("epsilon", num(epsilon))),
                MomentClass::ExponentialOnly { a } => h.push(("a", num(a))),
                _ => {}
            }
            Ok(object(h))
        }
        Command::Phi { at } => {
            let pm = need_measure(cli)?;
            let mu = &pm.measure;
            let r = log_laplace(mu, at.0.clone(), tol)?;
            let mut h = header(cli, Some(mu));
            h.extend([
                ("at", nums(&at.0)),
                ("status", Value::from(r.status.name())),
                ("log_value", r.log_value.map_or(Value::Null, |v| num(v.ln()))),
                ("terms_used", Value::from(r.terms_used)),
                ("tail_bound", signed_log(r.tail_bound)),
            ]);
            if let Some(e) = status_fail(r.status, r.terms_used) {
                return Err(e.into());
            }
            Ok(object(h))
        }
        Command::Roots1d { bracket } => {
            let pm = need_measure(cli)?;
            let mut h = header(cli, Some(&pm.measure));
            match roots_1d(&pm.measure, *bracket, tol)? {
                Roots1d::Roots(r) => {
                    h.push(("all_of_line", Value::from(false)));
                    h.push(("roots", nums(&r)));
                }
                Roots1d::AllOfLine => {
                    h.push(("all_of_line", Value::from(true)));
                    h.push(("roots", Value::Null));
                }
            }
            Ok(object(h))
        }
        Command::RaySolve { base, dir, range } => {
            let pm = need_measure(cli)?;
            if range.0.len() != 2 {
                return Err(Failure::Usage("--range needs two numbers lo,hi".into()));
            }
            let mu = &pm.measure;
            let out = solve_on_ray(mu, base.0.clone(), &dir.0, (range.0[0], range.0[1]), tol)?;
            let mut h = header(cli, Some(mu));
            h.extend([
                ("base", nums(&base.0)),
                ("dir", nums(&dir.0)),
                ("range", nums(&range.0)),
            ]);
            match out {
                RayOutcome::Root(t) => {
                    let s: Vec<f64> = base.0.iter().zip(&dir.0).map(|(b, d)| b + t * d).collect();
                    let r = log_laplace(
                        mu,
                        Exponent::new(base.0.clone()).shifted(&dir.0.iter().map(|d| d * t).collect::<Vec<_>>()),
                        tol * 1e-2,
                    )?;
                    h.extend([
                        ("outcome", Value::from("Root")),
                        ("t", num(t)),
                        ("point", nums(&s)),
                        ("log_phi", r.log_phi().map_or(Value::Null, num)),
                        ("terms_used", Value::from(r.terms_used)),
                        ("tail_bound", signed_log(r.tail_bound)),
                    ]);
                }
                RayOutcome::NoRootInRange => h.push(("outcome", Value::from("NoRootInRange"))),
            }
            Ok(object(h))
        }
        Command::Trace {
            start,
            step,
            max_steps,
            direction,
            anchor,
            csv,
            svg,
        } => {
            let pm = need_measure(cli)?;
            let mu = &pm.measure;
            let start = start.as_ref().map_or(vec![0.0, 0.0], |s| s.0.clone());
            let mut o = TraceOptions::new(*step, *max_steps, tol);
            o.direction = direction.as_ref().map(|d| d.0.clone());
            o.anchor = anchor.as_ref().map(|a| a.0.clone());
            let t = trace_level_curve_with(mu, &start, &o)?;
            if let Some(p) = csv {
                write_file(&resolve_out(cli, p), &trace_csv(&t))?;
            }
            if let Some(p) = svg {
                write_file(&resolve_out(cli, p), &trace_svg(&t, o.anchor.as_deref()))?;
            }
            let pts: Vec<Value> = t
                .points
                .iter()
                .zip(&t.residuals)
                .map(|(p, &r)| object([("point", nums(&p.resolve())), ("residual", num(r))]))
                .collect();
            let mut h = header(cli, Some(mu));
            h.extend([
                ("termination", Value::from(t.termination.name())),
                ("step", num(*step)),
                ("max_step", num(t.max_step)),
                ("count", Value::from(t.points.len())),
                ("max_residual", num(t.residuals.iter().cloned().fold(0.0, f64::max))),
                ("points", Value::Array(pts)),
            ]);
            Ok(object(h))
        }
        Command::Counterexample { variant, x_grid } => {
            let grid = x_grid
                .as_ref()
                .map_or(vec![1.0, 0.5, 0.1, 0.01, 0.001], |g| g.0.clone());
            let rep = counterexample_report(*variant, &grid, tol)?;
            let zeta2 = (std::f64::consts::PI * std::f64::consts::PI / 6.0).ln();
            let table: Vec<Value> = rep
                .y_table
                .iter()
                .map(|&(x, y)| object([("x", num(x)), ("y", num(y))]))
                .collect();
            let mut h = header(cli, None);
            h.extend([
                ("variant", Value::from(rep.variant.name())),
                ("log_M", num(rep.log_m.ln())),
                ("witness", nums(&rep.witness)),
                ("witness_log_phi", num(rep.witness_log_phi.ln())),
                ("expected_log_phi", num(zeta2 - rep.log_m.ln())),
                ("witness_tail_bound", signed_log(rep.witness_tail_bound)),
                ("terms_used", Value::from(rep.witness_terms_used)),
                ("y_table", Value::Array(table)),
                ("closure", closure_json(&rep.closure)),
                ("verdict", Value::from(rep.closure.verdict.name())),
            ]);
            Ok(object(h))
        }
        Command::HarmonicResidual { mixture, character, at } => {
            let pm = need_measure(cli)?;
            let mu = &pm.measure;
            let m = mixture_arg(mixture, character)?;
            let r = harmonicity_residual(mu, &m, &at.0, tol)?;
            let mut h = header(cli, Some(mu));
            h.extend([
                ("x0", ints(&r.x0)),
                ("f_value", signed_log(r.f_value)),
                ("integral_value", signed_log(r.integral_value)),
                ("log_residual", signed_log(r.log_residual)),
                ("relative", num(r.relative)),
            ]);
            if m.len() == 1 {
                let c = character_residual(mu, &m.exponents()[0], &at.0)?;
                h.push(("character_residual", signed_log(c)));
            }
            if !mu.is_finite() {
                let mut terms = Vec::new();
                for s in m.exponents() {
                    let r = log_laplace(mu, s.clone(), tol)?;
                    terms.push(object([
                        ("exponent", nums(&s.resolve())),
                        ("terms_used", Value::from(r.terms_used)),
                        ("tail_bound", signed_log(r.tail_bound)),
                    ]));
                }
                h.push(("stream_sums", Value::Array(terms)));
            }
            Ok(object(h))
        }
        Command::LimitExp {
            variant,
            sequence,
            limit,
            points,
            count,
        } => {
            let (mu, seq, lim) = match variant {
                Some(v) => {
                    let mu = build_counterexample::<f64>(*v, 2)?;
                    let mut seq = Vec::new();
                    for x in closure_schedule::<f64>(*count) {
                        let y = crate::levelset::solve_y(&mu, *v, x, tol)?;
                        seq.push(curve_point(*v, x, y));
                    }
                    (mu, seq, curve_point(*v, 0.0, 0.0))
                }
                None => {
                    let pm = need_measure(cli)?;
                    let (Some(s), Some(l)) = (sequence, limit) else {
                        return Err(Failure::Usage("give --variant, or --sequence with --limit".into()));
                    };
                    let seq = parse_vectors(s)?.into_iter().map(Exponent::new).collect();
                    (pm.measure, seq, Exponent::new(l.0.clone()))
                }
            };
            let pts = match points {
                Some(p) => parse_int_vectors(p)?,
                None => default_test_points(mu.dim()),
            };
            let r = limit_experiment(&mu, &seq, &lim, &pts, tol)?;
            let pointwise: Vec<Value> = r
                .pointwise
                .iter()
                .map(|p| {
                    object([
                        ("x", ints(&p.x)),
                        ("gaps", nums(&p.gaps)),
                        ("converging", Value::from(p.converging)),
                    ])
                })
                .collect();
            let mut h = header(cli, Some(&mu));
            h.extend([
                ("limit", nums(&lim.resolve())),
                (
                    "sequence",
                    Value::Array(seq.iter().map(|s| nums(&s.resolve())).collect()),
                ),
                ("member_residuals", nums(&r.member_residuals)),
                ("pointwise", Value::Array(pointwise)),
                ("limit_log_phi", num(r.limit_log_phi.ln())),
                ("limit_defect", signed_log(r.limit_defect)),
                ("classification", Value::from(r.classification.name())),
            ]);
            Ok(object(h))
        }
        Command::McCheck {
            mixture,
            character,
            at,
            samples,
        } => {
            let pm = need_measure(cli)?;
            let mu = &pm.measure;
            let m = mixture_arg(mixture, character)?;
            let r = mc_harmonicity(mu, &m, &at.0, *samples, cli.seed)?;
            let mut h = header(cli, Some(mu));
            h.extend([
                ("seed", Value::from(cli.seed)),
                ("x0", ints(&at.0)),
                ("samples", Value::from(r.n_samples)),
                ("f_x0", signed_log(r.f_x0)),
                ("empirical_mean", num(r.empirical_mean)),
                ("ci_halfwidth", num(r.ci_halfwidth)),
                ("z_score", num(r.z_score)),
            ]);
            Ok(object(h))
        }
    }
}
