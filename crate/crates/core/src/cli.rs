//! Command-line front end.
//!
//! Exit status: 0 when every asserted check passes, 1 when any fails, 2 when
//! none fails but some are indeterminate, 3 for usage and configuration
//! errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::chart::ChartPoint;
use crate::classify::{
    classify, invariance_suite, projective_relation, verify_identity, Class, Identity, IdentityInputs, SampleBox,
    SampleSet, Settings,
};
use crate::error::Error;
use crate::geometry::{MetricGeometry, TensorJet};
use crate::jets::JetError;
use crate::lang::{parse_expr, parse_rho, EvalError, MetricSpec, RhoSpec};
use crate::projective::{ProjectiveSpray, RhoSetting};
use crate::report::{overall_verdict, CheckReport, Verdict};

#[derive(Debug, Parser)]
#[command(name = "finsler-lab", version, about = "Curvature of Finsler metrics from Taylor jets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print tensor components at one point.
    Eval(EvalArgs),
    /// Test a metric for curvature classes on sampled points.
    Check(CheckArgs),
    /// Check identities between curvature quantities on sampled points.
    Verify(VerifyArgs),
    /// Test whether two metrics are projectively related and compare their invariants.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: number of processors).
    #[arg(long, global = true, env = "FINSLER_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Report zero runtimes so that repeated runs give identical output.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Half width of the coordinate box the base points are drawn from.
    #[arg(long = "box", default_value_t = 0.9)]
    pub half_width: f64,
    /// Jet order K (default: the smallest order the requested checks need).
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub metric: PathBuf,
    /// Base point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Direction, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Vec<f64>,
    /// Tensors to print, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "g,G,N,B,E,R,Ric,S")]
    pub tensor: Vec<String>,
    /// Factor for PG, PB, PR and PRic (default: the metric file's own).
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub metric: PathBuf,
    /// Class name, or `all`.
    #[arg(long)]
    pub class: String,
    /// Factor for gpr-quadratic (default: the metric file's own).
    #[arg(long)]
    pub rho: Option<String>,
    #[command(flatten)]
    pub sampling: SampleArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub metric: PathBuf,
    /// Projectively related partner for the lemma and the shift identity.
    #[arg(long)]
    pub metric2: Option<PathBuf>,
    /// Identity name, or `all`.
    #[arg(long)]
    pub suite: String,
    #[arg(long)]
    pub rho: Option<String>,
    /// Factor P of the projective change used when there is no partner metric.
    #[arg(long)]
    pub probe: Option<String>,
    #[command(flatten)]
    pub sampling: SampleArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub metric: PathBuf,
    #[arg(long)]
    pub metric2: PathBuf,
    #[arg(long)]
    pub rho: Option<String>,
    #[command(flatten)]
    pub sampling: SampleArgs,
}

/// Usage or configuration problem; exit status 3.
#[derive(Debug)]
pub struct UsageError(pub String);

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError(e.to_string())
    }
}

#[derive(Debug, Serialize)]
pub struct TensorValues {
    pub name: String,
    pub indices: Vec<Vec<usize>>,
    pub values: Vec<f64>,
}

/// Report written by every command.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub metric: Vec<String>,
    pub jet_order: usize,
    pub seed: Option<u64>,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<ChartValues>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tensors: Vec<TensorValues>,
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub related: Option<bool>,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<Option<f64>>>,
    pub verdict: Verdict,
    pub runtime_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct ChartValues {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl RunReport {
    pub fn exit_code(&self) -> u8 {
        match self.verdict {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Indeterminate => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}", self.command, self.metric.join(" "));
        s += &format!("\njet order {}", self.jet_order);
        if let Some(seed) = self.seed {
            s += &format!(", {} samples, seed {seed}", self.samples);
        }
        if let Some(p) = &self.point {
            s += &format!("\nx = {:?}\ny = {:?}", p.x, p.y);
        }
        for t in &self.tensors {
            s += &format!("\n{}", t.name);
            for (idx, v) in t.indices.iter().zip(&t.values) {
                s += &format!("\n  {idx:?} {v:e}");
            }
        }
        if let Some(related) = self.related {
            s += &format!("\nrelated: {related}");
        }
        if let Some(ps) = &self.factors {
            let shown: Vec<String> = ps
                .iter()
                .map(|p| p.map_or("-".to_string(), |v| format!("{v:e}")))
                .collect();
            s += &format!("\nP: [{}]", shown.join(", "));
        }
        for c in &self.checks {
            let role = match c.role {
                crate::report::CheckRole::Assert => "",
                crate::report::CheckRole::Finding => " (finding)",
            };
            s += &format!(
                "\n{:<40} {:<13} residual {:e} (tolerance {:e}){role}",
                c.name,
                c.verdict.to_string(),
                c.max_residual,
                c.tolerance
            );
            if let Some(w) = &c.witness {
                if c.verdict != Verdict::Pass {
                    s += &format!("\n    worst at x={:?} y={:?} slot={:?}", w.x, w.y, w.slot);
                }
            }
            for f in c.failures.iter().take(3) {
                s += &format!("\n    error {f}");
            }
            for n in &c.notes {
                s += &format!("\n    note: {n}");
            }
        }
        s += &format!("\nverdict: {}", self.verdict);
        if self.runtime_seconds > 0.0 {
            s += &format!("\nruntime {:.3}s", self.runtime_seconds);
        }
        s.push('\n');
        s
    }
}

fn load_metric(path: &Path) -> Result<Arc<MetricSpec>, UsageError> {
    let text = fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    MetricSpec::parse(&text)
        .map(Arc::new)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn rho_arg(text: &Option<String>, dim: usize) -> Result<Option<RhoSpec>, UsageError> {
    text.as_deref()
        .map(|t| parse_rho(t, dim).map_err(|e| UsageError(format!("--rho: {e}"))))
        .transpose()
}

fn order_error(what: &str, order: usize, needed: usize) -> UsageError {
    UsageError(format!("{what} needs jet order K >= {needed}, got K = {order}"))
}

fn settings(order: usize, what: &str, needed: usize) -> Result<Settings, UsageError> {
    if order < needed {
        return Err(order_error(what, order, needed));
    }
    Ok(Settings::new(order))
}

fn samples(dim: usize, args: &SampleArgs) -> Result<SampleSet, UsageError> {
    if args.samples == 0 {
        return Err(UsageError("--samples must be positive".into()));
    }
    if !(args.half_width > 0.0) {
        return Err(UsageError("--box must be positive".into()));
    }
    let region = SampleBox {
        half_width: args.half_width,
        ..SampleBox::default()
    };
    Ok(SampleSet::random_in(dim, args.samples, args.seed, region))
}

fn sampled_report(
    command: &str,
    metrics: &[&Path],
    order: usize,
    set: &SampleSet,
    checks: Vec<CheckReport>,
) -> RunReport {
    RunReport {
        command: command.into(),
        metric: metrics.iter().map(|p| p.display().to_string()).collect(),
        jet_order: order,
        seed: Some(set.seed()),
        samples: set.len(),
        point: None,
        tensors: Vec::new(),
        verdict: overall_verdict(&checks),
        checks,
        related: None,
        factors: None,
        runtime_seconds: 0.0,
    }
}

/// Smallest order at which a named tensor has a value.
fn tensor_min_order(name: &str) -> Option<usize> {
    Some(match name {
        "g" | "g_inv" | "G" | "tau" | "sigma" => 2,
        "N" | "S" | "rho" | "PG" => 3,
        "Gamma" | "R" | "Ric" | "K" => 4,
        "B" | "E" | "R2" | "PR" | "PRic" => 5,
        "D" | "Rfull" | "PB" => 6,
        _ => return None,
    })
}

const TENSORS: &str = "g, g_inv, G, N, Gamma, B, E, D, R, Ric, R2, Rfull, S, tau, sigma, K, rho, PG, PB, PR, PRic";

fn eval_tensor(name: &str, geo: &MetricGeometry, rho: &RhoSetting, settings: &Settings) -> crate::error::Result<TensorJet> {
    let spray = geo.spray();
    let n = geo.dim();
    let quad = &settings.quadrature;
    let volume = &geo.spec().volume;
    let projective = || -> crate::error::Result<ProjectiveSpray> {
        Ok(ProjectiveSpray::new(spray, rho.evaluate(geo, quad)?))
    };
    Ok(match name {
        "g" => geo.fundamental_tensor().clone(),
        "g_inv" => geo.inverse().clone(),
        "G" => spray.coefficients().clone(),
        "N" => spray.nonlinear()?.clone(),
        "Gamma" => spray.connection()?.clone(),
        "B" => spray.berwald_curvature()?.clone(),
        "E" => spray.mean_berwald()?,
        "D" => spray.douglas_curvature()?,
        "R" => spray.riemann()?.clone(),
        "Ric" => TensorJet::scalar(n, spray.ricci()?, 2),
        "R2" => spray.riemann_two_form()?,
        "Rfull" => spray.riemann_full()?,
        "S" => TensorJet::scalar(n, geo.s_curvature(volume, quad)?, 1),
        "tau" => TensorJet::scalar(n, geo.distortion(volume, quad)?, 0),
        "sigma" => TensorJet::scalar(n, geo.volume(volume, quad)?, 0),
        "K" => {
            let flag = geo.scalar_flag()?;
            TensorJet::scalar(n, geo.chart().constant(flag.curvature), 0)
        }
        "rho" => TensorJet::scalar(n, rho.evaluate(geo, quad)?, 1),
        "PG" => projective()?.spray().coefficients().clone(),
        "PB" => projective()?.spray().berwald_curvature()?.clone(),
        "PR" => projective()?.spray().riemann()?.clone(),
        "PRic" => TensorJet::scalar(n, projective()?.spray().ricci()?, 2),
        _ => unreachable!("tensor names are validated before evaluation"),
    })
}

fn is_order_error(e: &Error) -> bool {
    e.is_insufficient_order()
        || matches!(e, Error::Eval(EvalError::Jet(JetError::InsufficientOrder { .. })))
}

fn run_eval(args: &EvalArgs) -> Result<RunReport, UsageError> {
    let spec = load_metric(&args.metric)?;
    for t in &args.tensor {
        let needed = tensor_min_order(t).ok_or_else(|| UsageError(format!("unknown tensor '{t}'; known: {TENSORS}")))?;
        if args.order < needed {
            return Err(order_error(t, args.order, needed));
        }
    }
    let point = ChartPoint::new(args.x.clone(), args.y.clone()).map_err(UsageError::from)?;
    if point.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            found: point.dim(),
        }
        .into());
    }
    let settings = Settings::new(args.order);
    let mut rho = RhoSetting::from_spec(&spec);
    if let Some(r) = rho_arg(&args.rho, spec.dim)? {
        rho = rho.with_kind(r);
    }
    let geo = MetricGeometry::new(spec.clone(), point.clone(), args.order)?;
    let mut tensors = Vec::new();
    for name in &args.tensor {
        let t = eval_tensor(name, &geo, &rho, &settings).map_err(|e| {
            if is_order_error(&e) {
                UsageError(format!("{name}: {e}; raise --order"))
            } else {
                UsageError(format!("{name}: {e}"))
            }
        })?;
        tensors.push(TensorValues {
            name: name.clone(),
            indices: t.indices().collect(),
            values: t.values(),
        });
    }
    Ok(RunReport {
        command: "eval".into(),
        metric: vec![args.metric.display().to_string()],
        jet_order: args.order,
        seed: None,
        samples: 1,
        point: Some(ChartValues {
            x: point.x().to_vec(),
            y: point.y().to_vec(),
        }),
        tensors,
        checks: Vec::new(),
        related: None,
        factors: None,
        verdict: Verdict::Pass,
        runtime_seconds: 0.0,
    })
}

fn run_check(args: &CheckArgs) -> Result<RunReport, UsageError> {
    let spec = load_metric(&args.metric)?;
    let classes: Vec<Class> = if args.class.eq_ignore_ascii_case("all") {
        Class::ALL.to_vec()
    } else {
        vec![args.class.parse()?]
    };
    let default_order = classes
        .iter()
        .map(|c| if *c == Class::GprQuadratic { 8 } else { c.min_order() })
        .max()
        .unwrap_or(5);
    let order = args.sampling.order.unwrap_or(default_order);
    let needed = classes.iter().map(|c| c.min_order()).max().unwrap_or(0);
    let settings = settings(order, &args.class, needed)?;
    let set = samples(spec.dim, &args.sampling)?;
    let rho = rho_arg(&args.rho, spec.dim)?;
    let checks = classes
        .into_iter()
        .map(|c| classify(&spec, c, rho.as_ref(), &set, &settings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(sampled_report("check", &[&args.metric], order, &set, checks))
}

fn run_verify(args: &VerifyArgs) -> Result<RunReport, UsageError> {
    let spec = load_metric(&args.metric)?;
    let identities: Vec<Identity> = if args.suite.eq_ignore_ascii_case("all") {
        Identity::ALL.to_vec()
    } else {
        vec![args.suite.parse()?]
    };
    let needed = identities.iter().map(|i| i.min_order()).max().unwrap_or(0);
    let order = args.sampling.order.unwrap_or(needed);
    let settings = settings(order, &args.suite, needed)?;
    let set = samples(spec.dim, &args.sampling)?;
    let mut inputs = IdentityInputs::new(spec.clone());
    let mut paths = vec![args.metric.as_path()];
    if let Some(p) = &args.metric2 {
        let other = load_metric(p)?;
        if other.dim != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                found: other.dim,
            }
            .into());
        }
        inputs = inputs.with_other(other);
        paths.push(p);
    }
    if let Some(r) = rho_arg(&args.rho, spec.dim)? {
        inputs = inputs.with_rho(r);
    }
    if let Some(p) = &args.probe {
        inputs.probe = parse_expr(p, spec.dim, 1, 1).map_err(|e| UsageError(format!("--probe: {e}")))?;
    }
    let mut checks = Vec::new();
    for id in identities {
        checks.extend(verify_identity(id, &inputs, &set, &settings)?);
    }
    Ok(sampled_report("verify", &paths, order, &set, checks))
}

fn run_compare(args: &CompareArgs) -> Result<RunReport, UsageError> {
    let a = load_metric(&args.metric)?;
    let b = load_metric(&args.metric2)?;
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        }
        .into());
    }
    let order = args.sampling.order.unwrap_or(6);
    let settings = settings(order, "compare", 6)?;
    let set = samples(a.dim, &args.sampling)?;
    let rho = rho_arg(&args.rho, a.dim)?;
    let relation = projective_relation(&a, &b, &set, &settings)?;
    let checks = invariance_suite(&a, &b, rho.as_ref(), &set, &settings)?;
    let mut report = sampled_report("compare", &[&args.metric, &args.metric2], order, &set, checks);
    report.related = Some(relation.related());
    report.factors = Some(relation.factors);
    Ok(report)
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Result<RunReport, UsageError> {
    let started = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.output.threads {
        if t == 0 {
            return Err(UsageError("--threads must be positive".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| UsageError(format!("thread pool: {e}")))?;
    let mut report = pool.install(|| match &cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Check(a) => run_check(a),
        Command::Verify(a) => run_verify(a),
        Command::Compare(a) => run_compare(a),
    })?;
    if !cli.output.no_timing {
        report.runtime_seconds = started.elapsed().as_secs_f64();
    }
    Ok(report)
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(3);
        }
    };
    let text = match cli.output.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    };
    let written = match &cli.output.output {
        Some(path) => fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    ExitCode::from(report.exit_code())
}
