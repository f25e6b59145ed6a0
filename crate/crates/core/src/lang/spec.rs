//! Metric specification files.
//!
//! ```text
//! # comments start with '#'
//! dim = 2
//! F = sqrt(dot_yy) + dot_xy / sqrt(1 + dot_xx)
//! volume = bh | riemannian_det | expr: <expr in x>
//! volume0 = bh | riemannian_det | expr: <expr in x>   (default: expr: 1)
//! rho = classical | weighted [U=<expr>] | directional V=<expr> | custom <expr>
//! f = <expr in x>
//! ```

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ast::Expr;
use super::eval::eval_f64;
use super::parser::{parse_expr, ParseError, ParseErrorKind};
use crate::chart::ChartPoint;
use crate::report::{CheckBuilder, CheckReport, Sample};

/// Choice of volume density `σ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumeSpec {
    /// Busemann-Hausdorff volume of the metric.
    BusemannHausdorff,
    /// `√det g(x, e₁)`: the Riemannian volume for Riemannian metrics.
    RiemannianDet,
    /// A user-supplied positive density.
    Density(Expr),
}

impl fmt::Display for VolumeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeSpec::BusemannHausdorff => f.write_str("bh"),
            VolumeSpec::RiemannianDet => f.write_str("riemannian_det"),
            VolumeSpec::Density(e) => write!(f, "expr: {e}"),
        }
    }
}

/// Construction of the 1-homogeneous deformation factor `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoSpec {
    /// `S / (n+1)` with the metric's own volume.
    Classical,
    /// `𝕊 / (n+1) + U + f_{;0}`, where `𝕊` is the S-curvature measured
    /// against the reference volume and `f` is the metric file's optional `f`.
    Weighted { u: Option<Expr> },
    /// `(ln V)_{.r} Gʳ`.
    Directional { v: Expr },
    /// An explicit expression.
    Custom(Expr),
}

impl fmt::Display for RhoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoSpec::Classical => f.write_str("classical"),
            RhoSpec::Weighted { u: None } => f.write_str("weighted"),
            RhoSpec::Weighted { u: Some(u) } => write!(f, "weighted U={u}"),
            RhoSpec::Directional { v } => write!(f, "directional V={v}"),
            RhoSpec::Custom(e) => write!(f, "custom {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub dim: usize,
    pub metric: Expr,
    pub volume: VolumeSpec,
    pub reference_volume: VolumeSpec,
    pub rho: RhoSpec,
    /// Optional scalar `f(x)` whose differential enters the weighted `ρ`.
    pub potential: Option<Expr>,
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim = {}", self.dim)?;
        writeln!(f, "F = {}", self.metric)?;
        writeln!(f, "volume = {}", self.volume)?;
        writeln!(f, "volume0 = {}", self.reference_volume)?;
        writeln!(f, "rho = {}", self.rho)?;
        if let Some(p) = &self.potential {
            writeln!(f, "f = {p}")?;
        }
        Ok(())
    }
}

const KEYS: [&str; 6] = ["dim", "F", "volume", "volume0", "rho", "f"];

struct Entry<'a> {
    value: &'a str,
    line: usize,
    column: usize,
}

fn error(kind: ParseErrorKind, line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        line,
        column,
        message: message.into(),
    }
}

impl MetricSpec {
    /// Minimal spec: `dim` and `F`, Busemann-Hausdorff volumes, classical `ρ`.
    pub fn new(dim: usize, metric: Expr) -> Self {
        Self {
            dim,
            metric,
            volume: VolumeSpec::BusemannHausdorff,
            reference_volume: VolumeSpec::Density(Expr::Num(1.0)),
            rho: RhoSpec::Classical,
            potential: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries: HashMap<&str, Entry<'_>> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let col = content.len() - content.trim_start().len() + 1;
                return Err(error(ParseErrorKind::Syntax, line, col, "expected 'key = value'"));
            };
            let key = content[..eq].trim();
            let key_col = content.len() - content.trim_start().len() + 1;
            if !KEYS.contains(&key) {
                return Err(error(ParseErrorKind::UnknownKey, line, key_col, format!("'{key}'")));
            }
            let after = &content[eq + 1..];
            let value = after.trim();
            let column = eq + 2 + (after.len() - after.trim_start().len());
            if entries.insert(key, Entry { value, line, column }).is_some() {
                return Err(error(ParseErrorKind::DuplicateKey, line, key_col, format!("'{key}'")));
            }
        }

        let end = text.lines().count().max(1);
        let dim_entry = entries
            .get("dim")
            .ok_or_else(|| error(ParseErrorKind::MissingKey, end, 1, "'dim'"))?;
        let dim: usize = dim_entry.value.parse().ok().filter(|&d| d >= 1).ok_or_else(|| {
            error(
                ParseErrorKind::InvalidValue,
                dim_entry.line,
                dim_entry.column,
                format!("dim must be a positive integer, got '{}'", dim_entry.value),
            )
        })?;

        let f_entry = entries
            .get("F")
            .ok_or_else(|| error(ParseErrorKind::MissingKey, end, 1, "'F'"))?;
        let metric = parse_expr(f_entry.value, dim, f_entry.line, f_entry.column)?;
        if metric.uses_metric() {
            return Err(error(
                ParseErrorKind::InvalidValue,
                f_entry.line,
                f_entry.column,
                "F cannot refer to itself",
            ));
        }

        let volume = match entries.get("volume") {
            Some(e) => parse_volume_at(e.value, dim, e.line, e.column)?,
            None => VolumeSpec::BusemannHausdorff,
        };
        let reference_volume = match entries.get("volume0") {
            Some(e) => parse_volume_at(e.value, dim, e.line, e.column)?,
            None => VolumeSpec::Density(Expr::Num(1.0)),
        };
        let rho = match entries.get("rho") {
            Some(e) => parse_rho_at(e.value, dim, e.line, e.column)?,
            None => RhoSpec::Classical,
        };
        let potential = match entries.get("f") {
            Some(e) => Some(parse_x_only(e.value, dim, e.line, e.column, "f")?),
            None => None,
        };
        Ok(Self {
            dim,
            metric,
            volume,
            reference_volume,
            rho,
            potential,
        })
    }

    /// Checks `F(x, λy) = λ F(x, y)` (and the same for a custom `ρ`) at
    /// seeded random points for `λ ∈ {0.5, 2, 3}`.
    pub fn validate_homogeneity(&self, samples: usize, seed: u64) -> CheckReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut check = CheckBuilder::new("homogeneity", 1e-12);
        for _ in 0..samples.max(1) {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-0.9..0.9)).collect();
            let y: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let Ok(point) = ChartPoint::new(x.clone(), y.clone()) else {
                continue;
            };
            let result = (|| -> Result<Sample, String> {
                let f = |yy: &[f64]| eval_f64(&self.metric, &x, yy, None).map_err(|e| e.to_string());
                let rho = |yy: &[f64], fv: f64| match &self.rho {
                    RhoSpec::Custom(e) => eval_f64(e, &x, yy, Some(fv)).map(Some).map_err(|e| e.to_string()),
                    _ => Ok(None),
                };
                let f1 = f(&y)?;
                let r1 = rho(&y, f1)?;
                let mut worst = Sample::new(0.0, 0.0, vec![]);
                for (k, lambda) in [0.5, 2.0, 3.0].into_iter().enumerate() {
                    let ly: Vec<f64> = y.iter().map(|v| v * lambda).collect();
                    let fl = f(&ly)?;
                    let rel = (fl - lambda * f1).abs() / (lambda * f1).abs().max(f64::MIN_POSITIVE);
                    if rel > worst.raw {
                        worst = Sample::new(rel, 0.0, vec![0, k]);
                    }
                    if let Some(r1) = r1 {
                        let rl = rho(&ly, fl)?.unwrap_or(0.0);
                        let rel = (rl - lambda * r1).abs() / (lambda * r1).abs().max(1.0);
                        if rel > worst.raw {
                            worst = Sample::new(rel, 0.0, vec![1, k]);
                        }
                    }
                }
                Ok(worst)
            })();
            check.record_result(&point, result);
        }
        check.note("slot = [0 for F | 1 for rho, lambda index into (0.5, 2, 3)]");
        check.finish()
    }
}

fn parse_x_only(text: &str, dim: usize, line: usize, column: usize, what: &str) -> Result<Expr, ParseError> {
    let e = parse_expr(text, dim, line, column)?;
    if e.depends_on_direction() {
        return Err(error(
            ParseErrorKind::InvalidValue,
            line,
            column,
            format!("{what} may only depend on x"),
        ));
    }
    Ok(e)
}

fn parse_volume_at(text: &str, dim: usize, line: usize, column: usize) -> Result<VolumeSpec, ParseError> {
    match text {
        "bh" => Ok(VolumeSpec::BusemannHausdorff),
        "riemannian_det" => Ok(VolumeSpec::RiemannianDet),
        _ => match text.strip_prefix("expr:") {
            Some(rest) => {
                let offset = text.len() - rest.trim_start().len();
                parse_x_only(rest.trim_start(), dim, line, column + offset, "volume density")
                    .map(VolumeSpec::Density)
            }
            None => Err(error(
                ParseErrorKind::InvalidValue,
                line,
                column,
                format!("unknown volume '{text}' (bh | riemannian_det | expr: ...)"),
            )),
        },
    }
}

fn parse_rho_at(text: &str, dim: usize, line: usize, column: usize) -> Result<RhoSpec, ParseError> {
    let (head, rest) = match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], &text[i..]),
        None => (text, ""),
    };
    let body = rest.trim_start();
    let body_col = column + text.len() - body.len();
    let assignment = |name: &str| -> Result<Expr, ParseError> {
        let Some(eq) = body.strip_prefix(name).map(str::trim_start).and_then(|s| s.strip_prefix('=')) else {
            return Err(error(
                ParseErrorKind::Syntax,
                line,
                body_col,
                format!("expected '{name}=<expr>'"),
            ));
        };
        let expr = eq.trim_start();
        parse_expr(expr, dim, line, body_col + body.len() - expr.len())
    };
    match head {
        "classical" if body.is_empty() => Ok(RhoSpec::Classical),
        "weighted" if body.is_empty() => Ok(RhoSpec::Weighted { u: None }),
        "weighted" => Ok(RhoSpec::Weighted { u: Some(assignment("U")?) }),
        "directional" => Ok(RhoSpec::Directional { v: assignment("V")? }),
        "custom" => Ok(RhoSpec::Custom(parse_expr(body, dim, line, body_col)?)),
        _ => Err(error(
            ParseErrorKind::InvalidValue,
            line,
            column,
            format!("unknown rho '{text}' (classical | weighted U=... | directional V=... | custom ...)"),
        )),
    }
}

/// Parses a `rho` value such as `custom 0.3*y[1] + 0.1*F`.
pub fn parse_rho(text: &str, dim: usize) -> Result<RhoSpec, ParseError> {
    parse_rho_at(text.trim(), dim, 1, 1)
}

/// Parses a `volume` value such as `expr: 1 + dot_xx`.
pub fn parse_volume(text: &str, dim: usize) -> Result<VolumeSpec, ParseError> {
    parse_volume_at(text.trim(), dim, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;

    const RANDERS: &str = "# Randers example\ndim = 2\nF = sqrt(dot_yy) + dot_xy / sqrt(1 + dot_xx)\n";

    #[test]
    fn euclidean_defaults() {
        let s = MetricSpec::parse("dim = 2\nF = sqrt(dot_yy)").unwrap();
        assert_eq!(s.dim, 2);
        assert_eq!(s.volume, VolumeSpec::BusemannHausdorff);
        assert_eq!(s.reference_volume, VolumeSpec::Density(Expr::Num(1.0)));
        assert_eq!(s.rho, RhoSpec::Classical);
        assert_eq!(s.potential, None);
    }

    #[test]
    fn full_spec() {
        let text = "dim = 2\nF = sqrt(dot_yy)\nvolume = expr: 1 + dot_xx  # density\nvolume0 = riemannian_det\nrho = weighted U=0.5*y[2]\nf = x[1]";
        let s = MetricSpec::parse(text).unwrap();
        assert!(matches!(s.volume, VolumeSpec::Density(_)));
        assert_eq!(s.reference_volume, VolumeSpec::RiemannianDet);
        assert_eq!(s.rho.to_string(), "weighted U=0.5 * y[2]");
        assert_eq!(s.potential, Some(Expr::X(0)));
    }

    #[test]
    fn randers_round_trip() {
        let s = MetricSpec::parse(RANDERS).unwrap();
        let again = MetricSpec::parse(&s.to_string()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn rho_variants() {
        assert_eq!(parse_rho("classical", 2).unwrap(), RhoSpec::Classical);
        assert_eq!(
            parse_rho("directional V=F", 2).unwrap(),
            RhoSpec::Directional { v: Expr::Metric }
        );
        assert_eq!(parse_rho("custom y[1]", 2).unwrap(), RhoSpec::Custom(Expr::Y(0)));
        assert!(parse_rho("directional F", 2).is_err());
        assert!(parse_rho("bogus", 2).is_err());
        assert!(parse_rho("custom y[3]", 2).is_err());
    }

    #[test]
    fn diagnostics() {
        let e = MetricSpec::parse("dim = 2\nF = x[3]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::IndexOutOfRange);
        assert_eq!((e.line, e.column), (2, 7));

        let e = MetricSpec::parse("dim = 2\nG = 1").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownKey);
        assert_eq!(MetricSpec::parse("F = 1").unwrap_err().kind, ParseErrorKind::MissingKey);
        assert_eq!(MetricSpec::parse("dim = 2").unwrap_err().kind, ParseErrorKind::MissingKey);
        assert_eq!(
            MetricSpec::parse("dim = 2\ndim = 3\nF = 1").unwrap_err().kind,
            ParseErrorKind::DuplicateKey
        );
        assert_eq!(
            MetricSpec::parse("dim = 2\nF = F").unwrap_err().kind,
            ParseErrorKind::InvalidValue
        );
        assert_eq!(
            MetricSpec::parse("dim = 2\nF = sqrt(dot_yy)\nvolume = expr: y[1]").unwrap_err().kind,
            ParseErrorKind::InvalidValue
        );
        assert_eq!(
            MetricSpec::parse("dim = 2\nF = sqrt(dot_yy)\nf = dot_xy").unwrap_err().kind,
            ParseErrorKind::InvalidValue
        );
        assert_eq!(MetricSpec::parse("dim = two\nF = 1").unwrap_err().kind, ParseErrorKind::InvalidValue);
        assert_eq!(MetricSpec::parse("dim 2").unwrap_err().kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn homogeneity_checks() {
        let euclid = MetricSpec::parse("dim = 2\nF = sqrt(dot_yy)").unwrap();
        let r = euclid.validate_homogeneity(10, 1);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.max_residual <= 1e-12);

        let randers = MetricSpec::parse(RANDERS).unwrap();
        let r = randers.validate_homogeneity(10, 1);
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");

        let quadratic = MetricSpec::parse("dim = 2\nF = dot_yy").unwrap();
        let r = quadratic.validate_homogeneity(10, 1);
        assert_eq!(r.verdict, Verdict::Fail);
        // λ = 3: |9 - 3| / 3 = 2
        assert!((r.max_residual - 2.0).abs() < 1e-12);

        let mut custom = euclid.clone();
        custom.rho = parse_rho("custom dot_yy", 2).unwrap();
        assert_eq!(custom.validate_homogeneity(5, 2).verdict, Verdict::Fail);
    }
}
