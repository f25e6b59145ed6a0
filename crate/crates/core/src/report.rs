//! Residual bookkeeping shared by every check the tool runs.

use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::chart::ChartPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

/// Asserted checks decide the exit status; findings are reported only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckRole {
    Assert,
    Finding,
}

/// Where the worst residual of a check was observed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slot: Vec<usize>,
}

/// One point's contribution to a check: the raw residual, the magnitude it
/// is measured against, and the tensor slot where it was largest.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub raw: f64,
    pub scale: f64,
    pub slot: Vec<usize>,
}

impl Sample {
    pub fn new(raw: f64, scale: f64, slot: Vec<usize>) -> Self {
        Self { raw, scale, slot }
    }

    /// Residual relative to `1 + scale`.
    pub fn normalized(&self) -> f64 {
        self.raw / (1.0 + self.scale)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub tolerance: f64,
    /// Normalized residual at or above which the verdict is `fail`; between
    /// `tolerance` and this value the verdict is `indeterminate`.
    pub fail_threshold: f64,
    /// Largest normalized residual `raw / (1 + scale)`.
    pub max_residual: f64,
    pub max_raw_residual: f64,
    pub verdict: Verdict,
    pub role: CheckRole,
    pub witness: Option<Witness>,
    /// Normalized residual per sample point, `None` where evaluation failed.
    pub residuals: Vec<Option<f64>>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub runtime_seconds: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Accumulates per-point samples and produces a [`CheckReport`].
pub struct CheckBuilder {
    name: String,
    tolerance: f64,
    fail_threshold: f64,
    role: CheckRole,
    entries: Vec<(Vec<f64>, Vec<f64>, Result<Sample, String>)>,
    notes: Vec<String>,
    started: Instant,
}

impl CheckBuilder {
    /// Binary check: anything above `tolerance` fails.
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self::with_band(name, tolerance, tolerance)
    }

    /// Three-way check with an indeterminate band `(tolerance, fail_threshold)`.
    pub fn with_band(name: impl Into<String>, tolerance: f64, fail_threshold: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            fail_threshold: fail_threshold.max(tolerance),
            role: CheckRole::Assert,
            entries: Vec::new(),
            notes: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn finding(mut self) -> Self {
        self.role = CheckRole::Finding;
        self
    }

    pub fn record(&mut self, point: &ChartPoint, sample: Sample) {
        self.entries
            .push((point.x().to_vec(), point.y().to_vec(), Ok(sample)));
    }

    pub fn record_at(&mut self, x: &[f64], y: &[f64], sample: Sample) {
        self.entries.push((x.to_vec(), y.to_vec(), Ok(sample)));
    }

    pub fn record_result(&mut self, point: &ChartPoint, sample: Result<Sample, String>) {
        self.entries
            .push((point.x().to_vec(), point.y().to_vec(), sample));
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish(self) -> CheckReport {
        let mut max_residual = 0.0f64;
        let mut max_raw = 0.0f64;
        let mut witness = None;
        let mut failures = Vec::new();
        let mut residuals = Vec::with_capacity(self.entries.len());
        for (x, y, entry) in self.entries {
            match entry {
                Ok(s) => {
                    let r = s.normalized();
                    residuals.push(Some(r));
                    max_raw = max_raw.max(s.raw);
                    // NaN residuals always become the witness
                    if witness.is_none() || r > max_residual || r.is_nan() {
                        max_residual = if r.is_nan() { f64::NAN } else { r.max(max_residual) };
                        witness = Some(Witness { x, y, slot: s.slot });
                    }
                }
                Err(e) => {
                    residuals.push(None);
                    failures.push(format!("at x={x:?}, y={y:?}: {e}"));
                }
            }
        }
        let verdict = if !failures.is_empty() || residuals.is_empty() || max_residual.is_nan() {
            Verdict::Indeterminate
        } else if max_residual <= self.tolerance {
            Verdict::Pass
        } else if max_residual >= self.fail_threshold {
            Verdict::Fail
        } else {
            Verdict::Indeterminate
        };
        CheckReport {
            name: self.name,
            tolerance: self.tolerance,
            fail_threshold: self.fail_threshold,
            max_residual,
            max_raw_residual: max_raw,
            verdict,
            role: self.role,
            witness,
            residuals,
            failures,
            notes: self.notes,
            runtime_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Combined verdict of the asserted checks: any failure wins, then any
/// indeterminate result.
pub fn overall_verdict<'a>(checks: impl IntoIterator<Item = &'a CheckReport>) -> Verdict {
    let mut verdict = Verdict::Pass;
    for c in checks.into_iter().filter(|c| c.role == CheckRole::Assert) {
        match c.verdict {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Indeterminate => verdict = Verdict::Indeterminate,
            Verdict::Pass => {}
        }
    }
    verdict
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ChartPoint {
        ChartPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn verdict_bands() {
        let mut b = CheckBuilder::with_band("c", 1e-7, 1e-3);
        b.record(&p(), Sample::new(1e-9, 0.0, vec![]));
        assert_eq!(b.finish().verdict, Verdict::Pass);

        let mut b = CheckBuilder::with_band("c", 1e-7, 1e-3);
        b.record(&p(), Sample::new(1e-5, 0.0, vec![]));
        assert_eq!(b.finish().verdict, Verdict::Indeterminate);

        let mut b = CheckBuilder::with_band("c", 1e-7, 1e-3);
        b.record(&p(), Sample::new(1e-9, 0.0, vec![]));
        b.record(&p(), Sample::new(2.0, 1.0, vec![1, 0]));
        let r = b.finish();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.max_residual, 1.0);
        assert_eq!(r.max_raw_residual, 2.0);
        assert_eq!(r.witness.unwrap().slot, vec![1, 0]);
    }

    #[test]
    fn evaluation_failure_is_indeterminate() {
        let mut b = CheckBuilder::new("c", 1e-7);
        b.record(&p(), Sample::new(0.0, 0.0, vec![]));
        b.record_result(&p(), Err("boom".into()));
        let r = b.finish();
        assert_eq!(r.verdict, Verdict::Indeterminate);
        assert_eq!(r.residuals, vec![Some(0.0), None]);
    }

    #[test]
    fn findings_do_not_affect_overall() {
        let mut b = CheckBuilder::new("f", 1e-7).finding();
        b.record(&p(), Sample::new(1.0, 0.0, vec![]));
        let finding = b.finish();
        let mut b = CheckBuilder::new("a", 1e-7);
        b.record(&p(), Sample::new(0.0, 0.0, vec![]));
        let asserted = b.finish();
        assert_eq!(overall_verdict([&finding, &asserted]), Verdict::Pass);
    }
}
