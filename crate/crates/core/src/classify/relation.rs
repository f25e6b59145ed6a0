use std::sync::Arc;

use super::classes::{difference_sample, geometry_at, require_order};
use super::sample::{per_point, sampled_reports, Band, SampleSet, Settings, PASS_TOLERANCE};
use crate::error::{Error, Result};
use crate::geometry::{MetricGeometry, TensorJet};
use crate::jets::Jet;
use crate::lang::{MetricSpec, RhoSpec};
use crate::projective::{weighted_s, ProjectiveSpray, RhoSetting};
use crate::report::{CheckBuilder, CheckReport, Sample, Verdict};

/// Tolerance on the normalized antisymmetry residual `Δⁱyʲ − Δʲyⁱ`.
pub const RELATION_TOLERANCE: f64 = 1e-9;
/// Tolerance on the shift of `𝕊` against the recovered factor.
pub const SHIFT_TOLERANCE: f64 = 1e-8;

/// The factor `P` with `G(a) = G(b) + P y` as a jet, recovered by dividing
/// `Δˢ = Gˢ(a) − Gˢ(b)` by the largest `yˢ`, together with the
/// antisymmetry residual of `Δ`.
pub fn projective_factor(a: &MetricGeometry, b: &MetricGeometry) -> Result<(Jet, Sample)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let n = a.dim();
    let ga = a.spray().coefficients();
    let gb = b.spray().coefficients();
    let delta = ga.sub(gb)?;
    let y = a.chart().point().y();
    let s = (0..n).max_by(|&i, &j| y[i].abs().total_cmp(&y[j].abs())).unwrap();
    let p = delta.get(&[s]).checked_div(&a.chart().y()[s])?;
    let mut best = (0.0f64, vec![0, 0]);
    for i in 0..n {
        for j in i + 1..n {
            let r = (delta.value(&[i]) * y[j] - delta.value(&[j]) * y[i]).abs();
            if r > best.0 {
                best = (r, vec![i, j]);
            }
        }
    }
    Ok((p, Sample::new(best.0, ga.norm().max(gb.norm()), best.1)))
}

/// Outcome of testing whether two metrics share their geodesics.
#[derive(Debug, Clone)]
pub struct Relation {
    pub report: CheckReport,
    /// Value of `P` at each sample, `None` where evaluation failed.
    pub factors: Vec<Option<f64>>,
}

impl Relation {
    pub fn related(&self) -> bool {
        self.report.verdict == Verdict::Pass
    }
}

pub fn projective_relation(
    a: &Arc<MetricSpec>,
    b: &Arc<MetricSpec>,
    samples: &SampleSet,
    settings: &Settings,
) -> Result<Relation> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    require_order(settings, 2)?;
    let results = per_point(samples, |p| {
        let (factor, sample) = projective_factor(&geometry_at(a, p, settings)?, &geometry_at(b, p, settings)?)?;
        Ok((factor.value(), sample))
    });
    let mut builder = CheckBuilder::new("projective_relation", RELATION_TOLERANCE);
    let mut factors = Vec::with_capacity(results.len());
    for (p, r) in samples.points().iter().zip(results) {
        factors.push(r.as_ref().ok().map(|(f, _)| *f));
        builder.record_result(p, r.map(|(_, s)| s));
    }
    Ok(Relation {
        report: builder.finish(),
        factors,
    })
}

fn unavailable(name: &str, tolerance: f64, reason: &str) -> CheckReport {
    let mut b = CheckBuilder::new(name, tolerance);
    b.note(reason);
    b.finish()
}

pub const INVARIANCE_CHECKS: [&str; 4] = [
    "douglas_invariance",
    "projective_spray_invariance",
    "projective_ricci_invariance",
    "weighted_s_shift",
];

/// Equality of the projective invariants of a projectively related pair.
/// Both metrics use the factor settings and volumes of `a`.
pub fn invariance_suite(
    a: &Arc<MetricSpec>,
    b: &Arc<MetricSpec>,
    rho: Option<&RhoSpec>,
    samples: &SampleSet,
    settings: &Settings,
) -> Result<Vec<CheckReport>> {
    require_order(settings, 6)?;
    let relation = projective_relation(a, b, samples, settings)?;
    let mut reports = vec![relation.report.clone()];
    if !relation.related() {
        for name in INVARIANCE_CHECKS {
            reports.push(unavailable(
                name,
                PASS_TOLERANCE,
                "metrics are not projectively related on the samples",
            ));
        }
        return Ok(reports);
    }
    let mut setting = RhoSetting::from_spec(a);
    if let Some(r) = rho {
        setting = setting.with_kind(r.clone());
    }
    let n = a.dim as f64;
    let checks = [
        (INVARIANCE_CHECKS[0], Band::Binary(PASS_TOLERANCE), false),
        (INVARIANCE_CHECKS[1], Band::Binary(PASS_TOLERANCE), false),
        (INVARIANCE_CHECKS[2], Band::Binary(PASS_TOLERANCE), false),
        (INVARIANCE_CHECKS[3], Band::Binary(SHIFT_TOLERANCE), false),
    ];
    let mut more = sampled_reports(samples, &checks, |p| {
        let ga = geometry_at(a, p, settings)?;
        let gb = geometry_at(b, p, settings)?;
        let quad = &settings.quadrature;
        let douglas = difference_sample(&ga.spray().douglas_curvature()?, &gb.spray().douglas_curvature()?)?;
        let pa = ProjectiveSpray::new(ga.spray(), setting.evaluate(&ga, quad)?);
        let pb = ProjectiveSpray::new(gb.spray(), setting.evaluate(&gb, quad)?);
        let spray = difference_sample(pa.spray().coefficients(), pb.spray().coefficients())?;
        let ricci = difference_sample(
            &TensorJet::scalar(ga.dim(), pa.spray().ricci()?, 2),
            &TensorJet::scalar(gb.dim(), pb.spray().ricci()?, 2),
        )?;
        let (factor, _) = projective_factor(&ga, &gb)?;
        let shift = (weighted_s(&ga, &setting.reference, quad)? - weighted_s(&gb, &setting.reference, quad)?)
            .scale(1.0 / (n + 1.0));
        let shift = difference_sample(
            &TensorJet::scalar(ga.dim(), shift, 1),
            &TensorJet::scalar(ga.dim(), factor, 1),
        )?;
        Ok(vec![douglas, spray, ricci, shift])
    });
    for r in &mut more {
        r.notes.push(format!("rho = {} with the volumes of the first metric", setting.kind));
    }
    reports.append(&mut more);
    Ok(reports)
}
