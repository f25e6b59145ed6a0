use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::sample::{sampled_reports, Band, SampleSet, Settings};
use crate::chart::ChartPoint;
use crate::error::{Error, Result};
use crate::geometry::{Derivative, MetricGeometry, Spray, TensorJet};
use crate::jets::JetError;
use crate::lang::{MetricSpec, RhoSpec};
use crate::projective::{ProjectiveSpray, RhoSetting};
use crate::report::{CheckReport, Sample};

/// Curvature classes a metric can be tested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Berwald,
    WeaklyBerwald,
    IsotropicE,
    Douglas,
    Gdw,
    RQuadratic,
    PrQuadratic,
    GprQuadratic,
    ScalarFlag,
}

impl Class {
    pub const ALL: [Class; 9] = [
        Class::Berwald,
        Class::WeaklyBerwald,
        Class::IsotropicE,
        Class::Douglas,
        Class::Gdw,
        Class::RQuadratic,
        Class::PrQuadratic,
        Class::GprQuadratic,
        Class::ScalarFlag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Class::Berwald => "berwald",
            Class::WeaklyBerwald => "weakly_berwald",
            Class::IsotropicE => "isotropic_E",
            Class::Douglas => "douglas",
            Class::Gdw => "gdw",
            Class::RQuadratic => "r_quadratic",
            Class::PrQuadratic => "pr_quadratic",
            Class::GprQuadratic => "gpr_quadratic",
            Class::ScalarFlag => "scalar_flag",
        }
    }

    /// Smallest jet order at which the class residual has a value.
    pub fn min_order(self) -> usize {
        match self {
            Class::Berwald | Class::WeaklyBerwald | Class::IsotropicE => 5,
            Class::Douglas => 6,
            Class::Gdw | Class::RQuadratic | Class::GprQuadratic => 7,
            Class::PrQuadratic => 8,
            Class::ScalarFlag => 4,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Class {
    type Err = Error;

    /// Accepts `r_quadratic`, `r-quadratic`, `isotropic-e`, ...
    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Class::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::Unsupported(format!("unknown class '{s}'")))
    }
}

pub(crate) fn require_order(settings: &Settings, needed: usize) -> Result<()> {
    if settings.order < needed {
        return Err(Error::Jet(JetError::InsufficientOrder {
            needed,
            available: settings.order,
        }));
    }
    Ok(())
}

pub(crate) fn geometry_at(spec: &Arc<MetricSpec>, p: &ChartPoint, settings: &Settings) -> Result<MetricGeometry> {
    MetricGeometry::new(spec.clone(), p.clone(), settings.order)
}

/// Largest component of `t` measured against `scale`.
pub(crate) fn tensor_sample(t: &TensorJet, scale: f64) -> Sample {
    let (raw, slot) = t.max_abs();
    Sample::new(raw, scale, slot)
}

/// Largest componentwise difference, measured against the larger norm.
pub(crate) fn difference_sample(a: &TensorJet, b: &TensorJet) -> Result<Sample> {
    let (raw, slot) = a.max_difference(b)?;
    Ok(Sample::new(raw, a.norm().max(b.norm()), slot))
}

/// `PB_j^i_kl|0 − ρ_{.r} PB_j^r_kl yⁱ`, with `|` the base spray's
/// derivative, and `PB_|0` for scale.
pub(crate) fn gpr_residual(base: &Spray, ps: &ProjectiveSpray) -> Result<(TensorJet, TensorJet)> {
    let chart = base.chart();
    let n = base.dim();
    let pb = ps.spray().berwald_curvature()?;
    let pb0 = base.covariant_derivative(pb, Derivative::HorizontalAlongDirection)?;
    let drho: Vec<_> = (0..n).map(|r| chart.dy(ps.rho(), r)).collect::<Result<_>>()?;
    let y = chart.y();
    let residual = TensorJet::from_fn(n, pb0.valence(), 0, |idx| {
        let mut acc = chart.constant(0.0);
        for (r, d) in drho.iter().enumerate() {
            acc = acc + d * pb.get(&[idx[0], r, idx[2], idx[3]]);
        }
        Ok(pb0.get(idx) - &(acc * &y[idx[1]]))
    })?;
    Ok((residual, pb0))
}

/// `R_j^i_kl.m`
pub(crate) fn r_quadratic_tensor(spray: &Spray) -> Result<TensorJet> {
    spray.covariant_derivative(&spray.riemann_full()?, Derivative::Vertical)
}

/// `(residual, scale)` of the GDW test: the part of `D_{|0}` orthogonal to
/// `y` in its upper index.
fn gdw_sample(geo: &MetricGeometry) -> Result<Sample> {
    let spray = geo.spray();
    let chart = spray.chart();
    let n = geo.dim();
    let d = spray.douglas_curvature()?;
    let w = spray.covariant_derivative(&d, Derivative::HorizontalAlongDirection)?;
    let lowered = geo.lowered_direction();
    let energy = geo.metric().value().powi(2);
    let y = chart.point().y();
    let mut best = (0.0f64, vec![0; 4]);
    for idx in w.indices() {
        let (j, i, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        let t: f64 = (0..n).map(|r| lowered.value(&[r]) * w.value(&[j, r, k, l])).sum::<f64>() / energy;
        let res = (w.value(&idx) - t * y[i]).abs();
        if res > best.0 {
            best = (res, idx);
        }
    }
    Ok(Sample::new(best.0, w.norm(), best.1))
}

/// Isotropic mean Berwald test with `c` solved from the trace.
fn isotropic_e_sample(geo: &MetricGeometry) -> Result<(Sample, f64)> {
    let n = geo.dim();
    if n < 2 {
        return Err(Error::Unsupported("isotropic mean Berwald curvature in dimension 1".into()));
    }
    let e = geo.spray().mean_berwald()?;
    let g = geo.fundamental_tensor();
    let g_inv = geo.inverse();
    let f = geo.metric().value();
    let lowered = geo.lowered_direction();
    let trace: f64 = e.indices().map(|ij| g_inv.value(&ij) * e.value(&ij)).sum();
    let nf = n as f64;
    let c = 2.0 * f * trace / ((nf + 1.0) * (nf - 1.0));
    let mut best = (0.0f64, vec![0; 2]);
    for ij in e.indices() {
        let h = g.value(&ij) - lowered.value(&ij[..1]) * lowered.value(&ij[1..]) / (f * f);
        let res = (e.value(&ij) - 0.5 * (nf + 1.0) * c / f * h).abs();
        if res > best.0 {
            best = (res, ij);
        }
    }
    Ok((Sample::new(best.0, e.norm(), best.1), c))
}

pub(crate) fn class_sample(
    spec: &Arc<MetricSpec>,
    class: Class,
    rho: &RhoSetting,
    p: &ChartPoint,
    settings: &Settings,
) -> Result<Sample> {
    let geo = geometry_at(spec, p, settings)?;
    let spray = geo.spray();
    match class {
        Class::Berwald => {
            let scale = spray.connection()?.norm();
            Ok(tensor_sample(spray.berwald_curvature()?, scale))
        }
        Class::WeaklyBerwald => Ok(tensor_sample(&spray.mean_berwald()?, spray.berwald_curvature()?.norm())),
        Class::IsotropicE => Ok(isotropic_e_sample(&geo)?.0),
        Class::Douglas => Ok(tensor_sample(&spray.douglas_curvature()?, spray.berwald_curvature()?.norm())),
        Class::Gdw => gdw_sample(&geo),
        Class::RQuadratic => {
            let scale = spray.riemann_full()?.norm();
            Ok(tensor_sample(&r_quadratic_tensor(spray)?, scale))
        }
        Class::PrQuadratic => {
            let classical = rho.clone().with_kind(RhoSpec::Classical);
            let ps = ProjectiveSpray::new(spray, classical.evaluate(&geo, &settings.quadrature)?);
            let scale = ps.spray().riemann_full()?.norm();
            Ok(tensor_sample(&r_quadratic_tensor(ps.spray())?, scale))
        }
        Class::GprQuadratic => {
            let ps = ProjectiveSpray::new(spray, rho.evaluate(&geo, &settings.quadrature)?);
            let (res, pb0) = gpr_residual(spray, &ps)?;
            Ok(tensor_sample(&res, pb0.norm()))
        }
        Class::ScalarFlag => {
            let flag = geo.scalar_flag()?;
            Ok(Sample::new(flag.residual, flag.scale, flag.slot))
        }
    }
}

/// Sampled test of whether `spec` belongs to `class`. `rho` overrides the
/// metric's own factor for the generalized projective class.
pub fn classify(
    spec: &Arc<MetricSpec>,
    class: Class,
    rho: Option<&RhoSpec>,
    samples: &SampleSet,
    settings: &Settings,
) -> Result<CheckReport> {
    require_order(settings, class.min_order())?;
    let mut setting = RhoSetting::from_spec(spec);
    if let Some(r) = rho {
        setting = setting.with_kind(r.clone());
    }
    let mut report = sampled_reports(samples, &[(class.name(), Band::Classify, false)], |p| {
        Ok(vec![class_sample(spec, class, &setting, p, settings)?])
    })
    .remove(0);
    if class == Class::IsotropicE {
        let cs: Vec<f64> = samples
            .points()
            .iter()
            .filter_map(|p| isotropic_e_sample(&geometry_at(spec, p, settings).ok()?).ok())
            .map(|(_, c)| c)
            .collect();
        if let (Some(lo), Some(hi)) = (
            cs.iter().copied().reduce(f64::min),
            cs.iter().copied().reduce(f64::max),
        ) {
            report.notes.push(format!("c ranges over [{lo:.6e}, {hi:.6e}] across samples"));
        }
    }
    if class == Class::GprQuadratic {
        report.notes.push(format!("rho = {}", setting.kind));
    }
    if report.verdict == crate::report::Verdict::Indeterminate && report.failures.is_empty() {
        report
            .notes
            .push("residual lies between the pass and fail thresholds; more samples may decide".into());
    }
    Ok(report)
}
