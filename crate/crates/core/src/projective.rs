//! Projectively deformed sprays `PG = G − ρ y` for the supported choices of
//! the factor `ρ`, and their curvature.

use std::sync::Arc;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::geometry::{volume_density, Derivative, MetricGeometry, Quadrature, Slot, Spray, TensorJet};
use crate::jets::Jet;
use crate::lang::{eval_jet, Expr, MetricSpec, RhoSpec, VolumeSpec};

use Slot::{Lower, Upper};

/// A volume form together with the metric whose `F` it is built from
/// (relevant for the Busemann-Hausdorff and determinant forms).
#[derive(Debug, Clone)]
pub struct VolumeSource {
    pub metric: Arc<MetricSpec>,
    pub form: VolumeSpec,
}

impl VolumeSource {
    pub fn new(metric: Arc<MetricSpec>, form: VolumeSpec) -> Self {
        Self { metric, form }
    }

    /// Constant density one.
    pub fn euclidean(metric: Arc<MetricSpec>) -> Self {
        Self::new(metric, VolumeSpec::Density(Expr::Num(1.0)))
    }

    pub fn density(&self, chart: &Chart, quad: &Quadrature) -> Result<Jet> {
        volume_density(&self.metric, &self.form, chart, quad)
    }
}

/// Everything needed to evaluate `ρ` at a point.
#[derive(Debug, Clone)]
pub struct RhoSetting {
    pub kind: RhoSpec,
    /// Volume whose S-curvature gives the classical `ρ = S/(n+1)`.
    pub volume: VolumeSource,
    /// Reference volume `σ₀` of the weighted construction.
    pub reference: VolumeSource,
    /// `f(x)` contributing `f;₀ = yᵐ ∂ₘ f` to the weighted `ρ`.
    pub potential: Option<Expr>,
}

impl RhoSetting {
    pub fn from_spec(spec: &Arc<MetricSpec>) -> Self {
        Self {
            kind: spec.rho.clone(),
            volume: VolumeSource::new(spec.clone(), spec.volume.clone()),
            reference: VolumeSource::new(spec.clone(), spec.reference_volume.clone()),
            potential: spec.potential.clone(),
        }
    }

    pub fn with_kind(mut self, kind: RhoSpec) -> Self {
        self.kind = kind;
        self
    }

    /// Uses the volumes of `other`, so both settings see the same `σ` and
    /// `σ₀` as functions of `x`.
    pub fn sharing_volumes(mut self, other: &RhoSetting) -> Self {
        self.volume = other.volume.clone();
        self.reference = other.reference.clone();
        self
    }

    pub fn evaluate(&self, geo: &MetricGeometry, quad: &Quadrature) -> Result<Jet> {
        let n = geo.dim() as f64;
        let chart = geo.chart();
        match &self.kind {
            RhoSpec::Classical => {
                let sigma = self.volume.density(chart, quad)?;
                Ok(geo.spray().s_curvature(&sigma)?.scale(1.0 / (n + 1.0)))
            }
            RhoSpec::Weighted { u } => {
                let mut rho = weighted_s(geo, &self.reference, quad)?.scale(1.0 / (n + 1.0));
                if let Some(u) = u {
                    rho = rho + eval_jet(u, chart, Some(geo.metric()))?;
                }
                if let Some(f) = &self.potential {
                    rho = rho + chart.along_direction(&eval_jet(f, chart, None)?)?;
                }
                Ok(rho)
            }
            RhoSpec::Directional { v } => directional_derivative(geo.spray(), &eval_jet(v, chart, Some(geo.metric()))?),
            RhoSpec::Custom(e) => Ok(eval_jet(e, chart, Some(geo.metric()))?),
        }
    }
}

/// `𝕊 = S + yᵐ∂ₘ ln(σ/σ₀) = Nᵐₘ − yᵐ∂ₘ ln σ₀`, which shifts by exactly
/// `(n+1)P` under `G ↦ G + P y`.
pub fn weighted_s(geo: &MetricGeometry, reference: &VolumeSource, quad: &Quadrature) -> Result<Jet> {
    geo.spray().s_curvature(&reference.density(geo.chart(), quad)?)
}

/// Spray directional derivative `𝒟V = (ln V)_{.r} Gʳ`.
pub fn directional_derivative(spray: &Spray, v: &Jet) -> Result<Jet> {
    if !(v.value() > 0.0) {
        return Err(Error::NonPositive("V", v.value()));
    }
    let ln_v = v.ln()?;
    let chart = spray.chart();
    let mut acc = chart.constant(0.0);
    for r in 0..spray.dim() {
        acc = acc + chart.dy(&ln_v, r)? * spray.coefficients().get(&[r]);
    }
    Ok(acc)
}

/// Ricci curvature of `PG` computed as a trace, and from the base spray.
#[derive(Debug, Clone)]
pub struct RicciForms {
    /// `PR^m_m`
    pub direct: Jet,
    /// `Ric + (n−1)(ρ_{|0} + ρ²)` with `|` the base spray's derivative.
    pub closed: Jet,
    pub discrepancy: f64,
}

/// The spray `PG = G − ρ y` with its factor.
#[derive(Debug, Clone)]
pub struct ProjectiveSpray {
    rho: Jet,
    spray: Spray,
}

impl ProjectiveSpray {
    pub fn new(base: &Spray, rho: Jet) -> Self {
        let spray = base.projective_change(&-&rho);
        Self { rho, spray }
    }

    pub fn rho(&self) -> &Jet {
        &self.rho
    }

    pub fn spray(&self) -> &Spray {
        &self.spray
    }

    /// `B − ρ_{.k.l}δⁱⱼ − ρ_{.j.l}δⁱₖ − ρ_{.j.k}δⁱₗ − ρ_{.j.k.l}yⁱ`, the Berwald
    /// curvature of `PG` rebuilt from that of the base spray.
    pub fn berwald_from_base(&self, base: &Spray) -> Result<TensorJet> {
        let chart = base.chart();
        let n = base.dim();
        let b = base.berwald_curvature()?;
        let d1: Vec<Jet> = (0..n).map(|j| chart.dy(&self.rho, j)).collect::<Result<_>>()?;
        let d2: Vec<Vec<Jet>> = d1
            .iter()
            .map(|r| (0..n).map(|k| chart.dy(r, k)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let y = chart.y();
        TensorJet::from_fn(n, &[Lower, Upper, Lower, Lower], -1, |idx| {
            let (j, i, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut acc = b.get(idx) - &(chart.dy(&d2[j][k], l)? * &y[i]);
            if i == j {
                acc = acc - &d2[k][l];
            }
            if i == k {
                acc = acc - &d2[j][l];
            }
            if i == l {
                acc = acc - &d2[j][k];
            }
            Ok(acc)
        })
    }

    pub fn ricci_forms(&self, base: &Spray) -> Result<RicciForms> {
        let n = base.dim() as f64;
        let direct = self.spray.ricci()?;
        let rho_0 = base.scalar_derivative(&self.rho, 1, Derivative::HorizontalAlongDirection)?;
        let correction = rho_0.get(&[]) + &(&self.rho * &self.rho);
        let closed = base.ricci()? + correction.scale(n - 1.0);
        let discrepancy = (direct.value() - closed.value()).abs();
        Ok(RicciForms {
            direct,
            closed,
            discrepancy,
        })
    }
}

/// `Q_{ij} = Q_{i.j} − Q_{j.i}` with `Qᵢ = ∂P/∂xⁱ − Nᵐᵢ ∂P/∂yᵐ − P ∂P/∂yⁱ`.
pub fn c_projective_tensor(spray: &Spray, p: &Jet) -> Result<TensorJet> {
    let chart = spray.chart();
    let n = spray.dim();
    let nl = spray.nonlinear()?;
    let dp: Vec<Jet> = (0..n).map(|m| chart.dy(p, m)).collect::<Result<_>>()?;
    let q: Vec<Jet> = (0..n)
        .map(|i| {
            let mut acc = chart.dx(p, i)? - &(p * &dp[i]);
            for (m, dpm) in dp.iter().enumerate() {
                acc = acc - nl.get(&[m, i]) * dpm;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    TensorJet::from_fn(n, &[Lower, Lower], 0, |ij| {
        Ok(chart.dy(&q[ij[0]], ij[1])? - chart.dy(&q[ij[1]], ij[0])?)
    })
}

/// `(ln Ṽ − ln V)_{.r} Gʳ`, where `V` and `Ṽ` are the same expression
/// evaluated with the metrics of `geo` and `other`, and `G` is the spray of
/// `geo`. Both geometries must be expanded at the same point and order.
pub fn directional_invariance(geo: &MetricGeometry, other: &MetricGeometry, v: &Expr) -> Result<Jet> {
    let chart = geo.chart();
    let va = eval_jet(v, chart, Some(geo.metric()))?;
    let vb = eval_jet(v, other.chart(), Some(other.metric()))?;
    for value in [va.value(), vb.value()] {
        if !(value > 0.0) {
            return Err(Error::NonPositive("V", value));
        }
    }
    let diff = vb.ln()? - va.ln()?;
    let mut acc = chart.constant(0.0);
    for r in 0..geo.dim() {
        acc = acc + chart.dy(&diff, r)? * geo.spray().coefficients().get(&[r]);
    }
    Ok(acc)
}
