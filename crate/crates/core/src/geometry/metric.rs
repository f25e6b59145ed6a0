use std::sync::Arc;

use super::linalg;
use super::spray::Spray;
use super::tensor::{Slot, TensorJet};
use super::volume::{volume_density, Quadrature};
use crate::chart::{Chart, ChartPoint};
use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::lang::{eval_jet, MetricSpec, VolumeSpec};

use Slot::{Lower, Upper};

/// `gᵢⱼ = ½ ∂²F²/∂yⁱ∂yʲ` from a jet of `F`.
pub fn fundamental_tensor(chart: &Chart, f: &Jet) -> Result<TensorJet> {
    let energy = f * f;
    let first: Vec<Jet> = (0..chart.dim())
        .map(|i| chart.dy(&energy, i))
        .collect::<Result<_>>()?;
    TensorJet::from_fn(chart.dim(), &[Lower, Lower], 0, |ij| {
        Ok(chart.dy(&first[ij[0]], ij[1])?.scale(0.5))
    })
}

/// Result of testing whether the flag curvature is independent of the
/// flag: `K = Ric / ((n−1)F²)` and the largest entry of
/// `Rⁱₖ − K F² hⁱₖ`.
#[derive(Debug, Clone)]
pub struct ScalarFlag {
    pub curvature: f64,
    pub residual: f64,
    pub scale: f64,
    pub slot: Vec<usize>,
}

/// A Finsler metric expanded at one point of the slit tangent bundle,
/// together with its geodesic spray.
#[derive(Debug)]
pub struct MetricGeometry {
    spec: Arc<MetricSpec>,
    chart: Arc<Chart>,
    metric: Jet,
    g: TensorJet,
    g_inv: TensorJet,
    det: Jet,
    spray: Spray,
}

impl MetricGeometry {
    pub fn new(spec: Arc<MetricSpec>, point: ChartPoint, order: usize) -> Result<Self> {
        if point.dim() != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                found: point.dim(),
            });
        }
        if order < 2 {
            return Err(Error::Jet(crate::jets::JetError::InsufficientOrder {
                needed: 2,
                available: order,
            }));
        }
        let chart = Arc::new(Chart::new(point, order)?);
        let n = chart.dim();
        let metric = eval_jet(&spec.metric, &chart, None)?;
        if !(metric.value() > 0.0) {
            return Err(Error::MetricInvalid(format!("F = {} is not positive", metric.value())));
        }
        let g = fundamental_tensor(&chart, &metric)?;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g.value(&[i, j])).collect()).collect();
        if !linalg::is_positive_definite(&rows) {
            return Err(Error::MetricInvalid(format!(
                "fundamental tensor {rows:?} is not positive definite"
            )));
        }
        let jet_rows: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| g.get(&[i, j]).clone()).collect()).collect();
        let (inv, det) = linalg::invert(&jet_rows)?;
        let g_inv = TensorJet::from_fn(n, &[Upper, Upper], 0, |ij| Ok(inv[ij[0]][ij[1]].clone()))?;

        // Gˡ = ¼ gˡⁱ (yᵏ ∂²F²/∂xᵏ∂yⁱ − ∂F²/∂xⁱ)
        let energy = &metric * &metric;
        let bracket: Vec<Jet> = (0..n)
            .map(|i| Ok(chart.along_direction(&chart.dy(&energy, i)?)? - chart.dx(&energy, i)?))
            .collect::<Result<_>>()?;
        let coeffs = TensorJet::from_fn(n, &[Upper], 2, |l| {
            let mut acc = chart.constant(0.0);
            for (i, b) in bracket.iter().enumerate() {
                acc = acc + g_inv.get(&[l[0], i]) * b;
            }
            Ok(acc.scale(0.25))
        })?;
        let spray = Spray::new(chart.clone(), coeffs);
        Ok(Self {
            spec,
            chart,
            metric,
            g,
            g_inv,
            det,
            spray,
        })
    }

    pub fn spec(&self) -> &Arc<MetricSpec> {
        &self.spec
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `F`
    pub fn metric(&self) -> &Jet {
        &self.metric
    }

    /// `gᵢⱼ`
    pub fn fundamental_tensor(&self) -> &TensorJet {
        &self.g
    }

    /// `gⁱʲ`
    pub fn inverse(&self) -> &TensorJet {
        &self.g_inv
    }

    /// `det gᵢⱼ`
    pub fn determinant(&self) -> &Jet {
        &self.det
    }

    pub fn spray(&self) -> &Spray {
        &self.spray
    }

    /// `yᵢ = gᵢⱼ yʲ`
    pub fn lowered_direction(&self) -> TensorJet {
        let y = self.chart.y();
        TensorJet::from_fn(self.dim(), &[Lower], 1, |i| {
            let mut acc = self.chart.constant(0.0);
            for (j, yj) in y.iter().enumerate() {
                acc = acc + self.g.get(&[i[0], j]) * yj;
            }
            Ok(acc)
        })
        .expect("infallible")
    }

    /// Angular metric with one index raised, `hⁱₖ = δⁱₖ − yⁱyₖ/F²`.
    pub fn angular_mixed(&self) -> Result<TensorJet> {
        let lowered = self.lowered_direction();
        let inv_energy = (&self.metric * &self.metric).recip()?;
        let y = self.chart.y();
        TensorJet::from_fn(self.dim(), &[Upper, Lower], 0, |ik| {
            let delta = if ik[0] == ik[1] { 1.0 } else { 0.0 };
            Ok(-(&y[ik[0]] * lowered.get(&ik[1..]) * &inv_energy) + delta)
        })
    }

    /// Volume density `σ(x)` of the given volume form.
    pub fn volume(&self, volume: &VolumeSpec, quad: &Quadrature) -> Result<Jet> {
        volume_density(&self.spec, volume, &self.chart, quad)
    }

    /// S-curvature with respect to the given volume form.
    pub fn s_curvature(&self, volume: &VolumeSpec, quad: &Quadrature) -> Result<Jet> {
        self.spray.s_curvature(&self.volume(volume, quad)?)
    }

    /// Distortion `τ = ln(√det g / σ)`.
    pub fn distortion(&self, volume: &VolumeSpec, quad: &Quadrature) -> Result<Jet> {
        let sigma = self.volume(volume, quad)?;
        Ok(self.det.ln()?.scale(0.5) - sigma.ln()?)
    }

    pub fn scalar_flag(&self) -> Result<ScalarFlag> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::Unsupported("flag curvature in dimension 1".into()));
        }
        let r = self.spray.riemann()?;
        let ric = self.spray.ricci()?.value();
        let energy = self.metric.value().powi(2);
        let k = ric / ((n as f64 - 1.0) * energy);
        let h = self.angular_mixed()?;
        let mut residual = 0.0f64;
        let mut slot = vec![0, 0];
        for ik in r.indices() {
            let d = (r.value(&ik) - k * energy * h.value(&ik)).abs();
            if d > residual {
                residual = d;
                slot = ik;
            }
        }
        Ok(ScalarFlag {
            curvature: k,
            residual,
            scale: r.norm(),
            slot,
        })
    }
}
