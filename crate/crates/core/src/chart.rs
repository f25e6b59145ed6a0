//! Points of the slit tangent bundle and the jet variables seeded there.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::{Jet, JetContext};

/// Directions shorter than this are treated as lying on the zero section.
pub const MIN_DIRECTION_NORM: f64 = 1e-6;

/// A base point `x` and a nonzero direction `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartPoint {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ChartPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < MIN_DIRECTION_NORM {
            return Err(Error::InvalidPoint(format!(
                "|y| = {norm:e} is below {MIN_DIRECTION_NORM:e} (zero section)"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Same base point, direction scaled by `lambda`.
    pub fn with_scaled_direction(&self, lambda: f64) -> Result<Self> {
        Self::new(self.x.clone(), self.y.iter().map(|v| v * lambda).collect())
    }
}

/// The jet context of a chart point together with the seeded coordinate
/// jets `x¹..xⁿ` (variables `0..n`) and `y¹..yⁿ` (variables `n..2n`).
#[derive(Debug, Clone)]
pub struct Chart {
    ctx: JetContext,
    point: ChartPoint,
    x: Vec<Jet>,
    y: Vec<Jet>,
}

impl Chart {
    pub fn new(point: ChartPoint, order: usize) -> Result<Self> {
        let n = point.dim();
        let ctx = JetContext::new(2 * n, order)?;
        let x = (0..n)
            .map(|i| Jet::variable(&ctx, i, point.x[i]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let y = (0..n)
            .map(|i| Jet::variable(&ctx, n + i, point.y[i]))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { ctx, point, x, y })
    }

    pub fn dim(&self) -> usize {
        self.point.dim()
    }

    pub fn context(&self) -> &JetContext {
        &self.ctx
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.ctx.order()
    }

    pub fn x(&self) -> &[Jet] {
        &self.x
    }

    pub fn y(&self) -> &[Jet] {
        &self.y
    }

    pub fn constant(&self, value: f64) -> Jet {
        Jet::constant(&self.ctx, value)
    }

    /// `∂/∂xᵐ`
    pub fn dx(&self, f: &Jet, m: usize) -> Result<Jet> {
        Ok(f.partial(m)?)
    }

    /// `∂/∂yᵐ`
    pub fn dy(&self, f: &Jet, m: usize) -> Result<Jet> {
        Ok(f.partial(self.dim() + m)?)
    }

    /// Drops the `y`-dependence of a jet, leaving a function of `x` alone.
    pub fn freeze_direction(&self, f: &Jet) -> Jet {
        let n = self.dim();
        f.freeze(|v| v >= n)
    }

    /// `yᵐ ∂f/∂xᵐ`, the total derivative of a function of `x` along `y`.
    pub fn along_direction(&self, f: &Jet) -> Result<Jet> {
        let mut acc = self.constant(0.0);
        for m in 0..self.dim() {
            acc = acc + &self.y[m] * self.dx(f, m)?;
        }
        Ok(acc)
    }
}
