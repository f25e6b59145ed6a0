use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::jets::Jet;

/// Position of a tensor index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Upper,
    Lower,
}

/// All multi-indices of `rank` entries in `0..dim`, last index fastest.
pub fn multi_indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in idx.iter_mut().rev() {
            *slot = flat % dim;
            flat /= dim;
        }
        idx
    })
}

/// Dense array of jets with index positions and a degree of homogeneity
/// in `y`.
#[derive(Debug, Clone)]
pub struct TensorJet {
    dim: usize,
    valence: Vec<Slot>,
    homogeneity: i32,
    comps: Vec<Jet>,
}

impl TensorJet {
    pub fn from_fn(
        dim: usize,
        valence: &[Slot],
        homogeneity: i32,
        mut f: impl FnMut(&[usize]) -> Result<Jet>,
    ) -> Result<Self> {
        let comps = multi_indices(dim, valence.len())
            .map(|idx| f(&idx))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            valence: valence.to_vec(),
            homogeneity,
            comps,
        })
    }

    pub fn scalar(dim: usize, value: Jet, homogeneity: i32) -> Self {
        Self {
            dim,
            valence: Vec::new(),
            homogeneity,
            comps: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.valence.len()
    }

    pub fn valence(&self) -> &[Slot] {
        &self.valence
    }

    pub fn homogeneity(&self) -> i32 {
        self.homogeneity
    }

    pub fn components(&self) -> &[Jet] {
        &self.comps
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.flat_index(idx)]
    }

    /// Value of a component at the expansion point.
    pub fn value(&self, idx: &[usize]) -> f64 {
        self.get(idx).value()
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> {
        multi_indices(self.dim, self.rank())
    }

    /// How many more derivatives every component can still take.
    pub fn remaining_order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// Largest absolute component value and its slot.
    pub fn max_abs(&self) -> (f64, Vec<usize>) {
        let mut best = (0.0, vec![0; self.rank()]);
        for (idx, c) in self.indices().zip(&self.comps) {
            if c.value().abs() > best.0 {
                best = (c.value().abs(), idx);
            }
        }
        best
    }

    pub fn norm(&self) -> f64 {
        self.max_abs().0
    }

    pub fn map(&self, homogeneity: i32, f: impl Fn(&Jet) -> Jet) -> Self {
        Self {
            dim: self.dim,
            valence: self.valence.clone(),
            homogeneity,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(self.homogeneity, |c| c * s)
    }

    fn check_shape(&self, other: &TensorJet) -> Result<()> {
        if self.dim != other.dim || self.rank() != other.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.comps.len(),
                found: other.comps.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &TensorJet) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &TensorJet) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }

    /// Largest componentwise difference of the values, with its slot.
    pub fn max_difference(&self, other: &TensorJet) -> Result<(f64, Vec<usize>)> {
        self.check_shape(other)?;
        let mut best = (0.0f64, vec![0; self.rank()]);
        for (idx, (a, b)) in self.indices().zip(self.comps.iter().zip(&other.comps)) {
            let d = (a.value() - b.value()).abs();
            if d > best.0 || d.is_nan() {
                best = (d, idx);
            }
        }
        Ok(best)
    }

    /// Contracts the index at `slot` with `yᵐ`.
    pub fn contract_direction(&self, chart: &Chart, slot: usize) -> Result<Self> {
        let mut valence = self.valence.clone();
        valence.remove(slot);
        TensorJet::from_fn(self.dim, &valence, self.homogeneity + 1, |idx| {
            let mut full: Vec<usize> = idx.to_vec();
            full.insert(slot, 0);
            let mut acc = chart.constant(0.0);
            for m in 0..self.dim {
                full[slot] = m;
                acc = acc + &chart.y()[m] * self.get(&full);
            }
            Ok(acc)
        })
    }

    /// Max over components of `|yᵐ ∂T/∂yᵐ − h T|`, the Euler identity
    /// defect for the declared homogeneity `h`.
    pub fn euler_residual(&self, chart: &Chart) -> Result<(f64, Vec<usize>)> {
        let mut best = (0.0f64, vec![0; self.rank()]);
        for (idx, c) in self.indices().zip(&self.comps) {
            let mut euler = -(self.homogeneity as f64) * c.value();
            for m in 0..chart.dim() {
                euler += chart.point().y()[m] * chart.dy(c, m)?.value();
            }
            if euler.abs() > best.0 {
                best = (euler.abs(), idx);
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartPoint;

    #[test]
    fn index_enumeration() {
        let all: Vec<Vec<usize>> = multi_indices(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(multi_indices(3, 0).count(), 1);
        assert_eq!(multi_indices(3, 4).count(), 81);
    }

    #[test]
    fn euler_identity_on_quadratic() {
        let chart = Chart::new(ChartPoint::new(vec![0.1, 0.2], vec![1.0, -2.0]).unwrap(), 3).unwrap();
        let y = chart.y();
        let t = TensorJet::from_fn(2, &[Slot::Upper], 2, |i| Ok(&y[i[0]] * &y[0])).unwrap();
        assert!(t.euler_residual(&chart).unwrap().0 < 1e-14);
        let wrong = TensorJet::from_fn(2, &[Slot::Upper], 1, |i| Ok(&y[i[0]] * &y[0])).unwrap();
        assert!(wrong.euler_residual(&chart).unwrap().0 > 0.5);
        let contracted = t.contract_direction(&chart, 0).unwrap();
        assert_eq!(contracted.rank(), 0);
        // (y⁰)·(y⁰ y⁰) + (y¹)·(y¹ y⁰) = y⁰ |y|² = 5
        assert!((contracted.value(&[]) - 5.0).abs() < 1e-14);
    }
}
