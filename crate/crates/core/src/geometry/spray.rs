use std::sync::{Arc, OnceLock};

use super::tensor::{Slot, TensorJet};
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::jets::Jet;

use Slot::{Lower, Upper};

/// Which covariant derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivative {
    /// Berwald horizontal derivative `T_{|m}`, new lower index appended.
    Horizontal,
    /// `T_{|m} yᵐ`, same valence, homogeneity raised by one.
    HorizontalAlongDirection,
    /// `∂T/∂yᵐ`, new lower index appended.
    Vertical,
}

fn cached<T>(cell: &OnceLock<T>, f: impl FnOnce() -> Result<T>) -> Result<&T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = f()?;
    Ok(cell.get_or_init(|| v))
}

/// Spray coefficients `Gⁱ` at a chart point and the curvature built from
/// them. Derived quantities are computed on first use and cached.
#[derive(Debug)]
pub struct Spray {
    chart: Arc<Chart>,
    coeffs: TensorJet,
    nonlinear: OnceLock<TensorJet>,
    connection: OnceLock<TensorJet>,
    berwald: OnceLock<TensorJet>,
    flag: OnceLock<TensorJet>,
}

impl Clone for Spray {
    fn clone(&self) -> Self {
        Self::new(self.chart.clone(), self.coeffs.clone())
    }
}

impl Spray {
    pub fn new(chart: Arc<Chart>, coeffs: TensorJet) -> Self {
        Self {
            chart,
            coeffs,
            nonlinear: OnceLock::new(),
            connection: OnceLock::new(),
            berwald: OnceLock::new(),
            flag: OnceLock::new(),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `Gⁱ`
    pub fn coefficients(&self) -> &TensorJet {
        &self.coeffs
    }

    /// The spray `Gⁱ + P yⁱ`; a projective change when `P` is 1-homogeneous.
    pub fn projective_change(&self, p: &Jet) -> Spray {
        let y = self.chart.y();
        let coeffs = TensorJet::from_fn(self.dim(), &[Upper], 2, |i| {
            Ok(self.coeffs.get(i) + &(p * &y[i[0]]))
        })
        .expect("infallible");
        Spray::new(self.chart.clone(), coeffs)
    }

    /// Nonlinear connection `Nⁱⱼ = ∂Gⁱ/∂yʲ`, indexed `(i, j)`.
    pub fn nonlinear(&self) -> Result<&TensorJet> {
        cached(&self.nonlinear, || {
            TensorJet::from_fn(self.dim(), &[Upper, Lower], 1, |ij| {
                self.chart.dy(self.coeffs.get(&ij[..1]), ij[1])
            })
        })
    }

    /// Berwald connection `Gⁱⱼₖ = ∂²Gⁱ/∂yʲ∂yᵏ`, indexed `(i, j, k)`.
    pub fn connection(&self) -> Result<&TensorJet> {
        cached(&self.connection, || {
            let nl = self.nonlinear()?;
            TensorJet::from_fn(self.dim(), &[Upper, Lower, Lower], 0, |ijk| {
                self.chart.dy(nl.get(&ijk[..2]), ijk[2])
            })
        })
    }

    /// Berwald curvature `Bⱼⁱₖₗ = ∂³Gⁱ/∂yʲ∂yᵏ∂yˡ`, indexed `(j, i, k, l)`.
    pub fn berwald_curvature(&self) -> Result<&TensorJet> {
        cached(&self.berwald, || {
            let gamma = self.connection()?;
            TensorJet::from_fn(self.dim(), &[Lower, Upper, Lower, Lower], -1, |jikl| {
                self.chart.dy(gamma.get(&jikl[1..]), jikl[0])
            })
        })
    }

    /// Mean Berwald curvature `Eⱼₖ = ½ Bⱼᵐₖₘ`.
    pub fn mean_berwald(&self) -> Result<TensorJet> {
        let b = self.berwald_curvature()?;
        let n = self.dim();
        TensorJet::from_fn(n, &[Lower, Lower], -1, |jk| {
            let mut acc = self.chart.constant(0.0);
            for m in 0..n {
                acc = acc + b.get(&[jk[0], m, jk[1], m]);
            }
            Ok(acc.scale(0.5))
        })
    }

    /// Douglas curvature, indexed `(j, i, k, l)`:
    /// `Dⱼⁱₖₗ = Bⱼⁱₖₗ − 2/(n+1) (Eⱼₖδⁱₗ + Eⱼₗδⁱₖ + Eₖₗδⁱⱼ + Eⱼₖ.ₗ yⁱ)`.
    pub fn douglas_curvature(&self) -> Result<TensorJet> {
        let b = self.berwald_curvature()?;
        let e = self.mean_berwald()?;
        let n = self.dim();
        let c = 2.0 / (n as f64 + 1.0);
        let y = self.chart.y();
        TensorJet::from_fn(n, &[Lower, Upper, Lower, Lower], -1, |idx| {
            let (j, i, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut t = self.chart.dy(e.get(&[j, k]), l)? * &y[i];
            if i == l {
                t = t + e.get(&[j, k]);
            }
            if i == k {
                t = t + e.get(&[j, l]);
            }
            if i == j {
                t = t + e.get(&[k, l]);
            }
            Ok(b.get(idx) - &t.scale(c))
        })
    }

    /// Riemann curvature `Rⁱₖ`, indexed `(i, k)`:
    /// `2∂ₖGⁱ − yᵐ ∂²Gⁱ/∂xᵐ∂yᵏ + 2Gᵐ Gⁱₘₖ − Nⁱₘ Nᵐₖ`.
    pub fn riemann(&self) -> Result<&TensorJet> {
        cached(&self.flag, || {
            let (nl, gamma) = (self.nonlinear()?, self.connection()?);
            let c = &self.chart;
            let n = self.dim();
            TensorJet::from_fn(n, &[Upper, Lower], 2, |ik| {
                let (i, k) = (ik[0], ik[1]);
                let mut acc = c.dx(self.coeffs.get(&[i]), k)?.scale(2.0);
                acc = acc - c.along_direction(nl.get(&[i, k]))?;
                for m in 0..n {
                    acc = acc + (self.coeffs.get(&[m]) * gamma.get(&[i, m, k])).scale(2.0);
                    acc = acc - nl.get(&[i, m]) * nl.get(&[m, k]);
                }
                Ok(acc)
            })
        })
    }

    /// `Ric = Rᵐₘ`
    pub fn ricci(&self) -> Result<Jet> {
        let r = self.riemann()?;
        let mut acc = self.chart.constant(0.0);
        for m in 0..self.dim() {
            acc = acc + r.get(&[m, m]);
        }
        Ok(acc)
    }

    /// `Rⁱₖₗ = ⅓(Rⁱₖ.ₗ − Rⁱₗ.ₖ)`, indexed `(i, k, l)`.
    pub fn riemann_two_form(&self) -> Result<TensorJet> {
        let r = self.riemann()?;
        let c = &self.chart;
        TensorJet::from_fn(self.dim(), &[Upper, Lower, Lower], 1, |ikl| {
            let (i, k, l) = (ikl[0], ikl[1], ikl[2]);
            let d = c.dy(r.get(&[i, k]), l)? - c.dy(r.get(&[i, l]), k)?;
            Ok(d.scale(1.0 / 3.0))
        })
    }

    /// `Rⱼⁱₖₗ = Rⁱₖₗ.ⱼ`, indexed `(j, i, k, l)`.
    pub fn riemann_full(&self) -> Result<TensorJet> {
        let two = self.riemann_two_form()?;
        TensorJet::from_fn(self.dim(), &[Lower, Upper, Lower, Lower], 0, |jikl| {
            self.chart.dy(two.get(&jikl[1..]), jikl[0])
        })
    }

    /// `S = Nᵐₘ − yᵐ ∂ₘ ln σ` for a volume density `σ(x)`.
    pub fn s_curvature(&self, sigma: &Jet) -> Result<Jet> {
        if !(sigma.value() > 0.0) {
            return Err(Error::NonPositive("volume density", sigma.value()));
        }
        let nl = self.nonlinear()?;
        let mut acc = self.chart.constant(0.0);
        for m in 0..self.dim() {
            acc = acc + nl.get(&[m, m]);
        }
        Ok(acc - self.chart.along_direction(&sigma.ln()?)?)
    }

    /// Covariant derivative of `t` with respect to this spray's Berwald
    /// connection.
    pub fn covariant_derivative(&self, t: &TensorJet, mode: Derivative) -> Result<TensorJet> {
        let n = self.dim();
        let c = &self.chart;
        let rank = t.rank();
        let mut valence = t.valence().to_vec();
        if mode == Derivative::Vertical {
            valence.push(Lower);
            return TensorJet::from_fn(n, &valence, t.homogeneity() - 1, |idx| {
                c.dy(t.get(&idx[..rank]), idx[rank])
            });
        }
        let nl = self.nonlinear()?;
        let partials = |f: &dyn Fn(&Jet, usize) -> Result<Jet>| -> Result<Vec<Vec<Jet>>> {
            t.components()
                .iter()
                .map(|comp| (0..n).map(|m| f(comp, m)).collect())
                .collect()
        };
        let dx = partials(&|f, m| c.dx(f, m))?;
        let dy = partials(&|f, m| c.dy(f, m))?;
        // Σ over index positions of the connection acting on `t`, with the
        // connection coefficient supplied by `coef(upper, a, s)`.
        let connection_terms = |base: &[usize], coef: &dyn Fn(bool, usize, usize) -> Jet| {
            let mut acc = c.constant(0.0);
            let mut j = base.to_vec();
            for p in 0..rank {
                let upper = t.valence()[p] == Upper;
                for s in 0..n {
                    j[p] = s;
                    let term = coef(upper, base[p], s) * t.get(&j);
                    acc = if upper { acc + term } else { acc - term };
                }
                j[p] = base[p];
            }
            acc
        };
        match mode {
            Derivative::Horizontal => {
                let gamma = self.connection()?;
                valence.push(Lower);
                TensorJet::from_fn(n, &valence, t.homogeneity(), |idx| {
                    let base = &idx[..rank];
                    let m = idx[rank];
                    let f = t.flat_index(base);
                    let mut acc = dx[f][m].clone();
                    for r in 0..n {
                        acc = acc - nl.get(&[r, m]) * &dy[f][r];
                    }
                    Ok(acc
                        + connection_terms(base, &|upper, a, s| {
                            if upper {
                                gamma.get(&[a, s, m]).clone()
                            } else {
                                gamma.get(&[s, a, m]).clone()
                            }
                        }))
                })
            }
            Derivative::HorizontalAlongDirection => {
                let y = c.y();
                TensorJet::from_fn(n, &valence, t.homogeneity() + 1, |base| {
                    let f = t.flat_index(base);
                    let mut acc = c.constant(0.0);
                    for m in 0..n {
                        acc = acc + &y[m] * &dx[f][m];
                        acc = acc - (self.coeffs.get(&[m]) * &dy[f][m]).scale(2.0);
                    }
                    Ok(acc
                        + connection_terms(base, &|upper, a, s| {
                            if upper {
                                nl.get(&[a, s]).clone()
                            } else {
                                nl.get(&[s, a]).clone()
                            }
                        }))
                })
            }
            Derivative::Vertical => unreachable!(),
        }
    }

    /// Covariant derivative of a scalar of homogeneity `h`.
    pub fn scalar_derivative(&self, f: &Jet, h: i32, mode: Derivative) -> Result<TensorJet> {
        self.covariant_derivative(&TensorJet::scalar(self.dim(), f.clone(), h), mode)
    }
}
