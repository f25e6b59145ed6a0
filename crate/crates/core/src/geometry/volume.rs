use std::f64::consts::PI;

use super::linalg;
use super::metric::fundamental_tensor;
use crate::chart::{Chart, ChartPoint};
use crate::error::{Error, Result};
use crate::jets::{Jet, JetContext};
use crate::lang::{eval, eval_jet, Env, Expr, MetricSpec, VolumeSpec};

/// Node counts and acceptance threshold for the Busemann-Hausdorff
/// sphere integral.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    /// Trapezoid nodes on the circle (`n = 2`), or Gauss-Legendre nodes in
    /// `z` (`n = 3`, with twice as many trapezoid nodes in the azimuth).
    pub nodes: usize,
    /// Largest relative change between a rule and its refinement.
    pub tolerance: f64,
    /// Number of refinements tried before giving up.
    pub max_doublings: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            nodes: 256,
            tolerance: 1e-9,
            max_doublings: 4,
        }
    }
}

impl Quadrature {
    fn start_nodes(&self, dim: usize) -> usize {
        if dim == 3 {
            (self.nodes / 16).max(4)
        } else {
            self.nodes
        }
    }
}

/// `σ(x)` of the Busemann-Hausdorff volume as a jet in the `n` base
/// variables, with the nodes used and the relative change from the last
/// refinement.
#[derive(Debug, Clone)]
pub struct BhDensity {
    pub sigma: Jet,
    pub nodes: usize,
    pub change: f64,
}

/// Euclidean volume of the unit ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if m == 0 { 1.0 } else { p1 };
                let pm1 = if m == 0 { 0.0 } else { p0 };
                dp = m as f64 * (z * p - pm1) / (z * z - 1.0);
                let step = p / dp;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (z, 2.0 / ((1.0 - z * z) * dp * dp))
        })
        .collect()
}

/// Unit directions and weights of a rule on the sphere `S^{n-1}`.
fn sphere_rule(dim: usize, nodes: usize) -> Vec<(Vec<f64>, f64)> {
    match dim {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..nodes)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / nodes as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / nodes as f64)
            })
            .collect(),
        _ => {
            let azimuth = 2 * nodes;
            let mut rule = Vec::with_capacity(nodes * azimuth);
            for (z, w) in gauss_legendre(nodes) {
                let r = (1.0 - z * z).sqrt();
                for k in 0..azimuth {
                    let t = 2.0 * PI * k as f64 / azimuth as f64;
                    rule.push((vec![r * t.cos(), r * t.sin(), z], w * 2.0 * PI / azimuth as f64));
                }
            }
            rule
        }
    }
}

fn bh_with_rule(metric: &Expr, x: &[Jet], rule: &[(Vec<f64>, f64)]) -> Result<Jet> {
    let n = x.len();
    let ctx = x[0].context().clone();
    let mut integral = Jet::zero(&ctx);
    for (dir, w) in rule {
        let y: Vec<Jet> = dir.iter().map(|&v| Jet::constant(&ctx, v)).collect();
        let f = eval(metric, &Env { x, y: &y, metric: None })?;
        if !(f.value() > 0.0) {
            return Err(Error::MetricInvalid(format!("F = {} on the unit sphere", f.value())));
        }
        integral = integral + f.powi(-(n as i32))?.scale(*w);
    }
    let ball = integral.scale(1.0 / n as f64);
    Ok(ball.recip()?.scale(unit_ball_volume(n)))
}

fn relative_change(a: &Jet, b: &Jet) -> f64 {
    let scale = b.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let diff = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Busemann-Hausdorff density `σ = vol(Bⁿ) / vol{y : F(x, y) < 1}` as a jet
/// in `x` of the given order, refining the rule until two successive
/// results agree.
pub fn busemann_hausdorff(spec: &MetricSpec, x: &[f64], order: usize, quad: &Quadrature) -> Result<BhDensity> {
    let n = spec.dim;
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!(
            "Busemann-Hausdorff volume in dimension {n} (supported: 1 to 3)"
        )));
    }
    let ctx = JetContext::general(n, order)?;
    let xj: Vec<Jet> = x
        .iter()
        .enumerate()
        .map(|(i, &v)| Jet::variable(&ctx, i, v))
        .collect::<std::result::Result<_, _>>()?;
    if n == 1 {
        let sigma = bh_with_rule(&spec.metric, &xj, &sphere_rule(1, 2))?;
        return Ok(BhDensity { sigma, nodes: 2, change: 0.0 });
    }
    let mut nodes = quad.start_nodes(n);
    let mut prev = bh_with_rule(&spec.metric, &xj, &sphere_rule(n, nodes))?;
    let mut change = f64::INFINITY;
    for _ in 0..=quad.max_doublings {
        let next = bh_with_rule(&spec.metric, &xj, &sphere_rule(n, 2 * nodes))?;
        change = relative_change(&prev, &next);
        nodes *= 2;
        prev = next;
        if change < quad.tolerance {
            return Ok(BhDensity { sigma: prev, nodes, change });
        }
    }
    Err(Error::Quadrature { change, nodes })
}

/// `σ(x) = √det g(x, e₁)`: the fundamental tensor's determinant along the
/// first coordinate direction.
pub fn riemannian_det(spec: &MetricSpec, chart: &Chart) -> Result<Jet> {
    let n = chart.dim();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let frozen = Chart::new(ChartPoint::new(chart.point().x().to_vec(), e1)?, chart.order())?;
    let f = eval_jet(&spec.metric, &frozen, None)?;
    let g = fundamental_tensor(&frozen, &f)?;
    let rows: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| g.get(&[i, j]).clone()).collect()).collect();
    let (_, det) = linalg::invert(&rows)?;
    Ok(frozen.freeze_direction(&det.sqrt()?))
}

/// Volume density `σ(x)` as a jet in the chart's context.
pub fn volume_density(spec: &MetricSpec, volume: &VolumeSpec, chart: &Chart, quad: &Quadrature) -> Result<Jet> {
    let sigma = match volume {
        VolumeSpec::Density(e) => eval_jet(e, chart, None)?,
        VolumeSpec::RiemannianDet => riemannian_det(spec, chart)?,
        VolumeSpec::BusemannHausdorff => {
            let bh = busemann_hausdorff(spec, chart.point().x(), chart.order(), quad)?;
            let var_map: Vec<usize> = (0..chart.dim()).collect();
            bh.sigma.embed(chart.context(), &var_map)?
        }
    };
    if !(sigma.value() > 0.0) {
        return Err(Error::NonPositive("volume density", sigma.value()));
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_expr;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let s: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((s - 2.0).abs() < 1e-14);
        let z14: f64 = rule.iter().map(|(z, w)| w * z.powi(14)).sum();
        assert!((z14 - 2.0 / 15.0).abs() < 1e-14);
    }

    fn randers(n: usize) -> MetricSpec {
        MetricSpec::new(n, parse_expr("sqrt(dot_yy) + dot_xy / sqrt(1 + dot_xx)", n, 1, 1).unwrap())
    }

    #[test]
    fn randers_density_matches_closed_form() {
        // For F = |y| + ⟨b, y⟩, σ = (1 − |b|²)^{(n+1)/2}; here
        // |b|² = |x|²/(1+|x|²) so σ = (1 + |x|²)^{-(n+1)/2}.
        for n in [2usize, 3] {
            let x = [0.3, -0.5, 0.2][..n].to_vec();
            let bh = busemann_hausdorff(&randers(n), &x, 3, &Quadrature::default()).unwrap();
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let exact = (1.0 + r2).powf(-(n as f64 + 1.0) / 2.0);
            assert!((bh.sigma.value() - exact).abs() < 1e-10, "n={n}");
            // first derivative along x¹
            let h = 1e-5;
            let sig = |t: f64| {
                let mut z = x.clone();
                z[0] += t;
                (1.0 + z.iter().map(|v| v * v).sum::<f64>()).powf(-(n as f64 + 1.0) / 2.0)
            };
            let fd = (sig(h) - sig(-h)) / (2.0 * h);
            let mut idx = vec![0; n];
            idx[0] = 1;
            assert!((bh.sigma.derivative(&idx).unwrap() - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn euclidean_density_is_one() {
        let spec = MetricSpec::new(1, parse_expr("sqrt(dot_yy)", 1, 1, 1).unwrap());
        let bh = busemann_hausdorff(&spec, &[0.4], 2, &Quadrature::default()).unwrap();
        assert!((bh.sigma.value() - 1.0).abs() < 1e-15);
    }
}
