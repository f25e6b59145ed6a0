#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use finsler_lab::chart::ChartPoint;
use finsler_lab::geometry::MetricGeometry;
use finsler_lab::lang::MetricSpec;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> Arc<MetricSpec> {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    Arc::new(MetricSpec::parse(&text).unwrap())
}

pub fn geometry(spec: &Arc<MetricSpec>, x: &[f64], y: &[f64], order: usize) -> MetricGeometry {
    MetricGeometry::new(spec.clone(), ChartPoint::new(x.to_vec(), y.to_vec()).unwrap(), order).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Hand-written Finsler functions, independent of the expression parser.
pub fn euclidean(_x: &[f64], y: &[f64]) -> f64 {
    dot(y, y).sqrt()
}

pub fn sphere(x: &[f64], y: &[f64]) -> f64 {
    2.0 * dot(y, y).sqrt() / (1.0 + dot(x, x))
}

pub fn randers(x: &[f64], y: &[f64]) -> f64 {
    dot(y, y).sqrt() + dot(x, y) / (1.0 + dot(x, x)).sqrt()
}

pub fn berwald_example(x: &[f64], y: &[f64]) -> f64 {
    let u = x[0].exp() * y[0];
    let v = (1.0 + x[1] * x[1]) * y[1];
    (u * u + v * v + 0.5 * (u.powi(4) + v.powi(4)).sqrt()).sqrt()
}

fn shifted(v: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut w = v.to_vec();
    w[i] += h;
    w
}

/// Central first difference with one Richardson step.
pub fn d1(f: &dyn Fn(&[f64]) -> f64, p: &[f64], i: usize, h: f64) -> f64 {
    let c = |h: f64| (f(&shifted(p, i, h)) - f(&shifted(p, i, -h))) / (2.0 * h);
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}

/// Central mixed second difference with one Richardson step.
pub fn d2(f: &dyn Fn(&[f64]) -> f64, p: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let c = |h: f64| {
        let pp = shifted(&shifted(p, i, h), j, h);
        let pm = shifted(&shifted(p, i, h), j, -h);
        let mp = shifted(&shifted(p, i, -h), j, h);
        let mm = shifted(&shifted(p, i, -h), j, -h);
        (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h)
    };
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}

/// Inverse of a 2×2 or 3×3 matrix by cofactors.
pub fn inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    if n == 2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        return vec![vec![m[1][1] / det, -m[0][1] / det], vec![-m[1][0] / det, m[0][0] / det]];
    }
    assert_eq!(n, 3);
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
    };
    let det: f64 = (0..3).map(|j| m[0][j] * c(0, j)).sum();
    (0..3).map(|i| (0..3).map(|j| c(j, i) / det).collect()).collect()
}

/// `gᵢⱼ` by differencing `F²` in `y`.
pub fn fd_fundamental(f: &dyn Fn(&[f64], &[f64]) -> f64, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let e = |yy: &[f64]| f(x, yy).powi(2);
    (0..n).map(|i| (0..n).map(|j| 0.5 * d2(&e, y, i, j, 1e-3)).collect()).collect()
}

/// `Gˡ = ¼ gˡⁱ (yᵏ ∂²F²/∂xᵏ∂yⁱ − ∂F²/∂xⁱ)` by differencing `F²`.
pub fn fd_spray(f: &dyn Fn(&[f64], &[f64]) -> f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let g_inv = inverse(&fd_fundamental(f, x, y));
    // F² as a function of the concatenated point (x, y)
    let e = |p: &[f64]| f(&p[..n], &p[n..]).powi(2);
    let p: Vec<f64> = x.iter().chain(y).copied().collect();
    let bracket: Vec<f64> = (0..n)
        .map(|i| {
            let mixed: f64 = (0..n).map(|k| y[k] * d2(&e, &p, k, n + i, 1e-3)).sum();
            mixed - d1(&e, &p, i, 1e-3)
        })
        .collect();
    (0..n).map(|l| 0.25 * (0..n).map(|i| g_inv[l][i] * bracket[i]).sum::<f64>()).collect()
}

/// Largest entry of `|a − b|` relative to `1 + max|b|`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = a.iter().zip(b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    d / (1.0 + scale)
}

/// `Rⁱₖ` from differences of the jet-computed spray at shifted points.
pub fn fd_riemann(spec: &Arc<MetricSpec>, x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let g = |p: &[f64], i: usize| geometry(spec, &p[..n], &p[n..], 2).spray().coefficients().value(&[i]);
    let p: Vec<f64> = x.iter().chain(y).copied().collect();
    let h = 1e-3;
    let mut out = Vec::new();
    for i in 0..n {
        let gi = |q: &[f64]| g(q, i);
        for k in 0..n {
            let mut r = 2.0 * d1(&gi, &p, k, h);
            for m in 0..n {
                r -= y[m] * d2(&gi, &p, m, n + k, h);
                let gm = g(&p, m);
                r += 2.0 * gm * d2(&gi, &p, n + m, n + k, h);
                let gmk = |q: &[f64]| g(q, m);
                r -= d1(&gi, &p, n + m, h) * d1(&gmk, &p, n + k, h);
            }
            out.push(r);
        }
    }
    out
}
