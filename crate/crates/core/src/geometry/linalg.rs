use crate::error::{Error, Result};
use crate::jets::Jet;

/// Pivots smaller than this (in value) make a matrix singular.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Inverse and determinant of a square matrix of jets by Gauss-Jordan
/// elimination with partial pivoting on the values.
pub fn invert(m: &[Vec<Jet>]) -> Result<(Vec<Vec<Jet>>, Jet)> {
    let n = m.len();
    let ctx = m[0][0].context().clone();
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(&ctx, if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let mut det = Jet::constant(&ctx, 1.0);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .unwrap();
        if !(a[pivot_row][col].value().abs() >= PIVOT_THRESHOLD) {
            return Err(Error::MetricInvalid(format!(
                "singular matrix (pivot {:e} in column {})",
                a[pivot_row][col].value(),
                col + 1
            )));
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            inv.swap(pivot_row, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det = &det * &p;
        let r = p.recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col].clone();
            for j in 0..n {
                let da = &factor * &a[col][j];
                let di = &factor * &inv[col][j];
                a[row][j] = &a[row][j] - &da;
                inv[row][j] = &inv[row][j] - &di;
            }
        }
    }
    Ok((inv, det))
}

/// Whether a symmetric matrix of values admits a Cholesky factorization.
pub fn is_positive_definite(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if !(d > 0.0) {
                    return false;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    true
}
