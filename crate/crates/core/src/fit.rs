//! Small dense least-squares fits.

/// Ordinary least squares result.
#[derive(Clone, Debug)]
pub struct Fit {
    pub coef: Vec<f64>,
    /// Unbiased residual variance (0 when the system is exactly determined).
    pub residual_var: f64,
    /// Diagonal of `(XᵀX)⁻¹`.
    pub inv_diag: Vec<f64>,
}

impl Fit {
    pub fn std_err(&self, i: usize) -> f64 {
        (self.residual_var * self.inv_diag[i]).sqrt()
    }
}

/// Solve `min ‖X c − y‖` through the normal equations. `None` when the
/// design matrix is rank deficient.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Fit> {
    let n = rows.len();
    let p = rows.first()?.len();
    if n < p {
        return None;
    }
    // Column scaling keeps the normal matrix well conditioned.
    let scale: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let mut a = vec![vec![0.0; 2 * p]; p];
    let mut b = vec![0.0; p];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            let xi = r[i] / scale[i];
            b[i] += xi * yi;
            for j in 0..p {
                a[i][j] += xi * r[j] / scale[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[p + i] = 1.0;
    }
    // Gauss-Jordan with partial pivoting on [A | I].
    let mut rhs = b;
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        rhs[col] /= d;
        for i in 0..p {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..2 * p {
                        a[i][j] -= f * a[col][j];
                    }
                    rhs[i] -= f * rhs[col];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..p).map(|i| rhs[i] / scale[i]).collect();
    let inv_diag: Vec<f64> = (0..p).map(|i| a[i][p + i] / (scale[i] * scale[i])).collect();
    let rss: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, yi)| {
            let pred: f64 = r.iter().zip(&coef).map(|(x, c)| x * c).sum();
            (yi - pred).powi(2)
        })
        .sum();
    let residual_var = if n > p { rss / (n - p) as f64 } else { 0.0 };
    Some(Fit { coef, residual_var, inv_diag })
}
