use serde::Serialize;

use crate::fit::least_squares;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendClass {
    ConsistentWithBmp,
    ViolatesBmp,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    pub class: TrendClass,
    /// Linear-in-k coefficient of the fit `log r_k = a + b·k + c·log k`.
    pub slope: f64,
    pub slope_std_err: f64,
    /// Largest `r_k^{1/k} − (1 + 3/k)` over the tail half.
    pub tail_excess: f64,
}

/// One-sided 99% normal quantile.
const Z99: f64 = 2.326;
/// Smallest slope treated as geometric growth.
const MIN_SLOPE: f64 = 0.02;

/// Classify a ratio sequence `(k, r_k)`, k ≥ 1.
///
/// Geometric growth (a positive linear-in-k slope of `log r_k` at 99%
/// one-sided confidence and above [`MIN_SLOPE`]) violates the property;
/// a tail with `r_k^{1/k} ≤ 1 + 3/k` is consistent with it.
pub fn ratio_trend(ratios: &[(usize, f64)]) -> TrendReport {
    let pts: Vec<(f64, f64)> = ratios
        .iter()
        .filter(|(k, r)| *k >= 1 && *r > 0.0 && r.is_finite())
        .map(|(k, r)| (*k as f64, r.ln()))
        .collect();
    if pts.len() < 8 {
        return TrendReport { class: TrendClass::Inconclusive, slope: f64::NAN, slope_std_err: f64::NAN, tail_excess: f64::NAN };
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|(k, _)| vec![1.0, *k, k.ln()]).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, se) = match least_squares(&rows, &y) {
        Some(f) => (f.coef[1], f.std_err(1)),
        None => (f64::NAN, f64::NAN),
    };
    let tail = &pts[pts.len() / 2..];
    let tail_excess = tail
        .iter()
        .map(|(k, lr)| (lr / k).exp() - (1.0 + 3.0 / k))
        .fold(f64::NEG_INFINITY, f64::max);
    let class = if slope - Z99 * se > MIN_SLOPE {
        TrendClass::ViolatesBmp
    } else if tail_excess <= 0.0 {
        TrendClass::ConsistentWithBmp
    } else {
        TrendClass::Inconclusive
    };
    TrendReport { class, slope, slope_std_err: se, tail_excess }
}
