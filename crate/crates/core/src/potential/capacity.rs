use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::geometry::SetDiscretization;

use super::fekete::polish;
use super::leja::{leja_points, LejaSequence};

/// Capacity with both estimators and the data behind them.
#[derive(Clone, Debug, Serialize)]
pub struct CapacityEstimate {
    /// Extrapolated transfinite diameter (primary value).
    pub capacity: f64,
    /// `exp(−I)` for the counting measure on the polished `k_max` points.
    pub energy_estimate: f64,
    /// `|capacity − energy_estimate| / capacity`.
    pub disagreement: f64,
    /// Set when the estimators differ by more than 10%.
    pub flagged: bool,
    /// Whether the fit was used (false for tiny node pools).
    pub extrapolated: bool,
    /// `(k, δ_k)` of the polished tail arrays used by the fit.
    pub tail: Vec<(usize, f64)>,
    /// Raw Leja `(k, δ_k)`.
    pub leja_diameters: Vec<(usize, f64)>,
    #[serde(skip)]
    pub leja: Option<LejaSequence>,
    /// Polished `k_max`-point array, an approximate Fekete array.
    #[serde(skip)]
    pub fekete: Vec<C64>,
}

const TAIL_SIZES: usize = 6;
const POLISH_SWEEPS: usize = 40;

fn tail_ks(k_max: usize) -> Vec<usize> {
    let lo = k_max.div_ceil(2);
    let mut ks: Vec<usize> = (0..TAIL_SIZES)
        .map(|i| lo + ((k_max - lo) as f64 * i as f64 / (TAIL_SIZES - 1) as f64).round() as usize)
        .collect();
    ks.dedup();
    ks
}

/// Estimate `cap(K)` from up to `k_max` points.
///
/// The first `k` Leja points are polished into near-Fekete arrays for a few
/// `k` in the upper half of `2..=k_max`, and `log δ_k` is fitted by
/// `L + b·log(k)/k + c/k`; the capacity is `exp(L)`. Point sets return 0.
pub fn capacity_estimate(k_set: &SetDiscretization, k_max: usize) -> Result<CapacityEstimate> {
    if k_set.is_polar() || k_set.len() < 2 {
        return Ok(CapacityEstimate {
            capacity: 0.0,
            energy_estimate: 0.0,
            disagreement: 0.0,
            flagged: false,
            extrapolated: false,
            tail: vec![],
            leja_diameters: vec![],
            leja: None,
            fekete: k_set.nodes.clone(),
        });
    }
    if k_max < 2 {
        return Err(Error::InvalidInput(format!("k_max must be >= 2, got {k_max}")));
    }
    if k_set.len() < k_max {
        return Err(Error::DegenerateSet(format!(
            "capacity with k_max = {k_max} needs at least that many nodes, got {}",
            k_set.len()
        )));
    }
    let leja = leja_points(k_set, k_max, false)?;
    let ks = if k_max >= 8 { tail_ks(k_max) } else { vec![k_max] };
    let polished = crate::par::map(&ks, |&k| polish(&k_set.nodes, &leja.indices[..k], POLISH_SWEEPS));
    let tail: Vec<(usize, f64)> = ks
        .iter()
        .zip(&polished)
        .map(|(&k, (_, lv))| {
            let kf = k as f64;
            (k, (2.0 * lv / (kf * (kf - 1.0))).exp())
        })
        .collect();
    let (capacity, extrapolated) = if ks.len() >= 4 {
        let rows: Vec<Vec<f64>> = ks
            .iter()
            .map(|&k| {
                let kf = k as f64;
                vec![1.0, kf.ln() / kf, 1.0 / kf]
            })
            .collect();
        let y: Vec<f64> = tail.iter().map(|t| t.1.ln()).collect();
        match least_squares(&rows, &y) {
            Some(fit) => (fit.coef[0].exp(), true),
            None => (tail.last().unwrap().1, false),
        }
    } else {
        (tail.last().unwrap().1, false)
    };
    let (last_idx, last_lv) = polished.last().unwrap();
    let kf = k_max as f64;
    let energy_estimate = (2.0 * last_lv / (kf * kf)).exp();
    let disagreement = (capacity - energy_estimate).abs() / capacity;
    Ok(CapacityEstimate {
        capacity,
        energy_estimate,
        disagreement,
        flagged: disagreement > 0.1,
        extrapolated,
        tail,
        leja_diameters: leja.kth_diameters.clone(),
        fekete: last_idx.iter().map(|&i| k_set.nodes[i]).collect(),
        leja: Some(leja),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CompactSetSpec;
    use std::f64::consts::PI;

    fn disc(spec: CompactSetSpec, n: usize) -> SetDiscretization {
        SetDiscretization::discretize(&spec, n).unwrap()
    }

    #[test]
    fn circle_and_arcs() {
        let o = C64::new(0.0, 0.0);
        let c = capacity_estimate(&disc(CompactSetSpec::circle(o, 1.0), 1024), 200).unwrap();
        assert!((c.capacity - 1.0).abs() < 0.02, "{c:?}");
        assert!(!c.flagged);
        for alpha in [PI / 2.0, PI, 1.5 * PI] {
            let a = capacity_estimate(&disc(CompactSetSpec::arc(o, 1.0, 0.0, alpha), 1024), 200).unwrap();
            let exact = (alpha / 4.0).sin();
            assert!((a.capacity / exact - 1.0).abs() < 0.02, "α = {alpha}: {}", a.capacity);
        }
    }

    #[test]
    fn segment_and_scaling() {
        let s = disc(CompactSetSpec::segment(C64::new(-2.0, 0.0), C64::new(2.0, 0.0)), 512);
        let c = capacity_estimate(&s, 100).unwrap();
        assert!((c.capacity - 1.0).abs() < 0.03, "{}", c.capacity);
        let big = disc(CompactSetSpec::circle(C64::new(0.5, 0.0), 2.0), 512);
        let cb = capacity_estimate(&big, 100).unwrap();
        assert!((cb.capacity - 2.0).abs() < 0.04);
    }

    #[test]
    fn point_is_polar() {
        let p = disc(CompactSetSpec::points(&[C64::new(0.3, 0.1)]), 64);
        assert_eq!(capacity_estimate(&p, 200).unwrap().capacity, 0.0);
    }

    #[test]
    fn needs_enough_nodes() {
        let c = disc(CompactSetSpec::circle(C64::new(0.0, 0.0), 1.0), 64);
        assert!(capacity_estimate(&c, 100).is_err());
    }
}
