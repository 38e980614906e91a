use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Cell, SetDiscretization};

/// `∫_0^1 log|t − ζ| dt`.
fn unit_segment_log(zeta: C64) -> f64 {
    let (x, y) = (zeta.re, zeta.im);
    let f = |t: f64| {
        let u = t - x;
        if y == 0.0 {
            if u == 0.0 {
                0.0
            } else {
                u * u.abs().ln() - u
            }
        } else {
            0.5 * u * (u * u + y * y).ln() - u + y * (u / y).atan()
        }
    };
    f(1.0) - f(0.0)
}

/// `∫_0^1 log|z − a − t(b − a)| dt`.
fn segment_log(a: C64, b: C64, z: C64) -> f64 {
    let d = b - a;
    d.norm().ln() + unit_segment_log((z - a) / d)
}

/// Chords carrying uniform density, one group per cell.
fn chords(cell: &Cell) -> Vec<(C64, C64, f64)> {
    let pts: Vec<C64> = match cell {
        Cell::Point(_) => vec![],
        Cell::Segment { a, b } => vec![*a, *b],
        Cell::Arc { .. } => (0..=2).map(|i| cell.point_at(i as f64 / 2.0)).collect(),
        Cell::Polyline(p) => p.clone(),
    };
    let lens: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let total: f64 = lens.iter().sum();
    pts.windows(2)
        .zip(&lens)
        .filter(|(_, l)| **l > 0.0)
        .map(|(w, l)| (w[0], w[1], l / total))
        .collect()
}

/// Green function `g_K(·, ∞)` from a boundary charge: uniform density on the
/// chords of each cell, weights solving `−U = c` at the nodes, `Σ w = 1`.
///
/// With `c_min ≤ −U ≤ c_max` on K, the minimum principle gives
/// `max(0, −U − c_max) ≤ g_K ≤ max(0, −U − c_min)` wherever the chords lie
/// in the hull of K (always for convex closed curves).
#[derive(Clone, Debug)]
pub struct BoundaryGreen {
    segs: Vec<(C64, C64, f64)>,
    pub c_min: f64,
    pub c_max: f64,
}

const MAX_CELLS: usize = 4096;
/// Sub-intervals per cell when bracketing `−U` on K.
const SAMPLES: usize = 8;

impl BoundaryGreen {
    pub fn new(k_set: &SetDiscretization) -> Result<Self> {
        if k_set.is_polar() || k_set.cells.iter().any(|c| matches!(c, Cell::Point(_))) {
            return Err(Error::PolarSet("boundary charge needs curve cells".into()));
        }
        let n = k_set.len();
        if n > MAX_CELLS {
            return invalid(format!("boundary charge supports at most {MAX_CELLS} cells, got {n}"));
        }
        let groups: Vec<Vec<(C64, C64, f64)>> = k_set.cells.iter().map(chords).collect();
        let rows: Vec<Vec<f64>> = crate::par::map_range(n, |i| {
            let z = k_set.nodes[i];
            groups.iter().map(|g| g.iter().map(|(a, b, f)| f * segment_log(*a, *b, z)).sum()).collect()
        });
        let a = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
            (true, true) => rows[i][j],
            (true, false) => -1.0,
            (false, true) => 1.0,
            (false, false) => 0.0,
        });
        let mut rhs = DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let x = a.lu().solve(&rhs).ok_or_else(|| Error::DegenerateSet("boundary charge system is singular".into()))?;
        let segs: Vec<(C64, C64, f64)> = groups
            .iter()
            .zip(x.iter())
            .flat_map(|(g, w)| g.iter().map(move |(a, b, f)| (*a, *b, f * w)))
            .collect();
        let mut g = BoundaryGreen { segs, c_min: 0.0, c_max: 0.0 };
        let samples: Vec<C64> = k_set
            .cells
            .iter()
            .flat_map(|c| (0..=SAMPLES).map(|i| c.point_at(i as f64 / SAMPLES as f64)).collect::<Vec<_>>())
            .collect();
        let vals = crate::par::map(&samples, |z| g.neg_potential(*z));
        g.c_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        g.c_max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(g)
    }

    /// `−U(z) = Σ w ∫ log|z − s| ds`.
    pub fn neg_potential(&self, z: C64) -> f64 {
        self.segs.iter().map(|(a, b, w)| w * segment_log(*a, *b, z)).sum()
    }

    pub fn upper(&self, z: C64) -> f64 {
        (self.neg_potential(z) - self.c_min).max(0.0)
    }

    pub fn lower(&self, z: C64) -> f64 {
        (self.neg_potential(z) - self.c_max).max(0.0)
    }

    /// `exp` of the mean Robin constant.
    pub fn capacity(&self) -> f64 {
        (0.5 * (self.c_min + self.c_max)).exp()
    }
}
