use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Cell, SetDiscretization};

/// Greedy Leja points on a discretized set.
#[derive(Clone, Debug)]
pub struct LejaSequence {
    pub points: Vec<C64>,
    /// Node index each point was drawn from (before any refinement).
    pub indices: Vec<usize>,
    /// `Σ_{i<j} log|z_j − z_i|` for j = 1..k (first entry 0).
    pub running_products: Vec<f64>,
    /// `(k, δ_k)` for k = 2..=len, δ_k = V_k^{2/(k(k−1))}.
    pub kth_diameters: Vec<(usize, f64)>,
}

impl LejaSequence {
    pub fn delta(&self, k: usize) -> Option<f64> {
        self.kth_diameters.iter().find(|(j, _)| *j == k).map(|p| p.1)
    }
}

fn argmax_lowest(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() && *v != f64::INFINITY {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                let vb = values[b];
                if *v > vb + 1e-12 * vb.abs().max(1.0) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

fn log_product(points: &[C64], z: C64) -> f64 {
    points.iter().map(|p| (z - p).norm().ln()).sum()
}

/// Golden-section maximization of `Σ log|γ(s) − z_i|` along a cell.
fn refine_in_cell(cell: &Cell, chosen: &[C64], start_value: f64, start: C64) -> (C64, f64) {
    if matches!(cell, Cell::Point(_)) {
        return (start, start_value);
    }
    let f = |s: f64| log_product(chosen, cell.point_at(s));
    // Coarse scan brackets the local maximum, then golden section polishes.
    let m = 8;
    let vals: Vec<f64> = (0..=m).map(|i| f(i as f64 / m as f64)).collect();
    let ib = (0..=m).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let (mut a, mut b) = (
        (ib.saturating_sub(1)) as f64 / m as f64,
        ((ib + 1).min(m)) as f64 / m as f64,
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..40 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let s = 0.5 * (a + b);
    let (z, v) = (cell.point_at(s), f(s));
    let candidates = [(start, start_value), (z, v), (cell.point_at(ib as f64 / m as f64), vals[ib])];
    candidates.into_iter().fold((start, start_value), |acc, c| if c.1 > acc.1 && c.1.is_finite() { c } else { acc })
}

/// Greedy Leja sequence of length `k`. The first point is the node farthest
/// from the centroid; each next point maximizes the product of distances to
/// the previous ones, ties going to the lowest node index. With `refine`, a
/// 1-D search along the winning node's cell improves each pick.
pub fn leja_points(k_set: &SetDiscretization, k: usize, refine: bool) -> Result<LejaSequence> {
    let n = k_set.len();
    if k == 0 {
        return invalid("need at least one Leja point");
    }
    if n < k {
        return Err(Error::DegenerateSet(format!("{k} Leja points requested from {n} candidate nodes")));
    }
    let pool = &k_set.nodes;
    let c = k_set.centroid();
    let dist: Vec<f64> = pool.iter().map(|z| (z - c).norm()).collect();
    let first = argmax_lowest(&dist).unwrap();
    let mut points = vec![pool[first]];
    let mut indices = vec![first];
    let mut s: Vec<f64> = pool.iter().map(|z| (z - pool[first]).norm().ln()).collect();
    s[first] = f64::NEG_INFINITY;
    let mut log_v = 0.0;
    let mut running_products = vec![0.0];
    let mut kth_diameters = Vec::with_capacity(k.saturating_sub(1));
    for j in 1..k {
        let best = argmax_lowest(&s).filter(|&b| s[b].is_finite());
        let Some(best) = best else {
            return Err(Error::DegenerateSet("candidate nodes coincide with chosen points".into()));
        };
        let (z, inc) = if refine {
            refine_in_cell(&k_set.cells[best], &points, s[best], pool[best])
        } else {
            (pool[best], s[best])
        };
        log_v += inc;
        points.push(z);
        indices.push(best);
        running_products.push(log_v);
        let jj = (j + 1) as f64;
        kth_diameters.push((j + 1, (2.0 * log_v / (jj * (jj - 1.0))).exp()));
        for (si, p) in s.iter_mut().zip(pool) {
            if si.is_finite() {
                *si += (p - z).norm().ln();
            }
        }
        s[best] = f64::NEG_INFINITY;
    }
    Ok(LejaSequence { points, indices, running_products, kth_diameters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CompactSetSpec;
    use std::f64::consts::PI;

    fn circle(n: usize) -> SetDiscretization {
        SetDiscretization::discretize(&CompactSetSpec::circle(C64::new(0.0, 0.0), 1.0), n).unwrap()
    }

    #[test]
    fn two_points_on_circle_are_antipodal() {
        let l = leja_points(&circle(64), 2, false).unwrap();
        assert!((l.points[0] + l.points[1]).norm() < 1e-12);
    }

    #[test]
    fn first_pick_and_ties() {
        // On a circle every node ties for the farthest-from-centroid start.
        let l = leja_points(&circle(64), 3, false).unwrap();
        assert_eq!(l.indices[0], 0);
        assert_eq!(l.indices[1], 32);
    }

    #[test]
    fn four_points_match_brute_force() {
        let k = circle(64);
        let l = leja_points(&k, 4, false).unwrap();
        let exact = super::super::fekete_points_exact(&k.nodes, 4).unwrap();
        let v_exact = super::super::log_vandermonde(&exact);
        let v_leja = super::super::log_vandermonde(&l.points);
        // The square is the global maximizer; Leja finds it on this pool.
        assert!((v_exact - v_leja).abs() < 1e-9 && (v_exact - 4f64.ln() * 2.0).abs() < 1e-9);
    }

    #[test]
    fn segment_three_points() {
        let k = SetDiscretization::discretize(&CompactSetSpec::segment(C64::new(-2.0, 0.0), C64::new(2.0, 0.0)), 48).unwrap();
        let l = leja_points(&k, 3, false).unwrap();
        let mut re: Vec<f64> = l.points.iter().map(|p| p.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[2] - 2.0).abs() < 1e-12 && re[1].abs() < 0.1);
        let exact = super::super::fekete_points_exact(&k.nodes, 3).unwrap();
        assert!((super::super::log_vandermonde(&exact) - super::super::log_vandermonde(&l.points)).abs() < 1e-3);
    }

    #[test]
    fn refinement_never_hurts() {
        let k = SetDiscretization::discretize(&CompactSetSpec::arc(C64::new(0.0, 0.0), 1.0, 0.0, PI), 32).unwrap();
        let a = leja_points(&k, 20, false).unwrap();
        let b = leja_points(&k, 20, true).unwrap();
        assert!(b.running_products[1] >= a.running_products[1] - 1e-12);
        assert!(b.points.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn too_few_nodes() {
        assert!(leja_points(&circle(16), 17, false).is_err());
    }
}
