use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::SetDiscretization;
use crate::measures::DiscreteMeasure;

use super::capacity::{capacity_estimate, CapacityEstimate};
use super::log_potential;

/// Default number of equilibrium atoms.
pub const DEFAULT_GREEN_K: usize = 200;
/// Default tolerance for Green-function boundary values.
pub const DEFAULT_TOL: f64 = 0.01;

/// Capacity plus equilibrium atoms; evaluates `g_K(·, ∞)`.
#[derive(Clone, Debug)]
pub struct GreenField {
    pub capacity: f64,
    pub equilibrium: DiscreteMeasure,
    /// Set when `g ≤ 10·tol` on every node of K.
    pub regular_flag: bool,
    /// `max_K g` over the nodes.
    pub max_on_k: f64,
    pub estimate: CapacityEstimate,
}

impl GreenField {
    /// `−U^{μ_K}(z) − log cap`, not clamped.
    pub fn raw(&self, z: C64) -> f64 {
        -log_potential(&self.equilibrium, z) - self.capacity.ln()
    }

    /// `g_K(z, ∞) = max(0, raw)`.
    pub fn eval(&self, z: C64) -> f64 {
        let g = self.raw(z);
        if g.is_nan() {
            0.0
        } else {
            g.max(0.0)
        }
    }
}

pub fn green_infinity(g: &GreenField, z: C64) -> f64 {
    g.eval(z)
}

pub fn equilibrium_measure(k_set: &SetDiscretization, k: usize) -> Result<GreenField> {
    equilibrium_measure_with_tol(k_set, k, DEFAULT_TOL)
}

/// Equilibrium measure as the uniform measure on a polished Leja array.
pub fn equilibrium_measure_with_tol(k_set: &SetDiscretization, k: usize, tol: f64) -> Result<GreenField> {
    if k_set.is_polar() {
        return Err(Error::PolarSet("equilibrium measure needs a non-polar set".into()));
    }
    let k = k.min(k_set.len());
    let estimate = capacity_estimate(k_set, k)?;
    if estimate.capacity <= 0.0 {
        return Err(Error::PolarSet("capacity estimate is zero".into()));
    }
    let equilibrium = DiscreteMeasure::counting(&estimate.fekete, 1.0)?;
    let mut g = GreenField { capacity: estimate.capacity, equilibrium, regular_flag: false, max_on_k: 0.0, estimate };
    let max_on_k = crate::par::max_range(k_set.len(), |i| g.eval(k_set.nodes[i]));
    g.max_on_k = max_on_k;
    g.regular_flag = max_on_k <= 10.0 * tol;
    Ok(g)
}

fn mobius(a: C64) -> impl Fn(C64) -> C64 {
    move |z| 1.0 / (z - a)
}

/// Green functions with finite poles through `g_K(z, a) = g_{η_a(K)}(η_a(z), ∞)`,
/// `η_a(z) = 1/(z − a)`, caching one conjugated field per pole.
pub struct PoleGreen {
    base: SetDiscretization,
    k: usize,
    tol: f64,
    cache: Mutex<Vec<((i64, i64), Arc<GreenField>)>>,
}

const POLE_CACHE: usize = 32;

impl PoleGreen {
    pub fn new(base: SetDiscretization, k: usize, tol: f64) -> Self {
        PoleGreen { base, k, tol, cache: Mutex::new(Vec::new()) }
    }

    pub fn base(&self) -> &SetDiscretization {
        &self.base
    }

    fn check_pole(&self, a: C64) -> Result<()> {
        let d = self.base.node_distance(a);
        if d < 3.0 * self.base.h {
            return Err(Error::InvalidInput(format!(
                "pole {a} lies within 3h = {} of the set (distance {d})",
                3.0 * self.base.h
            )));
        }
        Ok(())
    }

    /// `η_a(K)` as a discretized set.
    pub fn mapped_set(&self, a: C64) -> Result<SetDiscretization> {
        self.check_pole(a)?;
        self.base.map(&mobius(a))
    }

    /// Green field of `η_a(K)`, computed once per pole (quantized to h/4).
    pub fn field(&self, a: C64) -> Result<Arc<GreenField>> {
        self.check_pole(a)?;
        let q = 0.25 * self.base.h;
        let key = ((a.re / q).round() as i64, (a.im / q).round() as i64);
        if let Some((_, g)) = self.cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return Ok(g.clone());
        }
        let mapped = self.base.map(&mobius(a))?;
        let g = Arc::new(equilibrium_measure_with_tol(&mapped, self.k, self.tol)?);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= POLE_CACHE {
            cache.remove(0);
        }
        cache.push((key, g.clone()));
        Ok(g)
    }

    /// `g_K(z, a)`.
    pub fn eval(&self, a: C64, z: C64) -> Result<f64> {
        if z == a {
            return invalid("Green function evaluated at its pole");
        }
        let g = self.field(a)?;
        Ok(g.eval(1.0 / (z - a)))
    }
}

/// One-shot `g_K(z, a)` with default parameters.
pub fn green_pole(k_set: &SetDiscretization, a: C64, z: C64) -> Result<f64> {
    PoleGreen::new(k_set.clone(), DEFAULT_GREEN_K, DEFAULT_TOL).eval(a, z)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub capacity: f64,
    pub cap_gap: f64,
    pub green_sup_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub cap_k: f64,
    pub rows: Vec<ProbeRow>,
    pub cap_gap_monotone: bool,
    pub green_gap_monotone: bool,
    /// Both gap columns end below 0.05, or both stay above it.
    pub co_move: bool,
}

fn nonincreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}

/// Compare capacities and pole Green functions of a family of subsets with
/// those of K, over `grid` and every node of `p`.
pub fn green_convergence_probe(
    k_set: &SetDiscretization,
    subsets: &[SetDiscretization],
    p: &SetDiscretization,
    grid: &[C64],
) -> Result<ProbeReport> {
    if crate::geometry::set_distance(k_set, p) == 0.0 {
        return Err(Error::Overlap("P meets K".into()));
    }
    let k = DEFAULT_GREEN_K.min(k_set.len());
    let cap_k = capacity_estimate(k_set, k)?.capacity;
    let full = PoleGreen::new(k_set.clone(), k, DEFAULT_TOL);
    let mut reference = Vec::with_capacity(p.len() * grid.len());
    for a in &p.nodes {
        for z in grid {
            reference.push(full.eval(*a, *z)?);
        }
    }
    let rows = crate::par::map(subsets, |sub| -> Result<ProbeRow> {
        let ks = DEFAULT_GREEN_K.min(sub.len());
        let capacity = capacity_estimate(sub, ks)?.capacity;
        let pg = PoleGreen::new(sub.clone(), ks, DEFAULT_TOL);
        let mut sup: f64 = 0.0;
        let mut idx = 0;
        for a in &p.nodes {
            for z in grid {
                sup = sup.max((pg.eval(*a, *z)? - reference[idx]).abs());
                idx += 1;
            }
        }
        Ok(ProbeRow { capacity, cap_gap: (cap_k - capacity).abs(), green_sup_gap: sup })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let caps: Vec<f64> = rows.iter().map(|r| r.cap_gap).collect();
    let greens: Vec<f64> = rows.iter().map(|r| r.green_sup_gap).collect();
    let small = |x: Option<&f64>| x.is_some_and(|v| *v < 0.05);
    Ok(ProbeReport {
        cap_k,
        cap_gap_monotone: nonincreasing(&caps),
        green_gap_monotone: nonincreasing(&greens),
        co_move: small(caps.last()) == small(greens.last()),
        rows,
    })
}

/// Mask of `D_r = {z : g_K(z, ∞) < log r}` over `points`.
pub fn level_set_d_r(g: &GreenField, r: f64, points: &[C64]) -> Result<Vec<bool>> {
    if !g.regular_flag {
        return invalid("level set needs a Green field flagged regular");
    }
    if !(r > 1.0) {
        return invalid(format!("level parameter must exceed 1, got {r}"));
    }
    let lr = r.ln();
    Ok(crate::par::map(points, |z| g.eval(*z) < lr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CompactSetSpec;
    use std::f64::consts::{PI, TAU};

    fn circle(r: f64, n: usize) -> SetDiscretization {
        SetDiscretization::discretize(&CompactSetSpec::circle(C64::new(0.0, 0.0), r), n).unwrap()
    }

    #[test]
    fn circle_equilibrium() {
        let k = circle(1.0, 1024);
        let g = equilibrium_measure(&k, 200).unwrap();
        assert!((g.equilibrium.total_mass() - 1.0).abs() < 1e-12);
        assert!(g.regular_flag);
        // Atoms sit on nodes, where the potential is +∞; the other nodes see a
        // nearly constant potential.
        let pots: Vec<f64> = k.nodes.iter().map(|z| log_potential(&g.equilibrium, *z)).filter(|u| u.is_finite()).collect();
        assert_eq!(pots.len(), 1024 - 200);
        let (lo, hi) = pots.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi - lo < 0.02, "{lo} {hi}");
        assert!((green_infinity(&g, C64::new(2.0, 0.0)) - 2f64.ln()).abs() < 0.01);
        assert!(green_infinity(&g, k.nodes[5]) < DEFAULT_TOL);
    }

    #[test]
    fn scaled_circle_and_segment() {
        let g = equilibrium_measure(&circle(2.0, 1024), 200).unwrap();
        assert!((g.capacity - 2.0).abs() < 0.04);
        assert!((green_infinity(&g, C64::new(0.0, 4.0)) - 2f64.ln()).abs() < 0.01);
        let s = SetDiscretization::discretize(&CompactSetSpec::segment(C64::new(-2.0, 0.0), C64::new(2.0, 0.0)), 512).unwrap();
        let gs = equilibrium_measure(&s, 200).unwrap();
        assert!((gs.capacity - 1.0).abs() < 0.03);
        // Exterior of [−2, 2]: g = log|w| with z = w + 1/w, |w| > 1.
        let z = C64::new(1.0, 1.5);
        let w = {
            let r = (z * z - 4.0).sqrt();
            let w1 = 0.5 * (z + r);
            if w1.norm() >= 1.0 { w1 } else { 0.5 * (z - r) }
        };
        assert!((gs.eval(z) - w.norm().ln()).abs() < 0.02);
    }

    #[test]
    fn polar_rejected() {
        let p = SetDiscretization::discretize(&CompactSetSpec::points(&[C64::new(0.0, 0.0)]), 64).unwrap();
        assert!(matches!(equilibrium_measure(&p, 10), Err(Error::PolarSet(_))));
    }

    #[test]
    fn pole_green_on_circle() {
        let k = circle(1.0, 512);
        let pg = PoleGreen::new(k.clone(), 200, DEFAULT_TOL);
        let a = C64::new(0.0, 0.0);
        for t in [0.0, 1.0, 2.5] {
            let z = C64::from_polar(0.5, t);
            assert!((pg.eval(a, z).unwrap() - 2f64.ln()).abs() < 0.02);
        }
        assert!(pg.eval(a, k.nodes[3]).unwrap() < DEFAULT_TOL);
        // Same value through the mapped set directly.
        let z = C64::new(0.1, -0.37);
        let mapped = pg.mapped_set(a).unwrap();
        let direct = equilibrium_measure(&mapped, 200).unwrap().eval(1.0 / (z - a));
        assert!((pg.eval(a, z).unwrap() - direct).abs() < 1e-10);
        assert!(pg.eval(C64::new(1.0, 0.0), z).is_err());
        assert!(pg.eval(a, a).is_err());
    }

    #[test]
    fn level_sets() {
        let g = equilibrium_measure(&circle(1.0, 512), 200).unwrap();
        let pts: Vec<C64> = (0..40).map(|i| C64::new(-3.0 + 0.15 * i as f64, 0.0)).collect();
        let mask = level_set_d_r(&g, 2.0, &pts).unwrap();
        for (z, m) in pts.iter().zip(&mask) {
            if (z.norm() - 2.0).abs() > 0.15 {
                assert_eq!(*m, z.norm() < 2.0, "{z}");
            }
        }
        let s = SetDiscretization::discretize(&CompactSetSpec::segment(C64::new(-2.0, 0.0), C64::new(2.0, 0.0)), 512).unwrap();
        let gs = equilibrium_measure(&s, 200).unwrap();
        let m = level_set_d_r(&gs, 2.0, &s.nodes).unwrap();
        assert!(m.iter().all(|b| *b));
        let far: Vec<C64> = (0..16).map(|j| C64::from_polar(10.0, TAU * j as f64 / 16.0)).collect();
        assert!(level_set_d_r(&gs, 2.0, &far).unwrap().iter().all(|b| !*b));
        assert!(level_set_d_r(&gs, 1.0, &far).is_err());
        let _ = PI;
    }
}
