//! Orthonormal polynomials in `L²_μ`, optionally weighted by `w^k` with
//! `w = exp(U^σ)`, Bergman functions, and the polynomial, weighted,
//! sub-diagonal and rational Bernstein–Markov ratios.

mod arnoldi;
mod trend;

pub(crate) use arnoldi::Arnoldi;
pub use trend::{ratio_trend, TrendClass, TrendReport};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{horner, SetDiscretization};
use crate::measures::{l2_norm, DiscreteMeasure};
use crate::potential::{leja_points, log_potential};

/// Weight `w = exp(U^σ)`; the basis of degree k uses `w^k`.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub sigma: DiscreteMeasure,
}

impl WeightSpec {
    pub fn none() -> Self {
        WeightSpec { sigma: DiscreteMeasure::empty() }
    }

    pub fn new(sigma: DiscreteMeasure) -> Self {
        WeightSpec { sigma }
    }

    /// `σ = (1/k) Σ δ_{p_j}`, so that `w^k = 1/Π|z − p_j|`.
    pub fn from_poles(poles: &[C64], k: usize) -> Result<Self> {
        if poles.is_empty() || k == 0 {
            return Ok(Self::none());
        }
        Ok(WeightSpec { sigma: DiscreteMeasure::new(poles.to_vec(), vec![1.0 / k as f64; poles.len()])? })
    }

    pub fn mass(&self) -> f64 {
        self.sigma.total_mass()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

/// `q_0, …, q_k` orthonormal in `L²_μ`, each of the form `φ_j · w^k` with
/// `φ_j` a polynomial of exact degree j from the Arnoldi recurrence.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    arnoldi: Arnoldi,
    weight: WeightSpec,
    exponent: f64,
    /// Max of `2k·U^σ` over the atoms, subtracted before exponentiating.
    log_shift: f64,
    mu: DiscreteMeasure,
}

impl OrthonormalBasis {
    pub fn degree(&self) -> usize {
        self.arnoldi.degree()
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.mu
    }

    /// `log(w(z)^k)`.
    pub fn log_weight(&self, z: C64) -> f64 {
        if self.weight.is_empty() {
            0.0
        } else {
            self.exponent * log_potential(&self.weight.sigma, z)
        }
    }

    /// `q_0(z), …, q_k(z)`.
    pub fn eval(&self, z: C64) -> Vec<C64> {
        let s = (self.log_weight(z) - 0.5 * self.log_shift).exp();
        self.arnoldi.eval(z).into_iter().map(|u| u * s).collect()
    }

    /// `log B_k(z)`.
    pub fn log_bergman(&self, z: C64) -> f64 {
        let sum: f64 = self.arnoldi.eval(z).iter().map(|u| u.norm_sqr()).sum();
        2.0 * self.log_weight(z) - self.log_shift + sum.ln()
    }

    /// `⟨f, q_j⟩_μ` for j = 0..=k from values of `f` at the atoms.
    pub fn coefficients(&self, f: &[C64]) -> Result<Vec<C64>> {
        if f.len() != self.mu.len() {
            return invalid("sampled values do not match the measure's atoms");
        }
        let mut c = vec![C64::new(0.0, 0.0); self.degree() + 1];
        for ((a, w), fv) in self.mu.atoms().iter().zip(self.mu.weights()).zip(f) {
            for (cj, q) in c.iter_mut().zip(self.eval(*a)) {
                *cj += fv * q.conj() * *w;
            }
        }
        Ok(c)
    }

    /// `max |G − I|` for the Gram matrix of the basis evaluated at the atoms.
    pub fn gram_residual(&self) -> f64 {
        let n = self.degree() + 1;
        let vals: Vec<Vec<C64>> = self.mu.atoms().iter().map(|a| self.eval(*a)).collect();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let g: C64 = vals
                    .iter()
                    .zip(self.mu.weights())
                    .map(|(v, w)| v[i] * v[j].conj() * *w)
                    .sum();
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - e).norm());
            }
        }
        worst
    }
}

/// Orthonormalize `{φ_j w^k}`, j ≤ k, in `L²_μ`.
pub fn orthonormalize(mu: &DiscreteMeasure, k: usize, w: &WeightSpec) -> Result<OrthonormalBasis> {
    if mu.len() < k + 1 {
        return Err(Error::RankDeficient { degree: k });
    }
    let exponent = k as f64;
    let weight = if k == 0 { WeightSpec::none() } else { w.clone() };
    let logs: Vec<f64> = mu
        .atoms()
        .iter()
        .map(|a| if weight.is_empty() { 0.0 } else { 2.0 * exponent * log_potential(&weight.sigma, *a) })
        .collect();
    if logs.iter().any(|l| !l.is_finite()) {
        return invalid("weight is singular at an atom of the measure");
    }
    let log_shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let omega: Vec<f64> = mu.weights().iter().zip(&logs).map(|(m, l)| m * (l - log_shift).exp()).collect();
    let (arnoldi, _) = Arnoldi::build(mu.atoms(), &omega, k)?;
    Ok(OrthonormalBasis { arnoldi, weight, exponent, log_shift, mu: mu.clone() })
}

/// `B_k(z) = Σ_{j=0}^{k} |q_j(z)|²`.
pub fn bergman_function(b: &OrthonormalBasis, z: C64) -> f64 {
    b.log_bergman(z).exp()
}

/// `max_K √B_k` over the nodes of K.
fn sup_sqrt_bergman(k_set: &SetDiscretization, b: &OrthonormalBasis) -> f64 {
    let m = crate::par::max_range(k_set.len(), |i| b.log_bergman(k_set.nodes[i]));
    (0.5 * m).exp()
}

/// `sup_{deg p ≤ k} ‖p‖_K / ‖p‖_{L²_μ}`.
pub fn bmp_ratio(k_set: &SetDiscretization, mu: &DiscreteMeasure, k: usize) -> Result<f64> {
    let b = orthonormalize(mu, k, &WeightSpec::none())?;
    Ok(sup_sqrt_bergman(k_set, &b))
}

fn check_weight_off_k(k_set: &SetDiscretization, w: &WeightSpec) -> Result<()> {
    for a in w.sigma.atoms() {
        if k_set.near_support(*a, 0.5 * k_set.h) {
            return Err(Error::Overlap(format!("weight atom {a} lies on K")));
        }
    }
    Ok(())
}

/// `sup_{deg p ≤ k} ‖p w^k‖_K / ‖p w^k‖_{L²_μ}`.
pub fn weighted_bmp_ratio(k_set: &SetDiscretization, mu: &DiscreteMeasure, w: &WeightSpec, k: usize) -> Result<f64> {
    check_weight_off_k(k_set, w)?;
    let b = orthonormalize(mu, k, w)?;
    Ok(sup_sqrt_bergman(k_set, &b))
}

/// `count` pole locations from P: its Leja points, cycled when P has fewer
/// nodes than requested.
pub fn pole_sequence(p: &SetDiscretization, count: usize) -> Result<Vec<C64>> {
    if count == 0 {
        return Ok(vec![]);
    }
    let n = count.min(p.len());
    let base = leja_points(p, n, false)?.points;
    Ok((0..count).map(|i| base[i % n]).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SubdiagonalRatio {
    pub value: f64,
    #[serde(skip)]
    pub poles: Vec<C64>,
}

fn check_disjoint(k_set: &SetDiscretization, p: &SetDiscretization) -> Result<()> {
    if crate::geometry::set_distance(k_set, p) < 0.5 * k_set.h {
        return Err(Error::Overlap("P meets K".into()));
    }
    Ok(())
}

/// Ratio over `p/q_k`, `deg p ≤ k`, with `q_k` vanishing at k Leja points of P.
pub fn subdiagonal_ratio(k_set: &SetDiscretization, mu: &DiscreteMeasure, p: &SetDiscretization, k: usize) -> Result<SubdiagonalRatio> {
    check_disjoint(k_set, p)?;
    let poles = pole_sequence(p, k)?;
    let w = WeightSpec::from_poles(&poles, k)?;
    Ok(SubdiagonalRatio { value: weighted_bmp_ratio(k_set, mu, &w, k)?, poles })
}

#[derive(Clone, Debug, Serialize)]
pub struct RationalRatio {
    pub value: f64,
    /// Denominator degree of the best branch.
    pub m: usize,
    #[serde(skip)]
    pub poles: Vec<C64>,
    /// Ratio for each denominator degree 0..=k.
    pub per_m: Vec<f64>,
}

/// Best ratio over `p/q_m`, `deg p ≤ k`, `m ≤ k`, with poles from P's Leja
/// points. A certified lower bound for the sup over rational functions with
/// poles in P.
pub fn rational_ratio(k_set: &SetDiscretization, mu: &DiscreteMeasure, p: &SetDiscretization, k: usize) -> Result<RationalRatio> {
    check_disjoint(k_set, p)?;
    let seq = pole_sequence(p, k)?;
    let ms: Vec<usize> = (0..=k).collect();
    let per_m = crate::par::map(&ms, |&m| -> Result<f64> {
        let w = WeightSpec::from_poles(&seq[..m], k)?;
        weighted_bmp_ratio(k_set, mu, &w, k)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (m, v) in per_m.iter().enumerate() {
        if *v > per_m[best] * (1.0 + 1e-12) {
            best = m;
        }
    }
    Ok(RationalRatio { value: per_m[best], m: best, poles: seq[..best].to_vec(), per_m })
}

/// `‖f‖_K / ‖f‖_{L²_μ}` from a closure, sup over the nodes of K.
pub fn function_ratio(k_set: &SetDiscretization, mu: &DiscreteMeasure, f: &dyn Fn(C64) -> C64) -> Result<f64> {
    let sup = k_set.nodes.iter().map(|z| f(*z).norm()).fold(0.0, f64::max);
    let vals: Vec<C64> = mu.atoms().iter().map(|a| f(*a)).collect();
    Ok(sup / l2_norm(mu, &vals)?)
}

/// `‖p/q‖_K / ‖p/q‖_μ` with `q = Π(z − pole)`, evaluated directly.
pub fn rational_form_ratio(k_set: &SetDiscretization, mu: &DiscreteMeasure, p: &[C64], poles: &[C64]) -> Result<f64> {
    let f = |z: C64| horner(p, z) / poles.iter().map(|a| z - a).product::<C64>();
    function_ratio(k_set, mu, &f)
}

/// `‖p e^{kU^σ}‖_K / ‖p e^{kU^σ}‖_μ`, evaluated through the potential.
pub fn weighted_form_ratio(k_set: &SetDiscretization, mu: &DiscreteMeasure, p: &[C64], w: &WeightSpec, k: usize) -> Result<f64> {
    let f = |z: C64| horner(p, z) * (k as f64 * log_potential(&w.sigma, z)).exp();
    function_ratio(k_set, mu, &f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CompactSetSpec;
    use crate::measures::{realize, MeasureSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn o() -> C64 {
        C64::new(0.0, 0.0)
    }

    fn circle(r: f64, n: usize) -> SetDiscretization {
        SetDiscretization::discretize(&CompactSetSpec::circle(o(), r), n).unwrap()
    }

    fn arclength(k: &SetDiscretization) -> DiscreteMeasure {
        realize(&MeasureSpec::arclength(None, 1.0), k).unwrap()
    }

    #[test]
    fn circle_basis_is_monomials() {
        let k = circle(1.0, 128);
        let b = orthonormalize(&arclength(&k), 10, &WeightSpec::none()).unwrap();
        let z = C64::new(0.3, -0.8);
        for (j, q) in b.eval(z).iter().enumerate() {
            assert!((q.norm() - z.norm().powi(j as i32) / (2.0 * PI).sqrt()).abs() < 1e-12);
        }
        assert!(b.gram_residual() < 1e-12);
        assert!((bergman_function(&b, o()) - 1.0 / (2.0 * PI)).abs() < 1e-14);
        assert!((bergman_function(&b, k.nodes[3]) - 11.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn half_radius_circle() {
        let k = circle(0.5, 128);
        let b = orthonormalize(&arclength(&k), 8, &WeightSpec::none()).unwrap();
        let z = C64::new(0.2, 0.1);
        for (j, q) in b.eval(z).iter().enumerate() {
            let norm = PI.sqrt() * 0.5f64.powi(j as i32);
            assert!((q.norm() - z.norm().powi(j as i32) / norm).abs() < 1e-10 * (1.0 + q.norm()));
        }
    }

    #[test]
    fn three_atoms_exact() {
        let mu = DiscreteMeasure::new(vec![o(), C64::new(1.0, 0.0), C64::new(0.0, 1.0)], vec![1.0; 3]).unwrap();
        let b = orthonormalize(&mu, 2, &WeightSpec::none()).unwrap();
        assert!(b.gram_residual() < 1e-12);
        assert!(matches!(orthonormalize(&mu, 3, &WeightSpec::none()), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn ratios_on_circle() {
        let k = circle(1.0, 256);
        let mu = arclength(&k);
        assert!((bmp_ratio(&k, &mu, 0).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-14);
        let r = bmp_ratio(&k, &mu, 50).unwrap();
        assert!((r - (51.0 / (2.0 * PI)).sqrt()).abs() < 1e-10);
        assert!((r.powf(1.0 / 50.0) - 1.021).abs() < 1e-3);
        assert_eq!(weighted_bmp_ratio(&k, &mu, &WeightSpec::none(), 12).unwrap(), bmp_ratio(&k, &mu, 12).unwrap());
    }

    #[test]
    fn weighted_pole_at_origin() {
        let k = circle(1.0, 256);
        let mu = arclength(&k);
        let w = WeightSpec::from_poles(&[o()], 1).unwrap();
        // σ = δ₀ at every degree: w^k = |z|^{-k}, equal to 1 on the circle.
        for deg in [5, 20] {
            let r = weighted_bmp_ratio(&k, &mu, &w, deg).unwrap();
            assert!((r - ((deg + 1) as f64 / (2.0 * PI)).sqrt()).abs() < 1e-9);
        }
        let on_k = WeightSpec::from_poles(&[C64::new(1.0, 0.0)], 1).unwrap();
        assert!(weighted_bmp_ratio(&k, &mu, &on_k, 3).is_err());
    }

    #[test]
    fn weighted_annulus_grows_like_two_to_the_k() {
        let k = SetDiscretization::discretize(&CompactSetSpec::annulus_boundary(o(), 0.5, 1.0), 256).unwrap();
        let mu = realize(&MeasureSpec::arclength(Some(CompactSetSpec::circle(o(), 1.0)), 1.0), &k).unwrap();
        let w = WeightSpec::from_poles(&[o()], 1).unwrap();
        let r = weighted_bmp_ratio(&k, &mu, &w, 20).unwrap();
        assert!(r >= 2f64.powi(20) / (2.0 * PI).sqrt());
        assert!(r.powf(1.0 / 20.0) > 1.9);
    }

    #[test]
    fn dominance_chain() {
        let k = SetDiscretization::discretize(&CompactSetSpec::annulus_boundary(o(), 0.5, 1.0), 128).unwrap();
        let mu = realize(&MeasureSpec::arclength(Some(CompactSetSpec::circle(o(), 1.0)), 1.0), &k).unwrap();
        let p = SetDiscretization::discretize(&CompactSetSpec::points(&[o()]), 64).unwrap();
        for deg in [1, 4, 9] {
            let rat = rational_ratio(&k, &mu, &p, deg).unwrap();
            let sub = subdiagonal_ratio(&k, &mu, &p, deg).unwrap();
            let poly = bmp_ratio(&k, &mu, deg).unwrap();
            assert!(rat.value >= sub.value * (1.0 - 1e-12));
            assert!(rat.value >= poly * (1.0 - 1e-12));
            assert_eq!(rat.per_m[0], poly);
        }
    }

    #[test]
    fn bergman_monotone_in_k() {
        let k = SetDiscretization::discretize(&CompactSetSpec::arc(o(), 1.0, 0.0, 2.0), 200).unwrap();
        let mu = arclength(&k);
        let z = C64::new(0.4, 0.9);
        let mut prev = 0.0;
        let mut prev_ratio = 0.0;
        for deg in 0..25 {
            let b = orthonormalize(&mu, deg, &WeightSpec::none()).unwrap();
            let v = bergman_function(&b, z);
            assert!(v >= prev * (1.0 - 1e-10));
            prev = v;
            let r = bmp_ratio(&k, &mu, deg).unwrap();
            assert!(r >= prev_ratio * (1.0 - 1e-10));
            prev_ratio = r;
        }
    }

    fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=15)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parseval_and_extremal_witness(c in coeffs(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
            let k = SetDiscretization::discretize(&CompactSetSpec::arc(o(), 1.0, -1.0, 2.5), 160).unwrap();
            let mu = arclength(&k);
            let b = orthonormalize(&mu, 14, &WeightSpec::none()).unwrap();
            let p: Vec<C64> = c.iter().map(|(a, b)| C64::new(*a, *b)).collect();
            let f: Vec<C64> = mu.atoms().iter().map(|a| horner(&p, *a)).collect();
            let nf = l2_norm(&mu, &f).unwrap();
            let cs = b.coefficients(&f).unwrap();
            let s: f64 = cs.iter().map(|v| v.norm_sqr()).sum();
            // p has degree ≤ 14, so it lies in the span: equality.
            prop_assert!((s - nf * nf).abs() <= 1e-9 * nf * nf);
            let g: Vec<C64> = mu.atoms().iter().map(|a| a.exp()).collect();
            let ng = l2_norm(&mu, &g).unwrap();
            let sg: f64 = b.coefficients(&g).unwrap().iter().map(|v| v.norm_sqr()).sum();
            prop_assert!(sg <= ng * ng * (1.0 + 1e-12));

            let z0 = C64::new(x, y);
            let q0 = b.eval(z0);
            let kern: Vec<C64> = mu.atoms().iter().map(|a| {
                b.eval(*a).iter().zip(&q0).map(|(qa, qz)| qz.conj() * qa).sum()
            }).collect();
            let at_z0: C64 = q0.iter().map(|q| q.norm_sqr()).sum::<f64>().into();
            let ratio = at_z0.norm() / l2_norm(&mu, &kern).unwrap();
            let bz = bergman_function(&b, z0).sqrt();
            prop_assert!((ratio - bz).abs() <= 1e-8 * bz);
        }

        #[test]
        fn random_polynomials_below_bergman_sup(c in coeffs()) {
            let k = SetDiscretization::discretize(&CompactSetSpec::annulus_boundary(o(), 0.5, 1.0), 96).unwrap();
            let mu = realize(&MeasureSpec::arclength(None, 1.0), &k).unwrap();
            let p: Vec<C64> = c.iter().map(|(a, b)| C64::new(*a, *b)).collect();
            let deg = p.len() - 1;
            let r = function_ratio(&k, &mu, &|z| horner(&p, z)).unwrap();
            prop_assert!(r <= bmp_ratio(&k, &mu, deg).unwrap() + 1e-8);
        }

        #[test]
        fn rational_and_weighted_forms_agree(c in coeffs()) {
            let k = SetDiscretization::discretize(&CompactSetSpec::annulus_boundary(o(), 0.5, 1.0), 96).unwrap();
            let mu = realize(&MeasureSpec::arclength(None, 1.0), &k).unwrap();
            let p_set = SetDiscretization::discretize(&CompactSetSpec::circle(C64::new(2.5, 0.0), 0.4), 64).unwrap();
            let p: Vec<C64> = c.iter().map(|(a, b)| C64::new(*a, *b)).collect();
            let deg = p.len() - 1;
            let poles = pole_sequence(&p_set, deg).unwrap();
            let w = WeightSpec::from_poles(&poles, deg).unwrap();
            let a = rational_form_ratio(&k, &mu, &p, &poles).unwrap();
            let b = weighted_form_ratio(&k, &mu, &p, &w, deg).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }
}
