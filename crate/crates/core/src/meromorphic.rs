//! Pointwise bounds for rational functions, best `L²_μ` rational
//! approximation with at most n poles, and overconvergence rates.

use std::sync::{Arc, Mutex};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bergman::Arnoldi;
use crate::error::{invalid, Error, Result};
use crate::fit::least_squares;
use crate::geometry::{horner, SetDiscretization};
use crate::measures::{l2_norm, DiscreteMeasure};
use crate::potential::{equilibrium_measure, BoundaryGreen, DEFAULT_GREEN_K};

/// Numerator polynomial as an opaque orthogonal expansion.
#[derive(Clone, Debug)]
pub struct OrthogonalNumerator {
    basis: Arnoldi,
    coeffs: Vec<C64>,
}

#[derive(Clone, Debug)]
pub enum Numerator {
    /// Ascending monomial coefficients.
    Monomial(Vec<C64>),
    Orthogonal(OrthogonalNumerator),
}

/// `scale · p(z) / Π(z − a_j)`.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    pub numerator: Numerator,
    pub poles: Vec<C64>,
    pub scale: C64,
}

impl RationalFunction {
    /// Reject poles where the numerator vanishes (the form must be reduced).
    pub fn new(coeffs: Vec<C64>, poles: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("numerator needs at least one coefficient");
        }
        if poles.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return invalid("poles must be finite");
        }
        let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if let Some(a) = poles.iter().find(|a| horner(&coeffs, **a).norm() <= 1e-12 * cmax) {
            return invalid(format!("numerator vanishes at the pole {a}"));
        }
        Ok(RationalFunction { numerator: Numerator::Monomial(coeffs), poles, scale: C64::new(1.0, 0.0) })
    }

    /// Upper bound on the numerator degree.
    pub fn degree(&self) -> usize {
        match &self.numerator {
            Numerator::Monomial(c) => c.len() - 1,
            Numerator::Orthogonal(o) => o.basis.degree(),
        }
    }

    pub fn numerator_at(&self, z: C64) -> C64 {
        match &self.numerator {
            Numerator::Monomial(c) => horner(c, z),
            Numerator::Orthogonal(o) => o.basis.eval(z).iter().zip(&o.coeffs).map(|(u, c)| u * c).sum(),
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let q: C64 = self.poles.iter().map(|a| z - a).product();
        self.scale * self.numerator_at(z) / q
    }
}

/// Green functions of K with poles at infinity and at finite points, and a
/// sup-norm grid, for [`blatt_bound`]. Green values come from
/// [`BoundaryGreen`] and are taken on the side that keeps the bound valid.
pub struct BlattContext {
    k_set: SetDiscretization,
    infinity: BoundaryGreen,
    poles: Mutex<Vec<(C64, Arc<BoundaryGreen>)>>,
    sup_points: Vec<C64>,
}

impl BlattContext {
    pub fn new(k_set: &SetDiscretization) -> Result<Self> {
        let green = equilibrium_measure(k_set, DEFAULT_GREEN_K)?;
        if !green.regular_flag {
            return invalid("Blatt bound needs a set whose Green function is flagged regular");
        }
        Ok(BlattContext {
            k_set: k_set.clone(),
            infinity: BoundaryGreen::new(k_set)?,
            poles: Mutex::new(Vec::new()),
            sup_points: k_set.refined_points(4),
        })
    }

    /// `‖r‖_K` on the 4×-refined boundary grid.
    pub fn sup_norm(&self, r: &RationalFunction) -> f64 {
        crate::par::max_range(self.sup_points.len(), |i| r.eval(self.sup_points[i]).norm())
    }

    /// Green field of `η_a(K)`, `η_a(z) = 1/(z − a)`, so that
    /// `g_K(z, a) = g_{η_a(K)}(η_a(z), ∞)`.
    fn pole_field(&self, a: C64) -> Result<Arc<BoundaryGreen>> {
        if let Some((_, g)) = self.poles.lock().unwrap().iter().find(|(p, _)| *p == a) {
            return Ok(g.clone());
        }
        if self.k_set.node_distance(a) < 3.0 * self.k_set.h {
            return invalid(format!("pole {a} lies within 3h of K"));
        }
        let g = Arc::new(BoundaryGreen::new(&self.k_set.map(&|z| 1.0 / (z - a))?)?);
        self.poles.lock().unwrap().push((a, g.clone()));
        Ok(g)
    }

    fn check_point(r: &RationalFunction, z: C64) -> Result<()> {
        match r.poles.iter().find(|a| (*a - z).norm() <= 1e-12 * (1.0 + a.norm())) {
            Some(a) => invalid(format!("evaluation point {z} is at the pole {a}")),
            None => Ok(()),
        }
    }

    /// Green values at z: whether z is on K (all vanish), `g(z, ∞)` from
    /// above and below, and `g(z, a)` from above for each pole.
    fn point_terms(&self, z: C64, poles: &[C64], fields: &[Arc<BoundaryGreen>]) -> PointTerms {
        if self.k_set.near_support(z, 0.5 * self.k_set.h) {
            return PointTerms { on_k: true, inf: (0.0, 0.0), poles: vec![0.0; poles.len()] };
        }
        PointTerms {
            on_k: false,
            inf: (self.infinity.lower(z), self.infinity.upper(z)),
            poles: poles
                .iter()
                .zip(fields)
                .map(|(a, g)| if *a == z { f64::INFINITY } else { g.upper(1.0 / (z - a)) })
                .collect(),
        }
    }

    /// Upper bound of `Σ_j g_K(z, a_j) + (deg − n)·g_K(z, ∞)`.
    fn exponent(r: &RationalFunction, t: &PointTerms, index: &dyn Fn(C64) -> usize) -> f64 {
        if t.on_k {
            return 0.0;
        }
        let excess = r.degree() as f64 - r.poles.len() as f64;
        let gi = if excess >= 0.0 { t.inf.1 } else { t.inf.0 };
        excess * gi + r.poles.iter().map(|a| t.poles[index(*a)]).sum::<f64>()
    }

    fn distinct_poles(rs: &[RationalFunction]) -> Vec<C64> {
        let mut distinct: Vec<C64> = Vec::new();
        for a in rs.iter().flat_map(|r| &r.poles) {
            if !distinct.contains(a) {
                distinct.push(*a);
            }
        }
        distinct
    }

    pub fn bound(&self, r: &RationalFunction, z: C64) -> Result<f64> {
        Ok(self.bounds(std::slice::from_ref(r), &[z])?[0][0])
    }

    /// Bounds for every function at every point, `out[f][z]`, reusing Green
    /// values across functions sharing poles.
    pub fn bounds(&self, rs: &[RationalFunction], zs: &[C64]) -> Result<Vec<Vec<f64>>> {
        let distinct = Self::distinct_poles(rs);
        let fields = distinct.iter().map(|a| self.pole_field(*a)).collect::<Result<Vec<_>>>()?;
        let table = crate::par::map(zs, |z| self.point_terms(*z, &distinct, &fields));
        let index = |a: C64| distinct.iter().position(|d| *d == a).unwrap();
        crate::par::map(rs, |r| -> Result<Vec<f64>> {
            let sup = self.sup_norm(r);
            zs.iter()
                .zip(&table)
                .map(|(z, t)| {
                    Self::check_point(r, *z)?;
                    Ok(sup * Self::exponent(r, t, &index).exp())
                })
                .collect()
        })
        .into_iter()
        .collect()
    }
}

struct PointTerms {
    on_k: bool,
    inf: (f64, f64),
    poles: Vec<f64>,
}

/// `‖r‖_K · exp(Σ_j g_K(z, a_j) + (deg − n)·g_K(z, ∞)) ≥ |r(z)|`.
pub fn blatt_bound(r: &RationalFunction, ctx: &BlattContext, z: C64) -> Result<f64> {
    ctx.bound(r, z)
}

/// Orthogonal projection onto `{p/q : deg p ≤ k}` with fixed poles.
#[derive(Clone, Debug)]
pub struct FixedPoleFit {
    pub r: RationalFunction,
    pub err_l2: f64,
    /// Inverse of the smallest Arnoldi norm ratio.
    pub condition: f64,
    pub ill_conditioned: bool,
}

/// Best `L²_μ` approximation of `f` (sampled on the atoms) by `p/q`,
/// `q = Π(z − pole)`, `deg p ≤ k`.
pub fn best_l2_fixed_poles(f_samples: &[C64], mu: &DiscreteMeasure, k: usize, poles: &[C64]) -> Result<FixedPoleFit> {
    if f_samples.len() != mu.len() {
        return invalid("f must be sampled on the atoms of μ");
    }
    let q: Vec<C64> = mu.atoms().iter().map(|z| poles.iter().map(|a| z - a).product()).collect();
    if q.iter().any(|v| !(v.norm() > 0.0) || !v.re.is_finite()) {
        return invalid("a pole coincides with an atom of μ");
    }
    let omega: Vec<f64> = mu.weights().iter().zip(&q).map(|(w, v)| w / v.norm_sqr()).collect();
    let (basis, vals) = Arnoldi::build(mu.atoms(), &omega, k)?;
    let fq: Vec<C64> = f_samples.iter().zip(&q).map(|(f, v)| f * v).collect();
    let coeffs: Vec<C64> = vals
        .iter()
        .map(|v| fq.iter().zip(v).zip(&omega).map(|((a, b), w)| a * b.conj() * *w).sum())
        .collect();
    let resid: Vec<C64> = (0..mu.len())
        .map(|i| f_samples[i] - vals.iter().zip(&coeffs).map(|(v, c)| v[i] * c).sum::<C64>() / q[i])
        .collect();
    let err_l2 = l2_norm(mu, &resid)?;
    let condition = 1.0 / basis.min_ratio;
    Ok(FixedPoleFit {
        r: RationalFunction {
            numerator: Numerator::Orthogonal(OrthogonalNumerator { basis, coeffs }),
            poles: poles.to_vec(),
            scale: C64::new(1.0, 0.0),
        },
        err_l2,
        condition,
        ill_conditioned: condition > 1e8,
    })
}

/// Pole-search parameters for [`best_l2_rational`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SearchConfig {
    /// Minimum distance from poles to K; default `0.1·diam K`.
    pub barrier: Option<f64>,
    /// Candidate grid spacing; default `diam K / 8`.
    pub grid_step: Option<f64>,
    /// Objective evaluations per local search, per pole.
    pub evals_per_pole: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { barrier: None, grid_step: None, evals_per_pole: 200 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxResult {
    pub k: usize,
    pub n: usize,
    pub err_l2: f64,
    pub err_sup: f64,
    #[serde(serialize_with = "ser_points")]
    pub poles: Vec<C64>,
    /// Objective evaluations spent in the pole search.
    pub evaluations: usize,
    pub condition: f64,
    #[serde(skip)]
    pub r: Option<RationalFunction>,
}

fn ser_points<S: serde::Serializer>(p: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(p.len()))?;
    for z in p {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Sampled target: values on the atoms of μ and on K's sup grid.
pub struct Target<'a> {
    mu: &'a DiscreteMeasure,
    k_set: &'a SetDiscretization,
    f_mu: Vec<C64>,
    grid: Vec<C64>,
    f_grid: Vec<C64>,
    barrier: f64,
    diam: f64,
}

impl<'a> Target<'a> {
    pub fn new(f: &(dyn Fn(C64) -> C64 + Sync), mu: &'a DiscreteMeasure, k_set: &'a SetDiscretization, cfg: &SearchConfig) -> Result<Self> {
        let f_mu = crate::par::map(mu.atoms(), |z| f(*z));
        let grid = k_set.refined_points(4);
        let f_grid = crate::par::map(&grid, |z| f(*z));
        if f_mu.iter().chain(&f_grid).any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return invalid("target function is not finite on K");
        }
        let diam = k_set.diameter();
        Ok(Target { mu, k_set, f_mu, grid, f_grid, barrier: cfg.barrier.unwrap_or(0.1 * diam), diam })
    }

    fn admissible(&self, a: C64) -> bool {
        a.re.is_finite() && a.im.is_finite() && !self.k_set.hull_indicator(a) && self.k_set.node_distance(a) >= self.barrier
    }

    fn objective(&self, k: usize, poles: &[C64]) -> f64 {
        if !poles.iter().all(|a| self.admissible(*a)) {
            return f64::INFINITY;
        }
        match best_l2_fixed_poles(&self.f_mu, self.mu, k, poles) {
            Ok(fit) => fit.err_l2,
            Err(_) => f64::INFINITY,
        }
    }

    fn result(&self, k: usize, poles: &[C64], evaluations: usize) -> Result<ApproxResult> {
        let fit = best_l2_fixed_poles(&self.f_mu, self.mu, k, poles)?;
        let err_sup = crate::par::max_range(self.grid.len(), |i| (self.f_grid[i] - fit.r.eval(self.grid[i])).norm());
        Ok(ApproxResult {
            k,
            n: poles.len(),
            err_l2: fit.err_l2,
            err_sup,
            poles: poles.to_vec(),
            evaluations,
            condition: fit.condition,
            r: Some(fit.r),
        })
    }

    fn candidates(&self, step: f64) -> Vec<C64> {
        let nodes = &self.k_set.nodes;
        let (mut lo, mut hi) = (nodes[0], nodes[0]);
        for z in nodes {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let c = 0.5 * (lo + hi);
        let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im) + 1.5 * self.diam;
        let m = (half / step).round() as i64;
        let mut out = Vec::new();
        for j in -m..=m {
            for i in -m..=m {
                let z = c + C64::new(i as f64 * step, j as f64 * step);
                if self.admissible(z) {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// Best `L²_μ` approximation in `R_{k,n}` found by a greedy pole placement
/// on a candidate grid and a Nelder–Mead refinement of all poles. The result
/// is an upper bound on the true minimum. `warm` seeds the poles.
pub fn best_l2_rational(target: &Target, k: usize, n: usize, cfg: &SearchConfig, warm: Option<&[C64]>) -> Result<ApproxResult> {
    if n > k {
        return invalid(format!("n = {n} poles exceed the degree k = {k}"));
    }
    let mut poles: Vec<C64> = warm.unwrap_or(&[]).iter().copied().filter(|a| target.admissible(*a)).take(n).collect();
    let mut evaluations = 0;
    if n == 0 {
        return target.result(k, &[], 0);
    }
    if poles.len() < n {
        let cands = target.candidates(cfg.grid_step.unwrap_or(target.diam / 8.0));
        if cands.is_empty() {
            return invalid("no admissible pole candidates outside the barrier");
        }
        while poles.len() < n {
            let errs = crate::par::map(&cands, |c| {
                let mut trial = poles.clone();
                trial.push(*c);
                target.objective(k, &trial)
            });
            evaluations += cands.len();
            let best = (0..cands.len()).fold(0, |b, i| if errs[i] < errs[b] { i } else { b });
            poles.push(cands[best]);
        }
    }
    let x0: Vec<f64> = poles.iter().flat_map(|a| [a.re, a.im]).collect();
    let obj = |x: &[f64]| {
        let p: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        (target.objective(k, &p) + 1e-300).ln()
    };
    let (x, used) = nelder_mead(&obj, &x0, 0.05 * target.diam, cfg.evals_per_pole * n);
    evaluations += used;
    let refined: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
    let start = target.objective(k, &poles);
    let end = target.objective(k, &refined);
    target.result(k, if end <= start { &refined } else { &poles }, evaluations)
}

/// Minimize `f` from `x0` with an initial simplex of edge `step`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_evals: usize) -> (Vec<f64>, usize) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let mut evals = d + 1;
    let point = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        if (worst - best).abs() <= 1e-10 * best.abs().max(1.0) {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let xw = simplex[d].0.clone();
        let xr = point(&centroid, &xw, -1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = point(&centroid, &xw, -2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[d].1 {
                let x = point(&centroid, &xr, 0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = point(&centroid, &xw, 0.5);
                let v = f(&x);
                (x, v)
            };
            evals += 1;
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = point(&x0, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
                evals += d;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex.swap_remove(0).0, evals)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateClass {
    /// Geometric decay at the fitted rate.
    Geometric,
    /// Faster than any geometric rate.
    Superlinear,
    /// Errors at the floor from the first degree on: f is in the class.
    Exact,
    /// No decay: rate ≥ 0.99.
    NonDecaying,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub n: usize,
    pub ks: Vec<usize>,
    pub err_l2: Vec<f64>,
    pub err_sup: Vec<f64>,
    /// `err^{1/k}` sequences.
    pub root_l2: Vec<f64>,
    pub root_sup: Vec<f64>,
    /// Fitted geometric rates over the tail.
    pub rate_l2: f64,
    pub rate_sup: f64,
    /// `1/rate`, infinite for exact and superlinear classes.
    pub predicted_r: f64,
    pub class: RateClass,
    pub rates_consistent: bool,
    /// Errors below this count as zero.
    pub floor: f64,
    pub results: Vec<ApproxResult>,
}

const FLOOR_REL: f64 = 1e-12;

/// Slope of `log y` against k over the tail half of the points above the floor.
fn tail_rate(ks: &[usize], errs: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ks.iter().zip(errs).filter(|(_, e)| **e > floor).map(|(k, e)| (*k as f64, e.ln())).collect();
    if pts.len() < 4 {
        return None;
    }
    let tail = &pts[pts.len() / 2..];
    let tail = if tail.len() < 3 { &pts[pts.len() - 3..] } else { tail };
    let rows: Vec<Vec<f64>> = tail.iter().map(|p| vec![1.0, p.0]).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.1).collect();
    least_squares(&rows, &y).map(|f| f.coef[1].exp())
}

/// Coefficient of `k log k` in a fit of `log err`, negative for factorial decay.
fn superlinear_coef(ks: &[usize], errs: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        ks.iter().zip(errs).filter(|(k, e)| **e > floor && **k >= 2).map(|(k, e)| (*k as f64, e.ln())).collect();
    if pts.len() < 6 {
        return None;
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![1.0, p.0, p.0 * p.0.ln()]).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    least_squares(&rows, &y).map(|f| f.coef[2])
}

/// Decay of best approximation errors in `R_{k,n}` for `k = max(n, 1)..=k_max`.
pub fn overconvergence_rate(
    f: &(dyn Fn(C64) -> C64 + Sync),
    k_set: &SetDiscretization,
    mu: &DiscreteMeasure,
    n: usize,
    k_max: usize,
    cfg: &SearchConfig,
) -> Result<RateReport> {
    let green = equilibrium_measure(k_set, DEFAULT_GREEN_K)?;
    if !green.regular_flag {
        return invalid("rates need a set whose Green function is flagged regular");
    }
    if let Some(a) = mu.atoms().iter().find(|a| !k_set.near_support(**a, k_set.h)) {
        return invalid(format!("measure atom {a} is not on K"));
    }
    let k0 = n.max(1);
    if k_max < k0 {
        return invalid(format!("k_max = {k_max} is below the first degree {k0}"));
    }
    let target = Target::new(f, mu, k_set, cfg)?;
    let ks: Vec<usize> = (k0..=k_max).collect();
    let results: Vec<ApproxResult> = if n == 0 {
        crate::par::map(&ks, |&k| best_l2_rational(&target, k, 0, cfg, None)).into_iter().collect::<Result<_>>()?
    } else {
        let mut out: Vec<ApproxResult> = Vec::with_capacity(ks.len());
        for &k in &ks {
            let warm = out.last().map(|r| r.poles.clone());
            out.push(best_l2_rational(&target, k, n, cfg, warm.as_deref())?);
        }
        out
    };
    let err_l2: Vec<f64> = results.iter().map(|r| r.err_l2).collect();
    let err_sup: Vec<f64> = results.iter().map(|r| r.err_sup).collect();
    let fnorm = l2_norm(mu, &target.f_mu)?;
    let fsup = target.f_grid.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor_l2 = FLOOR_REL * fnorm.max(f64::MIN_POSITIVE);
    let floor_sup = FLOOR_REL * fsup.max(f64::MIN_POSITIVE) * 10.0;
    let root = |e: &[f64]| -> Vec<f64> { e.iter().zip(&ks).map(|(e, k)| e.powf(1.0 / *k as f64)).collect() };
    let above = err_l2.iter().filter(|e| **e > floor_l2).count();
    let (class, rate_l2, rate_sup) = if err_l2[0] <= floor_l2 {
        (RateClass::Exact, 0.0, 0.0)
    } else {
        match (tail_rate(&ks, &err_l2, floor_l2), tail_rate(&ks, &err_sup, floor_sup)) {
            (Some(a), Some(b)) => {
                let c = superlinear_coef(&ks, &err_l2, floor_l2).unwrap_or(0.0);
                if c < -0.5 {
                    (RateClass::Superlinear, a, b)
                } else if a >= 0.99 {
                    (RateClass::NonDecaying, a, b)
                } else {
                    (RateClass::Geometric, a, b)
                }
            }
            // Few points before the floor: faster than the degree range resolves.
            _ if above < ks.len() => (RateClass::Superlinear, 0.0, 0.0),
            _ => return Err(Error::InvalidInput("too few degrees to fit a rate".into())),
        }
    };
    let predicted_r = match class {
        RateClass::Exact | RateClass::Superlinear => f64::INFINITY,
        RateClass::NonDecaying => 1.0,
        RateClass::Geometric => 1.0 / rate_l2,
    };
    Ok(RateReport {
        n,
        root_l2: root(&err_l2),
        root_sup: root(&err_sup),
        ks,
        err_l2,
        err_sup,
        rate_l2,
        rate_sup,
        predicted_r,
        class,
        rates_consistent: (rate_l2 - rate_sup).abs() <= 0.05,
        floor: floor_l2,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CompactSetSpec;
    use crate::measures::{realize, MeasureSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit_circle(n: usize) -> (SetDiscretization, DiscreteMeasure) {
        let k = SetDiscretization::discretize(&CompactSetSpec::circle(c(0.0, 0.0), 1.0), n).unwrap();
        let mu = realize(&MeasureSpec::arclength(None, 1.0), &k).unwrap();
        (k, mu)
    }

    #[test]
    fn blatt_examples() {
        let (k, _) = unit_circle(512);
        let ctx = BlattContext::new(&k).unwrap();
        let zk = RationalFunction::new(
            (0..=6).map(|j| if j == 6 { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect(),
            vec![],
        )
        .unwrap();
        let b = blatt_bound(&zk, &ctx, c(0.0, 2.0)).unwrap();
        assert!(b >= 64.0 && b / 64.0 - 1.0 < 1e-4, "{b}");
        let on_k = blatt_bound(&zk, &ctx, k.nodes[5]).unwrap();
        assert!((on_k - 1.0).abs() < 0.01);
        let inv = RationalFunction::new(vec![c(1.0, 0.0)], vec![c(0.0, 0.0)]).unwrap();
        // ‖1/z‖_K = 1 and g(½, 0) = log 2: the bound is sharp at 2.
        let b = blatt_bound(&inv, &ctx, c(0.5, 0.0)).unwrap();
        assert!(b >= 2.0 && b - 2.0 < 1e-4, "{b}");
        assert!(blatt_bound(&inv, &ctx, c(0.0, 0.0)).is_err());
        assert!(RationalFunction::new(vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn bounds_table_matches_single() {
        let (k, _) = unit_circle(256);
        let ctx = BlattContext::new(&k).unwrap();
        let r = RationalFunction::new(vec![c(1.0, 0.5), c(-0.3, 0.0), c(0.2, 0.1)], vec![c(0.0, 0.0), c(3.0, 0.0)]).unwrap();
        let zs = [c(0.3, 0.2), c(2.0, -1.0), c(-1.5, 0.5)];
        let table = ctx.bounds(std::slice::from_ref(&r), &zs).unwrap();
        for (z, b) in zs.iter().zip(&table[0]) {
            assert!((ctx.bound(&r, *z).unwrap() - b).abs() < 1e-12 * b);
            assert!(*b >= r.eval(*z).norm());
        }
    }

    #[test]
    fn fixed_poles_cases() {
        let (k, mu) = unit_circle(256);
        let f = |z: C64| 1.0 / (z - 2.0);
        let fs: Vec<C64> = mu.atoms().iter().map(|z| f(*z)).collect();
        let exact = best_l2_fixed_poles(&fs, &mu, 0, &[c(2.0, 0.0)]).unwrap();
        assert!(exact.err_l2 < 1e-12);
        for deg in [0, 3, 10] {
            let fit = best_l2_fixed_poles(&fs, &mu, deg, &[]).unwrap();
            // Taylor tail: Σ_{j>k} 2π·4^{−(j+1)}.
            let tail: f64 = ((deg + 1)..200).map(|j| 2.0 * PI * 4f64.powi(-(j as i32 + 1))).sum();
            assert!((fit.err_l2 / tail.sqrt() - 1.0).abs() < 1e-9, "k = {deg}");
            assert!(!fit.ill_conditioned);
        }
        let p = |z: C64| (z * z - 0.5) / ((z - 1.7) * (z + c(0.0, 2.0)));
        let ps: Vec<C64> = mu.atoms().iter().map(|z| p(*z)).collect();
        let fit = best_l2_fixed_poles(&ps, &mu, 2, &[c(1.7, 0.0), c(0.0, -2.0)]).unwrap();
        assert!(fit.err_l2 < 1e-10);
        assert!((fit.r.eval(c(0.2, 0.4)) - p(c(0.2, 0.4))).norm() < 1e-10);
        assert!(best_l2_fixed_poles(&ps, &mu, 2, &[k.nodes[0]]).is_err());
    }

    #[test]
    fn residual_orthogonal_to_span() {
        let (_, mu) = unit_circle(256);
        let f = |z: C64| (z * 0.7).exp() / (z - c(0.5, 1.8));
        let fs: Vec<C64> = mu.atoms().iter().map(|z| f(*z)).collect();
        let poles = [c(2.2, 0.3)];
        let fit = best_l2_fixed_poles(&fs, &mu, 5, &poles).unwrap();
        let res: Vec<C64> = mu.atoms().iter().zip(&fs).map(|(z, v)| v - fit.r.eval(*z)).collect();
        for j in 0..=5 {
            let g: Vec<C64> = mu.atoms().iter().map(|z| z.powu(j) / (z - poles[0])).collect();
            let ip = crate::measures::inner(&mu, &res, &g).unwrap();
            assert!(ip.norm() < 1e-10, "j = {j}: {ip}");
        }
    }

    #[test]
    fn rate_of_simple_pole() {
        let (k, mu) = unit_circle(256);
        let f = |z: C64| 1.0 / (z - 2.0);
        let cfg = SearchConfig::default();
        let rep = overconvergence_rate(&f, &k, &mu, 0, 30, &cfg).unwrap();
        assert_eq!(rep.class, RateClass::Geometric);
        assert!((rep.predicted_r - 2.0).abs() < 0.1, "{}", rep.predicted_r);
        assert!(rep.rates_consistent);
        assert!(rep.err_l2.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
        let exact = overconvergence_rate(&f, &k, &mu, 1, 6, &cfg).unwrap();
        assert_eq!(exact.class, RateClass::Exact);
        assert!(exact.predicted_r.is_infinite());
    }

    #[test]
    fn entire_function_is_superlinear() {
        let (k, mu) = unit_circle(256);
        let rep = overconvergence_rate(&|z: C64| z.exp(), &k, &mu, 1, 20, &SearchConfig::default()).unwrap();
        assert_eq!(rep.class, RateClass::Superlinear, "{:?}", rep.err_l2);
        assert!(rep.predicted_r.is_infinite());
    }

    #[test]
    fn non_decaying_errors() {
        let (k, mu) = unit_circle(256);
        // conj(z) = 1/z on the circle but has no analytic extension: its
        // best polynomial approximation error stays at ‖z̄‖.
        let f = |z: C64| z.conj();
        let rep = overconvergence_rate(&f, &k, &mu, 0, 12, &SearchConfig::default()).unwrap();
        assert_eq!(rep.class, RateClass::NonDecaying);
        assert_eq!(rep.predicted_r, 1.0);
    }

    #[test]
    fn barrier_and_class_nesting() {
        let (k, mu) = unit_circle(256);
        let f = |z: C64| 1.0 / ((z - 1.5) * (z - 3.0));
        let cfg = SearchConfig::default();
        let t = Target::new(&f, &mu, &k, &cfg).unwrap();
        let r0 = best_l2_rational(&t, 8, 0, &cfg, None).unwrap();
        let r1 = best_l2_rational(&t, 8, 1, &cfg, None).unwrap();
        assert!(r1.err_l2 <= r0.err_l2 + 1e-12);
        assert!((r1.poles[0] - 1.5).norm() < 0.05, "{:?}", r1.poles);
        assert!(r1.poles.iter().all(|a| k.node_distance(*a) >= 0.2));
        assert!(best_l2_rational(&t, 2, 3, &cfg, None).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn l2_error_below_sup(deg in 0usize..12, re in 1.3f64..3.0, im in -1.0f64..1.0) {
            let (k, mu) = unit_circle(128);
            let b = c(re, im);
            let f = move |z: C64| 1.0 / (z - b);
            let cfg = SearchConfig::default();
            let t = Target::new(&f, &mu, &k, &cfg).unwrap();
            let r = best_l2_rational(&t, deg, 0, &cfg, None).unwrap();
            prop_assert!(r.err_l2 <= mu.total_mass().sqrt() * r.err_sup * (1.0 + 1e-9));
        }
    }
}
