//! The Λ* mass-density criterion, its mapped forms, and separating maps
//! `f = c / Π(z − w_j)` with verified modulus certificates.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{hull_distance, set_distance, SetDiscretization};
use crate::measures::{ball_mass, pushforward, DiscreteMeasure};
use crate::potential::{capacity_estimate, equilibrium_measure, kth_diameter, leja_points, DEFAULT_GREEN_K};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Passes,
    Fails,
    Inconclusive,
}

/// Thresholds for [`lambda_star_check`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LambdaConfig {
    /// Pass when `cap(A_r) ≥ (1 − pass_tol)·cap(K)` at the smallest r.
    pub pass_tol: f64,
    /// Fail when `cap(A_r) < (1 − fail_tol)·cap(K)` at the smallest r.
    pub fail_tol: f64,
    /// Leja budget per capacity estimate.
    pub k_max: usize,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig { pass_tol: 0.02, fail_tol: 0.10, k_max: DEFAULT_GREEN_K }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaStarReport {
    pub t: f64,
    pub schedule: Vec<f64>,
    /// `cap(A_{r,t})` per scheduled r.
    pub cap_ar: Vec<f64>,
    /// Share of K's nodes in `A_{r,t}`.
    pub node_fraction: Vec<f64>,
    pub cap_k: f64,
    pub verdict: Verdict,
    pub config: LambdaConfig,
}

fn check_schedule(schedule: &[f64], floor: f64) -> Result<()> {
    if schedule.is_empty() {
        return invalid("empty r schedule");
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("r schedule must be strictly decreasing");
    }
    if let Some(r) = schedule.iter().find(|r| !(**r >= floor)) {
        return Err(Error::BelowResolution(format!("scheduled r = {r} is below the mesh floor {floor}")));
    }
    Ok(())
}

fn check_support(k_set: &SetDiscretization, mu: &DiscreteMeasure) -> Result<()> {
    if mu.is_empty() {
        return invalid("measure has no atoms");
    }
    match mu.atoms().iter().find(|a| !k_set.near_support(**a, k_set.h)) {
        Some(a) => invalid(format!("measure atom {a} is not on K")),
        None => Ok(()),
    }
}

/// `cap` of a node subset, 0 for fewer than two nodes. Small subsets are
/// subdivided so the pool holds about four nodes per Leja point.
pub fn subset_capacity(set: &SetDiscretization, k_max: usize) -> Result<f64> {
    if set.len() < 2 {
        return Ok(0.0);
    }
    let factor = (4 * k_max).div_ceil(set.len()).clamp(1, 64);
    let pool = if factor > 1 { set.subdivided(factor) } else { set.clone() };
    Ok(capacity_estimate(&pool, k_max.min(pool.len() / 4).max(2))?.capacity)
}

/// Node indices of `A_{r,t} = {z ∈ K : μ(B(z, r)) ≥ r^t}`.
pub fn mass_density_set(k_set: &SetDiscretization, mu: &DiscreteMeasure, t: f64, r: f64) -> Result<Vec<usize>> {
    let thr = r.powf(t);
    let masses = crate::par::map(&k_set.nodes, |z| ball_mass(mu, *z, r));
    let mut idx = Vec::new();
    for (i, m) in masses.into_iter().enumerate() {
        if m? >= thr {
            idx.push(i);
        }
    }
    Ok(idx)
}

fn verdict(last: f64, cap_k: f64, cfg: &LambdaConfig) -> Verdict {
    if last >= (1.0 - cfg.pass_tol) * cap_k {
        Verdict::Passes
    } else if last < (1.0 - cfg.fail_tol) * cap_k {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    }
}

/// Capacities of `A_{r,t}` along a decreasing schedule, compared with `cap(K)`.
pub fn lambda_star_check(
    k_set: &SetDiscretization,
    mu: &DiscreteMeasure,
    t: f64,
    schedule: &[f64],
    cfg: &LambdaConfig,
) -> Result<LambdaStarReport> {
    lambda_star_generic(k_set, mu, t, schedule, cfg, &|sub| Ok(sub.clone()), k_set)
}

/// Shared driver: `A_{r,t}` is computed in `k_set`, the capacity is taken of
/// `image(A_{r,t})` and compared with `cap(image(K))`.
fn lambda_star_generic(
    k_set: &SetDiscretization,
    mu: &DiscreteMeasure,
    t: f64,
    schedule: &[f64],
    cfg: &LambdaConfig,
    image: &(dyn Fn(&SetDiscretization) -> Result<SetDiscretization> + Sync),
    image_k: &SetDiscretization,
) -> Result<LambdaStarReport> {
    if !(t > 0.0) {
        return invalid(format!("t must be positive, got {t}"));
    }
    check_support(k_set, mu)?;
    check_schedule(schedule, 3.0 * k_set.h.max(mu.mesh()))?;
    let cap_k = subset_capacity(image_k, cfg.k_max)?;
    let rows = crate::par::map(schedule, |&r| -> Result<(f64, f64)> {
        let idx = mass_density_set(k_set, mu, t, r)?;
        let frac = idx.len() as f64 / k_set.len() as f64;
        if idx.len() == k_set.len() {
            return Ok((cap_k, frac));
        }
        Ok((subset_capacity(&image(&k_set.subset(&idx))?, cfg.k_max)?, frac))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let cap_ar: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(LambdaStarReport {
        t,
        schedule: schedule.to_vec(),
        verdict: verdict(*cap_ar.last().unwrap(), cap_k, cfg),
        node_fraction: rows.iter().map(|r| r.1).collect(),
        cap_ar,
        cap_k,
        config: *cfg,
    })
}

/// `f(z) = scale / Π(z − w_j)` with certificates from direct evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct SeparatingMap {
    #[serde(serialize_with = "ser_points")]
    pub poles: Vec<C64>,
    pub m: usize,
    pub scale: f64,
    pub r1: f64,
    pub r2: f64,
    pub max_k: f64,
    pub min_p: f64,
    pub max_p: f64,
    /// `max_K|f| < R1 < min_P|f| ≤ max_P|f| < R2` on every evaluated point.
    pub verified: bool,
    /// Surrogate margin of the accepted degree (0 for maps given explicitly).
    pub margin: f64,
    /// Pre-scaling factor applied before the search.
    pub lambda: f64,
}

fn ser_points<S: serde::Serializer>(p: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(p.len()))?;
    for z in p {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// Points on which the modulus certificates are evaluated.
fn cert_points(set: &SetDiscretization) -> Vec<C64> {
    set.refined_points(4)
}

impl SeparatingMap {
    /// Evaluate the certificates for given poles and scale.
    pub fn from_poles(poles: &[C64], scale: f64, k_set: &SetDiscretization, p: &SetDiscretization) -> Result<Self> {
        if poles.is_empty() {
            return invalid("separating map needs at least one pole");
        }
        let mut map = SeparatingMap {
            poles: poles.to_vec(),
            m: poles.len(),
            scale,
            r1: 0.0,
            r2: 0.0,
            max_k: 0.0,
            min_p: 0.0,
            max_p: 0.0,
            verified: false,
            margin: 0.0,
            lambda: 1.0,
        };
        let kp = cert_points(k_set);
        let pp = cert_points(p);
        map.max_k = crate::par::max_range(kp.len(), |i| map.eval(kp[i]).norm());
        map.max_p = crate::par::max_range(pp.len(), |i| map.eval(pp[i]).norm());
        map.min_p = -crate::par::max_range(pp.len(), |i| -map.eval(pp[i]).norm());
        if !map.max_k.is_finite() {
            return invalid("a pole lies on K");
        }
        map.r1 = (map.max_k * map.min_p).sqrt();
        map.r2 = 2.0 * map.max_p;
        map.verified = map.verify(k_set, p);
        Ok(map)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.scale / self.poles.iter().map(|w| z - w).product::<C64>()
    }

    pub fn derivative(&self, z: C64) -> C64 {
        -self.eval(z) * self.poles.iter().map(|w| 1.0 / (z - w)).sum::<C64>()
    }

    /// Re-check the sandwich pointwise on all certificate points.
    pub fn verify(&self, k_set: &SetDiscretization, p: &SetDiscretization) -> bool {
        let ok_k = cert_points(k_set).iter().all(|z| self.eval(*z).norm() < self.r1);
        let ok_p = cert_points(p).iter().all(|z| {
            let v = self.eval(*z).norm();
            v > self.r1 && v < self.r2
        });
        ok_k && ok_p && self.max_k < self.r1 && self.r1 < self.min_p && self.min_p <= self.max_p && self.max_p < self.r2
    }

    /// `max |f'|` over the δ-neighborhood of K, sampled on circles of radius
    /// δ/2 and δ around each certificate point of K.
    pub fn lipschitz(&self, k_set: &SetDiscretization, delta: f64) -> Result<f64> {
        if self.poles.iter().any(|w| k_set.node_distance(*w) <= delta) {
            return invalid(format!("a pole lies in the {delta}-neighborhood of K"));
        }
        let pts = cert_points(k_set);
        const DIRS: usize = 32;
        Ok(crate::par::max_range(pts.len(), |i| {
            let mut m = self.derivative(pts[i]).norm();
            for j in 0..DIRS {
                let e = C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / DIRS as f64);
                for s in [0.5 * delta, delta] {
                    m = m.max(self.derivative(pts[i] + s * e).norm());
                }
            }
            m
        }))
    }
}

/// `4(1 − 2δ)/(1 − 4δ)`, the Lipschitz value quoted with Example 2 for
/// `1/(z² − 0.01)` on the δ-neighborhood of the annulus boundary. Direct
/// evaluation ([`SeparatingMap::lipschitz`]) gives a larger value, driven by
/// the inner circle.
pub fn example2_lipschitz_closed_form(delta: f64) -> f64 {
    4.0 * (1.0 - 2.0 * delta) / (1.0 - 4.0 * delta)
}

/// Parameters of [`separating_map_build`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MapSearch {
    pub rho: f64,
    pub m_max: usize,
    pub eps: f64,
}

fn check_separated(k_set: &SetDiscretization, p: &SetDiscretization) -> Result<f64> {
    if set_distance(k_set, p) < 0.5 * k_set.h.min(p.h) {
        return Err(Error::Overlap("K and P meet".into()));
    }
    if let Some(z) = k_set.nodes.iter().find(|z| p.hull_indicator(**z)) {
        return Err(Error::Overlap(format!("K meets the hull of P at {z}")));
    }
    Ok(hull_distance(p, k_set))
}

/// Search `m = 1..=m_max` for poles at Leja points of the boundary of `P̂^ρ`
/// such that `log δ_m(P̂^ρ) < min_K (1/m) log|q_m| − ε`, then certify
/// `f = 1/q_m`.
pub fn separating_map_build(k_set: &SetDiscretization, p: &SetDiscretization, cfg: &MapSearch) -> Result<SeparatingMap> {
    let d = check_separated(k_set, p)?;
    if !(cfg.rho > 0.0 && cfg.rho < 0.5 * d) {
        return invalid(format!("ρ = {} must lie in (0, d(P̂, K)/2 = {})", cfg.rho, 0.5 * d));
    }
    if cfg.m_max == 0 {
        return invalid("m_max must be positive");
    }
    // The test below is invariant under z ↦ λz, so λ only rescales f.
    let lambda = if p.is_polar() {
        1.0
    } else {
        let g = equilibrium_measure(p, DEFAULT_GREEN_K)?;
        let a = k_set.nodes.iter().map(|z| g.eval(*z)).fold(f64::INFINITY, f64::min);
        if g.capacity.ln() >= a {
            0.5 * a.exp() / g.capacity
        } else {
            1.0
        }
    };
    let p_rho = p.hull().epsilon_neighborhood(cfg.rho)?;
    let leja = leja_points(&p_rho, cfg.m_max.min(p_rho.len()), false)?;
    let kp = cert_points(k_set);
    let mut best = (f64::NEG_INFINITY, 0);
    for m in 1..=leja.points.len() {
        let w = &leja.points[..m];
        let log_delta = if m == 1 {
            p_rho.nodes.iter().map(|z| (z - w[0]).norm()).fold(0.0, f64::max).ln()
        } else {
            kth_diameter(w).ln()
        };
        let rhs = -crate::par::max_range(kp.len(), |i| {
            -(w.iter().map(|a| (kp[i] - a).norm().ln()).sum::<f64>() / m as f64)
        });
        let margin = rhs - cfg.eps - log_delta;
        if margin > best.0 {
            best = (margin, m);
        }
        if margin > 0.0 {
            let mut map = SeparatingMap::from_poles(w, lambda.powi(-(m as i32)), k_set, p)?;
            map.margin = margin;
            map.lambda = lambda;
            if map.verified {
                return Ok(map);
            }
        }
    }
    Err(Error::Budget(format!(
        "no m <= {} gives a separating map; best margin {:.4e} at m = {}",
        cfg.m_max, best.0, best.1
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct MappedReport {
    pub map: SeparatingMap,
    /// Mass density of `f_*μ` measured on `f(K)`.
    pub image_form: Option<LambdaStarReport>,
    /// Set when the image form could not run, e.g. below the image mesh floor.
    pub image_form_error: Option<String>,
    /// Mass density measured on K, capacity taken of `f(A_{r,t})`.
    pub preimage_form: LambdaStarReport,
    pub lipschitz_delta: f64,
    /// Sampled `max |f'|` on `K^δ`.
    pub lipschitz: f64,
    /// `cap f(K)` from the mapped nodes and from a twice subdivided image.
    pub image_capacity: [f64; 2],
    pub image_capacity_agree: bool,
}

/// Both mapped forms of the criterion for a given map.
pub fn mapped_lambda_star_with(
    k_set: &SetDiscretization,
    mu: &DiscreteMeasure,
    map: &SeparatingMap,
    t: f64,
    schedule: &[f64],
    image_schedule: &[f64],
    cfg: &LambdaConfig,
    delta: f64,
) -> Result<MappedReport> {
    let f = |z: C64| map.eval(z);
    let image_k = k_set.map(&f)?;
    let image_mu = pushforward(&f, mu)?;
    let (image_form, image_form_error) = match lambda_star_check(&image_k, &image_mu, t, image_schedule, cfg) {
        Ok(r) => (Some(r), None),
        Err(e @ (Error::BelowResolution(_) | Error::InvalidInput(_))) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let preimage_form = lambda_star_generic(k_set, mu, t, schedule, cfg, &|sub| sub.map(&f), &image_k)?;
    let c0 = preimage_form.cap_k;
    let c1 = subset_capacity(&k_set.subdivided(2).map(&f)?, cfg.k_max)?;
    Ok(MappedReport {
        map: map.clone(),
        image_form,
        image_form_error,
        preimage_form,
        lipschitz_delta: delta,
        lipschitz: map.lipschitz(k_set, delta)?,
        image_capacity: [c0, c1],
        image_capacity_agree: (c0 - c1).abs() <= 0.05 * c0.max(c1),
    })
}

/// Build a separating map, then run both mapped forms with one schedule.
pub fn mapped_lambda_star(
    k_set: &SetDiscretization,
    mu: &DiscreteMeasure,
    p: &SetDiscretization,
    t: f64,
    schedule: &[f64],
    search: &MapSearch,
    cfg: &LambdaConfig,
) -> Result<MappedReport> {
    let map = separating_map_build(k_set, p, search)?;
    let delta = 0.5 * hull_distance(p, k_set).min(search.rho);
    mapped_lambda_star_with(k_set, mu, &map, t, schedule, schedule, cfg, delta)
}
