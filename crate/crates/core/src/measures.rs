//! Discrete measures: construction from specs, L² norms, ball masses and
//! pushforwards.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Cell, CompactSetSpec, SetDiscretization};

/// Finitely many atoms with positive weights. Atoms that stand for a piece
/// of curve carry that piece as a [`Cell`], so ball masses can count the
/// covered fraction instead of all-or-nothing.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    atoms: Vec<C64>,
    weights: Vec<f64>,
    cells: Vec<Cell>,
    total_mass: f64,
    mesh: f64,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<C64>, weights: Vec<f64>) -> Result<Self> {
        let cells = atoms.iter().map(|a| Cell::Point(*a)).collect();
        Self::with_cells(atoms, weights, cells, 0.0)
    }

    pub fn with_cells(atoms: Vec<C64>, weights: Vec<f64>, cells: Vec<Cell>, mesh: f64) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.len() != cells.len() {
            return invalid("atoms, weights and cells must have equal lengths");
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return invalid(format!("measure weights must be positive and finite, got {w}"));
        }
        if atoms.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return invalid("measure atoms must be finite");
        }
        let total_mass = weights.iter().sum();
        Ok(DiscreteMeasure { atoms, weights, cells, total_mass, mesh })
    }

    /// The zero measure.
    pub fn empty() -> Self {
        DiscreteMeasure { atoms: vec![], weights: vec![], cells: vec![], total_mass: 0.0, mesh: 0.0 }
    }

    /// Counting measure `(1/n) Σ δ_{p_j}`, scaled to total `mass`.
    pub fn counting(points: &[C64], mass: f64) -> Result<Self> {
        let w = mass / points.len() as f64;
        Self::new(points.to_vec(), vec![w; points.len()])
    }

    pub fn atoms(&self) -> &[C64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Largest cell length; balls smaller than three times this are rejected.
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_cells(
            self.atoms.clone(),
            self.weights.iter().map(|w| w * c).collect(),
            self.cells.clone(),
            self.mesh,
        )
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.total_mass <= 0.0 {
            return invalid("cannot normalize the zero measure");
        }
        self.scaled(1.0 / self.total_mass)
    }

    /// Sum of measures.
    pub fn concat(parts: &[DiscreteMeasure]) -> Result<Self> {
        let mut atoms = vec![];
        let mut weights = vec![];
        let mut cells = vec![];
        let mut mesh: f64 = 0.0;
        for p in parts {
            atoms.extend_from_slice(&p.atoms);
            weights.extend_from_slice(&p.weights);
            cells.extend_from_slice(&p.cells);
            mesh = mesh.max(p.mesh);
        }
        Self::with_cells(atoms, weights, cells, mesh)
    }

    /// Same atoms with replaced weights; atoms whose new weight is not
    /// positive are dropped.
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| weights[i] > 0.0).collect();
        Self::with_cells(
            keep.iter().map(|&i| self.atoms[i]).collect(),
            keep.iter().map(|&i| weights[i]).collect(),
            keep.iter().map(|&i| self.cells[i].clone()).collect(),
            self.mesh,
        )
    }
}

fn check_len(mu: &DiscreteMeasure, n: usize) -> Result<()> {
    if mu.len() != n {
        return invalid(format!("expected {} sampled values, got {n}", mu.len()));
    }
    Ok(())
}

/// `‖f‖_{L²_μ}` from values of `f` at the atoms.
pub fn l2_norm(mu: &DiscreteMeasure, f: &[C64]) -> Result<f64> {
    check_len(mu, f.len())?;
    Ok(mu.weights.iter().zip(f).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt())
}

/// `⟨f, g⟩_μ = Σ w_i f_i conj(g_i)`.
pub fn inner(mu: &DiscreteMeasure, f: &[C64], g: &[C64]) -> Result<C64> {
    check_len(mu, f.len())?;
    check_len(mu, g.len())?;
    Ok(mu.weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| a * b.conj() * *w).sum())
}

/// `μ(B(z, r))` for the closed ball; curve atoms contribute the covered
/// fraction of their cell.
pub fn ball_mass(mu: &DiscreteMeasure, z: C64, r: f64) -> Result<f64> {
    if !(r >= 3.0 * mu.mesh) || r <= 0.0 {
        return Err(Error::BelowResolution(format!("ball radius {r} is below 3h = {}", 3.0 * mu.mesh)));
    }
    Ok(mu
        .cells
        .iter()
        .zip(&mu.weights)
        .map(|(c, w)| {
            let f = c.fraction_within(z, r);
            if f > 0.0 {
                w * f
            } else {
                0.0
            }
        })
        .sum())
}

/// `f_*μ`: atoms and cells mapped through `f`, weights unchanged.
pub fn pushforward(f: &dyn Fn(C64) -> C64, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let atoms: Vec<C64> = mu.atoms.iter().map(|&a| f(a)).collect();
    if atoms.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return invalid("map has a pole at an atom of the measure");
    }
    let cells: Vec<Cell> = mu.cells.iter().map(|c| c.map(f)).collect();
    let mesh = cells.iter().map(Cell::length).fold(0.0, f64::max);
    Ok(DiscreteMeasure { atoms, weights: mu.weights.clone(), cells, total_mass: mu.total_mass, mesh })
}

/// Smooth bump `exp(−1/(1 − (θ/π)²))` for θ ∈ (−π, π], zero at θ = ±π.
pub fn example3_density(theta: f64) -> f64 {
    let s = 1.0 - (theta / PI).powi(2);
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Density along a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    Constant { value: f64 },
    /// [`example3_density`] of the argument of the node.
    Bump,
}

impl Density {
    fn unit() -> Self {
        Density::Constant { value: 1.0 }
    }

    pub fn eval(&self, z: C64) -> f64 {
        match self {
            Density::Constant { value } => *value,
            Density::Bump => example3_density(z.arg()),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Declarative measure description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// `scale · density · ds` on `on` (defaults to the whole set).
    Arclength {
        #[serde(default)]
        on: Option<CompactSetSpec>,
        #[serde(default = "Density::unit")]
        density: Density,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Explicit `(re, im, weight)` triples.
    Atomic { atoms: Vec<[f64; 3]> },
    Mixture { parts: Vec<MixturePart> },
    /// `(1/4π) ds` on the unit circle plus `(1/2) Σ c_j δ_{z_j}` on a dense
    /// spiral in `{1/2 ≤ |z| ≤ 1}`, truncated at `atoms` terms.
    MuC {
        #[serde(default)]
        seed: u64,
        atoms: usize,
    },
    /// Bump density on the unit circle (or on `on`).
    Example3 {
        #[serde(default)]
        on: Option<CompactSetSpec>,
    },
}

impl MeasureSpec {
    pub fn arclength(on: Option<CompactSetSpec>, scale: f64) -> Self {
        MeasureSpec::Arclength { on, density: Density::unit(), scale }
    }
}

/// One `(coefficient, spec)` term of a mixture; serialized flat as
/// `{"coef": c, "kind": ..., ...}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixturePart {
    pub coef: f64,
    pub spec: MeasureSpec,
}

impl Serialize for MixturePart {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut v = serde_json::to_value(&self.spec).map_err(serde::ser::Error::custom)?;
        if let Some(obj) = v.as_object_mut() {
            obj.insert("coef".into(), serde_json::json!(self.coef));
        }
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MixturePart {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut v = serde_json::Value::deserialize(d)?;
        let obj = v.as_object_mut().ok_or_else(|| D::Error::custom("mixture part must be an object"))?;
        let coef = obj
            .remove("coef")
            .ok_or_else(|| D::Error::missing_field("coef"))?
            .as_f64()
            .ok_or_else(|| D::Error::custom("coef must be a number"))?;
        let spec = serde_json::from_value(v).map_err(D::Error::custom)?;
        Ok(MixturePart { coef, spec })
    }
}

fn check_support(mu: &DiscreteMeasure, k: &SetDiscretization) -> Result<()> {
    let tol = k.h * (1.0 + 1e-9);
    for a in mu.atoms() {
        if !k.near_support(*a, tol) {
            return invalid(format!("atom {a} lies off the support set"));
        }
    }
    Ok(())
}

fn arclength_on(d: &SetDiscretization, density: &dyn Fn(C64) -> f64, scale: f64) -> Result<DiscreteMeasure> {
    let weights: Vec<f64> = d
        .nodes
        .iter()
        .zip(&d.weights)
        .map(|(z, w)| scale * density(*z) * w)
        .collect();
    let keep: Vec<usize> = (0..d.len()).filter(|&i| weights[i] > 0.0).collect();
    DiscreteMeasure::with_cells(
        keep.iter().map(|&i| d.nodes[i]).collect(),
        keep.iter().map(|&i| weights[i]).collect(),
        keep.iter().map(|&i| d.cells[i].clone()).collect(),
        d.h,
    )
}

/// Turn a spec into a discrete measure supported on `k`.
pub fn realize(spec: &MeasureSpec, k: &SetDiscretization) -> Result<DiscreteMeasure> {
    let mu = match spec {
        MeasureSpec::Arclength { on, density, scale } => {
            if !(scale.is_finite() && *scale > 0.0) {
                return invalid(format!("arclength scale must be positive, got {scale}"));
            }
            let d = match on {
                Some(s) => SetDiscretization::discretize(s, k.resolution)?,
                None => k.clone(),
            };
            if d.is_polar() {
                return invalid("arclength measure needs a curve, got a point set");
            }
            arclength_on(&d, &|z| density.eval(z), *scale)?
        }
        MeasureSpec::Atomic { atoms } => DiscreteMeasure::new(
            atoms.iter().map(|a| C64::new(a[0], a[1])).collect(),
            atoms.iter().map(|a| a[2]).collect(),
        )?,
        MeasureSpec::Mixture { parts } => {
            if parts.is_empty() {
                return invalid("empty mixture");
            }
            let mut ms = vec![];
            for p in parts {
                if !(p.coef.is_finite() && p.coef > 0.0) {
                    return invalid(format!("mixture coefficients must be positive, got {}", p.coef));
                }
                ms.push(realize(&p.spec, k)?.scaled(p.coef)?);
            }
            DiscreteMeasure::concat(&ms)?
        }
        MeasureSpec::MuC { seed, atoms } => mu_c_generator(*seed, *atoms, k.resolution)?.0,
        MeasureSpec::Example3 { on } => {
            let d = match on {
                Some(s) => SetDiscretization::discretize(s, k.resolution)?,
                None => SetDiscretization::discretize(&CompactSetSpec::circle(C64::new(0.0, 0.0), 1.0), k.resolution)?,
            };
            arclength_on(&d, &|z| example3_density(z.arg()), 1.0)?
        }
    };
    check_support(&mu, k)?;
    Ok(mu)
}

/// Exponent schedule `n_k = k²` used by the μ_c certificate.
pub fn mu_c_exponent(k: usize) -> usize {
    k * k
}

/// Numerical check of the summability assumptions on a truncated μ_c.
#[derive(Clone, Debug, Serialize)]
pub struct MuCCertificate {
    pub c: Vec<f64>,
    pub z: Vec<[f64; 2]>,
    pub n: Vec<usize>,
    /// `(1 + Σ_{j>k} c_j |z_j|^{2n_k})^{1/(2n_k)}` for k = 1..=n.len().
    pub liminf_terms: Vec<f64>,
    /// Same with exponent `−2n_k`.
    pub liminf_terms_negative_exponent: Vec<f64>,
    pub k_le_n: bool,
    pub k_over_n_to_zero: bool,
    pub certified: bool,
    pub note: String,
}

const MU_C_CERT_K: usize = 20;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Dense spiral `z_j`, j ≥ 1, in the closed annulus `{1/2 ≤ |z| ≤ 1}`.
pub fn mu_c_points(seed: u64, count: usize) -> Vec<C64> {
    let mut s = seed;
    let a = (splitmix(&mut s) >> 11) as f64 / (1u64 << 53) as f64;
    let b = (splitmix(&mut s) >> 11) as f64 / (1u64 << 53) as f64;
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let silver = 2f64.sqrt() - 1.0;
    (1..=count)
        .map(|j| {
            let r = 0.5 + 0.5 * (a + j as f64 * golden).fract();
            let t = 2.0 * PI * (b + j as f64 * silver).fract();
            C64::from_polar(r, t)
        })
        .collect()
}

/// Truncated μ_c with `c_j = 2^{−j}` and its certificate.
pub fn mu_c_generator(seed: u64, atoms: usize, resolution: usize) -> Result<(DiscreteMeasure, MuCCertificate)> {
    let circle = SetDiscretization::discretize(&CompactSetSpec::circle(C64::new(0.0, 0.0), 1.0), resolution)?;
    let smooth = arclength_on(&circle, &|_| 1.0 / (4.0 * PI), 1.0)?;
    let zs = mu_c_points(seed, atoms);
    let c: Vec<f64> = (1..=atoms).map(|j| 0.5f64.powi(j as i32)).collect();
    let atomic = DiscreteMeasure::new(zs.clone(), c.iter().map(|cj| 0.5 * cj).collect())?;
    let mu = DiscreteMeasure::concat(&[smooth, atomic])?;

    let n: Vec<usize> = (1..=MU_C_CERT_K).map(mu_c_exponent).collect();
    let term = |k: usize, sign: f64| {
        let nk = n[k - 1] as f64;
        let tail: f64 = (k..atoms).map(|j| c[j] * zs[j].norm().powf(sign * 2.0 * nk)).sum();
        (1.0 + tail).powf(1.0 / (2.0 * nk))
    };
    let liminf_terms: Vec<f64> = (1..=MU_C_CERT_K).map(|k| term(k, 1.0)).collect();
    let liminf_terms_negative_exponent = (1..=MU_C_CERT_K).map(|k| term(k, -1.0)).collect();
    let k_le_n = n.iter().enumerate().all(|(i, &nk)| i + 1 <= nk);
    let ratios: Vec<f64> = n.iter().enumerate().map(|(i, &nk)| (i + 1) as f64 / nk as f64).collect();
    let k_over_n_to_zero = ratios.windows(2).all(|w| w[1] <= w[0]) && *ratios.last().unwrap() < 0.1;
    let last = *liminf_terms.last().unwrap();
    let (certified, note) = if atoms <= MU_C_CERT_K {
        (false, format!("truncation J = {atoms} does not exceed the certified range k <= {MU_C_CERT_K}"))
    } else if (last - 1.0).abs() > 1e-3 {
        (false, format!("liminf term at k = {MU_C_CERT_K} is {last}, not within 1e-3 of 1"))
    } else {
        (k_le_n && k_over_n_to_zero, "all three conditions hold on the truncation".to_string())
    };
    let cert = MuCCertificate {
        c,
        z: zs.iter().map(|z| [z.re, z.im]).collect(),
        n,
        liminf_terms,
        liminf_terms_negative_exponent,
        k_le_n,
        k_over_n_to_zero,
        certified,
        note,
    };
    Ok((mu, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit_circle(n: usize) -> SetDiscretization {
        SetDiscretization::discretize(&CompactSetSpec::circle(z(0.0, 0.0), 1.0), n).unwrap()
    }

    fn annulus(n: usize) -> SetDiscretization {
        SetDiscretization::discretize(&CompactSetSpec::annulus_boundary(z(0.0, 0.0), 0.5, 1.0), n).unwrap()
    }

    fn ex1e_spec() -> MeasureSpec {
        MeasureSpec::Mixture {
            parts: vec![
                MixturePart { coef: 0.5, spec: MeasureSpec::arclength(Some(CompactSetSpec::circle(z(0.0, 0.0), 1.0)), 1.0) },
                MixturePart { coef: 0.5, spec: MeasureSpec::arclength(Some(CompactSetSpec::circle(z(0.0, 0.0), 0.5)), 1.0) },
            ],
        }
    }

    #[test]
    fn arclength_masses() {
        let k = unit_circle(256);
        let mu = realize(&MeasureSpec::arclength(None, 1.0), &k).unwrap();
        assert!((mu.total_mass() - 2.0 * PI).abs() < 1e-3);
        let mu = realize(&ex1e_spec(), &annulus(256)).unwrap();
        assert!((mu.total_mass() - 1.5 * PI).abs() < 1e-10);
    }

    #[test]
    fn example3_mass_matches_quadrature() {
        // Composite Simpson with 200000 panels on the bump, independent of the
        // node layout.
        let n = 200_000;
        let hq = 2.0 * PI / n as f64;
        let mut oracle = 0.0;
        for i in 0..=n {
            let t = -PI + i as f64 * hq;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            oracle += w * example3_density(t);
        }
        oracle *= hq / 3.0;
        assert!((oracle - 1.394_847_711_112_935).abs() < 1e-10, "{oracle}");
        let mu = realize(&MeasureSpec::Example3 { on: None }, &unit_circle(1024)).unwrap();
        assert!((mu.total_mass() - oracle).abs() < 1e-8 * oracle.max(1.0) + 1e-9, "{} vs {oracle}", mu.total_mass());
    }

    #[test]
    fn monomial_norms() {
        let mu = realize(&MeasureSpec::arclength(None, 1.0), &unit_circle(256)).unwrap();
        let small = realize(
            &MeasureSpec::arclength(Some(CompactSetSpec::circle(z(0.0, 0.0), 0.5)), 1.0),
            &annulus(256),
        )
        .unwrap();
        for k in [0, 1, 5, 20] {
            let f: Vec<C64> = mu.atoms().iter().map(|a| a.powu(k)).collect();
            assert!((l2_norm(&mu, &f).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-10);
            let g: Vec<C64> = small.atoms().iter().map(|a| a.powu(k)).collect();
            let expect = PI.sqrt() * 0.5f64.powi(k as i32);
            assert!(((l2_norm(&small, &g).unwrap() - expect) / expect).abs() < 1e-10);
        }
        assert!(l2_norm(&mu, &[C64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn example2_ball_masses() {
        let k = annulus(512);
        let mu = realize(&ex1e_spec(), &k).unwrap();
        let r = 0.2;
        let outer = ball_mass(&mu, z(1.0, 0.0), r).unwrap();
        let inner = ball_mass(&mu, z(0.0, 0.5), r).unwrap();
        let target = r.asin();
        assert!((outer - target).abs() / target < 0.02, "{outer}");
        assert!((inner - target).abs() / target < 0.02, "{inner}");
        // Exact arc lengths inside the ball.
        assert!((outer - 2.0 * (r / 2.0).asin()).abs() < 1e-12);
        assert!((inner - r.asin()).abs() < 1e-12);
        assert!((ball_mass(&mu, z(0.3, 0.1), 10.0).unwrap() - mu.total_mass()).abs() < 1e-12);
        assert!(ball_mass(&mu, z(1.0, 0.0), mu.mesh()).is_err());
    }

    #[test]
    fn off_support_atom_rejected() {
        let k = unit_circle(64);
        let spec = MeasureSpec::Atomic { atoms: vec![[0.0, 0.0, 1.0]] };
        assert!(realize(&spec, &k).is_err());
        let spec = MeasureSpec::Atomic { atoms: vec![[1.0, 0.0, 1.0]] };
        assert!(realize(&spec, &k).is_ok());
    }

    #[test]
    fn pushforward_examples() {
        let k = annulus(256);
        let mu = realize(&ex1e_spec(), &k).unwrap();
        let f = |w: C64| 1.0 / (w * w - 0.01);
        let img = pushforward(&f, &mu).unwrap();
        assert!((img.total_mass() - 1.5 * PI).abs() < 1e-12);
        let id = pushforward(&|w| w, &mu).unwrap();
        assert_eq!(id.atoms(), mu.atoms());
        let lam = z(0.0, 2.0);
        let a = DiscreteMeasure::new(vec![z(1.0, 0.0)], vec![0.25]).unwrap();
        let b = pushforward(&|w| lam * w, &a).unwrap();
        assert_eq!(b.atoms(), &[lam]);
        assert_eq!(b.weights(), &[0.25]);
        assert!(pushforward(&|w| 1.0 / (w - 1.0), &a).is_err());
    }

    #[test]
    fn mu_c_certificate() {
        let (mu0, cert0) = mu_c_generator(7, 0, 128).unwrap();
        assert!((mu0.total_mass() - 0.5).abs() < 1e-12);
        assert!(!cert0.certified);

        let (mu, cert) = mu_c_generator(7, 60, 128).unwrap();
        assert!(cert.k_le_n && cert.k_over_n_to_zero);
        // Direct summation of the tail at k = 20, n_k = 400.
        let zs = mu_c_points(7, 60);
        let mut tail = 0.0;
        for j in 21..=60 {
            tail += 2f64.powi(-(j as i32)) * zs[j - 1].norm_sqr().powi(400);
        }
        let oracle = (1.0 + tail).powf(1.0 / 800.0);
        assert!((oracle - 1.0).abs() < 1e-3);
        assert!((cert.liminf_terms[19] - oracle).abs() < 1e-14);
        assert!(cert.certified);
        assert!((mu.total_mass() - (0.5 + 0.5 * (1.0 - 2f64.powi(-60)))).abs() < 1e-10);
        for p in &zs {
            assert!(p.norm() >= 0.5 && p.norm() <= 1.0);
        }
    }

    #[test]
    fn mixture_json() {
        let s = r#"{"kind": "mixture", "parts": [
            {"coef": 0.5, "kind": "arclength", "on": {"kind": "circle", "center": [0,0], "radius": 1.0}},
            {"coef": 0.5, "kind": "arclength", "on": {"kind": "circle", "center": [0,0], "radius": 0.5}}]}"#;
        let spec: MeasureSpec = serde_json::from_str(s).unwrap();
        assert_eq!(spec, ex1e_spec());
        let back: MeasureSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let bad = r#"{"kind": "mixture", "parts": [{"coef": 1.0, "kind": "arclength", "bogus": 1}]}"#;
        assert!(serde_json::from_str::<MeasureSpec>(bad).is_err());
        assert!(serde_json::from_str::<MeasureSpec>(r#"{"kind": "atomic", "atoms": [], "x": 0}"#).is_err());
    }

    fn sampled() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 64)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norm_axioms(f in sampled(), g in sampled(), a in -4.0f64..4.0, b in -4.0f64..4.0) {
            let mu = realize(&MeasureSpec::arclength(None, 1.0), &unit_circle(64)).unwrap();
            let f: Vec<C64> = f.iter().map(|p| C64::new(p.0, p.1)).collect();
            let g: Vec<C64> = g.iter().map(|p| C64::new(p.0, p.1)).collect();
            let s: Vec<C64> = f.iter().zip(&g).map(|(x, y)| x + y).collect();
            let nf = l2_norm(&mu, &f).unwrap();
            let ng = l2_norm(&mu, &g).unwrap();
            prop_assert!(l2_norm(&mu, &s).unwrap() <= nf + ng + 1e-12);
            let lam = C64::new(a, b);
            let lf: Vec<C64> = f.iter().map(|x| lam * x).collect();
            prop_assert!((l2_norm(&mu, &lf).unwrap() - lam.norm() * nf).abs() <= 1e-10 * (1.0 + nf));
            prop_assert!(inner(&mu, &f, &g).unwrap().norm() <= nf * ng * (1.0 + 1e-12));
            let sup = f.iter().map(|x| x.norm()).fold(0.0, f64::max);
            prop_assert!(nf <= mu.total_mass().sqrt() * sup * (1.0 + 1e-12));
        }

        #[test]
        fn ball_mass_monotone(x in -1.5f64..1.5, y in -1.5f64..1.5, r in 0.2f64..1.0, dr in 0.0f64..1.0) {
            let mu = realize(&ex1e_spec(), &annulus(128)).unwrap();
            let a = ball_mass(&mu, z(x, y), r).unwrap();
            let b = ball_mass(&mu, z(x, y), r + dr).unwrap();
            prop_assert!(a <= b + 1e-12);
            let all = ball_mass(&mu, z(x, y), 10.0).unwrap();
            prop_assert!((all - mu.total_mass()).abs() < 1e-10);
        }

        #[test]
        fn pushforward_preserves_mass(re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let mu = realize(&ex1e_spec(), &annulus(64)).unwrap();
            let c = C64::new(re, im);
            let img = pushforward(&|w| w * w + c * w, &mu).unwrap();
            prop_assert_eq!(img.total_mass(), mu.total_mass());
        }
    }
}
