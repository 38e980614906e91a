//! Pre-registered example runs.

use std::f64::consts::{PI, TAU};

use logpot::bergman::{
    bmp_ratio, function_ratio, rational_ratio, ratio_trend, subdiagonal_ratio, TrendClass,
};
use logpot::criteria::{
    lambda_star_check, mapped_lambda_star_with, separating_map_build, LambdaConfig, MapSearch, SeparatingMap, Verdict,
};
use logpot::measures::{mu_c_exponent, mu_c_generator, MeasureSpec};
use logpot::meromorphic::{overconvergence_rate, RateClass, SearchConfig};
use logpot::C64;
use serde_json::{json, Value};

use crate::report::{cell, Check, Report, Table};
use crate::scene::{Loaded, Overrides, Scene};
use crate::{CliError, ExampleId};

const CIRCLE: &str = r#"{"kind": "circle", "center": [0, 0], "radius": 1}"#;
const ANNULUS: &str = r#"{"kind": "annulus", "center": [0, 0], "r_in": 0.5, "r_out": 1, "boundary_only": true}"#;
const ORIGIN: &str = r#"{"kind": "points", "points": [[0, 0]]}"#;

fn scene(text: &str, o: &Overrides) -> Result<Loaded, CliError> {
    let mut s = Scene::parse(text, "built-in scene")?;
    s.apply(o);
    s.load()
}

fn scene_value(l: &Loaded) -> Value {
    serde_json::to_value(&l.scene).expect("scene serializes")
}

fn root(v: f64, k: usize) -> f64 {
    v.powf(1.0 / k as f64)
}

pub fn run(id: ExampleId, o: &Overrides) -> Result<Report, CliError> {
    let mut r = match id {
        ExampleId::Ex1a => ex1a(o),
        ExampleId::Ex1b => ex1b(o),
        ExampleId::Ex1c => ex1c(o),
        ExampleId::Ex1d => ex1d(o),
        ExampleId::Ex1e => ex1e(o),
        ExampleId::Ex2 => ex2(o),
        ExampleId::Ex3 => ex3(o),
        ExampleId::Bw => bw(o),
    }?;
    r.params = json!({
        "id": id,
        "seed": o.seed,
        "resolution": o.resolution,
        "tol": o.tol,
        "checks": r.params,
    });
    Ok(r)
}

fn ex1a(o: &Overrides) -> Result<Report, CliError> {
    let l = scene(&format!(r#"{{"set": {CIRCLE}, "resolution": 256}}"#), o)?;
    let k_max = 50;
    if l.k.len() < 4 * k_max {
        return Err(CliError::Precondition(format!("ex1a needs at least {} nodes, got {}", 4 * k_max, l.k.len())));
    }
    let mut t = Table::new("bergman", &["k", "max_b_k", "closed_b_k", "ratio_root", "closed_root"]);
    let mut worst: f64 = 0.0;
    for k in 0..=k_max {
        let ratio = bmp_ratio(&l.k, &l.mu, k)?;
        let closed = (k as f64 + 1.0) / TAU;
        worst = worst.max((ratio * ratio / closed - 1.0).abs());
        let (rr, cr) = if k == 0 { (f64::NAN, f64::NAN) } else { (root(ratio, k), closed.powf(0.5 / k as f64)) };
        t.push(vec![cell(k), cell(ratio * ratio), cell(closed), cell(rr), cell(cr)]);
    }
    let mut r = Report::new("reproduce-ex1a", scene_value(&l), json!({ "k_max": k_max, "rel_tol": 1e-6 }));
    r.checks.push(Check::new("max_K B_k = (k+1)/(2 pi)", worst <= 1e-6, format!("max relative error {worst:.2e} for k <= {k_max}")));
    r.result = json!({ "max_relative_error": worst });
    r.tables.push(t);
    Ok(r)
}

fn ex1b(o: &Overrides) -> Result<Report, CliError> {
    let l = scene(&format!(r#"{{"set": {ANNULUS}, "poles": {ORIGIN}, "measure": {{"kind": "arclength", "on": {CIRCLE}}}}}"#), o)?;
    let p = l.poles()?;
    let mut t = Table::new("rational", &["k", "ratio", "ratio_root", "witness_m"]);
    let mut last = None;
    for k in 1..=20 {
        let rr = rational_ratio(&l.k, &l.mu, p, k)?;
        t.push(vec![cell(k), cell(rr.value), cell(root(rr.value, k)), cell(rr.m)]);
        last = Some(rr);
    }
    let last = last.unwrap();
    let rt = root(last.value, 20);
    let mut r = Report::new("reproduce-ex1b", scene_value(&l), json!({ "k": 20, "min_root": 1.9 }));
    r.checks.push(Check::new("rational ratio^(1/20) >= 1.9", rt >= 1.9, format!("{rt:.4}")));
    r.checks.push(Check::new("witness pole multiplicity m = k", last.m == 20, format!("m = {}", last.m)));
    r.result = json!({ "root_20": rt, "m": last.m });
    r.tables.push(t);
    Ok(r)
}

fn ex1c(o: &Overrides) -> Result<Report, CliError> {
    let inner = r#"{"kind": "circle", "center": [0, 0], "radius": 0.5}"#;
    let l = scene(&format!(r#"{{"set": {ANNULUS}, "poles": {ORIGIN}, "measure": {{"kind": "arclength", "on": {inner}}}}}"#), o)?;
    let p = l.poles()?;
    let mut t = Table::new("ratios", &["k", "witness_root", "closed_root", "poly_ratio", "subdiag_ratio"]);
    let (mut poly, mut sub) = (vec![], vec![]);
    let mut worst: f64 = 0.0;
    for k in 1..=40 {
        let w = root(function_ratio(&l.k, &l.mu, &|z: C64| z.powu(k as u32))?, k);
        let closed = 2.0 * PI.powf(-1.0 / (2.0 * k as f64));
        worst = worst.max((w - closed).abs());
        let pr = bmp_ratio(&l.k, &l.mu, k)?;
        let sr = subdiagonal_ratio(&l.k, &l.mu, p, k)?.value;
        t.push(vec![cell(k), cell(w), cell(closed), cell(pr), cell(sr)]);
        poly.push((k, pr));
        sub.push((k, sr));
    }
    let (tp, ts) = (ratio_trend(&poly), ratio_trend(&sub));
    let mut r = Report::new("reproduce-ex1c", scene_value(&l), json!({ "k_max": 40, "identity_tol": 1e-8 }));
    r.checks.push(Check::new("z^k witness root = 2 pi^(-1/(2k))", worst <= 1e-8, format!("max error {worst:.2e}")));
    r.checks.push(Check::new("polynomial trend violates BMP", tp.class == TrendClass::ViolatesBmp, format!("{:?}, slope {:.4}", tp.class, tp.slope)));
    r.checks.push(Check::new(
        "sub-diagonal trend consistent with BMP",
        ts.class == TrendClass::ConsistentWithBmp,
        format!("{:?}, slope {:.4}", ts.class, ts.slope),
    ));
    r.result = json!({ "witness_error": worst, "polynomial_trend": tp, "subdiagonal_trend": ts });
    r.tables.push(t);
    Ok(r)
}

fn ex1d(o: &Overrides) -> Result<Report, CliError> {
    let filled = r#"{"kind": "annulus", "center": [0, 0], "r_in": 0.5, "r_out": 1, "boundary_only": false}"#;
    let l = scene(
        &format!(r#"{{"set": {filled}, "poles": {ORIGIN}, "measure": {{"kind": "mu_c", "atoms": 64}}, "resolution": 256}}"#),
        o,
    )?;
    let p = l.poles()?;
    let Some(MeasureSpec::MuC { seed, atoms }) = l.scene.measure.clone() else { unreachable!("built-in scene") };
    let (_, cert) = mu_c_generator(seed, atoms, l.scene.resolution)?;
    let zs: Vec<C64> = cert.z.iter().map(|z| C64::new(z[0], z[1])).collect();
    let mut t = Table::new("lower_bounds", &["k", "n_k", "witness_ratio", "witness_root", "rational_root", "witness_m"]);
    let mut worst = f64::INFINITY;
    for k in 1..=5 {
        let n = mu_c_exponent(k);
        let zk = &zs[..k];
        let witness = |z: C64| zk.iter().map(|a| z - a).product::<C64>() / z.powu(n as u32);
        let w = function_ratio(&l.k, &l.mu, &witness)?;
        let rr = rational_ratio(&l.k, &l.mu, p, n)?;
        let (wr, rt) = (root(w, n), root(rr.value, n));
        worst = worst.min(wr.max(rt));
        t.push(vec![cell(k), cell(n), cell(w), cell(wr), cell(rt), cell(rr.m)]);
    }
    let mut r = Report::new("reproduce-ex1d", scene_value(&l), json!({ "k": [1, 5], "n_k": "k^2" }));
    r.checks.push(Check::new("mu_c summability certificate", cert.certified, cert.note.clone()));
    r.checks.push(Check::new(
        "rational lower bound root exceeds 1 along n_k",
        worst > 1.0,
        format!("smallest ratio^(1/n_k) {worst:.4}"),
    ));
    r.result = json!({ "certificate": cert, "smallest_root": worst });
    r.tables.push(t);
    Ok(r)
}

fn ex1e(o: &Overrides) -> Result<Report, CliError> {
    let l = scene(&format!(r#"{{"set": {ANNULUS}, "poles": {ORIGIN}, "measure": {{"kind": "arclength", "scale": 0.5}}}}"#), o)?;
    let p = l.poles()?;
    let mut t = Table::new("rational", &["k", "ratio", "ratio_root", "bound", "witness_m"]);
    let mut seq = vec![];
    let mut slack = f64::INFINITY;
    for k in 1..=30 {
        let rr = rational_ratio(&l.k, &l.mu, p, k)?;
        let kf = k as f64;
        let bound = ((4f64.powf(kf + 1.0) - 1.0) / (3.0 * PI)).powf(1.0 / (2.0 * kf));
        let rt = root(rr.value, k);
        slack = slack.min(bound - rt);
        t.push(vec![cell(k), cell(rr.value), cell(rt), cell(bound), cell(rr.m)]);
        seq.push((k, rr.value));
    }
    let trend = ratio_trend(&seq);
    let mut r = Report::new("reproduce-ex1e", scene_value(&l), json!({ "k_max": 30 }));
    r.checks.push(Check::new("ratio root below ((4^(k+1)-1)/(3 pi))^(1/(2k))", slack >= 0.0, format!("min slack {slack:.4}")));
    r.checks.push(Check::new(
        "trend consistent with BMP",
        trend.class == TrendClass::ConsistentWithBmp,
        format!("{:?}, slope {:.4}", trend.class, trend.slope),
    ));
    r.result = json!({ "min_slack": slack, "trend": trend });
    r.tables.push(t);
    Ok(r)
}

fn ex2(o: &Overrides) -> Result<Report, CliError> {
    let l = scene(
        &format!(r#"{{"set": {ANNULUS}, "poles": {ORIGIN}, "measure": {{"kind": "arclength", "scale": 0.5}}, "resolution": 512}}"#),
        o,
    )?;
    let p = l.poles()?;
    let tol = &l.scene.tolerances;
    let cfg = LambdaConfig { pass_tol: tol.lambda_pass, fail_tol: tol.lambda_fail, ..LambdaConfig::default() };
    let schedule = [0.45, 0.4, 0.3, 0.2, 0.1, 0.05];
    let plain = lambda_star_check(&l.k, &l.mu, 1.0, &schedule, &cfg)?;
    let full = plain.node_fraction.iter().all(|f| *f == 1.0);
    let explicit = SeparatingMap::from_poles(&[C64::new(0.1, 0.0), C64::new(-0.1, 0.0)], 1.0, &l.k, p)?;
    let mapped = mapped_lambda_star_with(&l.k, &l.mu, &explicit, 1.0, &schedule, &schedule, &cfg, 0.1)?;
    let built = separating_map_build(&l.k, p, &MapSearch { rho: 0.1, m_max: 8, eps: 0.05 })?;
    let built_ok = built.m <= 4 && built.verify(&l.k, p);
    let e_max = l.k.nodes.iter().map(|z| explicit.eval(*z).norm()).fold(0.0, f64::max);
    let e0 = explicit.eval(C64::new(0.0, 0.0)).norm();

    let mut t = Table::new("schedule", &["r", "cap_ar", "node_fraction", "mapped_cap_ar"]);
    for i in 0..schedule.len() {
        t.push(vec![
            cell(schedule[i]),
            cell(plain.cap_ar[i]),
            cell(plain.node_fraction[i]),
            cell(mapped.preimage_form.cap_ar[i]),
        ]);
    }
    let mut r = Report::new("reproduce-ex2", scene_value(&l), json!({ "t": 1.0, "r_schedule": schedule, "delta": 0.1 }));
    r.checks.push(Check::new(
        "A_r = K along the schedule, verdict passes",
        full && plain.verdict == Verdict::Passes,
        format!("verdict {:?}, node fractions {:?}", plain.verdict, plain.node_fraction),
    ));
    r.checks.push(Check::new(
        "mapped criterion with f = 1/(z^2 - 0.01) passes",
        mapped.preimage_form.verdict == Verdict::Passes,
        match &mapped.image_form_error {
            Some(e) => format!("capacity of f(A_r): {:?}; image-measure form not run: {e}", mapped.preimage_form.verdict),
            None => format!("capacity of f(A_r): {:?}", mapped.preimage_form.verdict),
        },
    ));
    r.checks.push(Check::new(
        "built map separates K from P",
        built_ok,
        format!("m = {}, max_K|f| = {:.4} < R1 = {:.4} < min_P|f| = {:.4}", built.m, built.max_k, built.r1, built.min_p),
    ));
    r.checks.push(Check::new(
        "explicit map: max_K|f| <= 4.17 and |f(0)| = 100",
        e_max <= 4.17 && (e0 - 100.0).abs() <= 1e-9,
        format!("max_K|f| = {e_max:.4}, |f(0)| = {e0}"),
    ));
    r.checks.push(Check::new(
        "Lipschitz certificate at delta = 0.1 equals 16/3",
        (mapped.lipschitz - 16.0 / 3.0).abs() <= 1e-10,
        format!("sampled sup|f'| on K^0.1 = {:.6}", mapped.lipschitz),
    ));
    r.result = json!({ "plain": plain, "mapped": mapped, "built": built });
    r.tables.push(t);
    Ok(r)
}

fn ex3(o: &Overrides) -> Result<Report, CliError> {
    let l = scene(&format!(r#"{{"set": {CIRCLE}, "measure": {{"kind": "example3"}}, "resolution": 1024}}"#), o)?;
    let tol = &l.scene.tolerances;
    let cfg = LambdaConfig { pass_tol: tol.lambda_pass, fail_tol: tol.lambda_fail, ..LambdaConfig::default() };
    let schedule = [0.4, 0.2, 0.1, 0.05];
    let rep = lambda_star_check(&l.k, &l.mu, 1.0, &schedule, &cfg)?;
    let supplement = lambda_star_check(&l.k, &l.mu, 3.0, &schedule, &cfg)?;
    let mut t = Table::new("schedule", &["r", "cap_ar", "arc_bound", "node_fraction", "cap_ar_t3"]);
    let mut worst: f64 = 0.0;
    for i in 0..schedule.len() {
        let arc = ((TAU - 4.0 * (schedule[i] / 2.0).asin()) / 4.0).sin();
        worst = worst.max((rep.cap_ar[i] / arc - 1.0).abs());
        t.push(vec![cell(schedule[i]), cell(rep.cap_ar[i]), cell(arc), cell(rep.node_fraction[i]), cell(supplement.cap_ar[i])]);
    }
    let mut r = Report::new("reproduce-ex3", scene_value(&l), json!({ "t": [1.0, 3.0], "r_schedule": schedule, "arc_tol": 0.03 }));
    r.checks.push(Check::new("verdict passes at t = 1", rep.verdict == Verdict::Passes, format!("{:?}", rep.verdict)));
    r.checks.push(Check::new("cap(A_r) within 3% of the arc bound", worst <= 0.03, format!("worst gap {:.1}%", 100.0 * worst)));
    r.result = json!({ "t1": rep, "t3": supplement, "worst_arc_gap": worst });
    r.tables.push(t);
    Ok(r)
}

fn bw(o: &Overrides) -> Result<Report, CliError> {
    let l = scene(&format!(r#"{{"set": {CIRCLE}, "resolution": 256}}"#), o)?;
    let cfg = SearchConfig::default();
    let simple = overconvergence_rate(&|z: C64| 1.0 / (z - 2.0), &l.k, &l.mu, 0, 30, &cfg)?;
    let two = overconvergence_rate(&|z: C64| 1.0 / ((z - 1.5) * (z - 3.0)), &l.k, &l.mu, 1, 25, &cfg)?;
    let entire = overconvergence_rate(&|z: C64| (2.0 * z).exp(), &l.k, &l.mu, 1, 20, &cfg)?;
    let mut t = Table::new("rates", &["f", "n", "k", "err_l2", "err_sup"]);
    for (name, rep) in [("1/(z-2)", &simple), ("1/((z-1.5)(z-3))", &two), ("exp(2z)", &entire)] {
        for i in 0..rep.ks.len() {
            t.push(vec![cell(name), cell(rep.n), cell(rep.ks[i]), cell(rep.err_l2[i]), cell(rep.err_sup[i])]);
        }
    }
    let gap = |rep: &logpot::meromorphic::RateReport| (rep.rate_l2 - rep.rate_sup).abs();
    let mut r = Report::new("reproduce-bw", scene_value(&l), json!({ "k_max": [30, 25, 20], "rate_gap": 0.05 }));
    r.checks.push(Check::new(
        "1/(z-2), n = 0: r = 2 +- 5%",
        (simple.predicted_r - 2.0).abs() <= 0.1 && gap(&simple) <= 0.05,
        format!("r = {:.4}, rates {:.4} / {:.4}", simple.predicted_r, simple.rate_l2, simple.rate_sup),
    ));
    r.checks.push(Check::new(
        "1/((z-1.5)(z-3)), n = 1: r = 3 +- 10%",
        (two.predicted_r - 3.0).abs() <= 0.3 && gap(&two) <= 0.05,
        format!("r = {:.4}, rates {:.4} / {:.4}", two.predicted_r, two.rate_l2, two.rate_sup),
    ));
    r.checks.push(Check::new("exp(2z), n = 1: superlinear", entire.class == RateClass::Superlinear, format!("{:?}", entire.class)));
    r.result = json!({ "simple": simple, "two_poles": two, "entire": entire });
    r.tables.push(t);
    Ok(r)
}
