//! Scene-driven subcommands.

use logpot::bergman::{
    bergman_function, bmp_ratio, orthonormalize, ratio_trend, rational_ratio, subdiagonal_ratio, weighted_bmp_ratio,
    TrendClass, WeightSpec,
};
use logpot::criteria::{lambda_star_check, separating_map_build, LambdaConfig, MapSearch, Verdict};
use logpot::expr::{parse_complex, Expr};
use logpot::measures::DiscreteMeasure;
use logpot::meromorphic::{overconvergence_rate, SearchConfig};
use logpot::potential::{
    capacity_estimate, equilibrium_measure_with_tol, green_infinity, leja_points, PoleGreen, DEFAULT_GREEN_K,
};
use logpot::C64;
use serde_json::json;

use crate::report::{cell, Check, Report, Table};
use crate::scene::{Loaded, Overrides, Scene};
use crate::{CliError, Command, RatioKind};

fn load(path: &std::path::Path, o: &Overrides) -> Result<Loaded, CliError> {
    let mut s = Scene::read(path)?;
    s.apply(o);
    s.load()
}

fn scene_value(l: &Loaded) -> serde_json::Value {
    serde_json::to_value(&l.scene).expect("scene serializes")
}

/// Parse error with the offending input and a caret under the offset.
fn located(flag: &str, src: &str, e: logpot::Error) -> CliError {
    match e {
        logpot::Error::Parse { pos, msg } => {
            CliError::Precondition(format!("{flag}: {msg} at offset {pos}\n  {src}\n  {}^", " ".repeat(pos)))
        }
        other => CliError::Precondition(format!("{flag}: {other}")),
    }
}

fn grid(spec: &str) -> Result<Vec<C64>, CliError> {
    let bad = || CliError::Precondition(format!("--grid: expected x0,x1,y0,y1,n, got '{spec}'"));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    let v: Vec<f64> = parts[..4].iter().map(|p| p.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let n: usize = parts[4].parse().map_err(|_| bad())?;
    if n < 2 || !(v[1] > v[0] && v[3] > v[2]) {
        return Err(bad());
    }
    let step = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(C64::new(step(v[0], v[1], i), step(v[2], v[3], j)));
        }
    }
    Ok(out)
}

pub fn run(cmd: &Command, o: &Overrides) -> Result<Report, CliError> {
    match cmd {
        Command::Capacity { scene, kmax } => capacity(&load(scene, o)?, *kmax),
        Command::Leja { scene, k, refine } => leja(&load(scene, o)?, *k, *refine),
        Command::Green { scene, pole, grid: g } => green(&load(scene, o)?, pole, g),
        Command::Bergman { scene, k, at } => bergman(&load(scene, o)?, *k, at.as_deref()),
        Command::Ratio { kind, scene, k_max, csv } => ratio(&load(scene, o)?, *kind, *k_max, csv.as_deref()),
        Command::LambdaStar { scene, t, r_schedule } => lambda_star(&load(scene, o)?, *t, r_schedule),
        Command::BuildMap { scene, rho, m_max, eps } => {
            build_map(&load(scene, o)?, &MapSearch { rho: *rho, m_max: *m_max, eps: *eps })
        }
        Command::BwRate { scene, f, n, k_max } => bw_rate(&load(scene, o)?, f, *n, *k_max),
        Command::Reproduce { .. } => unreachable!("handled by reproduce::run"),
    }
}

fn capacity(l: &Loaded, kmax: usize) -> Result<Report, CliError> {
    let est = capacity_estimate(&l.k, kmax)?;
    let mut r = Report::new("capacity", scene_value(l), json!({ "kmax": kmax }));
    let mut t = Table::new("delta", &["k", "delta_k"]);
    for (k, d) in &est.leja_diameters {
        t.push(vec![cell(k), cell(d)]);
    }
    r.tables.push(t);
    r.checks.push(Check::new(
        "estimators agree",
        !est.flagged,
        format!("capacity {} vs exp(-energy) {}", est.capacity, est.energy_estimate),
    ));
    r.result = serde_json::to_value(&est).expect("serializes");
    Ok(r)
}

fn leja(l: &Loaded, k: usize, refine: bool) -> Result<Report, CliError> {
    let seq = leja_points(&l.k, k, refine)?;
    let mut r = Report::new("leja", scene_value(l), json!({ "k": k, "refine": refine }));
    let mut pts = Table::new("points", &["j", "re", "im"]);
    for (j, z) in seq.points.iter().enumerate() {
        pts.push(vec![cell(j), cell(z.re), cell(z.im)]);
    }
    let mut d = Table::new("delta", &["k", "delta_k"]);
    for (kk, v) in &seq.kth_diameters {
        d.push(vec![cell(kk), cell(v)]);
    }
    r.tables.extend([pts, d]);
    r.result = json!({ "count": seq.points.len(), "delta_last": seq.kth_diameters.last().map(|p| p.1) });
    Ok(r)
}

fn green(l: &Loaded, pole: &str, grid_spec: &str) -> Result<Report, CliError> {
    let zs = grid(grid_spec)?;
    let tol = l.scene.tolerances.green;
    let k = DEFAULT_GREEN_K.min(l.k.len());
    let mut table = Table::new("green", &["re", "im", "g"]);
    let mut r = Report::new("green", scene_value(l), json!({ "pole": pole, "grid": grid_spec }));
    if pole.trim() == "inf" {
        let g = equilibrium_measure_with_tol(&l.k, k, tol)?;
        for z in &zs {
            table.push(vec![cell(z.re), cell(z.im), cell(green_infinity(&g, *z))]);
        }
        r.checks.push(Check::new("regular", g.regular_flag, format!("max |g| on K = {}", g.max_on_k)));
        r.result = json!({ "capacity": g.capacity, "regular": g.regular_flag, "max_on_k": g.max_on_k });
    } else {
        let a = parse_complex(pole).map_err(|e| located("--pole", pole, e))?;
        let pg = PoleGreen::new(l.k.clone(), k, tol);
        let field = pg.field(a)?;
        for z in &zs {
            let g = if *z == a { f64::INFINITY } else { pg.eval(a, *z)? };
            table.push(vec![cell(z.re), cell(z.im), cell(g)]);
        }
        r.checks.push(Check::new("regular", field.regular_flag, format!("max |g| on the mapped set = {}", field.max_on_k)));
        r.result = json!({ "pole": [a.re, a.im], "mapped_capacity": field.capacity, "regular": field.regular_flag });
    }
    r.tables.push(table);
    Ok(r)
}

fn bergman(l: &Loaded, k: usize, at: Option<&str>) -> Result<Report, CliError> {
    let basis = orthonormalize(&l.mu, k, &WeightSpec::none())?;
    let mut r = Report::new("bergman", scene_value(l), json!({ "k": k, "at": at }));
    let mut t = Table::new("bergman", &["k", "max_b_k", "ratio", "ratio_root"]);
    for j in 0..=k {
        let ratio = bmp_ratio(&l.k, &l.mu, j)?;
        let root = if j == 0 { f64::NAN } else { ratio.powf(1.0 / j as f64) };
        t.push(vec![cell(j), cell(ratio * ratio), cell(ratio), cell(root)]);
    }
    r.tables.push(t);
    let value_at = match at {
        Some(s) => Some(bergman_function(&basis, parse_complex(s).map_err(|e| located("--at", s, e))?)),
        None => None,
    };
    let gram = basis.gram_residual();
    r.checks.push(Check::new("gram identity", gram <= 1e-10, format!("residual {gram:e}")));
    r.result = json!({ "gram_residual": gram, "b_k_at": value_at });
    Ok(r)
}

fn uniform_on(p: &logpot::geometry::SetDiscretization) -> Result<DiscreteMeasure, CliError> {
    Ok(DiscreteMeasure::counting(&p.nodes, 1.0)?)
}

fn ratio(l: &Loaded, kind: RatioKind, k_max: usize, csv: Option<&std::path::Path>) -> Result<Report, CliError> {
    if k_max < 8 {
        return Err(CliError::Precondition(format!("--k-max must be at least 8 for the trend fit, got {k_max}")));
    }
    let mut t = Table::new("ratio", &["k", "ratio", "ratio_root", "witness_m"]);
    let mut seq = Vec::with_capacity(k_max);
    let weight = match kind {
        RatioKind::Weighted => Some(WeightSpec::new(uniform_on(l.poles()?)?)),
        _ => None,
    };
    for k in 1..=k_max {
        let (v, m) = match kind {
            RatioKind::Poly => (bmp_ratio(&l.k, &l.mu, k)?, 0),
            RatioKind::Weighted => (weighted_bmp_ratio(&l.k, &l.mu, weight.as_ref().unwrap(), k)?, 0),
            RatioKind::Subdiag => (subdiagonal_ratio(&l.k, &l.mu, l.poles()?, k)?.value, k),
            RatioKind::Rational => {
                let rr = rational_ratio(&l.k, &l.mu, l.poles()?, k)?;
                (rr.value, rr.m)
            }
        };
        t.push(vec![cell(k), cell(v), cell(v.powf(1.0 / k as f64)), cell(m)]);
        seq.push((k, v));
    }
    if let Some(path) = csv {
        std::fs::write(path, t.to_csv())?;
    }
    let trend = ratio_trend(&seq);
    let mut r = Report::new("ratio", scene_value(l), json!({ "kind": kind, "k_max": k_max }));
    r.checks.push(Check::new(
        "consistent with the Bernstein-Markov property",
        trend.class == TrendClass::ConsistentWithBmp,
        format!("trend {:?}, slope {:.4}", trend.class, trend.slope),
    ));
    r.result = serde_json::to_value(&trend).expect("serializes");
    r.tables.push(t);
    Ok(r)
}

fn lambda_star(l: &Loaded, t: f64, schedule: &[f64]) -> Result<Report, CliError> {
    let tol = &l.scene.tolerances;
    let cfg = LambdaConfig { pass_tol: tol.lambda_pass, fail_tol: tol.lambda_fail, ..LambdaConfig::default() };
    let rep = lambda_star_check(&l.k, &l.mu, t, schedule, &cfg)?;
    let mut r = Report::new("lambda-star", scene_value(l), json!({ "t": t, "r_schedule": schedule }));
    let mut table = Table::new("schedule", &["r", "cap_ar", "node_fraction"]);
    for ((rr, c), f) in rep.schedule.iter().zip(&rep.cap_ar).zip(&rep.node_fraction) {
        table.push(vec![cell(rr), cell(c), cell(f)]);
    }
    r.tables.push(table);
    r.checks.push(Check::new(
        "mass-density criterion",
        rep.verdict == Verdict::Passes,
        format!("verdict {:?}, cap(A_r) at smallest r {} vs cap(K) {}", rep.verdict, rep.cap_ar.last().unwrap(), rep.cap_k),
    ));
    r.result = serde_json::to_value(&rep).expect("serializes");
    Ok(r)
}

fn build_map(l: &Loaded, search: &MapSearch) -> Result<Report, CliError> {
    let map = separating_map_build(&l.k, l.poles()?, search)?;
    let mut r = Report::new("build-map", scene_value(l), serde_json::to_value(search).expect("serializes"));
    let mut t = Table::new("poles", &["j", "re", "im"]);
    for (j, w) in map.poles.iter().enumerate() {
        t.push(vec![cell(j), cell(w.re), cell(w.im)]);
    }
    r.tables.push(t);
    let reverified = map.verify(&l.k, l.poles()?);
    r.checks.push(Check::new(
        "sandwich max_K|f| < R1 < min_P|f| <= max_P|f| < R2",
        reverified,
        format!("m = {}, {} < {} < {} <= {} < {}", map.m, map.max_k, map.r1, map.min_p, map.max_p, map.r2),
    ));
    r.result = serde_json::to_value(&map).expect("serializes");
    Ok(r)
}

fn bw_rate(l: &Loaded, f_src: &str, n: usize, k_max: usize) -> Result<Report, CliError> {
    let e = Expr::parse(f_src).map_err(|e| located("--f", f_src, e))?;
    let f = |z: C64| e.eval(z);
    let rep = overconvergence_rate(&f, &l.k, &l.mu, n, k_max, &SearchConfig::default())?;
    let mut r = Report::new("bw-rate", scene_value(l), json!({ "f": f_src, "n": n, "k_max": k_max }));
    let mut t = Table::new("errors", &["k", "err_l2", "err_sup", "root_l2", "root_sup"]);
    for i in 0..rep.ks.len() {
        t.push(vec![cell(rep.ks[i]), cell(rep.err_l2[i]), cell(rep.err_sup[i]), cell(rep.root_l2[i]), cell(rep.root_sup[i])]);
    }
    r.tables.push(t);
    r.checks.push(Check::new(
        "L2 and sup rates agree",
        rep.rates_consistent,
        format!("class {:?}, predicted r {}, rates {} / {}", rep.class, rep.predicted_r, rep.rate_l2, rep.rate_sup),
    ));
    r.result = serde_json::to_value(&rep).expect("serializes");
    Ok(r)
}
