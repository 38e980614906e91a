//! Compact sets in the plane: declarative specs, boundary discretizations,
//! fill grids for polynomial-hull tests, distances and ε-neighborhoods.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

pub fn pt(p: Point) -> C64 {
    C64::new(p[0], p[1])
}

/// Declarative description of a compact set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompactSetSpec {
    Circle {
        center: Point,
        radius: f64,
    },
    /// Arc `center + radius·e^{iθ}` for θ in `angles[0]..=angles[1]`.
    Arc {
        center: Point,
        radius: f64,
        angles: [f64; 2],
    },
    Annulus {
        center: Point,
        r_in: f64,
        r_out: f64,
        #[serde(default)]
        boundary_only: bool,
    },
    Segment {
        from: Point,
        to: Point,
    },
    /// `{z : |p(z)| = level}` with `coeffs` in ascending powers.
    Lemniscate {
        coeffs: Vec<Point>,
        level: f64,
    },
    Union {
        parts: Vec<CompactSetSpec>,
    },
    Points {
        points: Vec<Point>,
    },
}

fn finite(p: &Point) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

impl CompactSetSpec {
    pub fn circle(center: C64, radius: f64) -> Self {
        CompactSetSpec::Circle { center: [center.re, center.im], radius }
    }

    pub fn arc(center: C64, radius: f64, theta0: f64, theta1: f64) -> Self {
        CompactSetSpec::Arc { center: [center.re, center.im], radius, angles: [theta0, theta1] }
    }

    pub fn annulus_boundary(center: C64, r_in: f64, r_out: f64) -> Self {
        CompactSetSpec::Annulus {
            center: [center.re, center.im],
            r_in,
            r_out,
            boundary_only: true,
        }
    }

    pub fn segment(a: C64, b: C64) -> Self {
        CompactSetSpec::Segment { from: [a.re, a.im], to: [b.re, b.im] }
    }

    pub fn points(points: &[C64]) -> Self {
        CompactSetSpec::Points { points: points.iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        let degenerate = |m: String| Err(Error::DegenerateSet(m));
        match self {
            CompactSetSpec::Circle { center, radius } => {
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return degenerate(format!("circle needs a finite center and radius > 0, got radius {radius}"));
                }
            }
            CompactSetSpec::Arc { center, radius, angles } => {
                let len = angles[1] - angles[0];
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return degenerate(format!("arc needs radius > 0, got {radius}"));
                }
                if !(len > 0.0 && len <= TAU + 1e-12) {
                    return degenerate(format!("arc angle interval length must lie in (0, 2π], got {len}"));
                }
            }
            CompactSetSpec::Annulus { center, r_in, r_out, .. } => {
                if !finite(center) || !(r_out.is_finite() && *r_out > 0.0) {
                    return degenerate(format!("annulus needs r_out > 0, got {r_out}"));
                }
                if !(*r_in >= 0.0 && r_in < r_out) {
                    return degenerate(format!("annulus needs 0 <= r_in < r_out, got r_in = {r_in}, r_out = {r_out}"));
                }
            }
            CompactSetSpec::Segment { from, to } => {
                if !finite(from) || !finite(to) || pt(*from) == pt(*to) {
                    return degenerate("segment endpoints must be finite and distinct".into());
                }
            }
            CompactSetSpec::Lemniscate { coeffs, level } => {
                if !(level.is_finite() && *level > 0.0) {
                    return degenerate(format!("lemniscate level must be > 0, got {level}"));
                }
                let deg = coeffs.iter().rposition(|c| pt(*c).norm() > 0.0);
                if !matches!(deg, Some(d) if d >= 1) || !coeffs.iter().all(finite) {
                    return degenerate("lemniscate polynomial must have degree >= 1".into());
                }
            }
            CompactSetSpec::Union { parts } => {
                if parts.is_empty() {
                    return degenerate("empty union".into());
                }
                for p in parts {
                    p.validate()?;
                }
            }
            CompactSetSpec::Points { points } => {
                if points.is_empty() || !points.iter().all(finite) {
                    return degenerate("point set must be non-empty and finite".into());
                }
            }
        }
        Ok(())
    }
}

/// The piece of the set that a boundary node stands for.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Point(C64),
    Arc { center: C64, radius: f64, t0: f64, t1: f64 },
    Segment { a: C64, b: C64 },
    Polyline(Vec<C64>),
}

impl Cell {
    pub fn length(&self) -> f64 {
        match self {
            Cell::Point(_) => 0.0,
            Cell::Arc { radius, t0, t1, .. } => radius * (t1 - t0),
            Cell::Segment { a, b } => (b - a).norm(),
            Cell::Polyline(p) => p.windows(2).map(|w| (w[1] - w[0]).norm()).sum(),
        }
    }

    /// Point at normalized arc-length parameter `s ∈ [0, 1]`.
    pub fn point_at(&self, s: f64) -> C64 {
        match self {
            Cell::Point(z) => *z,
            Cell::Arc { center, radius, t0, t1 } => {
                center + C64::from_polar(*radius, t0 + s * (t1 - t0))
            }
            Cell::Segment { a, b } => a + (b - a) * s,
            Cell::Polyline(p) => {
                let total = self.length();
                if total == 0.0 {
                    return p[0];
                }
                let mut target = s * total;
                for w in p.windows(2) {
                    let l = (w[1] - w[0]).norm();
                    if target <= l && l > 0.0 {
                        return w[0] + (w[1] - w[0]) * (target / l);
                    }
                    target -= l;
                }
                *p.last().unwrap()
            }
        }
    }

    /// Fraction of the cell (by length) inside the closed disk `B(z, r)`.
    /// Point cells count fully or not at all.
    pub fn fraction_within(&self, z: C64, r: f64) -> f64 {
        match self {
            Cell::Point(p) => f64::from((p - z).norm() <= r),
            Cell::Arc { center, radius, t0, t1 } => arc_fraction(*center, *radius, *t0, *t1, z, r),
            Cell::Segment { a, b } => segment_fraction(*a, *b, z, r),
            Cell::Polyline(p) => {
                let total = self.length();
                if total == 0.0 {
                    return f64::from((p[0] - z).norm() <= r);
                }
                p.windows(2)
                    .map(|w| (w[1] - w[0]).norm() * segment_fraction(w[0], w[1], z, r))
                    .sum::<f64>()
                    / total
            }
        }
    }

    /// Points along the cell, endpoints included, no two consecutive farther
    /// apart than `spacing`.
    pub fn samples(&self, spacing: f64) -> Vec<C64> {
        if let Cell::Point(z) = self {
            return vec![*z];
        }
        let n = ((self.length() / spacing).ceil() as usize).max(1);
        (0..=n).map(|i| self.point_at(i as f64 / n as f64)).collect()
    }

    /// Image of the cell under `f`, as a 4-piece polyline.
    pub fn map(&self, f: &dyn Fn(C64) -> C64) -> Cell {
        match self {
            Cell::Point(z) => Cell::Point(f(*z)),
            _ => Cell::Polyline((0..=4).map(|i| f(self.point_at(i as f64 / 4.0))).collect()),
        }
    }
}

fn arc_fraction(center: C64, radius: f64, t0: f64, t1: f64, z: C64, r: f64) -> f64 {
    let len = t1 - t0;
    if len <= 0.0 {
        return f64::from((center + C64::from_polar(radius, t0) - z).norm() <= r);
    }
    let w = z - center;
    let d = w.norm();
    if d <= 1e-300 {
        return f64::from(radius <= r);
    }
    let kappa = (radius * radius + d * d - r * r) / (2.0 * radius * d);
    if kappa <= -1.0 {
        return 1.0;
    }
    if kappa >= 1.0 {
        return 0.0;
    }
    let alpha = kappa.acos();
    let phi = w.arg();
    let n_lo = ((t0 - phi - alpha) / TAU).floor() as i64;
    let n_hi = ((t1 - phi + alpha) / TAU).ceil() as i64;
    let mut covered = 0.0;
    for n in n_lo..=n_hi {
        let a = phi - alpha + n as f64 * TAU;
        let b = phi + alpha + n as f64 * TAU;
        covered += (b.min(t1) - a.max(t0)).max(0.0);
    }
    (covered / len).min(1.0)
}

fn segment_fraction(a: C64, b: C64, z: C64, r: f64) -> f64 {
    let v = b - a;
    let u = a - z;
    let qa = v.norm_sqr();
    if qa == 0.0 {
        return f64::from(u.norm() <= r);
    }
    let qb = 2.0 * (u * v.conj()).re;
    let qc = u.norm_sqr() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let s1 = (-qb - sq) / (2.0 * qa);
    let s2 = (-qb + sq) / (2.0 * qa);
    (s2.min(1.0) - s1.max(0.0)).max(0.0)
}

/// Rectangular grid over the set's frame with occupancy and hull flags.
/// The hull is every cell not reached by a 4-connected flood fill from the
/// frame through unoccupied cells.
#[derive(Clone, Debug)]
pub struct FillGrid {
    pub origin: C64,
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
    occupied: Vec<bool>,
    hull: Vec<bool>,
}

impl FillGrid {
    fn new(origin: C64, step: f64, nx: usize, ny: usize, occupied: Vec<bool>) -> Self {
        let mut outside = vec![false; nx * ny];
        let mut queue = VecDeque::new();
        let push = |i: usize, j: usize, outside: &mut Vec<bool>, q: &mut VecDeque<(usize, usize)>| {
            let id = j * nx + i;
            if !occupied[id] && !outside[id] {
                outside[id] = true;
                q.push_back((i, j));
            }
        };
        for i in 0..nx {
            push(i, 0, &mut outside, &mut queue);
            push(i, ny - 1, &mut outside, &mut queue);
        }
        for j in 0..ny {
            push(0, j, &mut outside, &mut queue);
            push(nx - 1, j, &mut outside, &mut queue);
        }
        while let Some((i, j)) = queue.pop_front() {
            if i > 0 {
                push(i - 1, j, &mut outside, &mut queue);
            }
            if i + 1 < nx {
                push(i + 1, j, &mut outside, &mut queue);
            }
            if j > 0 {
                push(i, j - 1, &mut outside, &mut queue);
            }
            if j + 1 < ny {
                push(i, j + 1, &mut outside, &mut queue);
            }
        }
        let hull = outside.iter().map(|o| !o).collect();
        FillGrid { origin, step, nx, ny, occupied, hull }
    }

    pub fn cell_of(&self, z: C64) -> Option<(usize, usize)> {
        let x = (z.re - self.origin.re) / self.step;
        let y = (z.im - self.origin.im) / self.step;
        if x < 0.0 || y < 0.0 || !x.is_finite() || !y.is_finite() {
            return None;
        }
        let (i, j) = (x as usize, y as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    pub fn center(&self, i: usize, j: usize) -> C64 {
        self.origin + C64::new((i as f64 + 0.5) * self.step, (j as f64 + 0.5) * self.step)
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupied[j * self.nx + i]
    }

    pub fn in_hull(&self, i: usize, j: usize) -> bool {
        self.hull[j * self.nx + i]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&b| b).count()
    }

    pub fn hull_count(&self) -> usize {
        self.hull.iter().filter(|&&b| b).count()
    }

    /// Centers of hull cells that touch a non-hull cell or the frame.
    pub fn hull_boundary_centers(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if !self.in_hull(i, j) {
                    continue;
                }
                let edge = i == 0
                    || j == 0
                    || i + 1 == self.nx
                    || j + 1 == self.ny
                    || !self.in_hull(i - 1, j)
                    || !self.in_hull(i + 1, j)
                    || !self.in_hull(i, j - 1)
                    || !self.in_hull(i, j + 1);
                if edge {
                    out.push(self.center(i, j));
                }
            }
        }
        out
    }
}

/// A compact set as boundary nodes with quadrature weights, per-node cells,
/// a fill grid and a mesh spacing.
#[derive(Clone, Debug)]
pub struct SetDiscretization {
    pub nodes: Vec<C64>,
    pub weights: Vec<f64>,
    pub cells: Vec<Cell>,
    pub fill: FillGrid,
    /// Mesh spacing: largest cell length, or the grid step for point sets.
    pub h: f64,
    pub resolution: usize,
}

/// Filled region used when marking occupancy.
#[derive(Clone, Copy, Debug)]
enum Region {
    Annulus { center: C64, r_in: f64, r_out: f64 },
}

impl Region {
    fn contains(&self, z: C64) -> bool {
        match *self {
            Region::Annulus { center, r_in, r_out } => {
                let d = (z - center).norm();
                d >= r_in && d <= r_out
            }
        }
    }
}

fn chebyshev_params(n: usize) -> Vec<f64> {
    (0..=n).map(|j| 0.5 * (1.0 - (PI * j as f64 / n as f64).cos())).collect()
}

/// Cells between consecutive midpoints of sorted parameters in [0, 1].
fn param_cells(s: &[f64]) -> Vec<(f64, f64)> {
    let n = s.len();
    (0..n)
        .map(|j| {
            let lo = if j == 0 { s[0] } else { 0.5 * (s[j - 1] + s[j]) };
            let hi = if j + 1 == n { s[n - 1] } else { 0.5 * (s[j] + s[j + 1]) };
            (lo, hi)
        })
        .collect()
}

fn circle_pieces(center: C64, radius: f64, n: usize, out: &mut Vec<(C64, Cell)>) {
    let dt = TAU / n as f64;
    for j in 0..n {
        let t = j as f64 * dt;
        out.push((
            center + C64::from_polar(radius, t),
            Cell::Arc { center, radius, t0: t - 0.5 * dt, t1: t + 0.5 * dt },
        ));
    }
}

fn leaf_pieces(spec: &CompactSetSpec, resolution: usize, out: &mut Vec<(C64, Cell)>, regions: &mut Vec<Region>) -> Result<()> {
    match spec {
        CompactSetSpec::Circle { center, radius } => circle_pieces(pt(*center), *radius, resolution, out),
        CompactSetSpec::Arc { center, radius, angles } => {
            let (a, b) = (angles[0], angles[1]);
            let c = pt(*center);
            if (b - a - TAU).abs() < 1e-12 {
                let dt = TAU / resolution as f64;
                for j in 0..resolution {
                    let t = a + j as f64 * dt;
                    out.push((
                        c + C64::from_polar(*radius, t),
                        Cell::Arc { center: c, radius: *radius, t0: t - 0.5 * dt, t1: t + 0.5 * dt },
                    ));
                }
            } else {
                let s = chebyshev_params(resolution);
                for (sj, (lo, hi)) in s.iter().zip(param_cells(&s)) {
                    let t = a + sj * (b - a);
                    out.push((
                        c + C64::from_polar(*radius, t),
                        Cell::Arc { center: c, radius: *radius, t0: a + lo * (b - a), t1: a + hi * (b - a) },
                    ));
                }
            }
        }
        CompactSetSpec::Annulus { center, r_in, r_out, boundary_only } => {
            let c = pt(*center);
            circle_pieces(c, *r_out, resolution, out);
            if *r_in > 0.0 {
                circle_pieces(c, *r_in, resolution, out);
            }
            if !boundary_only {
                regions.push(Region::Annulus { center: c, r_in: *r_in, r_out: *r_out });
            }
        }
        CompactSetSpec::Segment { from, to } => {
            let (a, b) = (pt(*from), pt(*to));
            let s = chebyshev_params(resolution);
            for (sj, (lo, hi)) in s.iter().zip(param_cells(&s)) {
                out.push((a + (b - a) * *sj, Cell::Segment { a: a + (b - a) * lo, b: a + (b - a) * hi }));
            }
        }
        CompactSetSpec::Lemniscate { coeffs, level } => lemniscate_pieces(coeffs, *level, resolution, out),
        CompactSetSpec::Union { parts } => {
            for p in parts {
                leaf_pieces(p, resolution, out, regions)?;
            }
        }
        CompactSetSpec::Points { points } => {
            for p in points {
                out.push((pt(*p), Cell::Point(pt(*p))));
            }
        }
    }
    Ok(())
}

fn lemniscate_pieces(coeffs: &[Point], level: f64, resolution: usize, out: &mut Vec<(C64, Cell)>) {
    let c: Vec<C64> = coeffs.iter().map(|p| pt(*p)).collect();
    let deg = c.iter().rposition(|a| a.norm() > 0.0).unwrap_or(0);
    let lead = c[deg].norm();
    // Cauchy bound on the roots of p(z) - level·e^{iθ}.
    let bound = 1.0
        + c[..deg]
            .iter()
            .enumerate()
            .map(|(j, a)| if j == 0 { a.norm() + level } else { a.norm() })
            .fold(0.0, f64::max)
            / lead;
    let half = 1.05 * bound;
    let n = (4 * resolution).clamp(256, 2048);
    let step = 2.0 * half / n as f64;
    let origin = C64::new(-half, -half);
    let log_level = level.ln();
    let field = vertex_field(origin, step, n, n, |z| horner(&c[..=deg], z).norm().ln() - log_level);
    for (a, b) in marching_segments(&field, n, n, origin, step) {
        if (b - a).norm() > 1e-14 {
            out.push((0.5 * (a + b), Cell::Segment { a, b }));
        }
    }
}

pub(crate) fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * z + a)
}

fn vertex_field(origin: C64, step: f64, nx: usize, ny: usize, f: impl Fn(C64) -> f64 + Sync + Send) -> Vec<f64> {
    crate::par::map_range((nx + 1) * (ny + 1), |id| {
        let (i, j) = (id % (nx + 1), id / (nx + 1));
        f(origin + C64::new(i as f64 * step, j as f64 * step))
    })
}

/// Contour segments of the zero level of a vertex field (negative = inside).
fn marching_segments(field: &[f64], nx: usize, ny: usize, origin: C64, step: f64) -> Vec<(C64, C64)> {
    let v = |i: usize, j: usize| field[j * (nx + 1) + i];
    let p = |i: usize, j: usize| origin + C64::new(i as f64 * step, j as f64 * step);
    let cross = |za: C64, fa: f64, zb: C64, fb: f64| {
        let t = if fa == fb { 0.5 } else { (fa / (fa - fb)).clamp(0.0, 1.0) };
        za + (zb - za) * t
    };
    let mut segs = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            // Corners in cyclic order: 00, 10, 11, 01.
            let zs = [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)];
            let fs = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            if fs.iter().any(|f| !f.is_finite()) {
                continue;
            }
            let inside: Vec<bool> = fs.iter().map(|&f| f < 0.0).collect();
            // Edge e connects corner e and corner e+1.
            let mut pts: [Option<C64>; 4] = [None; 4];
            let mut count = 0;
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if inside[a] != inside[b] {
                    pts[e] = Some(cross(zs[a], fs[a], zs[b], fs[b]));
                    count += 1;
                }
            }
            match count {
                2 => {
                    let found: Vec<C64> = pts.iter().flatten().copied().collect();
                    segs.push((found[0], found[1]));
                }
                4 => {
                    let center_inside = fs.iter().sum::<f64>() < 0.0;
                    // Isolate the corners whose sign differs from the center.
                    for corner in 0..4 {
                        if inside[corner] != center_inside {
                            let e_in = (corner + 3) % 4;
                            segs.push((pts[e_in].unwrap(), pts[corner].unwrap()));
                        }
                    }
                }
                _ => {}
            }
        }
    }
    segs
}

/// Indices of `nodes` to keep so that no two kept nodes are within `tol`;
/// `owner[i]` is the kept index absorbing node `i`.
fn dedup(nodes: &[C64], tol: f64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].re.total_cmp(&nodes[b].re).then(a.cmp(&b)));
    let mut owner: Vec<usize> = (0..nodes.len()).collect();
    let mut is_kept = vec![true; nodes.len()];
    for (pos, &i) in order.iter().enumerate() {
        if !is_kept[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if nodes[j].re - nodes[i].re > tol {
                break;
            }
            if is_kept[j] && j > i && (nodes[j] - nodes[i]).norm() <= tol {
                is_kept[j] = false;
                owner[j] = i;
            }
        }
    }
    // A kept node with a smaller index may have been dropped by a later
    // comparison only if it was itself a duplicate; resolve chains.
    for i in 0..nodes.len() {
        let mut o = owner[i];
        while owner[o] != o {
            o = owner[o];
        }
        owner[i] = o;
    }
    let kept = (0..nodes.len()).filter(|&i| is_kept[i]).collect();
    (kept, owner)
}

fn grid_size(resolution: usize) -> usize {
    (2 * resolution).clamp(128, 1024)
}

impl SetDiscretization {
    /// Discretize `spec` with `resolution` nodes per closed curve (one more for
    /// open arcs and segments, which use Chebyshev-spaced parameters).
    pub fn discretize(spec: &CompactSetSpec, resolution: usize) -> Result<Self> {
        spec.validate()?;
        if resolution < 16 {
            return invalid(format!("resolution must be >= 16, got {resolution}"));
        }
        let mut pieces = Vec::new();
        let mut regions = Vec::new();
        leaf_pieces(spec, resolution, &mut pieces, &mut regions)?;
        if pieces.is_empty() {
            return Err(Error::DegenerateSet("discretization produced no nodes".into()));
        }
        let nodes: Vec<C64> = pieces.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pieces
            .iter()
            .map(|p| if let Cell::Point(_) = p.1 { 1.0 } else { p.1.length() })
            .collect();
        let cells = pieces.into_iter().map(|p| p.1).collect();
        Ok(Self::assemble(nodes, weights, cells, resolution, &regions))
    }

    /// Build a discretization from explicit nodes, weights and cells.
    pub fn from_parts(nodes: Vec<C64>, weights: Vec<f64>, cells: Vec<Cell>, resolution: usize) -> Self {
        Self::assemble(nodes, weights, cells, resolution, &[])
    }

    fn assemble(nodes: Vec<C64>, weights: Vec<f64>, cells: Vec<Cell>, resolution: usize, regions: &[Region]) -> Self {
        let scale = nodes.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let (kept, owner) = dedup(&nodes, 1e-12 * scale);
        let (nodes, weights, cells) = if kept.len() == nodes.len() {
            (nodes, weights, cells)
        } else {
            let mut w = vec![0.0; nodes.len()];
            for (i, &o) in owner.iter().enumerate() {
                w[o] += weights[i];
            }
            (
                kept.iter().map(|&i| nodes[i]).collect(),
                kept.iter().map(|&i| w[i]).collect(),
                kept.iter().map(|&i| cells[i].clone()).collect(),
            )
        };

        let curve_h = cells.iter().map(Cell::length).fold(0.0, f64::max);
        let (lo, hi) = bbox(&nodes, &cells);
        let extent = (hi.re - lo.re).max(hi.im - lo.im);
        let n = grid_size(resolution);
        let pad = 0.1 * extent.max(1e-2);
        let side = extent + 2.0 * pad;
        let step = side / n as f64;
        let mid = 0.5 * (lo + hi);
        let origin = mid - C64::new(0.5 * side, 0.5 * side);
        let mut occupied = vec![false; n * n];
        let mark = |z: C64, occ: &mut Vec<bool>| {
            let x = ((z.re - origin.re) / step).floor();
            let y = ((z.im - origin.im) / step).floor();
            if x >= 0.0 && y >= 0.0 && (x as usize) < n && (y as usize) < n {
                occ[y as usize * n + x as usize] = true;
            }
        };
        for cell in &cells {
            for z in cell.samples(0.5 * step) {
                mark(z, &mut occupied);
            }
        }
        for z in &nodes {
            mark(*z, &mut occupied);
        }
        if !regions.is_empty() {
            for j in 0..n {
                for i in 0..n {
                    let z = origin + C64::new((i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
                    if regions.iter().any(|r| r.contains(z)) {
                        occupied[j * n + i] = true;
                    }
                }
            }
        }
        let fill = FillGrid::new(origin, step, n, n, occupied);
        let h = if curve_h > 0.0 { curve_h } else { step };
        SetDiscretization { nodes, weights, cells, fill, h, resolution }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when every cell is an isolated point (capacity zero).
    pub fn is_polar(&self) -> bool {
        self.cells.iter().all(|c| matches!(c, Cell::Point(_)))
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn centroid(&self) -> C64 {
        self.nodes.iter().sum::<C64>() / self.nodes.len() as f64
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// True iff `z` is not in the unbounded component of the complement.
    pub fn hull_indicator(&self, z: C64) -> bool {
        match self.fill.cell_of(z) {
            Some((i, j)) => self.fill.in_hull(i, j),
            None => false,
        }
    }

    pub fn occupied_at(&self, z: C64) -> bool {
        match self.fill.cell_of(z) {
            Some((i, j)) => self.fill.is_occupied(i, j),
            None => false,
        }
    }

    /// Distance from `z` to the nearest boundary node.
    pub fn node_distance(&self, z: C64) -> f64 {
        self.nodes.iter().map(|a| (a - z).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Whether `z` lies on the discretized set up to `tol`: inside an occupied
    /// fill cell or within `tol` of a node.
    pub fn near_support(&self, z: C64, tol: f64) -> bool {
        self.occupied_at(z) || self.node_distance(z) <= tol
    }

    /// Sub-discretization on the given node indices.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self::from_parts(
            idx.iter().map(|&i| self.nodes[i]).collect(),
            idx.iter().map(|&i| self.weights[i]).collect(),
            idx.iter().map(|&i| self.cells[i].clone()).collect(),
            self.resolution,
        )
    }

    /// Image under `f`; nodes whose images coincide are merged.
    pub fn map(&self, f: &dyn Fn(C64) -> C64) -> Result<Self> {
        let nodes: Vec<C64> = self.nodes.iter().map(|&z| f(z)).collect();
        if nodes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return invalid("map is not finite on the set");
        }
        let cells: Vec<Cell> = self.cells.iter().map(|c| c.map(f)).collect();
        let weights = cells
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| if let Cell::Point(_) = c { *w } else { c.length().max(f64::MIN_POSITIVE) })
            .collect();
        Ok(Self::from_parts(nodes, weights, cells, self.resolution))
    }

    /// Dense sample of the boundary: every node plus `factor` interior points
    /// per cell.
    pub fn refined_points(&self, factor: usize) -> Vec<C64> {
        let mut out = self.nodes.clone();
        for c in &self.cells {
            if matches!(c, Cell::Point(_)) {
                continue;
            }
            for i in 0..factor {
                out.push(c.point_at((i as f64 + 0.5) / factor as f64));
            }
        }
        out
    }

    /// Each cell split into `factor` equal pieces, one node per piece.
    pub fn subdivided(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let mut nodes = Vec::with_capacity(self.len() * factor);
        let mut weights = Vec::with_capacity(self.len() * factor);
        let mut cells = Vec::with_capacity(self.len() * factor);
        for (c, w) in self.cells.iter().zip(&self.weights) {
            if let Cell::Point(z) = c {
                nodes.push(*z);
                weights.push(*w);
                cells.push(c.clone());
                continue;
            }
            for i in 0..factor {
                let (s0, s1) = (i as f64 / factor as f64, (i + 1) as f64 / factor as f64);
                let piece = match c {
                    Cell::Arc { center, radius, t0, t1 } => Cell::Arc {
                        center: *center,
                        radius: *radius,
                        t0: t0 + s0 * (t1 - t0),
                        t1: t0 + s1 * (t1 - t0),
                    },
                    Cell::Segment { .. } => Cell::Segment { a: c.point_at(s0), b: c.point_at(s1) },
                    _ => Cell::Polyline((0..=2).map(|j| c.point_at(s0 + (s1 - s0) * j as f64 / 2.0)).collect()),
                };
                nodes.push(piece.point_at(0.5));
                weights.push(piece.length());
                cells.push(piece);
            }
        }
        Self::from_parts(nodes, weights, cells, self.resolution * factor)
    }

    /// The polynomial hull as a set: same nodes, fill occupancy = hull flags.
    pub fn hull(&self) -> Self {
        let fill = FillGrid::new(
            self.fill.origin,
            self.fill.step,
            self.fill.nx,
            self.fill.ny,
            self.fill.hull.clone(),
        );
        SetDiscretization { fill, ..self.clone() }
    }

    /// Points representing the set for distance purposes: cell samples and
    /// the boundary of the occupied region.
    fn support_samples(&self, spacing: f64) -> Vec<C64> {
        let mut out: Vec<C64> = self.cells.iter().flat_map(|c| c.samples(spacing)).collect();
        let g = &self.fill;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if !g.is_occupied(i, j) {
                    continue;
                }
                let edge = i == 0
                    || j == 0
                    || i + 1 == g.nx
                    || j + 1 == g.ny
                    || !g.is_occupied(i - 1, j)
                    || !g.is_occupied(i + 1, j)
                    || !g.is_occupied(i, j - 1)
                    || !g.is_occupied(i, j + 1);
                if edge {
                    out.push(g.center(i, j));
                }
            }
        }
        out
    }

    /// `K^ε = {z : d(z, K) ≤ ε}` with boundary nodes on the dilated boundary.
    pub fn epsilon_neighborhood(&self, eps: f64) -> Result<Self> {
        if !(eps >= 2.0 * self.h) {
            return Err(Error::BelowResolution(format!("ε = {eps} is below 2h = {}", 2.0 * self.h)));
        }
        let (lo, hi) = bbox(&self.nodes, &self.cells);
        let g0 = &self.fill;
        let lo = C64::new(lo.re.min(g0.origin.re), lo.im.min(g0.origin.im));
        let hi = C64::new(
            hi.re.max(g0.origin.re + g0.nx as f64 * g0.step),
            hi.im.max(g0.origin.im + g0.ny as f64 * g0.step),
        );
        let pad = eps * 1.25;
        let (lo, hi) = (lo - C64::new(pad, pad), hi + C64::new(pad, pad));
        let side = (hi.re - lo.re).max(hi.im - lo.im);
        let step = (eps / 24.0).min(self.h.max(eps / 64.0)).max(side / 1024.0);
        let n = (side / step).ceil() as usize;
        let origin = lo;
        let spacing = step.min(self.h.max(step * 0.5));
        let samples = self.support_samples(spacing);

        let nv = n + 1;
        let mut dist = vec![f64::INFINITY; nv * nv];
        let reach = eps + 2.0 * step;
        let span = (reach / step).ceil() as isize;
        for s in &samples {
            let ci = ((s.re - origin.re) / step).round() as isize;
            let cj = ((s.im - origin.im) / step).round() as isize;
            for dj in -span..=span {
                let j = cj + dj;
                if j < 0 || j >= nv as isize {
                    continue;
                }
                for di in -span..=span {
                    let i = ci + di;
                    if i < 0 || i >= nv as isize {
                        continue;
                    }
                    let v = origin + C64::new(i as f64 * step, j as f64 * step);
                    let d = (v - s).norm();
                    let id = j as usize * nv + i as usize;
                    if d < dist[id] {
                        dist[id] = d;
                    }
                }
            }
        }
        for j in 0..nv {
            for i in 0..nv {
                let v = origin + C64::new(i as f64 * step, j as f64 * step);
                if self.occupied_at(v) {
                    dist[j * nv + i] = 0.0;
                }
            }
        }
        let field: Vec<f64> = dist.iter().map(|d| d.min(1e300) - eps).collect();
        let mut occupied = vec![false; n * n];
        for j in 0..n {
            for i in 0..n {
                let corner = [field[j * nv + i], field[j * nv + i + 1], field[(j + 1) * nv + i], field[(j + 1) * nv + i + 1]];
                occupied[j * n + i] = corner.iter().any(|&f| f <= 0.0);
            }
        }
        let mut nodes = Vec::new();
        let mut cells = Vec::new();
        for (a, b) in marching_segments(&field, n, n, origin, step) {
            if (b - a).norm() > 1e-14 {
                nodes.push(0.5 * (a + b));
                cells.push(Cell::Segment { a, b });
            }
        }
        if nodes.is_empty() {
            return Err(Error::DegenerateSet("ε-neighborhood has no boundary".into()));
        }
        let weights: Vec<f64> = cells.iter().map(Cell::length).collect();
        let scale = nodes.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let (kept, _) = dedup(&nodes, 1e-12 * scale);
        let nodes = kept.iter().map(|&i| nodes[i]).collect();
        let weights = kept.iter().map(|&i| weights[i]).collect();
        let cells = kept.iter().map(|&i| cells[i].clone()).collect();
        let fill = FillGrid::new(origin, step, n, n, occupied);
        Ok(SetDiscretization { nodes, weights, cells, fill, h: step, resolution: self.resolution })
    }
}

fn bbox(nodes: &[C64], cells: &[Cell]) -> (C64, C64) {
    let mut lo = C64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut add = |z: C64| {
        lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
    };
    for z in nodes {
        add(*z);
    }
    for c in cells {
        match c {
            Cell::Point(_) => {}
            Cell::Arc { center, radius, t0, t1 } => {
                add(center + C64::from_polar(*radius, *t0));
                add(center + C64::from_polar(*radius, *t1));
                add(center + C64::from_polar(*radius, 0.5 * (t0 + t1)));
            }
            Cell::Segment { a, b } => {
                add(*a);
                add(*b);
            }
            Cell::Polyline(p) => p.iter().for_each(|z| add(*z)),
        }
    }
    (lo, hi)
}

/// `min |x − y|` over node pairs.
pub fn set_distance(k: &SetDiscretization, p: &SetDiscretization) -> f64 {
    crate::par::map(&k.nodes, |x| p.node_distance(*x))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Distance from the hull of `p` to the nodes of `k`.
pub fn hull_distance(p: &SetDiscretization, k: &SetDiscretization) -> f64 {
    let mut samples = p.fill.hull_boundary_centers();
    samples.extend_from_slice(&p.nodes);
    crate::par::map(&k.nodes, |x| samples.iter().map(|s| (s - x).norm()).fold(f64::INFINITY, f64::min))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn circle_nodes_and_weights() {
        let k = SetDiscretization::discretize(&CompactSetSpec::circle(z(0.0, 0.0), 1.0), 256).unwrap();
        assert_eq!(k.len(), 256);
        for w in &k.weights {
            assert!((w - TAU / 256.0).abs() < 1e-14);
        }
        assert!(k.nodes.iter().all(|p| (p.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn annulus_boundary_total_weight() {
        let k = SetDiscretization::discretize(&CompactSetSpec::annulus_boundary(z(0.0, 0.0), 0.5, 1.0), 256).unwrap();
        assert_eq!(k.len(), 512);
        assert!((k.total_weight() - 3.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn single_point_marks_one_cell() {
        let k = SetDiscretization::discretize(&CompactSetSpec::points(&[z(0.0, 0.0)]), 64).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k.weights, vec![1.0]);
        assert_eq!(k.fill.occupied_count(), 1);
        assert_eq!(k.fill.hull_count(), 1);
        assert!(k.is_polar());
    }

    #[test]
    fn degenerate_specs_rejected() {
        assert!(SetDiscretization::discretize(&CompactSetSpec::circle(z(0.0, 0.0), 0.0), 64).is_err());
        assert!(SetDiscretization::discretize(&CompactSetSpec::Union { parts: vec![] }, 64).is_err());
        assert!(SetDiscretization::discretize(&CompactSetSpec::arc(z(0.0, 0.0), 1.0, 1.0, 1.0), 64).is_err());
        assert!(SetDiscretization::discretize(&CompactSetSpec::circle(z(0.0, 0.0), 1.0), 8).is_err());
    }

    #[test]
    fn arc_and_segment_lengths() {
        let a = SetDiscretization::discretize(&CompactSetSpec::arc(z(0.0, 0.0), 1.0, 0.0, PI), 128).unwrap();
        assert_eq!(a.len(), 129);
        assert!((a.total_weight() - PI).abs() < 1e-12);
        let s = SetDiscretization::discretize(&CompactSetSpec::segment(z(-2.0, 0.0), z(2.0, 0.0)), 128).unwrap();
        assert!((s.total_weight() - 4.0).abs() < 1e-12);
        assert_eq!(s.nodes[0], z(-2.0, 0.0));
    }

    #[test]
    fn mesh_halves_with_resolution() {
        for spec in [
            CompactSetSpec::circle(z(0.0, 0.0), 1.0),
            CompactSetSpec::segment(z(-1.0, 0.0), z(1.0, 0.0)),
        ] {
            let a = SetDiscretization::discretize(&spec, 64).unwrap();
            let b = SetDiscretization::discretize(&spec, 128).unwrap();
            assert!((a.h / b.h - 2.0).abs() < 0.02, "{} {}", a.h, b.h);
        }
    }

    #[test]
    fn hull_of_circle_and_annulus() {
        let k = SetDiscretization::discretize(&CompactSetSpec::circle(z(0.0, 0.0), 1.0), 256).unwrap();
        assert!(k.hull_indicator(z(0.0, 0.0)));
        assert!(!k.hull_indicator(z(2.0, 0.0)));
        assert!(!k.hull_indicator(z(1.1, 0.0)));
        let a = SetDiscretization::discretize(&CompactSetSpec::annulus_boundary(z(0.0, 0.0), 0.5, 1.0), 256).unwrap();
        assert!(a.hull_indicator(z(0.7, 0.0)));
        assert!(a.hull_indicator(z(0.0, 0.0)));
        let arc = SetDiscretization::discretize(&CompactSetSpec::arc(z(0.0, 0.0), 1.0, 0.0, PI), 256).unwrap();
        assert!(!arc.hull_indicator(z(0.0, 0.5)));
    }

    #[test]
    fn distances() {
        let c = |x: f64, r: f64| SetDiscretization::discretize(&CompactSetSpec::circle(z(x, 0.0), r), 256).unwrap();
        let o = SetDiscretization::discretize(&CompactSetSpec::points(&[z(0.0, 0.0)]), 64).unwrap();
        let k = c(0.0, 1.0);
        assert!((set_distance(&k, &o) - 1.0).abs() <= k.h);
        assert!((set_distance(&k, &c(0.0, 0.5)) - 0.5).abs() <= k.h);
        assert!((set_distance(&k, &c(3.0, 1.0)) - 1.0).abs() <= k.h);
        assert!((hull_distance(&c(0.0, 0.5), &k) - 0.5).abs() <= 2.0 * k.h);
    }

    #[test]
    fn fraction_within_matches_sampling() {
        let cells = [
            Cell::Arc { center: z(0.1, -0.2), radius: 1.3, t0: -0.4, t1: 2.2 },
            Cell::Segment { a: z(-1.0, 0.3), b: z(1.2, -0.5) },
            Cell::Polyline(vec![z(0.0, 0.0), z(0.5, 0.4), z(1.0, 0.0)]),
        ];
        for cell in &cells {
            for (c, r) in [(z(0.3, 0.4), 0.7), (z(-0.5, 0.5), 1.1), (z(2.0, 2.0), 0.5)] {
                let n = 200_000;
                let inside = (0..n)
                    .filter(|&i| (cell.point_at((i as f64 + 0.5) / n as f64) - c).norm() <= r)
                    .count() as f64
                    / n as f64;
                assert!((cell.fraction_within(c, r) - inside).abs() < 1e-4, "{cell:?}");
            }
        }
    }

    #[test]
    fn epsilon_neighborhood_examples() {
        let k = SetDiscretization::discretize(&CompactSetSpec::circle(z(0.0, 0.0), 1.0), 256).unwrap();
        let band = k.epsilon_neighborhood(0.1).unwrap();
        assert!(band.occupied_at(z(0.92, 0.0)) && band.occupied_at(z(0.0, -1.08)));
        assert!(!band.occupied_at(z(0.85, 0.0)) && !band.occupied_at(z(1.15, 0.0)));
        assert!(k.epsilon_neighborhood(k.h).is_err());

        let o = SetDiscretization::discretize(&CompactSetSpec::points(&[z(0.0, 0.0)]), 64).unwrap();
        let disk = o.epsilon_neighborhood(0.1).unwrap();
        assert!(disk.occupied_at(z(0.09, 0.0)) && !disk.occupied_at(z(0.11, 0.0)));
        assert!(disk.nodes.iter().all(|p| (p.norm() - 0.1).abs() < 0.01));

        let two = SetDiscretization::discretize(
            &CompactSetSpec::Union {
                parts: vec![CompactSetSpec::circle(z(0.0, 0.0), 1.0), CompactSetSpec::circle(z(2.05, 0.0), 1.0)],
            },
            256,
        )
        .unwrap();
        let merged = two.epsilon_neighborhood(0.1).unwrap();
        // The gap point between the circles is covered, joining the components.
        assert!(merged.occupied_at(z(1.025, 0.0)));
    }

    #[test]
    fn lemniscate_of_z_squared_minus_one() {
        // |z² − 1| = 1 is the figure-eight lemniscate through 0 and ±√2.
        let spec = CompactSetSpec::Lemniscate { coeffs: vec![[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]], level: 1.0 };
        let k = SetDiscretization::discretize(&spec, 128).unwrap();
        assert!(k.nodes.iter().all(|p| ((p * p - 1.0).norm() - 1.0).abs() < 0.02));
        assert!(k.hull_indicator(z(1.0, 0.0)) && k.hull_indicator(z(-1.0, 0.0)));
        assert!(!k.hull_indicator(z(0.0, 0.5)));
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let s = r#"{"kind": "annulus", "center": [0,0], "r_in": 0.5, "r_out": 1.0, "boundary_only": true}"#;
        let spec: CompactSetSpec = serde_json::from_str(s).unwrap();
        assert_eq!(spec, CompactSetSpec::annulus_boundary(z(0.0, 0.0), 0.5, 1.0));
        let back: CompactSetSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        let bad = r#"{"kind": "circle", "center": [0,0], "radius": 1.0, "colour": 3}"#;
        assert!(serde_json::from_str::<CompactSetSpec>(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hull_monotone_under_union(x in -2.0f64..2.0, y in -2.0f64..2.0, r in 0.2f64..0.9) {
            let c1 = CompactSetSpec::circle(z(0.0, 0.0), 1.0);
            let c2 = CompactSetSpec::circle(z(x, y), r);
            let k1 = SetDiscretization::discretize(&c1, 64).unwrap();
            let k2 = SetDiscretization::discretize(&CompactSetSpec::Union { parts: vec![c1, c2] }, 64).unwrap();
            for i in 0..=20 {
                for j in 0..=20 {
                    let p = z(-1.2 + 0.12 * i as f64, -1.2 + 0.12 * j as f64);
                    if k1.hull_indicator(p) {
                        prop_assert!(k2.hull_indicator(p) || k2.fill.cell_of(p).is_none());
                    }
                }
            }
        }

        #[test]
        fn epsilon_monotone(e1 in 0.06f64..0.2, de in 0.0f64..0.2) {
            let k = SetDiscretization::discretize(&CompactSetSpec::segment(z(-1.0, 0.0), z(1.0, 0.0)), 256).unwrap();
            let a = k.epsilon_neighborhood(e1).unwrap();
            let b = k.epsilon_neighborhood(e1 + de).unwrap();
            for i in 0..a.fill.nx {
                for j in 0..a.fill.ny {
                    if a.fill.is_occupied(i, j) {
                        let c = a.fill.center(i, j);
                        let d = if c.re.abs() <= 1.0 { c.im.abs() } else { (c - z(c.re.signum(), 0.0)).norm() };
                        prop_assert!(d > e1 + de - 1.5 * b.fill.step || b.occupied_at(c));
                    }
                }
            }
        }
    }
}
