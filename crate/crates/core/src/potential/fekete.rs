use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

/// `log V = Σ_{i<j} log|z_i − z_j|`.
pub fn log_vandermonde(points: &[C64]) -> f64 {
    let mut s = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            s += (a - b).norm().ln();
        }
    }
    s
}

/// `δ_k = V^{2/(k(k−1))}` for `k = points.len() ≥ 2`.
pub fn kth_diameter(points: &[C64]) -> f64 {
    let k = points.len() as f64;
    (2.0 * log_vandermonde(points) / (k * (k - 1.0))).exp()
}

/// Coordinate ascent on `log V` over subsets of `pool`: each point in turn
/// moves to the pool node that maximizes its product of distances to the
/// others. Returns the final node indices and `log V`.
pub fn polish(pool: &[C64], start: &[usize], max_sweeps: usize) -> (Vec<usize>, f64) {
    let n = pool.len();
    let k = start.len();
    let mut chosen = start.to_vec();
    let mut in_set = vec![false; n];
    for &i in &chosen {
        in_set[i] = true;
    }
    let column = |x: usize| -> Vec<f64> {
        pool.iter()
            .enumerate()
            .map(|(i, p)| if i == x { 0.0 } else { (p - pool[x]).norm().ln() })
            .collect()
    };
    let mut cols: Vec<Vec<f64>> = chosen.iter().map(|&x| column(x)).collect();
    let mut s = vec![0.0; n];
    for c in &cols {
        for (si, ci) in s.iter_mut().zip(c) {
            *si += ci;
        }
    }
    for _ in 0..max_sweeps {
        let mut moved = false;
        for a in 0..k {
            let cur = chosen[a];
            let cur_val = s[cur] - cols[a][cur];
            let mut best = cur;
            let mut best_val = cur_val;
            for i in 0..n {
                if in_set[i] {
                    continue;
                }
                let v = s[i] - cols[a][i];
                if v > best_val {
                    best = i;
                    best_val = v;
                }
            }
            if best != cur && best_val > cur_val + 1e-12 * cur_val.abs().max(1.0) {
                for (si, ci) in s.iter_mut().zip(&cols[a]) {
                    *si -= ci;
                }
                in_set[cur] = false;
                in_set[best] = true;
                chosen[a] = best;
                cols[a] = column(best);
                for (si, ci) in s.iter_mut().zip(&cols[a]) {
                    *si += ci;
                }
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let log_v = 0.5 * chosen.iter().enumerate().map(|(a, &x)| s[x] - cols[a][x]).sum::<f64>();
    (chosen, log_v)
}

const MAX_POOL: usize = 64;
const MAX_K: usize = 7;

// Order-preserving map from f64 to u64 so the shared bound can use fetch_max.
fn key(f: f64) -> u64 {
    let b = f.to_bits();
    if f >= 0.0 {
        b | (1 << 63)
    } else {
        !b
    }
}

fn unkey(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

struct Search<'a> {
    l: &'a [Vec<f64>],
    n: usize,
    k: usize,
    log_diam: f64,
    best: &'a AtomicU64,
}

impl Search<'_> {
    fn dfs(&self, chosen: &mut Vec<usize>, partial: f64, local: &mut (f64, Vec<usize>)) {
        let depth = chosen.len();
        if depth == self.k {
            if partial > local.0 {
                *local = (partial, chosen.clone());
                self.best.fetch_max(key(partial), Ordering::Relaxed);
            }
            return;
        }
        let r = self.k - depth;
        let start = chosen.last().map_or(0, |&c| c + 1);
        if self.n - start < r {
            return;
        }
        let gains: Vec<(usize, f64)> = (start..self.n)
            .map(|c| (c, chosen.iter().map(|&s| self.l[c][s]).sum::<f64>()))
            .collect();
        let max_gain = gains.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
        let pairs_left = (r * (r - 1) / 2) as f64;
        let bound = partial + r as f64 * max_gain + pairs_left * self.log_diam;
        if bound < unkey(self.best.load(Ordering::Relaxed)) - 1e-12 {
            return;
        }
        for &(c, g) in &gains[..=self.n - r - start] {
            let child_bound = partial + g + (r - 1) as f64 * max_gain + pairs_left * self.log_diam;
            if child_bound < unkey(self.best.load(Ordering::Relaxed)) - 1e-12 {
                continue;
            }
            chosen.push(c);
            self.dfs(chosen, partial + g, local);
            chosen.pop();
        }
    }
}

/// Exact maximizer of the Vandermonde product over `k`-subsets of a pool of
/// at most 64 nodes, `k ≤ 7`, by branch and bound.
pub fn fekete_points_exact(pool: &[C64], k: usize) -> Result<Vec<C64>> {
    let n = pool.len();
    if n > MAX_POOL || k > MAX_K {
        return Err(Error::Budget(format!(
            "exact Fekete search limited to pools of {MAX_POOL} nodes and k <= {MAX_K}, got {n} nodes and k = {k}"
        )));
    }
    if k == 0 || k > n {
        return invalid(format!("cannot choose {k} points from {n} nodes"));
    }
    if k == 1 {
        return Ok(vec![pool[0]]);
    }
    let l: Vec<Vec<f64>> = pool
        .iter()
        .map(|a| pool.iter().map(|b| if a == b { f64::NEG_INFINITY } else { (a - b).norm().ln() }).collect())
        .collect();
    let log_diam = l.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    // Greedy seed gives a valid incumbent for pruning.
    let mut seed: Vec<usize> = vec![0];
    while seed.len() < k {
        let next = (0..n)
            .filter(|i| !seed.contains(i))
            .max_by(|&a, &b| {
                let fa: f64 = seed.iter().map(|&s| l[a][s]).sum();
                let fb: f64 = seed.iter().map(|&s| l[b][s]).sum();
                fa.total_cmp(&fb).then(b.cmp(&a))
            })
            .unwrap();
        seed.push(next);
    }
    let (mut seed, seed_val) = polish(pool, &seed, 50);
    seed.sort_unstable();
    let best = AtomicU64::new(key(seed_val));
    let search = Search { l: &l, n, k, log_diam, best: &best };
    let results = crate::par::map_range(n - k + 1, |first| {
        let mut local = (f64::NEG_INFINITY, Vec::new());
        let mut chosen = vec![first];
        search.dfs(&mut chosen, 0.0, &mut local);
        local
    });
    let mut winner = (seed_val, seed);
    for r in results {
        if r.0 > winner.0 + 1e-12 * winner.0.abs().max(1.0) {
            winner = r;
        }
    }
    Ok(winner.1.iter().map(|&i| pool[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle_pool(n: usize) -> Vec<C64> {
        (0..n).map(|j| C64::from_polar(1.0, TAU * j as f64 / n as f64)).collect()
    }

    fn brute(pool: &[C64], k: usize) -> f64 {
        fn rec(pool: &[C64], k: usize, start: usize, cur: &mut Vec<C64>, best: &mut f64) {
            if cur.len() == k {
                *best = best.max(log_vandermonde(cur));
                return;
            }
            for i in start..pool.len() {
                cur.push(pool[i]);
                rec(pool, k, i + 1, cur, best);
                cur.pop();
            }
        }
        let mut best = f64::NEG_INFINITY;
        rec(pool, k, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn matches_plain_enumeration() {
        let pool: Vec<C64> = (0..14)
            .map(|j| {
                let t = j as f64 * 0.7;
                C64::new(t.cos() * (1.0 + 0.3 * (3.0 * t).sin()), t.sin())
            })
            .collect();
        for k in 2..=5 {
            let exact = fekete_points_exact(&pool, k).unwrap();
            assert!((log_vandermonde(&exact) - brute(&pool, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn antipodal_pair_and_segment_endpoints() {
        let p = fekete_points_exact(&circle_pool(64), 2).unwrap();
        assert!((p[0] + p[1]).norm() < 1e-12);
        let seg: Vec<C64> = (0..=40).map(|j| C64::new(-2.0 + 0.1 * j as f64, 0.0)).collect();
        let e = fekete_points_exact(&seg, 2).unwrap();
        assert!((e[0].re.abs() - 2.0).abs() < 1e-12 && (e[1].re.abs() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pentagon_vandermonde() {
        // Roots of unity maximize V_k on the circle with V_k = k^{k/2}.
        let p = fekete_points_exact(&circle_pool(64), 5).unwrap();
        let v = log_vandermonde(&p).exp();
        let analytic = 5f64.powf(2.5);
        assert!((v / analytic - 1.0).abs() < 0.01, "{v} vs {analytic}");
    }

    #[test]
    fn budget_rejected() {
        assert!(matches!(fekete_points_exact(&circle_pool(65), 3), Err(Error::Budget(_))));
        assert!(matches!(fekete_points_exact(&circle_pool(10), 8), Err(Error::Budget(_))));
    }

    #[test]
    fn polish_improves_and_reports_log_v() {
        let pool = circle_pool(48);
        let (idx, lv) = polish(&pool, &[0, 1, 2, 3], 50);
        let pts: Vec<C64> = idx.iter().map(|&i| pool[i]).collect();
        assert!((lv - log_vandermonde(&pts)).abs() < 1e-10);
        assert!((lv - 2.0 * 4f64.ln()).abs() < 1e-9);
    }
}
