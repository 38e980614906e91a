use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Orthonormal polynomials on weighted points through the Arnoldi
/// recurrence `z·q̃_j = Σ_{i≤j+1} H[i][j] q̃_i`, started from the constant
/// `q̃_0 = 1/√Σω`.
#[derive(Clone, Debug)]
pub(crate) struct Arnoldi {
    q0: f64,
    /// Column j holds `H[0..=j+1][j]`.
    h: Vec<Vec<C64>>,
    /// Smallest `‖v_{j+1}‖ / ‖z·v_j‖` seen during orthogonalization.
    pub min_ratio: f64,
}

fn wdot(omega: &[f64], a: &[C64], b: &[C64]) -> C64 {
    omega.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| x * y.conj() * *w).sum()
}

impl Arnoldi {
    /// Build degrees `0..=k` and return the sampled basis values `V[j][i]`.
    pub fn build(points: &[C64], omega: &[f64], k: usize) -> Result<(Self, Vec<Vec<C64>>)> {
        let mass: f64 = omega.iter().sum();
        if points.is_empty() || !(mass > 0.0) {
            return Err(Error::RankDeficient { degree: 0 });
        }
        let q0 = 1.0 / mass.sqrt();
        let mut v = vec![vec![C64::new(q0, 0.0); points.len()]];
        let mut h = Vec::with_capacity(k);
        let mut min_ratio: f64 = 1.0;
        for j in 0..k {
            let mut w: Vec<C64> = points.iter().zip(&v[j]).map(|(z, q)| z * q).collect();
            let before = wdot(omega, &w, &w).re.sqrt();
            let mut col = vec![C64::new(0.0, 0.0); j + 2];
            // Modified Gram-Schmidt, repeated once.
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let c = wdot(omega, &w, vi);
                    col[i] += c;
                    for (wl, vl) in w.iter_mut().zip(vi) {
                        *wl -= c * vl;
                    }
                }
            }
            let nrm = wdot(omega, &w, &w).re.sqrt();
            if !(nrm > 1e-10 * before) || points.len() <= j + 1 {
                return Err(Error::RankDeficient { degree: j + 1 });
            }
            min_ratio = min_ratio.min(nrm / before);
            col[j + 1] = C64::new(nrm, 0.0);
            for wl in w.iter_mut() {
                *wl /= nrm;
            }
            v.push(w);
            h.push(col);
        }
        Ok((Arnoldi { q0, h, min_ratio }, v))
    }

    pub fn degree(&self) -> usize {
        self.h.len()
    }

    /// `q̃_0(z), …, q̃_k(z)`.
    pub fn eval(&self, z: C64) -> Vec<C64> {
        let k = self.h.len();
        let mut u = Vec::with_capacity(k + 1);
        u.push(C64::new(self.q0, 0.0));
        for j in 0..k {
            let col = &self.h[j];
            let mut next = z * u[j];
            for i in 0..=j {
                next -= col[i] * u[i];
            }
            u.push(next / col[j + 1]);
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_atoms() {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.5), C64::new(-0.3, 2.0)];
        let (a, v) = Arnoldi::build(&pts, &[1.0; 3], 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let g = wdot(&[1.0; 3], &v[i], &v[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g - e).norm() < 1e-12);
            }
        }
        for (i, p) in pts.iter().enumerate() {
            let u = a.eval(*p);
            for j in 0..3 {
                assert!((u[j] - v[j][i]).norm() < 1e-12);
            }
        }
        assert!(matches!(Arnoldi::build(&pts, &[1.0; 3], 3), Err(Error::RankDeficient { degree: 3 })));
    }
}
