//! Logarithmic potentials, energies, Leja and Fekete points, capacity and
//! Green functions.

mod boundary;
mod capacity;
mod fekete;
mod green;
mod leja;

pub use boundary::BoundaryGreen;
pub use capacity::{capacity_estimate, CapacityEstimate};
pub use fekete::{fekete_points_exact, kth_diameter, log_vandermonde, polish};
pub use green::{
    equilibrium_measure, equilibrium_measure_with_tol, green_convergence_probe, green_infinity, green_pole,
    level_set_d_r, GreenField, PoleGreen, ProbeReport, ProbeRow, DEFAULT_GREEN_K, DEFAULT_TOL,
};
pub use leja::{leja_points, LejaSequence};

use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::measures::DiscreteMeasure;

/// `U^σ(z) = −Σ w_i log|z − a_i|`; `+∞` at an atom, `0` for the zero measure.
pub fn log_potential(sigma: &DiscreteMeasure, z: C64) -> f64 {
    let mut u = 0.0;
    for (a, w) in sigma.atoms().iter().zip(sigma.weights()) {
        let d = (z - a).norm();
        if d == 0.0 {
            return f64::INFINITY;
        }
        u -= w * d.ln();
    }
    u
}

/// `Σ_{i≠j} w_i w_j log(1/|a_i − a_j|)`; `+∞` when two atoms coincide.
pub fn energy(mu: &DiscreteMeasure) -> Result<f64> {
    let n = mu.len();
    if n < 2 {
        return invalid("energy needs at least two atoms");
    }
    let (a, w) = (mu.atoms(), mu.weights());
    let rows = crate::par::map_range(n, |i| {
        let mut s = 0.0;
        for j in i + 1..n {
            let d = (a[i] - a[j]).norm();
            if d == 0.0 {
                return f64::INFINITY;
            }
            s -= w[i] * w[j] * d.ln();
        }
        s
    });
    Ok(2.0 * rows.iter().sum::<f64>())
}
