//! Implicit-shift QL for symmetric tridiagonal matrices.
//!
//! Only the first row of the eigenvector matrix is accumulated, which is all
//! Gauss quadrature needs (weights are squared first components).

use crate::error::{Error, Result};

use super::JacobiMatrix;

/// Relative deflation threshold on off-diagonal entries.
pub const DEFLATION_EPS: f64 = 1e-15;

/// Iteration cap per eigenvalue.
pub const MAX_SWEEPS: usize = 50;

/// Eigenvalues in ascending order with the matching first eigenvector components.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagEigen {
    pub eigenvalues: Vec<f64>,
    pub first_components: Vec<f64>,
}

fn negligible(e: f64, d0: f64, d1: f64) -> bool {
    // The absolute floor only matters when both neighbouring diagonals are
    // exactly zero, where the relative test could never fire.
    e.abs() <= DEFLATION_EPS * (d0.abs() + d1.abs()) || e.abs() < f64::MIN_POSITIVE
}

/// Eigen-decomposition of a Jacobi matrix.
pub fn tridiag_eigen(jacobi: &JacobiMatrix) -> Result<TridiagEigen> {
    let n = jacobi.size();
    let mut d = jacobi.diag().to_vec();
    let mut e = jacobi.offdiag().to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n && !negligible(e[m], d[m], d[m + 1]) {
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NoConvergence(l));
            }

            // Wilkinson-type shift from the leading 2x2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));

            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    Ok(TridiagEigen {
        eigenvalues: order.iter().map(|&i| d[i]).collect(),
        first_components: order.iter().map(|&i| z[i]).collect(),
    })
}
