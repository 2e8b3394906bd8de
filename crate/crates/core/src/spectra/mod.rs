//! From recurrences to quadrature measures (Golub-Welsch).
//!
//! A monic recurrence with `b_n > 0` is the spectral data of a Jacobi matrix
//! with diagonal `a_n` and off-diagonal `sqrt(b_n)`. The `N` eigenvalues of
//! its leading block are the Gauss nodes of the orthogonality measure and the
//! squared first eigenvector components are the weights; the rule reproduces
//! every moment of order `<= 2N - 1`.

mod eigen;
mod measure;

pub use eigen::{tridiag_eigen, TridiagEigen, DEFLATION_EPS, MAX_SWEEPS};
pub use measure::{integrate, moments, DiscreteMeasure, MASS_TOLERANCE, NEGATIVE_WEIGHT_CLAMP, NODE_MERGE_FRACTION};

use crate::error::{Error, Result};
use crate::qnum::ProcessParams;
use crate::recurrence::{nu_recurrence, transition_recurrence, RecurrenceCoeffs, MAX_INDEX};

/// Default number of quadrature nodes.
pub const DEFAULT_POINTS: usize = 64;

/// Symmetric tridiagonal matrix with strictly positive off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "Jacobi matrix needs n diagonal and n - 1 off-diagonal entries, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        if let Some(i) = offdiag.iter().position(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::NonPositiveRecurrence(i + 1, offdiag[i] * offdiag[i]));
        }
        if diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("Jacobi matrix diagonal must be finite".into()));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Union of the Gershgorin discs, `[min(d_i - r_i), max(d_i + r_i)]`.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.size();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1] } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i] } else { 0.0 };
            let r = left + right;
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

/// The leading `n x n` block of the Jacobi matrix of `rec`.
pub fn jacobi_matrix(rec: &RecurrenceCoeffs, n: usize) -> Result<JacobiMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    if n > MAX_INDEX || rec.len_limit().is_some_and(|limit| n > limit) {
        return Err(Error::IndexCap(n));
    }
    let diag = (0..n).map(|i| rec.a(i)).collect();
    let mut offdiag = Vec::with_capacity(n - 1);
    for i in 1..n {
        let b = rec.b(i);
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::NonPositiveRecurrence(i, b));
        }
        offdiag.push(b.sqrt());
    }
    JacobiMatrix::new(diag, offdiag)
}

/// Gauss rule of a Jacobi matrix.
pub fn quadrature_from_jacobi(jacobi: &JacobiMatrix) -> Result<DiscreteMeasure> {
    let eig = tridiag_eigen(jacobi)?;
    let weights = eig.first_components.iter().map(|z| z * z).collect();
    DiscreteMeasure::from_quadrature(eig.eigenvalues, weights, 2 * jacobi.size() - 1, jacobi.gershgorin())
}

/// `n`-point Gauss rule of the orthogonality measure of `rec`.
pub fn quadrature(rec: &RecurrenceCoeffs, n: usize) -> Result<DiscreteMeasure> {
    quadrature_from_jacobi(&jacobi_matrix(rec, n)?)
}

/// `n`-point approximation of the transition law `P_{s,t}(x, dy)`.
pub fn transition_measure(params: ProcessParams, x: f64, s: f64, t: f64, n: usize) -> Result<DiscreteMeasure> {
    quadrature(&transition_recurrence(params, x, s, t)?, n)
}

/// `n`-point approximation of `nu_{x,t}(dy)`.
pub fn nu_measure(params: ProcessParams, x: f64, t: f64, n: usize) -> Result<DiscreteMeasure> {
    quadrature(&nu_recurrence(params, x, t)?, n)
}

/// `n`-point Gauss rule of the semicircle law with the given mean and variance.
pub fn semicircle_measure(mean: f64, variance: f64, n: usize) -> Result<DiscreteMeasure> {
    if !(variance > 0.0 && variance.is_finite()) || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "semicircle needs finite mean and positive variance, got {mean}, {variance}"
        )));
    }
    quadrature(&RecurrenceCoeffs::semicircle(mean, variance), n)
}

/// Exact two-atom transition law of the `q = -1` process.
pub fn two_point_transition(theta: f64, x: f64, s: f64, t: f64) -> Result<DiscreteMeasure> {
    if s.is_nan() || t.is_nan() || s >= t {
        return Err(Error::InvalidTimeOrder { s, t });
    }
    let shift = theta - 2.0 * x;
    let root = (shift * shift + 4.0 * (t - s)).sqrt();
    let tilt = shift / (2.0 * root);
    let nodes = vec![0.5 * (theta - root), 0.5 * (theta + root)];
    let weights = vec![0.5 + tilt, 0.5 - tilt];
    let mass = weights[0] + weights[1];
    DiscreteMeasure::new(nodes, weights.into_iter().map(|w| w / mass).collect())
}
