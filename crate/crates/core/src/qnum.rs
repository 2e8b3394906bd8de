//! q-deformed integers, factorials and binomials.
//!
//! All functions accept `q` in `(-1, 1]`; the process parameters themselves
//! are restricted to the open interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The parameter triple `(q, theta, tau)` of a q-Meixner family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub q: f64,
    pub theta: f64,
    pub tau: f64,
}

impl ProcessParams {
    pub fn new(q: f64, theta: f64, tau: f64) -> Result<Self> {
        if !(q > -1.0 && q < 1.0) {
            return Err(Error::InvalidParams(format!("q must lie in (-1, 1), got {q}")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParams(format!("theta must be finite, got {theta}")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParams(format!("tau must be >= 0, got {tau}")));
        }
        Ok(Self { q, theta, tau })
    }

    /// The q-Brownian motion: `theta = tau = 0`.
    pub fn q_brownian(q: f64) -> Result<Self> {
        Self::new(q, 0.0, 0.0)
    }
}

/// `[n]_q = 1 + q + ... + q^(n-1)`, evaluated as the explicit sum.
pub fn q_bracket(n: usize, q: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for _ in 0..n {
        sum += power;
        power *= q;
    }
    sum
}

/// `[n]_q! = [1]_q [2]_q ... [n]_q`, with `[0]_q! = 1`.
pub fn q_factorial(n: usize, q: f64) -> f64 {
    (1..=n).map(|k| q_bracket(k, q)).product()
}

/// Gaussian binomial `[n]_q! / ([k]_q! [n-k]_q!)`.
pub fn q_binomial(n: usize, k: usize, q: f64) -> Result<f64> {
    if k > n {
        return Err(Error::BinomialRange { n, k });
    }
    // Product form over the shorter side keeps the factorials small.
    let k = k.min(n - k);
    let mut value = 1.0;
    for j in 1..=k {
        value *= q_bracket(n - k + j, q) / q_bracket(j, q);
    }
    Ok(value)
}
