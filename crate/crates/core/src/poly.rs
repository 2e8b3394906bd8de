//! Dense univariate polynomials in the monomial basis.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A real polynomial `c_0 + c_1 y + ... + c_d y^d`.
///
/// Trailing exact zeros are trimmed, so the zero polynomial has no
/// coefficients and `degree()` is well defined for everything else.
/// Near-zero leading coefficients are kept as they are.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `y^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coeff(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Coefficient of `y^i` (zero past the degree).
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..len).map(|i| self.coeff(i) - other.coeff(i)).collect())
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// `(y - c) * p`.
    pub fn mul_by_linear(&self, c: f64) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let n = self.coeffs.len();
        let mut out = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            out[i + 1] += a;
            out[i] -= c * a;
        }
        Poly::new(out)
    }

    /// `y * p`.
    pub fn mul_by_y(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend_from_slice(&self.coeffs);
        Poly::new(out)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect())
    }

    /// The quotient `g` of `p(y) - p(x0) = g(y) (y - x0)`, by synthetic division.
    pub fn divided_difference(&self, x0: f64) -> Poly {
        let n = self.coeffs.len();
        if n <= 1 {
            return Poly::zero();
        }
        let mut quotient = vec![0.0; n - 1];
        let mut carry = 0.0;
        for i in (1..n).rev() {
            carry = carry * x0 + self.coeffs[i];
            quotient[i - 1] = carry;
        }
        Poly::new(quotient)
    }

    /// `r(y) = d/dx [(p(y) - p(x)) / (y - x)]` at `x = x0`, as a polynomial in `y`.
    ///
    /// This is the divided difference applied twice; `r(x0) = p''(x0) / 2`.
    pub fn generator_integrand(&self, x0: f64) -> Poly {
        self.divided_difference(x0).divided_difference(x0)
    }
}

impl From<Vec<f64>> for Poly {
    fn from(coeffs: Vec<f64>) -> Self {
        Poly::new(coeffs)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly::add(self, rhs)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly::sub(self, rhs)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        Poly::mul(self, rhs)
    }
}

impl Mul<f64> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: f64) -> Poly {
        self.scale(rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*y")?,
                _ => write!(f, "{c}*y^{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_examples() {
        assert_eq!(Poly::zero().eval(3.0), 0.0);
        assert_eq!(Poly::new(vec![1.0, 2.0, 1.0]).eval(2.0), 9.0);
        assert_eq!(Poly::monomial(3).eval(-1.5), -3.375);
    }

    #[test]
    fn canonical_trimming() {
        let y = Poly::monomial(1);
        let sum = y.add(&y.scale(-1.0));
        assert!(sum.is_zero());
        assert!(sum.coeffs().is_empty());
        assert_eq!(sum.degree(), None);
        assert_eq!(Poly::new(vec![1.0, 0.0, 0.0]).degree(), Some(0));
        // near-zeros are not trimmed
        assert_eq!(Poly::new(vec![1.0, 1e-300]).degree(), Some(1));
    }

    #[test]
    fn ring_operations() {
        assert_eq!(Poly::monomial(2).derivative(), Poly::new(vec![0.0, 2.0]));
        assert_eq!(Poly::constant(1.0).mul_by_linear(2.0), Poly::new(vec![-2.0, 1.0]));
        assert_eq!(Poly::constant(5.0).derivative(), Poly::zero());
        let p = Poly::new(vec![1.0, -1.0]);
        let q = Poly::new(vec![1.0, 1.0]);
        assert_eq!(&p * &q, Poly::new(vec![1.0, 0.0, -1.0]));
        assert_eq!(p.mul_by_y(), Poly::new(vec![0.0, 1.0, -1.0]));
        assert_eq!(Poly::zero().mul_by_linear(3.0), Poly::zero());
    }

    #[test]
    fn divided_difference_examples() {
        assert_eq!(Poly::monomial(2).divided_difference(1.0), Poly::new(vec![1.0, 1.0]));
        assert_eq!(Poly::constant(4.0).divided_difference(0.3), Poly::zero());
        // g(y)(y - 2) + 8 = y^3 expands to y^3 with g = y^2 + 2y + 4
        let g = Poly::monomial(3).divided_difference(2.0);
        assert_eq!(g, Poly::new(vec![4.0, 2.0, 1.0]));
        assert_eq!(&g.mul_by_linear(2.0) + &Poly::constant(8.0), Poly::monomial(3));
    }

    #[test]
    fn generator_integrand_examples() {
        for &x0 in &[-2.0, 0.0, 0.7] {
            assert_eq!(Poly::monomial(2).generator_integrand(x0), Poly::constant(1.0));
            let r = Poly::monomial(3).generator_integrand(x0);
            assert_relative_eq!(r.coeff(0), 2.0 * x0);
            assert_eq!(r.coeff(1), 1.0);
            assert_eq!(r.degree(), Some(1));
        }
        assert!(Poly::constant(2.0).generator_integrand(1.0).is_zero());
        assert!(Poly::monomial(1).generator_integrand(1.0).is_zero());
    }

    #[test]
    fn generator_integrand_identity() {
        // r(y)(y - x0)^2 = p(y) - p(x0) - p'(x0)(y - x0)
        let p = Poly::new(vec![0.3, -1.0, 2.0, 0.5, -0.25, 0.1]);
        let x0 = 0.8;
        let r = p.generator_integrand(x0);
        let dp = p.derivative().eval(x0);
        for i in 0..10 {
            let y = -2.0 + 0.37 * i as f64;
            let lhs = r.eval(y) * (y - x0).powi(2);
            let rhs = p.eval(y) - p.eval(x0) - dp * (y - x0);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
