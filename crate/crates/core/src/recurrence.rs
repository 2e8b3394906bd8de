//! Monic three-term recurrences `y p_n = p_{n+1} + a_n p_n + b_n p_{n-1}`.
//!
//! Three families drive everything else:
//!
//! * the transition family `Q_n(y | x, s, t)` whose orthogonality measure is
//!   the transition law `P_{s,t}(x, dy)`,
//! * the `W_n(y; x, t)` family whose orthogonality measure `nu_{x,t}` carries
//!   the generator,
//! * the martingale polynomials `M_n(y; t) = Q_n(y | 0, 0, t)`.
//!
//! Coefficients are closed-form in `n`, so they are evaluated on demand
//! rather than stored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::qnum::{q_binomial, q_bracket, ProcessParams};

/// Largest recurrence index any construction may request.
pub const MAX_INDEX: usize = 1024;

/// Which family a recurrence belongs to, with the parameters it was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `Q_n(y | x, s, t)`.
    Transition { params: ProcessParams, x: f64, s: f64, t: f64 },
    /// `W_n(y; x, t)`.
    Nu { params: ProcessParams, x: f64, t: f64 },
    /// Constant coefficients `a_n = mean`, `b_n = variance` (semicircle law).
    Semicircle { mean: f64, variance: f64 },
    /// Tabulated coefficients; `b[i]` holds `b_{i+1}`.
    Explicit { a: Vec<f64>, b: Vec<f64> },
}

/// Recurrence coefficients `a_n` (n >= 0) and `b_n` (n >= 1) of a monic family.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceCoeffs {
    family: Family,
}

/// `a_n`, `b_n` of the transition family without any positivity requirement.
fn transition_coeffs(params: &ProcessParams, x: f64, s: f64, t: f64, n: usize) -> (f64, f64) {
    let q = params.q;
    let a = params.theta * q_bracket(n, q) + x * q.powi(n as i32);
    let b =
        if n == 0 { 0.0 } else { (t - s * q.powi(n as i32 - 1) + params.tau * q_bracket(n - 1, q)) * q_bracket(n, q) };
    (a, b)
}

impl RecurrenceCoeffs {
    /// Transition family coefficients evaluated for any `(x, s, t)`.
    ///
    /// No positivity is implied; used for algebraic identities at `s >= t`
    /// and for the martingale polynomials at `s = 0`.
    pub fn transition_raw(params: ProcessParams, x: f64, s: f64, t: f64) -> Self {
        Self { family: Family::Transition { params, x, s, t } }
    }

    pub fn semicircle(mean: f64, variance: f64) -> Self {
        Self { family: Family::Semicircle { mean, variance } }
    }

    /// Tabulated coefficients: `a = (a_0, .., a_{n-1})`, `b = (b_1, .., b_{n-1})`.
    pub fn explicit(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || b.len() + 1 != a.len() {
            return Err(Error::InvalidArgument(format!(
                "explicit recurrence needs len(b) = len(a) - 1 >= 0, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self { family: Family::Explicit { a, b } })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Number of available indices for tabulated families.
    pub fn len_limit(&self) -> Option<usize> {
        match &self.family {
            Family::Explicit { a, .. } => Some(a.len()),
            _ => None,
        }
    }

    pub fn a(&self, n: usize) -> f64 {
        match &self.family {
            Family::Transition { params, x, s, t } => transition_coeffs(params, *x, *s, *t, n).0,
            Family::Nu { params, x, .. } => {
                let q = params.q;
                params.theta * q_bracket(n + 1, q) + x * q.powi(n as i32 + 1)
            }
            Family::Semicircle { mean, .. } => *mean,
            Family::Explicit { a, .. } => a[n],
        }
    }

    /// `b_n` for `n >= 1`; `b_0` is reported as zero.
    pub fn b(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match &self.family {
            Family::Transition { params, x, s, t } => transition_coeffs(params, *x, *s, *t, n).1,
            Family::Nu { params, t, .. } => {
                let q = params.q;
                ((1.0 - q) * t + params.tau) * q_bracket(n, q) * q_bracket(n + 1, q)
            }
            Family::Semicircle { variance, .. } => *variance,
            Family::Explicit { b, .. } => b[n - 1],
        }
    }
}

/// The recurrence of `Q_n(y | x, s, t)`, whose orthogonality measure is `P_{s,t}(x, dy)`.
pub fn transition_recurrence(params: ProcessParams, x: f64, s: f64, t: f64) -> Result<RecurrenceCoeffs> {
    if !(s >= 0.0 && s < t && t.is_finite()) {
        return Err(Error::InvalidTimeOrder { s, t });
    }
    Ok(RecurrenceCoeffs::transition_raw(params, x, s, t))
}

/// The recurrence of `W_n(y; x, t)`, whose orthogonality measure is `nu_{x,t}`.
pub fn nu_recurrence(params: ProcessParams, x: f64, t: f64) -> Result<RecurrenceCoeffs> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    Ok(RecurrenceCoeffs { family: Family::Nu { params, x, t } })
}

/// Values `p_0(y), .., p_{n_max}(y)` by forward recurrence.
pub fn eval_family(rec: &RecurrenceCoeffs, n_max: usize, y: f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(1.0);
    let mut prev = 0.0;
    let mut cur = 1.0;
    for n in 0..n_max {
        let next = (y - rec.a(n)) * cur - rec.b(n) * prev;
        values.push(next);
        prev = cur;
        cur = next;
    }
    values
}

/// Polynomials `p_0, .., p_{n_max}` by the coefficient-level recurrence.
pub fn family_polys(rec: &RecurrenceCoeffs, n_max: usize) -> Vec<Poly> {
    let mut polys = Vec::with_capacity(n_max + 1);
    polys.push(Poly::constant(1.0));
    for n in 0..n_max {
        let mut next = polys[n].mul_by_linear(rec.a(n));
        if n >= 1 {
            next = next.sub(&polys[n - 1].scale(rec.b(n)));
        }
        polys.push(next);
    }
    polys
}

/// The monic polynomial `p_n`.
pub fn family_poly(rec: &RecurrenceCoeffs, n: usize) -> Poly {
    family_polys(rec, n).pop().expect("family_polys returns n + 1 entries")
}

fn martingale_rec(params: ProcessParams, t: f64) -> RecurrenceCoeffs {
    RecurrenceCoeffs::transition_raw(params, 0.0, 0.0, t)
}

/// `M_0(y; t), .., M_{n_max}(y; t)`.
pub fn martingale_polys(params: ProcessParams, n_max: usize, t: f64) -> Vec<Poly> {
    family_polys(&martingale_rec(params, t), n_max)
}

/// The martingale polynomial `M_n(y; t) = Q_n(y | 0, 0, t)`.
pub fn martingale_poly(params: ProcessParams, n: usize, t: f64) -> Poly {
    family_poly(&martingale_rec(params, t), n)
}

/// Values `M_0(y; t), .., M_{n_max}(y; t)`.
pub fn martingale_values(params: ProcessParams, n_max: usize, t: f64, y: f64) -> Vec<f64> {
    eval_family(&martingale_rec(params, t), n_max, y)
}

/// `d/dt M_0(y; t), .., d/dt M_{n_max}(y; t)` from the differentiated recurrence.
pub fn martingale_polys_dt(params: ProcessParams, n_max: usize, t: f64) -> Vec<Poly> {
    let q = params.q;
    let m = martingale_polys(params, n_max, t);
    let mut dm = Vec::with_capacity(n_max + 1);
    dm.push(Poly::zero());
    if n_max >= 1 {
        dm.push(Poly::zero());
    }
    for n in 1..n_max {
        let bracket = q_bracket(n, q);
        let a_n = params.theta * bracket;
        let b_n = (t + params.tau * q_bracket(n - 1, q)) * bracket;
        let next = dm[n].mul_by_linear(a_n).sub(&m[n - 1].scale(bracket)).sub(&dm[n - 1].scale(b_n));
        dm.push(next);
    }
    dm
}

/// `d/dt M_n(y; t)`.
pub fn martingale_poly_dt(params: ProcessParams, n: usize, t: f64) -> Poly {
    martingale_polys_dt(params, n, t).pop().expect("n + 1 entries")
}

const BASIS_WARN_THRESHOLD: f64 = 1e12;

/// Coefficients `c` with `p = sum_k c_k M_k(.; t)`, by back-substitution.
pub fn to_martingale_basis(p: &Poly, params: ProcessParams, t: f64) -> Vec<f64> {
    let Some(degree) = p.degree() else {
        return Vec::new();
    };
    let basis = martingale_polys(params, degree, t);
    let mut rem = p.coeffs().to_vec();
    let mut c = vec![0.0; degree + 1];
    for k in (0..=degree).rev() {
        // M_k is monic, so the remainder's y^k coefficient is c_k.
        let ck = rem[k];
        c[k] = ck;
        if ck != 0.0 {
            for (i, &m) in basis[k].coeffs().iter().enumerate() {
                rem[i] -= ck * m;
            }
        }
    }
    if let Some((k, ck)) = c.iter().enumerate().find(|(_, ck)| ck.abs() > BASIS_WARN_THRESHOLD) {
        log::warn!("martingale basis coefficient c_{k} = {ck:e} is ill-scaled");
    }
    c
}

/// `sum_k c_k M_k(.; t)`.
pub fn from_martingale_basis(c: &[f64], params: ProcessParams, t: f64) -> Poly {
    if c.is_empty() {
        return Poly::zero();
    }
    martingale_polys(params, c.len() - 1, t).iter().zip(c).fold(Poly::zero(), |acc, (m, &ck)| acc.add(&m.scale(ck)))
}

/// Residuals of the q-binomial expansions linking the `Q`, `M` and `W` families at `s = t`.
///
/// Residuals are relative to the sum of absolute values of the terms involved.
#[derive(Debug, Clone, Serialize)]
pub struct QqqQmReport {
    /// `|Q_n(x | x, t, t)|` for `n = 1..=n_max`.
    pub qqq_zero: Vec<f64>,
    /// `|sum_{k=0}^n [n k]_q Q_{n-k}(0 | x, t, 0) M_k(x; t)|`, relative, `n = 1..=n_max`.
    pub qqq_sum: Vec<f64>,
    /// Expansion of `Q_{n+1}(y | x, t, t)` with `k = 1..=n+1`, max over sample `y`, `n = 0..=n_max`.
    pub qm: Vec<f64>,
    /// `W_n(y; x, t)` expanded with `k = 1..=n+1` divided differences of `M_k`.
    pub wn_expansion: Vec<f64>,
    /// The same expansion truncated at `k = n`; expected to fail, reported for comparison.
    pub wn_truncated: Vec<f64>,
    /// `Q_{n+1}(y | x, t, t) = (y - x) W_n(y; x, t)`, relative, `n = 0..=n_max`.
    pub factorization: Vec<f64>,
}

impl QqqQmReport {
    pub fn max_qqq(&self) -> f64 {
        self.qqq_zero.iter().chain(&self.qqq_sum).fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_qm(&self) -> f64 {
        self.qm.iter().chain(&self.wn_expansion).fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_factorization(&self) -> f64 {
        self.factorization.iter().fold(0.0, |a, &b| a.max(b))
    }
}

fn rel(residual: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        residual.abs()
    } else {
        residual.abs() / scale
    }
}

/// Evaluates the `Q`/`M` expansion identities at `s = t` up to order `n_max`.
pub fn check_qqq_qm(params: ProcessParams, x: f64, t: f64, n_max: usize) -> Result<QqqQmReport> {
    let q = params.q;
    let nu = nu_recurrence(params, x, t)?;
    let q_tt = RecurrenceCoeffs::transition_raw(params, x, t, t);
    // Q_j(0 | x, t, 0): the transition family with s = t and t = 0, at y = 0.
    let q_zero = eval_family(&RecurrenceCoeffs::transition_raw(params, x, t, 0.0), n_max + 1, 0.0);
    let m_x = martingale_values(params, n_max + 1, t, x);
    let binom = |n: usize, k: usize| q_binomial(n, k, q).expect("k <= n");

    let q_at_x = eval_family(&q_tt, n_max, x);
    let mut qqq_zero = Vec::with_capacity(n_max);
    let mut qqq_sum = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        qqq_zero.push(q_at_x[n].abs());
        let terms: Vec<f64> = (0..=n).map(|k| binom(n, k) * q_zero[n - k] * m_x[k]).collect();
        let scale: f64 = terms.iter().map(|v| v.abs()).sum();
        qqq_sum.push(rel(terms.iter().sum(), scale));
    }

    let spread = 2.0 * (t + params.tau).sqrt() + params.theta.abs() + x.abs() + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let samples: Vec<f64> = (0..16)
        .map(|_| {
            let mut y = x + spread * rng.random_range(-1.0..1.0);
            if (y - x).abs() < 1e-3 * spread {
                y += 0.1 * spread;
            }
            y
        })
        .collect();

    let mut qm = vec![0.0; n_max + 1];
    let mut wn_expansion = vec![0.0; n_max + 1];
    let mut wn_truncated = vec![0.0; n_max + 1];
    let mut factorization = vec![0.0; n_max + 1];
    for &y in &samples {
        let q_y = eval_family(&q_tt, n_max + 1, y);
        let w_y = eval_family(&nu, n_max, y);
        let m_y = martingale_values(params, n_max + 1, t, y);
        for n in 0..=n_max {
            let terms: Vec<f64> =
                (1..=n + 1).map(|k| binom(n + 1, k) * q_zero[n + 1 - k] * (m_y[k] - m_x[k])).collect();
            let sum: f64 = terms.iter().sum();
            let scale = q_y[n + 1].abs() + terms.iter().map(|v| v.abs()).sum::<f64>();
            qm[n] = f64::max(qm[n], rel(q_y[n + 1] - sum, scale));

            let dd: Vec<f64> = terms.iter().map(|v| v / (y - x)).collect();
            let dd_scale = w_y[n].abs() + dd.iter().map(|v| v.abs()).sum::<f64>();
            let full: f64 = dd.iter().sum();
            let truncated: f64 = dd[..n].iter().sum();
            wn_expansion[n] = f64::max(wn_expansion[n], rel(w_y[n] - full, dd_scale));
            wn_truncated[n] = f64::max(wn_truncated[n], rel(w_y[n] - truncated, dd_scale));

            let lhs = q_y[n + 1];
            let rhs = (y - x) * w_y[n];
            factorization[n] = f64::max(factorization[n], rel(lhs - rhs, lhs.abs().max(rhs.abs())));
        }
    }

    Ok(QqqQmReport { qqq_zero, qqq_sum, qm, wn_expansion, wn_truncated, factorization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ProcessParams {
        ProcessParams::new(0.5, 0.3, 0.2).unwrap()
    }

    #[test]
    fn transition_coefficients() {
        let p = params();
        let rec = transition_recurrence(p, 0.7, 0.2, 1.1).unwrap();
        assert_eq!(rec.a(0), 0.7);
        assert_relative_eq!(rec.b(1), 1.1 - 0.2, max_relative = 1e-15);

        let p0 = ProcessParams::new(0.0, 0.4, 0.3).unwrap();
        let rec = transition_recurrence(p0, -0.5, 0.2, 1.0).unwrap();
        for n in 2..10 {
            assert_eq!(rec.a(n), 0.4);
            assert_relative_eq!(rec.b(n), 1.3, max_relative = 1e-15);
        }
    }

    #[test]
    fn transition_time_order() {
        let p = params();
        assert_eq!(transition_recurrence(p, 0.0, 1.0, 1.0), Err(Error::InvalidTimeOrder { s: 1.0, t: 1.0 }));
        assert!(transition_recurrence(p, 0.0, -0.1, 1.0).is_err());
        assert!(transition_recurrence(p, 0.0, 0.0, 1e-9).is_ok());
    }

    #[test]
    fn nu_coefficients() {
        let p = params();
        let rec = nu_recurrence(p, 0.7, 1.3).unwrap();
        assert_relative_eq!(rec.a(0), 0.3 + 0.5 * 0.7, max_relative = 1e-15);
        assert_relative_eq!(rec.b(1), (0.5 * 1.3 + 0.2) * 1.5, max_relative = 1e-15);
        let p0 = ProcessParams::new(0.0, 0.25, 0.5).unwrap();
        let rec = nu_recurrence(p0, 3.0, 0.75).unwrap();
        for n in 0..10 {
            assert_eq!(rec.a(n), 0.25);
        }
        for n in 1..10 {
            assert_eq!(rec.b(n), 1.25);
        }
        assert_eq!(nu_recurrence(p, 0.0, 0.0), Err(Error::InvalidTime(0.0)));
    }

    #[test]
    fn transition_family_low_orders() {
        let p = params();
        let (x, s, t) = (0.7, 0.2, 1.1);
        let rec = transition_recurrence(p, x, s, t).unwrap();
        for &y in &[-1.3, 0.0, 0.4, 2.5] {
            let v = eval_family(&rec, 2, y);
            assert_eq!(v[0], 1.0);
            assert_relative_eq!(v[1], y - x, max_relative = 1e-15);
            let q2 = (y - x).powi(2) - (y - x) * (p.theta + (p.q - 1.0) * x) - (t - s);
            assert_relative_eq!(v[2], q2, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn family_poly_matches_values() {
        let p = params();
        let rec = transition_recurrence(p, 0.4, 0.2, 0.9).unwrap();
        let polys = family_polys(&rec, 15);
        assert_eq!(polys[0], Poly::constant(1.0));
        for &y in &[-1.7, -0.2, 0.3, 1.9] {
            let v = eval_family(&rec, 15, y);
            for n in 0..=15 {
                assert_eq!(polys[n].degree(), Some(n));
                assert_eq!(polys[n].leading_coeff(), 1.0);
                assert!((polys[n].eval(y) - v[n]).abs() <= 1e-9 * (1.0 + v[n].abs()));
            }
        }
    }

    #[test]
    fn martingale_low_orders() {
        let p = params();
        let t = 0.8;
        assert_eq!(martingale_poly(p, 0, t), Poly::constant(1.0));
        assert_eq!(martingale_poly(p, 1, t), Poly::monomial(1));
        let m2 = martingale_poly(p, 2, t);
        assert_eq!(m2, Poly::new(vec![-t, -p.theta, 1.0]));
        // M_3 from two hand steps: (y - theta[2]) M_2 - (t + tau)[2] M_1
        let b2 = (t + p.tau) * (1.0 + p.q);
        let m3_hand = m2.mul_by_linear(p.theta * (1.0 + p.q)).sub(&Poly::monomial(1).scale(b2));
        let m3 = martingale_poly(p, 3, t);
        for &y in &[-2.0, -0.4, 0.1, 1.3, 2.2] {
            assert_relative_eq!(m3.eval(y), m3_hand.eval(y), max_relative = 1e-13, epsilon = 1e-14);
            let v = martingale_values(p, 3, t, y);
            assert_relative_eq!(m3.eval(y), v[3], max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn martingale_at_time_zero() {
        let p = params();
        let m = martingale_polys(p, 4, 0.0);
        // b_1 = 0 at t = 0, so M_2 = y (y - theta)
        assert_eq!(m[2], Poly::new(vec![0.0, -p.theta, 1.0]));
    }

    #[test]
    fn martingale_dt_examples() {
        let p = params();
        let t = 0.9;
        let dm = martingale_polys_dt(p, 2, t);
        assert!(dm[0].is_zero());
        assert!(dm[1].is_zero());
        assert_eq!(dm[2], Poly::constant(-1.0));
    }

    #[test]
    fn martingale_dt_central_difference() {
        let p = ProcessParams::new(-0.4, 0.3, 0.2).unwrap();
        let (t, h) = (0.9, 1e-5);
        let dm = martingale_polys_dt(p, 10, t);
        for &y in &[-1.5, 0.2, 1.1] {
            let plus = martingale_values(p, 10, t + h, y);
            let minus = martingale_values(p, 10, t - h, y);
            for n in 0..=10 {
                let fd = (plus[n] - minus[n]) / (2.0 * h);
                assert!((fd - dm[n].eval(y)).abs() < 1e-6 * (1.0 + fd.abs()), "n={n}");
            }
        }
    }

    #[test]
    fn basis_examples() {
        let p = params();
        let t = 0.6;
        let c = to_martingale_basis(&martingale_poly(p, 3, t), p, t);
        assert_eq!(c, vec![0.0, 0.0, 0.0, 1.0]);
        let c = to_martingale_basis(&Poly::monomial(2), p, t);
        assert_relative_eq!(c[0], t, max_relative = 1e-15);
        assert_relative_eq!(c[1], p.theta, max_relative = 1e-15);
        assert_eq!(c[2], 1.0);
        assert_eq!(to_martingale_basis(&Poly::constant(1.0), p, t), vec![1.0]);
        assert_eq!(from_martingale_basis(&[0.0, 1.0], p, t), Poly::monomial(1));
        let y2 = from_martingale_basis(&[t, p.theta, 1.0], p, t);
        assert!(y2.sub(&Poly::monomial(2)).coeffs().iter().all(|c| c.abs() < 1e-15));
        assert!(to_martingale_basis(&Poly::zero(), p, t).is_empty());
    }

    #[test]
    fn qqq_qm_identities() {
        let report = check_qqq_qm(params(), 0.7, 1.0, 10).unwrap();
        assert!(report.max_qqq() < 1e-8, "{report:?}");
        assert!(report.max_qm() < 1e-8, "{report:?}");
        assert!(report.max_factorization() < 1e-8, "{report:?}");
        // Q_1(x | x, t, t) = 0 exactly
        assert_eq!(report.qqq_zero[0], 0.0);
        // dropping the k = n + 1 term breaks the expansion
        assert!(report.wn_truncated[3] > 1e-3);
    }

    #[test]
    fn explicit_family() {
        let rec = RecurrenceCoeffs::explicit(vec![0.0, 1.0], vec![2.0]).unwrap();
        assert_eq!(rec.len_limit(), Some(2));
        assert_eq!(rec.b(1), 2.0);
        assert!(RecurrenceCoeffs::explicit(vec![0.0], vec![1.0]).is_err());
    }
}
