//! Transition operators and weak infinitesimal generators.
//!
//! On polynomials everything is exact: a polynomial is expanded in the
//! martingale basis `M_k(.; t)`, which the transition operator maps to
//! `M_k(.; s)`. The generator is the singular integral
//! `int d/dx [(f(y) - f(x)) / (y - x)] nu_{x,t}(dy)`, evaluated with Gauss
//! quadrature of `nu_{x,t}`; for polynomial `f` the integrand is itself a
//! polynomial and the quadrature is exact.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::qnum::ProcessParams;
use crate::recurrence::{martingale_poly_dt, martingale_polys_dt, martingale_values, to_martingale_basis};
use crate::report::{sig17, sig17_vec};
use crate::spectra::{nu_measure, transition_measure, DiscreteMeasure};

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A test function together with its first two derivatives.
pub struct SmoothFn {
    f: RealFn,
    df: RealFn,
    d2f: RealFn,
}

impl SmoothFn {
    pub fn new<F, D, D2>(f: F, df: D, d2f: D2) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { f: Box::new(f), df: Box::new(df), d2f: Box::new(d2f) }
    }

    /// `1 / (1 + y^2)`; `sup |f''| = 2`.
    pub fn cauchy() -> Self {
        Self::new(
            |y| 1.0 / (1.0 + y * y),
            |y| -2.0 * y / (1.0 + y * y).powi(2),
            |y| (6.0 * y * y - 2.0) / (1.0 + y * y).powi(3),
        )
    }

    /// `exp(-y^2 / 2)`; `sup |f''| = 1`.
    pub fn gaussian() -> Self {
        Self::new(|y| (-0.5 * y * y).exp(), |y| -y * (-0.5 * y * y).exp(), |y| (y * y - 1.0) * (-0.5 * y * y).exp())
    }

    /// `cos(y)`; `sup |f''| = 1`.
    pub fn cosine() -> Self {
        Self::new(f64::cos, |y| -y.sin(), |y| -y.cos())
    }

    /// Polynomial with exact derivatives (unbounded, but useful as a check).
    pub fn polynomial(p: Poly) -> Self {
        let d1 = p.derivative();
        let d2 = d1.derivative();
        Self::new(move |y| p.eval(y), move |y| d1.eval(y), move |y| d2.eval(y))
    }

    pub fn value(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    pub fn d1(&self, y: f64) -> f64 {
        (self.df)(y)
    }

    pub fn d2(&self, y: f64) -> f64 {
        (self.d2f)(y)
    }

    /// Largest central-difference mismatch of the supplied derivatives at `points`,
    /// relative to `1 + |derivative|`.
    pub fn derivative_mismatch(&self, points: &[f64]) -> f64 {
        let h = 1e-4;
        points
            .iter()
            .map(|&y| {
                let d1 = (self.value(y + h) - self.value(y - h)) / (2.0 * h);
                let d2 = (self.d1(y + h) - self.d1(y - h)) / (2.0 * h);
                let e1 = (d1 - self.d1(y)).abs() / (1.0 + self.d1(y).abs());
                let e2 = (d2 - self.d2(y)).abs() / (1.0 + self.d2(y).abs());
                e1.max(e2)
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothFn")
    }
}

/// Which one-sided difference quotient defines the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `(P_{t-h,t} f - f) / h`.
    Left,
    /// `(P_{t,t+h} f - f) / h`.
    Right,
}

impl FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("expected `left` or `right`, got `{other}`")),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && s < t && t.is_finite()) {
        return Err(Error::InvalidTimeOrder { s, t });
    }
    Ok(())
}

fn check_positive_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}

fn check_exact(degree: Option<usize>, points: usize) -> Result<()> {
    match degree {
        Some(d) if d + 1 > 2 * points - 1 => Err(Error::DegreeTooHigh { degree: d, points }),
        _ => Ok(()),
    }
}

/// `int p(y) P_{s,t}(x, dy)` exactly, through the martingale basis.
pub fn apply_transition_poly(p: &Poly, params: ProcessParams, x: f64, s: f64, t: f64) -> Result<f64> {
    check_times(s, t)?;
    let c = to_martingale_basis(p, params, t);
    if c.is_empty() {
        return Ok(0.0);
    }
    let m = martingale_values(params, c.len() - 1, s, x);
    Ok(c.iter().zip(&m).map(|(ck, mk)| ck * mk).sum())
}

/// `int f(y) P_{s,t}(x, dy)` by `n`-point Gauss quadrature.
pub fn apply_transition_quad<F: Fn(f64) -> f64>(
    f: F,
    params: ProcessParams,
    x: f64,
    s: f64,
    t: f64,
    n: usize,
) -> Result<f64> {
    Ok(transition_measure(params, x, s, t, n)?.integrate(f))
}

/// The generator on a polynomial, `int d/dx [(p(y) - p(x)) / (y - x)] nu_{x,t}(dy)`.
pub fn generator_poly(p: &Poly, params: ProcessParams, x: f64, t: f64, n: usize) -> Result<f64> {
    check_positive_time(t)?;
    check_exact(p.degree(), n)?;
    let integrand = p.generator_integrand(x);
    if integrand.is_zero() {
        return Ok(0.0);
    }
    Ok(nu_measure(params, x, t, n)?.integrate_poly(&integrand))
}

/// The generator on a polynomial via the martingale basis,
/// `-sum_k c_k d/dt M_k(x; t)`; no quadrature involved.
pub fn generator_poly_martingale(p: &Poly, params: ProcessParams, x: f64, t: f64) -> Result<f64> {
    check_positive_time(t)?;
    let c = to_martingale_basis(p, params, t);
    if c.is_empty() {
        return Ok(0.0);
    }
    let dm = martingale_polys_dt(params, c.len() - 1, t);
    Ok(-c.iter().zip(&dm).map(|(ck, d)| ck * d.eval(x)).sum::<f64>())
}

/// The generator on `M_n(.; t)`: `-d/dt M_n(x; t)`.
pub fn generator_martingale(params: ProcessParams, n: usize, x: f64, t: f64) -> f64 {
    -martingale_poly_dt(params, n, t).eval(x)
}

/// Both evaluations of the auxiliary operator `H_t(p)(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HValue {
    /// `int (p(y) - p(x)) / (y - x) nu_{x,t}(dy)`.
    #[serde(serialize_with = "sig17")]
    pub integral: f64,
    /// `A_t(y p)(x) - x A_t(p)(x)` with the generator taken through the martingale basis.
    #[serde(serialize_with = "sig17")]
    pub generator_difference: f64,
}

impl HValue {
    pub fn value(&self) -> f64 {
        self.integral
    }

    /// `|integral - generator_difference|`.
    pub fn discrepancy(&self) -> f64 {
        (self.integral - self.generator_difference).abs()
    }
}

/// `H_t(p)(x)`, computed both as a divided-difference integral and as a generator difference.
pub fn h_operator(p: &Poly, params: ProcessParams, x: f64, t: f64, n: usize) -> Result<HValue> {
    check_positive_time(t)?;
    check_exact(p.degree(), n)?;
    let quotient = p.divided_difference(x);
    let integral = if quotient.is_zero() { 0.0 } else { nu_measure(params, x, t, n)?.integrate_poly(&quotient) };
    let generator_difference =
        generator_poly_martingale(&p.mul_by_y(), params, x, t)? - x * generator_poly_martingale(p, params, x, t)?;
    Ok(HValue { integral, generator_difference })
}

/// Both evaluations of `C_t(p)(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CValue {
    /// `H_t(y p)(x) - x H_t(p)(x)`, with `H_t` in its generator-difference form.
    #[serde(serialize_with = "sig17")]
    pub h_difference: f64,
    /// `int p(y) nu_{x,t}(dy)`.
    #[serde(serialize_with = "sig17")]
    pub nu_integral: f64,
}

impl CValue {
    pub fn discrepancy(&self) -> f64 {
        (self.h_difference - self.nu_integral).abs()
    }
}

/// `C_t(p)(x) = H_t(y p)(x) - x H_t(p)(x)`, alongside `int p d nu_{x,t}`.
///
/// The H-difference side never touches `nu_{x,t}`: it expands to
/// `A(y^2 p) - 2x A(y p) + x^2 A(p)` with the generator evaluated through the
/// martingale basis, so agreement of the two sides is a genuine check.
pub fn c_operator(p: &Poly, params: ProcessParams, x: f64, t: f64, n: usize) -> Result<CValue> {
    check_positive_time(t)?;
    check_exact(p.degree(), n)?;
    let yp = p.mul_by_y();
    let gen = |r: &Poly| generator_poly_martingale(r, params, x, t);
    let h_of_p = gen(&yp)? - x * gen(p)?;
    let h_of_yp = gen(&yp.mul_by_y())? - x * gen(&yp)?;
    let h_difference = h_of_yp - x * h_of_p;
    let nu_integral = nu_measure(params, x, t, n)?.integrate_poly(p);
    Ok(CValue { h_difference, nu_integral })
}

/// Radius below which the generator integrand switches to its Taylor value `f''(x) / 2`.
pub fn delta_switch(x: f64, nu: &DiscreteMeasure) -> f64 {
    let half_width = nu.enclosure().map_or(0.0, |(lo, hi)| 0.5 * (hi - lo));
    1e-6 * (1.0 + x.abs() + half_width)
}

/// The generator on a smooth bounded `f`: `int phi(y) nu_{x,t}(dy)` with
/// `phi(y) = (f(y) - f(x)) / (y - x)^2 - f'(x) / (y - x)` away from `x` and
/// `phi = f''(x) / 2` near it. One integral covers both the atom of
/// `nu_{x,t}` at `x` and the integral over the rest of the line.
pub fn generator_smooth(f: &SmoothFn, params: ProcessParams, x: f64, t: f64, n: usize) -> Result<f64> {
    check_positive_time(t)?;
    debug_assert!(
        f.derivative_mismatch(&[x]) < 1e-4,
        "supplied derivatives disagree with finite differences at x = {x}"
    );
    let nu = nu_measure(params, x, t, n)?;
    let delta = delta_switch(x, &nu);
    let fx = f.value(x);
    let dfx = f.d1(x);
    let taylor = 0.5 * f.d2(x);
    Ok(nu.integrate(|y| {
        let d = y - x;
        if d.abs() > delta {
            (f.value(y) - fx) / (d * d) - dfx / d
        } else {
            taylor
        }
    }))
}

/// One-sided difference quotient `(P f - f)(x) / h` over `[t, t + h]` or `[t - h, t]`.
pub fn generator_fd<F: Fn(f64) -> f64>(
    f: F,
    params: ProcessParams,
    x: f64,
    t: f64,
    h: f64,
    n: usize,
    side: Side,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    let (s, u) = match side {
        Side::Right => (t, t + h),
        Side::Left => (t - h, t),
    };
    check_times(s, u)?;
    let fx = f(x);
    let m = transition_measure(params, x, s, u, n)?;
    Ok(m.integrate(|y| f(y) - fx) / h)
}

/// The measure `(y - x)^2 / (t - s) P_{s,t}(x, dy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledMeasure {
    pub measure: DiscreteMeasure,
    /// Total mass before renormalization; one up to rounding.
    pub mass: f64,
}

/// Reweights the `n`-point transition rule by `(y - x)^2 / (t - s)`.
pub fn rescaled_second_diff_measure(
    params: ProcessParams,
    x: f64,
    s: f64,
    t: f64,
    n: usize,
) -> Result<RescaledMeasure> {
    let m = transition_measure(params, x, s, t, n)?;
    let (measure, mass) = m.reweighted(|y| (y - x).powi(2) / (t - s), 2)?;
    Ok(RescaledMeasure { measure, mass })
}

/// Moment residuals of the Chapman-Kolmogorov composition.
#[derive(Debug, Clone, Serialize)]
pub struct ChapmanKolmogorovReport {
    /// Per order `k = 0..=k_max`: `|direct - composed| / int |y|^k P_{s,u}(x, dy)`.
    #[serde(serialize_with = "sig17_vec")]
    pub residuals: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    pub direct: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    pub composed: Vec<f64>,
}

impl ChapmanKolmogorovReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, crate::report::nan_max)
    }
}

/// Compares moments of `P_{s,u}(x, .)` (quadrature) with
/// `int int y^k P_{t,u}(z, dy) P_{s,t}(x, dz)` (exact inner, quadrature outer).
pub fn check_chapman_kolmogorov(
    params: ProcessParams,
    x: f64,
    s: f64,
    t: f64,
    u: f64,
    k_max: usize,
    n: usize,
) -> Result<ChapmanKolmogorovReport> {
    check_times(s, t)?;
    check_times(t, u)?;
    if k_max > 2 * n - 1 {
        return Err(Error::MomentOrderTooHigh { order: k_max, max: 2 * n - 1 });
    }
    let direct_measure = transition_measure(params, x, s, u, n)?;
    let direct = direct_measure.moments(k_max)?;
    let scale: Vec<f64> = (0..=k_max).map(|k| direct_measure.integrate(|y| y.abs().powi(k as i32))).collect();
    let outer = transition_measure(params, x, s, t, n)?;
    let mut composed = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let monomial = Poly::monomial(k);
        let mut total = 0.0;
        for (&z, &w) in outer.nodes().iter().zip(outer.weights()) {
            total += w * apply_transition_poly(&monomial, params, z, t, u)?;
        }
        composed.push(total);
    }
    let residuals = (0..=k_max)
        .map(|k| {
            let diff = (direct[k] - composed[k]).abs();
            if scale[k] > 0.0 {
                diff / scale[k]
            } else {
                diff
            }
        })
        .collect();
    Ok(ChapmanKolmogorovReport { residuals, direct, composed })
}

/// One entry of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(serialize_with = "sig17")]
    pub h: f64,
    pub order: usize,
    #[serde(serialize_with = "sig17")]
    pub rescaled_moment: f64,
    #[serde(serialize_with = "sig17")]
    pub nu_moment: f64,
    #[serde(serialize_with = "sig17")]
    pub abs_error: f64,
}

/// Fitted convergence order of one moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: usize,
    /// Least-squares slope of `log(error)` against `log(h)`; `None` when the
    /// errors sit at rounding level for some `h`.
    pub slope: Option<f64>,
    /// The moment agrees with the limit for every `h` (errors at rounding level throughout).
    pub exact: bool,
}

/// Errors of the rescaled-measure moments against `nu_{x,t}` over an `h` sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub side: Side,
    pub rows: Vec<ConvergenceRow>,
    pub fits: Vec<OrderFit>,
}

/// Relative error floor under which a moment error counts as rounding.
pub const CONVERGENCE_ERROR_FLOOR: f64 = 1e-11;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Moments of the rescaled measure of `P_{t-h,t}` (left) or `P_{t,t+h}` (right)
/// against those of `nu_{x,t}`, for each `h` and each order up to `k_max`.
pub fn convergence_study(
    params: ProcessParams,
    x: f64,
    t: f64,
    hs: &[f64],
    k_max: usize,
    n: usize,
    side: Side,
) -> Result<ConvergenceStudy> {
    let nu = nu_measure(params, x, t, n)?.moments(k_max)?;
    let mut rows = Vec::with_capacity(hs.len() * (k_max + 1));
    for &h in hs {
        let (s, u) = match side {
            Side::Left => (t - h, t),
            Side::Right => (t, t + h),
        };
        let rescaled = rescaled_second_diff_measure(params, x, s, u, n)?.measure.moments(k_max)?;
        for k in 0..=k_max {
            rows.push(ConvergenceRow {
                h,
                order: k,
                rescaled_moment: rescaled[k],
                nu_moment: nu[k],
                abs_error: (rescaled[k] - nu[k]).abs(),
            });
        }
    }
    let fits = (0..=k_max)
        .map(|k| {
            let (hs_k, errs): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.order == k).map(|r| (r.h, r.abs_error)).unzip();
            let floor = CONVERGENCE_ERROR_FLOOR * (1.0 + nu[k].abs());
            let above = errs.iter().filter(|&&e| e > floor).count();
            if above == 0 {
                OrderFit { order: k, slope: None, exact: true }
            } else if above < errs.len() {
                OrderFit { order: k, slope: None, exact: false }
            } else {
                OrderFit { order: k, slope: Some(loglog_slope(&hs_k, &errs)), exact: false }
            }
        })
        .collect();
    Ok(ConvergenceStudy { side, rows, fits })
}
