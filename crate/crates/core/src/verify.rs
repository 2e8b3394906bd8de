//! Identity suites evaluated over a parameter grid.
//!
//! Each suite reduces one identity to a maximal residual over the grid and
//! compares it with a fixed tolerance. A grid point whose computation fails
//! contributes a NaN residual and an entry in the report's `errors`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{
    apply_transition_quad, c_operator, check_chapman_kolmogorov, convergence_study, generator_fd, generator_martingale,
    generator_poly, generator_smooth, h_operator, Side, SmoothFn,
};
use crate::poly::Poly;
use crate::qnum::{q_bracket, ProcessParams};
use crate::recurrence::{
    check_qqq_qm, martingale_polys, martingale_values, nu_recurrence, transition_recurrence, RecurrenceCoeffs,
};
use crate::report::{nan_max, GridPoint, ResidualReport};
use crate::spectra::{jacobi_matrix, nu_measure, quadrature, transition_measure, DiscreteMeasure};

/// Quadrature size used by the suites unless overridden.
pub const VERIFY_POINTS: usize = 32;

/// Highest polynomial or moment order exercised.
pub const MAX_ORDER: usize = 10;

/// Step sizes of the convergence suite.
pub const CONVERGENCE_STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Highest moment order of the convergence suite.
pub const CONVERGENCE_MAX_ORDER: usize = 6;

/// Random polynomials per grid point in the `c-operator` suite.
pub const C_OPERATOR_TRIALS: usize = 20;

/// Every suite name, in report order.
pub const SUITES: [&str; 18] = [
    "martingale",
    "variance",
    "martingale-polys",
    "chapman-kolmogorov",
    "hm",
    "c-operator",
    "generator-martingale",
    "generator-y2",
    "qqq-qm",
    "factorization",
    "generator-smooth",
    "generator-bound",
    "convergence",
    "quadrature-orthogonality",
    "quadrature-gershgorin",
    "quadrature-weights",
    "semicircle",
    "q-brownian",
];

/// Cartesian parameter grid with fixed times `s < t < u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyGrid {
    pub q: Vec<f64>,
    pub theta: Vec<f64>,
    pub tau: Vec<f64>,
    pub x: Vec<f64>,
    pub s: f64,
    pub t: f64,
    pub u: f64,
}

impl Default for VerifyGrid {
    fn default() -> Self {
        Self {
            q: vec![-0.5, 0.0, 0.3, 0.7],
            theta: vec![0.0, 0.3],
            tau: vec![0.0, 0.2],
            x: vec![-1.0, 0.0, 0.4],
            s: 0.2,
            t: 0.7,
            u: 1.3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    params: ProcessParams,
    x: f64,
}

impl VerifyGrid {
    /// Checks every parameter combination and the time ordering.
    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() || self.theta.is_empty() || self.tau.is_empty() || self.x.is_empty() {
            return Err(Error::InvalidGrid("every grid axis needs at least one value".into()));
        }
        if !(0.0 <= self.s && self.s < self.t && self.t < self.u && self.u.is_finite()) {
            return Err(Error::InvalidGrid(format!("need 0 <= s < t < u, got ({}, {}, {})", self.s, self.t, self.u)));
        }
        if self.x.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("x values must be finite".into()));
        }
        self.points().map(|_| ())
    }

    fn points(&self) -> Result<Vec<Point>> {
        let mut out = Vec::new();
        for &q in &self.q {
            for &theta in &self.theta {
                for &tau in &self.tau {
                    let params = ProcessParams::new(q, theta, tau)?;
                    out.extend(self.x.iter().map(|&x| Point { params, x }));
                }
            }
        }
        Ok(out)
    }
}

/// Aggregated outcome of the selected suites.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub n: usize,
    pub grid: VerifyGrid,
    pub suites: Vec<ResidualReport>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verify report serializes")
    }
}

/// `|a - b| / max(1, |b|)`.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

struct Ctx<'a> {
    grid: &'a VerifyGrid,
    points: Vec<Point>,
    n: usize,
}

#[derive(Clone, Copy)]
struct Times {
    s: bool,
    t: bool,
    u: bool,
}

const ST: Times = Times { s: true, t: true, u: false };
const STU: Times = Times { s: true, t: true, u: true };
const T_ONLY: Times = Times { s: false, t: true, u: false };

impl Ctx<'_> {
    fn times(&self) -> [f64; 3] {
        [self.grid.s, self.grid.t, self.grid.u]
    }

    fn intervals(&self) -> [(f64, f64); 3] {
        let [s, t, u] = self.times();
        [(s, t), (t, u), (s, u)]
    }

    /// Evaluates `residual` at every selected point in parallel and reduces in grid order.
    fn sweep<F>(&self, times: Times, keep: impl Fn(&Point) -> bool, residual: F) -> (Vec<GridPoint>, f64, Vec<String>)
    where
        F: Fn(usize, &Point) -> Result<f64> + Sync,
    {
        let selected: Vec<(usize, Point)> = self.points.iter().copied().enumerate().filter(|(_, p)| keep(p)).collect();
        let values: Vec<Result<f64>> = selected.par_iter().map(|(i, p)| residual(*i, p)).collect();
        let mut grid = Vec::with_capacity(selected.len());
        let mut max = 0.0;
        let mut errors = Vec::new();
        for ((_, p), v) in selected.iter().zip(values) {
            let gp = GridPoint {
                q: p.params.q,
                theta: p.params.theta,
                tau: p.params.tau,
                x: p.x,
                s: times.s.then_some(self.grid.s),
                t: times.t.then_some(self.grid.t),
                u: times.u.then_some(self.grid.u),
            };
            match v {
                Ok(r) => max = nan_max(max, r),
                Err(e) => {
                    log::warn!("grid point {gp:?} failed: {e}");
                    errors.push(format!("q={} theta={} tau={} x={}: {e}", gp.q, gp.theta, gp.tau, gp.x));
                    max = f64::NAN;
                }
            }
            grid.push(gp);
        }
        (grid, max, errors)
    }

    fn strict<F>(&self, name: &str, tol: f64, times: Times, keep: impl Fn(&Point) -> bool, f: F) -> ResidualReport
    where
        F: Fn(usize, &Point) -> Result<f64> + Sync,
    {
        let (grid, max, errors) = self.sweep(times, keep, f);
        ResidualReport::new(name, grid, max, tol).with_errors(errors)
    }

    fn bounded<F>(&self, name: &str, tol: f64, times: Times, f: F) -> ResidualReport
    where
        F: Fn(usize, &Point) -> Result<f64> + Sync,
    {
        let (grid, max, errors) = self.sweep(times, |_| true, f);
        ResidualReport::bounded(name, grid, max, tol).with_errors(errors)
    }

    fn run(&self, suite: &str) -> ResidualReport {
        let n = self.n;
        let all = |_: &Point| true;
        match suite {
            "martingale" => self.strict(suite, 1e-10, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for (a, b) in self.intervals() {
                    r = nan_max(r, (transition_measure(p.params, p.x, a, b, n)?.mean() - p.x).abs());
                }
                Ok(r)
            }),
            "variance" => self.strict(suite, 1e-10, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for (a, b) in self.intervals() {
                    let m = transition_measure(p.params, p.x, a, b, n)?;
                    r = nan_max(r, (m.integrate(|y| (y - p.x).powi(2)) - (b - a)).abs());
                }
                Ok(r)
            }),
            "martingale-polys" => self.strict(suite, 1e-8, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for (a, b) in self.intervals() {
                    let polys = martingale_polys(p.params, MAX_ORDER, b);
                    let target = martingale_values(p.params, MAX_ORDER, a, p.x);
                    for (m, want) in polys.iter().zip(&target) {
                        let got = apply_transition_quad(|y| m.eval(y), p.params, p.x, a, b, n)?;
                        r = nan_max(r, (got - want).abs() / (1.0 + want.abs()));
                    }
                }
                Ok(r)
            }),
            "chapman-kolmogorov" => self.strict(suite, 1e-8, STU, all, |_, p| {
                let [s, t, u] = self.times();
                Ok(check_chapman_kolmogorov(p.params, p.x, s, t, u, MAX_ORDER, n)?.max_residual())
            }),
            "hm" => self.strict(suite, 1e-8, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for time in self.times() {
                    let polys = martingale_polys(p.params, MAX_ORDER, time);
                    let m_x = martingale_values(p.params, MAX_ORDER, time, p.x);
                    for k in 1..=MAX_ORDER {
                        let h = h_operator(&polys[k], p.params, p.x, time, n)?;
                        let want = q_bracket(k, p.params.q) * m_x[k - 1];
                        r = nan_max(r, rel_err(h.integral, want));
                        r = nan_max(r, rel_err(h.generator_difference, want));
                    }
                }
                Ok(r)
            }),
            "c-operator" => self.strict(suite, 1e-8, T_ONLY, all, |i, p| {
                let mut rng = ChaCha8Rng::seed_from_u64(0xc0de_0000 + i as u64);
                let mut r: f64 = 0.0;
                for _ in 0..C_OPERATOR_TRIALS {
                    let coeffs: Vec<f64> = (0..=6).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let c = c_operator(&Poly::new(coeffs), p.params, p.x, self.grid.t, n)?;
                    r = nan_max(r, rel_err(c.h_difference, c.nu_integral));
                }
                Ok(r)
            }),
            "generator-martingale" => self.strict(suite, 1e-8, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for time in self.times() {
                    for (k, m) in martingale_polys(p.params, MAX_ORDER, time).iter().enumerate() {
                        let want = generator_martingale(p.params, k, p.x, time);
                        r = nan_max(r, rel_err(generator_poly(m, p.params, p.x, time, n)?, want));
                    }
                }
                Ok(r)
            }),
            "generator-y2" => self.strict(suite, 1e-10, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for time in self.times() {
                    r = nan_max(r, (generator_poly(&Poly::monomial(2), p.params, p.x, time, n)? - 1.0).abs());
                }
                Ok(r)
            }),
            "qqq-qm" => self.strict(suite, 1e-8, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for time in self.times() {
                    let rep = check_qqq_qm(p.params, p.x, time, MAX_ORDER)?;
                    r = nan_max(r, rep.max_qqq().max(rep.max_qm()));
                }
                Ok(r)
            }),
            "factorization" => self.strict(suite, 1e-8, STU, all, |_, p| {
                let mut r: f64 = 0.0;
                for time in self.times() {
                    r = nan_max(r, check_qqq_qm(p.params, p.x, time, MAX_ORDER)?.max_factorization());
                }
                Ok(r)
            }),
            "generator-smooth" => self.strict(suite, 1e-3, T_ONLY, all, |_, p| {
                let f = SmoothFn::cauchy();
                let t = self.grid.t;
                let exact = generator_smooth(&f, p.params, p.x, t, n)?;
                let mut r: f64 = 0.0;
                for side in [Side::Left, Side::Right] {
                    let fd = generator_fd(|y| f.value(y), p.params, p.x, t, 1e-5 * t, n, side)?;
                    r = nan_max(r, (fd - exact).abs() / (1.0 + exact.abs()));
                }
                Ok(r)
            }),
            // sup |f''| = 2 for f = 1 / (1 + y^2)
            "generator-bound" => self.bounded(suite, 1.0, STU, |_, p| {
                let f = SmoothFn::cauchy();
                let mut r: f64 = 0.0;
                for time in self.times() {
                    r = nan_max(r, generator_smooth(&f, p.params, p.x, time, n)?.abs());
                }
                Ok(r)
            }),
            "convergence" => self.strict(suite, 0.2, T_ONLY, all, |_, p| {
                let mut r: f64 = 0.0;
                for side in [Side::Left, Side::Right] {
                    let study = convergence_study(
                        p.params,
                        p.x,
                        self.grid.t,
                        &CONVERGENCE_STEPS,
                        CONVERGENCE_MAX_ORDER,
                        n,
                        side,
                    )?;
                    for fit in study.fits.iter().filter(|f| !f.exact) {
                        r = nan_max(r, fit.slope.map_or(f64::INFINITY, |s| (s - 1.0).abs()));
                    }
                }
                Ok(r)
            }),
            "quadrature-orthogonality" => self.strict(suite, 1e-8, ST, all, |_, p| {
                let mut r: f64 = 0.0;
                for rec in self.recurrences(p)? {
                    r = nan_max(r, gram_defect(&rec, &quadrature(&rec, n)?, n));
                }
                Ok(r)
            }),
            "quadrature-gershgorin" => self.bounded(suite, 0.0, ST, |_, p| {
                let mut r: f64 = 0.0;
                for rec in self.recurrences(p)? {
                    let (lo, hi) = jacobi_matrix(&rec, n)?.gershgorin();
                    for &y in quadrature(&rec, n)?.nodes() {
                        r = nan_max(r, (lo - y).max(y - hi).max(0.0));
                    }
                }
                Ok(r)
            }),
            "quadrature-weights" => self.bounded(suite, 0.0, ST, |_, p| {
                let mut r: f64 = 0.0;
                for rec in self.recurrences(p)? {
                    for &w in quadrature(&rec, n)?.weights() {
                        r = nan_max(r, (-w).max(0.0));
                    }
                }
                Ok(r)
            }),
            "semicircle" => self.strict(
                suite,
                1e-9,
                STU,
                |p| p.params.q == 0.0,
                |_, p| {
                    let mut r: f64 = 0.0;
                    for time in self.times() {
                        let got = nu_measure(p.params, p.x, time, n)?.moments(8)?;
                        let want = semicircle_moments(p.params.theta, time + p.params.tau, 8);
                        for (a, b) in got.iter().zip(&want) {
                            r = nan_max(r, rel_err(*a, *b));
                        }
                    }
                    Ok(r)
                },
            ),
            "q-brownian" => self.strict(
                suite,
                1e-9,
                STU,
                |p| p.params.theta == 0.0 && p.params.tau == 0.0,
                |_, p| {
                    let q = p.params.q;
                    let mut r: f64 = 0.0;
                    for time in self.times() {
                        let nu = nu_measure(p.params, p.x, time, n)?;
                        let tr = transition_measure(p.params, q * p.x, q * q * time, time, n)?;
                        r = nan_max(r, nodewise_distance(&nu, &tr));
                    }
                    Ok(r)
                },
            ),
            _ => unreachable!("suite names are validated"),
        }
    }

    fn recurrences(&self, p: &Point) -> Result<[RecurrenceCoeffs; 2]> {
        Ok([
            transition_recurrence(p.params, p.x, self.grid.s, self.grid.t)?,
            nu_recurrence(p.params, p.x, self.grid.t)?,
        ])
    }
}

/// Largest entry of `G - I`, where `G` is the Gram matrix of the orthonormal
/// polynomials `p_0..p_n` under `m`, restricted to `j + k <= 2n - 1`.
///
/// Each entry is measured against `max(1, int |p_j| |p_k| dm)` with `|p_k|`
/// bounded by the recurrence run on absolute values, which is the scale of
/// the rounding error in evaluating the polynomials at the nodes.
fn gram_defect(rec: &RecurrenceCoeffs, m: &DiscreteMeasure, n: usize) -> f64 {
    let values: Vec<(Vec<f64>, Vec<f64>)> = m.nodes().iter().map(|&y| orthonormal_values(rec, n, y)).collect();
    let mut defect: f64 = 0.0;
    for j in 0..=n {
        for k in j..=n {
            if j + k > 2 * n - 1 {
                continue;
            }
            let (mut g, mut scale) = (0.0, 0.0);
            for ((v, e), w) in values.iter().zip(m.weights()) {
                g += w * v[j] * v[k];
                scale += w * e[j] * e[k];
            }
            let want = if j == k { 1.0 } else { 0.0 };
            defect = nan_max(defect, (g - want).abs() / f64::max(1.0, scale));
        }
    }
    defect
}

/// `p_0(y), ..., p_n(y)` for the orthonormal version of the family, with
/// the same recurrence run on absolute values.
fn orthonormal_values(rec: &RecurrenceCoeffs, n: usize, y: f64) -> (Vec<f64>, Vec<f64>) {
    let mut v = Vec::with_capacity(n + 1);
    let mut e = Vec::with_capacity(n + 1);
    v.push(1.0);
    e.push(1.0);
    for k in 0..n {
        let lower = if k == 0 { (0.0, 0.0) } else { (v[k - 1], e[k - 1]) };
        let root_b = if k == 0 { 0.0 } else { rec.b(k).sqrt() };
        let root_next = rec.b(k + 1).sqrt();
        v.push(((y - rec.a(k)) * v[k] - root_b * lower.0) / root_next);
        e.push(((y - rec.a(k)).abs() * e[k] + root_b * lower.1) / root_next);
    }
    (v, e)
}

/// Raw moments of the semicircle law with the given mean and variance, via
/// Catalan numbers for the centred even moments.
pub fn semicircle_moments(mean: f64, variance: f64, k_max: usize) -> Vec<f64> {
    let mut central = vec![0.0; k_max + 1];
    let mut catalan = 1.0;
    for j in (0..=k_max).step_by(2) {
        let m = j / 2;
        if m > 0 {
            catalan *= 2.0 * (2.0 * m as f64 - 1.0) / (m as f64 + 1.0);
        }
        central[j] = catalan * variance.powi(m as i32);
    }
    (0..=k_max)
        .map(|k| {
            let mut binom = 1.0;
            let mut total = 0.0;
            for (j, c) in central.iter().enumerate().take(k + 1) {
                total += binom * mean.powi((k - j) as i32) * c;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            total
        })
        .collect()
}

/// Largest node or weight difference between two rules, infinite if their sizes differ.
fn nodewise_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut d: f64 = 0.0;
    for i in 0..a.len() {
        d = nan_max(d, rel_err(a.nodes()[i], b.nodes()[i]));
        d = nan_max(d, (a.weights()[i] - b.weights()[i]).abs());
    }
    d
}

/// Resolves `--only` filters: a filter selects a suite with the same name
/// or any suite whose name starts with `filter-`.
pub fn select_suites(only: &[String]) -> Result<Vec<&'static str>> {
    if only.is_empty() {
        return Ok(SUITES.to_vec());
    }
    let mut chosen = Vec::new();
    for filter in only {
        let prefix = format!("{filter}-");
        let hits: Vec<&str> = SUITES.iter().copied().filter(|s| *s == filter || s.starts_with(&prefix)).collect();
        if hits.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "unknown suite '{filter}'; expected one of {}",
                SUITES.join(", ")
            )));
        }
        chosen.extend(hits);
    }
    Ok(SUITES.iter().copied().filter(|s| chosen.contains(s)).collect())
}

/// Runs the selected suites (all when `only` is empty) with `n`-point quadrature.
pub fn run_suites(grid: &VerifyGrid, n: usize, only: &[String]) -> Result<VerifyReport> {
    grid.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("verify needs at least 2 quadrature points, got {n}")));
    }
    let suites = select_suites(only)?;
    let ctx = Ctx { grid, points: grid.points()?, n };
    let reports: Vec<ResidualReport> = suites.iter().map(|s| ctx.run(s)).collect();
    Ok(VerifyReport { pass: reports.iter().all(|r| r.pass), n, grid: grid.clone(), suites: reports })
}

/// Runs one suite by exact name.
pub fn run_suite(grid: &VerifyGrid, n: usize, suite: &str) -> Result<ResidualReport> {
    if !SUITES.contains(&suite) {
        return Err(Error::InvalidArgument(format!("unknown suite '{suite}'")));
    }
    let report = run_suites(grid, n, &[suite.to_string()])?;
    Ok(report.suites.into_iter().find(|r| r.check == suite).expect("suite was selected"))
}
