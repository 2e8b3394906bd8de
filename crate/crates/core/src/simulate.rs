//! Seeded Monte-Carlo paths of the chain obtained by replacing each
//! transition law with its Gauss quadrature rule.
//!
//! Every draw comes from a ChaCha stream keyed by `(seed, path)` and
//! positioned by the step index, so results do not depend on how paths are
//! scheduled across threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qnum::ProcessParams;
use crate::report::{fmt_f64, sig17_matrix, sig17_vec};
use crate::spectra::{transition_measure, DiscreteMeasure};

pub const DEFAULT_PATHS: usize = 10_000;
pub const DEFAULT_POINTS: usize = 32;

/// Simulated trajectories; `values[p][i]` is the state of path `p` at `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    #[serde(serialize_with = "sig17_vec")]
    pub times: Vec<f64>,
    #[serde(serialize_with = "sig17_matrix")]
    pub values: Vec<Vec<f64>>,
}

impl PathSample {
    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    /// CSV with header `path_id,time,value`, one row per path and time.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path_id,time,value\n");
        for (p, path) in self.values.iter().enumerate() {
            for (t, v) in self.times.iter().zip(path) {
                let _ = writeln!(out, "{p},{},{}", fmt_f64(*t), fmt_f64(*v));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path sample serializes")
    }
}

/// Inverse CDF: the first node whose cumulative weight exceeds `u`.
pub fn sample_from_measure(m: &DiscreteMeasure, u: f64) -> f64 {
    let mut cumulative = 0.0;
    for (&y, &w) in m.nodes().iter().zip(m.weights()) {
        cumulative += w;
        if cumulative > u {
            return y;
        }
    }
    // u within rounding of 1
    *m.nodes().last().expect("measures are nonempty")
}

/// The uniform draw for `(seed, path, step)`.
fn uniform(seed: u64, path: usize, step: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    // one f64 consumes two 32-bit words
    rng.set_word_pos(2 * step as u128);
    rng.random::<f64>()
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
        return Err(Error::InvalidGrid("times must be finite and start at t_0 >= 0".into()));
    }
    if !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

fn simulate(
    params: ProcessParams,
    x0: f64,
    times: &[f64],
    n_paths: usize,
    n: usize,
    seed: u64,
    parallel: bool,
) -> Result<PathSample> {
    check_grid(times)?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let mut values: Vec<Vec<f64>> = (0..n_paths)
        .map(|_| {
            let mut v = Vec::with_capacity(times.len());
            v.push(x0);
            v
        })
        .collect();

    for step in 0..times.len() - 1 {
        let (s, t) = (times[step], times[step + 1]);
        // States are discrete, so kernels are shared by all paths at the same node.
        let mut states: Vec<f64> = values.iter().map(|v| v[step]).collect();
        states.sort_by(f64::total_cmp);
        states.dedup_by(|a, b| a.to_bits() == b.to_bits());
        let build = |&x: &f64| transition_measure(params, x, s, t, n).map(|m| (x.to_bits(), m));
        let kernels: BTreeMap<u64, DiscreteMeasure> = if parallel {
            states.par_iter().map(build).collect::<Result<_>>()?
        } else {
            states.iter().map(build).collect::<Result<_>>()?
        };
        let advance = |(p, path): (usize, &mut Vec<f64>)| {
            let kernel = &kernels[&path[step].to_bits()];
            path.push(sample_from_measure(kernel, uniform(seed, p, step)));
        };
        if parallel {
            values.par_iter_mut().enumerate().for_each(advance);
        } else {
            values.iter_mut().enumerate().for_each(advance);
        }
    }
    Ok(PathSample { times: times.to_vec(), values })
}

/// Simulates `n_paths` paths started at `x0` at `times[0]`, with `n`-point kernels.
/// Paths are generated in parallel; the output does not depend on scheduling.
pub fn simulate_paths(
    params: ProcessParams,
    x0: f64,
    times: &[f64],
    n_paths: usize,
    n: usize,
    seed: u64,
) -> Result<PathSample> {
    simulate(params, x0, times, n_paths, n, seed, true)
}

/// Single-threaded [`simulate_paths`]; produces identical output.
pub fn simulate_paths_serial(
    params: ProcessParams,
    x0: f64,
    times: &[f64],
    n_paths: usize,
    n: usize,
    seed: u64,
) -> Result<PathSample> {
    simulate(params, x0, times, n_paths, n, seed, false)
}

/// Per-time sample statistics of a [`PathSample`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    #[serde(serialize_with = "sig17_vec")]
    pub times: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    pub mean: Vec<f64>,
    /// Unbiased sample variance.
    #[serde(serialize_with = "sig17_vec")]
    pub variance: Vec<f64>,
    /// Mean of `X_{t_{i+1}} - X_{t_i}`, one entry per step.
    #[serde(serialize_with = "sig17_vec")]
    pub increment_mean: Vec<f64>,
    /// Sample variance of the increments, one entry per step.
    #[serde(serialize_with = "sig17_vec")]
    pub increment_variance: Vec<f64>,
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / n as f64;
    let ss: f64 = xs.map(|v| (v - mean).powi(2)).sum();
    (mean, ss / (n - 1) as f64)
}

pub fn empirical_stats(ps: &PathSample) -> Result<EmpiricalStats> {
    let n = ps.n_paths();
    if n < 2 {
        return Err(Error::InvalidArgument("statistics need at least two paths".into()));
    }
    let steps = ps.times.len();
    let mut mean = Vec::with_capacity(steps);
    let mut variance = Vec::with_capacity(steps);
    for i in 0..steps {
        let (m, v) = mean_var(ps.values.iter().map(|p| p[i]), n);
        mean.push(m);
        variance.push(v);
    }
    let mut increment_mean = Vec::with_capacity(steps.saturating_sub(1));
    let mut increment_variance = Vec::with_capacity(steps.saturating_sub(1));
    for i in 1..steps {
        let (m, v) = mean_var(ps.values.iter().map(|p| p[i] - p[i - 1]), n);
        increment_mean.push(m);
        increment_variance.push(v);
    }
    Ok(EmpiricalStats { times: ps.times.clone(), mean, variance, increment_mean, increment_variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ProcessParams {
        ProcessParams::new(0.5, 0.3, 0.2).unwrap()
    }

    #[test]
    fn inverse_cdf_examples() {
        let m = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert_eq!(sample_from_measure(&m, 0.0), -1.0);
        assert_eq!(sample_from_measure(&m, 0.25), -1.0);
        assert_eq!(sample_from_measure(&m, 0.75), 1.0);
        assert_eq!(sample_from_measure(&m, 0.999_999_999_999), 1.0);
    }

    #[test]
    fn inverse_cdf_reproduces_weights() {
        let weights = vec![0.1, 0.25, 0.4, 0.25];
        let m = DiscreteMeasure::new(vec![0.0, 1.0, 2.0, 3.0], weights.clone()).unwrap();
        let draws = 100_000;
        let mut counts = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..draws {
            counts[sample_from_measure(&m, rng.random::<f64>()) as usize] += 1;
        }
        for (c, w) in counts.iter().zip(&weights) {
            let sigma = (draws as f64 * w * (1.0 - w)).sqrt();
            assert!((*c as f64 - draws as f64 * w).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let times = [0.0, 0.5];
        let a = simulate_paths(params(), 0.2, &times, 1, 16, 42).unwrap();
        let b = simulate_paths(params(), 0.2, &times, 1, 16, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(params(), 0.2, &times, 50, 16, 43).unwrap();
        let d = simulate_paths(params(), 0.2, &times, 50, 16, 42).unwrap();
        assert_ne!(c, d);
    }

    #[test]
    fn serial_equals_parallel() {
        let times = [0.1, 0.4, 0.9, 1.5];
        let a = simulate_paths(params(), -0.3, &times, 300, 12, 9).unwrap();
        let b = simulate_paths_serial(params(), -0.3, &times, 300, 12, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.values.iter().all(|p| p.len() == times.len() && p[0] == -0.3));
    }

    #[test]
    fn values_lie_on_kernel_nodes() {
        let times = [0.0, 0.3, 0.8];
        let n = 8;
        let ps = simulate_paths(params(), 0.4, &times, 200, n, 1).unwrap();
        for path in &ps.values {
            for i in 0..times.len() - 1 {
                let kernel = transition_measure(params(), path[i], times[i], times[i + 1], n).unwrap();
                assert!(kernel.nodes().contains(&path[i + 1]));
            }
        }
    }

    #[test]
    fn invalid_grids() {
        let p = params();
        assert!(simulate_paths(p, 0.0, &[], 1, 8, 0).is_err());
        assert!(simulate_paths(p, 0.0, &[0.5, 0.5], 1, 8, 0).is_err());
        assert!(simulate_paths(p, 0.0, &[-0.1, 0.5], 1, 8, 0).is_err());
        assert!(simulate_paths(p, 0.0, &[0.0, 0.5], 0, 8, 0).is_err());
    }

    #[test]
    fn stats_of_constant_paths() {
        let ps = PathSample { times: vec![0.0, 1.0], values: vec![vec![2.0, 2.0]; 3] };
        let st = empirical_stats(&ps).unwrap();
        assert_eq!(st.variance, vec![0.0, 0.0]);
        assert_eq!(st.increment_mean, vec![0.0]);
        let one = PathSample { times: vec![0.0], values: vec![vec![1.0]] };
        assert!(empirical_stats(&one).is_err());
    }

    #[test]
    fn martingale_statistics() {
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let n_paths = 20_000;
        let ps = simulate_paths(params(), 0.4, &times, n_paths, 16, 2024).unwrap();
        let st = empirical_stats(&ps).unwrap();
        let sigma = (0.25 / n_paths as f64).sqrt();
        for (i, &t) in times.iter().enumerate().skip(1) {
            assert!(st.increment_mean[i - 1].abs() < 3.0 * sigma);
            assert!((st.mean[i] - 0.4).abs() < 3.0 * (t / n_paths as f64).sqrt());
        }
    }

    #[test]
    fn csv_and_json_shapes() {
        let ps = PathSample { times: vec![0.0, 1.0], values: vec![vec![0.5, 0.25], vec![0.5, 1.0]] };
        let csv = ps.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "path_id,time,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with("1,"));
        let v: serde_json::Value = serde_json::from_str(&ps.to_json()).unwrap();
        assert_eq!(v["values"][1][1].as_f64().unwrap(), 1.0);
        assert_eq!(v["times"].as_array().unwrap().len(), 2);
    }
}
