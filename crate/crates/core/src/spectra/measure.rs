use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::report::{fmt_f64, sig17_vec};

/// Tolerance on the total mass of a hand-built measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Negative quadrature weights above this magnitude are an error, not rounding.
pub const NEGATIVE_WEIGHT_CLAMP: f64 = 1e-13;

/// Nodes closer than this fraction of the enclosing interval are merged.
pub const NODE_MERGE_FRACTION: f64 = 1e-12;

/// A finitely supported probability measure.
///
/// Nodes are strictly increasing and weights are nonnegative with unit sum.
/// Measures built by Gauss quadrature remember the polynomial degree up to
/// which they are exact and the Gershgorin interval of their Jacobi matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    #[serde(serialize_with = "sig17_vec")]
    nodes: Vec<f64>,
    #[serde(serialize_with = "sig17_vec")]
    weights: Vec<f64>,
    #[serde(skip)]
    exact_degree: Option<usize>,
    #[serde(skip)]
    enclosure: Option<(f64, f64)>,
}

impl DiscreteMeasure {
    /// A hand-built measure; weights must already sum to one.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "need matching nonempty nodes and weights, got {} and {}",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.iter().any(|v| !v.is_finite()) || !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidMeasure("nodes must be finite and strictly increasing".into()));
        }
        if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| w.is_nan() || **w < 0.0) {
            return Err(Error::NegativeWeight { index, weight });
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("total mass {mass} is not 1")));
        }
        Ok(Self { nodes, weights, exact_degree: None, enclosure: None })
    }

    /// Assembles a quadrature rule from raw eigen data: clamps rounding-level
    /// negative weights, merges coincident nodes and renormalizes.
    pub(crate) fn from_quadrature(
        nodes: Vec<f64>,
        weights: Vec<f64>,
        exact_degree: usize,
        enclosure: (f64, f64),
    ) -> Result<Self> {
        let mut weights = weights;
        for (index, w) in weights.iter_mut().enumerate() {
            if *w < 0.0 {
                if *w < -NEGATIVE_WEIGHT_CLAMP || w.is_nan() {
                    return Err(Error::NegativeWeight { index, weight: *w });
                }
                *w = 0.0;
            }
        }
        let merge_gap = NODE_MERGE_FRACTION * (enclosure.1 - enclosure.0);
        let mut merged_nodes: Vec<f64> = Vec::with_capacity(nodes.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(nodes.len());
        for (y, w) in nodes.into_iter().zip(weights) {
            match merged_nodes.last() {
                Some(&last) if y - last <= merge_gap => {
                    let total = merged_weights.last().unwrap() + w;
                    if total > 0.0 {
                        let prev_w = *merged_weights.last().unwrap();
                        *merged_nodes.last_mut().unwrap() = (last * prev_w + y * w) / total;
                    }
                    *merged_weights.last_mut().unwrap() = total;
                }
                _ => {
                    merged_nodes.push(y);
                    merged_weights.push(w);
                }
            }
        }
        let mass: f64 = merged_weights.iter().sum();
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::InvalidMeasure("quadrature weights vanish".into()));
        }
        merged_weights.iter_mut().for_each(|w| *w /= mass);
        Ok(Self {
            nodes: merged_nodes,
            weights: merged_weights,
            exact_degree: Some(exact_degree),
            enclosure: Some(enclosure),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly, if the measure is a Gauss rule.
    pub fn exact_degree(&self) -> Option<usize> {
        self.exact_degree
    }

    /// Gershgorin interval of the generating Jacobi matrix.
    pub fn enclosure(&self) -> Option<(f64, f64)> {
        self.enclosure
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * f(y)).sum()
    }

    pub fn integrate_poly(&self, p: &Poly) -> f64 {
        self.integrate(|y| p.eval(y))
    }

    fn check_order(&self, k_max: usize) -> Result<()> {
        match self.exact_degree {
            Some(max) if k_max > max => Err(Error::MomentOrderTooHigh { order: k_max, max }),
            _ => Ok(()),
        }
    }

    /// Raw moments `m_0, .., m_{k_max}`.
    pub fn moments(&self, k_max: usize) -> Result<Vec<f64>> {
        self.moments_about(0.0, k_max)
    }

    /// Moments of `y - center`.
    pub fn moments_about(&self, center: f64, k_max: usize) -> Result<Vec<f64>> {
        self.check_order(k_max)?;
        let mut out = vec![0.0; k_max + 1];
        for (&y, &w) in self.nodes.iter().zip(&self.weights) {
            let d = y - center;
            let mut power = w;
            for m in out.iter_mut() {
                *m += power;
                power *= d;
            }
        }
        Ok(out)
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|y| y)
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.integrate(|y| (y - mean).powi(2))
    }

    /// Mass of the nodes with `|y - center| >= radius`.
    pub fn tail_mass(&self, center: f64, radius: f64) -> f64 {
        self.nodes.iter().zip(&self.weights).filter(|(&y, _)| (y - center).abs() >= radius).map(|(_, &w)| w).sum()
    }

    /// Reweights by a nonnegative density and renormalizes.
    ///
    /// Returns the new measure together with the total mass before
    /// renormalization. The exactness degree drops by `density_degree`.
    pub fn reweighted<F: Fn(f64) -> f64>(&self, density: F, density_degree: usize) -> Result<(Self, f64)> {
        let weights: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&y, &w)| w * density(y)).collect();
        if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| w.is_nan() || **w < 0.0) {
            return Err(Error::NegativeWeight { index, weight });
        }
        let mass: f64 = weights.iter().sum();
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::InvalidMeasure("reweighted measure has no mass".into()));
        }
        let (nodes, weights): (Vec<f64>, Vec<f64>) =
            self.nodes.iter().zip(weights).filter(|(_, w)| *w > 0.0).map(|(&y, w)| (y, w / mass)).unzip();
        let measure = Self {
            nodes,
            weights,
            exact_degree: self.exact_degree.map(|d| d.saturating_sub(density_degree)),
            enclosure: self.enclosure,
        };
        Ok((measure, mass))
    }

    /// CSV with header `node,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,weight\n");
        for (&y, &w) in self.nodes.iter().zip(&self.weights) {
            let _ = writeln!(out, "{},{}", fmt_f64(y), fmt_f64(w));
        }
        out
    }

    /// JSON object `{"nodes": [...], "weights": [...]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }
}

/// `sum_i w_i f(y_i)`.
pub fn integrate<F: Fn(f64) -> f64>(m: &DiscreteMeasure, f: F) -> f64 {
    m.integrate(f)
}

/// Moments `m_0, .., m_{k_max}`.
pub fn moments(m: &DiscreteMeasure, k_max: usize) -> Result<Vec<f64>> {
    m.moments(k_max)
}
