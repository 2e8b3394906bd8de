//! Output formatting shared by the measure, path and report serializers.
//!
//! Floats are written with 17 significant digits so that every value
//! round-trips exactly through its decimal form.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

/// Formats a float with 17 significant digits (`NaN`/`inf` spelled out).
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Serializes a float as a 17-significant-digit JSON number, or `null` if not finite.
pub fn sig17<S: Serializer>(v: &f64, serializer: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        let raw = RawValue::from_string(fmt_f64(*v)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    } else {
        serializer.serialize_none()
    }
}

pub fn sig17_vec<S: Serializer>(v: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Sig17(*x))?;
    }
    seq.end()
}

pub fn sig17_matrix<S: Serializer>(v: &[Vec<f64>], serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(v.len()))?;
    for row in v {
        seq.serialize_element(&Sig17Vec(row))?;
    }
    seq.end()
}

/// A float that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        sig17(&self.0, serializer)
    }
}

struct Sig17Vec<'a>(&'a [f64]);

impl Serialize for Sig17Vec<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        sig17_vec(self.0, serializer)
    }
}

/// One point of a verification grid. Unused coordinates are `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub q: f64,
    pub theta: f64,
    pub tau: f64,
    pub x: f64,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub u: Option<f64>,
}

/// Outcome of one identity check over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub check: String,
    pub grid: Vec<GridPoint>,
    #[serde(serialize_with = "sig17")]
    pub max_residual: f64,
    #[serde(serialize_with = "sig17")]
    pub tolerance: f64,
    pub pass: bool,
    /// Diagnostics for grid points where the computation itself failed.
    pub errors: Vec<String>,
}

impl ResidualReport {
    /// Passes iff `max_residual < tolerance`; a non-finite residual never passes.
    pub fn new(check: impl Into<String>, grid: Vec<GridPoint>, max_residual: f64, tolerance: f64) -> Self {
        let pass = max_residual.is_finite() && max_residual < tolerance;
        Self { check: check.into(), grid, max_residual, tolerance, pass, errors: Vec::new() }
    }

    /// Passes iff `max_residual <= tolerance`; with a zero tolerance this is an exact check.
    pub fn bounded(check: impl Into<String>, grid: Vec<GridPoint>, max_residual: f64, tolerance: f64) -> Self {
        let mut r = Self::new(check, grid, max_residual, tolerance);
        r.pass = max_residual.is_finite() && max_residual <= tolerance;
        r
    }

    /// Attaches failure diagnostics; any error fails the report.
    pub fn with_errors(mut self, errors: Vec<String>) -> Self {
        if !errors.is_empty() {
            self.pass = false;
        }
        self.errors = errors;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Running maximum that lets a NaN through instead of swallowing it.
pub fn nan_max(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &v in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn report_json_shape() {
        let r = ResidualReport::new("martingale", vec![], 1e-12, 1e-10);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["check"], "martingale");
        assert_eq!(v["pass"], true);
        assert!(v["grid"].as_array().unwrap().is_empty());
        assert_eq!(v["max_residual"].as_f64().unwrap(), 1e-12);

        let bad = ResidualReport::new("x", vec![], f64::NAN, 1.0);
        assert!(!bad.pass);
        let v: serde_json::Value = serde_json::from_str(&bad.to_json()).unwrap();
        assert!(v["max_residual"].is_null());
        assert!(v["errors"].as_array().unwrap().is_empty());
    }

    #[test]
    fn bounded_and_errors() {
        assert!(!ResidualReport::new("x", vec![], 0.0, 0.0).pass);
        assert!(ResidualReport::bounded("x", vec![], 0.0, 0.0).pass);
        assert!(!ResidualReport::bounded("x", vec![], 1e-300, 0.0).pass);
        let r = ResidualReport::new("x", vec![], 0.0, 1.0).with_errors(vec!["boom".into()]);
        assert!(!r.pass);
    }
}
