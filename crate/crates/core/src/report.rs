//! Result records produced by every check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A concrete pair that violates (or best approaches) an inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Normalized margin in `f64`; negative means violated.
    pub margin: f64,
    /// The same margin re-evaluated in 256-bit arithmetic, when it was.
    pub precise_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub check_name: String,
    pub passed: bool,
    pub samples: u64,
    /// Re-verified violations only.
    pub violations: u64,
    /// Smallest normalized margin seen; negative means a violation.
    pub worst_margin: f64,
    pub estimated_constant: Option<f64>,
    pub witness: Option<Witness>,
    pub details: BTreeMap<String, Value>,
}

impl InequalityReport {
    pub fn new(check_name: impl Into<String>) -> Self {
        InequalityReport {
            check_name: check_name.into(),
            passed: true,
            samples: 0,
            violations: 0,
            worst_margin: 0.0,
            estimated_constant: None,
            witness: None,
            details: BTreeMap::new(),
        }
    }

    pub fn detail(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.details.insert(key.into(), value.into());
        self
    }

    pub fn detail_f64(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        let v = serde_json::Number::from_f64(value)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(format!("{value}")));
        self.details.insert(key.into(), v);
        self
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.details.get(key).and_then(Value::as_f64)
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.passed = false;
        let reason = reason.into();
        match self.details.get_mut("failure_reasons") {
            Some(Value::Array(list)) => list.push(Value::String(reason)),
            _ => {
                self.details
                    .insert("failure_reasons".into(), Value::Array(vec![Value::String(reason)]));
            }
        }
    }

    /// A violation that survived high-precision re-evaluation.
    pub fn has_confirmed_violation(&self) -> bool {
        self.violations > 0
    }
}

/// Least-squares fit of `log10 ‖Fx − Fy‖` against `log10 ‖x − y‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_pairs: usize,
    /// log10 distance range actually covered.
    pub scale_range: (f64, f64),
}

/// One point of a Hölder point cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub base_point_id: usize,
    pub log10_dist: f64,
    pub log10_image_dist: f64,
    /// `log10 L + (q − 1) · log10_dist`.
    pub bound_value: f64,
}
