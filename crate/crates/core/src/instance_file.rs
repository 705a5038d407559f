//! JSON instance files.
//!
//! ```json
//! {
//!   "name": "cubic_disk",
//!   "dimension": 2,
//!   "radius": 1.0,
//!   "objective": [{"exps": [3, 0], "coef": 0.16666666666666666}, …],
//!   "constraints": [[{"exps": [0, 0], "coef": 1.0}, …]],
//!   "expected_value": -0.6666666666666666,
//!   "expected_minimizer": [-1.0, 0.0]
//! }
//! ```
//!
//! `name`, `expected_value` and `expected_minimizer` are optional; every other
//! field is required and unknown fields are rejected.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{MultiIndex, Poly};
use crate::relax::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exps: Vec<u32>,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub radius: f64,
    pub objective: Vec<TermSpec>,
    pub constraints: Vec<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_minimizer: Option<Vec<f64>>,
}

fn build_poly(dimension: usize, terms: &[TermSpec], field: &str) -> Result<Poly<f64>> {
    let mut seen = BTreeSet::new();
    for (i, t) in terms.iter().enumerate() {
        if t.exps.len() != dimension {
            return Err(Error::Parse(format!(
                "{field}[{i}].exps has length {}, expected dimension {dimension}",
                t.exps.len()
            )));
        }
        if !t.coef.is_finite() {
            return Err(Error::Parse(format!("{field}[{i}].coef is not finite")));
        }
        if !seen.insert(t.exps.clone()) {
            return Err(Error::Parse(format!(
                "{field}[{i}].exps {:?} repeats an earlier term",
                t.exps
            )));
        }
    }
    Poly::from_terms(
        dimension,
        terms.iter().map(|t| (MultiIndex::new(t.exps.clone()), t.coef)),
    )
    .map_err(|e| Error::Parse(format!("{field}: {e}")))
}

fn term_specs(p: &Poly<f64>) -> Vec<TermSpec> {
    p.terms()
        .map(|(alpha, coef)| TermSpec {
            exps: alpha.exponents().to_vec(),
            coef,
        })
        .collect()
}

impl InstanceFile {
    /// Parses and validates a JSON document.
    pub fn parse(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        file.instance()?;
        Ok(file)
    }

    /// The instance in original coordinates (not preprocessed).
    pub fn instance(&self) -> Result<Instance> {
        if self.dimension == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        if !self.radius.is_finite() || self.radius <= 0.0 {
            return Err(Error::Parse(format!(
                "radius must be finite and positive, got {}",
                self.radius
            )));
        }
        let f = build_poly(self.dimension, &self.objective, "objective")?;
        let gs = self
            .constraints
            .iter()
            .enumerate()
            .map(|(j, g)| build_poly(self.dimension, g, &format!("constraints[{j}]")))
            .collect::<Result<Vec<_>>>()?;
        if let Some(x) = &self.expected_minimizer {
            if x.len() != self.dimension {
                return Err(Error::Parse(format!(
                    "expected_minimizer has length {}, expected dimension {}",
                    x.len(),
                    self.dimension
                )));
            }
        }
        Instance::new(f, gs, self.radius).map_err(|e| Error::Parse(e.to_string()))
    }

    /// File representation of an instance in original coordinates.
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        if instance.is_preprocessed() {
            return Err(Error::InvalidArgument(
                "only instances in original coordinates can be written".into(),
            ));
        }
        Ok(InstanceFile {
            name: None,
            dimension: instance.dimension(),
            radius: instance.radius(),
            objective: term_specs(instance.objective()),
            constraints: instance.constraints().iter().map(term_specs).collect(),
            expected_value: None,
            expected_minimizer: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Parses an instance file into an instance in original coordinates.
pub fn parse_instance(text: &str) -> Result<Instance> {
    InstanceFile::parse(text)?.instance()
}

/// Serializes an instance in original coordinates.
pub fn emit_instance(instance: &Instance) -> Result<String> {
    Ok(InstanceFile::from_instance(instance)?.to_json())
}
