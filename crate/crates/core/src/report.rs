//! Serialization: gate/matrix JSON documents, hierarchy and Schmidt reports
//! with residuals as 17-significant-digit decimal strings, construction
//! recipes, and run manifests.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::Gate2;
use crate::compose::{TriGate, TuirfGate};
use crate::hierarchy::{HierarchyReport, SchmidtReport};
use crate::tensor::ComplexTensor;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported document kind {0}")]
    UnsupportedKind(String),
    #[error("dims {0:?} do not match {1} entries")]
    DimsMismatch(Vec<usize>, usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error("{0}")]
    Invalid(String),
}

/// JSON document for any gate or matrix: row-major complex entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorDocument {
    pub kind: String,
    pub dims: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl TensorDocument {
    pub fn from_tensor(kind: &str, t: &ComplexTensor) -> Self {
        Self {
            kind: kind.to_string(),
            dims: t.shape().to_vec(),
            entries: t.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_tensor(&self) -> Result<ComplexTensor, ReportError> {
        let expected: usize = self.dims.iter().product();
        if expected != self.entries.len() {
            return Err(ReportError::DimsMismatch(
                self.dims.clone(),
                self.entries.len(),
            ));
        }
        Ok(ComplexTensor::new(
            self.dims.clone(),
            self.entries
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect(),
        )?)
    }
}

pub fn gate_to_json(gate: &Gate2) -> String {
    serde_json::to_string_pretty(&TensorDocument::from_tensor("gate2", gate.tensor())).unwrap()
}

pub fn gate_from_json(s: &str) -> Result<Gate2, ReportError> {
    let doc: TensorDocument = serde_json::from_str(s)?;
    match doc.kind.as_str() {
        "gate2" => {
            let t = doc.to_tensor()?;
            Gate2::from_tensor(t).map_err(|e| ReportError::Invalid(e.to_string()))
        }
        other => Err(ReportError::UnsupportedKind(other.to_string())),
    }
}

pub fn trigate_to_json(g: &TriGate) -> String {
    serde_json::to_string_pretty(&TensorDocument::from_tensor("trigate", g.tensor())).unwrap()
}

pub fn trigate_from_json(s: &str) -> Result<TriGate, ReportError> {
    let doc: TensorDocument = serde_json::from_str(s)?;
    match doc.kind.as_str() {
        "trigate" => {
            TriGate::from_tensor(doc.to_tensor()?).map_err(|e| ReportError::Invalid(e.to_string()))
        }
        other => Err(ReportError::UnsupportedKind(other.to_string())),
    }
}

pub fn tuirf_to_json(g: &TuirfGate) -> String {
    serde_json::to_string_pretty(&TensorDocument::from_tensor("tuirf", g.tensor())).unwrap()
}

pub fn tuirf_from_json(s: &str) -> Result<TuirfGate, ReportError> {
    let doc: TensorDocument = serde_json::from_str(s)?;
    match doc.kind.as_str() {
        "tuirf" => TuirfGate::from_tensor(doc.to_tensor()?)
            .map_err(|e| ReportError::Invalid(e.to_string())),
        other => Err(ReportError::UnsupportedKind(other.to_string())),
    }
}

/// 17-significant-digit decimal string, reproducible across runs.
pub fn residual_string(r: f64) -> String {
    format!("{r:.16e}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyReportDocument {
    pub tolerance: String,
    pub residuals: Vec<(String, String)>,
    pub passes: Vec<(String, bool)>,
    pub all_pass: bool,
}

pub fn hierarchy_report_document(r: &HierarchyReport) -> HierarchyReportDocument {
    HierarchyReportDocument {
        tolerance: residual_string(r.tolerance()),
        residuals: r
            .iter()
            .map(|(cond, res)| (cond.to_string(), residual_string(res)))
            .collect(),
        passes: r.iter().map(|(cond, _)| (cond.to_string(), r.passes(cond))).collect(),
        all_pass: r.all_pass(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchmidtReportDocument {
    pub lambdas: Vec<String>,
    pub rank: usize,
    pub flat: bool,
    pub v_e: String,
}

pub fn schmidt_report_document(r: &SchmidtReport) -> SchmidtReportDocument {
    SchmidtReportDocument {
        lambdas: r.lambdas.iter().map(|l| residual_string(*l)).collect(),
        rank: r.rank,
        flat: r.flat,
        v_e: residual_string(r.v_e),
    }
}

/// Run manifest embedding the recipe, seed, tolerances, outputs, and version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub recipe: Option<serde_json::Value>,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub outputs: Vec<String>,
    pub version: String,
    pub wall_time_ms: u128,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            recipe: None,
            seed: None,
            tolerance: crate::catalog::DEFAULT_TOL,
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_ms: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{cnot_gate, swap_gate};

    #[test]
    fn gate_json_roundtrip_is_exact() {
        for gate in [cnot_gate(), swap_gate(3)] {
            let s = gate_to_json(&gate);
            let back = gate_from_json(&s).unwrap();
            assert_eq!(gate.tensor(), back.tensor());
        }
    }

    #[test]
    fn residual_strings_have_17_digits() {
        let s = residual_string(1.0 / 3.0);
        assert!(s.starts_with("3.3333333333333331"), "{s}");
    }

    #[test]
    fn unknown_kind_rejected() {
        let doc = TensorDocument {
            kind: "mystery".into(),
            dims: vec![2, 2],
            entries: vec![[1.0, 0.0]; 4],
        };
        let s = serde_json::to_string(&doc).unwrap();
        assert!(gate_from_json(&s).is_err());
    }
}
