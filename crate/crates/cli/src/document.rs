//! JSON documents read and written by `invmasa`.

use std::path::Path;

use masa_core::discrete::{BlockAlgebra, BlockPartition, DiscreteSpace};
use masa_core::numerics::{unitarity_defect, ComplexMatrix, TolerancePolicy};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// `A` as a block partition of a weighted point set, and `U` in the
/// orthonormal basis `δ_x / √μ_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub dimension: usize,
    pub weights: Vec<f64>,
    pub blocks: Vec<Vec<usize>>,
    pub unitary: ComplexMatrix,
}

pub struct Instance {
    pub algebra: BlockAlgebra,
    pub unitary: ComplexMatrix,
}

impl InstanceDocument {
    pub fn from_parts(algebra: &BlockAlgebra, unitary: &ComplexMatrix) -> Self {
        Self {
            dimension: algebra.n(),
            weights: algebra.space().weights().to_vec(),
            blocks: algebra.partition().blocks().to_vec(),
            unitary: unitary.clone(),
        }
    }

    /// Schema checks (exit 2) and then unitarity at `tol.eps_eq` (exit 3).
    pub fn validate(&self, tol: &TolerancePolicy) -> Result<Instance, CliError> {
        let n = self.dimension;
        if self.weights.len() != n {
            return Err(CliError::Schema(format!("{} weights for dimension {n}", self.weights.len())));
        }
        if self.unitary.rows() != n || self.unitary.cols() != n {
            return Err(CliError::Schema(format!(
                "unitary is {}x{}, expected {n}x{n}",
                self.unitary.rows(),
                self.unitary.cols()
            )));
        }
        let space = DiscreteSpace::new(self.weights.clone()).map_err(|e| CliError::Schema(e.to_string()))?;
        let partition = BlockPartition::new(self.blocks.clone(), n).map_err(|e| CliError::Schema(e.to_string()))?;
        let algebra = BlockAlgebra::new(space, partition).map_err(|e| CliError::Schema(e.to_string()))?;
        let defect = unitarity_defect(&self.unitary);
        if defect.is_nan() || defect > tol.eps_eq {
            return Err(CliError::Precondition(format!("NotUnitary: ‖U*U − I‖ = {defect:e}")));
        }
        Ok(Instance { algebra, unitary: self.unitary.clone() })
    }
}

/// Any document with a top-level `basis` of matrices, such as an embed result.
#[derive(Debug, Clone, Deserialize)]
pub struct AlgebraDocument {
    pub basis: Vec<ComplexMatrix>,
}

/// Common header of every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub operation: String,
    pub tool_version: String,
    pub input_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub passed: bool,
}

impl ReportHeader {
    pub fn new(operation: &str, input_digest: String, seed: Option<u64>, passed: bool) -> Self {
        Self { operation: operation.into(), tool_version: TOOL_VERSION.into(), input_digest, seed, passed }
    }
}

/// Header fields merged with the operation's body (keys are emitted sorted).
pub fn report(header: ReportHeader, body: Value) -> Value {
    let mut out = serde_json::to_value(header).expect("header serializes");
    if let (Value::Object(head), Value::Object(rest)) = (&mut out, body) {
        head.extend(rest);
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))
}

pub fn parse<T: for<'de> Deserialize<'de>>(bytes: &[u8], what: &str) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

pub fn to_pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use masa_core::numerics::ONE;

    fn doc() -> InstanceDocument {
        InstanceDocument {
            dimension: 2,
            weights: vec![1.0, 2.0],
            blocks: vec![vec![0], vec![1]],
            unitary: ComplexMatrix::identity(2),
        }
    }

    #[test]
    fn instance_roundtrip() {
        let d = doc();
        let back: InstanceDocument = serde_json::from_str(&to_pretty(&d)).unwrap();
        assert_eq!(back, d);
        assert!(d.validate(&TolerancePolicy::default()).is_ok());
    }

    #[test]
    fn instance_errors_map_to_exit_codes() {
        let tol = TolerancePolicy::default();
        let mut d = doc();
        d.blocks = vec![vec![0]];
        assert_eq!(d.validate(&tol).err().unwrap().exit_code(), 2);
        let mut d = doc();
        d.unitary[(0, 1)] = ONE;
        assert_eq!(d.validate(&tol).err().unwrap().exit_code(), 3);
        assert!(serde_json::from_str::<InstanceDocument>(r#"{"dimension":1}"#).is_err());
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn header_merges_with_body() {
        let v = report(ReportHeader::new("x", "d".into(), None, true), serde_json::json!({"k": 1}));
        assert_eq!(v["operation"], "x");
        assert_eq!(v["k"], 1);
        assert!(v.get("seed").is_none());
    }
}
