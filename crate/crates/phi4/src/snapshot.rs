//! Self-describing JSON snapshots of boundary solutions.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{BoundarySolution, ConeReport, ModelParams, Workspace};

pub const FORMAT_VERSION: u32 = 1;
/// Allowed disagreement between the stored and the re-derived residual.
pub const INTEGRITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub code_version: String,
    pub x1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSnapshot {
    pub format_version: u32,
    pub params: ModelParams,
    pub nodes: Vec<f64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "Y")]
    pub y: f64,
    pub lambda_eff: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cone: ConeReport,
    pub provenance: Provenance,
}

impl SolutionSnapshot {
    pub fn from_solution(sol: &BoundarySolution) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            params: sol.params.clone(),
            nodes: sol.grid().nodes().to_vec(),
            g: sol.g.values().to_vec(),
            y: sol.y,
            lambda_eff: sol.lambda_eff,
            residual: sol.residual,
            iterations: sol.iterations,
            converged: sol.converged,
            cone: sol.cone,
            provenance: Provenance {
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                x1: sol.grid().x1(),
            },
        }
    }

    /// Rebuild the solution, re-deriving `HG`, `h`, `Y`, `λ_eff` and the residual.
    pub fn restore(self) -> Result<BoundarySolution> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let integrity = |m: String| Error::Integrity(m);
        self.params
            .validate()
            .map_err(|e| integrity(format!("stored parameters: {e}")))?;
        let ws = Workspace::for_params(&self.params)?;
        if ws.grid.nodes() != self.nodes.as_slice() {
            return Err(integrity(
                "grid nodes differ from the stored parameters".into(),
            ));
        }
        if self.g.len() != self.nodes.len() {
            return Err(integrity(format!(
                "{} G values for {} nodes",
                self.g.len(),
                self.nodes.len()
            )));
        }
        let sol = BoundarySolution::from_values(
            self.params,
            ws,
            self.g,
            self.residual,
            self.iterations,
            self.converged,
            self.cone,
        )
        .map_err(|e| integrity(format!("stored G is not admissible: {e}")))?;
        let r = sol.recompute_residual()?;
        if !((r - self.residual).abs() <= INTEGRITY_TOL) {
            return Err(integrity(format!(
                "re-derived residual {r:e} disagrees with stored {:e}",
                self.residual
            )));
        }
        for (name, stored, derived) in [
            ("Y", self.y, sol.y),
            ("lambda_eff", self.lambda_eff, sol.lambda_eff),
        ] {
            if !((stored - derived).abs() <= INTEGRITY_TOL) {
                return Err(integrity(format!(
                    "{name}: stored {stored}, re-derived {derived}"
                )));
            }
        }
        Ok(sol)
    }
}

pub fn to_json(sol: &BoundarySolution) -> Result<String> {
    let snap = SolutionSnapshot::from_solution(sol);
    if !snap.residual.is_finite() {
        return Err(Error::NumericFailure(
            "cannot store a non-finite residual".into(),
        ));
    }
    serde_json::to_string_pretty(&snap).map_err(|e| Error::Integrity(e.to_string()))
}

pub fn from_json(text: &str) -> Result<BoundarySolution> {
    // read the version first so that a future layout reports a mismatch, not a parse error
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Integrity(format!("unreadable snapshot: {e}")))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::VersionMismatch {
                found: u32::try_from(v).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(Error::Integrity("missing format_version".into())),
    }
    let snap: SolutionSnapshot = serde_json::from_value(value)
        .map_err(|e| Error::Integrity(format!("malformed snapshot: {e}")))?;
    snap.restore()
}

pub fn save_solution(sol: &BoundarySolution, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json(sol)?)?;
    Ok(())
}

pub fn load_solution(path: impl AsRef<Path>) -> Result<BoundarySolution> {
    from_json(&fs::read_to_string(path)?)
}
