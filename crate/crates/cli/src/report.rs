//! Run reports and their on-disk form.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::{Expectation, Params, ScenarioId, Verdict};

pub const SCHEMA: u32 = 1;

/// The replayable part of a report. Serialization is deterministic, so the
/// same scenario and tool version always give the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub scenario: ScenarioId,
    pub claim: String,
    pub expectation: Expectation,
    pub params: Params,
    pub verdict: Verdict,
    pub metrics: serde_json::Value,
    pub tool_version: String,
    /// sha256 of the effective parameters.
    pub input_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub body: ReportBody,
    pub body_sha256: String,
    pub wall_clock_ms: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ReportBody {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("report bodies serialize")
    }

    pub fn hash(&self) -> String {
        sha256_hex(&self.canonical_bytes())
    }
}

impl RunReport {
    pub fn new(body: ReportBody, wall_clock_ms: u64) -> Self {
        Self {
            schema: SCHEMA,
            body_sha256: body.hash(),
            body,
            wall_clock_ms,
        }
    }

    pub fn file_name(&self) -> String {
        format!(
            "{}-{}.json",
            self.body.scenario.as_str(),
            &self.body_sha256[..12]
        )
    }

    /// Writes the report under `dir`. An existing file with the same name
    /// holds the same body and is left untouched.
    pub fn persist(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(self.file_name());
        if !path.exists() {
            let text = serde_json::to_string_pretty(self)?;
            fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(path)
    }

    /// Loads a report and checks its schema and body hash.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let report: RunReport =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if report.schema != SCHEMA {
            bail!("unsupported report schema {}", report.schema);
        }
        let actual = report.body.hash();
        if actual != report.body_sha256 {
            bail!(
                "body hash mismatch: recorded {}, computed {actual}",
                report.body_sha256
            );
        }
        Ok(report)
    }
}
