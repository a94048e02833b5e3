use rankone::construction::ConstructionConfig;
use rankone::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Command, Ctx, Format, Output};

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to regenerate a run's artifacts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub construction: Option<ConstructionConfig>,
    pub command: Command,
    pub seed: u64,
    pub format: Format,
    pub outputs: Vec<FileDigest>,
}

pub struct Comparison {
    pub ok: bool,
    pub mismatches: usize,
    pub lines: Vec<String>,
}

impl Manifest {
    pub fn new(command: Command, ctx: &Ctx, out: &Output) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            construction: ctx.construction.clone(),
            command,
            seed: ctx.seed,
            format: ctx.format,
            outputs: out
                .files
                .iter()
                .map(|(file, bytes)| FileDigest { file: file.clone(), sha256: digest(bytes), bytes: bytes.len() as u64 })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Compares regenerated artifacts with the recorded digests.
    pub fn compare(&self, out: &Output) -> Comparison {
        let mut lines = Vec::new();
        let mut mismatches = 0;
        for rec in &self.outputs {
            let now = out.files.iter().find(|(f, _)| *f == rec.file).map(|(_, b)| digest(b));
            let status = match &now {
                Some(d) if *d == rec.sha256 => "MATCH",
                Some(_) => "MISMATCH",
                None => "MISSING",
            };
            if status != "MATCH" {
                mismatches += 1;
            }
            lines.push(format!("{status}\t{}\t{}", rec.file, rec.sha256));
        }
        for (f, b) in &out.files {
            if !self.outputs.iter().any(|r| r.file == *f) {
                mismatches += 1;
                lines.push(format!("EXTRA\t{f}\t{}", digest(b)));
            }
        }
        Comparison { ok: mismatches == 0, mismatches, lines }
    }
}
