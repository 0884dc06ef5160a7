//! Provenance header shared by every artifact file.
//!
//! Text artifacts (sequence stores, score TSVs, result tables) start with
//! `# key=value` comment lines carrying the tool version, the config hash of
//! the run that produced them, and the root seed. `report` uses these to
//! refuse mixing artifacts from different runs.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hash value used for artifacts produced outside a configured run.
pub const ADHOC_HASH: &str = "adhoc";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl FileMeta {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        FileMeta {
            tool_version: crate::VERSION.to_string(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    /// Metadata for artifacts created ad hoc (tests, examples, one-off CLI use).
    pub fn adhoc(seed: u64) -> Self {
        FileMeta::new(ADHOC_HASH, seed)
    }

    pub fn write_header<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# tool_version={}", self.tool_version)?;
        writeln!(w, "# config_hash={}", self.config_hash)?;
        writeln!(w, "# seed={}", self.seed)
    }
}

/// Reads leading `# key=value` lines. Returns the parsed metadata and leaves
/// the reader positioned at the first non-comment line (returned separately).
pub fn read_header<R: BufRead>(
    reader: &mut R,
    path: &Path,
) -> Result<(FileMeta, Option<String>, usize)> {
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    let mut line_no = 0usize;
    loop {
        let mut line = String::new();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return finish(fields, None, line_no, path);
        }
        line_no += 1;
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        return finish(fields, Some(trimmed.to_string()), line_no, path);
    }
}

fn finish(
    fields: BTreeMap<String, String>,
    first_line: Option<String>,
    line_no: usize,
    path: &Path,
) -> Result<(FileMeta, Option<String>, usize)> {
    let get = |k: &str| -> Result<String> {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| Error::parse(path, line_no, format!("missing header field {k:?}")))
    };
    let seed_str = get("seed")?;
    let seed = seed_str
        .parse::<u64>()
        .map_err(|_| Error::parse(path, line_no, format!("bad seed {seed_str:?}")))?;
    Ok((
        FileMeta {
            tool_version: get("tool_version")?,
            config_hash: get("config_hash")?,
            seed,
        },
        first_line,
        line_no,
    ))
}
