//! Sequence store: the on-disk format for chunked token sequences.
//!
//! Layout, one record per line after the `#` metadata header:
//!
//! ```text
//! # tool_version=... / config_hash=... / seed=... / context_length=C
//! <seq_id> \t <domain or -> \t <t0 t1 t2 ... t{C-1}>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::TokenSequence;
use crate::error::{Error, Result};
use crate::meta::{read_header, FileMeta};

/// Parsed sequence store: sequences plus the provenance header.
pub struct SeqStore {
    pub seqs: Vec<TokenSequence>,
    pub context_length: usize,
    pub meta: FileMeta,
}

pub fn write_seqs(
    path: impl AsRef<Path>,
    seqs: &[TokenSequence],
    context_length: usize,
    meta: &FileMeta,
) -> Result<()> {
    let path = path.as_ref();
    for s in seqs {
        if s.tokens.len() != context_length {
            return Err(Error::InvalidParam(format!(
                "sequence {} has length {}, store requires {}",
                s.seq_id,
                s.tokens.len(),
                context_length
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    meta.write_header(&mut w).map_err(|e| Error::io(path, e))?;
    writeln!(w, "# context_length={context_length}").map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    for s in seqs {
        line.clear();
        line.push_str(&s.seq_id);
        line.push('\t');
        line.push_str(s.source_domain.as_deref().unwrap_or("-"));
        line.push('\t');
        for (i, t) in s.tokens.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(itoa(*t).as_str());
        }
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn itoa(v: u32) -> String {
    v.to_string()
}

pub fn read_seqs(path: impl AsRef<Path>) -> Result<SeqStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let (meta, first, header_lines) = read_header(&mut reader, path)?;

    // context_length rides in the same comment header; recover it.
    let context_length = read_context_length(path)?;

    let mut seqs = Vec::new();
    let mut line_no = header_lines;
    let mut handle = |line: &str, line_no: usize| -> Result<()> {
        let mut parts = line.splitn(3, '\t');
        let seq_id = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(path, line_no, "missing seq_id"))?;
        let domain = parts
            .next()
            .ok_or_else(|| Error::parse(path, line_no, "missing domain column"))?;
        let toks = parts
            .next()
            .ok_or_else(|| Error::parse(path, line_no, "missing token column"))?;
        let tokens: Vec<u32> = toks
            .split(' ')
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::parse(path, line_no, format!("bad token {t:?}")))
            })
            .collect::<Result<_>>()?;
        if tokens.len() != context_length {
            return Err(Error::parse(
                path,
                line_no,
                format!(
                    "sequence {seq_id} has {} tokens, header says {context_length}",
                    tokens.len()
                ),
            ));
        }
        seqs.push(TokenSequence {
            seq_id: seq_id.to_string(),
            tokens,
            source_domain: (domain != "-").then(|| domain.to_string()),
        });
        Ok(())
    };
    if let Some(line) = first {
        handle(&line, line_no)?;
    }
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        line_no += 1;
        if line.is_empty() {
            continue;
        }
        handle(&line, line_no)?;
    }
    Ok(SeqStore {
        seqs,
        context_length,
        meta,
    })
}

fn read_context_length(path: &Path) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.starts_with('#') {
            break;
        }
        if let Some(v) = line
            .trim_start_matches('#')
            .trim()
            .strip_prefix("context_length=")
        {
            return v
                .parse::<usize>()
                .map_err(|_| Error::parse(path, i + 1, format!("bad context_length {v:?}")));
        }
    }
    Err(Error::parse(path, 1, "missing context_length header"))
}
