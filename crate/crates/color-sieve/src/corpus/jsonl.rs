//! JSONL corpus files: one object per line, `{"id": str, "text": str, "domain": str?}`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Document;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Row {
    id: String,
    text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
}

/// Streaming reader; yields documents in file order and fails fast on the
/// first malformed line, reporting its 1-based line number.
pub struct JsonlReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    seen: HashSet<String>,
}

impl JsonlReader {
    fn read_one(&mut self) -> Result<Option<Document>> {
        let line = match self.lines.next() {
            None => return Ok(None),
            Some(r) => r.map_err(|e| Error::io(&self.path, e))?,
        };
        self.line_no += 1;
        if line.trim().is_empty() {
            return Err(Error::parse(&self.path, self.line_no, "blank line"));
        }
        let row: Row = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&self.path, self.line_no, e.to_string()))?;
        if row.text.is_empty() {
            return Err(Error::parse(
                &self.path,
                self.line_no,
                format!("document {:?} has empty text", row.id),
            ));
        }
        if !self.seen.insert(row.id.clone()) {
            return Err(Error::DuplicateDocId(row.id));
        }
        Ok(Some(Document {
            doc_id: row.id,
            text: row.text,
            domain_label: row.domain,
        }))
    }
}

impl Iterator for JsonlReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_one().transpose()
    }
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<JsonlReader> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(JsonlReader {
        path: path.to_path_buf(),
        lines: BufReader::new(file).lines(),
        line_no: 0,
        seen: HashSet::new(),
    })
}

/// Loads a whole corpus file, failing on the first malformed line.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    read_jsonl(path)?.collect()
}

pub fn write_jsonl(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in docs {
        let row = Row {
            id: doc.doc_id.clone(),
            text: doc.text.clone(),
            domain: doc.domain_label.clone(),
        };
        serde_json::to_writer(&mut w, &row).map_err(|e| {
            Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
        })?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_documents_in_order() {
        let f = write_tmp(
            r#"{"id":"a","text":"first"}
{"id":"b","text":"second","domain":"books"}
{"id":"c","text":"third"}
"#,
        );
        let docs = load_jsonl(f.path()).unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].doc_id, "a");
        assert_eq!(docs[1].domain_label.as_deref(), Some("books"));
        assert_eq!(docs[2].text, "third");
    }

    #[test]
    fn missing_text_names_the_line() {
        let f = write_tmp("{\"id\":\"a\",\"text\":\"ok\"}\n{\"id\":\"b\"}\n");
        let err = load_jsonl(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "error should name line 2: {msg}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = write_tmp("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
        match load_jsonl(f.path()) {
            Err(Error::DuplicateDocId(id)) => assert_eq!(id, "a"),
            other => panic!("expected duplicate-id error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_jsonl("/nonexistent/corpus.jsonl"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let docs = vec![
            Document {
                doc_id: "x".into(),
                text: "hello \"quoted\" text".into(),
                domain_label: Some("domain-A".into()),
            },
            Document {
                doc_id: "y".into(),
                text: "unicode: héllo".into(),
                domain_label: None,
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(f.path(), &docs).unwrap();
        assert_eq!(load_jsonl(f.path()).unwrap(), docs);
    }
}
