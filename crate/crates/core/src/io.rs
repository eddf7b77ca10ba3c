//! On-disk formats for diagnostics and reports.
//!
//! Columnar files are comma-separated with one header line and one row per
//! bar; floats use the shortest representation that round-trips. Record files
//! hold one JSON object per line. Both may start with a provenance line that
//! carries the run digest: `# run_digest=<hex>` for columnar files and
//! `{"meta":{...}}` for record files.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{BufRead, BufWriter, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One named column.
pub enum Column<'a> {
    Float(&'a str, &'a [f64]),
    Int(&'a str, Vec<i64>),
}

impl Column<'_> {
    fn name(&self) -> &str {
        match self {
            Column::Float(n, _) | Column::Int(n, _) => n,
        }
    }

    fn len(&self) -> usize {
        match self {
            Column::Float(_, v) => v.len(),
            Column::Int(_, v) => v.len(),
        }
    }

    fn cell(&self, i: usize, out: &mut String) {
        use std::fmt::Write as _;
        match self {
            Column::Float(_, v) => write!(out, "{}", v[i]).unwrap(),
            Column::Int(_, v) => write!(out, "{}", v[i]).unwrap(),
        }
    }
}

pub fn write_columnar(w: impl Write, digest: Option<&str>, columns: &[Column<'_>]) -> std::io::Result<()> {
    let mut w = BufWriter::new(w);
    if let Some(d) = digest {
        writeln!(w, "# run_digest={d}")?;
    }
    let header: Vec<&str> = columns.iter().map(Column::name).collect();
    writeln!(w, "{}", header.join(","))?;
    let rows = columns.iter().map(Column::len).max().unwrap_or(0);
    assert!(columns.iter().all(|c| c.len() == rows), "columns differ in length");
    let mut line = String::new();
    for i in 0..rows {
        line.clear();
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            c.cell(i, &mut line);
        }
        writeln!(w, "{line}")?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Columnar {
    pub digest: Option<String>,
    pub headers: Vec<String>,
    /// Column-major values.
    pub columns: Vec<Vec<f64>>,
}

impl Columnar {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(&self.columns[i])
    }
}

pub fn read_columnar(r: impl BufRead) -> Result<Columnar, FormatError> {
    let mut out = Columnar::default();
    let mut have_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(d) = rest.trim().strip_prefix("run_digest=") {
                out.digest = Some(d.to_string());
            }
            continue;
        }
        if !have_header {
            out.headers = line.split(',').map(str::to_string).collect();
            out.columns = vec![Vec::new(); out.headers.len()];
            have_header = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != out.headers.len() {
            return Err(FormatError::Parse {
                line: i + 1,
                reason: format!("{} cells, expected {}", cells.len(), out.headers.len()),
            });
        }
        for (col, cell) in out.columns.iter_mut().zip(cells) {
            col.push(cell.parse().map_err(|e| FormatError::Parse {
                line: i + 1,
                reason: format!("{cell:?}: {e}"),
            })?);
        }
    }
    Ok(out)
}

/// Provenance line of a record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub schema: String,
    pub run_digest: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: RecordMeta,
}

/// Appends JSON records one per line, flushing after each.
pub struct RecordWriter<W: Write> {
    inner: BufWriter<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(inner: W, meta: Option<&RecordMeta>) -> std::io::Result<Self> {
        let mut inner = BufWriter::new(inner);
        if let Some(meta) = meta {
            serde_json::to_writer(&mut inner, &MetaLine { meta: meta.clone() })?;
            inner.write_all(b"\n")?;
        }
        Ok(Self { inner })
    }

    /// Continues an existing file without writing a provenance line.
    pub fn append(inner: W) -> Self {
        Self {
            inner: BufWriter::new(inner),
        }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.inner, record)?;
        self.inner.write_all(b"\n")?;
        self.inner.flush()
    }
}

pub fn write_records<T: Serialize>(w: impl Write, meta: Option<&RecordMeta>, records: &[T]) -> std::io::Result<()> {
    let mut rw = RecordWriter::new(w, meta)?;
    for r in records {
        rw.write(r)?;
    }
    Ok(())
}

/// Reads a record file, returning its provenance line if present.
pub fn read_records<T: DeserializeOwned>(r: impl BufRead) -> Result<(Option<RecordMeta>, Vec<T>), FormatError> {
    let mut meta = None;
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Ok(m) = serde_json::from_str::<MetaLine>(&line) {
                meta = Some(m.meta);
                continue;
            }
        }
        out.push(serde_json::from_str(&line).map_err(|e| FormatError::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok((meta, out))
}
