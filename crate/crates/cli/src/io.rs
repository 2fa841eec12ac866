use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use qubit_parity::estimation::{Fringe1D, RabiFlopRecord};

use crate::config::{CliError, CliResult, Header};

pub struct Output {
    dir: PathBuf,
    header: Header,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, header: Header) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> CliResult<()> {
        let doc = json!({ "header": self.header, "data": data });
        let mut text = serde_json::to_string_pretty(&doc).expect("json serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV with the `#` header block above the column names.
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<()> {
        let mut buf = self.header.comment_block().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Numerical(e.to_string()))?;
            }
            w.flush()?;
        }
        self.write(name, &buf)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        f.write_all(bytes)?;
        self.written.push(path);
        Ok(())
    }

    pub fn report(&self) {
        for p in &self.written {
            eprintln!("wrote {}", p.display());
        }
    }
}

#[derive(Debug, Deserialize)]
struct FlopRow {
    time_ms: f64,
    pg: f64,
    shots: u32,
}

#[derive(Debug, Deserialize)]
struct FringeRow {
    phase: f64,
    pg: f64,
    #[serde(default)]
    shots: Option<u32>,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: T = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Usage(format!("{}: line {line}: {}", path.display(), e.kind_message()))
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Usage(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

trait KindMessage {
    fn kind_message(&self) -> String;
}

impl KindMessage for csv::Error {
    fn kind_message(&self) -> String {
        match self.kind() {
            csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
            _ => self.to_string(),
        }
    }
}

/// Columns `time_ms, pg, shots`; the shot count must be constant.
pub fn read_rabi_flop(path: &Path) -> CliResult<RabiFlopRecord> {
    let rows: Vec<FlopRow> = read_rows(path)?;
    let shots = rows[0].shots;
    if let Some(i) = rows.iter().position(|r| r.shots != shots) {
        return Err(CliError::Usage(format!(
            "{}: data row {}: shots must be constant across the record",
            path.display(),
            i + 1
        )));
    }
    RabiFlopRecord::new(rows.iter().map(|r| r.time_ms).collect(), rows.iter().map(|r| r.pg).collect(), shots)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Columns `phase, pg[, shots]` over one uniformly sampled period.
pub fn read_fringe(path: &Path) -> CliResult<Fringe1D> {
    let rows: Vec<FringeRow> = read_rows(path)?;
    Ok(Fringe1D {
        phases: rows.iter().map(|r| r.phase).collect(),
        pg: rows.iter().map(|r| r.pg).collect(),
        shots: rows[0].shots,
    })
}
