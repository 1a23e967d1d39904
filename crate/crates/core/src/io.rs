//! CSV and JSON artifacts.
//!
//! Artifact files start with `# key: value` header lines followed by an
//! RFC-4180 CSV body with a header row. Writes go to a temporary file in
//! the target directory and are renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::toeplitz::ArkModel;

/// Writes `bytes` to `path` atomically.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Argument(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Renders rows as CSV with LF line endings.
pub fn csv_bytes(columns: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        if r.len() != columns.len() {
            return Err(Error::Argument(format!("row has {} fields, expected {}", r.len(), columns.len())));
        }
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Reproducibility header of an artifact.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub entries: BTreeMap<String, String>,
}

impl ArtifactHeader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }
}

/// Header lines followed by the CSV body.
pub fn artifact_bytes(header: &ArtifactHeader, columns: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut bytes = header.render().into_bytes();
    bytes.extend(csv_bytes(columns, rows)?);
    Ok(bytes)
}

pub fn write_artifact(path: &Path, header: &ArtifactHeader, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    atomic_write(path, &artifact_bytes(header, columns, rows)?)
}

/// Parsed artifact: header entries, column names and string rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub header: ArtifactHeader,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Artifact {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Argument(format!("no column named {name}")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[idx]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Argument(format!("row {}: {:?} is not a number", i + 1, r[idx])))
            })
            .collect()
    }
}

pub fn parse_artifact(text: &str) -> Result<Artifact> {
    let mut header = ArtifactHeader::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                header.entries.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let columns = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(Artifact { header, columns, rows })
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    parse_artifact(&fs::read_to_string(path)?)
}

/// Reads a series from a CSV file. Uses the `value` column when present,
/// otherwise requires a single column.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let art = read_artifact(path)?;
    if art.columns.iter().any(|c| c == "value") {
        return art.column("value");
    }
    if art.columns.len() == 1 {
        let name = art.columns[0].clone();
        return art.column(&name);
    }
    Err(Error::Argument(format!("{}: expected a `value` column", path.display())))
}

/// `index,value` dump of a coefficient or autocovariance sequence.
pub fn index_value_rows(values: &[f64]) -> Vec<Vec<String>> {
    values.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]).collect()
}

pub fn write_index_value(path: &Path, header: &ArtifactHeader, values: &[f64]) -> Result<()> {
    write_artifact(path, header, &["index", "value"], &index_value_rows(values))
}

#[derive(Serialize, Deserialize)]
struct ArkSidecar {
    k: usize,
    v: f64,
    partials: Vec<f64>,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `j,phi_j` to `path` and `{k, v, partials}` next to it with a
/// `.json` extension.
pub fn write_ark_model(path: &Path, header: &ArtifactHeader, m: &ArkModel) -> Result<()> {
    let rows: Vec<Vec<String>> = m.phi.iter().enumerate().map(|(j, p)| vec![(j + 1).to_string(), fmt_f64(*p)]).collect();
    write_artifact(path, header, &["j", "phi_j"], &rows)?;
    let side = ArkSidecar { k: m.k, v: m.v, partials: m.partials.clone() };
    atomic_write(&sidecar_path(path), serde_json::to_string_pretty(&side)?.as_bytes())
}

pub fn read_ark_model(path: &Path) -> Result<ArkModel> {
    let phi = read_artifact(path)?.column("phi_j")?;
    let side: ArkSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    if side.k != phi.len() {
        return Err(Error::Argument(format!("sidecar order {} does not match {} coefficients", side.k, phi.len())));
    }
    Ok(ArkModel { k: side.k, phi, v: side.v, partials: side.partials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_round_trip() {
        let dir = std::env::temp_dir().join(format!("longmem-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.csv");
        let h = ArtifactHeader::new().with("seed", 7).with("version", "0.1.0");
        write_index_value(&p, &h, &[1.0, -0.1, 1e-300]).unwrap();
        let a = read_artifact(&p).unwrap();
        assert_eq!(a.header, h);
        assert_eq!(a.columns, vec!["index", "value"]);
        assert_eq!(a.column("value").unwrap(), vec![1.0, -0.1, 1e-300]);
        assert_eq!(read_values(&p).unwrap().len(), 3);
        let text = fs::read_to_string(&p).unwrap();
        assert!(!text.contains('\r'));
        assert!(fs::read_dir(&dir).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().contains(".tmp")));

        let m = ArkModel { k: 2, phi: vec![0.5, -0.25], v: 1.1, partials: vec![0.4, -0.25] };
        let q = dir.join("ark.csv");
        write_ark_model(&q, &ArtifactHeader::new(), &m).unwrap();
        assert_eq!(read_ark_model(&q).unwrap(), m);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn single_column_values() {
        let a = parse_artifact("x\n1.5\n2\n").unwrap();
        assert_eq!(a.column("x").unwrap(), vec![1.5, 2.0]);
        assert!(parse_artifact("value\nfoo\n").unwrap().column("value").is_err());
    }
}
