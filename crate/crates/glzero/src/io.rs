//! Artifact persistence: JSON envelopes for structured results, CSV for
//! tables, and flat binary with a one-line JSON header for complex fields.
//! All writers are deterministic functions of their inputs so reruns with
//! the same config and seed produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Wrapper written around every JSON result: schema version, an echo of
/// the effective configuration, and the seed all randomness flowed from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResultEnvelope<T> {
    pub schema: u32,
    pub config: serde_json::Value,
    pub seed: u64,
    pub payload: T,
}

impl<T: Serialize> ResultEnvelope<T> {
    pub fn new(config: serde_json::Value, seed: u64, payload: T) -> Self {
        ResultEnvelope {
            schema: SCHEMA_VERSION,
            config,
            seed,
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

pub fn read_envelope<T: DeserializeOwned>(path: &Path) -> Result<ResultEnvelope<T>> {
    let text = std::fs::read_to_string(path)?;
    let env: ResultEnvelope<T> = serde_json::from_str(&text)?;
    if env.schema != SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "schema version {} (expected {})",
            env.schema, SCHEMA_VERSION
        )));
    }
    Ok(env)
}

/// Shortest-round-trip float formatting (Rust's default Display), so CSV
/// values reparse exactly and output bytes are reproducible.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::invalid("CSV row width does not match header"));
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    parse_csv(&std::fs::read_to_string(path)?)
}

pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::invalid("empty CSV"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad number {c:?} on CSV line {}", k + 2)))
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            return Err(Error::invalid(format!("CSV line {} width mismatch", k + 2)));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Extract a named column from a parsed CSV.
pub fn csv_column(header: &[String], rows: &[Vec<f64>], name: &str) -> Result<Vec<f64>> {
    let k = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::invalid(format!("CSV missing column {name:?}")))?;
    Ok(rows.iter().map(|r| r[k]).collect())
}

/// Field container: one JSON header line, then the named blocks in order,
/// each as little-endian f64 interleaved re/im pairs.
pub struct FieldFile {
    pub header: serde_json::Value,
    pub blocks: Vec<(String, Vec<Complex64>)>,
}

pub fn write_field(path: &Path, mut header: serde_json::Value, blocks: &[(&str, &[Complex64])]) -> Result<()> {
    let obj = header
        .as_object_mut()
        .ok_or_else(|| Error::invalid("field header must be a JSON object"))?;
    obj.insert(
        "blocks".into(),
        serde_json::json!(blocks
            .iter()
            .map(|(name, data)| serde_json::json!({"name": name, "len": data.len()}))
            .collect::<Vec<_>>()),
    );
    obj.insert("schema".into(), serde_json::json!(SCHEMA_VERSION));
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", serde_json::Value::Object(obj.clone()))?;
    for (_, data) in blocks {
        for z in *data {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: serde_json::Value = serde_json::from_str(&line)?;
    let specs = header
        .get("blocks")
        .and_then(|b| b.as_array())
        .ok_or_else(|| Error::invalid("field header missing blocks"))?
        .clone();
    let mut blocks = Vec::new();
    for spec in &specs {
        let name = spec
            .get("name")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::invalid("block spec missing name"))?
            .to_string();
        let len = spec
            .get("len")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::invalid("block spec missing len"))? as usize;
        let mut raw = vec![0u8; len * 16];
        reader.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        blocks.push((name, data));
    }
    Ok(FieldFile { header, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trip() {
        let env = ResultEnvelope::new(serde_json::json!({"b": 0.7}), 42, vec![1.0, -0.5]);
        let text = env.to_json().unwrap();
        let back: ResultEnvelope<Vec<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, env);
    }

    #[test]
    fn csv_round_trip_exact_floats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![vec![0.1 + 0.2, -1.0 / 3.0], vec![f64::MIN_POSITIVE, 2e300]];
        write_csv(&path, &["a", "b"], &rows).unwrap();
        let (header, back) = read_csv(&path).unwrap();
        assert_eq!(header, ["a", "b"]);
        assert_eq!(back, rows);
    }

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let psi = vec![Complex64::new(1.5, -2.5), Complex64::new(0.0, 3.25)];
        let a = vec![Complex64::new(0.125, 0.25)];
        write_field(
            &path,
            serde_json::json!({"nx": 2, "ny": 1}),
            &[("psi", &psi), ("a", &a)],
        )
        .unwrap();
        let f = read_field(&path).unwrap();
        assert_eq!(f.header["nx"], 2);
        assert_eq!(f.blocks[0].0, "psi");
        assert_eq!(f.blocks[0].1, psi);
        assert_eq!(f.blocks[1].1, a);
    }
}
