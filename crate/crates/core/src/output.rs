//! CSV artifacts with `#`-prefixed metadata lines ahead of the header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata written as `# key=value` lines at the top of every artifact.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Meta {
    lines: Vec<(String, String)>,
}

impl Meta {
    pub fn new(experiment: &str, config_hash: &str, seed: u64) -> Self {
        let mut m = Self::default();
        m.push("tool", format!("varorder {VERSION}"));
        m.push("experiment", experiment);
        m.push("config_hash", config_hash);
        m.push("seed", seed.to_string());
        m
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.lines.push((key.to_string(), value.into()));
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.push(key, value);
        self
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (k, v) in &self.lines {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }
}

/// Shortest round-trip decimal form, so identical values print identically.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Writes metadata, a header row and data rows to any writer.
pub fn write_csv_to<W: Write>(mut w: W, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    meta.write_to(&mut w)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.write_record(r)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_csv_to(BufWriter::new(File::create(path)?), meta, header, rows)
}

/// Splits an artifact into metadata pairs and CSV records.
pub fn read_csv(text: &str) -> Result<(Vec<(String, String)>, Vec<csv::StringRecord>)> {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ") {
            Some(kv) if body.is_empty() => {
                let (k, v) = kv.split_once('=').unwrap_or((kv, ""));
                meta.push((k.to_string(), v.to_string()));
            }
            _ => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut records = vec![rdr.headers()?.clone()];
    for r in rdr.records() {
        records.push(r?);
    }
    Ok((meta, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_with_metadata() {
        let meta = Meta::new("occupation", "abc", 3).with("note", "x");
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &meta, &["t", "v"], &[vec![num(1.0), num(0.1 + 0.2)]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# tool=varorder "));
        let (m, recs) = read_csv(&text).unwrap();
        assert_eq!(m[1], ("experiment".to_string(), "occupation".to_string()));
        assert_eq!(&recs[0][0], "t");
        assert_eq!(recs[1][1].parse::<f64>().unwrap(), 0.1 + 0.2);
    }
}
