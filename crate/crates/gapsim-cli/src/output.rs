//! Bit-stable CSV and JSON writers.
//!
//! Floats are rendered with 17 significant digits so files diff byte-exactly
//! across reruns; JSON objects use sorted keys (serde_json's default map).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gapsim::stats::EstimateWithCi;
use gapsim::{Error, Result};

/// 17-significant-digit rendering; round-trips f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

pub struct CsvWriter {
    path: PathBuf,
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: PathBuf, header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        CsvWriter { path, buf, columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "row width mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> Result<PathBuf> {
        write_atomic(&self.path, self.buf.as_bytes())?;
        Ok(self.path)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Param(format!("cannot write {}: {e}", path.display()));
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().ok();
    fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Param(format!("json render: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `{value, lo, hi, n}` object for summaries.
pub fn ci_json(e: &EstimateWithCi) -> serde_json::Value {
    serde_json::json!({
        "value": e.value,
        "lo": e.lo,
        "hi": e.hi,
        "n": e.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_rendering_round_trips() {
        for x in [0.0, -1.5, std::f64::consts::PI, 1.0 / 3.0, 1e-300, -2.5e17] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
