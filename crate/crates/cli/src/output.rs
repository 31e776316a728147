//! Artifact formatting and atomic writes.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

pub const SIG_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits; `-0` becomes `0`.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every non-integer JSON number in place.
pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// CSV cell for a float, matching the JSON rendering.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&round_sig(x)).expect("finite float serializes")
    } else {
        twwc::serde_num::label(x).to_string()
    }
}

/// One command result in both renderings.
pub struct Artifact {
    pub json: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Artifact {
    pub fn new(json: Value, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Artifact { json, header: header.iter().map(|s| s.to_string()).collect(), rows }
    }

    pub fn render(mut self, csv: bool) -> Result<Vec<u8>, CliError> {
        if !csv {
            round_value(&mut self.json);
            let mut out = serde_json::to_vec_pretty(&self.json).map_err(|e| CliError::Other(e.to_string()))?;
            out.push(b'\n');
            return Ok(out);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| CliError::Other(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| CliError::Other(e.to_string()))?;
        }
        w.into_inner().map_err(|e| CliError::Other(e.to_string()))
    }
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Other(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1234567890123456), 0.123456789012);
        assert_eq!(round_sig(2f64.ln()), 0.693147180560);
        assert_eq!(cell(f64::INFINITY), "inf");
        assert_eq!(cell(1.0 / 3.0), "0.333333333333");
        assert_eq!(cell(-0.0), "0.0");
    }

    #[test]
    fn json_and_csv_agree() {
        let x = std::f64::consts::PI * 1e-7;
        let mut v = serde_json::json!({ "a": x, "k": 3 });
        round_value(&mut v);
        assert_eq!(v["a"].to_string(), cell(x));
        assert_eq!(v["k"], 3);
    }
}
