//! Lattice input and CSV output.

use std::path::Path;

use serde::Deserialize;
use toda_core::lattice::{Background, JacobiCoefficients};
use toda_core::ode::Trajectory;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeFile {
    #[serde(default = "default_start")]
    window_start: i64,
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default)]
    background: Option<Background>,
}

fn default_start() -> i64 {
    1
}

/// Reads `{"window_start": 1, "a": [...], "b": [...], "background": {"kind": "none"}}`;
/// `window_start` defaults to 1 and `background` to none.
pub fn read_lattice(path: &Path) -> Result<JacobiCoefficients, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_lattice(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_lattice(text: &str) -> Result<JacobiCoefficients, CliError> {
    let f: LatticeFile = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    JacobiCoefficients::new(f.window_start, f.a, f.b, f.background.unwrap_or(Background::None))
        .map_err(|e| CliError::Config(format!("invalid lattice: {e}")))
}

/// 17 significant digits, enough to read the same binary64 back.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// `n,a,b`, one row per site of the window.
pub fn coefficients_csv(q: &JacobiCoefficients) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "a", "b"]).map_err(csv_err)?;
    for (k, b) in q.b.iter().enumerate() {
        let n = q.window_start + k as i64;
        w.write_record([n.to_string(), fmt_f64(q.a[k]), fmt_f64(*b)]).map_err(csv_err)?;
    }
    finish(w)
}

/// `t,n,a,b`, one row per (time, site).
pub fn trajectory_csv(tr: &Trajectory) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "n", "a", "b"]).map_err(csv_err)?;
    for (t, q) in tr.times.iter().zip(&tr.states) {
        for (k, b) in q.b.iter().enumerate() {
            let n = q.window_start + k as i64;
            w.write_record([fmt_f64(*t), n.to_string(), fmt_f64(q.a[k]), fmt_f64(*b)])
                .map_err(csv_err)?;
        }
    }
    finish(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_defaults_and_round_trip() {
        let q = parse_lattice(r#"{"a": [1.0, 0.5], "b": [0.1, 0.2]}"#).unwrap();
        assert_eq!(q.window_start, 1);
        assert_eq!(q.background, Background::None);
        let csv = coefficients_csv(&q).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,a,b"));
        let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "2");
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.5);
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.2);
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn bad_lattice_is_config_error() {
        assert_eq!(parse_lattice(r#"{"a": [1.0], "b": [0.1, 0.2, 0.3]}"#).unwrap_err().exit_code(), 2);
        assert_eq!(parse_lattice("{").unwrap_err().exit_code(), 2);
    }
}
