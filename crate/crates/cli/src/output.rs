//! CSV and JSON writers. Numbers use the shortest representation that
//! round-trips, lines end in LF.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// `x1, …, xn` column names.
pub fn state_columns(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Dwell time as used in file names: `0`, `0.1`, `0.25`.
pub fn dwell_label(dwell: f64) -> String {
    format!("T{dwell}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_columns() {
        assert_eq!(dwell_label(0.0), "T0");
        assert_eq!(dwell_label(0.1), "T0.1");
        assert_eq!(state_columns(2), vec!["x1", "x2"]);
    }

    #[test]
    fn csv_uses_lf_and_round_trip_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv(&path, &["t".into(), "v".into()], vec![vec![0.0, 0.1], vec![1.0 / 3.0, 1e-300]]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("t,v\n0,0.1\n{},{}\n", 1.0 / 3.0, 1e-300));
        assert!(!text.contains('\r'));
    }
}
