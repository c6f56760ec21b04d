//! Frozen extended-precision Mittag-Leffler values.

use std::path::PathBuf;

#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
    pub value: f64,
}

/// Rows of `tests/data/mlf_series.csv`, each holding E_{α,β}(-x).
pub fn series_table() -> Vec<Row> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/mlf_series.csv");
    let text = std::fs::read_to_string(&path).expect("oracle table present");
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<f64> = line.split(',').map(|s| s.parse().expect("numeric field")).collect();
            Row { alpha: f[0], beta: f[1], x: f[2], value: f[3] }
        })
        .collect()
}

/// Relative error guarded against exact zeros of the reference.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}
