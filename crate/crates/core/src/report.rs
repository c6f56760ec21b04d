//! Serialization of results: JSON with 17 significant digits and plot-ready
//! CSV. Non-finite numbers become `null` in JSON and `nan`/`inf` in CSV.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::linear::SolutionTrajectory;
use crate::norms;
use crate::strichartz::ConstantEstimate;

/// Version of the JSON layouts written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// A finite float with 17 significant digits, `nan`, `inf` or `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON whose floats carry exactly 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `value` as pretty JSON with 17-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Rows (t, mode_index, u_k, du_k) with 1-based mode indices; du_k is empty
/// when the derivative was not computed.
pub fn trajectory_csv(trajectory: &SolutionTrajectory) -> String {
    let mut out = String::from("t,mode_index,u_k,du_k\n");
    let du = trajectory.modal_du.as_ref();
    for (j, &t) in trajectory.times().iter().enumerate() {
        for (k, &u) in trajectory.modal_u.row(j).iter().enumerate() {
            let d = du.map(|d| fmt_f64(d[[j, k]])).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(t), k + 1, fmt_f64(u), d);
        }
    }
    out
}

/// Per-node norms of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub schema_version: u32,
    pub alpha: f64,
    pub modes: usize,
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub velocity_l2: Option<Vec<f64>>,
}

pub fn trajectory_summary(trajectory: &SolutionTrajectory) -> TrajectorySummary {
    let basis = &trajectory.basis;
    TrajectorySummary {
        schema_version: SCHEMA_VERSION,
        alpha: trajectory.alpha,
        modes: basis.mode_count(),
        times: trajectory.times().to_vec(),
        l2: norms::sobolev_profile(basis, &trajectory.modal_u, 0.0),
        velocity_l2: trajectory.modal_du.as_ref().map(|d| norms::sobolev_profile(basis, d, 0.0)),
    }
}

/// Raw draws of a constant estimate: (horizon, kind, trial, numerator, denominator, ratio).
pub fn draws_csv(estimate: &ConstantEstimate) -> String {
    let mut out = String::from("horizon,kind,trial,numerator,denominator,ratio\n");
    for d in &estimate.draws {
        let ratio = d.ratio.map(fmt_f64).unwrap_or_else(|| "degenerate".into());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(d.horizon),
            d.kind.label(),
            d.trial,
            fmt_f64(d.numerator),
            fmt_f64(d.denominator),
            ratio
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: Vec<f64>,
        c: Option<f64>,
    }

    #[test]
    fn floats_round_trip_with_17_digits() {
        let s = Sample { a: 0.1, b: vec![1.0 / 3.0, f64::NAN, -2.5e-300], c: None };
        let json = to_json(&s).unwrap();
        assert!(json.contains("1.0000000000000001e-1"));
        assert!(json.contains("null"));
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
        assert_eq!(back["b"][0].as_f64(), Some(1.0 / 3.0));
        assert_eq!(back["b"][2].as_f64(), Some(-2.5e-300));
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_f64(1.0).parse::<f64>().unwrap(), 1.0);
    }
}
