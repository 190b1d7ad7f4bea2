//! JSON run report and CSV convergence trace.

use std::io::{self, Write};

use osborne::pipeline::TraceRow;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as DeriveSerialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, DeriveSerialize, Deserialize)]
pub struct ComponentSummary {
    pub id: usize,
    pub nodes: Vec<usize>,
    pub status: String,
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reactivations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_exit: Option<String>,
    pub max_imbalance: f64,
    pub f_initial: f64,
    pub f_final: f64,
}

/// Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, DeriveSerialize, Deserialize)]
pub struct RunReport {
    pub termination: String,
    pub variant: String,
    pub n: usize,
    pub p: f64,
    pub epsilon: f64,
    pub canonical_epsilon: f64,
    pub seed: u64,
    pub iterations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reactivations: Option<u64>,
    pub max_imbalance: f64,
    pub f_initial: f64,
    pub f_final: f64,
    pub components: Vec<ComponentSummary>,
    /// Scaling of the canonical instance.
    pub x: Vec<f64>,
    /// Scaling of the raw matrix in the L_p norm, `x / p`; present when `p != 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_over_p: Option<Vec<f64>>,
    pub wall_time_seconds: f64,
}

/// Pretty printer that writes every float with 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

fn float_text(value: f64) -> String {
    format!("{value:.16e}")
}

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(float_text(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

/// Serializes `report` as pretty JSON with 17-digit floats. Non-finite
/// floats become `null`.
pub fn write_report<W: Write>(report: &RunReport, writer: W) -> Result<(), CliError> {
    let mut ser =
        serde_json::Serializer::with_formatter(writer, FullPrecision(PrettyFormatter::new()));
    report.serialize(&mut ser)?;
    let mut writer = ser.into_inner();
    writer.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}

pub fn report_to_string(report: &RunReport) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_report(report, &mut buf)?;
    Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
}

pub const TRACE_HEADER: [&str; 7] = ["t", "s", "index", "drop", "f", "grad_norm", "active_count"];

/// Writes trace rows as CSV. `f` and `grad_norm` are the contracted objective
/// and gradient norm at the state the step was taken from.
pub fn write_trace<W: Write>(rows: &[TraceRow], writer: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(TRACE_HEADER)?;
    for row in rows {
        let r = &row.record;
        out.write_record([
            r.t.to_string(),
            r.phase.to_string(),
            r.index.to_string(),
            float_text(r.drop),
            float_text(r.f_before),
            float_text(r.grad_norm),
            r.active_count.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            termination: "balanced".into(),
            variant: "strict".into(),
            n: 2,
            p: 2.0,
            epsilon: 0.01,
            canonical_epsilon: 0.0201,
            seed: 0,
            iterations: 1,
            phases: Some(1),
            reactivations: Some(0),
            max_imbalance: 1.0 / 3.0,
            f_initial: 0.1 + 0.2,
            f_final: 4.0,
            components: vec![ComponentSummary {
                id: 0,
                nodes: vec![0, 1],
                status: "balanced".into(),
                steps: 1,
                phases: Some(1),
                reactivations: Some(0),
                strict_exit: Some("all_frozen".into()),
                max_imbalance: 1e-300,
                f_initial: 5.0,
                f_final: 4.0,
            }],
            x: vec![std::f64::consts::LN_2, 0.0],
            x_over_p: Some(vec![std::f64::consts::LN_2 / 2.0, -0.0]),
            wall_time_seconds: 0.125,
        }
    }

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(float_text(0.1), "1.0000000000000001e-1");
        assert_eq!(float_text(1.0), "1.0000000000000000e0");
        let text = report_to_string(&sample()).unwrap();
        assert!(text.contains("\"f_initial\": 3.0000000000000004e-1"));
    }

    #[test]
    fn report_round_trips() {
        let report = sample();
        let text = report_to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(report_to_string(&back).unwrap(), text);
    }

    #[test]
    fn field_order_is_stable() {
        let text = report_to_string(&sample()).unwrap();
        let keys = [
            "\"termination\"",
            "\"n\"",
            "\"iterations\"",
            "\"components\"",
            "\"x\"",
            "\"wall_time_seconds\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn classic_reports_omit_strict_fields() {
        let mut report = sample();
        report.phases = None;
        report.reactivations = None;
        report.x_over_p = None;
        let text = report_to_string(&report).unwrap();
        assert!(text.contains("\"reactivations\": 0"));
        assert!(!text.contains("\"x_over_p\""));
        let top: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(top.get("phases").is_none());
    }
}
