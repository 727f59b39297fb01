//! Comparison tables over run records.

use crate::error::{Error, Result};
use crate::search::RunRecord;

pub const REPORT_COLUMNS: [&str; 8] = [
    "system",
    "method",
    "eta",
    "architecture",
    "heldout_accuracy",
    "test_accuracy",
    "params",
    "wall_time_secs",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub system: String,
    pub method: String,
    pub eta: f64,
    pub architecture: String,
    pub heldout_accuracy: f64,
    pub test_accuracy: Option<f64>,
    /// Recounted from the stored candidate.
    pub params: usize,
    pub wall_time_secs: f64,
}

/// One row per record, best test accuracy first; equal accuracies keep
/// system-id order. Records without test metrics sort last.
pub fn report_rows(records: &[RunRecord]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = records
        .iter()
        .map(|r| ReportRow {
            system: r.system.clone(),
            method: r.method.to_string(),
            eta: r.eta,
            architecture: r.architecture.clone(),
            heldout_accuracy: r.heldout.accuracy,
            test_accuracy: r.test_accuracy(),
            params: r.spec.param_count(),
            wall_time_secs: r.wall_time_secs,
        })
        .collect();
    rows.sort_by(|a, b| {
        let ta = a.test_accuracy.unwrap_or(f64::NEG_INFINITY);
        let tb = b.test_accuracy.unwrap_or(f64::NEG_INFINITY);
        tb.total_cmp(&ta).then_with(|| a.system.cmp(&b.system))
    });
    rows
}

fn cells(r: &ReportRow) -> [String; 8] {
    [
        r.system.clone(),
        r.method.clone(),
        format!("{}", r.eta),
        r.architecture.clone(),
        format!("{:.4}", r.heldout_accuracy),
        r.test_accuracy.map_or_else(String::new, |t| format!("{t:.4}")),
        r.params.to_string(),
        format!("{:.2}", r.wall_time_secs),
    ]
}

pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Format {
        path: "report.csv".into(),
        msg: e.to_string(),
    };
    w.write_record(REPORT_COLUMNS).map_err(wrap)?;
    for r in rows {
        w.write_record(cells(r)).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format {
        path: "report.csv".into(),
        msg: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn report_markdown(rows: &[ReportRow]) -> String {
    let header = [
        "System",
        "Method",
        "η",
        "Architecture",
        "Held-out acc",
        "Test acc",
        "#Params",
        "Time (s)",
    ];
    let mut out = format!("| {} |\n", header.join(" | "));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        let c = cells(r).map(|s| s.replace('|', "\\|"));
        out.push_str(&format!("| {} |\n", c.join(" | ")));
    }
    out
}
