use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bench::run::ReportRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::config(format!(
                "unknown report format `{other}` (expected csv|md)"
            ))),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// One line per row; accuracy with 4 decimals, distances with 3.
pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::data("report has no rows"));
    }
    let mut out = String::from("approach,accuracy,dist_mean,dist_std\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.4},{:.3},{:.3}",
            csv_field(&r.approach),
            r.accuracy,
            r.dist_mean,
            r.dist_std
        );
    }
    Ok(out)
}

pub fn report_markdown(rows: &[ReportRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::data("report has no rows"));
    }
    let with_failures = rows.iter().any(|r| r.failed > 0);
    let mut out = String::from("| Approach | Accuracy | Pixel Distance μ | Pixel Distance σ |");
    out.push_str(if with_failures { " Failed |\n" } else { "\n" });
    out.push_str("|---|---:|---:|---:|");
    out.push_str(if with_failures { "---:|\n" } else { "\n" });
    for r in rows {
        let _ = write!(
            out,
            "| {} | {:.4} | {:.3} | {:.3} |",
            r.approach.replace('|', "\\|"),
            r.accuracy,
            r.dist_mean,
            r.dist_std
        );
        if with_failures {
            let _ = write!(out, " {} |", r.failed);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Csv => report_csv(rows)?,
        ReportFormat::Markdown => report_markdown(rows)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
