//! CSV traces and JSON reports.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly. Non-finite values become `null` in
//! JSON and an empty field in CSV.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::harness::experiment::RegretReport;

pub const CSV_HEADER: &str = "round,algo,loss,cum_loss,best_comp_loss,regret,bound,slack";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => fmt_f64(x),
        _ => String::new(),
    }
}

/// The per-round trace of one report, header included.
pub fn trace_csv(report: &RegretReport) -> String {
    let mut out = String::with_capacity(64 * (report.per_round.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let algo = csv_field(&report.algorithm);
    for row in &report.per_round {
        let fields = [
            row.round.to_string(),
            algo.clone(),
            fmt_opt(Some(row.loss)),
            fmt_opt(Some(row.cum_loss)),
            fmt_opt(row.best_comp_loss),
            fmt_opt(row.regret),
            fmt_opt(row.bound),
            fmt_opt(row.slack),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// serde_json formatter writing floats with 17 significant digits.
#[derive(Default)]
struct SigDigits {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_f64(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// Pretty JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn report_json(report: &RegretReport) -> serde_json::Result<String> {
    to_json(report)
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// File stem used for a (scenario, algorithm) pair.
pub fn output_stem(report: &RegretReport) -> String {
    let clean = |s: &str| {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect::<String>()
    };
    format!("{}__{}", clean(&report.scenario), clean(&report.algorithm))
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`.
pub fn write_report(dir: &Path, report: &RegretReport) -> io::Result<(std::path::PathBuf, std::path::PathBuf)> {
    let stem = output_stem(report);
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    write_atomic(&csv, &trace_csv(report))?;
    let body = report_json(report).map_err(io::Error::other)?;
    write_atomic(&json, &body)?;
    Ok((csv, json))
}
