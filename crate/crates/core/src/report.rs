//! CSV and JSON serialization of sweep reports.
//!
//! Both formats carry the same record fields. Numbers are written with at most 12
//! significant digits (records are quantized before emission, so parsing an emitted
//! report reproduces it exactly). Non-finite values are written as `inf`, `-inf` and
//! `nan`; in JSON they are strings.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::relations::{InequalityRecord, Soundness};
use crate::sweep::{quantize, OutputFormat, Provenance, SuiteSummary, SweepReport};

/// Column names of the record CSV, in order.
pub const CSV_HEADER: &str =
    "suite,name,alpha,beta,gamma,delta,dimA,dimB,seed,trial,lhs_bits,rhs_bits,margin_bits,soundness,converged";

const COLUMNS: usize = 15;

/// Text form of a real number: 12 significant digits, exponent notation for very small
/// or very large magnitudes.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let q = quantize(x);
    let magnitude = q.abs();
    if q != 0.0 && !(1e-4..1e15).contains(&magnitude) {
        format!("{q:e}")
    } else {
        format!("{q}")
    }
}

/// Inverse of [`format_number`].
pub fn parse_number(s: &str) -> Result<f64> {
    match s.trim() {
        "nan" | "NaN" => Ok(f64::NAN),
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::Report(format!("`{t}` is not a number"))),
    }
}

fn format_optional(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn record_fields(r: &InequalityRecord) -> [String; COLUMNS] {
    [
        r.suite.clone(),
        r.name.clone(),
        format_optional(r.alpha),
        format_optional(r.beta),
        format_optional(r.gamma),
        format_optional(r.delta),
        r.dim_a.to_string(),
        r.dim_b.to_string(),
        r.seed.to_string(),
        r.trial.to_string(),
        format_number(r.lhs_bits),
        format_number(r.rhs_bits),
        format_number(r.margin_bits),
        r.soundness.as_str().to_string(),
        r.converged.to_string(),
    ]
}

/// Records as CSV with the fixed header; an empty list gives the header line only.
pub fn records_to_csv(records: &[InequalityRecord]) -> String {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in records {
        writer
            .write_record(record_fields(r))
            .expect("writing to memory cannot fail");
    }
    let body = writer.into_inner().expect("writing to memory cannot fail");
    let mut out = String::with_capacity(CSV_HEADER.len() + 1 + body.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    out.push_str(std::str::from_utf8(&body).expect("fields are UTF-8"));
    out
}

fn parse_int<T: std::str::FromStr>(s: &str, column: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Report(format!("column {column}: `{s}` is not a non-negative integer")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        t => Err(Error::Report(format!("column converged: `{t}` is not true or false"))),
    }
}

fn parse_soundness(s: &str) -> Result<Soundness> {
    s.trim()
        .parse()
        .map_err(|_| Error::Report(format!("column soundness: unknown value `{}`", s.trim())))
}

fn parse_optional(s: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_number(s).map(Some)
    }
}

/// Parses a record CSV produced by [`records_to_csv`]. The header must match exactly.
pub fn records_from_csv(text: &str) -> Result<Vec<InequalityRecord>> {
    let mut lines = text.splitn(2, '\n');
    let header = lines.next().unwrap_or("").trim_end_matches('\r');
    if header != CSV_HEADER {
        return Err(Error::Report("CSV header does not match the record schema".to_string()));
    }
    let body = lines.next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Report(format!("row {}: {e}", i + 1)))?;
        if row.len() != COLUMNS {
            return Err(Error::Report(format!("row {}: expected {COLUMNS} fields, found {}", i + 1, row.len())));
        }
        let f = |k: usize| row.get(k).unwrap_or("");
        out.push(InequalityRecord {
            suite: f(0).to_string(),
            name: f(1).to_string(),
            alpha: parse_optional(f(2))?,
            beta: parse_optional(f(3))?,
            gamma: parse_optional(f(4))?,
            delta: parse_optional(f(5))?,
            dim_a: parse_int(f(6), "dimA")?,
            dim_b: parse_int(f(7), "dimB")?,
            seed: parse_int(f(8), "seed")?,
            trial: parse_int(f(9), "trial")?,
            lhs_bits: parse_number(f(10))?,
            rhs_bits: parse_number(f(11))?,
            margin_bits: parse_number(f(12))?,
            soundness: parse_soundness(f(13))?,
            converged: parse_bool(f(14))?,
        });
    }
    Ok(out)
}

fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(quantize(x))
    } else {
        Value::String(format_number(x))
    }
}

fn json_optional(x: Option<f64>) -> Value {
    x.map(json_number).unwrap_or(Value::Null)
}

fn record_to_json(r: &InequalityRecord) -> Value {
    json!({
        "suite": r.suite,
        "name": r.name,
        "alpha": json_optional(r.alpha),
        "beta": json_optional(r.beta),
        "gamma": json_optional(r.gamma),
        "delta": json_optional(r.delta),
        "dimA": r.dim_a,
        "dimB": r.dim_b,
        "seed": r.seed,
        "trial": r.trial,
        "lhs_bits": json_number(r.lhs_bits),
        "rhs_bits": json_number(r.rhs_bits),
        "margin_bits": json_number(r.margin_bits),
        "soundness": r.soundness.as_str(),
        "converged": r.converged,
    })
}

fn summary_to_json(s: &SuiteSummary) -> Value {
    json!({
        "suite": s.suite,
        "records": s.records,
        "passed": s.passed,
        "failed": s.failed,
        "certified": s.certified,
        "min_margin_bits": json_number(s.min_margin_bits),
        "mean_margin_bits": json_number(s.mean_margin_bits),
        "counterexample_candidates": s.counterexample_candidates,
    })
}

/// The full report as pretty-printed JSON.
pub fn report_to_json(report: &SweepReport) -> String {
    let value = json!({
        "records": report.records.iter().map(record_to_json).collect::<Vec<_>>(),
        "summary": report.summary.iter().map(summary_to_json).collect::<Vec<_>>(),
        "provenance": {
            "config": report.provenance.config,
            "library_version": report.provenance.library_version,
            "wall_time_seconds": json_number(report.provenance.wall_time_seconds),
        },
    });
    let mut text = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
    text.push('\n');
    text
}

struct Fields<'a> {
    map: &'a Map<String, Value>,
    context: String,
}

impl<'a> Fields<'a> {
    fn new(value: &'a Value, context: String) -> Result<Self> {
        let map = value
            .as_object()
            .ok_or_else(|| Error::Report(format!("{context}: expected an object")))?;
        Ok(Fields { map, context })
    }

    fn get(&self, key: &str) -> Result<&'a Value> {
        self.map
            .get(key)
            .ok_or_else(|| Error::Report(format!("{}: missing field `{key}`", self.context)))
    }

    fn err(&self, key: &str, what: &str) -> Error {
        Error::Report(format!("{}: field `{key}` {what}", self.context))
    }

    fn string(&self, key: &str) -> Result<String> {
        self.get(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| self.err(key, "must be a string"))
    }

    fn count(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .as_u64()
            .ok_or_else(|| self.err(key, "must be a non-negative integer"))
    }

    fn size(&self, key: &str) -> Result<usize> {
        usize::try_from(self.count(key)?).map_err(|_| self.err(key, "is too large"))
    }

    fn number(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Number(n) => n.as_f64().ok_or_else(|| self.err(key, "is not representable")),
            Value::String(s) => match s.as_str() {
                "inf" | "-inf" | "nan" => parse_number(s),
                _ => Err(self.err(key, "must be a number or inf, -inf, nan")),
            },
            _ => Err(self.err(key, "must be a number")),
        }
    }

    fn optional(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key)? {
            Value::Null => Ok(None),
            _ => self.number(key).map(Some),
        }
    }

    fn boolean(&self, key: &str) -> Result<bool> {
        self.get(key)?.as_bool().ok_or_else(|| self.err(key, "must be a boolean"))
    }
}

fn record_from_json(value: &Value, index: usize) -> Result<InequalityRecord> {
    let f = Fields::new(value, format!("records[{index}]"))?;
    Ok(InequalityRecord {
        suite: f.string("suite")?,
        name: f.string("name")?,
        alpha: f.optional("alpha")?,
        beta: f.optional("beta")?,
        gamma: f.optional("gamma")?,
        delta: f.optional("delta")?,
        dim_a: f.size("dimA")?,
        dim_b: f.size("dimB")?,
        seed: f.count("seed")?,
        trial: f.count("trial")?,
        lhs_bits: f.number("lhs_bits")?,
        rhs_bits: f.number("rhs_bits")?,
        margin_bits: f.number("margin_bits")?,
        soundness: f.string("soundness")?.parse().map_err(|_| f.err("soundness", "has an unknown value"))?,
        converged: f.boolean("converged")?,
    })
}

fn summary_from_json(value: &Value, index: usize) -> Result<SuiteSummary> {
    let f = Fields::new(value, format!("summary[{index}]"))?;
    Ok(SuiteSummary {
        suite: f.string("suite")?,
        records: f.size("records")?,
        passed: f.size("passed")?,
        failed: f.size("failed")?,
        certified: f.size("certified")?,
        min_margin_bits: f.number("min_margin_bits")?,
        mean_margin_bits: f.number("mean_margin_bits")?,
        counterexample_candidates: f.size("counterexample_candidates")?,
    })
}

fn array<'a>(f: &Fields<'a>, key: &str) -> Result<&'a Vec<Value>> {
    f.get(key)?.as_array().ok_or_else(|| f.err(key, "must be an array"))
}

/// Parses a report produced by [`report_to_json`].
pub fn report_from_json(text: &str) -> Result<SweepReport> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Report(format!("invalid JSON: {e}")))?;
    let top = Fields::new(&value, "report".to_string())?;
    let records = array(&top, "records")?
        .iter()
        .enumerate()
        .map(|(i, v)| record_from_json(v, i))
        .collect::<Result<Vec<_>>>()?;
    let summary = array(&top, "summary")?
        .iter()
        .enumerate()
        .map(|(i, v)| summary_from_json(v, i))
        .collect::<Result<Vec<_>>>()?;
    let p = Fields::new(top.get("provenance")?, "provenance".to_string())?;
    let provenance = Provenance {
        config: p.string("config")?,
        library_version: p.string("library_version")?,
        wall_time_seconds: p.number("wall_time_seconds")?,
    };
    for s in &summary {
        if s.passed + s.failed != s.records {
            return Err(Error::Report(format!("summary for `{}`: pass and fail counts do not add up", s.suite)));
        }
    }
    Ok(SweepReport {
        records,
        summary,
        provenance,
    })
}

/// Serializes a report. CSV carries the records only.
pub fn emit_report(report: &SweepReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => records_to_csv(&report.records),
        OutputFormat::Json => report_to_json(report),
    }
}

/// Writes a serialized report to `path`.
pub fn write_report(report: &SweepReport, format: OutputFormat, path: &Path) -> Result<()> {
    std::fs::write(path, emit_report(report, format))
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_record() -> InequalityRecord {
        InequalityRecord {
            suite: "sanity".into(),
            name: "nonneg-divergence".into(),
            alpha: Some(2.0),
            beta: None,
            gamma: Some(4.0 / 3.0),
            delta: None,
            dim_a: 2,
            dim_b: 2,
            seed: 7,
            trial: 3,
            lhs_bits: 2.0,
            rhs_bits: 0.0,
            margin_bits: 2.0,
            soundness: Soundness::Certified,
            converged: true,
        }
    }

    #[test]
    fn empty_records_give_header_only() {
        assert_eq!(records_to_csv(&[]), format!("{CSV_HEADER}\n"));
        assert!(records_from_csv(&records_to_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn numbers_use_twelve_digits() {
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(2.0 / 3.0 * 1e-9), "6.66666666667e-10");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(f64::NEG_INFINITY), "-inf");
        assert!(parse_number("nan").unwrap().is_nan());
    }

    #[test]
    fn csv_round_trip_is_exact_after_quantization() {
        let r = bell_record();
        let text = records_to_csv(std::slice::from_ref(&r));
        assert!(text.contains("sanity,nonneg-divergence,2,,1.33333333333,,2,2,7,3,2,0,2,certified,true"));
        let back = records_from_csv(&text).unwrap();
        assert_eq!(back[0].gamma, Some(1.33333333333));
        assert_eq!(records_to_csv(&back), text);
    }

    #[test]
    fn csv_rejects_wrong_schema() {
        assert!(records_from_csv("suite,name\n").is_err());
        let text = format!("{CSV_HEADER}\nsanity,x,1\n");
        assert!(records_from_csv(&text).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut r = bell_record();
        r.gamma = Some(quantize(4.0 / 3.0));
        let mut infinite = r.clone();
        infinite.alpha = Some(f64::INFINITY);
        infinite.lhs_bits = f64::NEG_INFINITY;
        let records = vec![r, infinite];
        let report = SweepReport {
            summary: crate::sweep::summarize(&records, 1e-6),
            records,
            provenance: Provenance {
                config: "suite = sanity\n".into(),
                library_version: "0.1.0".into(),
                wall_time_seconds: 1.5,
            },
        };
        let text = report_to_json(&report);
        assert!(text.contains("\"alpha\": \"inf\""));
        assert_eq!(report_from_json(&text).unwrap(), report);
        assert!(report_from_json("{\"records\": 3}").is_err());
    }
}
