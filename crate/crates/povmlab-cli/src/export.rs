//! Result persistence: JSON (full records), CSV (flattened scalars), and
//! plotdata (whitespace-separated columns per named distribution).

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::experiment::ResultRecord;

/// Export formats selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Plotdata,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(format!("unknown format {other} (json|csv|plotdata)")),
        }
    }
}

/// 17 significant digits: enough to round-trip any f64.
pub fn format_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// RFC-4180-style quoting: fields containing commas, quotes or newlines are
/// wrapped in quotes with inner quotes doubled.
fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Full records as a deterministic JSON array.
pub fn to_json(records: &[ResultRecord]) -> String {
    let mut out = serde_json::to_string_pretty(records).expect("records serialize");
    out.push('\n');
    out
}

pub fn write_json(records: &[ResultRecord], path: &Path) -> Result<PathBuf> {
    let file = path.join("results.json");
    fs::create_dir_all(path)?;
    fs::write(&file, to_json(records))?;
    Ok(file)
}

/// Flattened scalars: config echo columns, swept parameters, metrics,
/// check outcomes.
pub fn to_csv(records: &[ResultRecord]) -> String {
    let mut swept_names: BTreeSet<String> = BTreeSet::new();
    let mut metric_names: BTreeSet<String> = BTreeSet::new();
    let mut check_names: BTreeSet<String> = BTreeSet::new();
    for r in records {
        swept_names.extend(r.swept.keys().cloned());
        metric_names.extend(r.metrics.keys().cloned());
        check_names.extend(r.checks.iter().map(|c| c.name.clone()));
    }
    let mut lines = Vec::with_capacity(records.len() + 1);
    let mut header: Vec<String> = vec!["row".into(), "kind".into(), "hbar".into(), "seed".into()];
    header.extend(swept_names.iter().map(|n| format!("swept.{n}")));
    header.extend(metric_names.iter().cloned());
    header.extend(check_names.iter().map(|n| format!("pass.{n}")));
    header.push("all_passed".into());
    lines.push(
        header
            .iter()
            .map(|h| csv_quote(h))
            .collect::<Vec<_>>()
            .join(","),
    );
    for (idx, r) in records.iter().enumerate() {
        let mut row: Vec<String> = vec![
            idx.to_string(),
            csv_quote(r.config.kind.name()),
            format_f64(r.config.hbar),
            r.config.seed.to_string(),
        ];
        for name in &swept_names {
            row.push(
                r.swept
                    .get(name)
                    .map(|v| format_f64(*v))
                    .unwrap_or_default(),
            );
        }
        for name in &metric_names {
            row.push(
                r.metrics
                    .get(name)
                    .map(|v| format_f64(*v))
                    .unwrap_or_default(),
            );
        }
        for name in &check_names {
            row.push(
                r.checks
                    .iter()
                    .find(|c| &c.name == name)
                    .map(|c| if c.passed { "1" } else { "0" }.to_string())
                    .unwrap_or_default(),
            );
        }
        row.push(if r.passed_all() { "1" } else { "0" }.to_string());
        lines.push(row.join(","));
    }
    lines.join("\r\n") + "\r\n"
}

pub fn write_csv(records: &[ResultRecord], path: &Path) -> Result<PathBuf> {
    let file = path.join("results.csv");
    fs::create_dir_all(path)?;
    fs::write(&file, to_csv(records))?;
    Ok(file)
}

/// One file per named distribution per record: a `#` header line, then one
/// whitespace-separated row per cell.
pub fn write_plotdata(records: &[ResultRecord], path: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(path)?;
    let mut written = Vec::new();
    for (idx, r) in records.iter().enumerate() {
        for (name, values) in &r.distributions {
            let file = path.join(format!("record{idx:04}_{name}.dat"));
            let mut out = fs::File::create(&file)?;
            writeln!(out, "# index value")?;
            for (k, v) in values.iter().enumerate() {
                writeln!(out, "{k} {}", format_f64(*v))?;
            }
            written.push(file);
        }
    }
    Ok(written)
}

/// Parse a results.json back into records.
pub fn read_json(text: &str) -> Result<Vec<ResultRecord>> {
    serde_json::from_str(text).map_err(|e| crate::error::CliError::Validation(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_round_trips() {
        for &x in &[
            0.1,
            1.0 / 3.0,
            2.5e-17,
            123456.789,
            std::f64::consts::PI,
            -0.0037558039238999555,
        ] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x, back, "{s}");
        }
    }

    #[test]
    fn csv_quoting_follows_rfc4180() {
        assert_eq!(csv_quote("plain"), "plain");
        assert_eq!(csv_quote("a,b"), "\"a,b\"");
        assert_eq!(csv_quote("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
