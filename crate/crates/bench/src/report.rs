//! Result tables: one row per method, one column per condition, cells `ER/EL/SR`.

use std::path::{Path, PathBuf};

use crate::metrics::MetricsSummary;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub method: String,
    pub condition: String,
    pub summary: MetricsSummary,
}

impl Entry {
    pub fn new(method: impl Into<String>, condition: impl Into<String>, summary: MetricsSummary) -> Self {
        Self { method: method.into(), condition: condition.into(), summary }
    }
}

pub fn cell(m: &MetricsSummary) -> String {
    format!("{:.0}/{:.0}/{:.2}", m.er, m.el, m.sr)
}

/// Header plus rows, in first-appearance order of methods and conditions.
pub fn table(entries: &[Entry]) -> Vec<Vec<String>> {
    let mut methods: Vec<&str> = Vec::new();
    let mut conditions: Vec<&str> = Vec::new();
    for e in entries {
        if !methods.contains(&e.method.as_str()) {
            methods.push(&e.method);
        }
        if !conditions.contains(&e.condition.as_str()) {
            conditions.push(&e.condition);
        }
    }
    let mut rows =
        vec![std::iter::once("method").chain(conditions.iter().copied()).map(String::from).collect::<Vec<_>>()];
    for m in &methods {
        let mut row = vec![m.to_string()];
        for c in &conditions {
            let hit = entries.iter().rev().find(|e| e.method == *m && e.condition == *c);
            row.push(hit.map_or_else(|| "-".to_string(), |e| cell(&e.summary)));
        }
        rows.push(row);
    }
    rows
}

pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.txt`.
pub fn report(entries: &[Entry], stem: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    let rows = table(entries);
    let csv_path = stem.with_extension("csv");
    let txt_path = stem.with_extension("txt");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for r in &rows {
        w.write_record(r)?;
    }
    w.flush()?;
    std::fs::write(&txt_path, aligned(&rows))?;
    Ok((csv_path, txt_path))
}
