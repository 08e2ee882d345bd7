//! Tabular results: a fixed-schema CSV row per measured number.
//!
//! The writer is deliberately hand-rolled: floats print with Rust's
//! shortest round-trip formatting and fields quote per RFC 4180 only when
//! needed, so identical runs produce identical bytes.

use crate::config::{CliError, CliResult};
use smoothing_core::GridSpec;

/// Fixed column order of schema 1.
pub const CSV_HEADER: &str = "schema,symbol,flags,study,kind,weight,smoother,grid,t_window,time_samples,ladder,ladder_value,value,method,residual";

/// One measured number with its full context.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub symbol: String,
    /// Classification flags `H=./L=./HL=./Lp=.` or `-`.
    pub flags: String,
    pub study: String,
    pub kind: String,
    pub weight: String,
    pub smoother: String,
    pub grid: String,
    pub t_window: Option<f64>,
    pub time_samples: Option<usize>,
    /// Name of the ladder variable (`width`, `points`, `member`, ...).
    pub ladder: String,
    /// Position on the ladder; the tertiary sort key of merged reports.
    pub ladder_value: f64,
    pub value: f64,
    pub method: String,
    pub residual: Option<f64>,
}

impl ReportRow {
    /// Context-free skeleton; callers fill the fields that apply.
    pub fn new(symbol: &str, study: &str, kind: &str, value: f64) -> Self {
        ReportRow {
            symbol: symbol.to_string(),
            flags: "-".into(),
            study: study.to_string(),
            kind: kind.to_string(),
            weight: "-".into(),
            smoother: "-".into(),
            grid: "-".into(),
            t_window: None,
            time_samples: None,
            ladder: "-".into(),
            ladder_value: 0.0,
            value,
            method: "-".into(),
            residual: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if !self.ladder_value.is_finite() || !self.value.is_finite() {
            return Err(CliError::Runtime(format!(
                "non-finite cell in row {}/{}/{}: ladder_value {}, value {}",
                self.symbol, self.study, self.kind, self.ladder_value, self.value
            )));
        }
        if let Some(r) = self.residual {
            if !r.is_finite() {
                return Err(CliError::Runtime(format!(
                    "non-finite residual in row {}/{}/{}",
                    self.symbol, self.study, self.kind
                )));
            }
        }
        if let Some(t) = self.t_window {
            if !t.is_finite() {
                return Err(CliError::Runtime("non-finite window in row".into()));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let cells = [
            "1".to_string(),
            escape(&self.symbol),
            escape(&self.flags),
            escape(&self.study),
            escape(&self.kind),
            escape(&self.weight),
            escape(&self.smoother),
            escape(&self.grid),
            opt_num(self.t_window),
            self.time_samples.map_or_else(|| "-".into(), |n| n.to_string()),
            escape(&self.ladder),
            format!("{}", self.ladder_value),
            format!("{}", self.value),
            escape(&self.method),
            opt_num(self.residual),
        ];
        cells.join(",")
    }

    pub fn from_csv(line: &str) -> CliResult<ReportRow> {
        let cells = split_csv(line)?;
        if cells.len() != 15 {
            return Err(CliError::MissingArtifacts(format!(
                "row has {} cells, schema 1 has 15: `{line}`",
                cells.len()
            )));
        }
        if cells[0] != "1" {
            return Err(CliError::MissingArtifacts(format!(
                "unsupported row schema `{}`",
                cells[0]
            )));
        }
        Ok(ReportRow {
            symbol: cells[1].clone(),
            flags: cells[2].clone(),
            study: cells[3].clone(),
            kind: cells[4].clone(),
            weight: cells[5].clone(),
            smoother: cells[6].clone(),
            grid: cells[7].clone(),
            t_window: parse_opt(&cells[8])?,
            time_samples: match cells[9].as_str() {
                "-" => None,
                s => Some(s.parse().map_err(|_| bad_cell(s))?),
            },
            ladder: cells[10].clone(),
            ladder_value: cells[11].parse().map_err(|_| bad_cell(&cells[11]))?,
            value: cells[12].parse().map_err(|_| bad_cell(&cells[12]))?,
            method: cells[13].clone(),
            residual: parse_opt(&cells[14])?,
        })
    }
}

fn bad_cell(cell: &str) -> CliError {
    CliError::MissingArtifacts(format!("unreadable numeric cell `{cell}`"))
}

fn parse_opt(cell: &str) -> CliResult<Option<f64>> {
    if cell == "-" {
        return Ok(None);
    }
    Ok(Some(cell.parse().map_err(|_| bad_cell(cell))?))
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x}"))
}

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn split_csv(line: &str) -> CliResult<Vec<String>> {
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' if cur.is_empty() => quoted = true,
            ',' if !quoted => cells.push(std::mem::take(&mut cur)),
            c => cur.push(c),
        }
    }
    if quoted {
        return Err(CliError::MissingArtifacts(format!("unterminated quote in `{line}`")));
    }
    cells.push(cur);
    Ok(cells)
}

/// Compact grid label without commas, e.g. `L=32x32 N=64x64`.
pub fn grid_label(grid: &GridSpec) -> String {
    let lens: Vec<String> = grid.lens().iter().map(|l| format!("{l}")).collect();
    let pts: Vec<String> = grid.point_counts().iter().map(|n| n.to_string()).collect();
    format!("L={} N={}", lens.join("x"), pts.join("x"))
}

/// Merge order of reports: symbol, then study, then ladder position, with
/// the remaining text columns as total-order tiebreakers.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        (&a.symbol, &a.study)
            .cmp(&(&b.symbol, &b.study))
            .then(a.ladder_value.total_cmp(&b.ladder_value))
            .then_with(|| (&a.kind, &a.ladder).cmp(&(&b.kind, &b.ladder)))
            .then_with(|| a.to_csv().cmp(&b.to_csv()))
    });
}

/// Header plus one line per row, `\n`-terminated.
pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> CliResult<Vec<ReportRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(CliError::MissingArtifacts(format!(
                "unexpected CSV header {other:?}"
            )))
        }
    }
    lines.filter(|l| !l.is_empty()).map(ReportRow::from_csv).collect()
}
