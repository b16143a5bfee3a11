use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DsrError, RunMetrics};

pub const CSV_HEADER: [&str; 9] = [
    "benchmark",
    "run",
    "seed",
    "lambda",
    "with_mlm",
    "recovered",
    "steps",
    "invalid_fraction",
    "best_expression",
];

/// One CSV record. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub benchmark: String,
    pub run: usize,
    pub seed: u64,
    pub lambda: f64,
    pub with_mlm: bool,
    pub recovered: bool,
    pub steps: usize,
    pub invalid_fraction: f64,
    pub best_expression: String,
}

impl From<&RunMetrics> for MetricsRow {
    fn from(m: &RunMetrics) -> Self {
        MetricsRow {
            benchmark: m.benchmark.clone(),
            run: m.run,
            seed: m.seed,
            lambda: m.lambda,
            with_mlm: m.with_mlm,
            recovered: m.recovered,
            steps: m.steps,
            invalid_fraction: m.invalid_fraction,
            best_expression: m.best_expression.clone(),
        }
    }
}

fn csv_err(e: csv::Error) -> DsrError {
    DsrError::Schema(e.to_string())
}

/// Writes rows; the header is written only when `header` is set so sweeps
/// can append blocks to one file.
pub fn write_metrics<W: Write>(out: W, rows: &[MetricsRow], header: bool) -> Result<(), DsrError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(CSV_HEADER).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows, rejecting any header other than [`CSV_HEADER`].
pub fn read_metrics<R: Read>(input: R) -> Result<Vec<MetricsRow>, DsrError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(DsrError::Schema(format!(
            "unexpected header {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            CSV_HEADER.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Aggregate of the runs of one benchmark under one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub runs: usize,
    /// Percentage of recovered runs.
    pub recovery: f64,
    pub mean_steps: f64,
    /// Mean per-run invalid fraction, as a percentage.
    pub mean_invalid: f64,
}

impl Summary {
    pub fn of(rows: &[&MetricsRow]) -> Summary {
        let n = rows.len() as f64;
        Summary {
            runs: rows.len(),
            recovery: 100.0 * rows.iter().filter(|r| r.recovered).count() as f64 / n,
            mean_steps: rows.iter().map(|r| r.steps as f64).sum::<f64>() / n,
            mean_invalid: 100.0 * rows.iter().map(|r| r.invalid_fraction).sum::<f64>() / n,
        }
    }

    /// Unweighted mean over benchmarks, as in a table footer.
    fn average(cells: &[Summary]) -> Option<Summary> {
        if cells.is_empty() {
            return None;
        }
        let n = cells.len() as f64;
        Some(Summary {
            runs: cells.iter().map(|c| c.runs).sum(),
            recovery: cells.iter().map(|c| c.recovery).sum::<f64>() / n,
            mean_steps: cells.iter().map(|c| c.mean_steps).sum::<f64>() / n,
            mean_invalid: cells.iter().map(|c| c.mean_invalid).sum::<f64>() / n,
        })
    }
}

/// A column group: every run sharing the prior flag and `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportColumn {
    pub with_mlm: bool,
    pub lambda: f64,
}

impl ReportColumn {
    pub fn label(&self) -> String {
        if self.with_mlm {
            format!("with MLM (lambda={})", self.lambda)
        } else {
            "without MLM".to_owned()
        }
    }
}

pub type ReportCell = Option<Summary>;

/// Side-by-side comparison: one row per benchmark, one column group per
/// configuration, and an average row over the benchmarks present.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub columns: Vec<ReportColumn>,
    pub rows: Vec<(String, Vec<ReportCell>)>,
    pub average: Vec<ReportCell>,
}

impl Report {
    /// Benchmarks and columns appear in first-seen order.
    pub fn build(rows: &[MetricsRow]) -> Report {
        let mut columns: Vec<ReportColumn> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        for r in rows {
            let col = ReportColumn { with_mlm: r.with_mlm, lambda: r.lambda };
            if !columns.contains(&col) {
                columns.push(col);
            }
            if !names.contains(&r.benchmark) {
                names.push(r.benchmark.clone());
            }
        }
        let table: Vec<(String, Vec<ReportCell>)> = names
            .into_iter()
            .map(|name| {
                let cells = columns
                    .iter()
                    .map(|c| {
                        let group: Vec<&MetricsRow> = rows
                            .iter()
                            .filter(|r| {
                                r.benchmark == name && r.with_mlm == c.with_mlm && r.lambda == c.lambda
                            })
                            .collect();
                        (!group.is_empty()).then(|| Summary::of(&group))
                    })
                    .collect();
                (name, cells)
            })
            .collect();
        let average = (0..columns.len())
            .map(|j| Summary::average(&table.iter().filter_map(|(_, cells)| cells[j]).collect::<Vec<_>>()))
            .collect();
        Report { columns, rows: table, average }
    }

    fn cell_text(cell: &ReportCell) -> [String; 3] {
        match cell {
            Some(s) => [
                format!("{:.1}%", s.recovery),
                format!("{:.2}", s.mean_steps),
                format!("{:.2}%", s.mean_invalid),
            ],
            None => ["-".into(), "-".into(), "-".into()],
        }
    }

    pub fn to_text(&self) -> String {
        let mut lines: Vec<Vec<String>> = Vec::new();
        let mut sub = vec![String::new()];
        for _ in &self.columns {
            sub.extend(["Recovery".into(), "Steps".into(), "Invalid".into()]);
        }
        lines.push(sub);
        let rows = self.rows.iter().map(|(n, c)| (n.as_str(), c)).chain([("Average:", &self.average)]);
        for (name, cells) in rows {
            let mut line = vec![name.to_owned()];
            for cell in cells {
                line.extend(Self::cell_text(cell));
            }
            lines.push(line);
        }
        let mut widths: Vec<usize> = (0..1 + 3 * self.columns.len())
            .map(|j| lines.iter().filter_map(|l| l.get(j)).map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        widths[0] = widths[0].max("Benchmark".len());
        // A group label spans its three columns; widen the last one if needed.
        let labels: Vec<String> = self.columns.iter().map(ReportColumn::label).collect();
        for (k, label) in labels.iter().enumerate() {
            let span = widths[1 + 3 * k..4 + 3 * k].iter().sum::<usize>() + 4;
            widths[3 + 3 * k] += label.chars().count().saturating_sub(span);
        }
        let mut head = format!("{:<w$}", "Benchmark", w = widths[0]);
        for (k, label) in labels.iter().enumerate() {
            let span = widths[1 + 3 * k..4 + 3 * k].iter().sum::<usize>() + 4;
            head.push_str(&format!("  {label:<span$}"));
        }
        let mut out = head.trim_end().to_owned();
        out.push('\n');
        for l in &lines {
            let cells: Vec<String> = l.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_html(&self) -> String {
        fn esc(s: &str) -> String {
            s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
        }
        let mut out = String::from("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Symbolic regression results</title></head><body>\n<table border=\"1\">\n<tr><th rowspan=\"2\">Benchmark</th>");
        for c in &self.columns {
            out.push_str(&format!("<th colspan=\"3\">{}</th>", esc(&c.label())));
        }
        out.push_str("</tr>\n<tr>");
        for _ in &self.columns {
            out.push_str("<th>Recovery</th><th>Steps</th><th>Invalid</th>");
        }
        out.push_str("</tr>\n");
        let rows = self.rows.iter().map(|(n, c)| (n.as_str(), c)).chain([("Average:", &self.average)]);
        for (name, cells) in rows {
            out.push_str(&format!("<tr><td>{}</td>", esc(name)));
            for cell in cells {
                for t in Self::cell_text(cell) {
                    out.push_str(&format!("<td>{t}</td>"));
                }
            }
            out.push_str("</tr>\n");
        }
        out.push_str("</table>\n</body></html>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(b: &str, run: usize, mlm: bool, rec: bool, steps: usize, inv: f64) -> MetricsRow {
        MetricsRow {
            benchmark: b.into(),
            run,
            seed: run as u64,
            lambda: if mlm { 0.5 } else { 0.0 },
            with_mlm: mlm,
            recovered: rec,
            steps,
            invalid_fraction: inv,
            best_expression: "((x * x) + x)".into(),
        }
    }

    #[test]
    fn csv_round_trip_and_header() {
        let rows =
            vec![row("nguyen-1", 0, false, true, 12, 0.4), row("nguyen-1", 1, false, false, 2000, 1.0 / 3.0)];
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows, true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "benchmark,run,seed,lambda,with_mlm,recovered,steps,invalid_fraction,best_expression\n"
        ));
        assert_eq!(read_metrics(&buf[..]).unwrap(), rows);
        assert!(matches!(read_metrics(&b"a,b\n1,2\n"[..]), Err(DsrError::Schema(_))));
    }

    #[test]
    fn paired_columns_and_average() {
        let rows = vec![
            row("a", 0, false, true, 10, 0.5),
            row("a", 1, false, false, 30, 0.3),
            row("b", 0, false, true, 20, 0.1),
            row("a", 0, true, true, 5, 0.2),
        ];
        let r = Report::build(&rows);
        assert_eq!(r.columns.len(), 2);
        let a = r.rows[0].1[0].unwrap();
        assert_eq!((a.recovery, a.mean_steps), (50.0, 20.0));
        assert!((a.mean_invalid - 40.0).abs() < 1e-12);
        let avg = r.average[0].unwrap();
        assert!((avg.recovery - 75.0).abs() < 1e-12);
        assert!((avg.mean_steps - 20.0).abs() < 1e-12);
        assert!(r.rows[1].1[1].is_none());
        assert_eq!(r.average[1].unwrap().mean_steps, 5.0);
        let text = r.to_text();
        assert!(text.contains("Average:"));
        assert!(r.to_html().contains("<td>Average:</td>"));
    }
}
