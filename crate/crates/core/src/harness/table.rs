//! CSV tables. Per-run rows follow
//! `case_id,method,axis,axis_value,accuracy,jaccard,dice,precision,recall,f_measure,elapsed_s,iterations,converged`;
//! reals are written with six decimals. Aggregates are always computed from
//! the six-decimal values, so re-reading a rows file reproduces its summary
//! byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::MetricsRow;

pub const ROWS_HEADER: &str =
    "case_id,method,axis,axis_value,accuracy,jaccard,dice,precision,recall,f_measure,elapsed_s,iterations,converged";

pub const SUMMARY_HEADER: &str =
    "method,axis,axis_value,cases,mean_jaccard,std_jaccard,mean_accuracy,mean_dice,mean_precision,mean_recall,mean_f_measure";

/// Axis label for rows that are not part of a sweep.
pub const NO_AXIS: &str = "none";

/// Round to the precision used on disk.
pub fn quantize(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultRow {
    pub case_id: String,
    pub method: String,
    pub axis: String,
    pub axis_value: f64,
    pub accuracy: f64,
    pub jaccard: f64,
    pub dice: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub elapsed_s: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ResultRow {
    pub fn new(metrics: &MetricsRow, axis: &str, axis_value: f64, iterations: usize, converged: bool) -> Self {
        Self {
            case_id: metrics.case_id.clone(),
            method: metrics.method.clone(),
            axis: axis.to_string(),
            axis_value,
            accuracy: metrics.accuracy,
            jaccard: metrics.jaccard,
            dice: metrics.dice,
            precision: metrics.precision,
            recall: metrics.recall,
            f_measure: metrics.f_measure,
            elapsed_s: metrics.elapsed_s,
            iterations,
            converged,
        }
    }

    /// The row as it will read back from disk.
    pub fn quantized(&self) -> Self {
        Self {
            axis_value: quantize(self.axis_value),
            accuracy: quantize(self.accuracy),
            jaccard: quantize(self.jaccard),
            dice: quantize(self.dice),
            precision: quantize(self.precision),
            recall: quantize(self.recall),
            f_measure: quantize(self.f_measure),
            elapsed_s: quantize(self.elapsed_s),
            ..self.clone()
        }
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.case_id,
            self.method,
            self.axis,
            self.axis_value,
            self.accuracy,
            self.jaccard,
            self.dice,
            self.precision,
            self.recall,
            self.f_measure,
            self.elapsed_s,
            self.iterations,
            self.converged
        )
    }
}

/// Sort key that makes table order independent of evaluation order.
fn row_key(r: &ResultRow) -> (String, String, String, u64) {
    (r.axis.clone(), r.method.clone(), r.case_id.clone(), r.axis_value.to_bits())
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        (&a.axis, &a.method)
            .cmp(&(&b.axis, &b.method))
            .then(a.axis_value.total_cmp(&b.axis_value))
            .then_with(|| a.case_id.cmp(&b.case_id))
    });
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in &sorted {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn export_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(rows_to_csv(rows).as_bytes())?;
    Ok(())
}

pub fn parse_rows_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != ROWS_HEADER {
        return Err(Error::InvalidParameter(format!("unexpected rows header '{header}'")));
    }
    Ok(reader.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?)
}

pub fn read_rows_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    parse_rows_csv(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub axis: String,
    pub axis_value: f64,
    pub cases: usize,
    pub mean_jaccard: f64,
    pub std_jaccard: f64,
    pub mean_accuracy: f64,
    pub mean_dice: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f_measure: f64,
}

impl SummaryRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.method,
            self.axis,
            self.axis_value,
            self.cases,
            self.mean_jaccard,
            self.std_jaccard,
            self.mean_accuracy,
            self.mean_dice,
            self.mean_precision,
            self.mean_recall,
            self.mean_f_measure
        )
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1); zero for a single value.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Group by (method, axis, axis value) and average each measure over cases.
pub fn aggregate(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut sorted: Vec<ResultRow> = rows.iter().map(ResultRow::quantized).collect();
    sorted.sort_by(|a, b| row_key(a).cmp(&row_key(b)));
    let mut groups: BTreeMap<(String, String, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in &sorted {
        groups
            .entry((r.method.clone(), r.axis.clone(), r.axis_value.to_bits()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((method, axis, bits), group)| {
            let col = |f: fn(&ResultRow) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let j = col(|r| r.jaccard);
            SummaryRow {
                method,
                axis,
                axis_value: f64::from_bits(bits),
                cases: group.len(),
                mean_jaccard: mean(&j),
                std_jaccard: sample_std(&j),
                mean_accuracy: mean(&col(|r| r.accuracy)),
                mean_dice: mean(&col(|r| r.dice)),
                mean_precision: mean(&col(|r| r.precision)),
                mean_recall: mean(&col(|r| r.recall)),
                mean_f_measure: mean(&col(|r| r.f_measure)),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (&a.axis, &a.method)
            .cmp(&(&b.axis, &b.method))
            .then(a.axis_value.total_cmp(&b.axis_value))
    });
    out
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(case: &str, method: &str, j: f64) -> ResultRow {
        ResultRow {
            case_id: case.into(),
            method: method.into(),
            axis: "interior_fraction".into(),
            axis_value: 0.1,
            accuracy: 0.9,
            jaccard: j,
            dice: 2.0 * j / (1.0 + j),
            precision: 0.8,
            recall: 0.7,
            f_measure: 0.75,
            elapsed_s: 0.0012345678,
            iterations: 30,
            converged: false,
        }
    }

    #[test]
    fn line_format() {
        let line = row("007", "bgrowth", 1.0 / 3.0).to_csv_line();
        assert_eq!(
            line,
            "007,bgrowth,interior_fraction,0.100000,0.900000,0.333333,0.500000,0.800000,0.700000,0.750000,0.001235,30,false"
        );
    }

    #[test]
    fn reingest_reproduces_summary() {
        let rows: Vec<ResultRow> = (0..7)
            .flat_map(|i| {
                let j = 0.5 + i as f64 / 17.0;
                [row(&format!("{i:03}"), "bgrowth", j), row(&format!("{i:03}"), "growcut", j * 0.9)]
            })
            .collect();
        let csv_text = rows_to_csv(&rows);
        let back = parse_rows_csv(&csv_text).unwrap();
        assert_eq!(back.len(), rows.len());
        assert_eq!(rows_to_csv(&back), csv_text);
        assert_eq!(summary_to_csv(&aggregate(&back)), summary_to_csv(&aggregate(&rows)));
        let summary = aggregate(&rows);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].cases, 7);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_rows_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn std_of_single_value_is_zero() {
        assert_eq!(sample_std(&[0.4]), 0.0);
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
