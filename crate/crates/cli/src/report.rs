//! Certification report rows and their aggregation into certified-accuracy
//! tables and average certified radius.
//!
//! Conventions: an abstention counts as incorrect at every epsilon and is
//! excluded from radius sums; certified accuracy at epsilon is the fraction
//! of the whole test set that is correctly predicted with radius strictly
//! above epsilon; `acr` divides the radius sum of correct rows by the full
//! test count, and `acr_correct_only` divides by the number of correct rows.

use std::fs;
use std::path::Path;

use splitz_core::certify::{Prediction, SplitzCertificate};

use crate::error::CliError;

pub const REPORT_HEADER: &str =
    "index,label,prediction,p_a_lower,rs_radius,gamma_star,lipschitz_bound,splitz_radius,correct";

/// One certified input, as stored in a report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub index: usize,
    pub label: usize,
    pub prediction: Prediction,
    pub p_a_lower: f64,
    pub rs_radius: f64,
    pub gamma_star: f64,
    pub lipschitz_bound: f64,
    pub splitz_radius: f64,
    pub correct: bool,
}

impl ReportRow {
    pub fn from_certificate(index: usize, label: usize, cert: &SplitzCertificate) -> Self {
        let correct = cert.prediction == Prediction::Class(label);
        ReportRow {
            index,
            label,
            prediction: cert.prediction,
            p_a_lower: cert.p_a_lower(),
            rs_radius: cert.rs_radius(),
            gamma_star: cert.gamma_star,
            lipschitz_bound: cert.lipschitz_bound,
            splitz_radius: cert.splitz_radius,
            correct,
        }
    }

    pub fn to_csv_line(&self) -> String {
        let prediction = match self.prediction {
            Prediction::Class(c) => c.to_string(),
            Prediction::Abstain => "ABSTAIN".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.index,
            self.label,
            prediction,
            self.p_a_lower,
            self.rs_radius,
            self.gamma_star,
            self.lipschitz_bound,
            self.splitz_radius,
            u8::from(self.correct)
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self, String> {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 9 {
            return Err(format!("{} columns, expected 9", cells.len()));
        }
        let prediction = if cells[2] == "ABSTAIN" {
            Prediction::Abstain
        } else {
            Prediction::Class(cells[2].parse().map_err(|_| "bad prediction".to_string())?)
        };
        let float = |i: usize| -> Result<f64, String> {
            cells[i]
                .parse()
                .map_err(|_| format!("bad float in column {i}"))
        };
        Ok(ReportRow {
            index: cells[0].parse().map_err(|_| "bad index".to_string())?,
            label: cells[1].parse().map_err(|_| "bad label".to_string())?,
            prediction,
            p_a_lower: float(3)?,
            rs_radius: float(4)?,
            gamma_star: float(5)?,
            lipschitz_bound: float(6)?,
            splitz_radius: float(7)?,
            correct: cells[8] == "1",
        })
    }
}

pub fn write_report(rows: &[ReportRow], path: &Path) -> Result<(), CliError> {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let fail = |m: String| CliError::format(path.display().to_string(), m);
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == REPORT_HEADER => {}
        _ => return Err(fail("missing or unexpected header".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            ReportRow::parse_csv_line(line)
                .map_err(|m| fail(format!("line {}: {m}", lineno + 2)))?,
        );
    }
    if rows.is_empty() {
        return Err(fail("report has no data rows".into()));
    }
    Ok(rows)
}

/// Fraction of rows that are correct, did not abstain, and have a radius
/// strictly above epsilon.
pub fn certified_accuracy(rows: &[ReportRow], epsilon: f64) -> f64 {
    let hits = rows
        .iter()
        .filter(|r| r.correct && r.splitz_radius > epsilon)
        .count();
    hits as f64 / rows.len() as f64
}

/// Radius sum of correct rows over the whole test count.
pub fn average_certified_radius(rows: &[ReportRow]) -> f64 {
    let sum: f64 = rows
        .iter()
        .filter(|r| r.correct)
        .map(|r| r.splitz_radius)
        .sum();
    sum / rows.len() as f64
}

/// Radius sum of correct rows over the number of correct rows (0 when none).
pub fn average_certified_radius_correct_only(rows: &[ReportRow]) -> f64 {
    let correct: Vec<f64> = rows
        .iter()
        .filter(|r| r.correct)
        .map(|r| r.splitz_radius)
        .collect();
    if correct.is_empty() {
        0.0
    } else {
        correct.iter().sum::<f64>() / correct.len() as f64
    }
}

/// The epsilon table used by default: 0.25 through 2.50 in steps of 0.25.
pub fn default_epsilon_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.25).collect()
}
