use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Cell;
use crate::data::{Method, RngSeed};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    /// `None` when the cell failed; the reason is in `error`.
    pub adjusted_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportRow {
    pub(crate) fn from_outcome(cell: Cell, seed: RngSeed, outcome: Result<f64>) -> Self {
        let (adjusted_score, error) = match outcome {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        ReportRow {
            method: cell.method,
            k: cell.k,
            repetition: cell.repetition,
            seed: seed.0,
            adjusted_score,
            error,
        }
    }
}

/// Mean and sample standard deviation over the successful repetitions of one (method, k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub k: usize,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
}

impl EvalReport {
    /// Builds the report, computing aggregates from `rows` in first-appearance order.
    pub fn from_rows(rows: Vec<ReportRow>) -> Self {
        let mut keys: Vec<(Method, usize)> = Vec::new();
        for r in &rows {
            if !keys.contains(&(r.method, r.k)) {
                keys.push((r.method, r.k));
            }
        }
        let aggregates = keys
            .into_iter()
            .filter_map(|(method, k)| {
                let scores: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.method == method && r.k == k)
                    .filter_map(|r| r.adjusted_score)
                    .collect();
                if scores.is_empty() {
                    return None;
                }
                let n = scores.len() as f64;
                let mean = scores.iter().sum::<f64>() / n;
                let std = if scores.len() > 1 {
                    (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                Some(Aggregate { method, k, mean, std, count: scores.len() })
            })
            .collect();
        EvalReport { rows, aggregates }
    }

    pub fn aggregate(&self, method: Method, k: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.k == k)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    /// `method,k,repetition,seed,adjusted_score`; failed cells leave the score empty.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("method,k,repetition,seed,adjusted_score\n");
        for r in &self.rows {
            let score = r.adjusted_score.map(|s| s.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", r.method, r.k, r.repetition, r.seed, score).unwrap();
        }
        out
    }

    /// `method,k,mean,std`.
    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from("method,k,mean,std\n");
        for a in &self.aggregates {
            writeln!(out, "{},{},{},{}", a.method, a.k, a.mean, a.std).unwrap();
        }
        out
    }

    /// Writes `report.csv`, `aggregates.csv` and `scores.svg` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("report.csv", self.rows_csv()),
            ("aggregates.csv", self.aggregates_csv()),
            ("scores.svg", render_svg(self)),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

const COLORS: [&str; 3] = ["#7f7f7f", "#1f77b4", "#d62728"];

/// Score-vs-k line chart, one polyline per method, with ±1 std whiskers.
pub fn render_svg(report: &EvalReport) -> String {
    let (w, h, pad) = (480.0, 320.0, 48.0);
    let ks: Vec<usize> = {
        let mut ks: Vec<usize> = report.aggregates.iter().map(|a| a.k).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    };
    let lo = report
        .aggregates
        .iter()
        .map(|a| a.mean - a.std)
        .fold(0.0f64, f64::min);
    let hi = report
        .aggregates
        .iter()
        .map(|a| a.mean + a.std)
        .fold(1.0f64, f64::max);
    let (kmin, kmax) = match (ks.first(), ks.last()) {
        (Some(&a), Some(&b)) if b > a => (a as f64, b as f64),
        (Some(&a), _) => (a as f64 - 1.0, a as f64 + 1.0),
        _ => (0.0, 1.0),
    };
    let sx = |k: f64| pad + (k - kmin) / (kmax - kmin) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v - lo) / (hi - lo) * (h - 2.0 * pad);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<path d="M{pad} {pad} V{y} H{x}" fill="none" stroke="black"/>"#,
        y = h - pad,
        x = w - pad
    )
    .unwrap();
    for &k in &ks {
        let x = sx(k as f64);
        writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{k}</text>"#, h - pad + 16.0).unwrap();
    }
    for tick in [lo, 0.5 * (lo + hi), hi] {
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick:.2}</text>"#, pad - 6.0, sy(tick) + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">interactions per class (k)</text>"#, w / 2.0, h - 10.0).unwrap();
    writeln!(s, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">adjusted silhouette</text>"#, h / 2.0, h / 2.0).unwrap();

    for method in Method::ALL {
        let pts: Vec<&Aggregate> = report.aggregates.iter().filter(|a| a.method == method).collect();
        if pts.is_empty() {
            continue;
        }
        let color = COLORS[method.index() as usize];
        let line: Vec<String> = pts
            .iter()
            .map(|a| format!("{:.1},{:.1}", sx(a.k as f64), sy(a.mean)))
            .collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        )
        .unwrap();
        for a in &pts {
            let x = sx(a.k as f64);
            writeln!(
                s,
                r#"<line x1="{x:.1}" x2="{x:.1}" y1="{:.1}" y2="{:.1}" stroke="{color}"/><circle cx="{x:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sy(a.mean - a.std),
                sy(a.mean + a.std),
                sy(a.mean)
            )
            .unwrap();
        }
        let ly = pad + 14.0 * method.index() as f64;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}">{}</text>"#,
            w - pad - 90.0,
            method.as_str()
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
