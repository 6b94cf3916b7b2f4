//! JSON and CSV renderings of solve and benchmark reports.
//!
//! Infinite PSNR (an exact reconstruction) is written as `"inf"` in JSON and
//! `inf` in CSV. Failed trials leave their metric fields empty (`null` in
//! JSON) and carry the error message instead.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use hqtc_core::experiments::TrialRecord;
use hqtc_core::{MetricsReport, SolveReport};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ToolError};

pub const CSV_HEADER: &str = "trial,solver,rel_err,psnr,iters,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

mod psnr_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if *x == f64::INFINITY => s.serialize_str("inf"),
            Some(x) => s.serialize_f64(*x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Number(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("bad psnr {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub sigma: Option<f64>,
    pub residual_norm: f64,
    pub cost: f64,
    pub step_u: Option<f64>,
    pub step_y: Option<f64>,
    pub step_y_scaled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub solver: String,
    pub rank: usize,
    pub termination: String,
    pub iterations: usize,
    /// Residual norm and cost of the last trace entry.
    pub residual_norm: Option<f64>,
    pub cost: Option<f64>,
    pub seconds: f64,
    pub trace: Vec<TraceRow>,
}

impl SolveSummary {
    pub fn new(rep: &SolveReport, rank: usize) -> Self {
        let trace: Vec<TraceRow> = rep
            .trace
            .iter()
            .map(|t| TraceRow {
                iteration: t.iteration,
                sigma: t.sigma,
                residual_norm: t.residual_norm,
                cost: t.cost,
                step_u: t.step_u,
                step_y: t.step_y,
                step_y_scaled: t.step_y_scaled,
            })
            .collect();
        SolveSummary {
            solver: rep.solver.name().to_string(),
            rank,
            termination: rep.termination.name().to_string(),
            iterations: rep.iterations,
            residual_norm: trace.last().map(|t| t.residual_norm),
            cost: trace.last().map(|t| t.cost),
            seconds: rep.wall_time,
            trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub solver: String,
    pub rank: usize,
    pub rel_err: Option<f64>,
    #[serde(with = "psnr_repr")]
    pub psnr: Option<f64>,
    pub iters: Option<usize>,
    pub termination: Option<String>,
    pub error: Option<String>,
    pub seconds: Option<f64>,
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        let ok = r.outcome.as_ref().ok();
        TrialRow {
            trial: r.trial,
            solver: r.solver.name().to_string(),
            rank: r.rank,
            rel_err: ok.map(|o| o.rel_err),
            psnr: ok.map(|o| o.psnr),
            iters: ok.map(|o| o.iterations),
            termination: ok.map(|o| o.termination.name().to_string()),
            error: r.outcome.as_ref().err().map(|e| e.to_string()),
            seconds: ok.map(|o| o.seconds),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: usize,
    pub solver: String,
    pub rank: usize,
    pub successes: usize,
    pub failures: usize,
    pub mean_rel_err: Option<f64>,
    pub median_rel_err: Option<f64>,
    pub mean_psnr: Option<f64>,
    pub mean_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSweep {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub i_max: f64,
    pub trials: Vec<TrialRow>,
    pub summaries: Vec<SummaryRow>,
}

impl BenchSweep {
    pub fn new(dims: (usize, usize, usize), report: &MetricsReport) -> Self {
        BenchSweep {
            n1: dims.0,
            n2: dims.1,
            n3: dims.2,
            i_max: report.i_max,
            trials: report.records.iter().map(TrialRow::from).collect(),
            summaries: report
                .summaries
                .iter()
                .map(|s| SummaryRow {
                    run: s.run,
                    solver: s.solver.name().to_string(),
                    rank: s.rank,
                    successes: s.successes,
                    failures: s.failures,
                    mean_rel_err: s.mean_rel_err,
                    median_rel_err: s.median_rel_err,
                    mean_psnr: s.mean_psnr,
                    mean_seconds: s.mean_seconds,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Whether `n1` was swept; adds a leading `n1` column to the CSV.
    pub sweep: bool,
    pub sweeps: Vec<BenchSweep>,
}

fn cell<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::new();
    if report.sweep {
        out.push_str("n1,");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for sweep in &report.sweeps {
        for t in &sweep.trials {
            if report.sweep {
                write!(out, "{},", sweep.n1).unwrap();
            }
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.trial,
                t.solver,
                cell(t.rel_err),
                cell(t.psnr),
                cell(t.iters),
                cell(t.seconds)
            )
            .unwrap();
        }
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports contain only serialisable fields");
    s.push('\n');
    s
}

pub fn render_bench(report: &BenchReport, format: Format) -> String {
    match format {
        Format::Csv => bench_csv(report),
        Format::Json => to_json(report),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| ToolError::io(path, e))
}

pub fn write_report(report: &BenchReport, path: &Path, format: Format) -> Result<()> {
    write_text(path, &render_bench(report, format))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub rel_err: f64,
    #[serde(with = "psnr_repr")]
    pub psnr: Option<f64>,
    pub i_max: f64,
}

impl MetricsRow {
    pub fn to_text(&self) -> String {
        format!("rel_err={:?}\npsnr={}\ni_max={:?}\n", self.rel_err, cell(self.psnr), self.i_max)
    }

    pub fn to_csv(&self) -> String {
        format!("rel_err,psnr,i_max\n{:?},{},{:?}\n", self.rel_err, cell(self.psnr), self.i_max)
    }
}
