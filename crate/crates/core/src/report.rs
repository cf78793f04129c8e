//! Accuracy tables over a dataset manifest.
//!
//! The ν table (`table2.*`) crosses estimation methods with displacement
//! sources and reports, per ground-truth ν, the mean and population SD over
//! records of the per-record estimate. For the PDE method the per-record
//! estimate is the mean of the valid ν-map pixels; for the network it is the
//! scalar read from a predictions file (`id,source,nu_pred`, produced by the
//! learning component). The registration table (`table1.csv`) compares
//! registration output against the reference fields.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{load_reference, manifest_base, noisy_reference, DatasetRecord, Split};
use crate::error::{Error, Result};
use crate::estimator::{nu_map, EstimatorConfig, Histogram};
use crate::fields::{BCMap, VectorField2D};
use crate::io;
use crate::metrics;
use crate::noise::AngleProfile;
use crate::par;

/// Range and bin count of the pooled ν histograms.
pub const HIST_RANGE: (f64, f64) = (-1.0, 2.0);
pub const HIST_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Fdm,
    FdmNoise(f64),
    Registration,
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::Fdm => "fdm".into(),
            Source::FdmNoise(a) => format!("fdm+noise({a})"),
            Source::Registration => "registration".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pde,
    Dnn,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Pde => "pde",
            Method::Dnn => "dnn",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub methods: Vec<Method>,
    pub sources: Vec<Source>,
    /// Restrict to one split; `None` uses every record.
    pub split: Option<Split>,
    /// Angle profile for noisy sources; synthetic default when absent.
    pub profile: Option<AngleProfile>,
    /// Directory holding `<id>.efd` registration outputs, consulted when a
    /// record has no `reg` entry.
    pub reg_dir: Option<PathBuf>,
    /// Network predictions CSV.
    pub dnn_predictions: Option<PathBuf>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Pde],
            sources: vec![Source::Fdm, Source::FdmNoise(0.006), Source::Registration],
            split: None,
            profile: None,
            reg_dir: None,
            dnn_predictions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub nu: f64,
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub method: String,
    pub source: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Cell {
    pub nu: f64,
    pub records: usize,
    pub rmse: f64,
    pub sd: f64,
}

/// Per-record value behind a ν-table cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordValue {
    pub id: String,
    pub nu: f64,
    pub method: String,
    pub source: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub nus: Vec<f64>,
    pub table2: Vec<Table2Row>,
    pub table1: Vec<Table1Cell>,
    pub records: Vec<RecordValue>,
    /// `(source label, ν)` → pooled histogram of valid PDE ν pixels.
    pub histograms: Vec<(String, f64, Histogram)>,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        self.table2.is_empty()
    }
}

fn load_predictions(path: &Path) -> Result<BTreeMap<(String, String), f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Error::format(path, format!("line {}: expected id,source,nu_pred", n + 1)));
        }
        let v: f64 = cols[2]
            .parse()
            .map_err(|_| Error::format(path, format!("line {}: bad nu_pred", n + 1)))?;
        out.insert((cols[0].to_string(), cols[1].to_string()), v);
    }
    Ok(out)
}

fn mask_for(field: &VectorField2D, spec: Option<&crate::bvp::BvpSpec>) -> Result<Option<BCMap>> {
    match spec {
        Some(s) => s.bc_map().map(Some),
        None => BCMap::fixed_ring(*field.grid()).map(Some),
    }
}

fn registration_path(base: &Path, rec: &DatasetRecord, cfg: &ReportConfig) -> Option<PathBuf> {
    if let Some(r) = &rec.reg {
        return Some(base.join(r));
    }
    cfg.reg_dir
        .as_ref()
        .map(|d| d.join(format!("{}.efd", rec.id)))
        .filter(|p| p.exists())
}

/// Displacement for `source`, or `None` when the artifact does not exist.
fn source_field(
    base: &Path,
    rec: &DatasetRecord,
    reference: &VectorField2D,
    source: Source,
    cfg: &ReportConfig,
) -> Result<Option<VectorField2D>> {
    match source {
        Source::Fdm => Ok(Some(reference.clone())),
        Source::FdmNoise(alpha) => {
            noisy_reference(reference, rec, alpha, cfg.profile.as_ref()).map(Some)
        }
        Source::Registration => match registration_path(base, rec, cfg) {
            Some(p) if p.exists() => io::read_vector_field(p).map(Some),
            _ => Ok(None),
        },
    }
}

struct RecordEval {
    /// per source: PDE ν-map mean and its valid pixels, or None if missing
    pde: Vec<Option<(f64, Vec<f64>)>>,
    /// registration RMSE inputs: (sum of squared component errors, component
    /// count, per-pixel error magnitudes)
    reg_error: Option<(f64, usize, Vec<f64>)>,
}

fn evaluate_record(base: &Path, rec: &DatasetRecord, cfg: &ReportConfig) -> Result<RecordEval> {
    let (reference, spec) = load_reference(base, rec)?;
    let mask = mask_for(&reference, spec.as_ref())?;
    let est = EstimatorConfig {
        dirichlet_mask: mask,
        ..Default::default()
    };
    let mut pde = Vec::with_capacity(cfg.sources.len());
    let mut reg_error = None;
    for &source in &cfg.sources {
        let Some(field) = source_field(base, rec, &reference, source, cfg)? else {
            pde.push(None);
            continue;
        };
        if source == Source::Registration && reg_error.is_none() {
            let mags = metrics::error_magnitudes(&field, &reference)?;
            let r = metrics::rmse(&field, &reference)?;
            let count = 2 * reference.grid().len();
            reg_error = Some((r * r * count as f64, count, mags));
        }
        if cfg.methods.contains(&Method::Pde) {
            let values: Vec<f64> = nu_map(&field, &est)?.valid_values().collect();
            pde.push((!values.is_empty()).then(|| (metrics::mean(&values), values)));
        } else {
            pde.push(None);
        }
    }
    Ok(RecordEval { pde, reg_error })
}

fn cell(nu: f64, values: &[f64], missing: Vec<String>) -> Result<Cell> {
    Ok(Cell {
        nu,
        n: values.len(),
        mean: (!values.is_empty()).then(|| metrics::mean(values)),
        sd: if values.is_empty() { None } else { Some(metrics::sd(values)?) },
        missing,
    })
}

/// Build the ν and registration tables for the records in `manifest`.
pub fn table2_report(manifest: impl AsRef<Path>, cfg: &ReportConfig) -> Result<Report> {
    let manifest = manifest.as_ref();
    let base = manifest_base(manifest);
    let records: Vec<DatasetRecord> = crate::dataset::read_manifest(manifest)?
        .into_iter()
        .filter(|r| cfg.split.is_none_or(|s| s == r.split))
        .collect();
    if records.is_empty() {
        return Ok(Report::default());
    }
    let mut nus: Vec<f64> = records.iter().map(|r| r.nu).collect();
    nus.sort_by(f64::total_cmp);
    nus.dedup();

    let evals = par::map_range(records.len(), |k| evaluate_record(&base, &records[k], cfg));
    let evals = evals.into_iter().collect::<Result<Vec<_>>>()?;
    let predictions = match (&cfg.dnn_predictions, cfg.methods.contains(&Method::Dnn)) {
        (Some(p), true) => Some(load_predictions(p)?),
        _ => None,
    };

    let mut report = Report {
        nus: nus.clone(),
        ..Default::default()
    };
    for &method in &cfg.methods {
        for (s_idx, source) in cfg.sources.iter().enumerate() {
            let label = source.label();
            let mut cells = Vec::with_capacity(nus.len());
            for &nu in &nus {
                let mut values = Vec::new();
                let mut missing = Vec::new();
                for (rec, ev) in records.iter().zip(&evals) {
                    if rec.nu != nu {
                        continue;
                    }
                    let value = match method {
                        Method::Pde => ev.pde[s_idx].as_ref().map(|(m, _)| *m),
                        Method::Dnn => predictions
                            .as_ref()
                            .and_then(|p| p.get(&(rec.id.clone(), label.clone())).copied()),
                    };
                    match value {
                        Some(v) => {
                            values.push(v);
                            report.records.push(RecordValue {
                                id: rec.id.clone(),
                                nu,
                                method: method.label().into(),
                                source: label.clone(),
                                value: v,
                            });
                        }
                        None => missing.push(rec.id.clone()),
                    }
                }
                cells.push(cell(nu, &values, missing)?);
            }
            report.table2.push(Table2Row {
                method: method.label().into(),
                source: label,
                cells,
            });
        }
    }

    if cfg.methods.contains(&Method::Pde) {
        for (s_idx, source) in cfg.sources.iter().enumerate() {
            for &nu in &nus {
                let pooled: Vec<f64> = records
                    .iter()
                    .zip(&evals)
                    .filter(|(r, _)| r.nu == nu)
                    .filter_map(|(_, ev)| ev.pde[s_idx].as_ref())
                    .flat_map(|(_, v)| v.iter().copied())
                    .collect();
                if !pooled.is_empty() {
                    report.histograms.push((
                        source.label(),
                        nu,
                        Histogram::new(&pooled, HIST_BINS, HIST_RANGE.0, HIST_RANGE.1),
                    ));
                }
            }
        }
    }

    for &nu in &nus {
        let mut sq = 0.0;
        let mut count = 0;
        let mut mags = Vec::new();
        let mut n = 0;
        for (rec, ev) in records.iter().zip(&evals) {
            if rec.nu != nu {
                continue;
            }
            if let Some((s, c, m)) = &ev.reg_error {
                sq += s;
                count += c;
                mags.extend_from_slice(m);
                n += 1;
            }
        }
        if n > 0 {
            report.table1.push(Table1Cell {
                nu,
                records: n,
                rmse: (sq / count as f64).sqrt(),
                sd: metrics::sd(&mags)?,
            });
        }
    }
    Ok(report)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_default()
}

pub fn table2_csv(report: &Report) -> String {
    let mut s = String::from("method,source");
    for nu in &report.nus {
        let _ = write!(s, ",mean_nu{nu},sd_nu{nu},n_nu{nu}");
    }
    s.push('\n');
    for row in &report.table2 {
        let _ = write!(s, "{},{}", row.method, row.source);
        for c in &row.cells {
            let _ = write!(s, ",{},{},{}", fmt_opt(c.mean), fmt_opt(c.sd), c.n);
        }
        s.push('\n');
    }
    s
}

pub fn table2_markdown(report: &Report) -> String {
    let mut s = String::from("| Method | Source |");
    for nu in &report.nus {
        let _ = write!(s, " ν = {nu} mean | ν = {nu} SD |");
    }
    s.push_str("\n|---|---|");
    for _ in &report.nus {
        s.push_str("---|---|");
    }
    s.push('\n');
    for row in &report.table2 {
        let _ = write!(s, "| {} | {} |", row.method, row.source);
        for c in &row.cells {
            let _ = write!(s, " {} | {} |", fmt_opt(c.mean), fmt_opt(c.sd));
        }
        s.push('\n');
    }
    let mut notes = String::new();
    for row in &report.table2 {
        for c in &row.cells {
            if !c.missing.is_empty() {
                let shown: Vec<&str> = c.missing.iter().take(5).map(String::as_str).collect();
                let more = c.missing.len().saturating_sub(shown.len());
                let _ = writeln!(
                    notes,
                    "- {} / {} / ν = {}: {} record(s) missing ({}{})",
                    row.method,
                    row.source,
                    c.nu,
                    c.missing.len(),
                    shown.join(", "),
                    if more > 0 { format!(", +{more} more") } else { String::new() }
                );
            }
        }
    }
    if !notes.is_empty() {
        s.push_str("\nMissing artifacts:\n\n");
        s.push_str(&notes);
    }
    s
}

pub fn table1_csv(report: &Report) -> String {
    let mut s = String::from("nu,records,rmse,sd\n");
    for c in &report.table1 {
        let _ = writeln!(s, "{},{},{:.4},{:.4}", c.nu, c.records, c.rmse, c.sd);
    }
    s
}

pub fn records_csv(report: &Report) -> String {
    let mut s = String::from("id,nu,method,source,value\n");
    for r in &report.records {
        let _ = writeln!(s, "{},{},{},{},{:.6}", r.id, r.nu, r.method, r.source, r.value);
    }
    s
}

pub fn histograms_csv(report: &Report) -> String {
    let mut s = String::from("source,nu,bin_lo,bin_hi,count\n");
    for (source, nu, h) in &report.histograms {
        for (k, c) in h.counts.iter().enumerate() {
            let _ = writeln!(s, "{source},{nu},{:.6},{:.6},{c}", h.edges[k], h.edges[k + 1]);
        }
    }
    s
}

/// Write every table and plot-data file into `out_dir`.
pub fn write_report(report: &Report, out_dir: impl AsRef<Path>) -> Result<()> {
    let out = out_dir.as_ref();
    io::write_text(&out.join("table2.csv"), &table2_csv(report))?;
    io::write_text(&out.join("table2.md"), &table2_markdown(report))?;
    io::write_text(&out.join("table1.csv"), &table1_csv(report))?;
    io::write_text(&out.join("records.csv"), &records_csv(report))?;
    io::write_text(&out.join("nu_histograms.csv"), &histograms_csv(report))?;
    Ok(())
}
