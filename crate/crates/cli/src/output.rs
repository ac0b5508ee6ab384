//! report.json, meta.json and gap CSV files.

use std::fs;
use std::io::Write;
use std::path::Path;

use fkgap_core::GapReport;
use serde::Serialize;

use crate::pipeline::Report;
use crate::Failure;

pub const GAP_HEADER: &str = "window_or_k,abs_min,lambda_min,lambda_max,G,quotient_q,bound";

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Schema(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Failure::Schema(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Number formatting shared with report.json, so CSV cells equal JSON fields.
pub fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_default()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One row per window, or per `k` when quotients are present.
pub fn gap_csv(gap: &GapReport) -> String {
    let mut out = String::from(GAP_HEADER);
    out.push('\n');
    let bound = gap.ai_bound.map(|b| b.bound);
    if gap.quotients.is_empty() {
        for r in &gap.rows {
            out.push_str(&format!(
                "{},{},{},{},{},,{}\n",
                r.window,
                num(r.abs_min),
                num(r.lambda_min),
                num(r.lambda_max),
                num(r.gap_parameter),
                opt(bound)
            ));
        }
    } else {
        for q in &gap.quotients {
            let r = &q.window;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                q.k,
                num(r.abs_min),
                num(r.lambda_min),
                num(r.lambda_max),
                num(r.gap_parameter),
                num(q.quotient),
                opt(bound)
            ));
        }
    }
    out
}

/// Gap reports in output order: one per β for kam, otherwise one.
pub fn gap_reports(report: &Report) -> Vec<&GapReport> {
    if let Some(k) = &report.kam {
        return k.betas.iter().map(|b| &b.gap).collect();
    }
    if let Some(a) = &report.anti_integrable {
        return vec![&a.gap];
    }
    if let Some(c) = &report.custom_window {
        return vec![&c.gap];
    }
    Vec::new()
}

/// report.json plus gap.csv (and gap_beta<i>.csv for further β values).
pub fn write_report(dir: &Path, report: &Report) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("report.json"), &to_json(report)?)?;
    let gaps = gap_reports(report);
    let first = gaps.first().map(|g| gap_csv(g)).unwrap_or_else(|| format!("{GAP_HEADER}\n"));
    write_atomic(&dir.join("gap.csv"), first.as_bytes())?;
    for (i, g) in gaps.iter().enumerate().skip(1) {
        write_atomic(&dir.join(format!("gap_beta{i}.csv")), gap_csv(g).as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario_path: String,
    pub threads: usize,
    pub started_unix: u64,
    pub elapsed_seconds: f64,
    pub exit_code: i32,
}

pub fn write_meta(dir: &Path, meta: &Meta) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("meta.json"), &to_json(meta)?)
}
