//! Plot-ready CSV series from a report.json, copied without recomputation.

use std::path::Path;

use serde_json::Value;

use crate::output::write_atomic;
use crate::Failure;

/// The gap report that feeds the plots: the first β for kam, otherwise the only one.
fn primary_gap(report: &Value) -> Option<&Value> {
    if let Some(b) = report.pointer("/kam/betas/0/gap") {
        return Some(b);
    }
    report
        .pointer("/anti_integrable/gap")
        .or_else(|| report.pointer("/custom_window/gap"))
}

fn cell(v: Option<&Value>) -> String {
    match v {
        Some(Value::Null) | None => String::new(),
        Some(v) => v.to_string(),
    }
}

fn array<'a>(v: Option<&'a Value>, key: &str) -> &'a [Value] {
    v.and_then(|g| g.get(key)).and_then(Value::as_array).map_or(&[], Vec::as_slice)
}

/// Writes qk.csv, abs_min_vs_N.csv and gap_vs_N.csv into `dir`.
pub fn emit(report: &Value, dir: &Path) -> Result<Vec<String>, Failure> {
    std::fs::create_dir_all(dir)?;
    let gap = primary_gap(report);
    let bound = gap.and_then(|g| g.pointer("/ai_bound/bound"));

    let mut qk = String::from("k,q_k,reference\n");
    for q in array(gap, "quotients") {
        qk.push_str(&format!(
            "{},{},{}\n",
            cell(q.get("k")),
            cell(q.get("quotient")),
            cell(q.get("free_chain_reference"))
        ));
    }

    // kam windows live inside the quotient rows
    let rows: Vec<&Value> = match array(gap, "quotients") {
        [] => array(gap, "rows").iter().collect(),
        qs => qs.iter().filter_map(|q| q.get("window")).collect(),
    };
    let mut abs_min = String::from("N,abs_min\n");
    let mut g_vs_n = String::from("N,G,bound\n");
    for r in rows {
        abs_min.push_str(&format!("{},{}\n", cell(r.get("window")), cell(r.get("abs_min"))));
        g_vs_n.push_str(&format!(
            "{},{},{}\n",
            cell(r.get("window")),
            cell(r.get("gap_parameter")),
            cell(bound)
        ));
    }

    let files = [("qk.csv", qk), ("abs_min_vs_N.csv", abs_min), ("gap_vs_N.csv", g_vs_n)];
    for (name, body) in &files {
        write_atomic(&dir.join(name), body.as_bytes())?;
    }
    Ok(files.iter().map(|(n, _)| n.to_string()).collect())
}

pub fn emit_file(report: &Path, dir: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(report)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("invalid report.json: {e}")))?;
    emit(&value, dir)
}
