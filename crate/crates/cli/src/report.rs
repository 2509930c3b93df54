//! Consolidated report over one run directory or a directory of runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::summary::Summary;

pub struct Report {
    pub text: String,
    pub json: Value,
}

fn runs_in(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    if dir.join("summary.json").is_file() || dir.join("error.json").is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut runs = Vec::new();
    if dir.is_dir() {
        for entry in std::fs::read_dir(dir)? {
            let p = entry?.path();
            if p.join("summary.json").is_file() || p.join("error.json").is_file() {
                runs.push(p);
            }
        }
    }
    runs.sort();
    Ok(runs)
}

fn read_json(path: &Path) -> Option<Value> {
    serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.6e}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn solve_table(out: &mut String, stats: &Value) {
    let _ = writeln!(out, "    {:<14} {:>12} {:>18}", "residual", "iterations", "contact_fraction");
    let _ = writeln!(
        out,
        "    {:<14} {:>12} {:>18}",
        fmt_value(&stats["residual"]),
        fmt_value(&stats["iterations"]),
        fmt_value(&stats["contact_fraction"])
    );
}

fn strata_table(out: &mut String, records: &Value) -> Vec<Value> {
    let mut rows = Vec::new();
    let Some(list) = records.as_array() else {
        return rows;
    };
    let _ = writeln!(out, "    {:<28} {:>3} {:>12} {:<20}", "location", "m", "lambda2", "stratum");
    for r in list {
        let loc = r["location"]
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|v| format!("{:.4}", v.as_f64().unwrap_or(f64::NAN)))
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .unwrap_or_default();
        let lambda2 = r["lambda2"]["value"].as_f64().map_or("-".to_string(), |v| format!("{v:.4}"));
        let stratum = r["stratum"].as_str().unwrap_or("?");
        let _ = writeln!(out, "    ({loc:<26}) {:>3} {lambda2:>12} {stratum:<20}", fmt_value(&r["m"]));
        rows.push(json!({ "location": r["location"], "m": r["m"], "lambda2": r["lambda2"]["value"], "stratum": stratum }));
    }
    rows
}

/// Never fails on missing or malformed artifacts; those are listed instead.
pub fn report(dir: &Path) -> std::io::Result<Report> {
    let runs = runs_in(dir)?;
    let mut text = String::new();
    let mut entries = Vec::new();
    if runs.is_empty() {
        text.push_str("no artifacts\n");
    }
    for run in &runs {
        let name = run
            .file_name()
            .map_or_else(|| ".".to_string(), |n| n.to_string_lossy().into_owned());
        let mut entry = json!({ "run": name });
        let summary: Option<Summary> = read_json(&run.join("summary.json")).and_then(|v| serde_json::from_value(v).ok());
        let Some(summary) = summary else {
            let err = read_json(&run.join("error.json"));
            let msg = err
                .as_ref()
                .and_then(|e| e["error"].as_str().map(String::from))
                .unwrap_or_else(|| "summary.json missing or unreadable".into());
            let _ = writeln!(text, "run {name}: FAILED before completion: {msg}");
            entry["status"] = "error".into();
            entry["error"] = msg.into();
            entries.push(entry);
            continue;
        };
        let _ = writeln!(
            text,
            "run {name}: kind={} seed={} status={}",
            summary.kind,
            summary.seed,
            if summary.passed { "PASS" } else { "FAIL" }
        );
        let mut suites = Vec::new();
        for s in &summary.suites {
            let metrics: Vec<String> = s.metrics.iter().map(|(k, v)| format!("{k}={}", fmt_value(v))).collect();
            let _ = writeln!(
                text,
                "  {} {:<40} [{}]",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.claim
            );
            if !metrics.is_empty() {
                let _ = writeln!(text, "       {}", metrics.join("  "));
            }
            for n in &s.notes {
                let _ = writeln!(text, "       note: {n}");
            }
            suites.push(json!({ "name": s.name, "claim": s.claim, "passed": s.passed }));
        }
        let missing: Vec<&String> = summary.artifacts.iter().filter(|a| !run.join(a).is_file()).collect();
        if !missing.is_empty() {
            let _ = writeln!(text, "  missing artifacts: {}", missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "));
        }
        for a in summary.artifacts.iter().filter(|a| a.ends_with("solve.json")) {
            if let Some(stats) = read_json(&run.join(a)) {
                let _ = writeln!(text, "  {a}:");
                solve_table(&mut text, &stats);
                entry["solve"] = json!({
                    "residual": stats["residual"],
                    "iterations": stats["iterations"],
                    "contact_fraction": stats["contact_fraction"],
                });
            }
        }
        for a in summary.artifacts.iter().filter(|a| a.ends_with("records.json")) {
            if let Some(records) = read_json(&run.join(a)) {
                let _ = writeln!(text, "  {a}:");
                let rows = strata_table(&mut text, &records);
                entry["strata"] = rows.into();
            }
        }
        entry["kind"] = summary.kind.clone().into();
        entry["status"] = if summary.passed { "pass" } else { "fail" }.into();
        entry["suites"] = suites.into();
        entry["missing_artifacts"] = json!(missing);
        entries.push(entry);
    }
    Ok(Report {
        text,
        json: json!({ "runs": entries }),
    })
}
