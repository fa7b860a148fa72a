//! Plot-ready tables for a set of scenario results.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Method, Variant};
use super::scenario::ScenarioResult;
use crate::error::{OmitError, Result};

fn io(path: &Path, e: std::io::Error) -> OmitError {
    OmitError::io(path.display().to_string(), e)
}

const BIAS_HEADER: [&str; 9] = [
    "scenario", "variant", "beta_y", "sigma", "miss", "method", "replicate", "tau_hat", "diff",
];
const COVERAGE_HEADER: [&str; 13] = [
    "scenario",
    "variant",
    "beta_y",
    "sigma",
    "miss",
    "method",
    "coverage",
    "mean_bias",
    "mean_abs_bias",
    "mse",
    "bias_mc_se",
    "used",
    "excluded",
];

fn keys(r: &ScenarioResult) -> [String; 5] {
    [
        r.scenario_id.clone(),
        r.config.variant.label().to_string(),
        r.config.beta_y.to_string(),
        r.config.sigma.to_string(),
        r.config.miss_level.to_string(),
    ]
}

fn bias_rows(r: &ScenarioResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for m in &r.methods {
        for rec in &m.records {
            let mut row = keys(r).to_vec();
            row.extend([
                m.method.label().to_string(),
                rec.replicate.to_string(),
                rec.tau_hat.to_string(),
                (rec.tau_hat - r.tau_fp).to_string(),
            ]);
            rows.push(row);
        }
    }
    rows
}

fn coverage_rows(r: &ScenarioResult) -> Vec<Vec<String>> {
    r.methods
        .iter()
        .map(|m| {
            let s = &m.summary;
            let mut row = keys(r).to_vec();
            row.extend([
                m.method.label().to_string(),
                s.coverage.to_string(),
                s.mean_bias.to_string(),
                s.mean_abs_bias.to_string(),
                s.mse.to_string(),
                s.bias_mc_se.to_string(),
                s.used.to_string(),
                s.excluded.to_string(),
            ]);
            row
        })
        .collect()
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| io(path, e))
}

#[derive(Serialize)]
struct ScenarioDiagnostics<'a> {
    scenario: &'a str,
    tau_fp: f64,
    valid: bool,
    diagnostics: &'a super::scenario::Diagnostics,
    match_rates: Vec<(Method, Option<f64>)>,
    exclusions: Vec<(Method, &'a [super::scenario::Exclusion])>,
}

/// Writes per-scenario `bias.csv`, `coverage.csv` and `diagnostics.json`
/// under `out/results/<scenario-id>/`, the same two tables across all
/// scenarios at the top of `out`, and `naive_y_comparison.csv` when a cubic
/// scenario ran Naive+Y. Returns the written paths.
pub fn summarize_grid(results: &[ScenarioResult], out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut all_bias = Vec::new();
    let mut all_cov = Vec::new();
    for r in results {
        let dir = out.join("results").join(&r.scenario_id);
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let bias = bias_rows(r);
        let cov = coverage_rows(r);
        let p = dir.join("bias.csv");
        write_table(&p, &BIAS_HEADER, &bias)?;
        written.push(p);
        let p = dir.join("coverage.csv");
        write_table(&p, &COVERAGE_HEADER, &cov)?;
        written.push(p);
        let diag = ScenarioDiagnostics {
            scenario: &r.scenario_id,
            tau_fp: r.tau_fp,
            valid: r.is_valid(),
            diagnostics: &r.diagnostics,
            match_rates: r.methods.iter().map(|m| (m.method, m.summary.mean_match_rate)).collect(),
            exclusions: r.methods.iter().map(|m| (m.method, m.exclusions.as_slice())).collect(),
        };
        let p = dir.join("diagnostics.json");
        let text = serde_json::to_string_pretty(&diag).expect("diagnostics serialize");
        fs::write(&p, text + "\n").map_err(|e| io(&p, e))?;
        written.push(p);
        all_bias.extend(bias);
        all_cov.extend(cov);
    }
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let p = out.join("bias.csv");
    write_table(&p, &BIAS_HEADER, &all_bias)?;
    written.push(p);
    let p = out.join("coverage.csv");
    write_table(&p, &COVERAGE_HEADER, &all_cov)?;
    written.push(p);

    let cubic: Vec<&ScenarioResult> = results
        .iter()
        .filter(|r| r.config.variant == Variant::Cubic && r.method(Method::NaivePlusY).is_some())
        .collect();
    if !cubic.is_empty() {
        let rows: Vec<Vec<String>> = cubic.iter().flat_map(|r| coverage_rows(r)).collect();
        let p = out.join("naive_y_comparison.csv");
        write_table(&p, &COVERAGE_HEADER, &rows)?;
        written.push(p);
    }
    Ok(written)
}
