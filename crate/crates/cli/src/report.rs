//! Result persistence: CSV tables and JSON run summaries.
//!
//! CSV numbers are written at full round-trip precision (shortest exact
//! decimal), so golden files stay stable across platforms.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;
use wqnet_core::dynamics::{EvolutionResult, Observable};
use wqnet_core::filtering::{EnsembleStats, TrajectoryRecord};
use wqnet_core::kernel::{DelayKernel, ItoTable};

use crate::config::RunConfig;

/// Time series table: `time` column plus one column per observable.
pub fn write_series_csv(
    path: &Path,
    times: &[f64],
    columns: &[(String, Vec<f64>)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["time".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.clone()));
    w.write_record(&header)?;
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![format_f64(*t)];
        for (_, series) in columns {
            row.push(format_f64(series[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Ensemble table: `time` plus `<name>_mean`, `<name>_stderr` pairs.
pub fn write_ensemble_csv(path: &Path, stats: &EnsembleStats, names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["time".to_string()];
    for name in names {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_stderr"));
    }
    w.write_record(&header)?;
    for (i, t) in stats.times.iter().enumerate() {
        let mut row = vec![format_f64(*t)];
        for k in 0..names.len() {
            row.push(format_f64(stats.mean[k][i]));
            row.push(format_f64(stats.stderr[k][i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One trajectory: grid, record increments and tracked expectations.
/// `dw`/`dy` rows are aligned with the step ending at that time (empty at
/// `t = 0`).
pub fn write_trajectory_csv(path: &Path, rec: &TrajectoryRecord, names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["time".to_string(), "dw".to_string(), "dy".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (i, t) in rec.times.iter().enumerate() {
        let mut row = vec![format_f64(*t)];
        if i == 0 {
            row.push(String::new());
            row.push(String::new());
        } else {
            row.push(format_f64(rec.dw[i - 1]));
            row.push(format_f64(rec.dy[i - 1]));
        }
        for series in &rec.observables {
            row.push(format_f64(series[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn format_f64(x: f64) -> String {
    // `{}` on f64 is the shortest representation that round-trips.
    format!("{x}")
}

/// JSON run summary: full parameter echo plus run diagnostics.
pub fn run_summary(
    config: &RunConfig,
    invariants: serde_json::Value,
    wall_seconds: f64,
    outputs: &[PathBuf],
) -> serde_json::Value {
    json!({
        "config": config,
        "invariants": invariants,
        "wall_seconds": wall_seconds,
        "seed": config.seed,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    })
}

pub fn evolution_invariants(result: &EvolutionResult) -> serde_json::Value {
    json!({
        "max_trace_deviation": result.invariants.max_trace_deviation,
        "max_hermiticity_residual": result.invariants.max_hermiticity_residual,
        "min_eigenvalue": result.invariants.min_eigenvalue,
    })
}

pub fn ensemble_invariants(stats: &EnsembleStats) -> serde_json::Value {
    json!({
        "min_eigenvalue": stats.min_eigenvalue,
        "max_purity": stats.max_purity,
        "trajectories": stats.trajectories,
    })
}

pub fn kernel_json(kernel: &DelayKernel) -> serde_json::Value {
    json!(kernel
        .terms()
        .iter()
        .map(|t| json!({"weight_re": t.weight.re, "weight_im": t.weight.im, "delay": t.delay}))
        .collect::<Vec<_>>())
}

pub fn ito_table_json(table: &ItoTable) -> serde_json::Value {
    let n = table.channel_count();
    let rows: Vec<Vec<serde_json::Value>> = (1..=n)
        .map(|j| {
            (1..=n)
                .map(|l| {
                    let e = table.entry(j, l);
                    json!({"re": e.re, "im": e.im})
                })
                .collect()
        })
        .collect();
    json!({"dt": table.dt(), "entries": rows})
}

/// Render a kernel as aligned text, one term per line.
pub fn kernel_text(kernel: &DelayKernel) -> String {
    if kernel.is_empty() {
        return "    (empty)\n".to_string();
    }
    let mut out = String::new();
    for t in kernel.terms() {
        out.push_str(&format!(
            "    {:>+12.6} {:>+12.6}i  at delay {:>10.6} μs\n",
            t.weight.re, t.weight.im, t.delay
        ));
    }
    out
}

/// Series extraction helper shared by simulate/acceptance paths.
pub fn observable_series(
    result: &EvolutionResult,
    tracked: &[(String, Observable)],
) -> Vec<(String, Vec<f64>)> {
    tracked
        .iter()
        .map(|(name, obs)| (name.clone(), result.series(*obs)))
        .collect()
}
