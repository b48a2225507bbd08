//! File-based front end: `fit`, `backtest`, and `sweep` commands over CSV
//! inputs, emitting machine-readable JSON/CSV reports.
//!
//! Every command is deterministic given (input files, config, seed):
//! reruns produce byte-identical outputs. Exit codes: 0 success, 2
//! configuration/validation error, 3 numerical/solver error.

mod config;
mod io;
mod plot;

pub use config::{BacktestSection, RunArgs, RunConfig};
pub use io::{file_sha256, load_aligned, load_features, load_prices, LoadedData};
pub use plot::render_cumulative_pnl;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::backtest::{self, Aggregates, BacktestReport};
use crate::error::Result;
use crate::preprocess::StandardizationStats;
use crate::solver::{self, FitResult};

/// Version stamp written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct InputHash {
    prices_sha256: String,
    features_sha256: String,
}

#[derive(Serialize)]
struct CoefficientEntry {
    name: String,
    value: f64,
    p_value: Option<f64>,
    kept: bool,
}

#[derive(Serialize)]
struct NamedValue {
    name: String,
    value: f64,
}

#[derive(Serialize)]
struct FitResultFile<'a> {
    schema_version: u32,
    objective_value: f64,
    sigma_condition: f64,
    iterations: Option<usize>,
    ridge_lambda: Option<f64>,
    /// Transformed-feature rows behind the moments.
    n_observations: usize,
    coefficients: Vec<CoefficientEntry>,
    /// PCA fits: the same signal re-expressed against the named columns.
    effective_coefficients: Option<Vec<NamedValue>>,
    projector: Option<Vec<Vec<f64>>>,
    standardization: &'a StandardizationStats,
    rows_used: usize,
    rows_dropped_prices: usize,
    rows_dropped_features: usize,
    input_hash: InputHash,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    schema_version: u32,
    train_size: usize,
    #[serde(flatten)]
    aggregates: &'a Aggregates,
    solver_failures: usize,
    n_refits: usize,
    rows_used: usize,
    input_hash: InputHash,
    config: &'a RunConfig,
}

fn log_load(data: &LoadedData) {
    if data.dropped_price_rows > 0 || data.dropped_feature_rows > 0 {
        eprintln!(
            "join: kept {} rows ({} price rows and {} feature rows outside the intersection)",
            data.rows_used, data.dropped_price_rows, data.dropped_feature_rows
        );
    }
    for (name, count) in &data.fill_counts {
        if *count > 0 {
            eprintln!("forward-fill: column '{name}' filled {count} cells");
        }
    }
}

fn input_hash(config: &RunConfig) -> Result<InputHash> {
    Ok(InputHash {
        prices_sha256: file_sha256(&config.prices)?,
        features_sha256: file_sha256(&config.features)?,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn coefficient_entries(fit: &FitResult) -> Vec<CoefficientEntry> {
    let names = fit
        .coefficient_names
        .clone()
        .unwrap_or_else(|| (0..fit.alpha.len()).map(|i| format!("c{i}")).collect());
    names
        .into_iter()
        .enumerate()
        .map(|(i, name)| CoefficientEntry {
            name,
            value: fit.alpha.coefficients[i],
            p_value: fit.p_values.as_ref().map(|p| p[i]),
            kept: fit.alpha.kept_mask[i],
        })
        .collect()
}

/// Fits on the whole (joined) dataset and writes `fit_result.json`.
pub fn cmd_fit(config: &RunConfig) -> Result<()> {
    config.validate()?;
    let data = load_aligned(&config.prices, &config.features, config.forward_fill)?;
    log_load(&data);

    let fit = solver::fit(
        &data.prices,
        &data.panel,
        &config.solver,
        &config.standardization,
    )?;

    let effective_coefficients = fit.projector.as_ref().map(|_| {
        let stats = fit.std_stats.as_ref();
        let mut names = vec![crate::types::INTERCEPT_NAME.to_string()];
        if let Some(stats) = stats {
            names.extend(stats.kept_names.iter().cloned());
        }
        fit.effective_coefficients()
            .into_iter()
            .zip(names)
            .map(|(value, name)| NamedValue { name, value })
            .collect::<Vec<_>>()
    });

    let out = FitResultFile {
        schema_version: SCHEMA_VERSION,
        objective_value: fit.diagnostics.objective_value,
        sigma_condition: fit.diagnostics.sigma_condition,
        iterations: fit.diagnostics.iterations,
        ridge_lambda: fit.diagnostics.ridge_lambda,
        n_observations: data.rows_used - 1,
        coefficients: coefficient_entries(&fit),
        effective_coefficients,
        projector: fit
            .projector
            .as_ref()
            .map(|pi| pi.rows().into_iter().map(|r| r.to_vec()).collect()),
        standardization: fit.std_stats.as_ref().expect("pipeline fit carries stats"),
        rows_used: data.rows_used,
        rows_dropped_prices: data.dropped_price_rows,
        rows_dropped_features: data.dropped_feature_rows,
        input_hash: input_hash(config)?,
        config,
    };

    std::fs::create_dir_all(&config.output_dir)?;
    let path = config.output_dir.join("fit_result.json");
    write_json(&path, &out)?;
    eprintln!(
        "fit: objective {:.6}, wrote {}",
        fit.diagnostics.objective_value,
        path.display()
    );
    Ok(())
}

fn write_report_csv(path: &Path, report: &BacktestReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(io_from_csv)?;
    writer
        .write_record(["date", "signal", "gated", "position", "pnl", "cum_pnl"])
        .map_err(io_from_csv)?;
    let mut cumulative = 0.0;
    for r in &report.records {
        cumulative += r.pnl;
        writer
            .write_record([
                r.date.to_string(),
                format_float(r.signal),
                r.gated.to_string(),
                format_float(r.position),
                format_float(r.pnl),
                format_float(cumulative),
            ])
            .map_err(io_from_csv)?;
    }
    writer.flush()?;
    Ok(())
}

/// Shortest round-trip float representation; stable across runs.
fn format_float(v: f64) -> String {
    v.to_string()
}

fn io_from_csv(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// Runs the rolling backtest and writes `report.csv` + `metrics.json`
/// (and `plot.svg` when asked).
pub fn cmd_backtest(config: &RunConfig, with_plot: bool) -> Result<()> {
    config.validate()?;
    let engine_config = config.backtest_config()?;
    let data = load_aligned(&config.prices, &config.features, config.forward_fill)?;
    log_load(&data);

    let report = backtest::run(&data.prices, &data.panel, &engine_config)?;

    std::fs::create_dir_all(&config.output_dir)?;
    write_report_csv(&config.output_dir.join("report.csv"), &report)?;

    let metrics = MetricsFile {
        schema_version: SCHEMA_VERSION,
        train_size: engine_config.train_size,
        aggregates: &report.aggregates,
        solver_failures: report.solver_failures,
        n_refits: report.refits.len(),
        rows_used: data.rows_used,
        input_hash: input_hash(config)?,
        config,
    };
    write_json(&config.output_dir.join("metrics.json"), &metrics)?;

    if with_plot {
        let svg = render_cumulative_pnl(&report.records);
        let mut file = std::fs::File::create(config.output_dir.join("plot.svg"))?;
        file.write_all(svg.as_bytes())?;
    }

    eprintln!(
        "backtest: {} steps, sharpe {}, wrote {}",
        report.aggregates.n_steps,
        report
            .aggregates
            .sharpe
            .map(|s| format!("{s:.4}"))
            .unwrap_or_else(|| "undefined".into()),
        config.output_dir.display()
    );
    Ok(())
}

/// Runs one backtest per training size and writes `sweep.csv`. Succeeds if
/// at least one size produced metrics.
pub fn cmd_sweep(config: &RunConfig, sizes: &[usize]) -> Result<()> {
    config.validate()?;
    if sizes.is_empty() {
        return Err(crate::error::Error::InvalidConfig(
            "sweep needs at least one training size".into(),
        ));
    }
    let mut base = config.backtest_config();
    // train_size may come purely from --sizes; backtest_config requires it.
    if base.is_err() {
        let mut patched = config.clone();
        patched.backtest.train_size = Some(sizes[0]);
        base = patched.backtest_config();
    }
    let base = base?;
    let data = load_aligned(&config.prices, &config.features, config.forward_fill)?;
    log_load(&data);

    let rows = backtest::sweep_train_sizes(&data.prices, &data.panel, &base, sizes);

    std::fs::create_dir_all(&config.output_dir)?;
    let path = config.output_dir.join("sweep.csv");
    let mut writer = csv::Writer::from_path(&path).map_err(io_from_csv)?;
    writer
        .write_record([
            "train_size",
            "sharpe",
            "effective_sharpe",
            "turnover",
            "bips",
            "error",
        ])
        .map_err(io_from_csv)?;
    for row in &rows {
        writer
            .write_record([
                row.train_size.to_string(),
                row.sharpe.map(format_float).unwrap_or_default(),
                row.effective_sharpe.map(format_float).unwrap_or_default(),
                row.turnover.map(format_float).unwrap_or_default(),
                row.bips.map(format_float).unwrap_or_default(),
                row.error.clone().unwrap_or_default(),
            ])
            .map_err(io_from_csv)?;
    }
    writer.flush()?;

    let succeeded = rows.iter().filter(|r| r.error.is_none()).count();
    eprintln!(
        "sweep: {} of {} sizes succeeded, wrote {}",
        succeeded,
        rows.len(),
        path.display()
    );
    if succeeded == 0 {
        let first_error = rows
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_else(|| "no sizes ran".into());
        return Err(crate::error::Error::InvalidConfig(format!(
            "every sweep size failed; first error: {first_error}"
        )));
    }
    Ok(())
}
