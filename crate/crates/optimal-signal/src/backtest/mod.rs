//! Rolling train-then-predict backtest engine.
//!
//! For each step beyond the warmup the engine holds the most recent model
//! fitted on the trailing `train_size` rows, evaluates the signal on the
//! current feature row, optionally flips it by the sign of the shadow
//! (uncorrected) strategy's previous-step PnL, gates it on a trailing
//! z-score, and sizes the position as `signal * price`. Everything the
//! engine consumes at step t — fits, standardization statistics, gate
//! statistics, the corrective sign — is a function of data strictly before
//! t; the feature row at t enters only the final signal evaluation.

mod metrics;

pub use metrics::{aggregate_metrics, Aggregates};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{rolling_z, StandardizationMode, StandardizationSpec};
use crate::solver::{self, FitResult, SolverConfig};
use crate::types::{FeaturePanel, PriceSeries};

/// Annualization for daily steps.
pub fn sqrt_252() -> f64 {
    252f64.sqrt()
}

/// Gate interpretation of the trailing z-score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    /// Trade only when `z > threshold`.
    LongOnly,
    /// Trade when `|z| > threshold`; negative signals short.
    #[default]
    TwoSided,
}

/// Backtest parameters.
#[derive(Debug, Clone, Serialize)]
pub struct BacktestConfig {
    /// Trailing window length used for each fit (in steps).
    pub train_size: usize,
    /// Refit cadence; 1 refits every step.
    pub retrain_every: usize,
    /// Z-score the signal must clear before a position is taken.
    pub gate_threshold: f64,
    pub gate_mode: GateMode,
    /// Multiply the signal by the sign of the uncorrected strategy's
    /// previous-step PnL.
    pub corrective_factor: bool,
    /// Reporting-only scale for Sharpe ratios (sqrt(252) for daily data).
    pub annualization_factor: f64,
    pub solver: SolverConfig,
    pub std_spec: StandardizationSpec,
}

impl BacktestConfig {
    pub fn new(train_size: usize) -> Self {
        Self {
            train_size,
            retrain_every: 1,
            gate_threshold: 1.0,
            gate_mode: GateMode::TwoSided,
            corrective_factor: false,
            annualization_factor: sqrt_252(),
            solver: SolverConfig::default(),
            std_spec: StandardizationSpec::global(),
        }
    }

    /// `n_features` is the column count of the raw panel.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.train_size < n_features + 3 {
            return Err(Error::InvalidConfig(format!(
                "train_size {} too small for {} features; need at least {}",
                self.train_size,
                n_features,
                n_features + 3
            )));
        }
        if self.retrain_every < 1 || self.retrain_every > self.train_size {
            return Err(Error::InvalidConfig(format!(
                "retrain_every must lie in [1, train_size], got {}",
                self.retrain_every
            )));
        }
        if !self.gate_threshold.is_finite() || self.gate_threshold < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gate_threshold must be finite and >= 0, got {}",
                self.gate_threshold
            )));
        }
        if !(self.annualization_factor > 0.0) || !self.annualization_factor.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "annualization_factor must be positive, got {}",
                self.annualization_factor
            )));
        }
        self.solver.validate()?;
        self.std_spec.validate()
    }
}

/// One emitted step. `signal` is NaN when no model was available (solver
/// failure in the active window); `gated` is true when the gate opened and
/// the position was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub date: NaiveDate,
    pub signal: f64,
    pub gated: bool,
    /// Currency position held at this step.
    pub position: f64,
    /// PnL realized at this step from the previous step's position.
    pub pnl: f64,
}

/// Outcome of one (re)fit inside the rolling run.
#[derive(Debug, Clone)]
pub struct RefitRecord {
    /// Index into the aligned input series.
    pub step: usize,
    pub date: NaiveDate,
    /// Survivor mask when the fit succeeded (post significance filter).
    pub kept_mask: Option<Vec<bool>>,
    pub objective: Option<f64>,
    pub error: Option<String>,
}

/// Full backtest output.
#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub records: Vec<StepRecord>,
    pub refits: Vec<RefitRecord>,
    pub aggregates: Aggregates,
    /// Windows whose fit failed; the strategy stood aside for those spans.
    pub solver_failures: usize,
}

/// Trailing z-score gate on a signal series: computes the z-score of
/// `signals[t]` against the up-to-`window` values strictly before `t` and
/// opens per `mode`. Closed when fewer than 2 past values exist or the
/// trailing standard deviation is zero.
pub fn gate_signal(
    signals: &[f64],
    t: usize,
    window: usize,
    threshold: f64,
    mode: GateMode,
) -> bool {
    if t >= signals.len() {
        return false;
    }
    let start = t.saturating_sub(window);
    gate_open(&signals[start..t], signals[t], threshold, mode)
}

fn gate_open(trailing: &[f64], current: f64, threshold: f64, mode: GateMode) -> bool {
    if trailing.len() < 2 {
        return false;
    }
    let n = trailing.len() as f64;
    let mean = trailing.iter().sum::<f64>() / n;
    let var = trailing.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if std <= 0.0 {
        return false;
    }
    let z = (current - mean) / std;
    match mode {
        GateMode::LongOnly => z > threshold,
        GateMode::TwoSided => z.abs() > threshold,
    }
}

/// PnL series for a position stream:
/// `pnl[t] = pos[t-1] * (price[t] - price[t-1]) / price[t-1]`.
///
/// `positions` may have one entry per price or omit the final (unused)
/// entry. Output has length `prices.len() - 1`.
pub fn compute_pnl(positions: &[f64], prices: &PriceSeries) -> Result<Vec<f64>> {
    let total = prices.len();
    if positions.len() != total && positions.len() != total - 1 {
        return Err(Error::MisalignedIndex(format!(
            "{} positions against {} prices",
            positions.len(),
            total
        )));
    }
    let p = prices.prices();
    Ok((1..total)
        .map(|t| positions[t - 1] * (p[t] - p[t - 1]) / p[t - 1])
        .collect())
}

/// Standardizes the raw feature row at `t` with the fit's stored training
/// statistics (global) or the trailing raw window ending at `t-1`
/// (rolling), prepends the intercept, and evaluates the signal.
fn signal_at(
    fit: &FitResult,
    raw_columns: &[Vec<f64>],
    t: usize,
) -> Result<f64> {
    let stats = fit.std_stats.as_ref().ok_or_else(|| {
        Error::InvalidConfig("fit carries no standardization statistics".into())
    })?;
    let mut row = Vec::with_capacity(stats.kept_columns.len() + 1);
    row.push(1.0);
    match stats.mode {
        StandardizationMode::Global => {
            for (k, &c) in stats.kept_columns.iter().enumerate() {
                row.push((raw_columns[c][t] - stats.means[k]) / stats.stds[k]);
            }
        }
        StandardizationMode::Rolling => {
            let window = stats.window.unwrap_or(2);
            for &c in &stats.kept_columns {
                row.push(rolling_z(&raw_columns[c], t, window));
            }
        }
    }
    fit.signal(&row)
}

/// Runs the rolling backtest. Solver failures inside a window are recorded
/// and the strategy stands aside (position 0) until the next successful
/// refit; they never abort the run.
pub fn run(
    prices: &PriceSeries,
    panel: &FeaturePanel,
    config: &BacktestConfig,
) -> Result<BacktestReport> {
    if panel.has_intercept() {
        return Err(Error::AlreadyAugmented);
    }
    config.validate(panel.num_columns())?;
    if panel.len() != prices.len()
        || panel
            .timestamps()
            .iter()
            .zip(prices.timestamps())
            .any(|(a, b)| a != b)
    {
        return Err(Error::MisalignedIndex(
            "panel and prices must share timestamps".into(),
        ));
    }
    let total = prices.len();
    let warmup = config.train_size;
    if total < warmup + 2 {
        return Err(Error::InsufficientData {
            required: warmup + 2,
            actual: total,
        });
    }

    let raw_columns: Vec<Vec<f64>> = (0..panel.num_columns())
        .map(|c| panel.values().column(c).to_vec())
        .collect();
    let price = prices.prices();
    let dates = prices.timestamps();

    let mut current_fit: Option<FitResult> = None;
    let mut solver_failures = 0usize;
    let mut refits = Vec::new();
    let mut records = Vec::with_capacity(total - warmup);

    let mut signal_history: Vec<f64> = Vec::new();
    let mut prev_position = 0.0f64;

    // Shadow stream: the same strategy without the corrective flip, whose
    // realized PnL drives the sign.
    let mut shadow_history: Vec<f64> = Vec::new();
    let mut shadow_prev_position = 0.0f64;
    let mut shadow_last_pnl = 0.0f64;

    for t in warmup..total {
        let step_return = (price[t] - price[t - 1]) / price[t - 1];
        let pnl = prev_position * step_return;
        let shadow_pnl = shadow_prev_position * step_return;

        if (t - warmup) % config.retrain_every == 0 {
            let window = (t - config.train_size)..t;
            let window_prices = prices.slice(window.clone())?;
            let window_panel = panel.slice(window)?;
            match solver::fit(&window_prices, &window_panel, &config.solver, &config.std_spec)
            {
                Ok(fit) => {
                    refits.push(RefitRecord {
                        step: t,
                        date: dates[t],
                        kept_mask: Some(fit.alpha.kept_mask.clone()),
                        objective: Some(fit.alpha.objective_value),
                        error: None,
                    });
                    current_fit = Some(fit);
                }
                Err(err) => {
                    refits.push(RefitRecord {
                        step: t,
                        date: dates[t],
                        kept_mask: None,
                        objective: None,
                        error: Some(err.to_string()),
                    });
                    solver_failures += 1;
                    current_fit = None;
                }
            }
        }

        let mut record_signal = f64::NAN;
        let mut gated = false;
        let mut position = 0.0;
        let mut shadow_position = 0.0;
        if let Some(fit) = &current_fit {
            match signal_at(fit, &raw_columns, t) {
                Ok(raw) if raw.is_finite() => {
                    let signal = if config.corrective_factor {
                        let sign = if shadow_last_pnl < 0.0 { -1.0 } else { 1.0 };
                        sign * raw
                    } else {
                        raw
                    };
                    let start = signal_history.len().saturating_sub(config.train_size);
                    gated = gate_open(
                        &signal_history[start..],
                        signal,
                        config.gate_threshold,
                        config.gate_mode,
                    );
                    record_signal = signal;
                    if gated {
                        position = signal * price[t];
                    }
                    signal_history.push(signal);

                    if config.corrective_factor {
                        let sstart = shadow_history.len().saturating_sub(config.train_size);
                        let shadow_gated = gate_open(
                            &shadow_history[sstart..],
                            raw,
                            config.gate_threshold,
                            config.gate_mode,
                        );
                        if shadow_gated {
                            shadow_position = raw * price[t];
                        }
                        shadow_history.push(raw);
                    }
                }
                _ => {
                    solver_failures += 1;
                }
            }
        }

        records.push(StepRecord {
            date: dates[t],
            signal: record_signal,
            gated,
            position,
            pnl,
        });
        prev_position = position;
        shadow_prev_position = shadow_position;
        shadow_last_pnl = shadow_pnl;
    }

    let aggregates = aggregate_metrics(&records, 0.0, config.annualization_factor)?;
    Ok(BacktestReport {
        records,
        refits,
        aggregates,
        solver_failures,
    })
}

/// One row of the training-size sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub train_size: usize,
    pub sharpe: Option<f64>,
    pub effective_sharpe: Option<f64>,
    pub turnover: Option<f64>,
    pub bips: Option<f64>,
    pub error: Option<String>,
}

/// Runs one backtest per training size (concurrently over shared read-only
/// inputs) and reports the headline metrics, rows ordered by size.
/// Duplicate sizes produce duplicate rows; per-size failures land in the
/// row's `error` column without affecting the others.
pub fn sweep_train_sizes(
    prices: &PriceSeries,
    panel: &FeaturePanel,
    base: &BacktestConfig,
    sizes: &[usize],
) -> Vec<SweepRow> {
    let mut ordered = sizes.to_vec();
    ordered.sort_unstable();
    ordered
        .par_iter()
        .map(|&train_size| {
            let config = BacktestConfig {
                train_size,
                ..base.clone()
            };
            match run(prices, panel, &config) {
                Ok(report) => SweepRow {
                    train_size,
                    sharpe: report.aggregates.sharpe,
                    effective_sharpe: report.aggregates.effective_sharpe,
                    turnover: report.aggregates.turnover,
                    bips: report.aggregates.bips,
                    error: None,
                },
                Err(err) => SweepRow {
                    train_size,
                    sharpe: None,
                    effective_sharpe: None,
                    turnover: None,
                    bips: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        (0..n as i64)
            .map(|i| start + chrono::Duration::days(i))
            .collect()
    }

    #[test]
    fn pnl_hand_case() {
        let prices = PriceSeries::new(dates(3), vec![100.0, 101.0, 99.0]).unwrap();
        let pnl = compute_pnl(&[200.0, 202.0], &prices).unwrap();
        assert_eq!(pnl, vec![2.0, -4.0]);
    }

    #[test]
    fn pnl_identity_when_signal_is_one() {
        // pos_t = price_t * 1 -> pnl_t = price_t - price_{t-1}
        let raw = vec![50.0, 51.5, 49.0, 52.25, 53.0];
        let prices = PriceSeries::new(dates(5), raw.clone()).unwrap();
        let pnl = compute_pnl(&raw, &prices).unwrap();
        for (got, want) in pnl.iter().zip(prices.diffs()) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
    }

    #[test]
    fn pnl_zero_positions() {
        let prices = PriceSeries::new(dates(4), vec![10.0, 11.0, 9.5, 10.2]).unwrap();
        let pnl = compute_pnl(&[0.0; 4], &prices).unwrap();
        assert!(pnl.iter().all(|&v| v == 0.0));
        assert!(matches!(
            compute_pnl(&[0.0; 2], &prices),
            Err(Error::MisalignedIndex(_))
        ));
    }

    #[test]
    fn gate_examples() {
        // constant history: std 0 -> closed
        assert!(!gate_signal(&[1.0, 1.0, 1.0, 5.0], 3, 10, 1.0, GateMode::TwoSided));
        // history [-1,0,1] has mean 0, sample std 1
        assert!(gate_signal(&[-1.0, 0.0, 1.0, 1.5], 3, 10, 1.0, GateMode::TwoSided));
        assert!(!gate_signal(&[-1.0, 0.0, 1.0, 0.5], 3, 10, 1.0, GateMode::TwoSided));
        // threshold 0, two-sided: any deviation from the mean opens
        assert!(gate_signal(&[-1.0, 0.0, 1.0, 0.1], 3, 10, 0.0, GateMode::TwoSided));
        // long-only ignores downside deviations
        assert!(!gate_signal(&[-1.0, 0.0, 1.0, -3.0], 3, 10, 1.0, GateMode::LongOnly));
        assert!(gate_signal(&[-1.0, 0.0, 1.0, 3.0], 3, 10, 1.0, GateMode::LongOnly));
        // insufficient history -> closed
        assert!(!gate_signal(&[1.0, 2.0], 1, 10, 0.0, GateMode::TwoSided));
    }

    #[test]
    fn gate_monotone_in_threshold() {
        let signals: Vec<f64> = (0..60)
            .map(|i| ((i * 29) % 13) as f64 * 0.37 - 2.0)
            .collect();
        let mut last_open = usize::MAX;
        for threshold in [0.0, 0.5, 1.0, 1.5, 2.5] {
            let open = (2..signals.len())
                .filter(|&t| gate_signal(&signals, t, 20, threshold, GateMode::TwoSided))
                .count();
            assert!(open <= last_open);
            last_open = open;
        }
    }

    #[test]
    fn config_validation() {
        let mut config = BacktestConfig::new(10);
        assert!(config.validate(3).is_ok());
        assert!(config.validate(8).is_err());
        config.retrain_every = 11;
        assert!(config.validate(3).is_err());
        config.retrain_every = 0;
        assert!(config.validate(3).is_err());
    }
}
