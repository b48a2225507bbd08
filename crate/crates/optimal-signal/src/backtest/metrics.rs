//! Aggregate backtest metrics.
//!
//! Definitions used throughout (the effective variants restrict to steps
//! whose PnL came from a live position, i.e. `pos[t-1] != 0`):
//!
//! - sharpe: `annualization * mean(pnl) / std(pnl)` (sample std).
//! - turnover (%): `100 * mean(|pos[t] - pos[t-1]|) / mean(|pos[t]|)` with
//!   the denominator averaged over steps holding a position.
//! - bips: `1e4 * total_pnl / sum(|pos[t] - pos[t-1]|)`.
//!
//! Undefined values (zero volatility, no active steps, zero traded
//! notional) are reported as `None`, never as a crash.

use serde::Serialize;

use crate::error::{Error, Result};

use super::StepRecord;

/// Aggregate metrics over a backtest's step records.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub sharpe: Option<f64>,
    pub effective_sharpe: Option<f64>,
    /// Un-annualized per-step counterparts.
    pub sharpe_per_step: Option<f64>,
    pub effective_sharpe_per_step: Option<f64>,
    /// Percent.
    pub turnover: Option<f64>,
    pub effective_turnover: Option<f64>,
    pub bips: Option<f64>,
    pub effective_bips: Option<f64>,
    pub total_pnl: f64,
    pub max_gross_position: f64,
    pub n_steps: usize,
    /// Steps holding a nonzero position.
    pub n_active_steps: usize,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

fn sharpe_of(values: &[f64]) -> Option<f64> {
    let (mean, std) = mean_std(values)?;
    (std > 0.0).then(|| mean / std)
}

/// Computes aggregates from step records. `prev_position` is the position
/// held entering the first record (the engine always enters flat).
pub fn aggregate_metrics(
    records: &[StepRecord],
    prev_position: f64,
    annualization_factor: f64,
) -> Result<Aggregates> {
    if records.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: records.len(),
        });
    }

    let pnl: Vec<f64> = records.iter().map(|r| r.pnl).collect();
    let total_pnl: f64 = pnl.iter().sum();

    // Steps whose PnL was generated by a live position.
    let effective: Vec<usize> = (0..records.len())
        .filter(|&i| {
            let prev = if i == 0 {
                prev_position
            } else {
                records[i - 1].position
            };
            prev != 0.0
        })
        .collect();
    let effective_pnl: Vec<f64> = effective.iter().map(|&i| pnl[i]).collect();

    let sharpe_per_step = sharpe_of(&pnl);
    let effective_sharpe_per_step = sharpe_of(&effective_pnl);

    let deltas: Vec<f64> = (0..records.len())
        .map(|i| {
            let prev = if i == 0 {
                prev_position
            } else {
                records[i - 1].position
            };
            (records[i].position - prev).abs()
        })
        .collect();
    let traded: f64 = deltas.iter().sum();

    let held: Vec<f64> = records
        .iter()
        .filter(|r| r.position != 0.0)
        .map(|r| r.position.abs())
        .collect();
    let mean_held = (!held.is_empty()).then(|| held.iter().sum::<f64>() / held.len() as f64);

    let turnover = mean_held
        .map(|h| 100.0 * (deltas.iter().sum::<f64>() / deltas.len() as f64) / h)
        .filter(|v| v.is_finite());
    let effective_turnover = match (mean_held, effective.is_empty()) {
        (Some(h), false) => {
            let mean_delta =
                effective.iter().map(|&i| deltas[i]).sum::<f64>() / effective.len() as f64;
            Some(100.0 * mean_delta / h).filter(|v| v.is_finite())
        }
        _ => None,
    };

    let bips = (traded > 0.0).then(|| 1e4 * total_pnl / traded);
    let effective_bips = {
        let eff_traded: f64 = effective.iter().map(|&i| deltas[i]).sum();
        let eff_pnl: f64 = effective_pnl.iter().sum();
        (eff_traded > 0.0).then(|| 1e4 * eff_pnl / eff_traded)
    };

    Ok(Aggregates {
        sharpe: sharpe_per_step.map(|s| s * annualization_factor),
        effective_sharpe: effective_sharpe_per_step.map(|s| s * annualization_factor),
        sharpe_per_step,
        effective_sharpe_per_step,
        turnover,
        effective_turnover,
        bips,
        effective_bips,
        total_pnl,
        max_gross_position: records
            .iter()
            .map(|r| r.position.abs())
            .fold(0.0, f64::max),
        n_steps: records.len(),
        n_active_steps: records.iter().filter(|r| r.position != 0.0).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;

    fn records(positions: &[f64], pnls: &[f64]) -> Vec<StepRecord> {
        let start = NaiveDate::from_ymd_opt(2012, 3, 1).unwrap();
        positions
            .iter()
            .zip(pnls)
            .enumerate()
            .map(|(i, (&position, &pnl))| StepRecord {
                date: start + chrono::Duration::days(i as i64),
                signal: 0.0,
                gated: position != 0.0,
                position,
                pnl,
            })
            .collect()
    }

    #[test]
    fn alternating_pnl_has_zero_sharpe() {
        let rows = records(&[1.0; 4], &[1.0, -1.0, 1.0, -1.0]);
        let agg = aggregate_metrics(&rows, 1.0, sqrt_252()).unwrap();
        assert_abs_diff_eq!(agg.sharpe.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn three_point_annualized_sharpe() {
        // mean 2, sample std 1, sqrt(252) factor: absurd on 3 points but correct
        let rows = records(&[1.0; 3], &[1.0, 2.0, 3.0]);
        let agg = aggregate_metrics(&rows, 1.0, sqrt_252()).unwrap();
        assert_abs_diff_eq!(agg.sharpe.unwrap(), 31.74901573277509, epsilon = 1e-9);
        assert_abs_diff_eq!(agg.sharpe_per_step.unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn bips_hand_case() {
        // positions [0,10,10,0]: traded = 10+0+10 = 20; pnl 0.04 -> 20 bips
        let rows = records(&[0.0, 10.0, 10.0, 0.0], &[0.0, 0.0, 0.04, 0.0]);
        let agg = aggregate_metrics(&rows, 0.0, sqrt_252()).unwrap();
        assert_abs_diff_eq!(agg.bips.unwrap(), 20.0, epsilon = 1e-12);
        assert_eq!(agg.n_active_steps, 2);
        assert_abs_diff_eq!(agg.max_gross_position, 10.0);
    }

    #[test]
    fn zero_volatility_is_marked_not_fatal() {
        let rows = records(&[1.0; 3], &[0.5, 0.5, 0.5]);
        let agg = aggregate_metrics(&rows, 1.0, sqrt_252()).unwrap();
        assert!(agg.sharpe.is_none());
        assert_abs_diff_eq!(agg.total_pnl, 1.5);
    }

    #[test]
    fn effective_equals_full_when_every_step_is_live() {
        let positions = [3.0, -2.0, 4.0, 1.5, 2.0];
        let pnls = [0.3, -0.1, 0.25, 0.05, -0.2];
        let rows = records(&positions, &pnls);
        let agg = aggregate_metrics(&rows, 5.0, sqrt_252()).unwrap();
        assert_abs_diff_eq!(
            agg.sharpe.unwrap(),
            agg.effective_sharpe.unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            agg.turnover.unwrap(),
            agg.effective_turnover.unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn effective_excludes_flat_entries() {
        // first step enters from flat: its pnl is excluded from effective
        let rows = records(&[2.0, 2.0, 0.0], &[0.0, 0.7, -0.3]);
        let agg = aggregate_metrics(&rows, 0.0, 1.0).unwrap();
        // effective pnls are [0.7, -0.3]
        let (mean, std) = (0.2, (2.0 * 0.25f64).sqrt());
        assert_abs_diff_eq!(
            agg.effective_sharpe_per_step.unwrap(),
            mean / std,
            epsilon = 1e-12
        );
    }

    use super::super::sqrt_252;
}
