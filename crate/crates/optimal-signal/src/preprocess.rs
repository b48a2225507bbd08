//! Feature standardization and panel diagnostics.
//!
//! The fitting math assumes stationary, homoscedastic exogenous variables;
//! standardizing before the fit is how that assumption is enforced in
//! practice. Global mode z-scores each column with statistics of the given
//! (training) slice; rolling mode uses a trailing window that excludes the
//! current row, so the output at time t never peeks forward.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeaturePanel, PriceSeries};

/// Tolerance below which a column's standard deviation counts as zero.
fn constant_tol(mean: f64) -> f64 {
    1e-12 * (1.0 + mean.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StandardizationMode {
    #[default]
    Global,
    Rolling,
}

/// How to standardize exogenous variables before fitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandardizationSpec {
    pub mode: StandardizationMode,
    /// Trailing window length; rolling mode only.
    pub window: Option<usize>,
    /// Drop constant columns instead of erroring.
    pub drop_constant: bool,
}

impl Default for StandardizationSpec {
    fn default() -> Self {
        Self::global()
    }
}

impl StandardizationSpec {
    pub fn global() -> Self {
        Self {
            mode: StandardizationMode::Global,
            window: None,
            drop_constant: true,
        }
    }

    pub fn rolling(window: usize) -> Self {
        Self {
            mode: StandardizationMode::Rolling,
            window: Some(window),
            drop_constant: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            StandardizationMode::Global => Ok(()),
            StandardizationMode::Rolling => match self.window {
                Some(w) if w >= 2 => Ok(()),
                Some(w) => Err(Error::InvalidConfig(format!(
                    "rolling window must be >= 2, got {w}"
                ))),
                None => Err(Error::InvalidConfig(
                    "rolling standardization requires a window".into(),
                )),
            },
        }
    }
}

/// Per-column statistics retained from a standardization pass so the same
/// transform can be applied to rows seen later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mode: StandardizationMode,
    pub window: Option<usize>,
    /// Indices of surviving columns in the original panel.
    pub kept_columns: Vec<usize>,
    pub kept_names: Vec<String>,
    pub dropped_names: Vec<String>,
    /// Training means per kept column (global mode; empty for rolling).
    pub means: Vec<f64>,
    /// Training standard deviations per kept column (global mode).
    pub stds: Vec<f64>,
}

impl StandardizationStats {
    /// Applies the stored global transform to one raw feature row
    /// (without intercept). Rolling-mode stats are time dependent and are
    /// handled by the caller that owns the history.
    pub fn apply_row(&self, raw_row: &[f64]) -> Result<Vec<f64>> {
        if self.mode != StandardizationMode::Global {
            return Err(Error::InvalidConfig(
                "apply_row is only defined for global standardization".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.kept_columns.len());
        for (k, &col) in self.kept_columns.iter().enumerate() {
            let v = *raw_row.get(col).ok_or(Error::DimensionMismatch {
                expected: col + 1,
                actual: raw_row.len(),
            })?;
            out.push((v - self.means[k]) / self.stds[k]);
        }
        Ok(out)
    }
}

fn column_mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Standardizes a panel per `spec`, returning the new panel and the
/// statistics needed to transform future rows the same way.
pub fn standardize_with_stats(
    panel: &FeaturePanel,
    spec: &StandardizationSpec,
) -> Result<(FeaturePanel, StandardizationStats)> {
    spec.validate()?;
    if panel.has_intercept() {
        return Err(Error::AlreadyAugmented);
    }
    let rows = panel.len();
    if rows < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: rows,
        });
    }
    if spec.mode == StandardizationMode::Rolling {
        let window = spec.window.unwrap();
        if rows < window {
            return Err(Error::InsufficientHistory { window, rows });
        }
    }

    let mut kept_columns = Vec::new();
    let mut dropped_names = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for (c, name) in panel.names().iter().enumerate() {
        let col: Vec<f64> = panel.values().column(c).to_vec();
        let (mean, std) = column_mean_std(&col);
        if std <= constant_tol(mean) {
            if spec.drop_constant {
                dropped_names.push(name.clone());
                continue;
            }
            return Err(Error::ConstantColumn { name: name.clone() });
        }
        kept_columns.push(c);
        means.push(mean);
        stds.push(std);
    }

    let kept = kept_columns.len();
    let mut out = Array2::<f64>::zeros((rows, kept));
    match spec.mode {
        StandardizationMode::Global => {
            for (k, &c) in kept_columns.iter().enumerate() {
                for r in 0..rows {
                    out[(r, k)] = (panel.values()[(r, c)] - means[k]) / stds[k];
                }
            }
        }
        StandardizationMode::Rolling => {
            let window = spec.window.unwrap();
            for (k, &c) in kept_columns.iter().enumerate() {
                let col: Vec<f64> = panel.values().column(c).to_vec();
                for r in 0..rows {
                    out[(r, k)] = rolling_z(&col, r, window);
                }
            }
        }
    }

    let kept_names: Vec<String> = kept_columns
        .iter()
        .map(|&c| panel.names()[c].clone())
        .collect();
    let standardized =
        FeaturePanel::new(panel.timestamps().to_vec(), out, kept_names.clone())?;
    let stats = StandardizationStats {
        mode: spec.mode,
        window: spec.window,
        kept_columns,
        kept_names,
        dropped_names,
        means: if spec.mode == StandardizationMode::Global {
            means
        } else {
            Vec::new()
        },
        stds: if spec.mode == StandardizationMode::Global {
            stds
        } else {
            Vec::new()
        },
    };
    Ok((standardized, stats))
}

/// Standardizes a panel per `spec`.
pub fn standardize(panel: &FeaturePanel, spec: &StandardizationSpec) -> Result<FeaturePanel> {
    standardize_with_stats(panel, spec).map(|(p, _)| p)
}

/// Trailing z-score of `col[t]` over up to `window` strictly past rows.
/// Under-history rows (fewer than 2 past values) and zero-variance windows
/// map to 0.
pub(crate) fn rolling_z(col: &[f64], t: usize, window: usize) -> f64 {
    let start = t.saturating_sub(window);
    let past = &col[start..t];
    if past.len() < 2 {
        return 0.0;
    }
    let (mean, std) = column_mean_std(past);
    if std <= constant_tol(mean) {
        return 0.0;
    }
    (col[t] - mean) / std
}

/// One observation from [`validate_panel`].
#[derive(Debug, Clone, PartialEq)]
pub enum PanelIssue {
    MisalignedTimestamps { detail: String },
    NonFiniteEntry { row: usize, column: String },
    ConstantColumn { column: String },
    HighCorrelation { first: String, second: String, correlation: f64 },
}

impl std::fmt::Display for PanelIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PanelIssue::MisalignedTimestamps { detail } => {
                write!(f, "misaligned timestamps: {detail}")
            }
            PanelIssue::NonFiniteEntry { row, column } => {
                write!(f, "non-finite entry at row {row}, column '{column}'")
            }
            PanelIssue::ConstantColumn { column } => {
                write!(f, "constant column '{column}'")
            }
            PanelIssue::HighCorrelation {
                first,
                second,
                correlation,
            } => write!(
                f,
                "columns '{first}' and '{second}' are nearly redundant (correlation {correlation:.6})"
            ),
        }
    }
}

/// Reports data problems without failing: misalignment, non-finite cells,
/// constant columns, and near-duplicate feature pairs (|correlation| >
/// 0.999) that motivate L1 regularization.
pub fn validate_panel(panel: &FeaturePanel, prices: &PriceSeries) -> Vec<PanelIssue> {
    let mut issues = Vec::new();
    if panel.len() != prices.len() {
        issues.push(PanelIssue::MisalignedTimestamps {
            detail: format!(
                "panel has {} rows, prices have {}",
                panel.len(),
                prices.len()
            ),
        });
    } else if let Some((a, b)) = panel
        .timestamps()
        .iter()
        .zip(prices.timestamps())
        .find(|(a, b)| a != b)
    {
        issues.push(PanelIssue::MisalignedTimestamps {
            detail: format!("panel date {a} vs price date {b}"),
        });
    }
    issues.extend(scan_matrix(panel.values(), panel.names()));
    issues
}

/// Issue scan over a raw matrix that has not been validated yet, so NaN
/// cells can still be named. Used by loaders before panel construction;
/// [`validate_panel`] routes through it as well.
pub fn scan_matrix(values: ArrayView2<'_, f64>, names: &[String]) -> Vec<PanelIssue> {
    let mut issues = Vec::new();
    for ((r, c), v) in values.indexed_iter() {
        if !v.is_finite() {
            issues.push(PanelIssue::NonFiniteEntry {
                row: r,
                column: names[c].clone(),
            });
        }
    }

    let cols = values.ncols();
    let rows = values.nrows();
    if rows >= 2 {
        let mut stats = Vec::with_capacity(cols);
        for c in 0..cols {
            let col: Vec<f64> = values.column(c).to_vec();
            if col.iter().any(|v| !v.is_finite()) {
                stats.push(None);
                continue;
            }
            let (mean, std) = column_mean_std(&col);
            if std <= constant_tol(mean) {
                issues.push(PanelIssue::ConstantColumn {
                    column: names[c].clone(),
                });
                stats.push(None);
            } else {
                stats.push(Some((mean, std)));
            }
        }
        for i in 0..cols {
            let Some((mi, si)) = stats[i] else { continue };
            for j in (i + 1)..cols {
                let Some((mj, sj)) = stats[j] else { continue };
                let mut cov = 0.0;
                for r in 0..rows {
                    cov += (values[(r, i)] - mi) * (values[(r, j)] - mj);
                }
                cov /= (rows - 1) as f64;
                let corr = cov / (si * sj);
                if corr.abs() > 0.999 {
                    issues.push(PanelIssue::HighCorrelation {
                        first: names[i].clone(),
                        second: names[j].clone(),
                        correlation: corr,
                    });
                }
            }
        }
    }

    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use ndarray::arr2;

    fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        (0..n as i64)
            .map(|i| start + chrono::Duration::days(i))
            .collect()
    }

    fn panel_from(values: Array2<f64>, names: &[&str]) -> FeaturePanel {
        FeaturePanel::new(
            dates(values.nrows()),
            values,
            names.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn global_standardization_hand_case() {
        // column [1,2,3] -> [-1,0,1] with sample std 1
        let p = panel_from(arr2(&[[1.0], [2.0], [3.0]]), &["x1"]);
        let out = standardize(&p, &StandardizationSpec::global()).unwrap();
        let col: Vec<f64> = out.values().column(0).to_vec();
        assert_abs_diff_eq!(col[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(col[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(col[2], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn global_standardization_idempotent() {
        let p = panel_from(arr2(&[[-1.0], [0.0], [1.0]]), &["x1"]);
        let out = standardize(&p, &StandardizationSpec::global()).unwrap();
        for (a, b) in out.values().iter().zip(p.values().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn constant_column_dropped_or_rejected() {
        let values = arr2(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]);
        let p = panel_from(values.clone(), &["x1", "c"]);
        let (out, stats) = standardize_with_stats(&p, &StandardizationSpec::global()).unwrap();
        assert_eq!(out.num_columns(), 1);
        assert_eq!(stats.dropped_names, vec!["c".to_string()]);
        assert_eq!(stats.kept_columns, vec![0]);

        let mut spec = StandardizationSpec::global();
        spec.drop_constant = false;
        assert!(matches!(
            standardize(&p, &spec),
            Err(Error::ConstantColumn { .. })
        ));
    }

    #[test]
    fn rolling_uses_only_strict_past() {
        let n = 40;
        let col: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let mut values = Array2::<f64>::zeros((n, 1));
        for (i, v) in col.iter().enumerate() {
            values[(i, 0)] = *v;
        }
        let p = panel_from(values.clone(), &["x1"]);
        let spec = StandardizationSpec::rolling(20);
        let out = standardize(&p, &spec).unwrap();

        // mutate rows strictly after t; outputs at <= t unchanged
        let t = 25;
        let mut mutated = values;
        for r in (t + 1)..n {
            mutated[(r, 0)] = 999.0 + r as f64;
        }
        let p2 = panel_from(mutated, &["x1"]);
        let out2 = standardize(&p2, &spec).unwrap();
        for r in 0..=t {
            assert_eq!(out.values()[(r, 0)], out2.values()[(r, 0)]);
        }
    }

    #[test]
    fn rolling_window_check() {
        let p = panel_from(arr2(&[[1.0], [2.0], [3.0]]), &["x1"]);
        assert!(matches!(
            standardize(&p, &StandardizationSpec::rolling(5)),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn apply_row_matches_training_transform() {
        let p = panel_from(arr2(&[[1.0, 9.0], [2.0, 9.0], [3.0, 9.0], [6.0, 9.0]]), &["a", "c"]);
        let (out, stats) = standardize_with_stats(&p, &StandardizationSpec::global()).unwrap();
        let row = stats.apply_row(&[3.0, 9.0]).unwrap();
        assert_eq!(row.len(), 1);
        assert_abs_diff_eq!(row[0], out.values()[(2, 0)], epsilon = 1e-14);
    }

    #[test]
    fn validate_panel_reports_issues() {
        let prices = PriceSeries::new(dates(3), vec![1.0, 2.0, 3.0]).unwrap();
        let clean = panel_from(arr2(&[[1.0, 0.5], [2.0, -0.1], [3.0, 0.2]]), &["a", "b"]);
        assert!(validate_panel(&clean, &prices).is_empty());

        let dup = panel_from(
            arr2(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]),
            &["a", "a_copy"],
        );
        let issues = validate_panel(&dup, &prices);
        assert!(issues
            .iter()
            .any(|i| matches!(i, PanelIssue::HighCorrelation { .. })));
    }

    #[test]
    fn scan_matrix_names_nan_cell() {
        let mut values = arr2(&[[1.0, 0.5], [2.0, -0.1], [3.0, 0.2]]);
        values[(1, 1)] = f64::NAN;
        let names = vec!["a".to_string(), "b".to_string()];
        let issues = scan_matrix(values.view(), &names);
        assert!(issues.iter().any(|i| matches!(
            i,
            PanelIssue::NonFiniteEntry { row: 1, column } if column == "b"
        )));
    }
}
