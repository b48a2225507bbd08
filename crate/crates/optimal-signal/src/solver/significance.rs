//! Statistical significance filtering.
//!
//! Each coefficient gets the per-column statistic
//! `t_i = sqrt(tau) * mean_i / std_i` of its transformed-feature column,
//! which follows a Student t-distribution with `tau - 1` degrees of
//! freedom under the null of no drift and reduces to the diagonal identity
//! `sqrt(tau) * mu_i / sigma_i` exactly. Coefficients whose two-sided
//! p-value reaches the threshold are zeroed and the closed form is re-run
//! on the survivors, so the kept coefficients stay jointly optimal and
//! normalized.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::types::{Alpha, Moments};

use super::{beta_neutral_with_condition, closed_form_with_condition, Diagnostics, FitResult};

pub(crate) struct FilterOutcome {
    pub alpha: Alpha,
    pub p_values: Vec<f64>,
    pub condition: f64,
}

/// Per-coefficient t statistic and two-sided p-value.
pub(crate) fn column_p_values(moments: &Moments) -> Result<(Vec<f64>, Vec<f64>)> {
    let tau = moments.tau();
    let dof = (tau - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidConfig(format!("student-t with {dof} dof: {e}")))?;
    let sqrt_tau = (tau as f64).sqrt();
    let mut t_stats = Vec::with_capacity(moments.dim());
    let mut p_values = Vec::with_capacity(moments.dim());
    for i in 0..moments.dim() {
        let mean = moments.mu()[i];
        let std = moments.sigma()[(i, i)].sqrt();
        let t = if std > 0.0 {
            sqrt_tau * mean / std
        } else if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY * mean.signum()
        };
        let p = if t.is_finite() {
            2.0 * dist.cdf(-t.abs())
        } else {
            0.0
        };
        t_stats.push(t);
        p_values.push(p);
    }
    Ok((t_stats, p_values))
}

/// Filter plus survivor re-fit; with `beta` present the re-fit keeps the
/// neutrality constraint exact on the surviving coordinates.
pub(crate) fn filter_refit(
    moments: &Moments,
    alpha: &Alpha,
    p_threshold: f64,
    beta: Option<&[f64]>,
) -> Result<FilterOutcome> {
    if !(p_threshold > 0.0 && p_threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "p_threshold must lie in (0, 1], got {p_threshold}"
        )));
    }
    if alpha.len() != moments.dim() {
        return Err(Error::DimensionMismatch {
            expected: moments.dim(),
            actual: alpha.len(),
        });
    }
    let (_, p_values) = column_p_values(moments)?;
    let kept: Vec<usize> = (0..moments.dim())
        .filter(|&i| p_values[i] < p_threshold)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyModel);
    }

    let sub_moments = moments.restrict(&kept);
    let (sub_alpha, condition) = match beta {
        Some(beta) => {
            let sub_beta: Vec<f64> = kept.iter().map(|&i| beta[i]).collect();
            beta_neutral_with_condition(&sub_moments, &sub_beta)?
        }
        None => closed_form_with_condition(&sub_moments)?,
    };

    let mut coefficients = vec![0.0; moments.dim()];
    let mut kept_mask = vec![false; moments.dim()];
    for (sub_idx, &i) in kept.iter().enumerate() {
        coefficients[i] = sub_alpha.coefficients[sub_idx];
        kept_mask[i] = true;
    }
    let objective = moments.objective(&coefficients)?;
    let alpha = Alpha {
        coefficients,
        objective_value: objective,
        kept_mask,
    };
    Ok(FilterOutcome {
        alpha,
        p_values,
        condition,
    })
}

/// Zeroes coefficients whose two-sided p-value is at or above
/// `p_threshold`, then re-fits the closed form on the surviving
/// sub-problem. Errors with [`Error::EmptyModel`] when nothing survives.
pub fn significance_filter(
    moments: &Moments,
    alpha: &Alpha,
    p_threshold: f64,
) -> Result<FitResult> {
    let outcome = filter_refit(moments, alpha, p_threshold, None)?;
    let mut result = FitResult::bare(
        outcome.alpha,
        Diagnostics {
            objective_value: 0.0,
            sigma_condition: outcome.condition,
            iterations: None,
            ridge_lambda: None,
        },
    );
    result.diagnostics.objective_value = result.alpha.objective_value;
    result.p_values = Some(outcome.p_values);
    Ok(result)
}
