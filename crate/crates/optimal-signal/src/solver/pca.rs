//! PCA-truncated fit.
//!
//! The eigenbasis is taken from the covariance of the *transformed*
//! features, not the raw ones: the exploitable structure lives in the
//! covariance of `(price[t]-price[t-1]) * X[t-1]`. Because principal
//! components are uncorrelated in sample, the optimum in component space
//! reduces to the diagonal weights `(mean_i/var_i) / sqrt(sum mean_j^2/var_j)`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{Alpha, Moments, TransformedPanel};

use super::{Diagnostics, FitResult};

/// Relative eigenvalue floor below which a direction counts as rank-lost.
const RANK_TOL: f64 = 1e-12;

/// Diagonal closed form on per-component means and variances.
pub(crate) fn diagonal_alpha(means: &[f64], variances: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut normalizer_sq = 0.0;
    for (m, v) in means.iter().zip(variances) {
        if *v <= 0.0 {
            return Err(Error::DegenerateVariance);
        }
        normalizer_sq += m * m / v;
    }
    if normalizer_sq <= 0.0 {
        return Err(Error::ZeroMeanVector);
    }
    let normalizer = normalizer_sq.sqrt();
    let alpha = means
        .iter()
        .zip(variances)
        .map(|(m, v)| (m / v) / normalizer)
        .collect();
    Ok((alpha, normalizer))
}

/// PCA fit returning the component moments as well, so the significance
/// filter can run in component space.
pub(crate) fn fit_pca_full(
    transformed: &TransformedPanel,
    k: usize,
) -> Result<(FitResult, Moments)> {
    if k < 1 {
        return Err(Error::InvalidConfig("pca_k must be >= 1".into()));
    }
    let moments = Moments::estimate(transformed)?;
    let dim = moments.dim();
    let (eigenvalues, vectors) = linalg::symmetric_eigen(moments.sigma());
    let max_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let rank = eigenvalues
        .iter()
        .filter(|&&l| l > RANK_TOL * max_eigenvalue && l > 0.0)
        .count();
    if k > rank {
        return Err(Error::RankDeficient { requested: k, rank });
    }

    // Top-k eigenvector rows with a deterministic sign: the entry of
    // largest magnitude (first on ties) is made positive.
    let mut projector = Array2::<f64>::zeros((k, dim));
    for r in 0..k {
        let row = vectors.row(r);
        let mut lead = 0;
        for c in 1..dim {
            if row[c].abs() > row[lead].abs() {
                lead = c;
            }
        }
        let flip = if row[lead] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..dim {
            projector[(r, c)] = flip * row[c];
        }
    }

    let projected = transformed.values().dot(&projector.t());
    let component_panel =
        TransformedPanel::from_parts(transformed.timestamps().to_vec(), projected);
    let component_moments = Moments::estimate(&component_panel)?;

    let means: Vec<f64> = component_moments.mu().to_vec();
    let variances: Vec<f64> = (0..k).map(|i| component_moments.sigma()[(i, i)]).collect();
    let (coefficients, objective) = diagonal_alpha(&means, &variances)?;

    let condition = if eigenvalues[k - 1] > 0.0 {
        max_eigenvalue / eigenvalues[k - 1]
    } else {
        f64::INFINITY
    };
    let mut result = FitResult::bare(
        Alpha::new(coefficients, objective)?,
        Diagnostics {
            objective_value: objective,
            sigma_condition: condition,
            iterations: None,
            ridge_lambda: None,
        },
    );
    result.projector = Some(projector);
    Ok((result, component_moments))
}

/// Fit restricted to the top `k` principal components of the transformed
/// panel. The result's projector maps standardized rows into component
/// space; its signal is `alpha' (Pi x)`.
pub fn fit_pca(transformed: &TransformedPanel, k: usize) -> Result<FitResult> {
    fit_pca_full(transformed, k).map(|(result, _)| result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::fit_closed_form;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use ndarray::arr2;

    fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        (0..n as i64)
            .map(|i| start + chrono::Duration::days(i))
            .collect()
    }

    #[test]
    fn diagonal_formula_frozen_case() {
        // component stats mu=(0.2, 0.1), std=(1, 2)
        let (alpha, normalizer) = diagonal_alpha(&[0.2, 0.1], &[1.0, 4.0]).unwrap();
        assert_abs_diff_eq!(normalizer, 0.20615528128088306, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha[0], 0.9701425001453319, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha[1], 0.12126781251816648, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_panel_matches_formula_and_closed_form() {
        // Columns with exact sample stats mean 0.2 std 1, mean 0.1 std 2,
        // and exactly zero sample cross-covariance.
        let b = (4.0f64 / 3.0).sqrt();
        let values = arr2(&[
            [0.2 - 1.0, 0.1 + b],
            [0.2 + 1.0, 0.1 + b],
            [0.2, 0.1 - 2.0 * b],
        ]);
        let panel = TransformedPanel::from_parts(dates(3), values);
        let result = fit_pca(&panel, 2).unwrap();

        // eigenvalues are 4 and 1, so component order is (std-2, std-1)
        let pi = result.projector.as_ref().unwrap();
        assert_abs_diff_eq!(pi[(0, 1)].abs(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pi[(0, 0)].abs(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(result.alpha.coefficients[0], 0.12126781251816648, epsilon = 1e-9);
        assert_abs_diff_eq!(result.alpha.coefficients[1], 0.9701425001453319, epsilon = 1e-9);

        // cross-check against the general closed form on the component moments
        let moments = Moments::estimate(&panel).unwrap();
        let closed = fit_closed_form(&moments).unwrap();
        assert_abs_diff_eq!(
            result.alpha.objective_value,
            closed.objective_value,
            epsilon = 1e-10
        );
    }

    #[test]
    fn single_component_projector_is_orthonormal() {
        let values = arr2(&[
            [1.0, 0.9, 0.1],
            [-0.8, -0.7, 0.0],
            [0.5, 0.6, -0.2],
            [0.1, 0.0, 0.3],
            [-0.4, -0.5, 0.05],
        ]);
        let panel = TransformedPanel::from_parts(dates(5), values);
        let result = fit_pca(&panel, 1).unwrap();
        let pi = result.projector.as_ref().unwrap();
        assert_eq!(pi.nrows(), 1);
        let norm: f64 = pi.row(0).iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn rank_deficient_detected() {
        // two identical columns: rank 1
        let values = arr2(&[[1.0, 1.0], [2.0, 2.0], [-1.0, -1.0], [0.5, 0.5]]);
        let panel = TransformedPanel::from_parts(dates(4), values);
        match fit_pca(&panel, 2) {
            Err(Error::RankDeficient { requested, rank }) => {
                assert_eq!(requested, 2);
                assert_eq!(rank, 1);
            }
            other => panic!("expected RankDeficient, got {other:?}"),
        }
        assert!(fit_pca(&panel, 1).is_ok());
    }
}
