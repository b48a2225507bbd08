//! Closed-form Sharpe maximization and its regularized variants.
//!
//! The unconstrained maximizer of `alpha' mu / sqrt(alpha' sigma alpha)` is
//! `sigma^-1 mu`, scaled so the PnL has unit standard deviation. The other
//! entry points reshape that problem: an L2 ridge repairs singular
//! covariances, a linear projection makes the signal uncorrelated with a
//! chosen series, PCA truncation fits in the top eigenspace of the
//! transformed features, a Student-t filter drops insignificant
//! coefficients, and an L1 penalty trades Sharpe for sparsity.

mod l1;
mod pca;
mod significance;

pub use l1::{fit_l1, L1Options};
pub use pca::fit_pca;
pub use significance::significance_filter;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::preprocess::{standardize_with_stats, StandardizationSpec, StandardizationStats};
use crate::types::{Alpha, FeaturePanel, Moments, PriceSeries, TransformedPanel};

/// The two L2 covariance regularization forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum L2Form {
    /// `sigma + lambda * I`
    #[default]
    Additive,
    /// `(sigma + lambda * (||sigma||_F / dim) * I) / (1 + lambda)`,
    /// which keeps the overall scale of sigma comparable.
    Normalized,
}

/// Regularization and constraint settings for a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub l2_lambda: f64,
    pub l2_form: L2Form,
    /// Number of principal components to retain; PCA route when set.
    pub pca_k: Option<usize>,
    pub l1_lambda: f64,
    /// Scale the L1 penalty by the unregularized maximum of the objective.
    pub l1_scaled: bool,
    /// Keep only coefficients with two-sided p-value below this.
    pub p_threshold: Option<f64>,
    /// Enforce `alpha' beta = 0` against this vector (intercept entry
    /// included; length must match the fitted coefficient count).
    pub beta_target: Option<Vec<f64>>,
    /// Retry with a tiny additive ridge when the covariance fails the
    /// condition-number guard.
    pub ridge_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 0.0,
            l2_form: L2Form::Additive,
            pca_k: None,
            l1_lambda: 0.0,
            l1_scaled: false,
            p_threshold: None,
            beta_target: None,
            ridge_fallback: false,
        }
    }
}

impl SolverConfig {
    /// Rejects out-of-range values and combinations the method does not
    /// define. PCA is an exclusive route: it rebuilds its own moments from
    /// the transformed panel, so pairing it with L2, L1, or a neutrality
    /// target would silently ignore the other setting. L1 iterates away
    /// from the projected optimum, so exact neutrality cannot be promised
    /// under it either.
    pub fn validate(&self) -> Result<()> {
        if !self.l2_lambda.is_finite() || self.l2_lambda < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "l2_lambda must be finite and >= 0, got {}",
                self.l2_lambda
            )));
        }
        if !self.l1_lambda.is_finite() || self.l1_lambda < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "l1_lambda must be finite and >= 0, got {}",
                self.l1_lambda
            )));
        }
        if let Some(p) = self.p_threshold {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "p_threshold must lie in (0, 1], got {p}"
                )));
            }
        }
        if let Some(k) = self.pca_k {
            if k < 1 {
                return Err(Error::InvalidConfig("pca_k must be >= 1".into()));
            }
            if self.l1_lambda > 0.0 {
                return Err(Error::ConfigConflict(
                    "pca_k cannot be combined with l1_lambda".into(),
                ));
            }
            if self.l2_lambda > 0.0 {
                return Err(Error::ConfigConflict(
                    "pca_k cannot be combined with l2_lambda".into(),
                ));
            }
            if self.beta_target.is_some() {
                return Err(Error::ConfigConflict(
                    "pca_k cannot be combined with beta_target".into(),
                ));
            }
        }
        if self.beta_target.is_some() && self.l1_lambda > 0.0 {
            return Err(Error::ConfigConflict(
                "beta_target cannot be combined with l1_lambda".into(),
            ));
        }
        Ok(())
    }
}

/// Per-fit diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Empirical Sharpe per step at the fitted coefficients.
    pub objective_value: f64,
    /// Spectral condition number of the covariance actually solved; for
    /// PCA fits, the ratio of the largest retained eigenvalue to the
    /// smallest retained one.
    pub sigma_condition: f64,
    /// Iterations used by the L1 ascent, when that route ran.
    pub iterations: Option<usize>,
    /// Additive ridge injected by `ridge_fallback`, when it triggered.
    pub ridge_lambda: Option<f64>,
}

/// A fitted model: coefficients plus everything needed to evaluate the
/// signal on rows seen later.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub alpha: Alpha,
    /// Two-sided p-values per coefficient (significance filter runs only).
    pub p_values: Option<Vec<f64>>,
    /// Rows are the retained principal axes (PCA fits only).
    pub projector: Option<Array2<f64>>,
    pub diagnostics: Diagnostics,
    /// Standardization of the training window (pipeline fits only).
    pub std_stats: Option<StandardizationStats>,
    /// Names matching `alpha.coefficients` (intercept first; `pc1..` for
    /// PCA fits).
    pub coefficient_names: Option<Vec<String>>,
}

impl FitResult {
    fn bare(alpha: Alpha, diagnostics: Diagnostics) -> Self {
        Self {
            alpha,
            p_values: None,
            projector: None,
            diagnostics,
            std_stats: None,
            coefficient_names: None,
        }
    }

    /// Signal value for one standardized row with the intercept prepended:
    /// `alpha' x`, or `alpha' (Pi x)` for PCA fits.
    pub fn signal(&self, row: &[f64]) -> Result<f64> {
        match &self.projector {
            Some(pi) => {
                if row.len() != pi.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: pi.ncols(),
                        actual: row.len(),
                    });
                }
                let mut signal = 0.0;
                for (coef, axis) in self.alpha.coefficients.iter().zip(pi.rows()) {
                    let component: f64 = axis.iter().zip(row).map(|(a, x)| a * x).sum();
                    signal += coef * component;
                }
                Ok(signal)
            }
            None => {
                if row.len() != self.alpha.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.alpha.len(),
                        actual: row.len(),
                    });
                }
                Ok(self
                    .alpha
                    .coefficients
                    .iter()
                    .zip(row)
                    .map(|(a, x)| a * x)
                    .sum())
            }
        }
    }

    /// Coefficients expressed in the row basis: identical to
    /// `alpha.coefficients` for direct fits, `Pi' alpha` for PCA fits.
    pub fn effective_coefficients(&self) -> Vec<f64> {
        match &self.projector {
            Some(pi) => {
                let mut out = vec![0.0; pi.ncols()];
                for (coef, axis) in self.alpha.coefficients.iter().zip(pi.rows()) {
                    for (o, a) in out.iter_mut().zip(axis) {
                        *o += coef * a;
                    }
                }
                out
            }
            None => self.alpha.coefficients.clone(),
        }
    }
}

fn sigma_quadratic(moments: &Moments, alpha: &[f64]) -> f64 {
    let a = ndarray::aview1(alpha);
    a.dot(&moments.sigma().dot(&a))
}

/// Closed form plus the condition number it solved under.
pub(crate) fn closed_form_with_condition(moments: &Moments) -> Result<(Alpha, f64)> {
    let mu = moments.mu();
    if mu.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroMeanVector);
    }
    let (solution, condition) =
        linalg::guarded_spd_solve(moments.sigma(), mu, linalg::MAX_CONDITION)?;
    let drift = mu.dot(&solution); // mu' sigma^-1 mu
    if !(drift > 0.0) || !drift.is_finite() {
        return Err(Error::SingularCovariance { condition });
    }
    let mut coefficients: Vec<f64> = solution.iter().map(|v| v / drift.sqrt()).collect();
    // Exact renormalization so alpha' sigma alpha = 1 holds regardless of
    // solve error.
    let q = sigma_quadratic(moments, &coefficients);
    if q > 0.0 && q.is_finite() {
        let scale = q.sqrt();
        for c in &mut coefficients {
            *c /= scale;
        }
    }
    let objective = moments.objective(&coefficients)?;
    Ok((Alpha::new(coefficients, objective)?, condition))
}

/// Unconstrained Sharpe maximizer `sigma^-1 mu / sqrt(mu' sigma^-1 mu)`.
///
/// The result satisfies `alpha' sigma alpha = 1` and `alpha' mu >= 0`.
/// Requires an invertible covariance (condition number below 1e12) and a
/// nonzero mean vector.
pub fn fit_closed_form(moments: &Moments) -> Result<Alpha> {
    closed_form_with_condition(moments).map(|(alpha, _)| alpha)
}

/// Empirical exposure vector `beta_i = mean_t(y_t * X_{i,t})`, one entry
/// per panel column. Fitting against it with [`fit_beta_neutral`] makes the
/// signal empirically uncorrelated with `y`.
pub fn compute_beta(panel: &FeaturePanel, target: &[f64]) -> Result<Vec<f64>> {
    if target.len() != panel.len() {
        return Err(Error::MisalignedIndex(format!(
            "target has {} rows, panel has {}",
            target.len(),
            panel.len()
        )));
    }
    let rows = panel.len() as f64;
    let values = panel.values();
    let mut beta = vec![0.0; panel.num_columns()];
    for (r, y) in target.iter().enumerate() {
        for (c, b) in beta.iter_mut().enumerate() {
            *b += y * values[(r, c)];
        }
    }
    for b in &mut beta {
        *b /= rows;
        if !b.is_finite() {
            return Err(Error::NonFinite("beta vector".into()));
        }
    }
    Ok(beta)
}

pub(crate) fn beta_neutral_with_condition(
    moments: &Moments,
    beta: &[f64],
) -> Result<(Alpha, f64)> {
    if beta.len() != moments.dim() {
        return Err(Error::DimensionMismatch {
            expected: moments.dim(),
            actual: beta.len(),
        });
    }
    let beta_view = ndarray::aview1(beta);
    let (sigma_inv_beta, condition) =
        linalg::guarded_spd_solve(moments.sigma(), beta_view, linalg::MAX_CONDITION)?;
    let beta_metric = beta_view.dot(&sigma_inv_beta);
    if !(beta_metric > 0.0) || !beta_metric.is_finite() {
        return Err(Error::DegenerateConstraint(
            "beta' sigma^-1 beta is not positive (zero beta?)".into(),
        ));
    }
    let mu = moments.mu();
    let shift = mu.dot(&sigma_inv_beta) / beta_metric;
    let projected: Array1<f64> = mu
        .iter()
        .zip(beta)
        .map(|(m, b)| m - shift * b)
        .collect();

    let mu_norm = mu.dot(&mu).sqrt();
    let projected_norm = projected.dot(&projected).sqrt();
    if projected_norm <= 1e-10 * mu_norm {
        return Err(Error::DegenerateConstraint(
            "projected mean vanishes: mu is parallel to beta in the sigma^-1 metric".into(),
        ));
    }

    let tilted = moments.with_mu(projected);
    let (mut alpha, _) = closed_form_with_condition(&tilted)?;
    // Report the objective against the original mean; identical to the
    // tilted objective because alpha' beta = 0.
    alpha.objective_value = moments.objective(&alpha.coefficients)?;
    Ok((alpha, condition))
}

/// Sharpe maximizer under the constraint `alpha' beta = 0`: projects the
/// mean to `mu - (mu' sigma^-1 beta / beta' sigma^-1 beta) beta` and runs
/// the closed form on the projected problem.
pub fn fit_beta_neutral(moments: &Moments, beta: &[f64]) -> Result<Alpha> {
    beta_neutral_with_condition(moments, beta).map(|(alpha, _)| alpha)
}

/// Covariance regularization: additive `sigma + lambda I`, or the
/// scale-preserving normalized form. The mean and sample count are
/// untouched; `lambda = 0` returns the input exactly.
pub fn regularize_l2(moments: &Moments, lambda2: f64, form: L2Form) -> Moments {
    debug_assert!(lambda2 >= 0.0, "lambda2 must be nonnegative");
    if lambda2 == 0.0 {
        return moments.clone();
    }
    let dim = moments.dim();
    let mut sigma = moments.sigma().to_owned();
    match form {
        L2Form::Additive => {
            for i in 0..dim {
                sigma[(i, i)] += lambda2;
            }
        }
        L2Form::Normalized => {
            let frobenius = sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ridge = lambda2 * frobenius / dim as f64;
            for i in 0..dim {
                sigma[(i, i)] += ridge;
            }
            sigma /= 1.0 + lambda2;
        }
    }
    moments.with_sigma(sigma)
}

/// Ridge injected when `ridge_fallback` is set and the covariance fails
/// the condition guard: 1e-8 of the average eigenvalue scale.
fn fallback_ridge(moments: &Moments) -> Option<f64> {
    let dim = moments.dim();
    let trace: f64 = (0..dim).map(|i| moments.sigma()[(i, i)]).sum();
    let lambda = 1e-8 * trace / dim as f64;
    (lambda > 0.0 && lambda.is_finite()).then_some(lambda)
}

/// Full training pipeline: standardize, add the intercept, build the
/// lagged-feature transform, estimate moments, then run the configured
/// route (closed form, PCA, or L1) with optional L2 regularization,
/// neutrality constraint, and significance filter.
///
/// The returned [`FitResult`] carries the standardization statistics and
/// coefficient names needed to evaluate the signal on rows outside the
/// training window. When both a neutrality target and the significance
/// filter are active, the survivor re-fit keeps the constraint exact by
/// projecting within the surviving coordinates.
pub fn fit(
    prices: &PriceSeries,
    panel: &FeaturePanel,
    config: &SolverConfig,
    std_spec: &StandardizationSpec,
) -> Result<FitResult> {
    config.validate()?;
    if panel.has_intercept() {
        // The pipeline owns the intercept column.
        return Err(Error::AlreadyAugmented);
    }
    let (std_panel, stats) = standardize_with_stats(panel, std_spec)?;
    let augmented = std_panel.augment_with_intercept()?;
    let dim = augmented.num_columns();
    if let Some(k) = config.pca_k {
        if k > dim {
            return Err(Error::InvalidConfig(format!(
                "pca_k {k} exceeds the {dim} available columns"
            )));
        }
    }
    if let Some(beta) = &config.beta_target {
        if beta.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: beta.len(),
            });
        }
    }
    let transformed = TransformedPanel::from_features(&augmented, prices)?;
    let moments = Moments::estimate(&transformed)?;

    let mut result = if let Some(k) = config.pca_k {
        let (mut result, component_moments) = pca::fit_pca_full(&transformed, k)?;
        if let Some(p) = config.p_threshold {
            let outcome =
                significance::filter_refit(&component_moments, &result.alpha, p, None)?;
            result.diagnostics.objective_value = outcome.alpha.objective_value;
            result.alpha = outcome.alpha;
            result.p_values = Some(outcome.p_values);
        }
        result
    } else {
        let mut moments = regularize_l2(&moments, config.l2_lambda, config.l2_form);
        let mut ridge_lambda = None;
        if config.ridge_fallback {
            let eigenvalues = crate::linalg::symmetric_eigenvalues(&moments.sigma().to_owned());
            let condition = crate::linalg::condition_number(&eigenvalues);
            if !condition.is_finite() || condition >= linalg::MAX_CONDITION {
                if let Some(lambda) = fallback_ridge(&moments) {
                    moments = regularize_l2(&moments, lambda, L2Form::Additive);
                    ridge_lambda = Some(lambda);
                }
            }
        }

        let beta = config.beta_target.as_deref();
        let (alpha, condition, iterations) = if config.l1_lambda > 0.0 {
            let l1 = fit_l1(
                &moments,
                config.l1_lambda,
                config.l1_scaled,
                &L1Options::default(),
            )?;
            (
                l1.alpha,
                l1.diagnostics.sigma_condition,
                l1.diagnostics.iterations,
            )
        } else if let Some(beta) = beta {
            let (alpha, condition) = beta_neutral_with_condition(&moments, beta)?;
            (alpha, condition, None)
        } else {
            let (alpha, condition) = closed_form_with_condition(&moments)?;
            (alpha, condition, None)
        };

        let mut result = FitResult::bare(
            alpha,
            Diagnostics {
                objective_value: 0.0,
                sigma_condition: condition,
                iterations,
                ridge_lambda,
            },
        );
        result.diagnostics.objective_value = result.alpha.objective_value;

        if let Some(p) = config.p_threshold {
            let outcome = significance::filter_refit(&moments, &result.alpha, p, beta)?;
            result.diagnostics.objective_value = outcome.alpha.objective_value;
            result.alpha = outcome.alpha;
            result.p_values = Some(outcome.p_values);
        }
        result
    };

    let names = match &result.projector {
        Some(pi) => (1..=pi.nrows()).map(|i| format!("pc{i}")).collect(),
        None => {
            let mut names = Vec::with_capacity(dim);
            names.push(crate::types::INTERCEPT_NAME.to_string());
            names.extend(stats.kept_names.iter().cloned());
            names
        }
    };
    result.coefficient_names = Some(names);
    result.std_stats = Some(stats);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use ndarray::{arr1, arr2};

    fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2015, 6, 1).unwrap();
        (0..n as i64)
            .map(|i| start + chrono::Duration::days(i))
            .collect()
    }

    fn diag_moments(mu: &[f64], diag: &[f64], tau: usize) -> Moments {
        let dim = mu.len();
        let mut sigma = Array2::<f64>::zeros((dim, dim));
        for i in 0..dim {
            sigma[(i, i)] = diag[i];
        }
        Moments::new(arr1(mu), sigma, tau).unwrap()
    }

    #[test]
    fn closed_form_one_dimensional() {
        // mu=[0.5], sigma=[[4]]: alpha = [0.5], objective 0.25
        let m = diag_moments(&[0.5], &[4.0], 10);
        let alpha = fit_closed_form(&m).unwrap();
        assert_abs_diff_eq!(alpha.coefficients[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha.objective_value, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(
            sigma_quadratic(&m, &alpha.coefficients),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn closed_form_identity_covariance() {
        let m = diag_moments(&[1.0, 0.0], &[1.0, 1.0], 10);
        let alpha = fit_closed_form(&m).unwrap();
        assert_abs_diff_eq!(alpha.coefficients[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha.coefficients[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha.objective_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_frozen_case_beats_random_search() {
        // mu=[1,1], sigma=diag(2,1): alpha ~ [0.408248, 0.816497], L = sqrt(1.5)
        let m = diag_moments(&[1.0, 1.0], &[2.0, 1.0], 10);
        let alpha = fit_closed_form(&m).unwrap();
        assert_abs_diff_eq!(alpha.coefficients[0], 0.4082482904638631, epsilon = 1e-9);
        assert_abs_diff_eq!(alpha.coefficients[1], 0.8164965809277261, epsilon = 1e-9);
        assert_abs_diff_eq!(alpha.objective_value, 1.224744871391589, epsilon = 1e-12);

        let (_, best) = oracle::brute_force_max(&m, &oracle::OracleConfig::default());
        assert!(alpha.objective_value >= best - 1e-9);

        // fine grid on the unit circle, sigma-normalized
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..200_000 {
            let theta = i as f64 * std::f64::consts::TAU / 200_000.0;
            let dir = [theta.cos(), theta.sin()];
            let q = sigma_quadratic(&m, &dir);
            if q <= 0.0 {
                continue;
            }
            let scaled = [dir[0] / q.sqrt(), dir[1] / q.sqrt()];
            grid_best = grid_best.max(m.objective(&scaled).unwrap());
        }
        assert!(alpha.objective_value >= grid_best - 1e-9);
    }

    #[test]
    fn closed_form_rejects_degenerate_inputs() {
        let m = diag_moments(&[0.0, 0.0], &[1.0, 1.0], 10);
        assert!(matches!(fit_closed_form(&m), Err(Error::ZeroMeanVector)));

        let singular = Moments::new(
            arr1(&[1.0, 1.0]),
            arr2(&[[1.0, 1.0], [1.0, 1.0]]),
            10,
        )
        .unwrap();
        assert!(matches!(
            fit_closed_form(&singular),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let m = Moments::new(
            arr1(&[0.4, -0.2, 0.1]),
            arr2(&[
                [2.0, 0.3, -0.1],
                [0.3, 1.5, 0.2],
                [-0.1, 0.2, 1.1],
            ]),
            50,
        )
        .unwrap();
        let alpha = fit_closed_form(&m).unwrap();
        let grad = m.gradient(&alpha.coefficients).unwrap();
        for g in grad {
            assert!(g.abs() <= 1e-8, "gradient entry {g} too large");
        }
    }

    #[test]
    fn compute_beta_examples() {
        let panel = FeaturePanel::new(
            dates(4),
            arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]),
            vec!["a".into(), "b".into()],
        )
        .unwrap()
        .augment_with_intercept()
        .unwrap();

        let zeros = compute_beta(&panel, &[0.0; 4]).unwrap();
        assert!(zeros.iter().all(|b| *b == 0.0));

        let ones = compute_beta(&panel, &[1.0; 4]).unwrap();
        assert_abs_diff_eq!(ones[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ones[1], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ones[2], 5.0, epsilon = 1e-12);

        // random target matches a direct re-computation
        let y = [0.3, -1.2, 0.7, 2.0];
        let beta = compute_beta(&panel, &y).unwrap();
        for c in 0..3 {
            let direct: f64 = (0..4)
                .map(|r| y[r] * panel.values()[(r, c)])
                .sum::<f64>()
                / 4.0;
            assert_abs_diff_eq!(beta[c], direct, epsilon = 1e-12);
        }

        assert!(matches!(
            compute_beta(&panel, &[1.0; 3]),
            Err(Error::MisalignedIndex(_))
        ));
    }

    #[test]
    fn beta_neutral_orthogonal_constraint_is_inactive() {
        let m = diag_moments(&[1.0, 0.0], &[1.0, 1.0], 10);
        let alpha = fit_beta_neutral(&m, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(alpha.coefficients[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(alpha.coefficients[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn beta_neutral_conflicting_constraint_degenerates() {
        let m = diag_moments(&[1.0, 0.5], &[1.0, 1.0], 10);
        assert!(matches!(
            fit_beta_neutral(&m, &[1.0, 0.5]),
            Err(Error::DegenerateConstraint(_))
        ));
    }

    #[test]
    fn beta_neutral_hand_projection() {
        // sigma=I, mu=[1,1], beta=[1,0]: projected mu=[0,1], alpha=[0,1]
        let m = diag_moments(&[1.0, 1.0], &[1.0, 1.0], 10);
        let alpha = fit_beta_neutral(&m, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(alpha.coefficients[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha.coefficients[1], 1.0, epsilon = 1e-12);
        let dot = alpha.coefficients[0];
        assert!(dot.abs() <= 1e-10);

        // constrained grid oracle on the circle intersected with beta-perp
        let beta = [1.0, 0.0];
        let mut best = f64::NEG_INFINITY;
        for i in 0..100_000 {
            let theta = i as f64 * std::f64::consts::TAU / 100_000.0;
            let raw = [theta.cos(), theta.sin()];
            // project onto beta-perp
            let along = raw[0] * beta[0] + raw[1] * beta[1];
            let proj = [raw[0] - along * beta[0], raw[1] - along * beta[1]];
            let q = sigma_quadratic(&m, &proj);
            if q <= 1e-12 {
                continue;
            }
            let scaled = [proj[0] / q.sqrt(), proj[1] / q.sqrt()];
            best = best.max(m.objective(&scaled).unwrap());
        }
        assert_abs_diff_eq!(alpha.objective_value, best, epsilon = 1e-6);
    }

    #[test]
    fn l2_identity_at_zero() {
        let m = Moments::new(
            arr1(&[0.1, -0.2]),
            arr2(&[[1.0, 0.2], [0.2, 0.5]]),
            10,
        )
        .unwrap();
        for form in [L2Form::Additive, L2Form::Normalized] {
            let out = regularize_l2(&m, 0.0, form);
            assert_eq!(out.sigma(), m.sigma());
            assert_eq!(out.mu(), m.mu());
        }
    }

    #[test]
    fn l2_normalized_frozen_case() {
        // sigma=diag(3,1), lambda=1, Frobenius sqrt(10)
        let m = diag_moments(&[0.0, 0.1], &[3.0, 1.0], 10);
        let out = regularize_l2(&m, 1.0, L2Form::Normalized);
        assert_abs_diff_eq!(out.sigma()[(0, 0)], 2.290569415042095, epsilon = 1e-12);
        assert_abs_diff_eq!(out.sigma()[(1, 1)], 1.290569415042095, epsilon = 1e-12);
        assert_abs_diff_eq!(out.sigma()[(0, 1)], 0.0, epsilon = 1e-15);
        assert_eq!(out.tau(), 10);
    }

    #[test]
    fn l2_additive_rescues_zero_covariance() {
        let m = Moments::new(arr1(&[0.2, 0.1]), Array2::zeros((2, 2)), 10).unwrap();
        let out = regularize_l2(&m, 0.5, L2Form::Additive);
        assert_abs_diff_eq!(out.sigma()[(0, 0)], 0.5);
        assert_abs_diff_eq!(out.sigma()[(1, 1)], 0.5);
        assert!(fit_closed_form(&out).is_ok());
    }

    #[test]
    fn config_validation_rejects_conflicts() {
        let mut cfg = SolverConfig {
            pca_k: Some(2),
            l1_lambda: 0.3,
            ..SolverConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::ConfigConflict(_))));
        cfg.l1_lambda = 0.0;
        assert!(cfg.validate().is_ok());
        cfg.l2_lambda = 0.1;
        assert!(matches!(cfg.validate(), Err(Error::ConfigConflict(_))));
        cfg.l2_lambda = 0.0;
        cfg.beta_target = Some(vec![1.0, 0.0]);
        assert!(matches!(cfg.validate(), Err(Error::ConfigConflict(_))));

        let bad_p = SolverConfig {
            p_threshold: Some(0.0),
            ..SolverConfig::default()
        };
        assert!(matches!(bad_p.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn fit_intercept_only_panel_is_drift_following() {
        let steps = 40;
        let mut prices = Vec::with_capacity(steps);
        let mut p = 100.0;
        for i in 0..steps {
            p += if i % 3 == 0 { 0.8 } else { -0.2 };
            prices.push(p);
        }
        let prices = PriceSeries::new(dates(steps), prices).unwrap();
        let panel =
            FeaturePanel::new(dates(steps), Array2::zeros((steps, 0)), vec![]).unwrap();
        let result = fit(
            &prices,
            &panel,
            &SolverConfig::default(),
            &StandardizationSpec::global(),
        )
        .unwrap();
        assert_eq!(result.alpha.len(), 1);

        let diffs = prices.diffs();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let std = (diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / (diffs.len() - 1) as f64)
            .sqrt();
        let expected = mean.signum() / std;
        assert_abs_diff_eq!(result.alpha.coefficients[0], expected, epsilon = 1e-10);
    }

    #[test]
    fn ridge_fallback_recovers_duplicate_columns() {
        // duplicated feature makes sigma exactly singular
        let steps = 60;
        let mut prices = Vec::with_capacity(steps);
        let mut p = 50.0;
        for i in 0..steps {
            p += ((i * 17) % 7) as f64 * 0.1 - 0.25;
            prices.push(p);
        }
        let prices = PriceSeries::new(dates(steps), prices).unwrap();
        let col: Vec<f64> = (0..steps).map(|i| ((i * 13) % 9) as f64 - 4.0).collect();
        let mut values = Array2::<f64>::zeros((steps, 2));
        for (i, v) in col.iter().enumerate() {
            values[(i, 0)] = *v;
            values[(i, 1)] = *v;
        }
        let panel =
            FeaturePanel::new(dates(steps), values, vec!["a".into(), "a2".into()]).unwrap();

        let strict = SolverConfig::default();
        assert!(matches!(
            fit(&prices, &panel, &strict, &StandardizationSpec::global()),
            Err(Error::SingularCovariance { .. })
        ));

        let fallback = SolverConfig {
            ridge_fallback: true,
            ..SolverConfig::default()
        };
        let result = fit(&prices, &panel, &fallback, &StandardizationSpec::global()).unwrap();
        assert!(result.diagnostics.ridge_lambda.is_some());
        assert!(result.alpha.objective_value.is_finite());
    }
}
