//! Domain types: price series, feature panels, the lagged-feature transform,
//! and empirical moments.
//!
//! Everything here is immutable after construction and validated at the
//! boundary, so the numerical code downstream never has to re-check for
//! NaNs, misaligned indexes, or empty inputs.

use chrono::NaiveDate;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Name given to the prepended constant-1 column.
pub const INTERCEPT_NAME: &str = "intercept";

/// Timestamped open prices of a single asset.
///
/// Invariants: strictly increasing timestamps, finite positive prices,
/// length >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    timestamps: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(timestamps: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::DimensionMismatch {
                expected: timestamps.len(),
                actual: prices.len(),
            });
        }
        if prices.len() < 2 {
            return Err(Error::InsufficientData {
                required: 2,
                actual: prices.len(),
            });
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::MisalignedIndex(format!(
                    "timestamps not strictly increasing at {}",
                    pair[1]
                )));
            }
        }
        for (i, p) in prices.iter().enumerate() {
            if !p.is_finite() || *p <= 0.0 {
                return Err(Error::NonFinite(format!(
                    "price {p} at {} (row {i})",
                    timestamps[i]
                )));
            }
        }
        Ok(Self { timestamps, prices })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 2 by construction
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Price differences `price[t] - price[t-1]`, length `len() - 1`.
    pub fn diffs(&self) -> Vec<f64> {
        self.prices.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Contiguous sub-series over `range` (must keep at least 2 rows).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.len() < 2 || range.end > self.len() {
            return Err(Error::InsufficientData {
                required: 2,
                actual: range.len().min(self.len()),
            });
        }
        Ok(Self {
            timestamps: self.timestamps[range.clone()].to_vec(),
            prices: self.prices[range].to_vec(),
        })
    }
}

/// Time-aligned matrix of exogenous variables, one column per feature.
///
/// `has_intercept` marks column 0 as the constant 1; only
/// [`FeaturePanel::augment_with_intercept`] sets it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePanel {
    timestamps: Vec<NaiveDate>,
    values: Array2<f64>,
    names: Vec<String>,
    has_intercept: bool,
}

impl FeaturePanel {
    pub fn new(
        timestamps: Vec<NaiveDate>,
        values: Array2<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        if timestamps.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: timestamps.len(),
                actual: values.nrows(),
            });
        }
        if names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                actual: names.len(),
            });
        }
        for pair in timestamps.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::MisalignedIndex(format!(
                    "timestamps not strictly increasing at {}",
                    pair[1]
                )));
            }
        }
        if let Some(((r, c), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature '{}' at {} (row {r}, col {c}): {v}",
                names[c], timestamps[r]
            )));
        }
        Ok(Self {
            timestamps,
            values,
            names,
            has_intercept: false,
        })
    }

    /// Number of rows (time steps).
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Total number of columns, intercept included when present.
    pub fn num_columns(&self) -> usize {
        self.values.ncols()
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Returns a copy with a constant-1 column prepended.
    pub fn augment_with_intercept(&self) -> Result<Self> {
        if self.has_intercept {
            return Err(Error::AlreadyAugmented);
        }
        let rows = self.values.nrows();
        let cols = self.values.ncols();
        let mut values = Array2::<f64>::ones((rows, cols + 1));
        values
            .slice_mut(ndarray::s![.., 1..])
            .assign(&self.values);
        let mut names = Vec::with_capacity(cols + 1);
        names.push(INTERCEPT_NAME.to_string());
        names.extend(self.names.iter().cloned());
        Ok(Self {
            timestamps: self.timestamps.clone(),
            values,
            names,
            has_intercept: true,
        })
    }

    /// Contiguous sub-panel over `range` of rows.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.is_empty() {
            return Err(Error::InsufficientData {
                required: 1,
                actual: range.len().min(self.len()),
            });
        }
        Ok(Self {
            timestamps: self.timestamps[range.clone()].to_vec(),
            values: self.values.slice(ndarray::s![range, ..]).to_owned(),
            names: self.names.clone(),
            has_intercept: self.has_intercept,
        })
    }

    fn check_aligned(&self, prices: &PriceSeries) -> Result<()> {
        if self.timestamps.len() != prices.timestamps().len() {
            return Err(Error::MisalignedIndex(format!(
                "panel has {} rows, prices have {}",
                self.timestamps.len(),
                prices.timestamps().len()
            )));
        }
        if let Some((a, b)) = self
            .timestamps
            .iter()
            .zip(prices.timestamps())
            .find(|(a, b)| a != b)
        {
            return Err(Error::MisalignedIndex(format!(
                "panel date {a} vs price date {b}"
            )));
        }
        Ok(())
    }
}

/// Lagged-feature transform: row `t` is
/// `(price[t] - price[t-1]) * X[t-1]` entrywise.
///
/// The PnL of a linear signal `alpha' X[t]` held one step is exactly
/// `alpha'` times these rows, which is why all fitting happens on this
/// object's moments.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedPanel {
    timestamps: Vec<NaiveDate>,
    values: Array2<f64>,
}

impl TransformedPanel {
    /// Internal constructor for already-computed matrices (PCA projections,
    /// tests). Callers guarantee finiteness.
    pub(crate) fn from_parts(timestamps: Vec<NaiveDate>, values: Array2<f64>) -> Self {
        Self { timestamps, values }
    }

    /// Builds the transform from an intercept-augmented panel and its
    /// aligned price series.
    pub fn from_features(panel: &FeaturePanel, prices: &PriceSeries) -> Result<Self> {
        if !panel.has_intercept() {
            return Err(Error::MissingIntercept);
        }
        panel.check_aligned(prices)?;
        let steps = prices.len();
        let cols = panel.num_columns();
        let mut values = Array2::<f64>::zeros((steps - 1, cols));
        let p = prices.prices();
        for t in 1..steps {
            let diff = p[t] - p[t - 1];
            let lagged = panel.row(t - 1);
            for c in 0..cols {
                let v = diff * lagged[c];
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "transformed value at {} (col {c})",
                        panel.timestamps()[t]
                    )));
                }
                values[(t - 1, c)] = v;
            }
        }
        Ok(Self {
            timestamps: panel.timestamps()[1..].to_vec(),
            values,
        })
    }

    /// Number of rows (one fewer than the price series).
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn num_columns(&self) -> usize {
        self.values.ncols()
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }
}

/// Empirical mean vector and covariance matrix of a [`TransformedPanel`].
///
/// Covariance uses the unbiased 1/(tau-1) normalization. `sigma` is exactly
/// symmetric by construction and validated positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    mu: Array1<f64>,
    sigma: Array2<f64>,
    tau: usize,
}

impl Moments {
    /// Validating constructor for externally supplied moments.
    pub fn new(mu: Array1<f64>, sigma: Array2<f64>, tau: usize) -> Result<Self> {
        let dim = mu.len();
        if sigma.nrows() != dim || sigma.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: sigma.nrows().max(sigma.ncols()),
            });
        }
        if tau < 2 {
            return Err(Error::InsufficientData {
                required: 2,
                actual: tau,
            });
        }
        if mu.iter().any(|v| !v.is_finite()) || sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("moments contain non-finite entries".into()));
        }
        let scale = sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let gap = (sigma[(i, j)] - sigma[(j, i)]).abs();
                if gap > 1e-12 * scale.max(1e-300) {
                    return Err(Error::NonFinite(format!(
                        "sigma not symmetric at ({i},{j}): gap {gap:.3e}"
                    )));
                }
            }
        }
        let eigenvalues = crate::linalg::symmetric_eigenvalues(&sigma);
        if let Some(min) = eigenvalues.iter().cloned().reduce(f64::min) {
            if min < -1e-10 * scale.max(1e-300) {
                return Err(Error::NonFinite(format!(
                    "sigma not positive semidefinite: eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { mu, sigma, tau })
    }

    /// Column means and sample covariance of the transformed panel.
    pub fn estimate(transformed: &TransformedPanel) -> Result<Self> {
        let rows = transformed.len();
        if rows < 2 {
            return Err(Error::InsufficientData {
                required: 2,
                actual: rows,
            });
        }
        let dim = transformed.num_columns();
        let values = transformed.values();
        let mut mu = Array1::<f64>::zeros(dim);
        for row in values.rows() {
            mu += &row;
        }
        mu /= rows as f64;

        let mut sigma = Array2::<f64>::zeros((dim, dim));
        for row in values.rows() {
            for i in 0..dim {
                let di = row[i] - mu[i];
                for j in i..dim {
                    sigma[(i, j)] += di * (row[j] - mu[j]);
                }
            }
        }
        sigma /= (rows - 1) as f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                sigma[(j, i)] = sigma[(i, j)];
            }
        }
        Self::new(mu, sigma, rows)
    }

    pub fn mu(&self) -> ArrayView1<'_, f64> {
        self.mu.view()
    }

    pub fn sigma(&self) -> ArrayView2<'_, f64> {
        self.sigma.view()
    }

    /// Number of observations behind the estimate.
    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Copy with a different covariance (used by L2 regularization).
    pub(crate) fn with_sigma(&self, sigma: Array2<f64>) -> Self {
        Self {
            mu: self.mu.clone(),
            sigma,
            tau: self.tau,
        }
    }

    /// Copy with a different mean (used by the neutrality projection).
    pub(crate) fn with_mu(&self, mu: Array1<f64>) -> Self {
        Self {
            mu,
            sigma: self.sigma.clone(),
            tau: self.tau,
        }
    }

    /// Restriction to a subset of coordinates (significance re-fit).
    pub(crate) fn restrict(&self, keep: &[usize]) -> Self {
        let k = keep.len();
        let mu = Array1::from_iter(keep.iter().map(|&i| self.mu[i]));
        let mut sigma = Array2::<f64>::zeros((k, k));
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                sigma[(a, b)] = self.sigma[(i, j)];
            }
        }
        Self {
            mu,
            sigma,
            tau: self.tau,
        }
    }
}

/// Fitted signal coefficients.
///
/// For solver-produced values the coefficients are normalized to unit PnL
/// variance (`alpha' sigma alpha = 1`) with nonnegative drift
/// (`alpha' mu >= 0`). `kept_mask` is all-true unless the significance
/// filter removed coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Alpha {
    pub coefficients: Vec<f64>,
    /// Empirical Sharpe per step achieved at these coefficients.
    pub objective_value: f64,
    pub kept_mask: Vec<bool>,
}

impl Alpha {
    pub fn new(coefficients: Vec<f64>, objective_value: f64) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("alpha coefficients".into()));
        }
        let kept_mask = vec![true; coefficients.len()];
        Ok(Self {
            coefficients,
            objective_value,
            kept_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        (0..n as i64)
            .map(|i| start + chrono::Duration::days(i))
            .collect()
    }

    fn panel(values: Array2<f64>) -> FeaturePanel {
        let names = (0..values.ncols()).map(|i| format!("x{}", i + 1)).collect();
        FeaturePanel::new(dates(values.nrows()), values, names).unwrap()
    }

    #[test]
    fn price_series_rejects_bad_inputs() {
        let ts = dates(3);
        assert!(matches!(
            PriceSeries::new(ts.clone(), vec![1.0, -2.0, 3.0]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            PriceSeries::new(ts.clone(), vec![1.0, f64::NAN, 3.0]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            PriceSeries::new(vec![ts[0]], vec![1.0]),
            Err(Error::InsufficientData { .. })
        ));
        let mut backwards = ts.clone();
        backwards.swap(0, 1);
        assert!(matches!(
            PriceSeries::new(backwards, vec![1.0, 2.0, 3.0]),
            Err(Error::MisalignedIndex(_))
        ));
    }

    #[test]
    fn augment_prepends_ones() {
        let p = panel(ndarray::arr2(&[[2.0, 3.0]; 5]));
        let aug = p.augment_with_intercept().unwrap();
        assert_eq!(aug.num_columns(), 3);
        assert!(aug.has_intercept());
        assert!(aug.values().column(0).iter().all(|&v| v == 1.0));
        assert_eq!(aug.names()[0], INTERCEPT_NAME);
        assert_eq!(aug.names()[1], "x1");
        assert!(matches!(
            aug.augment_with_intercept(),
            Err(Error::AlreadyAugmented)
        ));
    }

    #[test]
    fn augment_handles_empty_feature_set() {
        let p = panel(Array2::zeros((5, 0)));
        let aug = p.augment_with_intercept().unwrap();
        assert_eq!(aug.num_columns(), 1);
        assert!(aug.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn transform_matches_hand_arithmetic() {
        // prices [1,2,4], one feature [a,b,c]: rows [(1, a), (2*1, 2*b)]
        let prices = PriceSeries::new(dates(3), vec![1.0, 2.0, 4.0]).unwrap();
        let p = panel(ndarray::arr2(&[[5.0], [7.0], [11.0]]))
            .augment_with_intercept()
            .unwrap();
        let t = TransformedPanel::from_features(&p, &prices).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.values()[(0, 0)], 1.0);
        assert_eq!(t.values()[(0, 1)], 5.0);
        assert_eq!(t.values()[(1, 0)], 2.0);
        assert_eq!(t.values()[(1, 1)], 14.0);
        // intercept column of the transform is exactly the diff series
        assert_eq!(t.values().column(0).to_vec(), prices.diffs());
    }

    #[test]
    fn transform_constant_prices_all_zero() {
        let prices = PriceSeries::new(dates(4), vec![3.0; 4]).unwrap();
        let p = panel(ndarray::arr2(&[[1.0], [2.0], [3.0], [4.0]]))
            .augment_with_intercept()
            .unwrap();
        let t = TransformedPanel::from_features(&p, &prices).unwrap();
        assert!(t.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transform_requires_alignment_and_intercept() {
        let prices = PriceSeries::new(dates(3), vec![1.0, 2.0, 3.0]).unwrap();
        let raw = panel(ndarray::arr2(&[[1.0], [2.0], [3.0]]));
        assert!(matches!(
            TransformedPanel::from_features(&raw, &prices),
            Err(Error::MissingIntercept)
        ));
        let shifted = FeaturePanel::new(
            dates(4)[1..].to_vec(),
            ndarray::arr2(&[[1.0], [2.0], [3.0]]),
            vec!["x1".into()],
        )
        .unwrap()
        .augment_with_intercept()
        .unwrap();
        assert!(matches!(
            TransformedPanel::from_features(&shifted, &prices),
            Err(Error::MisalignedIndex(_))
        ));
    }

    #[test]
    fn moments_two_point_variance() {
        // single column with rows [1, 3]: mu = [2], sigma = [[2]]
        let prices = PriceSeries::new(dates(3), vec![1.0, 2.0, 5.0]).unwrap();
        let p = panel(Array2::zeros((3, 0))).augment_with_intercept().unwrap();
        let t = TransformedPanel::from_features(&p, &prices).unwrap();
        assert_eq!(t.values().column(0).to_vec(), vec![1.0, 3.0]);
        let m = Moments::estimate(&t).unwrap();
        assert_abs_diff_eq!(m.mu()[0], 2.0);
        assert_abs_diff_eq!(m.sigma()[(0, 0)], 2.0);
        assert_eq!(m.tau(), 2);
    }

    #[test]
    fn moments_all_zero_panel() {
        let prices = PriceSeries::new(dates(4), vec![2.0; 4]).unwrap();
        let p = panel(ndarray::arr2(&[[1.0, -1.0]; 4]))
            .augment_with_intercept()
            .unwrap();
        let t = TransformedPanel::from_features(&p, &prices).unwrap();
        let m = Moments::estimate(&t).unwrap();
        assert!(m.mu().iter().all(|&v| v == 0.0));
        assert!(m.sigma().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moments_match_two_pass_oracle() {
        // Independent entrywise two-pass covariance, no shared helpers.
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows = 50;
        let cols = 3;
        let values = Array2::from_shape_fn((rows, cols), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) * 2.5 + 0.3
        });
        let tp = TransformedPanel {
            timestamps: dates(rows),
            values: values.clone(),
        };
        let m = Moments::estimate(&tp).unwrap();

        for j in 0..cols {
            let mean = (0..rows).map(|r| values[(r, j)]).sum::<f64>() / rows as f64;
            assert_abs_diff_eq!(m.mu()[j], mean, epsilon = 1e-12);
        }
        for i in 0..cols {
            let mi = (0..rows).map(|r| values[(r, i)]).sum::<f64>() / rows as f64;
            for j in 0..cols {
                let mj = (0..rows).map(|r| values[(r, j)]).sum::<f64>() / rows as f64;
                let cov = (0..rows)
                    .map(|r| (values[(r, i)] - mi) * (values[(r, j)] - mj))
                    .sum::<f64>()
                    / (rows - 1) as f64;
                assert_abs_diff_eq!(m.sigma()[(i, j)], cov, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn moments_validation_rejects_asymmetry() {
        let mu = ndarray::arr1(&[0.0, 0.0]);
        let sigma = ndarray::arr2(&[[1.0, 0.5], [0.2, 1.0]]);
        assert!(Moments::new(mu, sigma, 10).is_err());
    }
}
