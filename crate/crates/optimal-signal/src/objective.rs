//! The per-step empirical Sharpe objective and its gradient.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::types::Moments;

impl Moments {
    fn quadratic_form(&self, alpha: &[f64]) -> Result<(Array1<f64>, f64, f64)> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: alpha.len(),
            });
        }
        let a = ndarray::aview1(alpha);
        let sigma_alpha = self.sigma().dot(&a);
        let variance = a.dot(&sigma_alpha);
        let drift = a.dot(&self.mu());
        Ok((sigma_alpha, variance, drift))
    }

    /// Empirical Sharpe per step, `alpha' mu / sqrt(alpha' sigma alpha)`.
    ///
    /// Errors with [`Error::DegenerateVariance`] when `alpha` carries no
    /// PnL variance (null space of sigma).
    pub fn objective(&self, alpha: &[f64]) -> Result<f64> {
        let (_, variance, drift) = self.quadratic_form(alpha)?;
        if variance <= 0.0 {
            return Err(Error::DegenerateVariance);
        }
        Ok(drift / variance.sqrt())
    }

    /// Gradient of [`Moments::objective`]:
    /// `mu / sqrt(a'Sa) - (a'mu) * Sa / (a'Sa)^{3/2}`.
    ///
    /// Zero exactly when `sigma alpha` is proportional to `mu`, i.e. at the
    /// closed-form optimum.
    pub fn gradient(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        let (sigma_alpha, variance, drift) = self.quadratic_form(alpha)?;
        if variance <= 0.0 {
            return Err(Error::DegenerateVariance);
        }
        let sd = variance.sqrt();
        let scale = drift / (variance * sd);
        Ok(self
            .mu()
            .iter()
            .zip(sigma_alpha.iter())
            .map(|(m, sa)| m / sd - scale * sa)
            .collect())
    }
}
