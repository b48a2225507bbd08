//! Independent brute-force references for the test suite.
//!
//! Everything in this module re-derives its math from scratch: the Sharpe
//! objective is evaluated with explicit loops, the maximizer is found by
//! random search, gradients come from central differences, and tail
//! probabilities from direct quadrature of the Student-t density. None of
//! it shares code with the solver, so a solver bug cannot confirm itself.
//!
//! Not built for speed; test dimensions stay small.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::Moments;

/// Controls for [`brute_force_max`].
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Random directions sampled before polishing.
    pub n_samples: usize,
    /// Local polish iterations after sampling.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            refine_steps: 2_000,
            seed: 0,
        }
    }
}

/// Sharpe objective evaluated with explicit loops, independent of the
/// solver's ndarray-based path. Returns None when the variance is not
/// strictly positive.
fn objective_direct(moments: &Moments, alpha: &[f64]) -> Option<f64> {
    let dim = alpha.len();
    let mu = moments.mu();
    let sigma = moments.sigma();
    let mut drift = 0.0;
    for i in 0..dim {
        drift += alpha[i] * mu[i];
    }
    let mut variance = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            variance += alpha[i] * sigma[(i, j)] * alpha[j];
        }
    }
    if variance <= 0.0 {
        return None;
    }
    Some(drift / variance.sqrt())
}

fn sigma_norm(moments: &Moments, alpha: &[f64]) -> f64 {
    let dim = alpha.len();
    let sigma = moments.sigma();
    let mut variance = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            variance += alpha[i] * sigma[(i, j)] * alpha[j];
        }
    }
    variance
}

/// Best objective value found by seeded random search over directions
/// normalized to `alpha' sigma alpha = 1`, followed by an adaptive local
/// polish. Deterministic for a given seed.
pub fn brute_force_max(moments: &Moments, config: &OracleConfig) -> (Vec<f64>, f64) {
    let dim = moments.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Vec<f64> = vec![0.0; dim];
    let mut best_val = f64::NEG_INFINITY;

    let draw = |rng: &mut ChaCha8Rng| -> Option<Vec<f64>> {
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let q = sigma_norm(moments, &z);
        if q <= 0.0 {
            return None;
        }
        let scale = q.sqrt();
        Some(z.iter().map(|v| v / scale).collect())
    };

    for _ in 0..config.n_samples {
        let Some(candidate) = draw(&mut rng) else { continue };
        if let Some(val) = objective_direct(moments, &candidate) {
            if val > best_val {
                best_val = val;
                best = candidate;
            }
        }
    }

    // Adaptive random polish: shrink on failure, expand on success.
    let mut scale = 0.1;
    for _ in 0..config.refine_steps {
        if best_val == f64::NEG_INFINITY {
            break;
        }
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut improved = false;
        for sign in [1.0, -1.0] {
            let candidate: Vec<f64> = best
                .iter()
                .zip(&dir)
                .map(|(b, d)| b + sign * scale * d)
                .collect();
            let q = sigma_norm(moments, &candidate);
            if q <= 0.0 {
                continue;
            }
            let normalized: Vec<f64> = candidate.iter().map(|v| v / q.sqrt()).collect();
            if let Some(val) = objective_direct(moments, &normalized) {
                if val > best_val {
                    best_val = val;
                    best = normalized;
                    improved = true;
                    break;
                }
            }
        }
        scale = if improved {
            (scale * 1.5).min(1.0)
        } else {
            (scale * 0.8).max(1e-9)
        };
    }

    (best, best_val)
}

/// Central-difference gradient of the Sharpe objective.
pub fn finite_diff_gradient(moments: &Moments, alpha: &[f64], h: f64) -> Result<Vec<f64>> {
    if alpha.len() != moments.dim() {
        return Err(Error::DimensionMismatch {
            expected: moments.dim(),
            actual: alpha.len(),
        });
    }
    let mut grad = Vec::with_capacity(alpha.len());
    let mut work = alpha.to_vec();
    for i in 0..alpha.len() {
        work[i] = alpha[i] + h;
        let up = objective_direct(moments, &work).ok_or(Error::DegenerateVariance)?;
        work[i] = alpha[i] - h;
        let down = objective_direct(moments, &work).ok_or(Error::DegenerateVariance)?;
        work[i] = alpha[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Unnormalized Student-t density, computed in log space for stability at
/// large dof.
fn density_unnorm(x: f64, dof: f64) -> f64 {
    (-(dof + 1.0) / 2.0 * (x * x / dof).ln_1p()).exp()
}

/// Integrand after the rational substitution x = a + s/(1-s), s in [0,1).
fn rational_integrand(s: f64, a: f64, dof: f64) -> f64 {
    if s >= 1.0 {
        // limit of x^2 * density as x -> inf: zero unless dof == 1
        return if dof == 1.0 { 1.0 } else { 0.0 };
    }
    let one_minus = 1.0 - s;
    let x = a + s / one_minus;
    density_unnorm(x, dof) / (one_minus * one_minus)
}

/// Composite Simpson over s in [0,1] with interval doubling until stable.
fn simpson_tail(a: f64, dof: f64) -> f64 {
    let f = |s: f64| rational_integrand(s, a, dof);
    let mut n = 64usize;
    let mut previous = f64::NAN;
    loop {
        let h = 1.0 / n as f64;
        let mut acc = f(0.0) + f(1.0);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(k as f64 * h);
        }
        let estimate = acc * h / 3.0;
        if (estimate - previous).abs() <= 1e-12 * estimate.abs().max(1e-300) || n >= 1 << 20 {
            return estimate;
        }
        previous = estimate;
        n *= 2;
    }
}

/// Two-sided Student-t survival probability `P(|T| >= t)` by Simpson
/// quadrature of the density under a rational tail substitution. The
/// normalizing constant comes from the same quadrature, so no gamma
/// function is involved.
pub fn student_t_sf(t: f64, dof: usize) -> f64 {
    assert!(dof >= 1, "dof must be >= 1");
    let a = t.abs();
    if a == 0.0 {
        return 1.0;
    }
    let dof = dof as f64;
    let tail = simpson_tail(a, dof);
    let half = simpson_tail(0.0, dof);
    (tail / half).clamp(0.0, 1.0)
}

/// Integrand after the tangent substitution x = a + tan(u), u in [0, pi/2).
fn tangent_integrand(u: f64, a: f64, dof: f64) -> f64 {
    let c = u.cos();
    if c <= 0.0 {
        return if dof == 1.0 { 1.0 } else { 0.0 };
    }
    let x = a + u.tan();
    density_unnorm(x, dof) / (c * c)
}

/// Composite midpoint rule over u in [0, pi/2] with interval doubling.
fn midpoint_tail(a: f64, dof: f64) -> f64 {
    let span = std::f64::consts::FRAC_PI_2;
    let f = |u: f64| tangent_integrand(u, a, dof);
    let mut n = 128usize;
    let mut previous = f64::NAN;
    loop {
        let h = span / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            acc += f((k as f64 + 0.5) * h);
        }
        let estimate = acc * h;
        if (estimate - previous).abs() <= 1e-11 * estimate.abs().max(1e-300) || n >= 1 << 22 {
            return estimate;
        }
        previous = estimate;
        n *= 2;
    }
}

/// Independent cross-check of [`student_t_sf`]: same probability via a
/// different substitution and a different quadrature rule.
pub fn student_t_sf_alt(t: f64, dof: usize) -> f64 {
    assert!(dof >= 1, "dof must be >= 1");
    let a = t.abs();
    if a == 0.0 {
        return 1.0;
    }
    let dof = dof as f64;
    let tail = midpoint_tail(a, dof);
    let half = midpoint_tail(0.0, dof);
    (tail / half).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    fn identity_moments() -> Moments {
        Moments::new(arr1(&[1.0, 0.0]), arr2(&[[1.0, 0.0], [0.0, 1.0]]), 10).unwrap()
    }

    #[test]
    fn brute_force_finds_known_max() {
        let m = identity_moments();
        let (_, val) = brute_force_max(&m, &OracleConfig::default());
        // true max is ||mu|| = 1
        assert!(val <= 1.0 + 1e-12);
        assert!(val >= 1.0 - 1e-4);
    }

    #[test]
    fn brute_force_deterministic() {
        let m = identity_moments();
        let cfg = OracleConfig {
            n_samples: 500,
            refine_steps: 50,
            seed: 42,
        };
        let (a1, v1) = brute_force_max(&m, &cfg);
        let (a2, v2) = brute_force_max(&m, &cfg);
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert_eq!(a1, a2);
    }

    #[test]
    fn finite_diff_linear_case() {
        let m = identity_moments();
        let g = finite_diff_gradient(&m, &[0.0, 1.0], 1e-6).unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn t_sf_basics() {
        assert_eq!(student_t_sf(0.0, 7), 1.0);
        assert_eq!(student_t_sf(2.0, 7), student_t_sf(-2.0, 7));
        // monotone decreasing in |t|
        let mut last = 1.0;
        for k in 1..=8 {
            let p = student_t_sf(k as f64 * 0.75, 12);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn t_sf_reference_value() {
        let p = student_t_sf(3.0, 99);
        assert_abs_diff_eq!(p, 0.003415507921578869, epsilon = 1e-8);
        let p_alt = student_t_sf_alt(3.0, 99);
        assert_abs_diff_eq!(p, p_alt, epsilon = 1e-8);
    }

    #[test]
    fn t_sf_cauchy_tail() {
        // dof=1 is Cauchy: P(|T| >= 1) = 0.5 exactly
        assert_abs_diff_eq!(student_t_sf(1.0, 1), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(student_t_sf_alt(1.0, 1), 0.5, epsilon = 1e-8);
    }

    #[test]
    fn t_sf_gaussian_limit() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        for t in [0.5, 1.0, 2.0, 3.0] {
            let gauss = 2.0 * normal.cdf(-t);
            assert_abs_diff_eq!(student_t_sf(t, 10_000), gauss, epsilon = 1e-4);
        }
    }
}
