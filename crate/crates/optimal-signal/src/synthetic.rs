//! Seeded synthetic datasets with a known planted structure.
//!
//! Used by the test suite to calibrate recovery and null rates, by the
//! examples, and to generate the demo CSVs shipped under `data/`.

use chrono::NaiveDate;
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::types::{FeaturePanel, PriceSeries};

/// Parameters of the planted linear relationship
/// `price[t] - price[t-1] = sign[t] * coef * x1[t-1] + noise`.
#[derive(Debug, Clone)]
pub struct PlantedSpec {
    /// Number of time steps (prices and feature rows).
    pub steps: usize,
    /// Coefficient on the lagged informative feature.
    pub informative_coef: f64,
    /// Count of additional pure-noise features.
    pub noise_features: usize,
    /// Standard deviation of the price-difference noise.
    pub noise_std: f64,
    /// Per-step probability that the sign of the relationship flips;
    /// 0 keeps the sign fixed.
    pub regime_flip_prob: f64,
    pub start_price: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            steps: 4000,
            informative_coef: 0.1,
            noise_features: 4,
            noise_std: 0.5,
            regime_flip_prob: 0.0,
            start_price: 1000.0,
        }
    }
}

fn date_range(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    (0..n as i64)
        .map(|i| start + chrono::Duration::days(i))
        .collect()
}

/// Generates a price series driven by the lagged first feature plus noise.
/// Feature `x1` is informative; `x2..` are standard normal noise.
/// Deterministic for a given spec and seed.
pub fn planted_dataset(spec: &PlantedSpec, seed: u64) -> (PriceSeries, FeaturePanel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = spec.steps;
    let n_features = 1 + spec.noise_features;

    let mut features = Array2::<f64>::zeros((steps, n_features));
    let mut prices = Vec::with_capacity(steps);
    let mut price = spec.start_price;
    let mut sign = 1.0f64;
    for t in 0..steps {
        for c in 0..n_features {
            features[(t, c)] = rng.sample(StandardNormal);
        }
        if t == 0 {
            prices.push(price);
            continue;
        }
        if spec.regime_flip_prob > 0.0 && rng.random::<f64>() < spec.regime_flip_prob {
            sign = -sign;
        }
        let shock: f64 = rng.sample(StandardNormal);
        let diff =
            sign * spec.informative_coef * features[(t - 1, 0)] + spec.noise_std * shock;
        price += diff;
        prices.push(price);
    }

    let names = (1..=n_features).map(|i| format!("x{i}")).collect();
    let timestamps = date_range(steps);
    let prices = PriceSeries::new(timestamps.clone(), prices)
        .expect("planted prices must stay positive; raise start_price");
    let panel = FeaturePanel::new(timestamps, features, names).expect("finite features");
    (prices, panel)
}

/// Driftless random-walk prices and independent noise features: nothing to
/// exploit. Deterministic for a given seed.
pub fn noise_dataset(
    steps: usize,
    n_features: usize,
    diff_std: f64,
    seed: u64,
) -> (PriceSeries, FeaturePanel) {
    let spec = PlantedSpec {
        steps,
        informative_coef: 0.0,
        noise_features: n_features.saturating_sub(1),
        noise_std: diff_std,
        regime_flip_prob: 0.0,
        start_price: 1000.0,
    };
    planted_dataset(&spec, seed)
}

/// Parameters behind the demo dataset shipped under `data/synthetic/`:
/// a planted relationship whose sign holds for long stretches and then
/// flips, so sign-corrective logic and significance filtering have real
/// work to do.
pub fn demo_spec() -> PlantedSpec {
    PlantedSpec {
        steps: 2000,
        informative_coef: 0.12,
        noise_features: 2,
        noise_std: 0.35,
        regime_flip_prob: 1.0 / 300.0,
        start_price: 500.0,
    }
}

/// Seed for the shipped demo dataset.
pub const DEMO_SEED: u64 = 11;
