//! Interval estimates for Bernoulli rates.

use statrs::distribution::{ContinuousCDF, Normal};

/// Two-sided standard normal quantile for `confidence` in `(0, 1)`.
pub fn normal_quantile(confidence: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal parameters are valid");
    std.inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials >= 1, "need at least one trial");
    assert!(successes <= trials, "more successes than trials");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = normal_quantile(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Hoeffding deviation `sqrt(ln(2/delta) / 2N)`: with probability at least
/// `1 - delta` the empirical rate is within this distance of the true rate.
pub fn hoeffding_slack(trials: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * trials as f64)).sqrt()
}
