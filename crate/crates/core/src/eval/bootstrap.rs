//! Paired bootstrap over per-query metric values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapResult {
    /// Observed `mean(a) − mean(b)`.
    pub delta_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Doubled one-sided tail fraction, not capped at 1 (maximum 2).
    pub p_value: f64,
    pub p_value_capped: f64,
    pub resamples: usize,
}

/// `q`-quantile of an ascending slice, interpolating linearly between
/// order statistics. Panics on an empty slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Resamples query indices with replacement `resamples` times and reports
/// the 95% percentile interval of the mean difference together with
/// `p = 2·min(P(δ* ≤ 0), P(δ* ≥ 0))`.
pub fn paired_bootstrap(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Result<BootstrapResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter("paired bootstrap needs at least two queries".into()));
    }
    if resamples == 0 {
        return Err(Error::InvalidParameter("resamples must be positive".into()));
    }
    let n = a.len();
    let delta: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let observed = delta.iter().sum::<f64>() / n as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut s = 0.0;
        for _ in 0..n {
            s += delta[rng.random_range(0..n)];
        }
        means.push(s / n as f64);
    }
    let le = means.iter().filter(|&&m| m <= 0.0).count() as f64 / resamples as f64;
    let ge = means.iter().filter(|&&m| m >= 0.0).count() as f64 / resamples as f64;
    let p = 2.0 * le.min(ge);
    means.sort_by(f64::total_cmp);
    Ok(BootstrapResult {
        delta_mean: observed,
        ci_low: percentile(&means, 0.025),
        ci_high: percentile(&means, 0.975),
        p_value: p,
        p_value_capped: p.min(1.0),
        resamples,
    })
}
