//! Growth-rate, tail-exponent and inequality estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::agents::AgentRun;
use super::two_sector::TwoSectorPath;
use crate::error::{Error, Result};
use crate::model::DerivedParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub g_hat: f64,
    /// Across-path standard error of the mean.
    pub std_error: f64,
    pub n_paths: usize,
    /// Post-burn-in span per path, years.
    pub span: f64,
}

impl GrowthEstimate {
    /// Mean and standard error of independent per-path estimates.
    pub fn from_samples(samples: &[f64], span: f64) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::invalid(
                "n_paths",
                "a standard error needs at least 2 paths",
            ));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(GrowthEstimate {
            g_hat: mean,
            std_error: (var / n as f64).sqrt(),
            n_paths: n,
            span,
        })
    }

    /// `|g_hat - value|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.g_hat - value).abs() / self.std_error
    }
}

fn span_of(start: f64, end: f64) -> Result<f64> {
    if !(end > start) {
        return Err(Error::invalid(
            "t_burnin",
            "burn-in must end before the run does",
        ));
    }
    Ok(end - start)
}

/// `mean over paths of [h(T) - h(T0)] / (T - T0)`.
pub fn estimate_growth(paths: &[TwoSectorPath]) -> Result<GrowthEstimate> {
    growth_by(paths, |p| p.end.h - p.start.h)
}

/// The same estimate from the public log-wealth `H`.
pub fn estimate_growth_public(paths: &[TwoSectorPath]) -> Result<GrowthEstimate> {
    growth_by(paths, |p| p.end.big_h - p.start.big_h)
}

fn growth_by(
    paths: &[TwoSectorPath],
    rise: impl Fn(&TwoSectorPath) -> f64,
) -> Result<GrowthEstimate> {
    let first = paths
        .first()
        .ok_or_else(|| Error::invalid("n_paths", "no paths"))?;
    let span = span_of(first.start.time, first.end.time)?;
    let rates: Vec<f64> = paths.iter().map(|p| rise(p) / span).collect();
    GrowthEstimate::from_samples(&rates, span)
}

/// Growth from the time-averaged coupling drift instead of the endpoint
/// rise: `mu_tilde - f + phi <e^Delta>` (public side). Free of the diffusive
/// endpoint noise, hence far less variable; the private-side analogue is
/// `m_tilde - phi + f <e^-Delta>`.
pub fn estimate_growth_drift(
    paths: &[TwoSectorPath],
    d: &DerivedParams,
    public_side: bool,
) -> Result<GrowthEstimate> {
    let first = paths
        .first()
        .ok_or_else(|| Error::invalid("n_paths", "no paths"))?;
    let span = span_of(first.start.time, first.end.time)?;
    let rates: Vec<f64> = paths
        .iter()
        .map(|p| {
            if public_side {
                d.mu_tilde - d.f + d.phi * p.mean_exp_plus
            } else {
                d.m_tilde - d.phi + d.f * p.mean_exp_minus
            }
        })
        .collect();
    GrowthEstimate::from_samples(&rates, span)
}

/// Growth of aggregate private wealth `sum w_i` in agent runs.
pub fn estimate_growth_agents(runs: &[AgentRun]) -> Result<GrowthEstimate> {
    let first = runs
        .first()
        .ok_or_else(|| Error::invalid("n_paths", "no paths"))?;
    let span = span_of(first.start.time, first.end.time)?;
    let rates: Vec<f64> = runs
        .iter()
        .map(|r| (r.end.log_private - r.start.log_private) / span)
        .collect();
    GrowthEstimate::from_samples(&rates, span)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub alpha: f64,
    /// Bootstrap standard error (`alpha / sqrt(k)` when no resamples are drawn).
    pub std_error: f64,
    pub k: usize,
    pub n: usize,
}

/// `ceil(N^0.6)`, kept inside `[10, N/10]`.
pub fn default_hill_k(n: usize) -> usize {
    ((n as f64).powf(0.6).ceil() as usize).clamp(10, (n / 10).max(10))
}

/// Hill estimate from the `k` largest values; reorders `values`.
fn hill_point(values: &mut [f64], k: usize) -> Option<f64> {
    let n = values.len();
    let pivot_at = n - k - 1;
    let (_, &mut threshold, top) = values.select_nth_unstable_by(pivot_at, |a, b| a.total_cmp(b));
    let sum: f64 = top.iter().map(|&x| (x / threshold).ln()).sum();
    (sum > 0.0).then(|| k as f64 / sum)
}

/// `alpha = k / sum_{i<=k} ln(w_(i) / w_(k+1))` with `bootstrap` seeded
/// resamples for the standard error.
pub fn hill_tail_exponent(
    wealth: &[f64],
    k: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<HillEstimate> {
    let n = wealth.len();
    if k < 10 || k > n / 10 {
        return Err(Error::invalid(
            "k",
            format!("need 10 <= k <= N/10 (k = {k}, N = {n})"),
        ));
    }
    if let Some(bad) = wealth.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!(
            "Hill estimator needs positive finite wealth, got {bad}"
        )));
    }
    let mut work = wealth.to_vec();
    let alpha = hill_point(&mut work, k).ok_or_else(|| {
        Error::Domain("all top order statistics are tied; tail exponent undefined".into())
    })?;

    let std_error = if bootstrap == 0 {
        alpha / (k as f64).sqrt()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draws = Vec::with_capacity(bootstrap);
        for _ in 0..bootstrap {
            for slot in work.iter_mut() {
                *slot = wealth[rng.gen_range(0..n)];
            }
            if let Some(a) = hill_point(&mut work, k) {
                draws.push(a);
            }
        }
        if draws.len() < 2 {
            f64::NAN
        } else {
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            (draws.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64)
                .sqrt()
        }
    };
    Ok(HillEstimate {
        alpha,
        std_error,
        k,
        n,
    })
}

/// `sum_ij |w_i - w_j| / (2 N^2 mean)`, via the sorted form.
pub fn sample_gini(wealth: &[f64]) -> Result<f64> {
    let n = wealth.len();
    if n < 2 {
        return Err(Error::invalid("n_agents", "Gini needs at least 2 values"));
    }
    if let Some(bad) = wealth.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!(
            "Gini needs non-negative finite wealth, got {bad}"
        )));
    }
    let mut sorted = wealth.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Err(Error::Domain(
            "Gini is undefined when all wealth is zero".into(),
        ));
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i + 1) as f64 * x)
        .sum();
    let nf = n as f64;
    Ok((2.0 * weighted / (nf * total) - (nf + 1.0) / nf).max(0.0))
}
