//! Stochastic simulation of the two-sector economy and of its N-agent
//! mean-field version, plus estimators.
//!
//! Both integrators use the same symmetric splitting per step: half a step
//! of the (linear, conservative) tax/redistribution/exchange flow solved
//! exactly, a full multiplicative-growth step, then the second half of the
//! transfer flow. In log coordinates the noise is additive, so the white
//! mode needs no Itô correction; in coloured mode the driving OU processes
//! are updated exactly and integrated over the step by the trapezoid rule.

pub mod agents;
pub mod estimators;
pub mod export;
pub mod noise;
pub mod two_sector;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use agents::{simulate_agents, AgentRun, WealthSnapshot};
pub use estimators::{
    default_hill_k, estimate_growth, estimate_growth_public, hill_tail_exponent, sample_gini,
    GrowthEstimate, HillEstimate,
};
pub use noise::{ou_step, OUState};
pub use two_sector::{simulate_two_sector, PathPoint, TwoSectorPath};

/// `|Delta|` beyond which `e^|Delta|` exceeds `1e300` and a run is aborted.
pub const DELTA_BLOWUP: f64 = 690.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Explicit OU driving with correlation time `tau`.
    Colored,
    /// `tau -> 0` limit: Gaussian increments.
    #[default]
    White,
}

impl NoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::Colored => "colored",
            NoiseMode::White => "white",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_total: f64,
    pub t_burnin: f64,
    pub seed: u64,
    pub mode: NoiseMode,
    pub n_paths: usize,
    /// Steps between recorded path points or snapshots; 0 records only the
    /// end of the run.
    pub record_every: usize,
    /// White mode: each step's increment is the sum of this many finer
    /// increments, so a run at `dt` shares its Brownian path with a run at
    /// `dt / noise_substeps` (same seed, `noise_substeps = 1`).
    pub noise_substeps: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.05,
            t_total: 1000.0,
            t_burnin: 100.0,
            seed: 1,
            mode: NoiseMode::White,
            n_paths: 16,
            record_every: 0,
            noise_substeps: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, tau: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(Error::invalid("t_total", "must be > 0"));
        }
        if !(self.t_burnin >= 0.0 && self.t_burnin < self.t_total) {
            return Err(Error::invalid(
                "t_burnin",
                "must satisfy 0 <= t_burnin < t_total",
            ));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be >= 1"));
        }
        if self.mode == NoiseMode::Colored && !(self.dt <= tau / 20.0) {
            return Err(Error::invalid(
                "dt",
                format!("coloured noise needs dt <= tau/20 = {}", tau / 20.0),
            ));
        }
        if self.noise_substeps == 0 {
            return Err(Error::invalid("noise_substeps", "must be >= 1"));
        }
        if self.noise_substeps > 1 && self.mode == NoiseMode::Colored {
            return Err(Error::invalid(
                "noise_substeps",
                "refinement applies to white noise only",
            ));
        }
        if self.steps() == 0 {
            return Err(Error::invalid("dt", "larger than t_total"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_total / self.dt).round() as usize
    }

    /// First step index at or after the burn-in time.
    pub fn burnin_steps(&self) -> usize {
        ((self.t_burnin / self.dt).round() as usize).min(self.steps())
    }

    /// Independent stream for path `index`.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        self.stream(index as u64)
    }

    /// Independent stream `k` (two-sector paths use `2i` and `2i + 1`).
    pub(crate) fn stream(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }
}

/// `(1 - e^{-x t}) / x`, continuous at `x = 0`.
pub(crate) fn relax_integral(x: f64, t: f64) -> f64 {
    let xt = x * t;
    if xt.abs() < 1e-300 {
        t
    } else {
        -(-xt).exp_m1() / x
    }
}
