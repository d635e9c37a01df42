//! N agents with mean-field exchange, wealth tax and redistribution:
//!
//! `dw_i/dt = J0 (W/N - w_i) + eta_i w_i - phi w_i + f kappa_i P`,
//! `dP/dt = (mu_tilde + sigma xi') P + phi W - f P`,
//!
//! with `eta_i = m + sqrt(1-rho) s y_i + sqrt(rho) s y_common`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::two_sector::Driver;
use super::{relax_integral, SimConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Rescale all wealth once the total leaves `[1/RESCALE_AT, RESCALE_AT]`.
const RESCALE_AT: f64 = 1e150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthSnapshot {
    pub time: f64,
    /// Wealth is stored divided by `e^log_scale`; dynamics are homogeneous
    /// so only ratios matter to the estimators.
    pub log_scale: f64,
    pub wealth: Vec<f64>,
    pub public: f64,
}

impl WealthSnapshot {
    pub fn absolute_wealth(&self) -> impl Iterator<Item = f64> + '_ {
        let k = self.log_scale.exp();
        self.wealth.iter().map(move |w| w * k)
    }

    pub fn absolute_public(&self) -> f64 {
        self.public * self.log_scale.exp()
    }

    pub fn private_total(&self) -> f64 {
        self.wealth.iter().sum()
    }
}

/// Log aggregates at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub time: f64,
    /// `ln sum w_i`.
    pub log_private: f64,
    pub log_public: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRun {
    pub index: usize,
    pub snapshots: Vec<WealthSnapshot>,
    pub start: Aggregate,
    pub end: Aggregate,
    /// Largest relative change of total wealth over a transfer sub-step.
    pub max_conservation_error: f64,
}

struct Transfer<'a> {
    kappa: &'a [f64],
    j0_per_agent: f64,
    f: f64,
    lambda: f64,
    decay_c: f64,
    decay_lambda: f64,
    integral_c: f64,
    integral_cross: f64,
}

impl<'a> Transfer<'a> {
    fn new(params: &'a ModelParams, span: f64) -> Self {
        let lambda = params.f + params.phi;
        let c = params.j0 + params.phi;
        let decay_lambda = (-lambda * span).exp();
        Transfer {
            kappa: &params.kappa,
            j0_per_agent: params.j0 / params.n_agents as f64,
            f: params.f,
            lambda,
            decay_c: (-c * span).exp(),
            decay_lambda,
            integral_c: relax_integral(c, span),
            // (e^{-lambda t} - e^{-c t}) / (c - lambda)
            integral_cross: decay_lambda * relax_integral(c - lambda, span),
        }
    }

    /// Exact solution of the linear transfer flow over the span; the
    /// aggregate private wealth relaxes at rate `f + phi`, each agent at
    /// `J0 + phi`. Returns the relative change of total wealth.
    fn apply(&self, w: &mut [f64], public: &mut f64) -> f64 {
        let w0: f64 = w.iter().sum();
        let total = w0 + *public;
        let (w_inf, p_inf) = if self.lambda > 0.0 {
            (
                self.f / self.lambda * total,
                total - self.f / self.lambda * total,
            )
        } else {
            (w0, *public)
        };
        let excess = w0 - w_inf;
        let base = self.j0_per_agent * w_inf;
        let pulse = self.j0_per_agent * excess;
        for (wi, &k) in w.iter_mut().zip(self.kappa) {
            let a = base + self.f * k * p_inf;
            let b = pulse - self.f * k * excess;
            *wi = *wi * self.decay_c + a * self.integral_c + b * self.integral_cross;
        }
        *public = p_inf + (*public - p_inf) * self.decay_lambda;
        let after: f64 = w.iter().sum::<f64>() + *public;
        ((after - total) / total).abs()
    }
}

/// Runs `n_paths` independent agent economies in parallel. All agents start
/// at `w_i = 1` with public wealth `N`.
pub fn simulate_agents(params: &ModelParams, config: &SimConfig) -> Result<Vec<AgentRun>> {
    params.validate()?;
    config.validate(params.tau)?;
    if params.n_agents < 2 {
        return Err(Error::invalid(
            "n_agents",
            "agent simulation needs at least 2 agents",
        ));
    }
    (0..config.n_paths)
        .into_par_iter()
        .map(|i| run(params, config, i))
        .collect()
}

fn run(params: &ModelParams, config: &SimConfig, index: usize) -> Result<AgentRun> {
    let n = params.n_agents;
    let dt = config.dt;
    let steps = config.steps();
    let burnin = config.burnin_steps();
    let mut rng = config.rng(index);
    let driver = Driver::new(config.mode, dt, params.tau, config.noise_substeps);
    let half = Transfer::new(params, 0.5 * dt);

    let amp_idio = (1.0 - params.rho).sqrt() * params.s;
    let amp_common = params.rho.sqrt() * params.s;
    let mut y_idio: Vec<f64> = (0..n)
        .map(|_| driver.initial(params.tau, &mut rng))
        .collect();
    let mut y_common = driver.initial(params.tau, &mut rng);
    let mut y_public = driver.initial(params.tau, &mut rng);

    let mut w = vec![1.0f64; n];
    let mut public = n as f64;
    let mut log_scale = 0.0f64;
    let mut worst = 0.0f64;

    let aggregate = |n_step: usize, w: &[f64], public: f64, log_scale: f64| Aggregate {
        time: n_step as f64 * dt,
        log_private: w.iter().sum::<f64>().ln() + log_scale,
        log_public: public.ln() + log_scale,
    };
    let snapshot = |n_step: usize, w: &[f64], public: f64, log_scale: f64| WealthSnapshot {
        time: n_step as f64 * dt,
        log_scale,
        wealth: w.to_vec(),
        public,
    };

    let mut start = aggregate(0, &w, public, log_scale);
    let mut snapshots = Vec::new();
    for step in 1..=steps {
        worst = worst.max(half.apply(&mut w, &mut public));
        let common = params.m * dt + amp_common * driver.increment(&mut y_common, &mut rng);
        for (wi, yi) in w.iter_mut().zip(y_idio.iter_mut()) {
            *wi *= (common + amp_idio * driver.increment(yi, &mut rng)).exp();
        }
        public *=
            (params.mu_tilde * dt + params.sigma * driver.increment(&mut y_public, &mut rng)).exp();
        worst = worst.max(half.apply(&mut w, &mut public));

        if let Some(bad) = w.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Numerical(format!(
                "path {index}: agent {bad} has wealth {} at t = {}; reduce dt",
                w[bad],
                step as f64 * dt
            )));
        }
        if !(public > 0.0 && public.is_finite()) {
            return Err(Error::Numerical(format!(
                "path {index}: public wealth {public} at t = {}; reduce dt",
                step as f64 * dt
            )));
        }
        let total = w.iter().sum::<f64>() + public;
        if !(1.0 / RESCALE_AT..=RESCALE_AT).contains(&total) {
            w.iter_mut().for_each(|x| *x /= total);
            public /= total;
            log_scale += total.ln();
        }
        if step == burnin {
            start = aggregate(step, &w, public, log_scale);
        }
        if config.record_every > 0 && step % config.record_every == 0 && step != steps {
            snapshots.push(snapshot(step, &w, public, log_scale));
        }
    }
    snapshots.push(snapshot(steps, &w, public, log_scale));
    Ok(AgentRun {
        index,
        snapshots,
        start,
        end: aggregate(steps, &w, public, log_scale),
        max_conservation_error: worst,
    })
}
