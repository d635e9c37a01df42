//! Aggregate private (`h = ln W`) and public (`H = ln public W`) log-wealth.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{OUState, OuStepper};
use super::{NoiseMode, SimConfig, DELTA_BLOWUP};
use crate::error::{Error, Result};
use crate::model::{derive, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub time: f64,
    pub h: f64,
    pub big_h: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSectorPath {
    pub index: usize,
    /// Points recorded every `record_every` steps, plus the final state.
    pub points: Vec<PathPoint>,
    /// End of burn-in.
    pub start: PathPoint,
    pub end: PathPoint,
    /// Time averages over the post-burn-in steps.
    pub mean_exp_minus: f64,
    pub mean_exp_plus: f64,
}

/// `phi tau` and `f tau`; the stationary (Gibbs) theory needs one of them small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsValidity {
    pub phi_tau: f64,
    pub f_tau: f64,
    /// `min(phi tau, f tau) <= 0.1`.
    pub small: bool,
}

pub fn gibbs_validity(params: &ModelParams) -> GibbsValidity {
    let phi_tau = params.phi * params.tau;
    let f_tau = params.f * params.tau;
    GibbsValidity {
        phi_tau,
        f_tau,
        small: phi_tau.min(f_tau) <= 0.1 + 1e-12,
    }
}

/// Gaussian driving of one log-variable: white increments or an OU process
/// integrated over the step.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Driver {
    White { sqrt_sub: f64, substeps: u32 },
    Colored { ou: OuStepper, half_dt: f64 },
}

impl Driver {
    pub(crate) fn new(mode: NoiseMode, dt: f64, tau: f64, substeps: u32) -> Self {
        match mode {
            NoiseMode::White => Driver::White {
                sqrt_sub: (dt / substeps as f64).sqrt(),
                substeps,
            },
            NoiseMode::Colored => Driver::Colored {
                ou: OuStepper::new(dt, tau),
                half_dt: 0.5 * dt,
            },
        }
    }

    pub(crate) fn initial<R: Rng + ?Sized>(&self, tau: f64, rng: &mut R) -> f64 {
        match self {
            Driver::White { .. } => 0.0,
            Driver::Colored { .. } => OUState::stationary(tau, rng).y,
        }
    }

    /// Integral of the unit noise over one step; advances `y` in coloured mode.
    #[inline]
    pub(crate) fn increment<R: Rng + ?Sized>(&self, y: &mut f64, rng: &mut R) -> f64 {
        match self {
            Driver::White {
                sqrt_sub,
                substeps: 1,
            } => sqrt_sub * rng.sample::<f64, _>(StandardNormal),
            Driver::White { sqrt_sub, substeps } => {
                let sum: f64 = (0..*substeps)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .sum();
                sqrt_sub * sum
            }
            Driver::Colored { ou, half_dt } => {
                let next = ou.step(*y, rng.sample(StandardNormal));
                let area = half_dt * (*y + next);
                *y = next;
                area
            }
        }
    }
}

/// Exact transfer flow `W' = -phi W + f P`, `P' = phi W - f P` over a span
/// with `-expm1(-(f + phi) span)` = `relax`, applied to `(h, H)`.
#[inline]
fn transfer(h: &mut f64, big_h: &mut f64, relax: f64, p_inf: f64, q_inf: f64) {
    let delta = *h - *big_h;
    *h += (relax * (p_inf * (1.0 + (-delta).exp()) - 1.0)).ln_1p();
    *big_h += (relax * (q_inf * (1.0 + delta.exp()) - 1.0)).ln_1p();
}

/// Integrates the two-sector log dynamics for every path in parallel.
pub fn simulate_two_sector(params: &ModelParams, config: &SimConfig) -> Result<Vec<TwoSectorPath>> {
    params.validate()?;
    config.validate(params.tau)?;
    (0..config.n_paths)
        .into_par_iter()
        .map(|i| run_path(params, config, i))
        .collect()
}

fn run_path(params: &ModelParams, config: &SimConfig, index: usize) -> Result<TwoSectorPath> {
    let d = derive(params)?;
    let dt = config.dt;
    let steps = config.steps();
    let burnin = config.burnin_steps();
    // separate streams for the two sectors keep refined runs coupled
    let mut rng_h = config.stream(2 * index as u64);
    let mut rng_big_h = config.stream(2 * index as u64 + 1);
    let driver = Driver::new(config.mode, dt, params.tau, config.noise_substeps);

    let rate = params.f + params.phi;
    let relax_half = -(-rate * 0.5 * dt).exp_m1();
    let (p_inf, q_inf) = if rate > 0.0 {
        (params.f / rate, params.phi / rate)
    } else {
        (0.0, 0.0)
    };
    let amp_h = params.rho.sqrt() * params.s;
    let amp_big_h = params.sigma;

    let mut y_h = driver.initial(params.tau, &mut rng_h);
    let mut y_big_h = driver.initial(params.tau, &mut rng_big_h);
    let (mut h, mut big_h) = (0.0f64, 0.0f64);
    let point = |n: usize, h: f64, big_h: f64| PathPoint {
        time: n as f64 * dt,
        h,
        big_h,
        delta: h - big_h,
    };

    let mut points = Vec::new();
    let mut start = point(0, h, big_h);
    let (mut sum_minus, mut sum_plus) = (0.0, 0.0);
    for n in 1..=steps {
        if rate > 0.0 {
            transfer(&mut h, &mut big_h, relax_half, p_inf, q_inf);
        }
        h += d.m_tilde * dt + amp_h * driver.increment(&mut y_h, &mut rng_h);
        big_h += d.mu_tilde * dt + amp_big_h * driver.increment(&mut y_big_h, &mut rng_big_h);
        if rate > 0.0 {
            transfer(&mut h, &mut big_h, relax_half, p_inf, q_inf);
        }
        let delta = h - big_h;
        if !(delta.abs() <= DELTA_BLOWUP) {
            return Err(Error::Numerical(format!(
                "path {index}: |Delta| = {:.1} exceeds {DELTA_BLOWUP} at t = {}; the sectors decouple \
                 (e.g. f = 0 with delta < 0) or dt is too large",
                delta.abs(),
                n as f64 * dt
            )));
        }
        if n == burnin {
            start = point(n, h, big_h);
        }
        if n > burnin {
            sum_minus += (-delta).exp();
            sum_plus += delta.exp();
        }
        if config.record_every > 0 && n % config.record_every == 0 && n != steps {
            points.push(point(n, h, big_h));
        }
    }
    let end = point(steps, h, big_h);
    points.push(end);
    let samples = (steps - burnin).max(1) as f64;
    Ok(TwoSectorPath {
        index,
        points,
        start,
        end,
        mean_exp_minus: sum_minus / samples,
        mean_exp_plus: sum_plus / samples,
    })
}
