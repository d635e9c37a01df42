//! Growth rate of the coupled two-sector economy.
//!
//! The log-ratio `Delta = ln(W / public W)` is stationary with density
//! `exp(-2 U / Sigma^2)`, `U(Delta) = f e^-Delta + phi e^Delta - delta Delta`,
//! and the asymptotic growth rate is `g = m_tilde + f <e^-Delta> - phi`.
//! `<e^-Delta>` is available in closed form through `K_{nu-1}/K_nu` and,
//! independently, by direct quadrature of the stationary density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive, DerivedParams, ModelParams};
use crate::optimize::brent_max;
use crate::quadrature::integrate;
use crate::special::{bessel_k_ratio, gamma_fn, MAX_ORDER};

/// Height of the reduced potential `2 (U - U_min) / Sigma^2` at which the
/// stationary density is truncated.
pub const TRUNCATION_HEIGHT: f64 = 80.0;

/// Distance from the special orders `0` and `1` inside which the expansions
/// refuse to evaluate.
pub const NU_BRANCH_TOL: f64 = 1e-9;

/// `2 sqrt(f phi) / Sigma^2` below which small-tax expansions are trusted.
pub const SMALL_PHI_LIMIT: f64 = 0.1;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const QUAD_REL_TOL: f64 = 1e-13;
const QUAD_MAX_INTERVALS: usize = 5_000;

/// Stationary (Gibbs) measure of the log-ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsSpec {
    pub f: f64,
    pub phi: f64,
    pub delta: f64,
    pub sigma2_total: f64,
    /// Location of the potential minimum.
    pub mode: f64,
    /// Truncated support.
    pub lower: f64,
    pub upper: f64,
    /// `ln Z`, with `Z = integral of exp(-2 U / Sigma^2)`.
    pub log_z: f64,
}

/// Minimum of `f e^-x + phi e^x - delta x`: root of `phi u^2 - delta u - f`.
fn potential_mode(f: f64, phi: f64, delta: f64) -> f64 {
    let root = delta.hypot(2.0 * (f * phi).sqrt());
    if delta >= 0.0 {
        ((delta + root) / (2.0 * phi)).ln()
    } else {
        (2.0 * f / (root - delta)).ln()
    }
}

/// Reduced potential `2 (U(x) - U(mode)) / Sigma^2`, written to avoid
/// cancellation near the mode.
fn reduced_potential(f: f64, phi: f64, delta: f64, s2: f64, mode: f64, x: f64) -> f64 {
    let dx = x - mode;
    let down = f * (-mode).exp() * (-dx).exp_m1();
    let up = phi * mode.exp() * dx.exp_m1();
    2.0 * (down + up - delta * dx) / s2
}

/// Point on one side of `mode` where the reduced potential reaches `height`.
fn potential_crossing(v: impl Fn(f64) -> f64, mode: f64, direction: f64, height: f64) -> f64 {
    let mut step = 1.0;
    let mut inner = mode;
    let mut outer = mode + direction * step;
    while v(outer) < height {
        inner = outer;
        step *= 2.0;
        outer = mode + direction * step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (inner + outer);
        if mid == inner || mid == outer {
            break;
        }
        if v(mid) < height {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    outer
}

/// `ln` of `integral exp(-2 U_delta / Sigma^2)` over the support truncated at
/// [`TRUNCATION_HEIGHT`], together with the support.
fn log_partition(f: f64, phi: f64, delta: f64, s2: f64) -> Result<(f64, f64, f64, f64)> {
    let mode = potential_mode(f, phi, delta);
    let v = |x: f64| reduced_potential(f, phi, delta, s2, mode, x);
    let lower = potential_crossing(v, mode, -1.0, TRUNCATION_HEIGHT);
    let upper = potential_crossing(v, mode, 1.0, TRUNCATION_HEIGHT);
    // split at the mode: the integrand is peaked there
    let left = integrate(
        |x| (-v(x)).exp(),
        lower,
        mode,
        0.0,
        QUAD_REL_TOL,
        QUAD_MAX_INTERVALS,
    )?;
    let right = integrate(
        |x| (-v(x)).exp(),
        mode,
        upper,
        0.0,
        QUAD_REL_TOL,
        QUAD_MAX_INTERVALS,
    )?;
    let u_min = f * (-mode).exp() + phi * mode.exp() - delta * mode;
    let log_z = (left.value + right.value).ln() - 2.0 * u_min / s2;
    Ok((log_z, mode, lower, upper))
}

impl GibbsSpec {
    pub fn new(f: f64, phi: f64, delta: f64, sigma2_total: f64) -> Result<Self> {
        if !(f > 0.0 && phi > 0.0) {
            return Err(Error::Unsupported(format!(
                "no stationary measure: the potential is not confining for f = {f}, phi = {phi}"
            )));
        }
        if !(sigma2_total > 0.0 && sigma2_total.is_finite() && delta.is_finite()) {
            return Err(Error::Unsupported(format!(
                "stationary measure needs finite delta and Sigma^2 > 0 (got {delta}, {sigma2_total})"
            )));
        }
        let (log_z, mode, lower, upper) = log_partition(f, phi, delta, sigma2_total)?;
        Ok(GibbsSpec {
            f,
            phi,
            delta,
            sigma2_total,
            mode,
            lower,
            upper,
            log_z,
        })
    }

    pub fn from_derived(d: &DerivedParams) -> Result<Self> {
        GibbsSpec::new(d.f, d.phi, d.delta, d.sigma2_total)
    }

    /// `U(x) = f e^-x + phi e^x - delta x`.
    pub fn potential(&self, x: f64) -> f64 {
        self.f * (-x).exp() + self.phi * x.exp() - self.delta * x
    }

    pub fn density(&self, x: f64) -> f64 {
        (-2.0 * self.potential(x) / self.sigma2_total - self.log_z).exp()
    }

    /// Stationary distribution function.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= self.lower {
            return Ok(0.0);
        }
        if x >= self.upper {
            return Ok(1.0);
        }
        let offset = 2.0 * self.potential(self.mode) / self.sigma2_total;
        let integrand = |y: f64| (-(2.0 * self.potential(y) / self.sigma2_total - offset)).exp();
        let part = integrate(integrand, self.lower, x, 1e-14, 1e-12, QUAD_MAX_INTERVALS)?;
        Ok((part.value.ln() - offset - self.log_z).exp().min(1.0))
    }

    /// Distribution function tabulated at `points` equispaced abscissae
    /// spanning the truncated support (cumulative piecewise quadrature).
    pub fn cdf_table(&self, points: usize) -> Result<Vec<(f64, f64)>> {
        let points = points.max(2);
        let offset = 2.0 * self.potential(self.mode) / self.sigma2_total;
        let integrand = |y: f64| (-(2.0 * self.potential(y) / self.sigma2_total - offset)).exp();
        let step = (self.upper - self.lower) / (points - 1) as f64;
        let mut table = Vec::with_capacity(points);
        let mut acc = 0.0;
        table.push((self.lower, 0.0));
        for i in 1..points {
            let a = self.lower + (i - 1) as f64 * step;
            let b = if i + 1 == points {
                self.upper
            } else {
                a + step
            };
            acc += integrate(integrand, a, b, 1e-300, 1e-12, QUAD_MAX_INTERVALS)?.value;
            table.push((b, acc));
        }
        for entry in table.iter_mut() {
            entry.1 /= acc;
        }
        Ok(table)
    }

    /// `<e^{-Delta}>` by quadrature. Tilting the density by `e^{-Delta}`
    /// shifts `delta` by `-Sigma^2 / 2`, so the mean is a ratio of two
    /// partition functions, each integrated on its own truncated support.
    pub fn mean_exp_minus(&self) -> Result<f64> {
        let (log_z_tilted, ..) = log_partition(
            self.f,
            self.phi,
            self.delta - 0.5 * self.sigma2_total,
            self.sigma2_total,
        )?;
        Ok((log_z_tilted - self.log_z).exp())
    }
}

/// `<e^{-Delta}>` under the stationary measure, by adaptive quadrature.
pub fn gibbs_expectation_quadrature(spec: &GibbsSpec) -> Result<f64> {
    spec.mean_exp_minus()
}

/// Argument `4 sqrt(f phi) / Sigma^2` of the Bessel functions.
pub fn bessel_argument(d: &DerivedParams) -> f64 {
    4.0 * (d.f * d.phi).sqrt() / d.sigma2_total
}

/// `<e^{-Delta}> = sqrt(phi / f) K_{nu-1}(z) / K_nu(z)`, `z = 4 sqrt(f phi) / Sigma^2`.
pub fn closed_form_expectation(d: &DerivedParams) -> Result<f64> {
    if !(d.f > 0.0 && d.phi > 0.0) {
        return Err(Error::Unsupported(format!(
            "closed form needs f > 0 and phi > 0 (got f = {}, phi = {})",
            d.f, d.phi
        )));
    }
    if !(d.sigma2_total > 0.0) {
        return Err(Error::Unsupported("closed form needs Sigma^2 > 0".into()));
    }
    Ok((d.phi / d.f).sqrt() * bessel_k_ratio(d.nu, bessel_argument(d))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthMethod {
    ClosedForm,
    Quadrature,
    SmallPhiExpansion,
    LargePhiExpansion,
    WeightedAverage,
    NuHalf,
    NuZero,
}

impl GrowthMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GrowthMethod::ClosedForm => "closed_form",
            GrowthMethod::Quadrature => "quadrature",
            GrowthMethod::SmallPhiExpansion => "small_phi_expansion",
            GrowthMethod::LargePhiExpansion => "large_phi_expansion",
            GrowthMethod::WeightedAverage => "weighted_average",
            GrowthMethod::NuHalf => "nu_half",
            GrowthMethod::NuZero => "nu_zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthResult {
    pub g: f64,
    pub method: GrowthMethod,
    /// Set when the inputs sit outside the regime the method assumes.
    pub note: Option<String>,
    /// `phi tau`; the stationary measure assumes this (or `f tau`) is small.
    pub phi_tau: f64,
    pub f_tau: f64,
}

impl GrowthResult {
    fn new(d: &DerivedParams, g: f64, method: GrowthMethod, note: Option<String>) -> Self {
        GrowthResult {
            g,
            method,
            note,
            phi_tau: d.phi * d.tau,
            f_tau: d.f * d.tau,
        }
    }
}

/// `g - m_tilde` from the stationary mean of `e^{-Delta}`, including the
/// decoupled limits where one transfer rate vanishes.
fn growth_excess(d: &DerivedParams, quadrature: bool) -> Result<f64> {
    let gap = d.m_tilde - d.mu_tilde;
    match (d.f > 0.0, d.phi > 0.0) {
        (false, false) => Ok(0.0),
        // no tax: the public sector either feeds a slower private sector or decouples
        (true, false) => Ok((-gap - d.f).max(0.0)),
        // no redistribution: the faster of the two sectors sets the pace
        (false, true) => Ok((-gap).max(-d.phi)),
        (true, true) if d.sigma2_total == 0.0 => {
            // deterministic fixed point of the log-ratio
            let root = d.delta.hypot(2.0 * (d.f * d.phi).sqrt());
            let inv_u = if d.delta <= 0.0 {
                (root - d.delta) / (2.0 * d.f)
            } else {
                2.0 * d.phi / (root + d.delta)
            };
            Ok(d.f * inv_u - d.phi)
        }
        (true, true) => {
            let mean = if quadrature {
                gibbs_expectation_quadrature(&GibbsSpec::from_derived(d)?)?
            } else {
                closed_form_expectation(d)?
            };
            Ok(d.f * mean - d.phi)
        }
    }
}

fn small_phi_note(d: &DerivedParams) -> Option<String> {
    let x = 2.0 * (d.f * d.phi).sqrt() / d.sigma2_total;
    (x >= SMALL_PHI_LIMIT)
        .then(|| format!("small-tax expansion used with 2 sqrt(f phi) / Sigma^2 = {x:.3e}"))
}

/// Growth rate by the selected method.
pub fn growth_rate(d: &DerivedParams, method: GrowthMethod) -> Result<GrowthResult> {
    match method {
        GrowthMethod::ClosedForm | GrowthMethod::Quadrature => {
            // beyond the Bessel order range the density is a narrow peak that
            // quadrature handles directly
            let method = if d.nu.abs() > MAX_ORDER {
                GrowthMethod::Quadrature
            } else {
                method
            };
            let excess = growth_excess(d, method == GrowthMethod::Quadrature)?;
            let note = (d.phi * d.tau >= 0.1 && d.f * d.tau >= 0.1).then(|| {
                format!(
                    "stationary measure assumes phi tau or f tau << 1 (phi tau = {:.3}, f tau = {:.3})",
                    d.phi * d.tau,
                    d.f * d.tau
                )
            });
            Ok(GrowthResult::new(d, d.m_tilde + excess, method, note))
        }
        GrowthMethod::SmallPhiExpansion => small_phi_expansion(d),
        GrowthMethod::LargePhiExpansion => Ok(large_phi_expansion(d, d.tau)?.result),
        GrowthMethod::WeightedAverage => {
            let total = d.f + d.phi;
            if !(total > 0.0) {
                return Err(Error::Unsupported(
                    "weighted average needs f + phi > 0".into(),
                ));
            }
            let g = (d.f * d.m_tilde + d.phi * d.mu_tilde) / total;
            let z = bessel_argument(d);
            let note = (z < 100.0).then(|| {
                format!("weighted average is asymptotic; 4 sqrt(f phi) / Sigma^2 = {z:.3e}")
            });
            Ok(GrowthResult::new(d, g, method, note))
        }
        GrowthMethod::NuHalf => {
            if (d.nu - 0.5).abs() >= NU_BRANCH_TOL {
                return Err(Error::Unsupported(format!(
                    "nu_half requires nu = 1/2, got nu = {}",
                    d.nu
                )));
            }
            let g = d.m_tilde - d.phi + (d.f * d.phi).sqrt();
            Ok(GrowthResult::new(d, g, method, None))
        }
        GrowthMethod::NuZero => {
            if d.nu.abs() >= NU_BRANCH_TOL {
                return Err(Error::Unsupported(format!(
                    "nu_zero requires nu = 0, got nu = {}",
                    d.nu
                )));
            }
            if !(d.f > 0.0 && d.phi > 0.0) {
                return Err(Error::Unsupported("nu_zero needs f > 0 and phi > 0".into()));
            }
            // K_1(z) / K_0(z) ~ 1 / (z (-ln(z/2) - gamma)) for small z
            let half_z = 2.0 * (d.f * d.phi).sqrt() / d.sigma2_total;
            let log_term = -half_z.ln() - EULER_GAMMA;
            if !(log_term > 0.0) {
                return Err(Error::Unsupported(format!(
                    "nu_zero expansion needs a small Bessel argument, got z/2 = {half_z:.3e}"
                )));
            }
            let g = d.m_tilde - d.phi + 0.25 * d.sigma2_total / log_term;
            Ok(GrowthResult::new(d, g, method, small_phi_note(d)))
        }
    }
}

/// Small-tax expansion of the growth rate. The branch is picked by `nu`:
/// `0 < nu < 1` gives a `phi^nu` gain, `|nu| > 1` a linear one and
/// `-1 < nu < 0` a sub-leading `phi^|nu|` gain on top of `mu_tilde - f`.
pub fn small_phi_expansion(d: &DerivedParams) -> Result<GrowthResult> {
    let nu = d.nu;
    if !nu.is_finite() {
        return Err(Error::Unsupported(
            "small-tax expansion needs Sigma^2 > 0".into(),
        ));
    }
    for special in [-1.0, 0.0, 1.0] {
        if (nu - special).abs() < NU_BRANCH_TOL {
            return Err(Error::Unsupported(format!(
                "nu = {nu} sits on the branch point {special}; use nu_zero or the closed form"
            )));
        }
    }
    let half_s2 = 0.5 * d.sigma2_total;
    let power_gain = |a: f64| -> Result<f64> {
        Ok(gamma_fn(1.0 - a)? / gamma_fn(a)? * half_s2.powf(1.0 - 2.0 * a) * (d.f * d.phi).powf(a))
    };
    let g = if nu > 1.0 {
        let gap = d.m_tilde - d.mu_tilde;
        d.m_tilde + (half_s2 - gap) / (gap + d.f - half_s2) * d.phi
    } else if nu > 0.0 {
        d.m_tilde - d.phi + power_gain(nu)?
    } else if nu > -1.0 {
        d.mu_tilde - d.f + power_gain(-nu)?
    } else {
        // K_{n+1}/K_n ~ 2n/z + z/(2(n-1)) for small z
        d.mu_tilde - d.f + 2.0 * d.f * d.phi / ((-nu - 1.0) * d.sigma2_total)
    };
    Ok(GrowthResult::new(
        d,
        g,
        GrowthMethod::SmallPhiExpansion,
        small_phi_note(d),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    FromAbove,
    FromBelow,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargePhiExpansion {
    pub result: GrowthResult,
    /// Coefficient `C` of `g = mu_tilde + C / phi`.
    pub correction: f64,
    pub approach: Approach,
}

/// Large-tax asymptote `mu_tilde + C / phi` with
/// `C = Sigma^2 / (4 tau) - f (mu_tilde - m_tilde - f)`.
pub fn large_phi_expansion(d: &DerivedParams, tau: f64) -> Result<LargePhiExpansion> {
    if !(d.phi > 0.0) {
        return Err(Error::Unsupported(
            "large-tax expansion needs phi > 0".into(),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid("tau", "must be > 0"));
    }
    let c = d.sigma2_total / (4.0 * tau) - d.f * (d.mu_tilde - d.m_tilde - d.f);
    let approach = if c > 0.0 {
        Approach::FromAbove
    } else if c < 0.0 {
        Approach::FromBelow
    } else {
        Approach::Flat
    };
    let slowest =
        d.f.max(1.0 / tau)
            .max(d.m_tilde.abs())
            .max(d.mu_tilde.abs());
    let note = (d.phi < 10.0 * slowest)
        .then(|| "large-tax expansion used with phi not much larger than f, 1/tau".to_string());
    Ok(LargePhiExpansion {
        result: GrowthResult::new(
            d,
            d.mu_tilde + c / d.phi,
            GrowthMethod::LargePhiExpansion,
            note,
        ),
        correction: c,
        approach,
    })
}

/// What stays fixed while the tax rate is varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hold {
    /// `mu_tilde` fixed: `delta` and `nu` fall as `phi` rises.
    #[default]
    Gap,
    /// `delta` fixed: `mu_tilde` co-varies with `phi`.
    Nu,
}

impl Hold {
    pub fn at(self, d: &DerivedParams, phi: f64) -> DerivedParams {
        match self {
            Hold::Gap => d.with_phi(phi),
            Hold::Nu => d.with_phi_fixed_nu(phi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub phi_min: f64,
    pub phi_max: f64,
}

impl SearchWindow {
    /// `[0, max(10 f, 10 Sigma^2, 1/tau)]`.
    pub fn default_for(d: &DerivedParams) -> Self {
        SearchWindow {
            phi_min: 0.0,
            phi_max: (10.0 * d.f).max(10.0 * d.sigma2_total).max(1.0 / d.tau),
        }
    }
}

/// Small-tax root of `dg/dphi = 0` (valid for `0 < nu < 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRoot {
    pub nu: f64,
    pub phi: f64,
    /// `2 sqrt(f phi) / Sigma^2` at the root; the root is trusted when small.
    pub smallness: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalTax {
    pub phi_star: f64,
    pub g_star: f64,
    /// `g_star - m_tilde`.
    pub excess: f64,
    pub root: Option<AsymptoticRoot>,
    /// Set when the profile has several local maxima; `phi_star` is then
    /// the best grid point.
    pub non_unimodal: bool,
    pub window: SearchWindow,
    pub hold: Hold,
}

/// `phi* = (Sigma^2/2) [nu Gamma(1-nu)/Gamma(nu)]^(1/(1-nu)) (2f/Sigma^2)^(nu/(1-nu))`.
pub fn asymptotic_optimal_phi(nu: f64, f: f64, sigma2_total: f64) -> Result<AsymptoticRoot> {
    if !(nu > NU_BRANCH_TOL && nu < 1.0 - NU_BRANCH_TOL) {
        return Err(Error::Unsupported(format!(
            "small-tax root needs 0 < nu < 1, got {nu}"
        )));
    }
    let half_s2 = 0.5 * sigma2_total;
    let amplitude = nu * gamma_fn(1.0 - nu)? / gamma_fn(nu)?;
    let phi = half_s2 * amplitude.powf(1.0 / (1.0 - nu)) * (f / half_s2).powf(nu / (1.0 - nu));
    let smallness = 2.0 * (f * phi).sqrt() / sigma2_total;
    Ok(AsymptoticRoot {
        nu,
        phi,
        smallness,
        valid: smallness < SMALL_PHI_LIMIT,
    })
}

const SCAN_POINTS: usize = 240;

/// Growth-maximising tax rate on `window` for the closed-form growth rate.
pub fn optimal_tax(
    params: &ModelParams,
    window: Option<SearchWindow>,
    hold: Hold,
) -> Result<OptimalTax> {
    let base = derive(params)?;
    if !(base.f > 0.0) {
        return Err(Error::Unsupported("optimal tax search needs f > 0".into()));
    }
    let window = window.unwrap_or_else(|| SearchWindow::default_for(&base));
    if !(window.phi_min >= 0.0 && window.phi_max > window.phi_min && window.phi_max.is_finite()) {
        return Err(Error::invalid(
            "phi_max",
            format!("bad search window {window:?}"),
        ));
    }
    // objective is g - m_tilde, which keeps the small excess at full precision
    let excess = |phi: f64| growth_excess(&hold.at(&base, phi), false);

    // geometric scan, plus the lower end itself
    let mut grid = Vec::with_capacity(SCAN_POINTS + 1);
    grid.push(window.phi_min);
    let start = if window.phi_min > 0.0 {
        window.phi_min
    } else {
        window.phi_max * 1e-9
    };
    let ratio = (window.phi_max / start).powf(1.0 / (SCAN_POINTS - 1) as f64);
    for i in 0..SCAN_POINTS {
        let x = if i + 1 == SCAN_POINTS {
            window.phi_max
        } else {
            start * ratio.powi(i as i32)
        };
        if x > *grid.last().unwrap() {
            grid.push(x);
        }
    }
    let values = grid
        .iter()
        .map(|&p| excess(p))
        .collect::<Result<Vec<_>>>()?;

    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let scale = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut sign_changes = 0;
    let mut last_sign = 0.0;
    for w in values.windows(2) {
        let step = w[1] - w[0];
        if step.abs() <= 1e-12 * scale {
            continue;
        }
        let sign = step.signum();
        if last_sign != 0.0 && sign != last_sign {
            sign_changes += 1;
        }
        last_sign = sign;
    }
    let non_unimodal = sign_changes > 1;

    let (phi_star, excess_star) = if non_unimodal {
        (grid[best], values[best])
    } else {
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let mut failure = None;
        let refined = brent_max(
            |p| match excess(p) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            },
            lo,
            hi,
            1e-11,
            1e-300,
            500,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let mut candidates = vec![(refined.x, refined.value), (grid[best], values[best])];
        if best == 0 || best + 1 == grid.len() {
            candidates.push((grid[best], values[best]));
        }
        candidates
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty")
    };

    let at_star = hold.at(&base, phi_star);
    let nu_for_root = match hold {
        Hold::Gap => base.with_phi(0.0).nu,
        Hold::Nu => base.nu,
    };
    Ok(OptimalTax {
        phi_star,
        g_star: at_star.m_tilde + excess_star,
        excess: excess_star,
        root: asymptotic_optimal_phi(nu_for_root, base.f, base.sigma2_total).ok(),
        non_unimodal,
        window,
        hold,
    })
}
