//! Standardised Ornstein–Uhlenbeck noise: `<y(t) y(t')> = e^{-|t-t'|/tau} / (2 tau)`,
//! so that `y` integrates to unit white noise as `tau -> 0`.

use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUState {
    pub y: f64,
}

impl OUState {
    pub fn stationary_variance(tau: f64) -> f64 {
        0.5 / tau
    }

    /// Draw from the stationary law.
    pub fn stationary<R: Rng + ?Sized>(tau: f64, rng: &mut R) -> Self {
        let xi: f64 = rng.sample(StandardNormal);
        OUState {
            y: xi * Self::stationary_variance(tau).sqrt(),
        }
    }
}

/// Exact update over `dt` with the unit normal draw `xi`.
pub fn ou_step(state: OUState, dt: f64, tau: f64, xi: f64) -> OUState {
    let decay = (-dt / tau).exp();
    let spread = (-(-2.0 * dt / tau).exp_m1() / (2.0 * tau)).sqrt();
    OUState {
        y: state.y * decay + spread * xi,
    }
}

/// Precomputed coefficients of [`ou_step`] for a fixed `dt`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OuStepper {
    decay: f64,
    spread: f64,
}

impl OuStepper {
    pub(crate) fn new(dt: f64, tau: f64) -> Self {
        OuStepper {
            decay: (-dt / tau).exp(),
            spread: (-(-2.0 * dt / tau).exp_m1() / (2.0 * tau)).sqrt(),
        }
    }

    #[inline]
    pub(crate) fn step(&self, y: f64, xi: f64) -> f64 {
        y * self.decay + self.spread * xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn long_step_forgets_the_past() {
        let s = ou_step(OUState { y: 123.0 }, 1e6, 2.0, 0.7);
        assert!((s.y - 0.7 * 0.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stepper_matches_free_function() {
        let st = OuStepper::new(0.1, 3.0);
        let a = ou_step(OUState { y: 0.4 }, 0.1, 3.0, -1.3).y;
        assert_eq!(a, st.step(0.4, -1.3));
    }

    #[test]
    fn lag_tau_autocovariance() {
        let (tau, dt) = (1.0, 0.1);
        let lag = (tau / dt) as usize;
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let st = OuStepper::new(dt, tau);
        let mut y = OUState::stationary(tau, &mut rng).y;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            y = st.step(y, rng.sample(StandardNormal));
            xs.push(y);
        }
        let products: Vec<f64> = (0..n - lag).map(|i| xs[i] * xs[i + lag]).collect();
        let mean = products.iter().sum::<f64>() / products.len() as f64;
        // neighbouring products are correlated over ~tau/dt steps; block the
        // series to get an honest standard error
        let block = 20 * lag;
        let blocks: Vec<f64> = products
            .chunks_exact(block)
            .map(|c| c.iter().sum::<f64>() / block as f64)
            .collect();
        let bm = blocks.iter().sum::<f64>() / blocks.len() as f64;
        let var = blocks.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (blocks.len() - 1) as f64;
        let se = (var / blocks.len() as f64).sqrt();
        let want = (-1.0f64).exp() / (2.0 * tau);
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} (se {se})");
    }

    #[test]
    fn integrated_noise_has_unit_white_variance_for_small_tau() {
        // variance of int_0^T y dt -> T as tau -> 0
        let tau = 1e-3;
        let dt = tau / 20.0;
        let horizon = 0.5;
        let steps = (horizon / dt) as usize;
        let st = OuStepper::new(dt, tau);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = 4000;
        let mut sum2 = 0.0;
        for _ in 0..reps {
            let mut y = OUState::stationary(tau, &mut rng).y;
            let mut acc = 0.0;
            for _ in 0..steps {
                let next = st.step(y, rng.sample(StandardNormal));
                acc += 0.5 * (y + next) * dt;
                y = next;
            }
            sum2 += acc * acc;
        }
        let var = sum2 / reps as f64;
        // standard error of a variance estimate ~ sqrt(2/reps)
        assert!(
            (var / horizon - 1.0).abs() < 4.0 * (2.0 / reps as f64).sqrt(),
            "{var}"
        );
    }
}
