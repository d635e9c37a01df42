use taxgrowth::analytics::{growth_rate, GibbsSpec, GrowthMethod};
use taxgrowth::model::{derive, ModelParams};
use taxgrowth::sim::estimators::{estimate_growth_agents, estimate_growth_drift};
use taxgrowth::sim::{
    estimate_growth, estimate_growth_public, simulate_agents, simulate_two_sector, NoiseMode,
    SimConfig,
};

/// Reference economy at `phi = f/4` with `nu = 1/2`, where `g = m~ + f/4`.
fn half_order() -> ModelParams {
    let p = ModelParams {
        m: 0.03,
        s: 0.10,
        rho: 0.2,
        sigma: 0.05,
        tau: 4.0,
        f: 0.02,
        phi: 0.005,
        ..ModelParams::default()
    };
    let d = derive(&p).unwrap();
    ModelParams {
        mu_tilde: d.m_tilde + p.f - p.phi - 0.25 * d.sigma2_total,
        ..p
    }
}

fn white(t_total: f64, n_paths: usize, seed: u64) -> SimConfig {
    SimConfig {
        dt: 0.05,
        t_total,
        t_burnin: 0.1 * t_total,
        seed,
        mode: NoiseMode::White,
        n_paths,
        record_every: 0,
        noise_substeps: 1,
    }
}

#[test]
fn stationary_delta_follows_gibbs_law() {
    // Sigma^2 = 1, delta = 0.2 with phi tau and f tau well below 0.1
    let p = ModelParams {
        m: 0.03,
        s: 0.0,
        rho: 0.0,
        sigma: 1.0,
        tau: 0.01,
        f: 0.5,
        phi: 0.3,
        mu_tilde: 0.03 - 0.2 + 0.5 - 0.3,
        ..ModelParams::default()
    };
    let d = derive(&p).unwrap();
    assert!((d.delta - 0.2).abs() < 1e-12);
    let c = SimConfig {
        dt: 0.01,
        t_total: 5100.0,
        t_burnin: 100.0,
        n_paths: 16,
        record_every: 100,
        ..white(1.0, 1, 5)
    };
    let mut sample: Vec<f64> = simulate_two_sector(&p, &c)
        .unwrap()
        .iter()
        .flat_map(|path| {
            path.points
                .iter()
                .filter(|q| q.time > c.t_burnin)
                .map(|q| q.delta)
        })
        .collect();
    sample.sort_by(f64::total_cmp);
    let spec = GibbsSpec::from_derived(&d).unwrap();
    let n = sample.len() as f64;
    let ks = sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = spec.cdf(x).unwrap();
            (cdf - i as f64 / n)
                .abs()
                .max((cdf - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS distance {ks} over {n} points");
    // tabulated CDF is monotone and spans [0, 1]
    let table = spec.cdf_table(200).unwrap();
    assert!(table
        .windows(2)
        .all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1));
    assert!(table[0].1.abs() < 1e-10 && (table[199].1 - 1.0).abs() < 1e-10);
}

#[test]
fn private_and_public_routes_agree() {
    let p = half_order();
    let d = derive(&p).unwrap();
    let paths = simulate_two_sector(&p, &white(1100.0, 32, 9)).unwrap();
    let h = estimate_growth(&paths).unwrap();
    let big_h = estimate_growth_public(&paths).unwrap();
    assert!(
        (h.g_hat - big_h.g_hat).abs() <= 3.0 * h.std_error.max(big_h.std_error),
        "{h:?} vs {big_h:?}"
    );
    let g = growth_rate(&d, GrowthMethod::ClosedForm).unwrap().g;
    for est in [
        estimate_growth_drift(&paths, &d, false).unwrap(),
        estimate_growth_drift(&paths, &d, true).unwrap(),
    ] {
        assert!(est.z_score(g) <= 3.0, "{est:?} vs {g}");
    }
}

#[test]
fn half_order_time_average_matches_theory() {
    let p = half_order();
    let paths = simulate_two_sector(&p, &white(1100.0, 32, 21)).unwrap();
    let est = estimate_growth(&paths).unwrap();
    assert!(est.z_score(0.039) <= 3.0, "{est:?}");
    let n = paths.len() as f64;
    let mean = paths.iter().map(|q| q.mean_exp_minus).sum::<f64>() / n;
    let var = paths
        .iter()
        .map(|q| (q.mean_exp_minus - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    assert!(
        (mean - 0.5).abs() <= 3.0 * (var / n).sqrt(),
        "<e^-Delta> = {mean}"
    );
}

#[test]
fn noiseless_uncoupled_growth_is_exact() {
    let p = ModelParams {
        s: 0.0,
        sigma: 0.0,
        f: 0.0,
        phi: 0.0,
        m: 0.03,
        mu_tilde: 0.01,
        ..ModelParams::default()
    };
    let est = estimate_growth(&simulate_two_sector(&p, &white(200.0, 4, 1)).unwrap()).unwrap();
    assert!((est.g_hat - 0.03).abs() < 1e-12);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn refinement_converges_on_a_shared_noise_path() {
    let p = half_order();
    let end = |dt: f64, substeps: u32| {
        let c = SimConfig {
            dt,
            noise_substeps: substeps,
            ..white(200.0, 4, 33)
        };
        simulate_two_sector(&p, &c)
            .unwrap()
            .iter()
            .map(|q| (q.end.h, q.end.big_h))
            .collect::<Vec<_>>()
    };
    let reference = end(0.0125, 1);
    let errors: Vec<f64> = [(0.2, 16), (0.1, 8), (0.05, 4), (0.025, 2)]
        .iter()
        .map(|&(dt, k)| {
            end(dt, k)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(errors[3] < 1e-3, "{errors:?}");
}

#[test]
fn agent_aggregate_closes_on_two_sector_growth() {
    let p = ModelParams {
        j0: 0.01,
        ..half_order()
    }
    .with_agents(10_000);
    let c = SimConfig {
        dt: 0.1,
        t_total: 550.0,
        t_burnin: 50.0,
        record_every: 0,
        ..white(1.0, 8, 41)
    };
    let runs = simulate_agents(&p, &c).unwrap();
    for r in &runs {
        assert!(r.max_conservation_error < 1e-12);
    }
    let est = estimate_growth_agents(&runs).unwrap();
    assert!(est.z_score(0.039) <= 3.0, "{est:?}");
}
