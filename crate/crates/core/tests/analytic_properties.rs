use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taxgrowth::analytics::{
    asymptotic_optimal_phi, closed_form_expectation, gibbs_expectation_quadrature, growth_rate,
    optimal_tax, small_phi_expansion, GibbsSpec, GrowthMethod, Hold,
};
use taxgrowth::model::{classify, derive, ModelParams, RegimeKind};

fn reference() -> ModelParams {
    ModelParams {
        m: 0.03,
        s: 0.10,
        rho: 0.2,
        sigma: 0.05,
        tau: 4.0,
        f: 0.02,
        mu_tilde: 0.03,
        ..ModelParams::default()
    }
}

/// Parameters with reduced drift `nu` at tax `phi`.
fn at_nu(base: &ModelParams, phi: f64, nu: f64) -> ModelParams {
    let p = ModelParams {
        phi,
        ..base.clone()
    };
    let d = derive(&p).unwrap();
    ModelParams {
        mu_tilde: d.m_tilde + p.f - phi - 0.5 * nu * d.sigma2_total,
        ..p
    }
}

#[test]
fn closed_form_matches_quadrature_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let s2 = derive(&reference()).unwrap().sigma2_total;
    for _ in 0..100 {
        let nu = rng.gen_range(-3.0..3.0);
        let z: f64 = (rng.gen_range((1e-3f64).ln()..50f64.ln())).exp();
        let f = rng.gen_range(0.001..0.2);
        let phi = (z * s2 / 4.0).powi(2) / f;
        let d = derive(&at_nu(&ModelParams { f, ..reference() }, phi, nu)).unwrap();
        let closed = closed_form_expectation(&d).unwrap();
        let quad = gibbs_expectation_quadrature(&GibbsSpec::from_derived(&d).unwrap()).unwrap();
        assert!(
            ((closed - quad) / quad).abs() < 1e-8,
            "nu {nu} z {z}: {closed} vs {quad}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn half_order_growth_is_exact(lf in -4.0f64..0.0, lp in -4.0f64..0.0) {
        let (f, phi) = (10f64.powf(lf), 10f64.powf(lp));
        let d = derive(&at_nu(&ModelParams { f, ..reference() }, phi, 0.5)).unwrap();
        let g = growth_rate(&d, GrowthMethod::ClosedForm).unwrap().g;
        let exact = d.m_tilde - phi + (f * phi).sqrt();
        prop_assert!(((g - exact) / exact).abs() < 1e-12);
        let named = growth_rate(&d, GrowthMethod::NuHalf).unwrap().g;
        prop_assert!(((named - exact) / exact).abs() < 1e-15);
    }

    #[test]
    fn moderate_tax_raises_growth(frac in 0.05f64..0.95) {
        let base = derive(&reference()).unwrap();
        let p = ModelParams { mu_tilde: base.m_tilde - frac * base.theta_plus, ..reference() };
        prop_assert_eq!(classify(&derive(&p).unwrap()).unwrap().kind, RegimeKind::ModerateTax);
        let opt = optimal_tax(&p, None, Hold::Gap).unwrap();
        prop_assert!(opt.phi_star > 0.0);
        prop_assert!(opt.g_star >= base.m_tilde);
    }

    #[test]
    fn gibbs_density_is_normalised(nu in -3.0f64..3.0, lz in -2.0f64..1.5) {
        let s2 = 0.0045;
        let (f, z) = (0.02, 10f64.powf(lz));
        let phi = (z * s2 / 4.0).powi(2) / f;
        let spec = GibbsSpec::new(f, phi, 0.5 * nu * s2, s2).unwrap();
        prop_assert!((spec.cdf(spec.upper).unwrap() - 1.0).abs() < 1e-10);
        prop_assert!(spec.cdf(spec.lower).unwrap().abs() < 1e-10);
    }
}

#[test]
fn large_tax_limit_is_the_weighted_average_up_to_a_noise_term() {
    let base = reference();
    let s2 = derive(&base).unwrap().sigma2_total;
    let mut last = f64::INFINITY;
    for z in [100.0, 300.0, 1000.0, 1e4] {
        let f = z * s2 / 8.0;
        let d = derive(&ModelParams {
            f,
            phi: 4.0 * f,
            ..base.clone()
        })
        .unwrap();
        let g = growth_rate(&d, GrowthMethod::ClosedForm).unwrap().g;
        let avg = growth_rate(&d, GrowthMethod::WeightedAverage).unwrap().g;
        let noise = f * 4.0 * f * s2 / (2.0 * (5.0 * f).powi(2));
        let residual = (g - avg - noise).abs();
        assert!(residual < last);
        assert!(residual < 2.0 * s2 / z, "z {z}: residual {residual}");
        last = residual;
    }
}

fn excess_error(nu: f64, f: f64) -> (f64, f64) {
    let p = at_nu(&ModelParams { f, ..reference() }, 1e-6, nu);
    let d = derive(&p).unwrap();
    let opt = optimal_tax(&p, None, Hold::Nu).unwrap();
    let predicted = (1.0 / nu - 1.0) * opt.phi_star;
    (
        2.0 * (f * opt.phi_star).sqrt() / d.sigma2_total,
        ((opt.excess - predicted) / predicted).abs(),
    )
}

#[test]
fn excess_at_small_optimum_follows_order() {
    for nu in [0.35, 0.5, 0.7, 0.9] {
        let (small, err) = excess_error(nu, 1e-5);
        assert!(small < 0.05, "nu {nu}: not in the small regime");
        assert!(err < 0.05, "nu {nu}: relative error {err}");
    }
}

#[test]
fn excess_relation_converges_slowly_at_low_order() {
    // corrections scale like z^(2 nu): at nu = 0.2 the small-tax condition
    // alone is not enough for 5%
    let errs: Vec<_> = [1e-5, 1e-7, 1e-9]
        .iter()
        .map(|&f| excess_error(0.2, f))
        .collect();
    assert!(errs[0].0 < 0.05 && errs[0].1 > 0.05);
    assert!(errs[0].1 > errs[1].1 && errs[1].1 > errs[2].1);
    assert!(errs[2].1 < 0.05);
}

#[test]
fn asymptotic_root_tracks_numerical_optimum() {
    for nu in [0.35, 0.5, 0.7] {
        let p = at_nu(
            &ModelParams {
                f: 1e-7,
                ..reference()
            },
            1e-6,
            nu,
        );
        let d = derive(&p).unwrap();
        let opt = optimal_tax(&p, None, Hold::Nu).unwrap();
        let root = asymptotic_optimal_phi(nu, p.f, d.sigma2_total).unwrap();
        assert!(root.valid);
        assert!(
            ((root.phi - opt.phi_star) / opt.phi_star).abs() < 0.05,
            "nu {nu}: {} vs {}",
            root.phi,
            opt.phi_star
        );
    }
}

#[test]
fn small_tax_slope_signs_match_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    while checked < 20 {
        let nu: f64 = rng.gen_range(-2.5..2.5);
        if [-1.0, 0.0, 1.0].iter().any(|b: &f64| (nu - b).abs() < 0.1) {
            continue;
        }
        let base = ModelParams {
            f: rng.gen_range(0.005..0.05),
            ..reference()
        };
        let s2 = derive(&base).unwrap().sigma2_total;
        // well inside 2 sqrt(f phi) < 0.1 Sigma^2
        let phi0 = (0.002 * s2).powi(2) / base.f;
        let p = at_nu(&base, phi0, nu);
        let d = derive(&p).unwrap();
        let h = 0.25 * phi0;
        let quad = |phi| {
            growth_rate(&d.with_phi(phi), GrowthMethod::Quadrature)
                .unwrap()
                .g
        };
        let series = |phi| small_phi_expansion(&d.with_phi(phi)).unwrap().g;
        let numeric = quad(phi0 + h) - quad(phi0 - h);
        let expansion = series(phi0 + h) - series(phi0 - h);
        assert_eq!(
            numeric.signum(),
            expansion.signum(),
            "nu {nu}: {numeric} vs {expansion}"
        );
        checked += 1;
    }
}

#[test]
fn regimes_follow_the_gap() {
    let d = derive(&reference()).unwrap();
    let at = |gap: f64| {
        classify(
            &derive(&ModelParams {
                mu_tilde: d.m_tilde - gap,
                ..reference()
            })
            .unwrap(),
        )
        .unwrap()
        .kind
    };
    assert_eq!(at(d.theta_plus + 1e-6), RegimeKind::NoTax);
    assert_eq!(at(1e-6), RegimeKind::ModerateTax);
    assert_eq!(at(-1e-6), RegimeKind::StrongTax);
    assert_eq!(at(-d.theta_minus.unwrap() - 1e-6), RegimeKind::FullTax);
}
