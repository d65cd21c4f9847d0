use approx::assert_relative_eq;
use cliquelab::{TruncatedWeight, WeightDistribution as D};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn continuous() -> Vec<D> {
    vec![
        D::Uniform01,
        D::Beta { alpha: 2.0, beta: 3.0 },
        D::Gamma { shape: 2.0, rate: 1.0 },
        D::HalfNormal { sigma: 1.0 },
        D::LogNormal,
        D::ParetoPowerLaw { exponent: 3.5, x_min: 0.6 },
    ]
}

#[test]
fn tail_reference_values() {
    // mpmath: erfc(q / sqrt 2) at the 95% normal quantile.
    assert_relative_eq!(
        D::HalfNormal { sigma: 1.0 }.tail(1.6448536269514722),
        0.1000000000000001,
        max_relative = 1e-13
    );
    assert_relative_eq!(D::Gamma { shape: 1.0, rate: 2.0 }.tail(1.0), (-2.0f64).exp(), max_relative = 1e-14);
    assert_relative_eq!(D::Uniform01.tail(0.25), 0.75);
    assert_eq!(D::Bernoulli { p: 0.3 }.tail(0.5), 0.3);
    assert_eq!(D::Degenerate { value: 1.0 }.tail(1.0), 0.0);
    assert_eq!(D::Degenerate { value: 1.0 }.prob_at_least(1.0), 1.0);
    assert_relative_eq!(D::ParetoPowerLaw { exponent: 3.0, x_min: 1.0 }.tail(2.0), 0.25, max_relative = 1e-14);
}

#[test]
fn truncated_gamma_second_moment() {
    // mpmath quad of x^3 e^-x on [0, 5] over the same of x e^-x.
    let t = TruncatedWeight::new(D::Gamma { shape: 2.0, rate: 1.0 }, 5.0).unwrap();
    assert_relative_eq!(t.moment(2.0).unwrap(), 4.595635394507715, max_relative = 1e-12);
    assert_relative_eq!(t.ln_moment_quadrature(2.0).unwrap().exp(), 4.595635394507715, max_relative = 1e-9);
}

#[test]
fn beta_relative_moment_product_formula() {
    // E[W^3] / E[W]^3 = (2 3 4)/(5 6 7) / (2/5)^3.
    let t = TruncatedWeight::new(D::Beta { alpha: 2.0, beta: 3.0 }, 1.0).unwrap();
    assert!(t.is_inactive());
    let expected = (24.0 / 210.0) / 0.4f64.powi(3);
    assert_relative_eq!(t.relative_moment(4.0).unwrap().value, expected, max_relative = 1e-12);
}

#[test]
fn bernoulli_and_degenerate_relative_moments() {
    let t = TruncatedWeight::new(D::Bernoulli { p: 0.5 }, 2.0).unwrap();
    assert_relative_eq!(t.relative_moment(3.0).unwrap().value, 2.0, max_relative = 1e-14);
    let t = TruncatedWeight::new(D::Degenerate { value: 1.0 }, 2.0).unwrap();
    assert_eq!(t.relative_moment(7.5).unwrap().value, 1.0);
}

#[test]
fn truncation_below_support_has_zero_mass() {
    assert!(TruncatedWeight::new(D::Degenerate { value: 2.0 }, 1.0).is_err());
    assert!(TruncatedWeight::new(D::ParetoPowerLaw { exponent: 3.0, x_min: 1.0 }, 0.5).is_err());
    assert!(D::Gamma { shape: -1.0, rate: 1.0 }.validate().is_err());
    assert!(D::Bernoulli { p: 1.5 }.validate().is_err());
}

#[test]
fn pareto_truncation_tames_divergent_moment() {
    let t = TruncatedWeight::new(D::ParetoPowerLaw { exponent: 3.5, x_min: 0.6 }, 50.0).unwrap();
    let c = t.compare_untruncated(5.0).unwrap();
    assert!(c.ln_truncated.is_finite());
    assert_eq!(c.ln_untruncated, f64::INFINITY);
    assert_eq!(c.ratio, 0.0);
}

#[test]
fn large_orders_stay_finite() {
    for d in continuous() {
        let t = TruncatedWeight::new(d, 1.4).unwrap();
        for r in [200.0, 1000.0] {
            let a = t.relative_moment(r).unwrap().ln;
            let b = t.relative_moment_quadrature(r).unwrap().ln;
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{d:?} r={r}: {a} vs {b}");
        }
        // Quadrature of x^k overflows here; the closed form must not.
        assert!(t.relative_moment(1e5).unwrap().ln.is_finite(), "{d:?}");
    }
}

#[test]
fn uniform_sample_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs = D::Uniform01.sample(&mut rng, 200_000);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    // sd of the mean is 1/sqrt(12 * 2e5) ~ 6.5e-4.
    assert!((mean - 0.5).abs() < 5.0 * 6.5e-4, "{mean}");
}

proptest! {
    #[test]
    fn mass_in_unit_interval(i in 0usize..6, c in 0.01f64..30.0) {
        let m = continuous()[i].ln_mass(c).exp();
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn relative_moment_jensen(i in 0usize..6, c in 1.0f64..30.0, r in 1.0f64..12.0) {
        let t = TruncatedWeight::new(continuous()[i], c).unwrap();
        let m = t.relative_moment(r).unwrap().value;
        // Convex power for orders above 1, concave below.
        if r >= 2.0 {
            prop_assert!(m >= 1.0 - 1e-12);
        } else {
            prop_assert!(m <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_quadrature(i in 0usize..6, c in 1.0f64..20.0, r in 1.0f64..8.0) {
        let t = TruncatedWeight::new(continuous()[i], c).unwrap();
        let a = t.relative_moment(r).unwrap().ln;
        let b = t.relative_moment_quadrature(r).unwrap().ln;
        prop_assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn truncated_samples_respect_cutoff(i in 0usize..6, c in 1.0f64..10.0, seed in any::<u64>()) {
        let t = TruncatedWeight::new(continuous()[i], c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in t.sample(&mut rng, 64) {
            prop_assert!(x >= 0.0 && x <= c);
        }
    }
}
