use gsee_lab::certify::{mixture_variance, mixture_variance_bound};
use gsee_lab::gsee::{basic_trials_per_round, chernoff_threshold, interpolation_gap, ThresholdScaling};
use gsee_lab::lemmas::{perturbation_bound, truncated_moments, truncation_width, worst_perturbed};
use gsee_lab::oracle::{realize, success_probability, OperatorFunction, OracleConfig};
use gsee_lab::polyapprox::{clenshaw, gaussian_cosine_series, threshold_poly, BOUND_SLACK};
use gsee_lab::spectrum::{ModelDomain, SpectralMeasure};
use gsee_lab::{rng, stats, Chebyshev};
use proptest::prelude::*;
use rand::Rng as _;
use std::f64::consts::{E, PI};

fn measure() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((-1.0f64..1.0, 0.01f64..1.0), 1..12).prop_map(|v| {
        let total: f64 = v.iter().map(|x| x.1).sum();
        v.into_iter().map(|(e, w)| (e, w / total)).unzip()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clenshaw_matches_trigonometric_definition(coeffs in prop::collection::vec(-1.0f64..1.0, 1..40), x in -1.0f64..1.0) {
        let t = x.acos();
        let direct: f64 = coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 * t).cos()).sum();
        prop_assert!((clenshaw(&coeffs, x) - direct).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_low_degree_series(coeffs in prop::collection::vec(-1.0f64..1.0, 1..10), n in 12usize..40) {
        let target = Chebyshev::new(coeffs.clone());
        let fit = Chebyshev::interpolate(|x| target.eval(x), n);
        for (k, c) in fit.coeffs.iter().enumerate() {
            let want = coeffs.get(k).copied().unwrap_or(0.0);
            prop_assert!((c - want).abs() < 1e-12, "k={} {} vs {}", k, c, want);
        }
    }

    #[test]
    fn measure_normalization_and_roundtrip((e, w) in measure()) {
        let spec = SpectralMeasure::synth(ModelDomain::BlockEncoding, &e, &w).unwrap();
        prop_assert!((spec.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(spec.energies().windows(2).all(|p| p[0] <= p[1]));
        let back = SpectralMeasure::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back.energies(), spec.energies());
        prop_assert_eq!(back.weights(), spec.weights());
        let (moved, map) = spec.rescale_to(ModelDomain::Evolution).unwrap();
        for (a, b) in spec.energies().iter().zip(moved.energies()) {
            prop_assert!((0.0..=1.0).contains(b));
            prop_assert!((map.invert(*b) - a).abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_gaussian_acceptance_is_the_weighted_kernel((e, w) in measure(), x in -1.0f64..1.0, s in 0.01f64..1.0) {
        let spec = SpectralMeasure::synth(ModelDomain::BlockEncoding, &e, &w).unwrap();
        let g = realize(&OracleConfig::ideal(), OperatorFunction::Gaussian { sigma: s, eps: 1e-3, center: x }).unwrap();
        let q = success_probability(&spec, &g, 1.0).unwrap();
        let want: f64 = spec.levels().map(|(ej, pj)| pj * (-(ej - x).powi(2) / (s * s)).exp()).sum();
        prop_assert!((q - want).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn poly_acceptance_stays_within_normalization((e, w) in measure(), x in -1.0f64..1.0) {
        let spec = SpectralMeasure::synth(ModelDomain::BlockEncoding, &e, &w).unwrap();
        let cfg = OracleConfig::poly(1);
        let g = realize(&cfg, OperatorFunction::Gaussian { sigma: 0.2, eps: 1e-3, center: x }).unwrap();
        let q = success_probability(&spec, &g, cfg.c).unwrap();
        let ideal: f64 = spec.levels().map(|(ej, pj)| pj * (-(ej - x).powi(2) / 0.04).exp()).sum::<f64>() / (cfg.c * cfg.c);
        // |g^2 - h^2| <= eps (|g| + |h|) <= 2 eps (1 + eps), scaled by c^-2.
        prop_assert!((q - ideal).abs() <= 2.0 * 1e-3 * 1.001 / (cfg.c * cfg.c) + 1e-12);
    }

    #[test]
    fn mixture_variance_dominates_its_bound(
        parts in prop::collection::vec((0.05f64..1.0, -0.5f64..0.5), 2..8),
        sigma in 0.001f64..0.2,
        eps in 1e-3f64..0.1,
    ) {
        let (weights, means): (Vec<f64>, Vec<f64>) = parts.into_iter().unzip();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let var = mixture_variance(&weights, &means, sigma);
        prop_assert!(var >= sigma * sigma - 1e-15);
        let centre: f64 = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
        let lowest = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let c = (centre - lowest).abs() / eps * (1.0 - 1e-12);
        let bound = mixture_variance_bound(&weights, &means, sigma, eps, c).unwrap();
        prop_assert!(bound <= var + 1e-12, "{} > {}", bound, var);
    }

    #[test]
    fn bisection_counts_scale_with_overlap(eta in 0.01f64..1.0, c in 1.0f64..4.0, delta in 0.01f64..0.5) {
        let lo = basic_trials_per_round(c, eta, 10, delta, ThresholdScaling::Squared).unwrap();
        let hi = basic_trials_per_round(c, (2.0 * eta).min(1.0), 10, delta, ThresholdScaling::Squared).unwrap();
        prop_assert!(hi <= lo);
        let lit = basic_trials_per_round(c, eta, 10, delta, ThresholdScaling::AsWritten).unwrap();
        prop_assert!(lit <= lo);
        let m = lo;
        let t = chernoff_threshold(c, eta, m, ThresholdScaling::Squared).unwrap();
        prop_assert!((t * c * c / m as f64 - eta / 2.0).abs() < 1e-12);
    }

    #[test]
    fn interpolated_gap_lies_between_endpoints(beta in 0.0f64..1.0, eps in 1e-5f64..0.1, gap in 0.1f64..1.0) {
        let g = interpolation_gap(beta, eps, gap);
        prop_assert!(g >= eps * (1.0 - 1e-12) && g <= gap * (1.0 + 1e-12));
    }

    #[test]
    fn streams_are_reproducible_and_lane_separated(master in any::<u64>(), trial in 0u64..1_000_000) {
        let a: u64 = rng::stream(master, trial, rng::lane::AUX).random();
        let b: u64 = rng::stream(master, trial, rng::lane::AUX).random();
        let c: u64 = rng::stream(master, trial, rng::lane::CERT_ORACLE).random();
        prop_assert_eq!(a, b);
        prop_assert_ne!(a, c);
    }

    #[test]
    fn count_samplers_respect_their_support(n in 0u64..10_000, k in 1u64..1000, p in 0.001f64..1.0, seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0, rng::lane::AUX);
        prop_assert!(stats::binomial(&mut r, n, p) <= n);
        let f = stats::negative_binomial(&mut r, k, p);
        if p == 1.0 {
            prop_assert_eq!(f, 0);
        }
    }

    #[test]
    fn ks_statistic_is_a_probability_distance(xs in prop::collection::vec(0.0f64..1.0, 1..200)) {
        let d = stats::ks_statistic(&xs, |x| x);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncated_gaussian_bounds(sigma in 0.01f64..1.0, ratio in 1e-3f64..1.0, t in -0.5f64..0.5) {
        let eps = sigma * ratio;
        let s = t * truncation_width(sigma, eps);
        let (mass, first) = truncated_moments(sigma, eps, s).unwrap();
        prop_assert!(mass >= 1.12 * sigma);
        prop_assert!(first.abs() / mass <= eps / (2.24 * E) + 1e-12);
    }

    #[test]
    fn perturbed_mean_stays_below_bound(sigma in 0.01f64..1.0, ratio in 1e-3f64..1.0, t in -0.5f64..0.5) {
        let eps = sigma * ratio;
        let s = t * truncation_width(sigma, eps);
        prop_assert!(perturbation_bound(sigma, eps) > 0.0);
        let (worst, min_mass) = worst_perturbed(sigma, eps, s).unwrap();
        prop_assert!(worst <= 0.55 * eps + 1e-12);
        prop_assert!(min_mass >= sigma - 1e-12);
    }

    #[test]
    fn cosine_series_has_a_convex_unit_coefficient_vector(sigma in 0.02f64..0.9, eps in 1e-6f64..0.05, x in -PI..PI) {
        let c = gaussian_cosine_series(sigma, eps).unwrap();
        prop_assert!(c.coeffs.iter().all(|a| *a >= 0.0));
        prop_assert!(c.coeff_sum() <= 1.0);
        prop_assert!((c.eval(x) - (-x * x / (2.0 * sigma * sigma)).exp()).abs() <= eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn threshold_polynomial_meets_band_spec(a in -0.8f64..0.6, width in 0.05f64..0.3, eps in 1e-4f64..0.1, t in 0.0f64..1.0) {
        let b = a + width;
        let p = threshold_poly(a, b, eps).unwrap();
        let x = -1.0 + 2.0 * t;
        let v = p.eval(x).unwrap();
        prop_assert!(v.abs() <= 1.0 + BOUND_SLACK);
        if x <= a {
            prop_assert!(v >= 1.0 - eps);
        } else if x >= b {
            prop_assert!(v.abs() <= eps);
        }
    }
}
