use gsee_lab::certify::*;
use gsee_lab::oracle::{AcceptanceOracle, OracleConfig};
use gsee_lab::rng;
use gsee_lab::spectrum::{ModelDomain, SpectralMeasure};
use statrs::distribution::{ContinuousCDF, Normal};

fn oracle(cfg: OracleConfig, seed: u64) -> AcceptanceOracle {
    AcceptanceOracle::new(cfg, rng::stream(seed, 0, rng::lane::CERT_ORACLE))
}

fn two_level(gap: f64, p0: f64) -> SpectralMeasure {
    SpectralMeasure::synth(ModelDomain::BlockEncoding, &[0.0, gap], &[p0, 1.0 - p0]).unwrap()
}

fn small_sigma(gap: f64, eps: f64, eta: f64) -> f64 {
    gap / (10.0 * (2.0 / (eta * eps)).ln().sqrt())
}

// Mass of N(mu, s^2) on [a, b].
fn normal_mass(mu: f64, s: f64, a: f64, b: f64) -> f64 {
    let n = Normal::new(mu, s).unwrap();
    n.cdf(b) - n.cdf(a)
}

#[test]
fn completeness_small_sigma() {
    let (eps, eta, gap) = (0.03, 0.02, 0.05);
    let sigma = small_sigma(gap, eps, eta);
    let spec = two_level(gap, 0.5);
    for seed in 0..5 {
        let mut p = CertParams::new(eps, eta, sigma, 0.0, 0.1).unwrap();
        p.check_promise = true;
        let v = gsee_cert(&p, &spec, &mut oracle(OracleConfig::ideal(), seed)).unwrap();
        assert!(v.accepted(), "{v:?}");
        assert!(v.refined_estimate.unwrap().abs() <= eps);
    }
}

#[test]
fn small_sigma_bound_is_not_peaked_at_large_overlap() {
    // At eta = 0.5 the excited level sits about 2 sigma past the tail window,
    // so the tail mass alone exceeds the rejection threshold.
    let (eps, eta, gap) = (0.03, 0.5, 0.05);
    let sigma = small_sigma(gap, eps, eta);
    let p = CertParams::new(eps, eta, sigma, 0.0, 0.1).unwrap();
    let (a, b) = p.tail_window();
    let tail = 0.5 * normal_mass(0.0, sigma, a, b) + 0.5 * normal_mass(gap, sigma, a, b);
    assert!(tail > 100.0 * p.tail_threshold());
    let v = gsee_cert(&p, &two_level(gap, 0.5), &mut oracle(OracleConfig::ideal(), 0)).unwrap();
    assert_eq!(v.reason, Some(RejectReason::NotPeaked));
    assert!((v.tail_mass - tail).abs() <= 0.05 * tail);
}

#[test]
fn pure_state_accepts_at_wide_sigma() {
    let (eps, eta, gap) = (0.05, 0.5, 0.01);
    let sigma = 10.0 * small_sigma(gap, eps, eta);
    let spec = SpectralMeasure::synth(ModelDomain::BlockEncoding, &[-0.1, -0.1 + gap], &[1.0, 0.0]).unwrap();
    for seed in 0..3 {
        let p = CertParams::new(eps, eta, sigma, -0.1 + 0.3 * sigma, 0.1).unwrap();
        let v = gsee_cert(&p, &spec, &mut oracle(OracleConfig::ideal(), seed)).unwrap();
        assert!(v.accepted(), "{v:?}");
        assert!((v.refined_estimate.unwrap() + 0.1).abs() <= eps);
    }
}

#[test]
fn variance_excess_rejects() {
    // Two levels 10 eps apart, both within sigma of the candidate and far from
    // the tail window: the conditioned mean is 5 eps off and the variance
    // exceeds sigma^2 by 25 eps^2.
    let (eps, eta) = (0.01, 0.5);
    let sigma = 10.0 * eps;
    let spec = two_level(10.0 * eps, 0.5);
    let m = mixture_variance(&[0.5, 0.5], &[0.0, 10.0 * eps], sigma);
    let bound = mixture_variance_bound(&[0.5, 0.5], &[0.0, 10.0 * eps], sigma, eps, 4.0).unwrap();
    assert!(m >= bound && bound - sigma * sigma > 2.0 * eps * eps * eta);
    for seed in 0..3 {
        let p = CertParams::new(eps, eta, sigma, 5.0 * eps, 0.1).unwrap();
        let w = peaked_window_moments(&spec, sigma, p.e_hat, p.l).unwrap();
        assert!(w.conditioned_variance() - sigma * sigma > 2.0 * p.variance_tolerance());
        let v = gsee_cert(&p, &spec, &mut oracle(OracleConfig::ideal(), seed)).unwrap();
        assert_eq!(v.reason, Some(RejectReason::ExcessVariance), "{v:?}");
        let s = v.conditioned_variance.unwrap();
        assert!((s - w.conditioned_variance()).abs() <= p.precision() * 10.0);
    }
}

#[test]
fn window_moments_match_closed_form() {
    let spec = SpectralMeasure::synth(ModelDomain::BlockEncoding, &[-0.2, -0.15, 0.4], &[0.3, 0.5, 0.2]).unwrap();
    let (sigma, e, l) = (0.03, -0.18, 0.1);
    let w = peaked_window_moments(&spec, sigma, e, l).unwrap();
    let (a, b) = (e - l, e + l);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (mu, p) in spec.levels() {
        let phi = |x: f64| (-0.5 * ((x - mu) / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let z = normal_mass(mu, sigma, a, b);
        m0 += p * z;
        m1 += p * (mu * z - sigma * sigma * (phi(b) - phi(a)));
        m2 += p * ((sigma * sigma + mu * mu) * z - sigma * sigma * ((b + mu) * phi(b) - (a + mu) * phi(a)));
    }
    assert!((w.mass - m0).abs() < 1e-10);
    assert!((w.first - m1).abs() < 1e-10);
    assert!((w.second - m2).abs() < 1e-10);
    assert_eq!(w.good_mass, 0.8);
}
