//! Closed-form analytic quantities: the gamma function, Euler products
//! over classified primes, and the predictors they combine into.
//!
//! Predictor arithmetic happens in log space with a single final
//! exponentiation; factorials and E^k would overflow doubles long before
//! the predictions themselves do.

use crate::error::{Error, Result};
use crate::numerics::Kahan;
use crate::partitions::{PartitionSpec, ReciprocalSums};
use crate::primes::for_each_prime;
use crate::report::PredictionReport;

// Lanczos approximation, g = 10.900511 (Pugh's coefficients, the same
// table statrs ships). Relative error stays below ~1e-13 on (0, 50].
const LANCZOS_R: f64 = 10.900511;
#[allow(clippy::excessive_precision)]
const LANCZOS_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];
#[allow(clippy::excessive_precision)]
const TWO_SQRT_E_OVER_PI: f64 = 1.8603827342052657173362492472666631120594218414085755;
#[allow(clippy::excessive_precision)]
const LN_2_SQRT_E_OVER_PI: f64 = 0.6207822376352452223455184457816472122518527279025978;

/// Gamma(t) for t > 0.
pub fn gamma_fn(t: f64) -> Result<f64> {
    if t <= 0.0 || t.is_nan() {
        return Err(Error::Domain(format!("gamma requires t > 0, got {t}")));
    }
    let s = LANCZOS_DK
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_DK[0], |s, (i, &dk)| s + dk / (t + i as f64 - 1.0));
    Ok(s * TWO_SQRT_E_OVER_PI * ((t - 0.5 + LANCZOS_R) / std::f64::consts::E).powf(t - 0.5))
}

/// log Gamma(t) for t > 0. Exactly zero at the integer anchors t = 1 and
/// t = 2, where Gamma is exactly 1.
pub fn ln_gamma(t: f64) -> Result<f64> {
    if t <= 0.0 || t.is_nan() {
        return Err(Error::Domain(format!("ln_gamma requires t > 0, got {t}")));
    }
    if t == 1.0 || t == 2.0 {
        return Ok(0.0);
    }
    let s = LANCZOS_DK
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_DK[0], |s, (i, &dk)| s + dk / (t + i as f64 - 1.0));
    Ok(s.ln()
        + LN_2_SQRT_E_OVER_PI
        + (t - 0.5) * (((t - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()))
}

/// Truncated Euler product value with its truncation metadata.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EulerProductResult {
    pub value: f64,
    pub truncation_prime: u64,
    /// Rigorous bound on |log(full product) - log(truncated product)|.
    pub tail_bound: f64,
}

/// Truncation point for Euler products.
#[derive(Debug, Clone)]
pub struct EulerConfig {
    pub truncation_prime: u64,
}

impl Default for EulerConfig {
    fn default() -> Self {
        EulerConfig {
            truncation_prime: 10_000_000,
        }
    }
}

/// Largest exponent the Euler product routines accept.
pub const MAX_RHO: f64 = 10.0;

/// log of the local factor (1 + rho/(p-1)) (1 - 1/p)^rho.
///
/// At rho = 1 the factor telescopes to exactly 1, so the log is pinned to
/// zero rather than left to rounding.
#[inline]
fn log_local_factor(rho: f64, p: f64) -> f64 {
    if rho == 1.0 {
        return 0.0;
    }
    (rho / (p - 1.0)).ln_1p() + rho * (-1.0 / p).ln_1p()
}

/// |log local factor| <= (4 rho^2 + 3 rho)/p^2 for p well above rho, and
/// sum_{p > P} p^-2 < 1/(2P) over the (odd) integers beyond P.
fn tail_bound_for(rho_max: f64, truncation_prime: u64) -> f64 {
    (4.0 * rho_max * rho_max + 3.0 * rho_max) / (2.0 * truncation_prime as f64)
}

fn check_rho_range(rho: f64) -> Result<()> {
    if rho.is_nan() || rho <= 0.0 || rho > MAX_RHO {
        return Err(Error::Domain(format!(
            "rho = {rho} outside the supported range (0, {MAX_RHO}]"
        )));
    }
    Ok(())
}

/// log of prod_p (1 + rho/(p-1))(1 - 1/p)^rho over p <= truncation.
fn log_euler_sum_scalar(rho: f64, cfg: &EulerConfig) -> f64 {
    if rho == 1.0 {
        return 0.0;
    }
    let mut sum = Kahan::new();
    for_each_prime(cfg.truncation_prime, |p| {
        sum.add(log_local_factor(rho, p as f64));
    });
    sum.value()
}

/// F(rho) with the Gamma(rho)^{-1} normalization baked in: the constant of
/// the one-dimensional weighted-count asymptotic.
pub fn euler_product_scalar(rho: f64, cfg: &EulerConfig) -> Result<EulerProductResult> {
    check_rho_range(rho)?;
    let log_sum = log_euler_sum_scalar(rho, cfg);
    Ok(EulerProductResult {
        value: (log_sum - ln_gamma(rho)?).exp(),
        truncation_prime: cfg.truncation_prime,
        tail_bound: tail_bound_for(rho, cfg.truncation_prime),
    })
}

/// The multivariate product prod_j prod_{p in E_j} (1 + rho_j/(p-1))
/// (1 - 1/p)^{rho_j}, with no Gamma factor.
pub fn euler_product_vector(
    spec: &PartitionSpec,
    rho: &[f64],
    cfg: &EulerConfig,
) -> Result<EulerProductResult> {
    if rho.len() != spec.parts() {
        return Err(Error::Domain(format!(
            "rho has {} components for {} parts",
            rho.len(),
            spec.parts()
        )));
    }
    for &r in rho {
        check_rho_range(r)?;
    }
    let rho_max = rho.iter().cloned().fold(0.0f64, f64::max);
    let log_sum = if rho.iter().all(|&r| r == 1.0) {
        0.0
    } else {
        let classifier = spec.classifier();
        let mut sum = Kahan::new();
        for_each_prime(cfg.truncation_prime, |p| {
            sum.add(log_local_factor(rho[classifier.classify(p)], p as f64));
        });
        sum.value()
    };
    Ok(EulerProductResult {
        value: log_sum.exp(),
        truncation_prime: cfg.truncation_prime,
        tail_bound: tail_bound_for(rho_max, cfg.truncation_prime),
    })
}

/// Arithmetic mean of the exponent vector.
pub fn mean_rho(rho: &[f64]) -> f64 {
    if rho.is_empty() {
        return 0.0;
    }
    rho.iter().sum::<f64>() / rho.len() as f64
}

/// log of prod_j E_j^{k_j}/k_j! e^{-E_j} plus log x: the shared kernel of
/// the Poisson-shaped predictors.
fn log_poisson_predict(esums: &ReciprocalSums, k: &[u8]) -> Result<f64> {
    if k.len() != esums.e.len() {
        return Err(Error::Domain(format!(
            "k has {} components for {} parts",
            k.len(),
            esums.e.len()
        )));
    }
    let mut log = esums.x.ln();
    for (&e, &kj) in esums.e.iter().zip(k) {
        let kj = kj as f64;
        if e == 0.0 {
            if kj > 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            continue; // Poisson(0) mass at 0 is 1
        }
        log += kj * e.ln() - e - ln_gamma(kj + 1.0)?;
    }
    Ok(log)
}

/// The Poisson model count: x prod_j E_j^{k_j}/k_j! e^{-E_j}.
pub fn poisson_predict(esums: &ReciprocalSums, k: &[u8]) -> Result<f64> {
    Ok(log_poisson_predict(esums, k)?.exp())
}

/// x (log x)^{rho-1} F(rho), the weighted-count asymptotic main term.
pub fn selberg_predict(x: f64, rho: f64, cfg: &EulerConfig) -> Result<f64> {
    if x < 3.0 || x.is_nan() {
        return Err(Error::Domain(format!(
            "selberg_predict requires x >= 3, got {x}"
        )));
    }
    check_rho_range(rho)?;
    let f = euler_product_scalar(rho, cfg)?;
    Ok(x * x.ln().powf(rho - 1.0) * f.value)
}

/// Main term M_{f_rho}(x) prod_j E_j^{k_j}/k_j! e^{-k_j}, with the
/// weighted sum supplied by the caller (census-exact or predicted).
pub fn halapp_main_term(m_f_rho: f64, esums: &ReciprocalSums, k: &[u8]) -> Result<f64> {
    if k.len() != esums.e.len() {
        return Err(Error::Domain(format!(
            "k has {} components for {} parts",
            k.len(),
            esums.e.len()
        )));
    }
    if k.contains(&0) {
        return Err(Error::Domain(
            "main term needs every k_j >= 1 (rho_j must stay positive)".into(),
        ));
    }
    if m_f_rho <= 0.0 || m_f_rho.is_nan() {
        return Err(Error::Domain(format!(
            "weighted sum must be positive, got {m_f_rho}"
        )));
    }
    let mut log = m_f_rho.ln();
    for (&e, &kj) in esums.e.iter().zip(k) {
        let kj = kj as f64;
        log += kj * e.ln() - ln_gamma(kj + 1.0)? - kj;
    }
    Ok(log.exp())
}

/// The biased main-term prediction: rho e^{-b(rho-1)} F(rho 1)/Gamma(rho+1)
/// times the Poisson product, where rho is a common exponent close to
/// every k_j/E_j(x).
///
/// The prefactor is computed through the same log-space kernel as
/// [`poisson_predict`]; at rho_common = 1 every prefactor term is exactly
/// zero in log space, so the two predictors agree bitwise there.
pub fn goaltm_predict(
    esums: &ReciprocalSums,
    k: &[u8],
    rho_common: f64,
    cfg: &EulerConfig,
) -> Result<PredictionReport> {
    check_rho_range(rho_common)?;
    if k.len() != esums.e.len() {
        return Err(Error::Domain(format!(
            "k has {} components for {} parts",
            k.len(),
            esums.e.len()
        )));
    }
    if k.contains(&0) {
        return Err(Error::Domain(
            "biased main term needs every k_j >= 1".into(),
        ));
    }
    if esums.e.iter().any(|&e| e <= 0.0 || e.is_nan()) {
        return Err(Error::Domain("every part needs E_j(x) > 0".into()));
    }
    let rho: Vec<f64> = k
        .iter()
        .zip(&esums.e)
        .map(|(&kj, &e)| kj as f64 / e)
        .collect();

    // At the common vector the multivariate product collapses to the
    // partition-free scalar sum.
    let prefactor_log = rho_common.ln() - esums.b * (rho_common - 1.0)
        + log_euler_sum_scalar(rho_common, cfg)
        - ln_gamma(rho_common + 1.0)?;
    let predicted = (log_poisson_predict(esums, k)? + prefactor_log).exp();

    let n_plus_1 = esums.e.len() as f64;
    let error_estimate = rho
        .iter()
        .zip(&esums.e)
        .map(|(&rho_j, &e)| {
            let delta_j = rho_j.min(1.0);
            (rho_common - rho_j).abs() * e.ln()
                + e.powf(-1.0 / n_plus_1)
                + (delta_j * e).powf(-1.0 / 6.0)
        })
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(PredictionReport {
        x: esums.x,
        spec_digest: esums.spec_digest.clone(),
        predictor: "goaltm".into(),
        k: k.to_vec(),
        rho,
        predicted,
        exact: None,
        ratio: None,
        error_estimate: Some(error_estimate),
    })
}

/// Ratios Gamma(M(v)+1)/Gamma(M(u)+1) and F(v)/F(u) for exponent vectors
/// in the Lipschitz box (0, 1/2)^{n+1} with ||u - v||_1 < 1.
pub fn perturb_ratio(
    spec: &PartitionSpec,
    u: &[f64],
    v: &[f64],
    cfg: &EulerConfig,
) -> Result<(f64, f64)> {
    if u.len() != spec.parts() || v.len() != spec.parts() {
        return Err(Error::Domain("u and v must have one entry per part".into()));
    }
    for &t in u.iter().chain(v) {
        if t.is_nan() || t <= 0.0 || t >= 0.5 {
            return Err(Error::Domain(format!(
                "perturbation exponents must lie in (0, 1/2), got {t}"
            )));
        }
    }
    let l1: f64 = u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum();
    if l1 >= 1.0 {
        return Err(Error::Domain(format!("||u - v||_1 = {l1} must be < 1")));
    }
    let gamma_ratio = gamma_fn(mean_rho(v) + 1.0)? / gamma_fn(mean_rho(u) + 1.0)?;
    let f_ratio =
        euler_product_vector(spec, v, cfg)?.value / euler_product_vector(spec, u, cfg)?.value;
    Ok((gamma_ratio, f_ratio))
}

/// Distance of y to the nearest integer.
fn int_dist(y: f64) -> f64 {
    (y - y.round()).abs()
}

/// Pick rho = m/E_{j0}(x) with integer m near rho0 E_{j0}(x) such that
/// every rho E_j(x) is within E_{j0}(x)^{-1/(n+1)} of an integer.
///
/// The scan walks m outward from the nearest integer (smaller m first on
/// ties) through the Dirichlet window; exhausting the window signals an
/// implementation bug, since a solution is guaranteed to exist there.
pub fn simul_rho(esums: &ReciprocalSums, rho0: f64) -> Result<f64> {
    if rho0 <= 0.0 || rho0.is_nan() {
        return Err(Error::Domain(format!("rho0 = {rho0} must be positive")));
    }
    let (j0, &e_max) = esums
        .e
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .ok_or_else(|| Error::Domain("empty reciprocal sums".into()))?;
    if e_max <= 1.0 || e_max.is_nan() {
        return Err(Error::Domain(format!(
            "maximal component E_j0 = {e_max} must exceed 1"
        )));
    }
    let n = esums.e.len() - 1;
    let delta = e_max.powf(-1.0 / (n as f64 + 1.0));
    let target = rho0 * e_max;
    let window = e_max.powf(n as f64 / (n as f64 + 1.0)).ceil() as i64 + 1;
    let center = target.round().max(1.0) as i64;

    let satisfies = |m: i64| -> bool {
        let rho = m as f64 / e_max;
        esums.e.iter().all(|&e| int_dist(rho * e) < delta)
    };
    for d in 0..=window {
        for m in [center - d, center + d] {
            if m >= 1 && satisfies(m) {
                return Ok(m as f64 / e_max);
            }
        }
    }
    Err(Error::SearchFailure(format!(
        "no admissible m within {window} of {target} (j0 = {j0}, delta = {delta})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::mod4_split;

    fn small_cfg() -> EulerConfig {
        EulerConfig {
            truncation_prime: 100_000,
        }
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma_fn(5.0).unwrap() - 24.0).abs() / 24.0 < 1e-12);
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-12);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((gamma_fn(0.5).unwrap() - sqrt_pi).abs() / sqrt_pi < 1e-12);
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_recurrence_on_grid() {
        let mut t = 0.1f64;
        while t <= 10.0 {
            let lhs = gamma_fn(t + 1.0).unwrap();
            let rhs = t * gamma_fn(t).unwrap();
            assert!(
                (lhs - rhs).abs() / lhs <= 1e-10,
                "recurrence off at t = {t}"
            );
            t += 0.1;
        }
    }

    #[test]
    fn ln_gamma_consistent_with_gamma() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert_eq!(ln_gamma(2.0).unwrap(), 0.0);
        for t in [0.3, 1.7, 5.0, 20.5, 43.0] {
            let a = ln_gamma(t).unwrap();
            let b = gamma_fn(t).unwrap().ln();
            assert!((a - b).abs() < 1e-11, "t = {t}: {a} vs {b}");
        }
        // factorial anchor well past the gamma_fn overflow-free zone
        let ln_100_fact: f64 = (2..=100u64).map(|v| (v as f64).ln()).sum();
        assert!((ln_gamma(101.0).unwrap() - ln_100_fact).abs() / ln_100_fact < 1e-13);
    }

    #[test]
    fn euler_scalar_at_one_is_exactly_one() {
        let r = euler_product_scalar(1.0, &small_cfg()).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.tail_bound > 0.0);
    }

    #[test]
    fn euler_scalar_at_two_is_six_over_pi_squared() {
        // (1 + 2/(p-1))(1 - 1/p)^2 = 1 - p^-2, so F(2) = 1/zeta(2)
        let r = euler_product_scalar(2.0, &small_cfg()).unwrap();
        let expected = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!(
            (r.value - expected).abs() < 1e-5,
            "{} vs {expected}",
            r.value
        );
    }

    #[test]
    fn euler_scalar_vanishes_as_rho_to_zero() {
        let r = euler_product_scalar(1e-3, &small_cfg()).unwrap();
        let product_only = r.value * gamma_fn(1e-3).unwrap();
        assert!((product_only - 1.0).abs() < 1e-2);
    }

    #[test]
    fn euler_vector_all_ones_and_scalar_relation() {
        let all = PartitionSpec::all_primes();
        let ones = euler_product_vector(&mod4_split(), &[1.0, 1.0], &small_cfg()).unwrap();
        assert_eq!(ones.value, 1.0);

        for rho in [0.5, 2.0, 3.5] {
            let vector = euler_product_vector(&all, &[rho], &small_cfg())
                .unwrap()
                .value;
            let scalar = euler_product_scalar(rho, &small_cfg()).unwrap().value;
            let expected = scalar * gamma_fn(rho).unwrap();
            assert!(
                (vector - expected).abs() / expected.abs() < 1e-12,
                "rho = {rho}"
            );
        }
    }

    #[test]
    fn euler_vector_part_factors_telescope() {
        // mod-4 with rho = (2, 1): part-1 factors telescope away, leaving
        // the product over part-0 primes with exponent 2.
        let spec = mod4_split();
        let cfg = small_cfg();
        let got = euler_product_vector(&spec, &[2.0, 1.0], &cfg)
            .unwrap()
            .value;
        let classifier = spec.classifier();
        let mut expected = Kahan::new();
        for_each_prime(cfg.truncation_prime, |p| {
            if classifier.classify(p) == 0 {
                let pf = p as f64;
                expected.add((2.0 / (pf - 1.0)).ln_1p() + 2.0 * (-1.0 / pf).ln_1p());
            }
        });
        let expected = expected.value().exp();
        assert!((got - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn euler_tail_bound_covers_doubling() {
        let doubled = EulerConfig {
            truncation_prime: 200_000,
        };
        for rho in [0.5, 1.7, 3.0] {
            let coarse = euler_product_scalar(rho, &small_cfg()).unwrap();
            let fine = euler_product_scalar(rho, &doubled).unwrap();
            assert!(
                (coarse.value.ln() - fine.value.ln()).abs() < coarse.tail_bound,
                "rho = {rho}"
            );
        }
        let spec = mod4_split();
        let coarse = euler_product_vector(&spec, &[2.0, 0.5], &small_cfg()).unwrap();
        let fine = euler_product_vector(&spec, &[2.0, 0.5], &doubled).unwrap();
        assert!((coarse.value.ln() - fine.value.ln()).abs() < coarse.tail_bound);
    }

    #[test]
    fn euler_domain_errors() {
        assert!(matches!(
            euler_product_scalar(0.0, &small_cfg()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            euler_product_scalar(11.0, &small_cfg()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            euler_product_vector(&mod4_split(), &[1.0], &small_cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mean_rho_examples() {
        assert_eq!(mean_rho(&[1.0, 1.0]), 1.0);
        assert!((mean_rho(&[0.2, 0.4]) - 0.3).abs() < 1e-15);
        assert_eq!(mean_rho(&[2.5]), 2.5);
    }

    fn esums_all_x10() -> ReciprocalSums {
        crate::partitions::reciprocal_sums(&PartitionSpec::all_primes(), 10.0).unwrap()
    }

    fn esums_mod4_x10() -> ReciprocalSums {
        crate::partitions::reciprocal_sums(&mod4_split(), 10.0).unwrap()
    }

    #[test]
    fn poisson_zero_vector_x10() {
        let esums = esums_all_x10();
        let got = poisson_predict(&esums, &[0]).unwrap();
        let expected = 10.0 * (-esums.e[0]).exp();
        assert!((got - expected).abs() / expected < 1e-12);
        assert!((got - 3.084).abs() < 1e-3);
    }

    #[test]
    fn poisson_mod4_k10() {
        let esums = esums_mod4_x10();
        let got = poisson_predict(&esums, &[1, 0]).unwrap();
        let expected = 10.0 * (0.7 * (-0.7f64).exp()) * (-esums.e[1]).exp();
        assert!((got - expected).abs() / expected < 1e-12);
        assert!((got - 2.158).abs() < 2e-3);
    }

    #[test]
    fn poisson_empty_part_contributes_unit_factor() {
        let esums = ReciprocalSums::synthetic(vec![1.5, 0.0]);
        let with_empty = poisson_predict(
            &ReciprocalSums {
                x: 100.0,
                ..esums.clone()
            },
            &[2, 0],
        )
        .unwrap();
        let single = poisson_predict(
            &ReciprocalSums {
                x: 100.0,
                e: vec![1.5],
                ..esums
            },
            &[2],
        )
        .unwrap();
        assert_eq!(with_empty, single);
    }

    #[test]
    fn poisson_masses_approach_x() {
        let esums = ReciprocalSums {
            x: 1000.0,
            ..esums_mod4_x10()
        };
        let mut previous = 0.0;
        for k_max in [2u8, 8, 40] {
            let mut total = 0.0;
            for k0 in 0..=k_max {
                for k1 in 0..=k_max {
                    total += poisson_predict(&esums, &[k0, k1]).unwrap();
                }
            }
            assert!(total <= 1000.0 + 1e-9);
            assert!(total >= previous);
            previous = total;
        }
        assert!((previous - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn selberg_predict_at_one_is_x() {
        let got = selberg_predict(1e6, 1.0, &small_cfg()).unwrap();
        assert_eq!(got, 1e6);
        assert!(matches!(
            selberg_predict(2.0, 1.0, &small_cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn halapp_expected_shape_x10() {
        // single set, x = 10, k = 2: M * (E^2/2!) e^{-2}
        let esums = esums_all_x10();
        let e = esums.e[0];
        let rho = 2.0 / e;
        let m: f64 = 1.0 + 7.0 * rho + 2.0 * rho * rho; // census polynomial at z = rho
        let got = halapp_main_term(m, &esums, &[2]).unwrap();
        let expected = m * (e * e / 2.0) * (-2.0f64).exp();
        assert!((got - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn halapp_rejects_zero_k() {
        let esums = esums_mod4_x10();
        assert!(matches!(
            halapp_main_term(10.0, &esums, &[1, 0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn halapp_at_unit_rho_matches_poisson_shape() {
        // k_j = E_j exactly: e^{-k_j} = e^{-E_j}, so feeding the plain
        // count x as the weighted sum reproduces x times the Poisson mass
        let esums = ReciprocalSums {
            x: 1000.0,
            ..ReciprocalSums::synthetic(vec![2.0, 3.0])
        };
        let k = [2u8, 3];
        let main = halapp_main_term(1000.0, &esums, &k).unwrap();
        let poisson = poisson_predict(&esums, &k).unwrap();
        assert!((main - poisson).abs() / poisson < 1e-12);
    }

    #[test]
    fn stirling_normalization_at_k20() {
        // E^k/k! e^{-k} vs (2 pi rho E)^{-1/2} rho^{-k} at rho = 1
        let k = 20.0f64;
        let e = 20.0f64;
        let lhs = (k * e.ln() - ln_gamma(k + 1.0).unwrap() - k).exp();
        let rhs = 1.0 / (2.0 * std::f64::consts::PI * e).sqrt();
        let ratio = lhs / rhs;
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn goaltm_reduces_to_poisson_at_rho_one() {
        let esums = esums_mod4_x10();
        for k in [vec![1u8, 1], vec![2, 1], vec![1, 3]] {
            let goal = goaltm_predict(&esums, &k, 1.0, &small_cfg()).unwrap();
            let poisson = poisson_predict(&esums, &k).unwrap();
            assert_eq!(goal.predicted.to_bits(), poisson.to_bits());
        }
    }

    #[test]
    fn goaltm_error_estimate_at_matching_rho() {
        // one part, k chosen so rho_j = rho_common exactly
        let esums = ReciprocalSums {
            x: 100.0,
            ..ReciprocalSums::synthetic(vec![2.0])
        };
        let report = goaltm_predict(&esums, &[4], 2.0, &small_cfg()).unwrap();
        let e: f64 = 2.0;
        let expected = e.powf(-1.0) + (1.0 * e).powf(-1.0 / 6.0);
        assert!((report.error_estimate.unwrap() - expected).abs() < 1e-12);
        assert!((report.rho[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn goaltm_rejects_zero_k() {
        let esums = esums_mod4_x10();
        assert!(matches!(
            goaltm_predict(&esums, &[0, 1], 1.0, &small_cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn perturb_identity_and_lipschitz() {
        let spec = mod4_split();
        let cfg = EulerConfig {
            truncation_prime: 10_000,
        };
        let (g, f) = perturb_ratio(&spec, &[0.2, 0.3], &[0.2, 0.3], &cfg).unwrap();
        assert_eq!(g, 1.0);
        assert_eq!(f, 1.0);

        // fitted constant over a coarse grid stays below 5
        let all = PartitionSpec::all_primes();
        let grid = [0.05, 0.15, 0.25, 0.35, 0.45];
        let mut c_max = 0.0f64;
        for &a in &grid {
            for &b in &grid {
                if a == b {
                    continue;
                }
                let (g, f) = perturb_ratio(&all, &[a], &[b], &cfg).unwrap();
                let l1 = (a - b).abs();
                c_max = c_max.max((g - 1.0).abs() / l1).max((f - 1.0).abs() / l1);
            }
        }
        assert!(c_max <= 5.0, "fitted C = {c_max}");
    }

    #[test]
    fn perturb_halving_scales_down() {
        let all = PartitionSpec::all_primes();
        let cfg = EulerConfig {
            truncation_prime: 10_000,
        };
        let (g_full, f_full) = perturb_ratio(&all, &[0.2], &[0.3], &cfg).unwrap();
        let (g_half, f_half) = perturb_ratio(&all, &[0.2], &[0.25], &cfg).unwrap();
        assert!((g_half - 1.0).abs() <= 0.75 * (g_full - 1.0).abs());
        assert!((f_half - 1.0).abs() <= 0.75 * (f_full - 1.0).abs());
    }

    #[test]
    fn perturb_domain_errors() {
        let all = PartitionSpec::all_primes();
        let cfg = EulerConfig {
            truncation_prime: 10_000,
        };
        assert!(matches!(
            perturb_ratio(&all, &[0.6], &[0.2], &cfg),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn simul_rho_single_set() {
        let esums = ReciprocalSums::synthetic(vec![10.0]);
        let rho = simul_rho(&esums, 0.52).unwrap();
        assert_eq!(rho, 0.5); // m = 5, fractional part exactly 0
    }

    #[test]
    fn simul_rho_two_sets_scans_away_from_center() {
        let esums = ReciprocalSums::synthetic(vec![10.0, 5.0]);
        let rho = simul_rho(&esums, 0.5).unwrap();
        // m = 5 fails (||2.5|| = 0.5), the scan settles on m = 4
        assert_eq!(rho, 0.4);
        let delta = 10.0f64.powf(-0.5);
        for &e in &[10.0, 5.0] {
            assert!(int_dist(rho * e) < delta);
        }
    }

    #[test]
    fn simul_rho_domain_errors() {
        assert!(matches!(
            simul_rho(&ReciprocalSums::synthetic(vec![0.9]), 0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            simul_rho(&ReciprocalSums::synthetic(vec![10.0]), 0.0),
            Err(Error::Domain(_))
        ));
    }
}
