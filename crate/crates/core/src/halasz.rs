//! Distance functionals for strongly multiplicative functions that are
//! constant on each part, their minima over a twist window, and the
//! associated mean-value ratio diagnostics.
//!
//! None of the upper bounds computed here is asserted against the ratios:
//! the implicit constants are non-effective, so bounds are reported
//! side by side and the tests only pin identities and qualitative decay.

use num_complex::Complex64;
use serde::Serialize;

use crate::census::{weighted_sum, JointCensus};
use crate::error::{Error, Result};
use crate::numerics::Kahan;
use crate::partitions::{PartitionSpec, ReciprocalSums};
use crate::primes::for_each_prime;

/// g with g(p) = z_j for every p in part j (strongly multiplicative, so
/// g(m) = prod_j z_j^{omega_j(m)}).
#[derive(Debug, Clone)]
pub struct FunctionOnPrimes {
    pub z: Vec<Complex64>,
    pub spec_digest: String,
}

impl FunctionOnPrimes {
    pub fn new(spec: &PartitionSpec, z: Vec<Complex64>) -> Result<Self> {
        if z.len() != spec.parts() {
            return Err(Error::Domain(format!(
                "{} values for {} parts",
                z.len(),
                spec.parts()
            )));
        }
        if z.iter().any(|v| v.norm() == 0.0) {
            return Err(Error::Domain("every z_j must be nonzero".into()));
        }
        Ok(FunctionOnPrimes {
            z,
            spec_digest: spec.digest(),
        })
    }

    /// The same value on every part.
    pub fn constant(spec: &PartitionSpec, z: Complex64) -> Result<Self> {
        Self::new(spec, vec![z; spec.parts()])
    }
}

/// Which primes a distance sum ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartSelect {
    All,
    Part(usize),
}

/// D(x; g, tau) = sum (1 - Re(g(p) p^{-i tau}))/p over the selected primes.
pub fn distance(
    spec: &PartitionSpec,
    x: u64,
    g: &FunctionOnPrimes,
    tau: f64,
    part: PartSelect,
) -> Result<f64> {
    if x < 2 {
        return Err(Error::Domain(format!("distance requires x >= 2, got {x}")));
    }
    if x > crate::partitions::DEFAULT_X_BUDGET {
        return Err(Error::Budget(format!("x = {x} exceeds the sieve budget")));
    }
    if let PartSelect::Part(j) = part {
        if j >= spec.parts() {
            return Err(Error::Domain(format!("part {j} out of range")));
        }
    }
    if g.z.len() != spec.parts() {
        return Err(Error::Domain(
            "function does not match the partition".into(),
        ));
    }
    let classifier = spec.classifier();
    let mut sum = Kahan::new();
    for_each_prime(x, |p| {
        let j = classifier.classify(p);
        if let PartSelect::Part(sel) = part {
            if j != sel {
                return;
            }
        }
        sum.add(distance_term(g.z[j], tau, p));
    });
    Ok(sum.value())
}

#[inline]
fn distance_term(z: Complex64, tau: f64, p: u64) -> f64 {
    let pf = p as f64;
    let angle = tau * pf.ln();
    // Re(z * p^{-i tau}) with p^{-i tau} = cos - i sin
    let re = z.re * angle.cos() + z.im * angle.sin();
    (1.0 - re) / pf
}

/// Twist-window search configuration.
#[derive(Debug, Clone)]
pub struct HalaszConfig {
    /// Window half-width; defaults to log^2 x.
    pub t_max: Option<f64>,
    /// Grid spacing as a multiple of 1/log x (must be <= 1).
    pub spacing_factor: f64,
    /// Points on the angle grid used for the bound exponents.
    pub angle_grid: usize,
    /// Cap on grid points x prime count, to keep profile runs at desk scale.
    pub work_budget: u64,
}

impl Default for HalaszConfig {
    fn default() -> Self {
        HalaszConfig {
            t_max: None,
            spacing_factor: 1.0,
            angle_grid: 1024,
            work_budget: 2_000_000_000,
        }
    }
}

/// D sampled over the tau grid per part, with the refined minima.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceProfile {
    pub x: u64,
    pub spec_digest: String,
    pub t_max: f64,
    pub grid_spacing: f64,
    pub tau_grid: Vec<f64>,
    /// d_values[part][tau index].
    pub d_values: Vec<Vec<f64>>,
    /// Refined minimum per part; an upper bound on the true minimum.
    pub delta: Vec<f64>,
    /// tau attaining each refined minimum.
    pub delta_tau: Vec<f64>,
    /// delta_j / E_j(x).
    pub nice_indicator: Vec<f64>,
}

impl DistanceProfile {
    /// CSV rows `tau,part,D`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("tau,part,D\n");
        for (idx, tau) in self.tau_grid.iter().enumerate() {
            for (j, row) in self.d_values.iter().enumerate() {
                out.push_str(&format!("{tau},{j},{}\n", row[idx]));
            }
        }
        out
    }

    /// JSON summary without the full grid.
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "x": self.x,
            "spec_digest": self.spec_digest,
            "t_max": self.t_max,
            "grid_spacing": self.grid_spacing,
            "grid_points": self.tau_grid.len(),
            "delta": self.delta,
            "delta_tau": self.delta_tau,
            "nice_indicator": self.nice_indicator,
        }))
        .expect("profile serializes")
    }
}

/// Golden-section refinement of a unimodal-ish dip inside [lo, hi].
fn golden_refine<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.6180339887498949;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if hi - lo < 1e-12 {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sample D over [-T, T] per part and refine around the best grid point.
///
/// Grid points are integer multiples of the spacing, so profiles with
/// nested windows sample nested grids.
pub fn min_distance(
    spec: &PartitionSpec,
    x: u64,
    g: &FunctionOnPrimes,
    cfg: &HalaszConfig,
) -> Result<DistanceProfile> {
    if x < 2 {
        return Err(Error::Domain(format!("profile requires x >= 2, got {x}")));
    }
    if cfg.spacing_factor.is_nan() || cfg.spacing_factor <= 0.0 || cfg.spacing_factor > 1.0 {
        return Err(Error::Domain(
            "spacing_factor must lie in (0, 1] so spacing stays <= 1/log x".into(),
        ));
    }
    if g.z.len() != spec.parts() {
        return Err(Error::Domain(
            "function does not match the partition".into(),
        ));
    }
    let log_x = (x as f64).ln();
    let t_max = cfg.t_max.unwrap_or(log_x * log_x);
    if t_max <= 0.0 || t_max.is_nan() {
        return Err(Error::Domain(format!("T = {t_max} must be positive")));
    }
    let spacing = cfg.spacing_factor / log_x;
    let half_steps = (t_max / spacing).floor() as i64;
    let n_points = (2 * half_steps + 1) as u64;

    // cache the per-prime data once; the tau sweep re-reads it
    let classifier = spec.classifier();
    let mut parts_of: Vec<u8> = Vec::new();
    let mut log_p: Vec<f64> = Vec::new();
    let mut inv_p: Vec<f64> = Vec::new();
    let mut e_sums = vec![Kahan::new(); spec.parts()];
    for_each_prime(x, |p| {
        let j = classifier.classify(p);
        parts_of.push(j as u8);
        log_p.push((p as f64).ln());
        inv_p.push(1.0 / p as f64);
        e_sums[j].add(1.0 / p as f64);
    });
    let n_primes = log_p.len() as u64;
    if n_points.saturating_mul(n_primes) > cfg.work_budget {
        return Err(Error::Budget(format!(
            "{n_points} grid points x {n_primes} primes exceeds the work budget {}",
            cfg.work_budget
        )));
    }

    let np = spec.parts();
    let d_at = |tau: f64, part: usize| -> f64 {
        let z = g.z[part];
        let mut sum = Kahan::new();
        for i in 0..log_p.len() {
            if parts_of[i] as usize != part {
                continue;
            }
            let angle = tau * log_p[i];
            let re = z.re * angle.cos() + z.im * angle.sin();
            sum.add((1.0 - re) * inv_p[i]);
        }
        sum.value()
    };

    let tau_grid: Vec<f64> = (-half_steps..=half_steps)
        .map(|i| i as f64 * spacing)
        .collect();
    use rayon::prelude::*;
    let columns: Vec<Vec<f64>> = tau_grid
        .par_iter()
        .map(|&tau| {
            let z_at: Vec<Complex64> = g.z.clone();
            let mut sums = vec![Kahan::new(); np];
            for i in 0..log_p.len() {
                let j = parts_of[i] as usize;
                let angle = tau * log_p[i];
                let z = z_at[j];
                let re = z.re * angle.cos() + z.im * angle.sin();
                sums[j].add((1.0 - re) * inv_p[i]);
            }
            sums.iter().map(Kahan::value).collect()
        })
        .collect();
    let mut d_values = vec![vec![0.0; tau_grid.len()]; np];
    for (idx, column) in columns.iter().enumerate() {
        for j in 0..np {
            d_values[j][idx] = column[j];
        }
    }

    let mut delta = Vec::with_capacity(np);
    let mut delta_tau = Vec::with_capacity(np);
    for (j, row) in d_values.iter().enumerate() {
        let (best_idx, &best_val) = row
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("grid nonempty");
        let center = tau_grid[best_idx];
        let lo = (center - spacing).max(-t_max);
        let hi = (center + spacing).min(t_max);
        let (tau_star, refined) = golden_refine(&|t| d_at(t, j), lo, hi);
        if refined < best_val {
            delta.push(refined);
            delta_tau.push(tau_star);
        } else {
            delta.push(best_val);
            delta_tau.push(center);
        }
    }
    let nice_indicator = delta
        .iter()
        .zip(&e_sums)
        .map(|(&d, e)| {
            let e = e.value();
            if e > 0.0 {
                d / e
            } else {
                f64::INFINITY
            }
        })
        .collect();

    Ok(DistanceProfile {
        x,
        spec_digest: spec.digest(),
        t_max,
        grid_spacing: spacing,
        tau_grid,
        d_values,
        delta,
        delta_tau,
        nice_indicator,
    })
}

/// M_g(x)/M_{|g|}(x) from an exact census.
pub fn mean_value_ratio(census: &JointCensus, g: &FunctionOnPrimes) -> Result<Complex64> {
    if g.spec_digest != census.spec_digest {
        return Err(Error::Domain(
            "function and census come from different partitions".into(),
        ));
    }
    if g.z.len() != census.parts {
        return Err(Error::Domain("function does not match the census".into()));
    }
    let m_g = weighted_sum(census, &g.z);
    let abs_z: Vec<Complex64> = g.z.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect();
    let m_abs = weighted_sum(census, &abs_z).re;
    if m_abs == 0.0 {
        return Err(Error::Consistency(
            "M_{|g|}(x) = 0 with positive weights signals census corruption".into(),
        ));
    }
    Ok(m_g / m_abs)
}

/// Which branch of the upper-bound exponent to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// Per-part weights gamma_{0,j}/(2(1+gamma_{0,j})).
    Good,
    /// Global weight (delta/B) gamma_0/(1+gamma_0).
    Generic,
}

/// Angular distance on the circle, in [0, pi].
fn angle_dist(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    if d > std::f64::consts::PI {
        d = 2.0 * std::f64::consts::PI - d;
    }
    d
}

/// gamma0 weight from an angular separation beta.
fn gamma0_of(beta: f64) -> f64 {
    27.0 * std::f64::consts::PI / 1024.0 * beta.powi(3)
}

/// The reported upper bound (B^2/delta) exp(-F) where F weights the
/// per-part gaps (|z_j| - Re z_j) E_j(x) by the gamma0 coefficients.
///
/// beta_j is the widest angular separation between arg(z_j) and the
/// configured angle grid; never asserted against the measured ratio.
pub fn halasz_bound_rhs(
    esums: &ReciprocalSums,
    g: &FunctionOnPrimes,
    variant: BoundVariant,
    angle_grid: usize,
) -> Result<f64> {
    if g.z.len() != esums.e.len() {
        return Err(Error::Domain("function does not match the sums".into()));
    }
    if angle_grid < 2 {
        return Err(Error::Domain("angle grid needs at least 2 points".into()));
    }
    let b_cap = g.z.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let delta = g.z.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if delta == 0.0 {
        return Err(Error::Domain("every z_j must be nonzero".into()));
    }
    let args: Vec<f64> = g.z.iter().map(|z| z.im.atan2(z.re)).collect();
    let grid_angle = |i: usize| -> f64 {
        -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / angle_grid as f64
    };

    let exponent = match variant {
        BoundVariant::Good => {
            let mut f = 0.0;
            for (j, (&arg, z)) in args.iter().zip(&g.z).enumerate() {
                let beta_j = (0..angle_grid)
                    .map(|i| angle_dist(arg, grid_angle(i)))
                    .fold(0.0f64, f64::max);
                let gamma = gamma0_of(beta_j);
                let weight = gamma / (2.0 * (1.0 + gamma));
                f += weight * (z.norm() - z.re) * esums.e[j];
            }
            f
        }
        BoundVariant::Generic => {
            let beta = (0..angle_grid)
                .map(|i| {
                    args.iter()
                        .map(|&a| angle_dist(a, grid_angle(i)))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0f64, f64::max);
            let gamma = gamma0_of(beta);
            let weight = (delta / b_cap) * gamma / (1.0 + gamma);
            g.z.iter()
                .zip(&esums.e)
                .map(|(z, &e)| weight * (z.norm() - z.re) * e)
                .sum()
        }
    };
    Ok(b_cap * b_cap / delta * (-exponent).exp())
}
