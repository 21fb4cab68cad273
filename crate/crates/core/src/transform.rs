//! Coefficient recovery on the torus: the joint generating function
//! sum_{m<=x} f_z(m) is a polynomial in the z_j of degree max_k_j per
//! axis, so sampling it on grids with N_j > max_k_j and applying the
//! inverse discrete transform recovers the exact counts (up to roundoff),
//! independent of the circle radii.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::census::{sieve_census, CensusConfig, JointCensus, OmegaVector};
use crate::error::{Error, Result};
use crate::numerics::KahanComplex;
use crate::partitions::PartitionSpec;
use crate::primes::sieve_primes;

/// Sampled generating-function values over a product of circles.
///
/// `values` is row-major over the multi-index a (last axis fastest):
/// value at a holds sum_m f_z(m) with z_j = radii_j e^{2 pi i a_j / N_j}.
#[derive(Debug, Clone)]
pub struct TorusGrid {
    pub x: u64,
    pub spec_digest: String,
    pub parts: usize,
    pub radii: Vec<f64>,
    pub sizes: Vec<usize>,
    pub values: Vec<Complex64>,
    /// Degree bound the grid was validated against.
    pub max_k: Vec<u8>,
}

/// Budgets for the census-independent evaluation mode.
pub const DIRECT_SIEVE_MAX_X: u64 = 100_000;
pub const DIRECT_SIEVE_MAX_POINTS: usize = 4096;

fn check_shapes(parts: usize, radii: &[f64], sizes: &[usize]) -> Result<usize> {
    if radii.len() != parts || sizes.len() != parts {
        return Err(Error::Domain(format!(
            "need one radius and one size per part ({parts})"
        )));
    }
    if radii.iter().any(|&r| r <= 0.0 || r.is_nan()) {
        return Err(Error::Domain("radii must be positive".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Domain("grid sizes must be positive".into()));
    }
    Ok(sizes.iter().product())
}

fn check_degree_bound(sizes: &[usize], max_k: &[u8]) -> Result<()> {
    for (j, (&n, &mk)) in sizes.iter().zip(max_k).enumerate() {
        if n <= mk as usize {
            return Err(Error::Domain(format!(
                "grid size N_{j} = {n} must exceed the observed degree {mk}"
            )));
        }
    }
    Ok(())
}

fn multi_index(mut flat: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; sizes.len()];
    for j in (0..sizes.len()).rev() {
        idx[j] = flat % sizes[j];
        flat /= sizes[j];
    }
    idx
}

/// z_j^k for k = 0..=top on the a_j-th grid point of axis j.
fn axis_powers(radius: f64, size: usize, top: usize) -> Vec<Vec<Complex64>> {
    (0..size)
        .map(|a| {
            let angle = 2.0 * std::f64::consts::PI * a as f64 / size as f64;
            let z = Complex64::from_polar(radius, angle);
            let mut powers = Vec::with_capacity(top + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            powers.push(acc);
            for _ in 0..top {
                acc *= z;
                powers.push(acc);
            }
            powers
        })
        .collect()
}

/// Evaluate the grid from an exact census table.
pub fn evaluate_grid_from_census(
    census: &JointCensus,
    radii: &[f64],
    sizes: &[usize],
) -> Result<TorusGrid> {
    let n_points = check_shapes(census.parts, radii, sizes)?;
    check_degree_bound(sizes, &census.max_k)?;
    let tables: Vec<Vec<Vec<Complex64>>> = radii
        .iter()
        .zip(sizes)
        .enumerate()
        .map(|(j, (&r, &n))| axis_powers(r, n, census.max_k[j] as usize))
        .collect();
    let mut values = Vec::with_capacity(n_points);
    for flat in 0..n_points {
        let idx = multi_index(flat, sizes);
        let mut sum = KahanComplex::new();
        for (k, &count) in &census.table {
            let mut term = Complex64::new(count as f64, 0.0);
            for (j, &kj) in k.iter().enumerate() {
                term *= tables[j][idx[j]][kj as usize];
            }
            sum.add(term);
        }
        values.push(sum.value());
    }
    Ok(TorusGrid {
        x: census.x,
        spec_digest: census.spec_digest.clone(),
        parts: census.parts,
        radii: radii.to_vec(),
        sizes: sizes.to_vec(),
        values,
        max_k: census.max_k.clone(),
    })
}

/// Evaluate the grid by accumulating f_z(m) per integer with independent
/// trial-division factorization; exists so grid checks do not ride on the
/// census code path.
pub fn evaluate_grid_direct(
    spec: &PartitionSpec,
    x: u64,
    radii: &[f64],
    sizes: &[usize],
) -> Result<TorusGrid> {
    let n_points = check_shapes(spec.parts(), radii, sizes)?;
    if x > DIRECT_SIEVE_MAX_X {
        return Err(Error::Budget(format!(
            "direct evaluation capped at x = {DIRECT_SIEVE_MAX_X}, got {x}"
        )));
    }
    if n_points > DIRECT_SIEVE_MAX_POINTS {
        return Err(Error::Budget(format!(
            "direct evaluation capped at {DIRECT_SIEVE_MAX_POINTS} grid points, got {n_points}"
        )));
    }
    let classifier = spec.classifier();
    let np = spec.parts();
    let small = sieve_primes((x as f64).sqrt() as u64 + 1);
    // powers up to N_j - 1; a larger exponent is a degree violation
    let tables: Vec<Vec<Vec<Complex64>>> = radii
        .iter()
        .zip(sizes)
        .map(|(&r, &n)| axis_powers(r, n, n - 1))
        .collect();
    let index_of: Vec<Vec<usize>> = (0..n_points).map(|f| multi_index(f, sizes)).collect();
    let mut sums = vec![KahanComplex::new(); n_points];
    let mut k = vec![0u8; np];
    let mut max_k = vec![0u8; np];
    for m in 1..=x {
        k.iter_mut().for_each(|v| *v = 0);
        let mut rem = m;
        for &p in &small {
            if p * p > rem {
                break;
            }
            if rem % p == 0 {
                k[classifier.classify(p)] += 1;
                while rem % p == 0 {
                    rem /= p;
                }
            }
        }
        if rem > 1 {
            k[classifier.classify(rem)] += 1;
        }
        for (j, &kj) in k.iter().enumerate() {
            if kj as usize >= sizes[j] {
                return Err(Error::Domain(format!(
                    "grid size N_{j} = {} must exceed the observed degree {kj}",
                    sizes[j]
                )));
            }
            max_k[j] = max_k[j].max(kj);
        }
        for (flat, sum) in sums.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            for (j, &kj) in k.iter().enumerate() {
                term *= tables[j][index_of[flat][j]][kj as usize];
            }
            sum.add(term);
        }
    }
    Ok(TorusGrid {
        x,
        spec_digest: spec.digest(),
        parts: np,
        radii: radii.to_vec(),
        sizes: sizes.to_vec(),
        values: sums.iter().map(KahanComplex::value).collect(),
        max_k,
    })
}

/// Exact discrete inversion: recovered(k) = radii^{-k} (prod N)^{-1}
/// sum_a e^{-2 pi i k.a/N} values(a), for every k in the grid box.
pub fn invert(grid: &TorusGrid) -> BTreeMap<OmegaVector, f64> {
    let n_points: usize = grid.sizes.iter().product();
    // twiddle[j][k_j][a_j] = e^{-2 pi i k_j a_j / N_j}
    let twiddle: Vec<Vec<Vec<Complex64>>> = grid
        .sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|k| {
                    (0..n)
                        .map(|a| {
                            let angle = -2.0 * std::f64::consts::PI * (k * a % n) as f64 / n as f64;
                            Complex64::from_polar(1.0, angle)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let indices: Vec<Vec<usize>> = (0..n_points).map(|f| multi_index(f, &grid.sizes)).collect();
    let mut recovered = BTreeMap::new();
    for k_flat in 0..n_points {
        let k_idx = multi_index(k_flat, &grid.sizes);
        let mut sum = KahanComplex::new();
        for (a_flat, value) in grid.values.iter().enumerate() {
            let mut w = Complex64::new(1.0, 0.0);
            for (j, &kj) in k_idx.iter().enumerate() {
                w *= twiddle[j][kj][indices[a_flat][j]];
            }
            sum.add(w * value);
        }
        let mut scale = 1.0 / n_points as f64;
        for (j, &kj) in k_idx.iter().enumerate() {
            scale *= grid.radii[j].powi(-(kj as i32));
        }
        let key: OmegaVector = k_idx.iter().map(|&v| v as u8).collect();
        recovered.insert(key, sum.value().re * scale);
    }
    recovered
}

impl TorusGrid {
    /// JSON export as (flat index, re, im) triples plus the shape header.
    pub fn to_json_string(&self) -> String {
        let triples: Vec<serde_json::Value> = self
            .values
            .iter()
            .enumerate()
            .map(|(a, v)| serde_json::json!([a, v.re, v.im]))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "x": self.x,
            "spec_digest": self.spec_digest,
            "parts": self.parts,
            "radii": self.radii,
            "sizes": self.sizes,
            "max_k": self.max_k,
            "values": triples,
        }))
        .expect("grid serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let sizes: Vec<usize> = v["sizes"]
            .as_array()
            .ok_or_else(|| Error::Parse("grid json: missing sizes".into()))?
            .iter()
            .map(|s| s.as_u64().map(|u| u as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse("grid json: bad sizes".into()))?;
        let radii: Vec<f64> = v["radii"]
            .as_array()
            .ok_or_else(|| Error::Parse("grid json: missing radii".into()))?
            .iter()
            .map(|s| s.as_f64())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse("grid json: bad radii".into()))?;
        let max_k: Vec<u8> = v["max_k"]
            .as_array()
            .ok_or_else(|| Error::Parse("grid json: missing max_k".into()))?
            .iter()
            .map(|s| s.as_u64().map(|u| u as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse("grid json: bad max_k".into()))?;
        let n_points: usize = sizes.iter().product();
        let mut values = vec![Complex64::new(0.0, 0.0); n_points];
        for triple in v["values"]
            .as_array()
            .ok_or_else(|| Error::Parse("grid json: missing values".into()))?
        {
            let t = triple
                .as_array()
                .filter(|t| t.len() == 3)
                .ok_or_else(|| Error::Parse("grid json: bad value triple".into()))?;
            let a = t[0]
                .as_u64()
                .ok_or_else(|| Error::Parse("grid json: bad index".into()))?
                as usize;
            if a >= n_points {
                return Err(Error::Parse(format!("grid json: index {a} out of range")));
            }
            values[a] = Complex64::new(
                t[1].as_f64()
                    .ok_or_else(|| Error::Parse("grid json: bad re".into()))?,
                t[2].as_f64()
                    .ok_or_else(|| Error::Parse("grid json: bad im".into()))?,
            );
        }
        Ok(TorusGrid {
            x: v["x"]
                .as_u64()
                .ok_or_else(|| Error::Parse("grid json: missing x".into()))?,
            spec_digest: v["spec_digest"].as_str().unwrap_or_default().to_string(),
            parts: v["parts"]
                .as_u64()
                .ok_or_else(|| Error::Parse("grid json: missing parts".into()))?
                as usize,
            radii,
            sizes,
            values,
            max_k,
        })
    }
}

/// End-to-end check of coefficient extraction at one or more radii.
#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    pub x: u64,
    pub spec_digest: String,
    pub sizes: Vec<usize>,
    pub radii: Vec<f64>,
    /// Worst |recovered - exact| over the census support box, per radius.
    pub per_radius_error: Vec<f64>,
    /// Maximum of `per_radius_error`.
    pub max_abs_error: f64,
    /// Worst spread of recovered(k) across radii, over the support box.
    pub radius_spread: f64,
}

/// Run the census, extract its coefficients back at each radius, and
/// report the worst error and the cross-radius spread.
pub fn cauchy_compare(
    spec: &PartitionSpec,
    x: u64,
    sizes: &[usize],
    radii: &[f64],
    cfg: &CensusConfig,
) -> Result<CauchyReport> {
    if radii.is_empty() {
        return Err(Error::Domain("need at least one radius".into()));
    }
    let census = sieve_census(spec, x, cfg)?;
    check_degree_bound(sizes, &census.max_k)?;

    // every k in the support box, including absent (zero-count) keys
    let mut box_keys: Vec<OmegaVector> = Vec::new();
    let mut stack = vec![Vec::with_capacity(census.parts)];
    for &mk in &census.max_k {
        let mut next = Vec::new();
        for prefix in &stack {
            for v in 0..=mk {
                let mut key = prefix.clone();
                key.push(v);
                next.push(key);
            }
        }
        stack = next;
    }
    box_keys.extend(stack);

    let mut per_radius_error = Vec::with_capacity(radii.len());
    let mut recovered_all: Vec<BTreeMap<OmegaVector, f64>> = Vec::with_capacity(radii.len());
    for &rho in radii {
        let grid = evaluate_grid_from_census(&census, &vec![rho; census.parts], sizes)?;
        let recovered = invert(&grid);
        let mut worst = 0.0f64;
        for key in &box_keys {
            let exact = census.table.get(key).copied().unwrap_or(0) as f64;
            let got = recovered.get(key).copied().unwrap_or(0.0);
            worst = worst.max((got - exact).abs());
        }
        per_radius_error.push(worst);
        recovered_all.push(recovered);
    }
    let mut radius_spread = 0.0f64;
    for key in &box_keys {
        let vals: Vec<f64> = recovered_all
            .iter()
            .map(|r| r.get(key).copied().unwrap_or(0.0))
            .collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        radius_spread = radius_spread.max(hi - lo);
    }
    Ok(CauchyReport {
        x,
        spec_digest: census.spec_digest.clone(),
        sizes: sizes.to_vec(),
        radii: radii.to_vec(),
        max_abs_error: per_radius_error.iter().cloned().fold(0.0, f64::max),
        per_radius_error,
        radius_spread,
    })
}
