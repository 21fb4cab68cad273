//! Exact joint counts of restricted prime-factor vectors by segmented
//! sieving, with a trial-division oracle for cross-validation.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{Kahan, KahanComplex};
use crate::partitions::{PartClassifier, PartitionSpec};
use crate::primes::{for_each_prime, sieve_primes};

/// Count vector: entry j is the number of distinct primes of part j
/// dividing an integer. Componentwise below ~log2(x), so u8 lanes suffice.
pub type OmegaVector = Vec<u8>;

/// Exact map from count vectors to how many m <= x realize them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointCensus {
    pub x: u64,
    pub spec_digest: String,
    pub parts: usize,
    pub table: BTreeMap<OmegaVector, u64>,
    /// Componentwise maximum observed count vector.
    pub max_k: Vec<u8>,
}

/// Resource limits and tuning for the segmented sieve.
#[derive(Debug, Clone)]
pub struct CensusConfig {
    /// Largest x the sieve will accept.
    pub budget: u64,
    /// Integers per segment; one byte per (integer, part) plus a u32 per
    /// integer for the small-prime product.
    pub segment_len: usize,
    /// Worker threads for segment processing; `None` reads
    /// OMEGA_CENSUS_THREADS, falling back to the global pool.
    pub threads: Option<usize>,
}

/// Largest part count the packed sieve counters support.
pub const MAX_PARTS: usize = 8;

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            budget: 1_000_000_000,
            segment_len: 1 << 22,
            threads: None,
        }
    }
}

impl CensusConfig {
    fn effective_threads(&self) -> Option<usize> {
        self.threads.or_else(|| {
            std::env::var("OMEGA_CENSUS_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
    }
}

fn check_limits(spec: &PartitionSpec, x: u64, cfg: &CensusConfig) -> Result<()> {
    if x < 1 {
        return Err(Error::Domain("census requires x >= 1".into()));
    }
    if x > cfg.budget {
        return Err(Error::Budget(format!(
            "x = {x} exceeds census budget {}",
            cfg.budget
        )));
    }
    if x > u32::MAX as u64 {
        return Err(Error::Budget(format!(
            "x = {x} exceeds the u32 factor-product representation"
        )));
    }
    if spec.parts() > MAX_PARTS {
        return Err(Error::Budget(format!(
            "{} parts exceed the supported maximum {MAX_PARTS}",
            spec.parts()
        )));
    }
    Ok(())
}

/// Per-segment counting. Each base prime bumps the part counter of every
/// multiple once (omega counts distinct primes); prime powers maintain the
/// product of small prime-power divisors so the one factor above sqrt(x)
/// can be recovered by a single division.
fn process_segment(
    lo: u64,
    hi: u64,
    np: usize,
    base: &[(u64, u8)],
    powers: &[(u64, u32)],
    classifier: &PartClassifier,
) -> HashMap<u64, u64> {
    let len = (hi - lo) as usize;
    let mut counts = vec![0u8; len * np];
    let mut fac = vec![1u32; len];
    for &(p, part) in base {
        let mut m = lo.div_ceil(p) * p;
        while m < hi {
            let i = (m - lo) as usize;
            counts[i * np + part as usize] += 1;
            fac[i] *= p as u32;
            m += p;
        }
    }
    for &(q, p) in powers {
        let mut m = lo.div_ceil(q) * q;
        while m < hi {
            fac[(m - lo) as usize] *= p;
            m += q;
        }
    }
    let mut local: HashMap<u64, u64> = HashMap::new();
    for i in 0..len {
        let m = lo + i as u64;
        let mut key = 0u64;
        for j in 0..np {
            key |= (counts[i * np + j] as u64) << (8 * j);
        }
        let small = fac[i] as u64;
        if small != m {
            let large_prime = m / small;
            let j = classifier.classify(large_prime);
            key += 1u64 << (8 * j);
        }
        *local.entry(key).or_insert(0) += 1;
    }
    local
}

fn unpack_key(key: u64, np: usize) -> OmegaVector {
    (0..np).map(|j| ((key >> (8 * j)) & 0xff) as u8).collect()
}

fn finish_table(x: u64, spec: &PartitionSpec, packed: HashMap<u64, u64>) -> JointCensus {
    let np = spec.parts();
    let mut table = BTreeMap::new();
    for (key, count) in packed {
        table.insert(unpack_key(key, np), count);
    }
    let mut max_k = vec![0u8; np];
    for k in table.keys() {
        for (m, &v) in max_k.iter_mut().zip(k) {
            *m = (*m).max(v);
        }
    }
    JointCensus {
        x,
        spec_digest: spec.digest(),
        parts: np,
        table,
        max_k,
    }
}

/// Exact joint census of m <= x by a segmented sieve.
pub fn sieve_census(spec: &PartitionSpec, x: u64, cfg: &CensusConfig) -> Result<JointCensus> {
    check_limits(spec, x, cfg)?;
    let classifier = spec.classifier();
    let np = spec.parts();
    let sqrt = (x as f64).sqrt() as u64 + 1;
    let base: Vec<(u64, u8)> = sieve_primes(sqrt)
        .into_iter()
        .filter(|&p| p * p <= x)
        .map(|p| (p, classifier.classify(p) as u8))
        .collect();
    let mut powers: Vec<(u64, u32)> = Vec::new();
    for &(p, _) in &base {
        let mut q = p * p;
        while q <= x {
            powers.push((q, p as u32));
            match q.checked_mul(p) {
                Some(next) => q = next,
                None => break,
            }
        }
    }

    let seg = cfg.segment_len.max(1024) as u64;
    let n_segments = x.div_ceil(seg);
    let compute = || -> HashMap<u64, u64> {
        let locals: Vec<HashMap<u64, u64>> = (0..n_segments)
            .into_par_iter()
            .map(|s| {
                let lo = 1 + s * seg;
                let hi = (lo + seg).min(x + 1);
                process_segment(lo, hi, np, &base, &powers, &classifier)
            })
            .collect();
        // integer addition commutes, so merge order cannot matter
        let mut total: HashMap<u64, u64> = HashMap::new();
        for local in locals {
            for (k, v) in local {
                *total.entry(k).or_insert(0) += v;
            }
        }
        total
    };

    let packed = match cfg.effective_threads() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Budget(format!("thread pool: {e}")))?;
            pool.install(compute)
        }
        None => compute(),
    };
    Ok(finish_table(x, spec, packed))
}

/// Same contract as [`sieve_census`], computed by per-integer trial
/// division. Cross-validation oracle; capped at x = 1e6.
pub fn naive_census(spec: &PartitionSpec, x: u64) -> Result<JointCensus> {
    if x < 1 {
        return Err(Error::Domain("census requires x >= 1".into()));
    }
    if x > 1_000_000 {
        return Err(Error::Budget(format!(
            "naive census capped at 1e6, got {x}"
        )));
    }
    if spec.parts() > MAX_PARTS {
        return Err(Error::Budget(format!(
            "{} parts exceed the supported maximum {MAX_PARTS}",
            spec.parts()
        )));
    }
    let classifier = spec.classifier();
    let np = spec.parts();
    let small = sieve_primes((x as f64).sqrt() as u64 + 1);
    let mut packed: HashMap<u64, u64> = HashMap::new();
    let mut k = vec![0u8; np];
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
        let mut key = 0u64;
        for (j, &v) in k.iter().enumerate() {
            key |= (v as u64) << (8 * j);
        }
        *packed.entry(key).or_insert(0) += 1;
    }
    Ok(finish_table(x, spec, packed))
}

/// Generating-function value sum_k count(k) prod_j z_j^{k_j}, with the
/// convention 0^0 = 1, accumulated with compensated complex summation.
pub fn weighted_sum(census: &JointCensus, z: &[Complex64]) -> Complex64 {
    assert_eq!(z.len(), census.parts, "one z per part");
    // power tables avoid re-exponentiating per table row
    let pow_tables: Vec<Vec<Complex64>> = z
        .iter()
        .enumerate()
        .map(|(j, &zj)| {
            let top = census.max_k.get(j).copied().unwrap_or(0) as usize;
            let mut tbl = Vec::with_capacity(top + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            tbl.push(acc);
            for _ in 0..top {
                acc *= zj;
                tbl.push(acc);
            }
            tbl
        })
        .collect();
    let mut sum = KahanComplex::new();
    for (k, &count) in &census.table {
        let mut term = Complex64::new(count as f64, 0.0);
        for (j, &kj) in k.iter().enumerate() {
            term *= pow_tables[j][kj as usize];
        }
        sum.add(term);
    }
    sum.value()
}

/// sum_{n<=x} rho^{omega(n)} read off an existing census (the parts cover
/// all primes, so the joint exponent collapses to omega).
pub fn selberg_sum_from_census(census: &JointCensus, rho: f64) -> f64 {
    let mut sum = Kahan::new();
    for (k, &count) in &census.table {
        let omega: u32 = k.iter().map(|&v| v as u32).sum();
        sum.add(count as f64 * rho.powi(omega as i32));
    }
    sum.value()
}

/// Exact sum_{n<=x} rho^{omega(n)} by sieving.
pub fn selberg_sum(spec: &PartitionSpec, x: u64, rho: f64, cfg: &CensusConfig) -> Result<f64> {
    if rho <= 0.0 || rho.is_nan() {
        return Err(Error::Domain(format!("rho = {rho} must be positive")));
    }
    let census = sieve_census(spec, x, cfg)?;
    Ok(selberg_sum_from_census(&census, rho))
}

/// First moment sum_k k_j count(k), exactly.
pub fn marginal_moment(census: &JointCensus, j: usize) -> u64 {
    census
        .table
        .iter()
        .map(|(k, &count)| k.get(j).copied().unwrap_or(0) as u64 * count)
        .sum()
}

/// The identity's right-hand side: sum over primes p <= x in part j of
/// floor(x/p).
pub fn divisor_first_moment(spec: &PartitionSpec, x: u64, j: usize) -> u64 {
    let classifier = spec.classifier();
    let mut total = 0u64;
    for_each_prime(x, |p| {
        if classifier.classify(p) == j {
            total += x / p;
        }
    });
    total
}

impl JointCensus {
    pub fn total_count(&self) -> u64 {
        self.table.values().sum()
    }

    /// CSV export: a comment header carrying x and the spec digest, then
    /// `k_0,...,k_n,count` rows in ascending lexicographic key order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# x={} spec={} parts={}\n",
            self.x, self.spec_digest, self.parts
        ));
        for j in 0..self.parts {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("k_{j}"));
        }
        out.push_str(",count\n");
        for (k, count) in &self.table {
            for v in k {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{count}\n"));
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty census csv".into()))?;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::Parse("census csv missing '# ' header".into()))?;
        let mut x = None;
        let mut digest = None;
        let mut parts = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("x", v)) => x = v.parse::<u64>().ok(),
                Some(("spec", v)) => digest = Some(v.to_string()),
                Some(("parts", v)) => parts = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (x, digest, parts) = match (x, digest, parts) {
            (Some(x), Some(d), Some(p)) => (x, d, p),
            _ => return Err(Error::Parse("census csv header incomplete".into())),
        };
        let _column_row = lines
            .next()
            .ok_or_else(|| Error::Parse("census csv missing column row".into()))?;
        let mut table = BTreeMap::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != parts + 1 {
                return Err(Error::Parse(format!("bad census row: {line}")));
            }
            let k: OmegaVector = fields[..parts]
                .iter()
                .map(|f| f.parse::<u8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("bad census key in '{line}': {e}")))?;
            let count: u64 = fields[parts]
                .parse()
                .map_err(|e| Error::Parse(format!("bad census count in '{line}': {e}")))?;
            table.insert(k, count);
        }
        let mut max_k = vec![0u8; parts];
        for k in table.keys() {
            for (m, &v) in max_k.iter_mut().zip(k) {
                *m = (*m).max(v);
            }
        }
        Ok(JointCensus {
            x,
            spec_digest: digest,
            parts,
            table,
            max_k,
        })
    }

    /// JSON export with the table as a sorted array of {k, count} rows.
    pub fn to_json_string(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .table
            .iter()
            .map(|(k, count)| serde_json::json!({ "k": k, "count": count }))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "x": self.x,
            "spec_digest": self.spec_digest,
            "parts": self.parts,
            "max_k": self.max_k,
            "table": rows,
        }))
        .expect("census serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let x = value["x"]
            .as_u64()
            .ok_or_else(|| Error::Parse("census json: missing x".into()))?;
        let parts = value["parts"]
            .as_u64()
            .ok_or_else(|| Error::Parse("census json: missing parts".into()))?
            as usize;
        let digest = value["spec_digest"]
            .as_str()
            .ok_or_else(|| Error::Parse("census json: missing spec_digest".into()))?
            .to_string();
        let rows = value["table"]
            .as_array()
            .ok_or_else(|| Error::Parse("census json: missing table".into()))?;
        let mut table = BTreeMap::new();
        for row in rows {
            let k: OmegaVector = row["k"]
                .as_array()
                .ok_or_else(|| Error::Parse("census json: bad key".into()))?
                .iter()
                .map(|v| v.as_u64().map(|u| u as u8))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Parse("census json: bad key".into()))?;
            let count = row["count"]
                .as_u64()
                .ok_or_else(|| Error::Parse("census json: bad count".into()))?;
            table.insert(k, count);
        }
        let mut max_k = vec![0u8; parts];
        for k in table.keys() {
            for (m, &v) in max_k.iter_mut().zip(k) {
                *m = (*m).max(v);
            }
        }
        Ok(JointCensus {
            x,
            spec_digest: digest,
            parts,
            table,
            max_k,
        })
    }
}
