//! Partitions of the primes: declarative specs, classification, prime
//! reciprocal sums E_j(x), and the Mertens-type constant b.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{Kahan, EULER_GAMMA};
use crate::primes::for_each_prime;

/// Default ceiling on sieve-backed prime enumeration.
pub const DEFAULT_X_BUDGET: u64 = 1_000_000_000;

/// Largest modulus accepted for residue-class rules. The classifier keeps
/// a residue-indexed table, so the modulus bounds its size.
pub const MAX_MODULUS: u64 = 1_000_000;

/// JSON object keys are strings; parse them back into integers when a map
/// arrives through serde's internally-tagged buffering.
mod u64_keys {
    use std::collections::BTreeMap;

    pub fn deserialize<'de, D>(deserializer: D) -> Result<BTreeMap<u64, usize>, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let raw: BTreeMap<String, usize> = serde::Deserialize::deserialize(deserializer)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<u64>()
                    .map(|k| (k, v))
                    .map_err(|e| serde::de::Error::custom(format!("bad integer key '{k}': {e}")))
            })
            .collect()
    }
}

/// How each prime is routed to a part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PartitionRule {
    /// One part holding every prime.
    AllPrimes,
    /// Primes grouped by residue class modulo `modulus`. Every invertible
    /// class must be assigned; primes dividing the modulus go to
    /// `divisor_part` (no silent default).
    ResidueClasses {
        modulus: u64,
        #[serde(deserialize_with = "u64_keys::deserialize")]
        assignment: BTreeMap<u64, usize>,
        divisor_part: usize,
    },
    /// Primes `<= cut` to part 0, the rest to part 1.
    Threshold { cut: u64 },
    /// A finite list of exceptional primes; everything else gets
    /// `default_part`.
    Explicit {
        #[serde(deserialize_with = "u64_keys::deserialize")]
        assignments: BTreeMap<u64, usize>,
        default_part: usize,
    },
}

/// A validated disjoint cover of the primes by `parts` labeled sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    parts: usize,
    rule: PartitionRule,
    labels: Vec<String>,
}

/// Exact density exponent, kept unreduced over a common denominator so
/// that sums stay exact in integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Whether the partition is known to be good (each part's zeta factor has
/// a logarithmic singularity with exponent lambda_j at s = 1), and the
/// exponents when known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodnessMetadata {
    pub is_good_known: bool,
    pub lambda: Option<Vec<Ratio>>,
}

/// Prime reciprocal sums E_j(x) for every part, plus the Mertens constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReciprocalSums {
    pub x: f64,
    pub e: Vec<f64>,
    pub b: f64,
    pub spec_digest: String,
}

impl ReciprocalSums {
    /// Synthetic sums, for diagnostics that do not come from a sieve run.
    pub fn synthetic(e: Vec<f64>) -> Self {
        ReciprocalSums {
            x: 0.0,
            e,
            b: mertens_constant(),
            spec_digest: String::new(),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PartitionSpec {
    pub fn new(parts: usize, rule: PartitionRule, labels: Vec<String>) -> Result<Self> {
        let spec = PartitionSpec {
            parts,
            rule,
            labels,
        };
        spec.validate_structure()?;
        Ok(spec)
    }

    /// The trivial one-part cover.
    pub fn all_primes() -> Self {
        PartitionSpec::new(1, PartitionRule::AllPrimes, vec!["all primes".into()]).unwrap()
    }

    /// Two-part split by a residue pattern: each invertible class mod `q`
    /// maps through `assignment`; primes dividing `q` go to `divisor_part`.
    pub fn residue_classes(
        modulus: u64,
        assignment: BTreeMap<u64, usize>,
        divisor_part: usize,
        labels: Vec<String>,
    ) -> Result<Self> {
        let parts = labels.len();
        PartitionSpec::new(
            parts,
            PartitionRule::ResidueClasses {
                modulus,
                assignment,
                divisor_part,
            },
            labels,
        )
    }

    /// Primes `<= cut` versus primes `> cut`.
    pub fn threshold(cut: u64) -> Self {
        PartitionSpec::new(
            2,
            PartitionRule::Threshold { cut },
            vec![format!("p <= {cut}"), format!("p > {cut}")],
        )
        .unwrap()
    }

    pub fn explicit(
        assignments: BTreeMap<u64, usize>,
        default_part: usize,
        labels: Vec<String>,
    ) -> Result<Self> {
        let parts = labels.len();
        PartitionSpec::new(
            parts,
            PartitionRule::Explicit {
                assignments,
                default_part,
            },
            labels,
        )
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rule(&self) -> &PartitionRule {
        &self.rule
    }

    fn validate_structure(&self) -> Result<()> {
        if self.parts == 0 {
            return Err(Error::Validation("need at least one part".into()));
        }
        if self.labels.len() != self.parts {
            return Err(Error::Validation(format!(
                "{} labels for {} parts",
                self.labels.len(),
                self.parts
            )));
        }
        match &self.rule {
            PartitionRule::AllPrimes => {
                if self.parts != 1 {
                    return Err(Error::Validation(
                        "all_primes rule requires exactly one part".into(),
                    ));
                }
            }
            PartitionRule::ResidueClasses {
                modulus,
                assignment,
                divisor_part,
            } => {
                if *modulus < 2 {
                    return Err(Error::Validation("modulus must be >= 2".into()));
                }
                if *modulus > MAX_MODULUS {
                    return Err(Error::Budget(format!(
                        "modulus {modulus} exceeds supported maximum {MAX_MODULUS}"
                    )));
                }
                if *divisor_part >= self.parts {
                    return Err(Error::Validation(format!(
                        "divisor_part {divisor_part} out of range for {} parts",
                        self.parts
                    )));
                }
                for (r, part) in assignment {
                    if *r >= *modulus {
                        return Err(Error::Validation(format!(
                            "residue {r} out of range mod {modulus}"
                        )));
                    }
                    if gcd(*r, *modulus) != 1 {
                        return Err(Error::Validation(format!(
                            "residue {r} is not invertible mod {modulus}"
                        )));
                    }
                    if *part >= self.parts {
                        return Err(Error::Validation(format!(
                            "residue {r} assigned to out-of-range part {part}"
                        )));
                    }
                }
                for r in 0..*modulus {
                    if gcd(r, *modulus) == 1 && !assignment.contains_key(&r) {
                        return Err(Error::Validation(format!(
                            "invertible residue {r} mod {modulus} is unassigned"
                        )));
                    }
                }
            }
            PartitionRule::Threshold { .. } => {
                if self.parts != 2 {
                    return Err(Error::Validation(
                        "threshold rule requires exactly two parts".into(),
                    ));
                }
            }
            PartitionRule::Explicit {
                assignments,
                default_part,
            } => {
                if *default_part >= self.parts {
                    return Err(Error::Validation(format!(
                        "default_part {default_part} out of range for {} parts",
                        self.parts
                    )));
                }
                for (p, part) in assignments {
                    if !is_prime_u64(*p) {
                        return Err(Error::Validation(format!(
                            "explicit assignment key {p} is not prime"
                        )));
                    }
                    if *part >= self.parts {
                        return Err(Error::Validation(format!(
                            "prime {p} assigned to out-of-range part {part}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Stable identifier: truncated SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("spec serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(16);
        for byte in hash.iter().take(8) {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: PartitionSpec =
            serde_json::from_str(s).map_err(|e| Error::Validation(e.to_string()))?;
        spec.validate_structure()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    /// Density exponents lambda_j where they are known.
    ///
    /// Residue-class rules have lambda_j = (#classes in part j)/phi(q) by
    /// Dirichlet; goodness requires every exponent positive. Threshold and
    /// explicit rules record nothing.
    pub fn goodness(&self) -> GoodnessMetadata {
        match &self.rule {
            PartitionRule::AllPrimes => GoodnessMetadata {
                is_good_known: true,
                lambda: Some(vec![Ratio { num: 1, den: 1 }]),
            },
            PartitionRule::ResidueClasses {
                modulus,
                assignment,
                ..
            } => {
                let phi = (0..*modulus).filter(|&r| gcd(r, *modulus) == 1).count() as u64;
                let mut counts = vec![0u64; self.parts];
                for part in assignment.values() {
                    counts[*part] += 1;
                }
                let lambda: Vec<Ratio> =
                    counts.iter().map(|&num| Ratio { num, den: phi }).collect();
                GoodnessMetadata {
                    is_good_known: lambda.iter().all(|r| r.num > 0),
                    lambda: Some(lambda),
                }
            }
            PartitionRule::Threshold { .. } | PartitionRule::Explicit { .. } => GoodnessMetadata {
                is_good_known: false,
                lambda: None,
            },
        }
    }

    /// Build the O(1) per-prime classifier.
    pub fn classifier(&self) -> PartClassifier {
        match &self.rule {
            PartitionRule::AllPrimes => PartClassifier::All,
            PartitionRule::ResidueClasses {
                modulus,
                assignment,
                divisor_part,
            } => {
                let mut table = vec![*divisor_part as u8; *modulus as usize];
                for (r, part) in assignment {
                    table[*r as usize] = *part as u8;
                }
                PartClassifier::Residue {
                    modulus: *modulus,
                    table,
                }
            }
            PartitionRule::Threshold { cut } => PartClassifier::Threshold { cut: *cut },
            PartitionRule::Explicit {
                assignments,
                default_part,
            } => PartClassifier::Explicit {
                map: assignments.iter().map(|(&p, &j)| (p, j as u8)).collect(),
                default: *default_part as u8,
            },
        }
    }
}

/// Classification function compiled from a [`PartitionSpec`]. Total over
/// the primes by construction.
#[derive(Debug, Clone)]
pub enum PartClassifier {
    All,
    Residue { modulus: u64, table: Vec<u8> },
    Threshold { cut: u64 },
    Explicit { map: HashMap<u64, u8>, default: u8 },
}

impl PartClassifier {
    /// Part index of the prime `p`.
    #[inline]
    pub fn classify(&self, p: u64) -> usize {
        match self {
            PartClassifier::All => 0,
            // Non-invertible residues of a prime mean p divides the
            // modulus; the table already routes them to the divisor part.
            PartClassifier::Residue { modulus, table } => table[(p % modulus) as usize] as usize,
            PartClassifier::Threshold { cut } => usize::from(p > *cut),
            PartClassifier::Explicit { map, default } => {
                map.get(&p).copied().unwrap_or(*default) as usize
            }
        }
    }
}

/// Part index for a single prime. See [`PartClassifier`] for bulk use.
pub fn classify_prime(spec: &PartitionSpec, p: u64) -> usize {
    spec.classifier().classify(p)
}

/// Per-part counts of primes up to `bound`, asserting that the cover is
/// total. Disjointness is structural (classification is a function).
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub bound: u64,
    pub primes_checked: u64,
    pub per_part_counts: Vec<u64>,
}

pub fn validate_partition(spec: &PartitionSpec, bound: u64) -> Result<ValidationReport> {
    if bound < 2 {
        return Err(Error::Domain(format!("bound {bound} < 2")));
    }
    let classifier = spec.classifier();
    let mut counts = vec![0u64; spec.parts()];
    let mut checked = 0u64;
    let mut offender = None;
    for_each_prime(bound, |p| {
        let j = classifier.classify(p);
        if j >= counts.len() {
            if offender.is_none() {
                offender = Some(p);
            }
            return;
        }
        counts[j] += 1;
        checked += 1;
    });
    if let Some(p) = offender {
        return Err(Error::Validation(format!(
            "prime {p} classified outside the declared parts"
        )));
    }
    Ok(ValidationReport {
        bound,
        primes_checked: checked,
        per_part_counts: counts,
    })
}

/// E_j(x) for every part: exact partial sums of 1/p over classified
/// primes p <= x, ascending with compensated summation.
pub fn reciprocal_sums(spec: &PartitionSpec, x: f64) -> Result<ReciprocalSums> {
    reciprocal_sums_budgeted(spec, x, DEFAULT_X_BUDGET)
}

pub fn reciprocal_sums_budgeted(
    spec: &PartitionSpec,
    x: f64,
    budget: u64,
) -> Result<ReciprocalSums> {
    if x < 2.0 || x.is_nan() {
        return Err(Error::Domain(format!("x = {x} must be >= 2")));
    }
    if x > budget as f64 {
        return Err(Error::Budget(format!(
            "x = {x} exceeds sieve budget {budget}"
        )));
    }
    let limit = x.floor() as u64;
    let classifier = spec.classifier();
    let mut sums = vec![Kahan::new(); spec.parts()];
    for_each_prime(limit, |p| {
        sums[classifier.classify(p)].add(1.0 / p as f64);
    });
    Ok(ReciprocalSums {
        x,
        e: sums.iter().map(Kahan::value).collect(),
        b: mertens_constant(),
        spec_digest: spec.digest(),
    })
}

/// Outcome of the two independent Mertens-constant computations.
#[derive(Debug, Clone, Serialize)]
pub struct MertensConstant {
    /// Adopted value (the gamma-anchored series).
    pub value: f64,
    /// Series route: gamma + sum over p <= truncation of log(1-1/p) + 1/p.
    pub series: f64,
    /// Limit route: Richardson extrapolation of sum 1/p - log log t.
    pub extrapolated: f64,
    /// Rigorous bound on the series truncation error.
    pub tail_bound: f64,
    pub truncation_prime: u64,
}

/// Default truncation for the Mertens series; the tail is below 5e-8 here.
pub const DEFAULT_MERTENS_TRUNCATION: u64 = 10_000_000;

/// The Mertens constant b = lim (sum_{p<=t} 1/p - log log t), computed by
/// two independent routes that must agree within 1e-4.
///
/// Below t ~ 1e6 the defining-limit route sits more than 1e-4 away from
/// the limit, so smaller truncations are rejected up front rather than
/// failing the agreement gate.
pub fn mertens_constant_detailed(truncation_prime: u64) -> Result<MertensConstant> {
    if truncation_prime < 1_000_000 {
        return Err(Error::Domain(
            "mertens truncation must be at least 10^6".into(),
        ));
    }
    // One prime pass feeds both routes: the series terms, and partial sums
    // of 1/p at decade checkpoints for the limit extrapolation.
    let t0 = truncation_prime / 100;
    let t1 = truncation_prime / 10;
    let mut series = Kahan::new();
    let mut recip = Kahan::new();
    let mut recip_at_t0 = 0.0;
    let mut recip_at_t1 = 0.0;
    for_each_prime(truncation_prime, |p| {
        let inv = 1.0 / p as f64;
        series.add((-inv).ln_1p() + inv);
        recip.add(inv);
        if p <= t0 {
            recip_at_t0 = recip.value();
        }
        if p <= t1 {
            recip_at_t1 = recip.value();
        }
    });
    let series_value = EULER_GAMMA + series.value();
    // |log(1-1/p) + 1/p| <= 1/(2p(p-1)); summed over p > P the bound
    // telescopes over all integers to 1/(2P).
    let tail_bound = 0.5 / truncation_prime as f64;

    // d(t) = sum_{p<=t} 1/p - log log t -> b. The remainder decays roughly
    // geometrically across decade checkpoints, so Aitken delta-squared
    // acceleration of (d(T/100), d(T/10), d(T)) estimates the limit.
    let d0 = recip_at_t0 - (t0 as f64).ln().ln();
    let d1 = recip_at_t1 - (t1 as f64).ln().ln();
    let d2 = recip.value() - (truncation_prime as f64).ln().ln();
    let delta1 = d1 - d0;
    let delta2 = d2 - d1;
    let denom = delta2 - delta1;
    let extrapolated = if denom.abs() > 1e3 * f64::EPSILON * d2.abs() {
        d0 - delta1 * delta1 / denom
    } else {
        d2
    };

    if (series_value - extrapolated).abs() > 1e-4 {
        return Err(Error::Consistency(format!(
            "mertens constant methods disagree: series {series_value} vs extrapolation {extrapolated}"
        )));
    }
    Ok(MertensConstant {
        value: series_value,
        series: series_value,
        extrapolated,
        tail_bound,
        truncation_prime,
    })
}

/// Cached Mertens constant at the default truncation.
pub fn mertens_constant() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| {
        mertens_constant_detailed(DEFAULT_MERTENS_TRUNCATION)
            .expect("default mertens computation is consistent")
            .value
    })
}

#[cfg(test)]
pub(crate) fn mod4_split() -> PartitionSpec {
    let mut assignment = BTreeMap::new();
    assignment.insert(1u64, 0usize);
    assignment.insert(3u64, 1usize);
    PartitionSpec::residue_classes(
        4,
        assignment,
        0,
        vec!["1 mod 4 and p|4".into(), "3 mod 4".into()],
    )
    .unwrap()
}
