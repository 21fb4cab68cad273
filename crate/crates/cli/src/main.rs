//! Batch front door: parse partition specs, run censuses and predictors,
//! and emit comparison tables as CSV or JSON.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use omega_core::analytic::{
    euler_product_scalar, euler_product_vector, goaltm_predict, halapp_main_term, mean_rho,
    poisson_predict, simul_rho, EulerConfig,
};
use omega_core::census::{sieve_census, weighted_sum, CensusConfig, JointCensus, OmegaVector};
use omega_core::error::{Error, Result};
use omega_core::halasz::{
    halasz_bound_rhs, mean_value_ratio, min_distance, BoundVariant, FunctionOnPrimes, HalaszConfig,
};
use omega_core::partitions::{
    mertens_constant_detailed, reciprocal_sums_budgeted, validate_partition, PartitionSpec,
    ReciprocalSums,
};
use omega_core::report::{reports_to_csv, reports_to_json, sort_reports, PredictionReport};
use omega_core::transform::cauchy_compare;

#[derive(Parser)]
#[command(
    name = "omega-census",
    version,
    about = "Joint censuses of restricted prime-factor counts and their analytic predictors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum KMode {
    All,
    TopProbability,
    Explicit,
}

#[derive(Args)]
struct BudgetArgs {
    /// Largest x the census sieve accepts.
    #[arg(long, default_value_t = 1_000_000_000, value_parser = parse_u64)]
    budget: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact joint census of m <= x; exports k_0,...,k_n,count rows.
    Census {
        #[arg(long, value_parser = parse_u64)]
        x: u64,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Predictor values without exact counts.
    Predict {
        #[arg(long, value_parser = parse_u64)]
        x: u64,
        #[arg(long)]
        spec: PathBuf,
        /// Count vectors, e.g. "2,1;3,1".
        #[arg(long)]
        k: String,
        /// Comma-separated subset of {poisson, goaltm}.
        #[arg(long, default_value = "poisson")]
        predictors: String,
        /// Common exponent for the biased predictor ("auto" or a number).
        #[arg(long, default_value = "auto")]
        rho_common: String,
        #[arg(long, value_parser = parse_u64, default_value_t = 10_000_000)]
        p0: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Census + predictors side by side, with exact counts and ratios.
    Compare {
        /// Ascending x list, e.g. "1e4,1e5,1e6".
        #[arg(long)]
        x: String,
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated subset of {poisson, goaltm, halapp}.
        #[arg(long, default_value = "poisson")]
        predictors: String,
        #[arg(long, value_enum, default_value_t = KMode::TopProbability)]
        k_mode: KMode,
        /// Count vectors for --k-mode explicit, e.g. "2,1;3,1".
        #[arg(long)]
        k: Option<String>,
        /// Rows kept per x under --k-mode top-probability.
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long, default_value = "auto")]
        rho_common: String,
        #[arg(long, value_parser = parse_u64, default_value_t = 10_000_000)]
        p0: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Truncated Euler products with tail bounds.
    Euler {
        /// Scalar exponent (gamma-normalized product).
        #[arg(long)]
        rho: Option<f64>,
        /// Per-part exponents, e.g. "2,1" (needs --spec).
        #[arg(long)]
        rho_vec: Option<String>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_parser = parse_u64, default_value_t = 10_000_000)]
        p0: u64,
    },
    /// Distance profile, mean-value ratio, and reported upper bounds.
    Halasz {
        #[arg(long, value_parser = parse_u64)]
        x: u64,
        #[arg(long)]
        spec: PathBuf,
        /// Per-part values "re,im;re,im".
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Window half-width; defaults to log^2 x.
        #[arg(long)]
        tau_max: Option<f64>,
        /// Write the tau,part,D grid as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Round-trip coefficients through the torus grid and report errors.
    Invert {
        #[arg(long, value_parser = parse_u64)]
        x: u64,
        #[arg(long)]
        spec: PathBuf,
        /// Grid sizes per part, e.g. "32,32".
        #[arg(long)]
        grid: String,
        /// Radii to compare, e.g. "0.5,1,2".
        #[arg(long, default_value = "1")]
        radii: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Simultaneous-approximation search for a common exponent.
    SimulRho {
        /// Synthetic sums "10,5", or omit and pass --spec with --x.
        #[arg(long)]
        esums: Option<String>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_parser = parse_u64)]
        x: Option<u64>,
        #[arg(long)]
        rho0: f64,
    },
    /// The reciprocal-sum constant b by two independent methods.
    Mertens {
        #[arg(long, value_parser = parse_u64, default_value_t = 10_000_000)]
        truncation: u64,
    },
    /// Classify all primes up to a bound and report per-part counts.
    Validate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_parser = parse_u64)]
        bound: u64,
    },
}

/// Accepts plain integers and scientific notation, flooring to integer.
fn parse_u64(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if f.is_nan() || f < 0.0 || f > u64::MAX as f64 {
        return Err(format!("{s} is out of range"));
    }
    Ok(f.floor() as u64)
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad {what} '{t}': {e}")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad {what} '{t}': {e}")))
        })
        .collect()
}

fn parse_k_list(s: &str) -> Result<Vec<OmegaVector>> {
    s.split(';')
        .map(|grp| {
            grp.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u8>()
                        .map_err(|e| Error::Parse(format!("bad k component '{t}': {e}")))
                })
                .collect()
        })
        .collect()
}

fn parse_x_list(s: &str) -> Result<Vec<u64>> {
    let xs: Vec<u64> = s
        .split(',')
        .map(|t| parse_u64(t.trim()).map_err(Error::Parse))
        .collect::<Result<_>>()?;
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("x list must be strictly ascending".into()));
    }
    Ok(xs)
}

fn parse_complex_list(s: &str) -> Result<Vec<Complex64>> {
    s.split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Parse(format!("expected re,im in '{pair}'")));
            }
            let re = parts[0]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad re '{}': {e}", parts[0])))?;
            let im = parts[1]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad im '{}': {e}", parts[1])))?;
            Ok(Complex64::new(re, im))
        })
        .collect()
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn census_config(budget: &BudgetArgs) -> CensusConfig {
    CensusConfig {
        budget: budget.budget,
        ..CensusConfig::default()
    }
}

fn pick_rho_common(arg: &str, esums: &ReciprocalSums, k: &[u8]) -> Result<f64> {
    if arg != "auto" {
        return arg
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad rho-common '{arg}': {e}")));
    }
    let rho: Vec<f64> = k
        .iter()
        .zip(&esums.e)
        .map(|(&kj, &e)| kj as f64 / e)
        .collect();
    let rho0 = mean_rho(&rho);
    // the search needs a component above 1; plain mean otherwise
    if esums.e.iter().cloned().fold(f64::MIN, f64::max) > 1.0 && rho0 > 0.0 {
        simul_rho(esums, rho0)
    } else {
        Ok(rho0)
    }
}

fn select_keys(
    census: &JointCensus,
    mode: KMode,
    explicit: Option<&str>,
    top: usize,
) -> Result<Vec<OmegaVector>> {
    match mode {
        KMode::All => Ok(census.table.keys().cloned().collect()),
        KMode::TopProbability => {
            let mut rows: Vec<(&OmegaVector, &u64)> = census.table.iter().collect();
            rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
            let mut keys: Vec<OmegaVector> =
                rows.into_iter().take(top).map(|(k, _)| k.clone()).collect();
            keys.sort();
            Ok(keys)
        }
        KMode::Explicit => {
            let text =
                explicit.ok_or_else(|| Error::Domain("--k-mode explicit requires --k".into()))?;
            let keys = parse_k_list(text)?;
            for k in &keys {
                if k.len() != census.parts {
                    return Err(Error::Domain(format!(
                        "k vector {k:?} has {} parts, census has {}",
                        k.len(),
                        census.parts
                    )));
                }
                if k.iter().zip(&census.max_k).any(|(kj, mk)| kj > mk) {
                    return Err(Error::Domain(format!(
                        "k vector {k:?} outside the census support (max {:?})",
                        census.max_k
                    )));
                }
            }
            Ok(keys)
        }
    }
}

fn predictor_rows(
    predictors: &[&str],
    esums: &ReciprocalSums,
    census: Option<&JointCensus>,
    keys: &[OmegaVector],
    rho_common_arg: &str,
    euler: &EulerConfig,
) -> Result<Vec<PredictionReport>> {
    let mut reports = Vec::new();
    for key in keys {
        let exact = census.map(|c| c.table.get(key).copied().unwrap_or(0));
        let rho: Vec<f64> = key
            .iter()
            .zip(&esums.e)
            .map(|(&kj, &e)| kj as f64 / e)
            .collect();
        for &name in predictors {
            let report = match name {
                "poisson" => Some(PredictionReport {
                    x: esums.x,
                    spec_digest: esums.spec_digest.clone(),
                    predictor: "poisson".into(),
                    k: key.clone(),
                    rho: rho.clone(),
                    predicted: poisson_predict(esums, key)?,
                    exact: None,
                    ratio: None,
                    error_estimate: None,
                }),
                "goaltm" => {
                    if key.contains(&0) {
                        eprintln!("note: skipping goaltm for k = {key:?} (needs every k_j >= 1)");
                        None
                    } else {
                        let rho_c = pick_rho_common(rho_common_arg, esums, key)?;
                        Some(goaltm_predict(esums, key, rho_c, euler)?)
                    }
                }
                "halapp" => {
                    let census = census.ok_or_else(|| {
                        Error::Domain(
                            "halapp needs exact weighted sums; use the compare command".into(),
                        )
                    })?;
                    if key.contains(&0) {
                        eprintln!("note: skipping halapp for k = {key:?} (needs every k_j >= 1)");
                        None
                    } else {
                        let z: Vec<Complex64> =
                            rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
                        let m = weighted_sum(census, &z).re;
                        Some(PredictionReport {
                            x: esums.x,
                            spec_digest: esums.spec_digest.clone(),
                            predictor: "halapp".into(),
                            k: key.clone(),
                            rho: rho.clone(),
                            predicted: halapp_main_term(m, esums, key)?,
                            exact: None,
                            ratio: None,
                            error_estimate: None,
                        })
                    }
                }
                other => {
                    return Err(Error::Domain(format!("unknown predictor '{other}'")));
                }
            };
            if let Some(report) = report {
                reports.push(match exact {
                    Some(count) => report.with_exact(count),
                    None => report,
                });
            }
        }
    }
    Ok(reports)
}

fn emit_reports(
    mut reports: Vec<PredictionReport>,
    format: Format,
    out: Option<&Path>,
) -> Result<()> {
    sort_reports(&mut reports);
    let text = match format {
        Format::Csv => reports_to_csv(&reports)?,
        Format::Json => reports_to_json(&reports) + "\n",
    };
    write_output(out, &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Census {
            x,
            spec,
            out,
            format,
            budget,
        } => {
            let spec = PartitionSpec::from_path(&spec)?;
            let census = sieve_census(&spec, x, &census_config(&budget))?;
            let text = match format {
                Format::Csv => census.to_csv_string(),
                Format::Json => census.to_json_string() + "\n",
            };
            write_output(out.as_deref(), &text)
        }
        Command::Predict {
            x,
            spec,
            k,
            predictors,
            rho_common,
            p0,
            out,
            format,
            budget,
        } => {
            let spec = PartitionSpec::from_path(&spec)?;
            let esums = reciprocal_sums_budgeted(&spec, x as f64, budget.budget)?;
            let keys = parse_k_list(&k)?;
            for key in &keys {
                if key.len() != spec.parts() {
                    return Err(Error::Domain(format!(
                        "k vector {key:?} has {} parts, spec has {}",
                        key.len(),
                        spec.parts()
                    )));
                }
            }
            let names: Vec<&str> = predictors.split(',').map(str::trim).collect();
            if names.contains(&"halapp") {
                return Err(Error::Domain(
                    "halapp needs exact weighted sums; use the compare command".into(),
                ));
            }
            let euler = EulerConfig {
                truncation_prime: p0,
            };
            let reports = predictor_rows(&names, &esums, None, &keys, &rho_common, &euler)?;
            emit_reports(reports, format, out.as_deref())
        }
        Command::Compare {
            x,
            spec,
            predictors,
            k_mode,
            k,
            top,
            rho_common,
            p0,
            out,
            format,
            budget,
        } => {
            let spec = PartitionSpec::from_path(&spec)?;
            let names: Vec<&str> = predictors.split(',').map(str::trim).collect();
            let euler = EulerConfig {
                truncation_prime: p0,
            };
            let cfg = census_config(&budget);
            let mut reports = Vec::new();
            for x in parse_x_list(&x)? {
                let census = sieve_census(&spec, x, &cfg)?;
                let esums = reciprocal_sums_budgeted(&spec, x as f64, budget.budget)?;
                let keys = select_keys(&census, k_mode, k.as_deref(), top)?;
                reports.extend(predictor_rows(
                    &names,
                    &esums,
                    Some(&census),
                    &keys,
                    &rho_common,
                    &euler,
                )?);
            }
            emit_reports(reports, format, out.as_deref())
        }
        Command::Euler {
            rho,
            rho_vec,
            spec,
            p0,
        } => {
            let cfg = EulerConfig {
                truncation_prime: p0,
            };
            let result = match (rho, rho_vec) {
                (Some(rho), None) => euler_product_scalar(rho, &cfg)?,
                (None, Some(vec_text)) => {
                    let spec_path =
                        spec.ok_or_else(|| Error::Domain("--rho-vec requires --spec".into()))?;
                    let spec = PartitionSpec::from_path(&spec_path)?;
                    let rho = parse_f64_list(&vec_text, "rho")?;
                    euler_product_vector(&spec, &rho, &cfg)?
                }
                _ => {
                    return Err(Error::Domain(
                        "pass exactly one of --rho or --rho-vec".into(),
                    ));
                }
            };
            println!("{}", serde_json::to_string_pretty(&result).unwrap());
            Ok(())
        }
        Command::Halasz {
            x,
            spec,
            z,
            tau_max,
            out,
            budget,
        } => {
            let spec = PartitionSpec::from_path(&spec)?;
            let g = FunctionOnPrimes::new(&spec, parse_complex_list(&z)?)?;
            let cfg = HalaszConfig {
                t_max: tau_max,
                ..HalaszConfig::default()
            };
            let profile = min_distance(&spec, x, &g, &cfg)?;
            if let Some(path) = &out {
                write_output(Some(path), &profile.to_csv_string())?;
            }
            let census = sieve_census(&spec, x, &census_config(&budget))?;
            let ratio = mean_value_ratio(&census, &g)?;
            let esums = reciprocal_sums_budgeted(&spec, x as f64, budget.budget)?;
            let good = halasz_bound_rhs(&esums, &g, BoundVariant::Good, cfg.angle_grid)?;
            let generic = halasz_bound_rhs(&esums, &g, BoundVariant::Generic, cfg.angle_grid)?;
            let summary: serde_json::Value = serde_json::from_str(&profile.summary_json()).unwrap();
            let output = serde_json::json!({
                "profile": summary,
                "mean_value_ratio": { "re": ratio.re, "im": ratio.im, "norm": ratio.norm() },
                "bound_rhs": { "good": good, "generic": generic },
            });
            println!("{}", serde_json::to_string_pretty(&output).unwrap());
            Ok(())
        }
        Command::Invert {
            x,
            spec,
            grid,
            radii,
            out,
            budget,
        } => {
            let spec = PartitionSpec::from_path(&spec)?;
            let sizes = parse_usize_list(&grid, "grid size")?;
            let radii = parse_f64_list(&radii, "radius")?;
            let report = cauchy_compare(&spec, x, &sizes, &radii, &census_config(&budget))?;
            let text = serde_json::to_string_pretty(&report).unwrap() + "\n";
            write_output(out.as_deref(), &text)
        }
        Command::SimulRho {
            esums,
            spec,
            x,
            rho0,
        } => {
            let esums = match (esums, spec, x) {
                (Some(text), None, None) => {
                    ReciprocalSums::synthetic(parse_f64_list(&text, "esum")?)
                }
                (None, Some(path), Some(x)) => {
                    let spec = PartitionSpec::from_path(&path)?;
                    omega_core::partitions::reciprocal_sums(&spec, x as f64)?
                }
                _ => {
                    return Err(Error::Domain(
                        "pass either --esums, or --spec with --x".into(),
                    ));
                }
            };
            let rho = simul_rho(&esums, rho0)?;
            let norms: Vec<f64> = esums
                .e
                .iter()
                .map(|&e| {
                    let y = rho * e;
                    (y - y.round()).abs()
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "rho": rho,
                    "rho0": rho0,
                    "e": esums.e,
                    "norms": norms,
                }))
                .unwrap()
            );
            Ok(())
        }
        Command::Mertens { truncation } => {
            let result = mertens_constant_detailed(truncation)?;
            println!("{}", serde_json::to_string_pretty(&result).unwrap());
            Ok(())
        }
        Command::Validate { spec, bound } => {
            let spec = PartitionSpec::from_path(&spec)?;
            let report = validate_partition(&spec, bound)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
