//! Prediction reports and their CSV/JSON serializations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One predictor evaluation, optionally paired with the exact count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub x: f64,
    pub spec_digest: String,
    pub predictor: String,
    pub k: Vec<u8>,
    /// rho_j = k_j / E_j(x).
    pub rho: Vec<f64>,
    pub predicted: f64,
    pub exact: Option<u64>,
    pub ratio: Option<f64>,
    pub error_estimate: Option<f64>,
}

impl PredictionReport {
    /// Attach the exact count; the ratio is always exact/predicted.
    pub fn with_exact(mut self, exact: u64) -> Self {
        self.exact = Some(exact);
        self.ratio = Some(exact as f64 / self.predicted);
        self
    }
}

/// Lexicographic by x, then k, then predictor name.
pub fn sort_reports(reports: &mut [PredictionReport]) {
    reports.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.k.cmp(&b.k))
            .then_with(|| a.predictor.cmp(&b.predictor))
    });
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV rows `x,predictor,k_0..k_n,predicted,exact,ratio,error_estimate`.
/// Absent optionals serialize as empty cells. Every report in one file
/// must carry the same number of parts.
pub fn reports_to_csv(reports: &[PredictionReport]) -> Result<String> {
    let parts = reports.first().map(|r| r.k.len()).unwrap_or(0);
    if reports.iter().any(|r| r.k.len() != parts) {
        return Err(Error::Domain(
            "all reports in one file must share a part count".into(),
        ));
    }
    let mut out = String::from("x,predictor");
    for j in 0..parts {
        out.push_str(&format!(",k_{j}"));
    }
    out.push_str(",predicted,exact,ratio,error_estimate\n");
    for r in reports {
        out.push_str(&format!("{},{}", r.x, r.predictor));
        for v in &r.k {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(
            ",{},{},{},{}\n",
            r.predicted,
            opt_u64(r.exact),
            opt_f64(r.ratio),
            opt_f64(r.error_estimate)
        ));
    }
    Ok(out)
}

/// Inverse of [`reports_to_csv`]. The spec digest and rho vector do not
/// travel through CSV; they are restored as empty.
pub fn reports_from_csv(text: &str) -> Result<Vec<PredictionReport>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty report csv".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let parts = columns.iter().filter(|c| c.starts_with("k_")).count();
    if columns.len() != parts + 6 {
        return Err(Error::Parse(format!("bad report header: {header}")));
    }
    let mut reports = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != parts + 6 {
            return Err(Error::Parse(format!("bad report row: {line}")));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::Parse(format!("bad {what} in '{line}': {e}")))
        };
        let k: Vec<u8> = fields[2..2 + parts]
            .iter()
            .map(|f| f.parse::<u8>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad k in '{line}': {e}")))?;
        let exact = if fields[parts + 3].is_empty() {
            None
        } else {
            Some(
                fields[parts + 3]
                    .parse::<u64>()
                    .map_err(|e| Error::Parse(format!("bad exact in '{line}': {e}")))?,
            )
        };
        let opt = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f(s, what).map(Some)
            }
        };
        reports.push(PredictionReport {
            x: parse_f(fields[0], "x")?,
            spec_digest: String::new(),
            predictor: fields[1].to_string(),
            k,
            rho: Vec::new(),
            predicted: parse_f(fields[parts + 2], "predicted")?,
            exact,
            ratio: opt(fields[parts + 4], "ratio")?,
            error_estimate: opt(fields[parts + 5], "error_estimate")?,
        });
    }
    Ok(reports)
}

pub fn reports_to_json(reports: &[PredictionReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

pub fn reports_from_json(text: &str) -> Result<Vec<PredictionReport>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<PredictionReport> {
        vec![
            PredictionReport {
                x: 1000.0,
                spec_digest: "abc".into(),
                predictor: "poisson".into(),
                k: vec![2, 1],
                rho: vec![1.1, 0.9],
                predicted: 123.456,
                exact: Some(130),
                ratio: Some(130.0 / 123.456),
                error_estimate: None,
            },
            PredictionReport {
                x: 1000.0,
                spec_digest: "abc".into(),
                predictor: "goaltm".into(),
                k: vec![1, 1],
                rho: vec![0.55, 0.9],
                predicted: 99.5,
                exact: None,
                ratio: None,
                error_estimate: Some(0.5),
            },
        ]
    }

    #[test]
    fn empty_report_has_header_only() {
        let csv = reports_to_csv(&[]).unwrap();
        assert_eq!(csv, "x,predictor,predicted,exact,ratio,error_estimate\n");
        assert!(reports_from_csv(&csv).unwrap().is_empty());
    }

    #[test]
    fn single_row_matches_schema() {
        let reports = sample();
        let csv = reports_to_csv(&reports[..1]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "x,predictor,k_0,k_1,predicted,exact,ratio,error_estimate"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("1000,poisson,2,1,123.456,130,"));
    }

    #[test]
    fn csv_json_csv_round_trip_is_byte_identical() {
        let mut reports = sample();
        sort_reports(&mut reports);
        let csv1 = reports_to_csv(&reports).unwrap();
        let json = reports_to_json(&reports_from_csv(&csv1).unwrap());
        let csv2 = reports_to_csv(&reports_from_json(&json).unwrap()).unwrap();
        assert_eq!(csv1, csv2);
    }

    #[test]
    fn sorting_is_lexicographic_by_x_then_k() {
        let mut reports = sample();
        sort_reports(&mut reports);
        assert_eq!(reports[0].k, vec![1, 1]);
        assert_eq!(reports[1].k, vec![2, 1]);
    }

    #[test]
    fn with_exact_sets_ratio() {
        let r = sample()[1].clone().with_exact(199);
        assert_eq!(r.exact, Some(199));
        assert!((r.ratio.unwrap() - 199.0 / 99.5).abs() < 1e-15);
    }
}
