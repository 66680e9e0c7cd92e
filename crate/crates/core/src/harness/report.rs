//! Aggregated benchmark curves and their CSV form.

use std::path::Path;

use crate::error::{Error, Result};
use crate::ising::Metadata;

pub const REPORT_COLUMNS: [&str; 7] = [
    "family",
    "solver",
    "time",
    "mean_gap",
    "mean_hamming",
    "frac_optimal",
    "n_instances",
];

pub const RAW_COLUMNS: [&str; 9] = [
    "family", "instance", "seed", "solver", "time", "energy", "gap", "hamming", "optimal",
];

/// One point of one solver's curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub family: String,
    pub solver: String,
    pub time: f64,
    pub mean_gap: f64,
    pub mean_hamming: f64,
    /// Share of all instances at the reference optimum by `time`.
    pub frac_optimal: f64,
    /// Instances with a solution by `time`; the means run over these.
    pub n_instances: usize,
}

/// One instance, solver and ladder point; absent until the solver has a solution.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub family: String,
    pub instance: usize,
    pub seed: u64,
    pub solver: String,
    pub time: f64,
    pub energy: Option<f64>,
    pub gap: Option<f64>,
    pub hamming: Option<f64>,
    pub optimal: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    pub raw: Vec<RawRow>,
    pub metadata: Metadata,
}

impl BenchmarkReport {
    /// Recomputes the curves from the raw rows, keyed by (solver, time) in
    /// first-appearance order.
    pub fn aggregate(raw: &[RawRow]) -> Vec<ReportRow> {
        let mut keys: Vec<(String, String, f64)> = Vec::new();
        for r in raw {
            let key = (r.family.clone(), r.solver.clone(), r.time);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let mut rows = Vec::new();
        for (family, solver, time) in keys {
            let group: Vec<&RawRow> = raw
                .iter()
                .filter(|r| r.family == family && r.solver == solver && r.time == time)
                .collect();
            let solved: Vec<&&RawRow> = group.iter().filter(|r| r.gap.is_some()).collect();
            if solved.is_empty() {
                continue;
            }
            let n = solved.len() as f64;
            rows.push(ReportRow {
                family,
                solver,
                time,
                mean_gap: solved.iter().map(|r| r.gap.unwrap_or(0.0)).sum::<f64>() / n,
                mean_hamming: solved.iter().map(|r| r.hamming.unwrap_or(0.0)).sum::<f64>() / n,
                frac_optimal: group.iter().filter(|r| r.optimal).count() as f64 / group.len() as f64,
                n_instances: solved.len(),
            });
        }
        rows
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn report_csv_string(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_rows(&mut w, rows)?;
    let bytes = w.into_inner().map_err(|e| Error::Contract(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_rows<W: std::io::Write>(w: &mut csv::Writer<W>, rows: &[ReportRow]) -> Result<()> {
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.family.clone(),
            r.solver.clone(),
            num(r.time),
            num(r.mean_gap),
            num(r.mean_hamming),
            num(r.frac_optimal),
            r.n_instances.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_report_csv(report: &BenchmarkReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    write_rows(&mut w, &report.rows)
}

pub fn write_raw_csv(report: &BenchmarkReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(RAW_COLUMNS)?;
    for r in &report.raw {
        w.write_record([
            r.family.clone(),
            r.instance.to_string(),
            r.seed.to_string(),
            r.solver.clone(),
            num(r.time),
            opt(r.energy),
            opt(r.gap),
            opt(r.hamming),
            r.optimal.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Reads a report CSV; columns are located by header name.
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report_csv(&text)
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let mut index = [0usize; 7];
    let missing: Vec<&str> = REPORT_COLUMNS
        .iter()
        .enumerate()
        .filter_map(|(k, name)| match headers.iter().position(|h| h == *name) {
            Some(p) => {
                index[k] = p;
                None
            }
            None => Some(*name),
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "report is missing columns: {}",
            missing.join(", ")
        )));
    }
    let bad = |what: &str, v: &str| Error::InvalidArgument(format!("bad {what} value `{v}` in report"));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(index[k]).unwrap_or("");
        let float = |k: usize| field(k).parse::<f64>().map_err(|_| bad(REPORT_COLUMNS[k], field(k)));
        rows.push(ReportRow {
            family: field(0).to_string(),
            solver: field(1).to_string(),
            time: float(2)?,
            mean_gap: float(3)?,
            mean_hamming: float(4)?,
            frac_optimal: float(5)?,
            n_instances: field(6).parse().map_err(|_| bad("n_instances", field(6)))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(
            report_csv_string(&[]).unwrap(),
            "family,solver,time,mean_gap,mean_hamming,frac_optimal,n_instances\n"
        );
        assert!(parse_report_csv(&report_csv_string(&[]).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn values_round_trip_exactly() {
        let rows = vec![ReportRow {
            family: "CBFM".into(),
            solver: "hfs".into(),
            time: 0.1,
            mean_gap: 1.0 / 3.0,
            mean_hamming: 2.5e-17,
            frac_optimal: 0.97,
            n_instances: 100,
        }];
        assert_eq!(parse_report_csv(&report_csv_string(&rows).unwrap()).unwrap(), rows);
    }

    #[test]
    fn missing_columns_named() {
        let err = parse_report_csv("family,solver,time\n").unwrap_err().to_string();
        assert!(err.contains("mean_gap, mean_hamming, frac_optimal, n_instances"));
    }

    #[test]
    fn aggregate_skips_unsolved_in_means() {
        let row = |instance, gap: Option<f64>, optimal| RawRow {
            family: "BFM".into(),
            instance,
            seed: 0,
            solver: "gd".into(),
            time: 1.0,
            energy: gap.map(|g| -1.0 + g),
            gap,
            hamming: gap.map(|g| g / 2.0),
            optimal,
        };
        let rows = BenchmarkReport::aggregate(&[row(0, Some(0.0), true), row(1, Some(0.5), false), row(2, None, false)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_instances, 2);
        assert_eq!(rows[0].mean_gap, 0.25);
        assert_eq!(rows[0].frac_optimal, 1.0 / 3.0);
    }
}
