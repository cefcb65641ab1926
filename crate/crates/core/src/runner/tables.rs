use std::fs;
use std::path::{Path, PathBuf};

use super::execute::{load_report, REPORTS_DIR};
use crate::axes::AxisReport;
use crate::error::{Error, Result};

pub const RESULTS_CSV: &str = "results.csv";
pub const CURVES_CSV: &str = "curves.csv";
pub const DISENTANGLEMENT_CSV: &str = "disentanglement.csv";

/// Metric columns of the results table, in order.
pub const METRIC_COLUMNS: [&str; 10] = [
    "rmse",
    "mse",
    "baseline_rmse",
    "cosine_mean",
    "identity_cosine_mean",
    "cosine_min",
    "cosine_at_neutral",
    "clean_rmse",
    "max_abs_delta_rmse",
    "best_epoch",
];

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Format(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))
}

fn opt(v: &Option<String>) -> String {
    v.clone().unwrap_or_default()
}

/// One row per report.
pub fn results_table(reports: &[(String, AxisReport)]) -> Result<Vec<u8>> {
    let mut header = vec![
        "job",
        "axis",
        "extractor_id",
        "fv",
        "transform",
        "probe",
        "n_train",
        "n_val",
        "n_test",
    ];
    header.extend(METRIC_COLUMNS);
    let rows = reports
        .iter()
        .map(|(name, r)| {
            let mut row = vec![
                name.clone(),
                r.axis.to_string(),
                r.extractor_id.clone(),
                opt(&r.fv),
                opt(&r.transform),
                r.probe.clone(),
                r.counts.train.to_string(),
                r.counts.val.to_string(),
                r.counts.test.to_string(),
            ];
            row.extend(
                METRIC_COLUMNS
                    .iter()
                    .map(|m| r.metric(m).map(|v| v.to_string()).unwrap_or_default()),
            );
            row
        })
        .collect();
    csv_bytes(&header, rows)
}

/// One row per invariance curve point.
pub fn curves_table(reports: &[(String, AxisReport)]) -> Result<Vec<u8>> {
    let header = [
        "job",
        "extractor_id",
        "transform",
        "param",
        "normalized",
        "cosine_mean",
        "count",
    ];
    let rows = reports
        .iter()
        .flat_map(|(name, r)| {
            r.curve.iter().map(move |p| {
                vec![
                    name.clone(),
                    r.extractor_id.clone(),
                    opt(&r.transform),
                    p.param.to_string(),
                    p.normalized.to_string(),
                    p.value.to_string(),
                    p.count.to_string(),
                ]
            })
        })
        .collect();
    csv_bytes(&header, rows)
}

/// One row per disentanglement bucket.
pub fn disentanglement_table(reports: &[(String, AxisReport)]) -> Result<Vec<u8>> {
    let header = [
        "job",
        "extractor_id",
        "predicted_fv",
        "perturbed_fv",
        "transform",
        "bucket",
        "fraction_lo",
        "fraction_hi",
        "param_lo",
        "param_hi",
        "rmse",
        "delta_rmse",
    ];
    let rows = reports
        .iter()
        .flat_map(|(name, r)| {
            r.disentanglement.iter().flat_map(move |g| {
                g.buckets.iter().map(move |b| {
                    vec![
                        name.clone(),
                        r.extractor_id.clone(),
                        g.predicted_fv.clone(),
                        g.perturbed_fv.clone(),
                        g.transform.clone(),
                        b.label.clone(),
                        b.fraction.0.to_string(),
                        b.fraction.1.to_string(),
                        b.params.0.to_string(),
                        b.params.1.to_string(),
                        b.rmse.to_string(),
                        b.delta_rmse.to_string(),
                    ]
                })
            })
        })
        .collect();
    csv_bytes(&header, rows)
}

/// Writes the three tables into `dir` and returns their paths.
pub fn write_tables(dir: &Path, reports: &[(String, AxisReport)]) -> Result<Vec<PathBuf>> {
    let tables = [
        (RESULTS_CSV, results_table(reports)?),
        (CURVES_CSV, curves_table(reports)?),
        (DISENTANGLEMENT_CSV, disentanglement_table(reports)?),
    ];
    tables
        .into_iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Reports in `dir/reports/` (or `dir` itself), sorted by file name. All must
/// share the current schema version.
pub fn load_reports(dir: &Path) -> Result<Vec<(String, AxisReport)>> {
    let sub = dir.join(REPORTS_DIR);
    let scan = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let entries = fs::read_dir(&scan).map_err(|e| Error::io(&scan, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "summary.json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Validation(format!("no reports found in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok((name, load_report(p)?))
        })
        .collect()
}

/// Consolidates every report under `dir` into CSV tables.
pub fn cmd_report(dir: &Path) -> Result<Vec<PathBuf>> {
    let reports = load_reports(dir)?;
    write_tables(dir, &reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axes::{Axis, SplitCounts};

    fn report() -> AxisReport {
        let mut r: AxisReport = serde_json::from_value(serde_json::json!({
            "schema_version": 1, "axis": "informativeness", "extractor_id": "toy", "fv": "hue",
            "transform": null, "probe": "slp", "metrics": {"rmse": 0.25}, "counts": {"train": 7, "val": 2, "test": 1},
            "config": null, "seeds": {}
        }))
        .unwrap();
        r.counts = SplitCounts {
            train: 7,
            val: 2,
            test: 1,
        };
        r
    }

    #[test]
    fn single_report_is_one_row() {
        let csv = String::from_utf8(results_table(&[("job".into(), report())]).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("job,informativeness,toy,hue,,slp,7,2,1,0.25,"));
        assert_eq!(report().axis, Axis::Informativeness);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = cmd_report(dir.path()).unwrap_err();
        assert!(err.to_string().contains("no reports found"));
    }

    #[test]
    fn mixed_versions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut v = serde_json::to_value(report()).unwrap();
        fs::write(dir.path().join("a.json"), v.to_string()).unwrap();
        v["schema_version"] = 2.into();
        fs::write(dir.path().join("b.json"), v.to_string()).unwrap();
        assert!(matches!(cmd_report(dir.path()), Err(Error::Version(_))));
    }
}
