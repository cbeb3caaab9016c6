use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CPScanReport;
use crate::cp::CPConstants;
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.json";
pub const SAMPLES_FILE: &str = "samples.csv";

/// The `constants` object of the JSON report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConstants {
    pub t: f64,
    pub s: f64,
    pub delta_t: f64,
    pub sigma: f64,
    pub rho: f64,
    pub sigma_t1: f64,
    pub sigma_t2: f64,
    pub rho_t1: f64,
    pub rho_t2: f64,
    pub eta: f64,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(rename = "H")]
    pub h: usize,
}

impl ReportConstants {
    pub fn new(c: &CPConstants, horizon: usize) -> Self {
        Self {
            t: c.provenance.t,
            s: c.s,
            delta_t: c.delta_t,
            sigma: c.sigma,
            rho: c.rho,
            sigma_t1: c.sigma_t1,
            sigma_t2: c.sigma_t2,
            rho_t1: c.rho_t1,
            rho_t2: c.rho_t2,
            eta: c.eta,
            n: c.provenance.iterate,
            h: horizon,
        }
    }
}

/// Writes `report.json` and `samples.csv` into `dir`, creating it if needed.
pub fn write_report(report: &CPScanReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let json_path = dir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        path: json_path.clone(),
        source,
    })?;
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.join(SAMPLES_FILE);
    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let csv_err = |source| Error::Csv {
        path: csv_path.clone(),
        source,
    };
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    if report.samples.is_empty() {
        writer
            .write_record([
                "sample_id",
                "x0",
                "y0",
                "lambda_u",
                "lambda_s",
                "residual",
                "d1",
                "d2",
                "d3",
                "d4",
                "d5",
                "cp",
                "cos_angle",
            ])
            .map_err(csv_err)?;
    }
    for record in &report.samples {
        writer.serialize(record).map_err(csv_err)?;
    }
    let mut inner = writer
        .into_inner()
        .map_err(|e| Error::io(&csv_path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok(())
}

/// Reads a `report.json`, given either the file or its run directory.
pub fn read_report(path: &Path) -> Result<CPScanReport> {
    let path = if path.is_dir() {
        path.join(REPORT_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{run_scan, ScanConfig};
    use crate::maps::MapDescriptor;

    fn small_config() -> ScanConfig {
        ScanConfig {
            samples: 4,
            orbit_length: 400,
            grid_density: 32,
            ..ScanConfig::new(MapDescriptor::perturbed_cat(0.05).unwrap())
        }
    }

    #[test]
    fn json_has_exact_top_level_keys() {
        let report = run_scan(&small_config()).unwrap();
        let value = serde_json::to_value(&report).unwrap();
        let mut keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "bounds",
                "cluster_count",
                "config",
                "constants",
                "hypothesis_ok",
                "mu_cp",
                "mu_delta",
                "paper_lower_bound"
            ]
        );
        let mut constant_keys: Vec<_> = value["constants"]
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        constant_keys.sort();
        assert_eq!(
            constant_keys,
            [
                "H", "N", "delta_t", "eta", "rho", "rho_t1", "rho_t2", "s", "sigma", "sigma_t1",
                "sigma_t2", "t"
            ]
        );
        let mut bound_keys: Vec<_> = value["bounds"]
            .as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect();
        bound_keys.sort();
        assert_eq!(bound_keys, ["alpha", "beta", "grid_density", "r_estimate"]);
        assert_eq!(value["mu_delta"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn round_trip_reproduces_numbers() {
        let report = run_scan(&small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&report, dir.path()).unwrap();
        let back = read_report(dir.path()).unwrap();
        assert_eq!(back.bounds, report.bounds);
        assert_eq!(back.constants, report.constants);
        assert_eq!(back.mu_delta, report.mu_delta);
        assert_eq!(back.mu_cp, report.mu_cp);
        assert_eq!(back.paper_lower_bound, report.paper_lower_bound);
        assert_eq!(back.config, report.config);
        assert_eq!(back.cluster_count, report.cluster_count);

        let csv = fs::read_to_string(dir.path().join(SAMPLES_FILE)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sample_id,x0,y0,lambda_u,lambda_s,residual,d1,d2,d3,d4,d5,cp,cos_angle"
        );
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn empty_report_is_valid() {
        let config = small_config();
        let bounds = config.map.estimate_bounds(8).unwrap();
        let consts = crate::cp::schedule_constants(&crate::cp::SchedulerInput {
            t: 0.96,
            s: None,
            bounds,
            iterate: 1,
        })
        .unwrap();
        let report = CPScanReport::assemble(&config, bounds, consts, Vec::new());
        let dir = tempfile::tempdir().unwrap();
        write_report(&report, dir.path()).unwrap();
        let back = read_report(&dir.path().join(REPORT_FILE)).unwrap();
        assert_eq!(back.mu_delta, [0.0; 5]);
        assert_eq!(back.mu_cp, 0.0);
        assert_eq!(back.cluster_count, 0);
        let csv = fs::read_to_string(dir.path().join(SAMPLES_FILE)).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let report = run_scan(&small_config()).unwrap();
        let err = write_report(&report, &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
