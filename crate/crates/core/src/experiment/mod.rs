//! End-to-end verification scans over sampled orbits.
//!
//! A scan estimates the map bounds, schedules the CP constants, and then for
//! each seeded starting point follows a long orbit, flags every fully
//! windowed orbit index for `Delta_1 .. Delta_5`, and accumulates Birkhoff
//! frequencies. The sampling measure is the law of Lebesgue-generic starts
//! pushed along their orbits.

mod cluster;
mod report;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{ftle_sums, DirectionPair, ExponentSums, LyapunovEstimate, Orbit};
use crate::cp::{
    angle_bound_check, check_hypothesis, schedule_constants, CPConstants, DeltaFlags, OrbitCocycle,
    SchedulerInput,
};
use crate::error::{Error, Result};
use crate::maps::{MapBounds, MapDescriptor, TorusPoint};

pub use cluster::cluster_cp_points;
pub use report::{read_report, write_report, ReportConstants, REPORT_FILE, SAMPLES_FILE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub map: MapDescriptor,
    pub samples: usize,
    pub orbit_length: usize,
    pub window: usize,
    pub horizon: usize,
    pub t: f64,
    /// `None` selects the midpoint of the admissible interval.
    pub s: Option<f64>,
    /// Clustering radius.
    pub delta: f64,
    pub seed: u64,
    pub grid_density: usize,
}

impl ScanConfig {
    pub fn new(map: MapDescriptor) -> Self {
        Self {
            map,
            samples: 100,
            orbit_length: 10_000,
            window: crate::cocycle::DEFAULT_WINDOW,
            horizon: crate::cp::DEFAULT_HORIZON,
            t: 0.96,
            s: None,
            delta: 0.1,
            seed: 0,
            grid_density: 512,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.map.validate()?;
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        if self.window < 2 {
            return Err(Error::InvalidArgument("window must be at least 2".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        if self.grid_density < 2 {
            return Err(Error::InvalidArgument(
                "grid density must be at least 2".into(),
            ));
        }
        check_orbit_length(self.orbit_length, self.window, self.horizon)
    }
}

fn check_orbit_length(orbit_length: usize, window: usize, horizon: usize) -> Result<()> {
    if orbit_length <= window + horizon {
        return Err(Error::OrbitTooShort {
            orbit_length,
            window,
            horizon,
        });
    }
    Ok(())
}

/// Seeded grid-jitter sampler: sample `i` falls uniformly in cell `i` of a
/// `ceil(sqrt(n))`-sided grid, cells taken in row-major order.
pub fn sample_points(samples: usize, seed: u64) -> Vec<TorusPoint> {
    let side = (samples as f64).sqrt().ceil().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|i| {
            let (cx, cy) = (i % side, i / side);
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            TorusPoint::new((cx as f64 + u) / side as f64, (cy as f64 + v) / side as f64)
        })
        .collect()
}

/// Orbit of a base point with direction estimates and cocycle data, padded
/// so that every index in [`OrbitAnalysis::evaluation_range`] (and the one
/// after it) has full windows and horizons on both sides.
#[derive(Debug, Clone)]
pub struct OrbitAnalysis {
    pub orbit: Orbit,
    pub dirs: Vec<Option<DirectionPair>>,
    pub cocycle: OrbitCocycle,
    pub orbit_length: usize,
    pub window: usize,
    pub horizon: usize,
}

impl OrbitAnalysis {
    pub fn new(
        map: &MapDescriptor,
        p: TorusPoint,
        orbit_length: usize,
        window: usize,
        horizon: usize,
    ) -> Result<Self> {
        check_orbit_length(orbit_length, window, horizon)?;
        let pad = window + horizon + 1;
        let orbit = Orbit::around(map, p, pad, orbit_length + pad)?;
        let dirs = orbit.directions(window);
        let cocycle = OrbitCocycle::new(&orbit, &dirs);
        Ok(Self {
            orbit,
            dirs,
            cocycle,
            orbit_length,
            window,
            horizon,
        })
    }

    /// Absolute indices of the orbit steps `k = window .. orbit_length - horizon`.
    pub fn evaluation_range(&self) -> std::ops::Range<usize> {
        let o = self.orbit.origin;
        o + self.window..o + self.orbit_length - self.horizon
    }

    pub fn flags(&self, i: usize, consts: &CPConstants) -> DeltaFlags {
        self.cocycle.flags(i, consts, self.horizon)
    }

    /// Fraction of evaluation indices where `predicate` holds.
    pub fn birkhoff<F>(&self, predicate: F) -> f64
    where
        F: Fn(&OrbitAnalysis, usize) -> bool,
    {
        let range = self.evaluation_range();
        let total = range.len();
        let hits = range.filter(|&i| predicate(self, i)).count();
        hits as f64 / total as f64
    }
}

/// Birkhoff frequency of `predicate` along the orbit of `p`.
///
/// The predicate receives the analysed orbit and an absolute orbit index.
pub fn birkhoff_measure<F>(
    map: &MapDescriptor,
    p: TorusPoint,
    orbit_length: usize,
    window: usize,
    horizon: usize,
    predicate: F,
) -> Result<f64>
where
    F: Fn(&OrbitAnalysis, usize) -> bool,
{
    Ok(OrbitAnalysis::new(map, p, orbit_length, window, horizon)?.birkhoff(predicate))
}

/// One row of the per-sample CSV; flags refer to the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub x0: f64,
    pub y0: f64,
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub residual: f64,
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
    pub d4: bool,
    pub d5: bool,
    pub cp: bool,
    /// `NaN` when no splitting was found at the starting point.
    pub cos_angle: f64,
}

/// Everything one sampled orbit contributes to a report.
#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub record: SampleRecord,
    pub exponents: ExponentSums,
    pub evaluated: usize,
    pub delta_hits: [usize; 5],
    pub cp_hits: usize,
    pub angle_checks: usize,
    pub angle_violations: usize,
    pub cp_points: Vec<TorusPoint>,
}

pub fn analyze_sample(
    config: &ScanConfig,
    consts: &CPConstants,
    sample_id: usize,
    p: TorusPoint,
) -> Result<SampleOutcome> {
    let analysis = OrbitAnalysis::new(
        &config.map,
        p,
        config.orbit_length,
        config.window,
        config.horizon,
    )?;
    let range = analysis.evaluation_range();
    let flags: Vec<DeltaFlags> = (range.start..=range.end)
        .map(|i| analysis.flags(i, consts))
        .collect();

    let mut delta_hits = [0usize; 5];
    let mut cp_hits = 0;
    let mut angle_checks = 0;
    let mut angle_violations = 0;
    let mut cp_points = Vec::new();
    for (j, i) in range.clone().enumerate() {
        let here = &flags[j];
        let next = &flags[j + 1];
        for (hit, flag) in delta_hits.iter_mut().zip(here.as_array()) {
            *hit += usize::from(flag);
        }
        if here.all() && next.d3 {
            cp_hits += 1;
            cp_points.push(analysis.orbit.points[i]);
        }
        if let (true, Some(dirs)) = (here.d1 && next.d3, analysis.dirs[i]) {
            angle_checks += 1;
            if !angle_bound_check(consts, (here, next), &dirs)? {
                angle_violations += 1;
            }
        }
    }

    let origin = analysis.orbit.origin;
    let base = analysis.flags(origin, consts);
    let base_next = analysis.flags(origin + 1, consts);
    let exponents = ftle_sums(&config.map, p, config.orbit_length)?;
    let est = exponents.estimate();
    let record = SampleRecord {
        sample_id,
        x0: p.x,
        y0: p.y,
        lambda_u: est.lambda_u,
        lambda_s: est.lambda_s,
        residual: est.residual,
        d1: base.d1,
        d2: base.d2,
        d3: base.d3,
        d4: base.d4,
        d5: base.d5,
        cp: base.all() && base_next.d3,
        cos_angle: analysis.dirs[origin].map_or(f64::NAN, |d| d.cos_angle),
    };
    Ok(SampleOutcome {
        record,
        exponents,
        evaluated: range.len(),
        delta_hits,
        cp_hits,
        angle_checks,
        angle_violations,
        cp_points,
    })
}

/// Diagnostics that do not appear in the JSON report.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScanDiagnostics {
    /// Pooled exponent estimate over all sampled orbits.
    pub lyapunov: Option<LyapunovEstimate>,
    /// Total number of evaluated orbit points.
    pub evaluated: usize,
    pub cp_points: usize,
    pub angle_checks: usize,
    pub angle_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CPScanReport {
    pub bounds: MapBounds,
    pub constants: ReportConstants,
    pub mu_delta: [f64; 5],
    pub mu_cp: f64,
    pub paper_lower_bound: f64,
    pub hypothesis_ok: bool,
    pub cluster_count: usize,
    pub config: ScanConfig,
    #[serde(skip)]
    pub consts: Option<CPConstants>,
    #[serde(skip)]
    pub samples: Vec<SampleRecord>,
    #[serde(skip)]
    pub diagnostics: ScanDiagnostics,
}

impl CPScanReport {
    /// Merge per-sample outcomes (in order) into a report.
    pub fn assemble(
        config: &ScanConfig,
        bounds: MapBounds,
        consts: CPConstants,
        outcomes: Vec<SampleOutcome>,
    ) -> Self {
        let mut evaluated = 0;
        let mut delta_hits = [0usize; 5];
        let mut cp_hits = 0;
        let mut angle_checks = 0;
        let mut angle_violations = 0;
        let mut exponents: Option<ExponentSums> = None;
        let mut cp_points = Vec::new();
        let mut samples = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            evaluated += o.evaluated;
            for (acc, h) in delta_hits.iter_mut().zip(o.delta_hits) {
                *acc += h;
            }
            cp_hits += o.cp_hits;
            angle_checks += o.angle_checks;
            angle_violations += o.angle_violations;
            exponents = Some(match exponents {
                None => o.exponents,
                Some(acc) => acc.merge(&o.exponents),
            });
            cp_points.extend(o.cp_points);
            samples.push(o.record);
        }
        let freq = |hits: usize| {
            if evaluated == 0 {
                0.0
            } else {
                hits as f64 / evaluated as f64
            }
        };
        let lyapunov = exponents.map(|e| e.estimate());
        let hypothesis_ok = lyapunov
            .map(|l| check_hypothesis(&l, &bounds).unwrap_or(false))
            .unwrap_or(false);
        let cluster_count = cluster_cp_points(&cp_points, config.delta);
        Self {
            bounds,
            constants: ReportConstants::new(&consts, config.horizon),
            mu_delta: delta_hits.map(freq),
            mu_cp: freq(cp_hits),
            paper_lower_bound: consts.pliss_lower_bound(),
            hypothesis_ok,
            cluster_count,
            config: config.clone(),
            consts: Some(consts),
            samples,
            diagnostics: ScanDiagnostics {
                lyapunov,
                evaluated,
                cp_points: cp_points.len(),
                angle_checks,
                angle_violations,
            },
        }
    }
}

/// Runs a full scan. Samples are analysed in parallel on the current rayon
/// pool and merged by sample index.
pub fn run_scan(config: &ScanConfig) -> Result<CPScanReport> {
    config.validate()?;
    let bounds = config.map.estimate_bounds(config.grid_density)?;
    let consts = schedule_constants(&SchedulerInput {
        t: config.t,
        s: config.s,
        bounds,
        iterate: config.map.iterate,
    })?;
    let points = sample_points(config.samples, config.seed);
    let outcomes = points
        .par_iter()
        .enumerate()
        .map(|(id, &p)| analyze_sample(config, &consts, id, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(CPScanReport::assemble(config, bounds, consts, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_is_deterministic_and_in_cells() {
        let a = sample_points(10, 7);
        assert_eq!(a, sample_points(10, 7));
        assert_ne!(a, sample_points(10, 8));
        for (i, p) in a.iter().enumerate() {
            let (cx, cy) = (i % 4, i / 4);
            assert!(p.x >= cx as f64 / 4.0 && p.x < (cx + 1) as f64 / 4.0);
            assert!(p.y >= cy as f64 / 4.0 && p.y < (cy + 1) as f64 / 4.0);
        }
    }

    #[test]
    fn trivial_predicates() {
        let map = MapDescriptor::cat();
        let p = TorusPoint::new(0.3, 0.3);
        assert_eq!(
            birkhoff_measure(&map, p, 500, 40, 64, |_, _| true).unwrap(),
            1.0
        );
        assert_eq!(
            birkhoff_measure(&map, p, 500, 40, 64, |_, _| false).unwrap(),
            0.0
        );
        assert!(matches!(
            birkhoff_measure(&map, p, 104, 40, 64, |_, _| true),
            Err(Error::OrbitTooShort { .. })
        ));
    }

    #[test]
    fn cat_orbit_is_entirely_cp() {
        let map = MapDescriptor::cat();
        let bounds = map.estimate_bounds(64).unwrap();
        let consts = schedule_constants(&SchedulerInput {
            t: 0.96,
            s: None,
            bounds,
            iterate: 1,
        })
        .unwrap();
        let mu = birkhoff_measure(
            &map,
            TorusPoint::new(0.123, 0.456),
            10_000,
            40,
            64,
            |a, i| a.flags(i, &consts).all() && a.flags(i + 1, &consts).d3,
        )
        .unwrap();
        assert_eq!(mu, 1.0);
    }

    #[test]
    fn config_validation() {
        let mut c = ScanConfig::new(MapDescriptor::cat());
        assert!(c.validate().is_ok());
        c.orbit_length = c.window + c.horizon;
        assert!(matches!(c.validate(), Err(Error::OrbitTooShort { .. })));
        let mut c = ScanConfig::new(MapDescriptor::cat());
        c.samples = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_outcomes_give_zero_measures() {
        let config = ScanConfig::new(MapDescriptor::cat());
        let bounds = config.map.estimate_bounds(8).unwrap();
        let consts = schedule_constants(&SchedulerInput {
            t: 0.96,
            s: None,
            bounds,
            iterate: 1,
        })
        .unwrap();
        let report = CPScanReport::assemble(&config, bounds, consts, Vec::new());
        assert_eq!(report.mu_delta, [0.0; 5]);
        assert_eq!(report.mu_cp, 0.0);
        assert_eq!(report.cluster_count, 0);
        assert!(!report.hypothesis_ok);
    }
}
