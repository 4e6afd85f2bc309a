//! Parametric studies over the simulator: crack-angle and crack-width
//! sweeps, the width/smoothing surface, the model comparison, and labeled
//! dataset generation for the surrogate classifiers.
//!
//! Sweep points and dataset cells are independent work items; they run on
//! a bounded worker pool and results are collected by index, so output
//! ordering is identical for serial and parallel execution.

use crate::error::{CoreError, Result};
use crate::simulation::{
    run, time_to_heal, HealOutcome, HealingTrace, ModelKind, SimConfig, Simulation,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

/// Which parameter a one-dimensional sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariedParam {
    /// Crack angle; sweep values are in degrees.
    Beta,
    /// Crack width indicator, cm.
    Sigma,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub varied: VariedParam,
    pub values: Vec<f64>,
    pub base: SimConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.is_empty() {
            return Err(CoreError::InvalidConfig("sweep value list is empty".into()));
        }
        if !self.values.windows(2).all(|w| w[1] > w[0]) {
            return Err(CoreError::InvalidConfig(
                "sweep values must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// One sweep result. A run that hits the horizon unhealed keeps
/// `heal_time: None` and no note; a failed run carries the error text.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub heal_time: Option<f64>,
    pub note: Option<String>,
}

/// Sentinel written to sweep CSVs for incomplete or failed rows.
pub const INCOMPLETE_SENTINEL: f64 = -1.0;

fn par_map<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

fn heal_time_row(value: f64, config: SimConfig) -> SweepRow {
    match run(config) {
        Ok(trace) => match time_to_heal(&trace, config.heal_threshold) {
            HealOutcome::Healed(t) => SweepRow {
                value,
                heal_time: Some(t),
                note: None,
            },
            HealOutcome::Incomplete => SweepRow {
                value,
                heal_time: None,
                note: None,
            },
        },
        Err(e) => SweepRow {
            value,
            heal_time: None,
            note: Some(e.to_string()),
        },
    }
}

/// Heal time versus crack angle; values in degrees over [0, 180].
pub fn angle_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if spec.varied != VariedParam::Beta {
        return Err(CoreError::InvalidConfig(
            "angle sweep requires varied = beta".into(),
        ));
    }
    Ok(par_map(spec.values.len(), workers, |i| {
        let deg = spec.values[i];
        let mut config = spec.base;
        config.crack.beta = deg.to_radians();
        heal_time_row(deg, config)
    }))
}

/// Heal time versus crack width; `d_cracked_override` switches between the
/// barrier-crack and conductive-crack configurations.
pub fn width_sweep(
    spec: &SweepSpec,
    d_cracked_override: Option<f64>,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if spec.varied != VariedParam::Sigma {
        return Err(CoreError::InvalidConfig(
            "width sweep requires varied = sigma".into(),
        ));
    }
    Ok(par_map(spec.values.len(), workers, |i| {
        let sigma = spec.values[i];
        let mut config = spec.base;
        config.crack.sigma = sigma;
        if let Some(dc) = d_cracked_override {
            config.law.d_cracked = dc;
        }
        heal_time_row(sigma, config)
    }))
}

#[derive(Clone, Debug)]
pub struct SurfaceRow {
    pub sigma: f64,
    pub gamma: f64,
    pub heal_time: Option<f64>,
    pub note: Option<String>,
}

/// Heal time over the full sigma x gamma product, sigma-major row order.
pub fn surface_sweep(
    sigmas: &[f64],
    gammas: &[f64],
    base: &SimConfig,
    workers: usize,
) -> Result<Vec<SurfaceRow>> {
    base.validate()?;
    if sigmas.is_empty() || gammas.is_empty() {
        return Err(CoreError::InvalidConfig(
            "surface sweep needs nonempty sigma and gamma lists".into(),
        ));
    }
    let n = sigmas.len() * gammas.len();
    Ok(par_map(n, workers, |k| {
        let sigma = sigmas[k / gammas.len()];
        let gamma = gammas[k % gammas.len()];
        let mut config = *base;
        config.crack.sigma = sigma;
        config.law.gamma = gamma;
        let row = heal_time_row(sigma, config);
        SurfaceRow {
            sigma,
            gamma,
            heal_time: row.heal_time,
            note: row.note,
        }
    }))
}

#[derive(Clone, Debug)]
pub struct ModelComparison {
    pub cdm: HealingTrace,
    pub cmm: HealingTrace,
    /// Membrane-model stage boundary: healing rate first drops below a
    /// quarter of its running maximum.
    pub stage1_end: Option<f64>,
    /// Membrane-model stage boundary: gate open fraction first exceeds
    /// one half after the stall.
    pub stage2_end: Option<f64>,
}

/// Runs the same configuration under both transport models.
pub fn model_comparison(base: &SimConfig) -> Result<ModelComparison> {
    let mut cdm_cfg = *base;
    cdm_cfg.model = ModelKind::Cdm;
    let mut cmm_cfg = *base;
    cmm_cfg.model = ModelKind::Cmm;
    let cdm = run(cdm_cfg)?;
    let cmm = run(cmm_cfg)?;
    let (stage1_end, stage2_end) = stage_boundaries(&cmm);
    Ok(ModelComparison {
        cdm,
        cmm,
        stage1_end,
        stage2_end,
    })
}

/// Healing rate between consecutive trace samples, tagged with the
/// interval end time.
pub fn healing_rates(trace: &HealingTrace) -> Vec<(f64, f64)> {
    trace
        .rows
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            ((w[1].t), (w[1].healing - w[0].healing) / dt)
        })
        .collect()
}

/// Stage boundaries of a membrane-model trace; `(None, None)` when the
/// trace exhibits no stall.
pub fn stage_boundaries(trace: &HealingTrace) -> (Option<f64>, Option<f64>) {
    let rates = healing_rates(trace);
    let mut run_max = 0.0f64;
    let mut stage1_end = None;
    for &(t, r) in &rates {
        if r > run_max {
            run_max = r;
        }
        if run_max > 0.0 && r < 0.25 * run_max {
            stage1_end = Some(t);
            break;
        }
    }
    let stage2_end = stage1_end.and_then(|t1| {
        trace
            .rows
            .iter()
            .find(|row| row.t > t1 && row.gate_open_fraction >= 0.5)
            .map(|row| row.t)
    });
    (stage1_end, stage2_end)
}

/// Uniform sampling grid for one dataset axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridRange {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(lower: f64, upper: f64, step: f64) -> Self {
        GridRange { lower, upper, step }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.upper >= self.lower && self.step > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "grid bounds must be positive with upper >= lower, got [{}, {}] step {}",
                self.lower, self.upper, self.step
            )));
        }
        let n = (self.upper - self.lower) / self.step;
        if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "grid step {} does not evenly divide [{}, {}]",
                self.step, self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        ((self.upper - self.lower) / self.step).round() as usize + 1
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count())
            .map(|k| self.lower + k as f64 * self.step)
            .collect()
    }
}

/// Grid specification for labeled dataset generation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub sigma: GridRange,
    pub gamma: GridRange,
    pub t: GridRange,
    pub heal_label_threshold: f64,
    pub base: SimConfig,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::desk()
    }
}

impl DatasetSpec {
    fn base_config() -> SimConfig {
        let mut base = SimConfig::default();
        // Horizontal crack for dataset generation; sigma and gamma sweep.
        base.crack.beta = FRAC_PI_2;
        // Labels come from thousands of runs; a coarser discretization
        // keeps the grids tractable on one workstation core. Both time
        // grids stay exact multiples of dt so checkpoints land on steps.
        base.n_div = 16;
        base.dt = 5000.0;
        base
    }

    /// Workstation-scale grid: 25 x 25 x 60 = 37,500 rows. The time axis
    /// step is a multiple of the default dt so checkpoints land exactly
    /// on steps.
    pub fn desk() -> Self {
        DatasetSpec {
            sigma: GridRange::new(0.001, 0.1, 0.004125),
            gamma: GridRange::new(0.001, 0.1, 0.004125),
            t: GridRange::new(50_000.0, 3_000_000.0, 50_000.0),
            heal_label_threshold: 0.95,
            base: Self::base_config(),
        }
    }

    /// Full grid: 100 x 100 x 100 = 1,000,000 rows.
    pub fn full() -> Self {
        DatasetSpec {
            sigma: GridRange::new(0.001, 0.1, 0.001),
            gamma: GridRange::new(0.001, 0.1, 0.001),
            t: GridRange::new(30_000.0, 3_000_000.0, 30_000.0),
            heal_label_threshold: 0.95,
            base: Self::base_config(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sigma.validate()?;
        self.gamma.validate()?;
        self.t.validate()?;
        self.base.validate()?;
        if !(self.heal_label_threshold > 0.0 && self.heal_label_threshold < 1.0) {
            return Err(CoreError::InvalidConfig(
                "heal_label_threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.sigma.count() * self.gamma.count() * self.t.count()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DatasetRow {
    pub sigma: f64,
    pub gamma: f64,
    pub t: f64,
    pub h: u8,
}

#[derive(Clone, Debug)]
pub struct SkippedCell {
    pub sigma: f64,
    pub gamma: f64,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct DatasetOutput {
    pub rows: Vec<DatasetRow>,
    pub skipped: Vec<SkippedCell>,
}

/// Runs one simulation per (sigma, gamma) cell and samples the healing
/// percentage at every grid time, labeling H = 1 once it reaches the
/// threshold. Failed cells are reported and skipped; generation continues.
pub fn generate_dataset(spec: &DatasetSpec, workers: usize) -> Result<DatasetOutput> {
    spec.validate()?;
    let sigmas = spec.sigma.values();
    let gammas = spec.gamma.values();
    let times = spec.t.values();
    let n_cells = sigmas.len() * gammas.len();

    let cells: Vec<std::result::Result<Vec<u8>, String>> = par_map(n_cells, workers, |k| {
        let sigma = sigmas[k / gammas.len()];
        let gamma = gammas[k % gammas.len()];
        run_labeled_cell(spec, sigma, gamma, &times).map_err(|e| e.to_string())
    });

    let mut rows = Vec::with_capacity(spec.n_rows());
    let mut skipped = Vec::new();
    for (k, cell) in cells.into_iter().enumerate() {
        let sigma = sigmas[k / gammas.len()];
        let gamma = gammas[k % gammas.len()];
        match cell {
            Ok(labels) => {
                for (t, h) in times.iter().zip(labels) {
                    rows.push(DatasetRow {
                        sigma,
                        gamma,
                        t: *t,
                        h,
                    });
                }
            }
            Err(error) => skipped.push(SkippedCell {
                sigma,
                gamma,
                error,
            }),
        }
    }
    Ok(DatasetOutput { rows, skipped })
}

fn run_labeled_cell(
    spec: &DatasetSpec,
    sigma: f64,
    gamma: f64,
    times: &[f64],
) -> Result<Vec<u8>> {
    let mut config = spec.base;
    config.crack.sigma = sigma;
    config.law.gamma = gamma;
    config.heal_threshold = spec.heal_label_threshold;
    config.t_max = times.last().copied().unwrap_or(config.t_max);

    let mut sim = Simulation::new(config)?;
    let mut labels = Vec::with_capacity(times.len());
    'outer: while labels.len() < times.len() {
        sim.step()?;
        let healing = sim.healing_percentage()?;
        let crossed = healing >= spec.heal_label_threshold;
        while labels.len() < times.len() && sim.state().t + 1e-9 >= times[labels.len()] {
            labels.push(u8::from(crossed));
        }
        if crossed || sim.state().t >= config.t_max - 1e-9 {
            break 'outer;
        }
    }
    // Healing percentage is nondecreasing: once crossed, every later grid
    // time is healed.
    while labels.len() < times.len() {
        labels.push(1);
    }
    Ok(labels)
}

/// Writes `value,heal_time_s` rows under the given value header; failed or
/// incomplete rows carry the -1 sentinel.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], value_header: &str, mut w: W) -> Result<()> {
    writeln!(w, "{value_header},heal_time_s")?;
    for r in rows {
        writeln!(w, "{},{}", r.value, r.heal_time.unwrap_or(INCOMPLETE_SENTINEL))?;
    }
    Ok(())
}

pub fn write_surface_csv<W: Write>(rows: &[SurfaceRow], mut w: W) -> Result<()> {
    writeln!(w, "sigma_cm,gamma,heal_time_s")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            r.sigma,
            r.gamma,
            r.heal_time.unwrap_or(INCOMPLETE_SENTINEL)
        )?;
    }
    Ok(())
}

pub fn write_dataset_csv<W: Write>(rows: &[DatasetRow], mut w: W) -> Result<()> {
    writeln!(w, "sigma,gamma,t,H")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.sigma, r.gamma, r.t, r.h)?;
    }
    Ok(())
}

/// Central second differences f[i-1] - 2 f[i] + f[i+1]; positive values
/// mean local convexity.
pub fn second_differences(values: &[f64]) -> Vec<f64> {
    values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_base() -> SimConfig {
        SimConfig {
            n_div: 8,
            dt: 5e4,
            t_max: 4e7,
            record_every: 2,
            ..Default::default()
        }
    }

    #[test]
    fn sweep_spec_validation() {
        let ok = SweepSpec {
            varied: VariedParam::Beta,
            values: vec![0.0, 45.0, 90.0],
            base: tiny_base(),
        };
        assert!(ok.validate().is_ok());
        let bad = SweepSpec {
            values: vec![45.0, 45.0],
            ..ok.clone()
        };
        assert!(bad.validate().is_err());
        let empty = SweepSpec {
            values: vec![],
            ..ok
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn angle_sweep_row_count_and_order() {
        let spec = SweepSpec {
            varied: VariedParam::Beta,
            values: vec![0.0, 90.0, 180.0],
            base: tiny_base(),
        };
        let rows = angle_sweep(&spec, 1).unwrap();
        assert_eq!(rows.len(), 3);
        for (r, v) in rows.iter().zip(&spec.values) {
            assert_eq!(r.value, *v);
            assert!(r.heal_time.is_some(), "row {v} incomplete");
        }
    }

    #[test]
    fn parallel_and_serial_sweeps_agree() {
        let spec = SweepSpec {
            varied: VariedParam::Beta,
            values: vec![0.0, 30.0, 60.0, 90.0],
            base: tiny_base(),
        };
        let serial = angle_sweep(&spec, 1).unwrap();
        let parallel = angle_sweep(&spec, 4).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_sweep_csv(&serial, "beta_deg", &mut a).unwrap();
        write_sweep_csv(&parallel, "beta_deg", &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn surface_sweep_is_sigma_major() {
        let rows = surface_sweep(&[0.02, 0.03, 0.04], &[0.01, 0.02, 0.05], &tiny_base(), 1)
            .unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[0].sigma, 0.02);
        assert_eq!(rows[0].gamma, 0.01);
        assert_eq!(rows[1].sigma, 0.02);
        assert_eq!(rows[1].gamma, 0.02);
        assert_eq!(rows[3].sigma, 0.03);
    }

    #[test]
    fn grid_range_counts() {
        let g = GridRange::new(0.001, 0.1, 0.001);
        assert!(g.validate().is_ok());
        assert_eq!(g.count(), 100);
        let v = g.values();
        assert!((v[0] - 0.001).abs() < 1e-12);
        assert!((v[99] - 0.1).abs() < 1e-12);

        assert_eq!(DatasetSpec::desk().n_rows(), 37_500);
        assert_eq!(DatasetSpec::full().n_rows(), 1_000_000);
        assert!(DatasetSpec::desk().validate().is_ok());
        assert!(DatasetSpec::full().validate().is_ok());

        let bad = GridRange::new(0.001, 0.1, 0.0007);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dataset_labels_monotone_in_time() {
        let spec = DatasetSpec {
            sigma: GridRange::new(0.02, 0.04, 0.02),
            gamma: GridRange::new(0.02, 0.04, 0.02),
            t: GridRange::new(2e5, 4e6, 2e5),
            heal_label_threshold: 0.95,
            base: SimConfig {
                crack: crate::fields::CrackSpec {
                    beta: FRAC_PI_2,
                    sigma: 0.0224,
                },
                ..tiny_base()
            },
        };
        let out = generate_dataset(&spec, 1).unwrap();
        assert!(out.skipped.is_empty());
        assert_eq!(out.rows.len(), spec.n_rows());
        let nt = spec.t.count();
        for cell in out.rows.chunks(nt) {
            for w in cell.windows(2) {
                assert!(w[1].h >= w[0].h, "labels must be a nondecreasing step");
            }
            assert_eq!(cell.last().unwrap().h, 1, "cells should heal in horizon");
        }
    }

    #[test]
    fn second_difference_signs() {
        // f(x) = x^2 sampled uniformly is convex: positive second diffs.
        let quad: Vec<f64> = (0..6).map(|i| (i * i) as f64).collect();
        assert!(second_differences(&quad).iter().all(|&v| v > 0.0));
        let lin: Vec<f64> = (0..6).map(|i| 3.0 * i as f64).collect();
        assert!(second_differences(&lin).iter().all(|&v| v.abs() < 1e-12));
    }
}
