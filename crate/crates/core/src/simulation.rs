//! The coupled time loop: implicit moisture diffusion, Helmholtz-filtered
//! cement availability, explicit damage healing, and trace recording.
//!
//! Each step, lagging the coefficients by one step:
//!   1. transport coefficient from the current damage (and moisture for the
//!      membrane model),
//!   2. backward Euler moisture step with the left edge held at U = 1,
//!   3. chi = (1 - d)^q smoothed by the Helmholtz filter,
//!   4. explicit healing update d <- clamp(d - dt alpha U chi_eff, 0, 1).

use crate::assembly::{CoeffAverage, P1Assembler};
use crate::error::{CoreError, Result};
use crate::fields::{
    apply_helmholtz, build_helmholtz_operator, cement_availability, diffusivity,
    effective_diffusivity_cmm, gate_value, init_damage, CrackSpec, GateSpec, HelmholtzOperator,
    MaterialLaw,
};
use crate::mesh::{build_unit_square_mesh, Mesh};
use crate::solver::backward_euler_step_with;
use crate::sparse::CsrMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Crack diffusion model: cracks only change the diffusivity.
    #[default]
    Cdm,
    /// Crack membrane model: cracked regions additionally gate transport
    /// on local moisture.
    Cmm,
}

/// Full parameter set of one simulation run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_div: usize,
    pub crack: CrackSpec,
    pub law: MaterialLaw,
    pub model: ModelKind,
    pub gate: GateSpec,
    /// Time step, seconds.
    pub dt: f64,
    /// Horizon after which an unhealed run stops, seconds.
    pub t_max: f64,
    /// Healing percentage at which a run counts as healed.
    pub heal_threshold: f64,
    /// Trace recording cadence in steps.
    pub record_every: usize,
    /// Relative tolerance of the inner conjugate-gradient solves.
    pub rel_tol: f64,
    /// Fixed-point iterations of the coefficient inside one step.
    pub picard_iters: usize,
    /// Row-lump the transport mass matrix. On for the shipped defaults:
    /// lumping makes the implicit step an M-matrix system, so moisture
    /// honors the discrete maximum principle at any dt. The consistent
    /// mass violates it whenever dt < h^2 / (6 D), which holds across the
    /// default parameter ranges and produces percent-scale undershoot at
    /// the moisture front. Healing integrals always use the consistent
    /// mass.
    pub lumped_mass: bool,
    /// Element reduction of nodal transport coefficients. Harmonic keeps
    /// one-node-wide low-diffusivity barriers tight, which the membrane
    /// model's gate relies on.
    pub coeff_average: CoeffAverage,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_div: 32,
            crack: CrackSpec::default(),
            law: MaterialLaw::default(),
            model: ModelKind::Cdm,
            gate: GateSpec::default(),
            dt: 2000.0,
            t_max: 5e6,
            heal_threshold: 0.95,
            record_every: 5,
            rel_tol: 1e-10,
            picard_iters: 1,
            lumped_mass: true,
            coeff_average: CoeffAverage::Harmonic,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.crack.validate()?;
        self.law.validate()?;
        self.gate.validate()?;
        if self.n_div < 2 {
            return Err(CoreError::InvalidConfig("n_div must be at least 2".into()));
        }
        if !(self.dt > 0.0) {
            return Err(CoreError::InvalidConfig("dt must be positive".into()));
        }
        if !(self.t_max >= self.dt) {
            return Err(CoreError::InvalidConfig("t_max must be at least dt".into()));
        }
        if !(self.heal_threshold > 0.0 && self.heal_threshold < 1.0) {
            return Err(CoreError::InvalidConfig(
                "heal_threshold must lie in (0, 1)".into(),
            ));
        }
        if self.record_every == 0 {
            return Err(CoreError::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(CoreError::InvalidConfig(
                "rel_tol must lie in (0, 1)".into(),
            ));
        }
        if self.picard_iters == 0 {
            return Err(CoreError::InvalidConfig(
                "picard_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    /// Elapsed time, seconds.
    pub t: f64,
    /// Dimensionless moisture per node.
    pub u: Vec<f64>,
    /// Damage fraction per node, nonincreasing in time.
    pub d: Vec<f64>,
    /// Initial damage integral over the domain, cm^2.
    pub d0_integral: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub healing: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub d_integral: f64,
    pub gate_open_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct HealingTrace {
    pub rows: Vec<TraceRow>,
    /// False when the run hit t_max before reaching the healing threshold.
    pub completed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HealOutcome {
    /// Interpolated time at which the threshold was crossed, seconds.
    Healed(f64),
    Incomplete,
}

impl HealOutcome {
    pub fn time(self) -> Option<f64> {
        match self {
            HealOutcome::Healed(t) => Some(t),
            HealOutcome::Incomplete => None,
        }
    }
}

/// A single in-flight simulation. Runs share no mutable state and may
/// execute concurrently.
pub struct Simulation {
    config: SimConfig,
    mesh: Mesh,
    asm: P1Assembler,
    mass: CsrMatrix,
    helm: HelmholtzOperator,
    left: Vec<usize>,
    /// Nodes whose initial damage exceeds the gate threshold (membrane
    /// model bookkeeping; empty for the diffusion model).
    gated0: Vec<usize>,
    state: SimState,
    chi_eff_warm: Vec<f64>,
    steps: usize,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mesh = build_unit_square_mesh(config.n_div)?;
        let asm = P1Assembler::new(&mesh);
        let mass = asm.mass();
        let helm = build_helmholtz_operator(&asm, config.law.gamma)?;
        let left = mesh.left_nodes();

        let d = init_damage(&mesh, &config.crack);
        let mut u = vec![0.0; mesh.n_nodes()];
        for &i in &left {
            u[i] = 1.0;
        }
        let d0_integral = integral(&mass, &d);
        let gated0 = match config.model {
            ModelKind::Cdm => Vec::new(),
            ModelKind::Cmm => (0..d.len())
                .filter(|&i| d[i] > config.gate.d_threshold)
                .collect(),
        };
        let chi_eff_warm = cement_availability(&d, config.law.q)?;

        Ok(Simulation {
            config,
            mesh,
            asm,
            mass,
            helm,
            left,
            gated0,
            state: SimState {
                t: 0.0,
                u,
                d,
                d0_integral,
            },
            chi_eff_warm,
            steps: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Advances the coupled system by one time step.
    pub fn step(&mut self) -> Result<()> {
        let cfg = &self.config;
        let dt = cfg.dt;

        let mut u_new = self.state.u.clone();
        for _ in 0..cfg.picard_iters {
            let coeff = match cfg.model {
                ModelKind::Cdm => diffusivity(&self.state.d, &cfg.law)?,
                ModelKind::Cmm => {
                    effective_diffusivity_cmm(&self.state.d, &u_new, &cfg.law, &cfg.gate)?
                }
            };
            u_new = backward_euler_step_with(
                &self.asm,
                &self.mass,
                &self.state.u,
                &coeff,
                dt,
                &self.left,
                1.0,
                cfg.coeff_average,
                cfg.rel_tol,
                cfg.lumped_mass,
            )?;
        }
        if !u_new.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NumericalFailure {
                field: "moisture",
                step: self.steps + 1,
            });
        }

        let chi = cement_availability(&self.state.d, cfg.law.q)?;
        let chi_eff = apply_helmholtz(
            &self.helm,
            &self.mass,
            &chi,
            &self.chi_eff_warm,
            cfg.rel_tol,
        )?;
        if !chi_eff.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NumericalFailure {
                field: "chi_eff",
                step: self.steps + 1,
            });
        }

        // Explicit healing update. Moisture and availability carry
        // 1e-8-scale FEM undershoot; clipping them at zero keeps the
        // damage exactly nonincreasing.
        let rate = cfg.law.alpha * dt;
        for i in 0..self.state.d.len() {
            let heal = rate * u_new[i].max(0.0) * chi_eff[i].max(0.0);
            self.state.d[i] = (self.state.d[i] - heal).clamp(0.0, 1.0);
        }
        if !self.state.d.iter().all(|v| v.is_finite()) {
            return Err(CoreError::NumericalFailure {
                field: "damage",
                step: self.steps + 1,
            });
        }

        self.state.u = u_new;
        self.chi_eff_warm = chi_eff;
        self.steps += 1;
        self.state.t = self.steps as f64 * dt;
        Ok(())
    }

    /// Healed fraction of the initial damage integral, in [0, 1].
    pub fn healing_percentage(&self) -> Result<f64> {
        healing_percentage(&self.state, &self.mass)
    }

    /// Fraction of initially gated nodes that are currently open, either
    /// because they healed below the damage threshold or because local
    /// moisture drove the gate sigmoid past one half. Reports 1 when no
    /// node is gated (diffusion model, or cracks too shallow to gate).
    pub fn gate_open_fraction(&self) -> f64 {
        if self.gated0.is_empty() {
            return 1.0;
        }
        let cfg = &self.config;
        let open = self
            .gated0
            .iter()
            .filter(|&&i| {
                self.state.d[i] <= cfg.gate.d_threshold
                    || gate_value(self.state.u[i], &cfg.gate) >= 0.5
            })
            .count();
        open as f64 / self.gated0.len() as f64
    }

    fn trace_row(&self) -> Result<TraceRow> {
        let (u_min, u_max) = self
            .state
            .u
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(TraceRow {
            t: self.state.t,
            healing: self.healing_percentage()?,
            u_min,
            u_max,
            d_integral: integral(&self.mass, &self.state.d),
            gate_open_fraction: self.gate_open_fraction(),
        })
    }
}

fn integral(mass: &CsrMatrix, f: &[f64]) -> f64 {
    let mut y = vec![0.0; f.len()];
    mass.matvec(f, &mut y);
    y.iter().sum()
}

/// Healed fraction 1 - (1^T M d) / d0_integral, clamped to [0, 1].
pub fn healing_percentage(state: &SimState, mass: &CsrMatrix) -> Result<f64> {
    if !(state.d0_integral > 0.0) {
        return Err(CoreError::DegenerateCrack);
    }
    let current = integral(mass, &state.d);
    Ok((1.0 - current / state.d0_integral).clamp(0.0, 1.0))
}

/// Runs a configuration to the healing threshold or the time horizon,
/// recording a trace. Hitting the horizon unhealed is not an error; the
/// trace comes back flagged incomplete.
pub fn run(config: SimConfig) -> Result<HealingTrace> {
    let mut sim = Simulation::new(config)?;
    let mut rows = vec![sim.trace_row()?];
    let mut completed = false;
    loop {
        sim.step()?;
        let healing = sim.healing_percentage()?;
        let crossed = healing >= config.heal_threshold;
        let on_cadence = sim.steps % config.record_every == 0;
        let horizon = sim.state.t >= config.t_max - 1e-9;
        if crossed || on_cadence || horizon {
            rows.push(sim.trace_row()?);
        }
        if crossed {
            completed = true;
            break;
        }
        if horizon {
            break;
        }
    }
    Ok(HealingTrace { rows, completed })
}

/// First time the trace crosses `threshold`, linearly interpolated between
/// the bracketing samples.
pub fn time_to_heal(trace: &HealingTrace, threshold: f64) -> HealOutcome {
    let rows = &trace.rows;
    for (k, row) in rows.iter().enumerate() {
        if row.healing >= threshold {
            if k == 0 {
                return HealOutcome::Healed(row.t);
            }
            let prev = rows[k - 1];
            let dh = row.healing - prev.healing;
            if dh <= 0.0 {
                return HealOutcome::Healed(row.t);
            }
            let frac = (threshold - prev.healing) / dh;
            return HealOutcome::Healed(prev.t + frac * (row.t - prev.t));
        }
    }
    HealOutcome::Incomplete
}

/// Trace export: `t,healing_pct,u_min,u_max,d_integral,gate_open_fraction`.
pub fn write_trace_csv<W: Write>(trace: &HealingTrace, mut w: W) -> Result<()> {
    writeln!(w, "t,healing_pct,u_min,u_max,d_integral,gate_open_fraction")?;
    for r in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.t, r.healing, r.u_min, r.u_max, r.d_integral, r.gate_open_fraction
        )?;
    }
    Ok(())
}

/// Field snapshot export: `node_id,x,y,U,d`.
pub fn write_snapshot_csv<W: Write>(mesh: &Mesh, state: &SimState, mut w: W) -> Result<()> {
    writeln!(w, "node_id,x,y,U,d")?;
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(w, "{},{},{},{},{}", i, p[0], p[1], state.u[i], state.d[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> SimConfig {
        SimConfig {
            n_div: 8,
            dt: 5e4,
            t_max: 4e7,
            record_every: 2,
            ..Default::default()
        }
    }

    #[test]
    fn init_state_moisture_and_damage() {
        let sim = Simulation::new(quick_config()).unwrap();
        let left = sim.mesh().left_nodes();
        let total: f64 = sim.state().u.iter().sum();
        assert_eq!(total, left.len() as f64);
        assert_eq!(sim.healing_percentage().unwrap(), 0.0);
    }

    #[test]
    fn initial_damage_integral_matches_gaussian_strip_mass() {
        // A vertical crack is a full-height Gaussian strip of mass
        // sigma sqrt(pi); edge truncation at 3 sigma << 0.5 is negligible.
        let config = SimConfig {
            n_div: 32,
            ..Default::default()
        };
        let sim = Simulation::new(config).unwrap();
        let expected = config.crack.sigma * std::f64::consts::PI.sqrt();
        let got = sim.state().d0_integral;
        assert!(
            (got - expected).abs() <= 0.02 * expected,
            "d0 integral {got} vs {expected}"
        );
    }

    #[test]
    fn no_moisture_means_no_healing() {
        // Zero damage stays zero and dry interior nodes heal nothing.
        let mut sim = Simulation::new(quick_config()).unwrap();
        sim.state.d = vec![0.0; sim.mesh().n_nodes()];
        sim.state.d0_integral = 1.0;
        sim.step().unwrap();
        assert!(sim.state().d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn clamped_update_never_undershoots() {
        let mut sim = Simulation::new(quick_config()).unwrap();
        // Saturate moisture so one step heals far more than the damage left.
        sim.state.u = vec![1.0; sim.mesh().n_nodes()];
        sim.config.law.alpha = 1.0;
        sim.state.d = vec![0.2; sim.mesh().n_nodes()];
        sim.step().unwrap();
        assert!(sim.state().d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn damage_monotone_and_moisture_bounded() {
        let mut sim = Simulation::new(quick_config()).unwrap();
        let mut prev = sim.state().d.clone();
        for _ in 0..40 {
            sim.step().unwrap();
            for (now, before) in sim.state().d.iter().zip(&prev) {
                assert!(now <= before);
            }
            for &u in &sim.state().u {
                assert!(u >= -1e-6 && u <= 1.0 + 1e-6, "u = {u}");
            }
            prev = sim.state().d.clone();
        }
    }

    #[test]
    fn healing_percentage_scales_linearly() {
        let sim = Simulation::new(quick_config()).unwrap();
        let mut state = sim.state().clone();
        let h0 = healing_percentage(&state, &sim.mass).unwrap();
        assert_eq!(h0, 0.0);
        for v in state.d.iter_mut() {
            *v *= 0.5;
        }
        let h = healing_percentage(&state, &sim.mass).unwrap();
        assert!((h - 0.5).abs() < 1e-12);
        state.d.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(healing_percentage(&state, &sim.mass).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_crack_is_an_error() {
        let sim = Simulation::new(quick_config()).unwrap();
        let mut state = sim.state().clone();
        state.d0_integral = 0.0;
        assert!(matches!(
            healing_percentage(&state, &sim.mass),
            Err(CoreError::DegenerateCrack)
        ));
    }

    #[test]
    fn run_produces_monotone_trace() {
        let trace = run(quick_config()).unwrap();
        assert!(trace.completed);
        for w in trace.rows.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].healing >= w[0].healing - 1e-12);
        }
        let last = trace.rows.last().unwrap();
        assert!(last.healing >= 0.95);
    }

    #[test]
    fn reaction_dominated_limit_heals_on_water_contact() {
        // With alpha ~ 1e4 any wetted node heals in one step, so the heal
        // time collapses to the moisture arrival scale.
        let fast = SimConfig {
            law: MaterialLaw {
                alpha: 1e4,
                ..Default::default()
            },
            ..quick_config()
        };
        let slow = quick_config();
        let t_fast = time_to_heal(&run(fast).unwrap(), 0.95).time().unwrap();
        let t_slow = time_to_heal(&run(slow).unwrap(), 0.95).time().unwrap();
        assert!(t_fast < 0.5 * t_slow, "fast {t_fast} vs slow {t_slow}");
    }

    #[test]
    fn equal_diffusivities_make_p_irrelevant() {
        let base = SimConfig {
            law: MaterialLaw {
                d_cracked: 1e-8,
                ..Default::default()
            },
            ..quick_config()
        };
        let other = SimConfig {
            law: MaterialLaw {
                d_cracked: 1e-8,
                p: 3.0,
                ..Default::default()
            },
            ..quick_config()
        };
        let t1 = time_to_heal(&run(base).unwrap(), 0.95).time().unwrap();
        let t2 = time_to_heal(&run(other).unwrap(), 0.95).time().unwrap();
        assert!((t1 - t2).abs() <= 1e-9 * t1);
    }

    #[test]
    fn time_to_heal_interpolates() {
        let mk = |t, healing| TraceRow {
            t,
            healing,
            u_min: 0.0,
            u_max: 1.0,
            d_integral: 0.0,
            gate_open_fraction: 1.0,
        };
        let trace = HealingTrace {
            rows: vec![mk(0.0, 0.9), mk(100.0, 1.0)],
            completed: true,
        };
        match time_to_heal(&trace, 0.95) {
            HealOutcome::Healed(t) => assert!((t - 50.0).abs() < 1e-9),
            other => panic!("expected crossing, got {other:?}"),
        }

        let trace = HealingTrace {
            rows: vec![mk(0.0, 0.2), mk(100.0, 0.8)],
            completed: false,
        };
        assert_eq!(time_to_heal(&trace, 0.95), HealOutcome::Incomplete);

        let trace = HealingTrace {
            rows: vec![mk(10.0, 0.97), mk(100.0, 1.0)],
            completed: true,
        };
        assert_eq!(time_to_heal(&trace, 0.95), HealOutcome::Healed(10.0));
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut c = SimConfig::default();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.t_max = c.dt / 2.0;
        assert!(c.validate().is_err());
        let mut c = SimConfig::default();
        c.heal_threshold = 1.0;
        assert!(c.validate().is_err());
    }
}
