//! 2D finite-element simulation of autogenous crack healing in concrete.
//!
//! Moisture diffuses through a unit-square specimen from a wetted left
//! edge; damage heals in proportion to local moisture and a Helmholtz-
//! smoothed cement availability. Two transport variants are provided: the
//! crack diffusion model (cracks only change the diffusivity) and the
//! crack membrane model (cracked regions gate transport on local
//! moisture). On top of the solver sit a sweep/dataset harness and a set
//! of from-scratch binary classifiers that predict healing outcomes from
//! simulation-generated data.

pub mod assembly;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod mesh;
pub mod simulation;
pub mod solver;
pub mod sparse;
pub mod surrogate;

pub use assembly::{
    apply_dirichlet, assemble_mass, assemble_stiffness, assemble_stiffness_with, CoeffAverage,
    P1Assembler,
};
pub use error::{CoreError, Result};
pub use fields::{
    cement_availability, diffusivity, effective_diffusivity_cmm, gate, helmholtz_filter,
    init_damage, CrackSpec, GateSpec, MaterialLaw,
};
pub use mesh::{build_unit_square_mesh, BoundaryTag, Mesh};
pub use simulation::{
    healing_percentage, run, time_to_heal, write_snapshot_csv, write_trace_csv, HealOutcome,
    HealingTrace, ModelKind, SimConfig, SimState, Simulation, TraceRow,
};
pub use solver::{backward_euler_step, solve_spd};
pub use sparse::CsrMatrix;
