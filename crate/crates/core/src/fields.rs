//! Constitutive laws and field constructors: Gaussian crack damage,
//! damage-dependent diffusivity, cement availability, Helmholtz smoothing
//! and the moisture gate of the crack membrane model.

use crate::assembly::{CoeffAverage, P1Assembler};
use crate::error::{CoreError, Result};
use crate::mesh::Mesh;
use crate::solver::solve_spd_from;
use crate::sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

/// Damage values may drift past [0, 1] by floating-point noise from the
/// explicit update; anything inside this band is clamped silently.
const DAMAGE_DRIFT_TOL: f64 = 1e-9;

/// Initial crack geometry: a straight line through the domain center.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CrackSpec {
    /// Incline angle in radians, in [0, pi].
    pub beta: f64,
    /// Width indicator of the Gaussian damage profile, cm.
    pub sigma: f64,
}

impl CrackSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta <= std::f64::consts::PI) {
            return Err(CoreError::InvalidConfig(format!(
                "crack angle must lie in [0, pi], got {}",
                self.beta
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "crack width must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

impl Default for CrackSpec {
    fn default() -> Self {
        CrackSpec {
            beta: 0.0,
            sigma: 0.0224,
        }
    }
}

/// Material constants of the coupled moisture/healing model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MaterialLaw {
    /// Water diffusivity of intact concrete, cm^2/s.
    pub d_intact: f64,
    /// Water diffusivity of crack space, cm^2/s.
    pub d_cracked: f64,
    /// Sharpness of the diffusivity interpolation.
    pub p: f64,
    /// Sharpness of the cement availability decay.
    pub q: f64,
    /// Healing rate constant, 1/s per unit moisture times availability.
    pub alpha: f64,
    /// Helmholtz smoothing coefficient, cm^2.
    pub gamma: f64,
}

impl MaterialLaw {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.d_intact > 0.0, "d_intact must be positive"),
            (self.d_cracked > 0.0, "d_cracked must be positive"),
            (self.p >= 1.0, "p must be at least 1"),
            (self.q >= 1.0, "q must be at least 1"),
            (self.alpha > 0.0, "alpha must be positive"),
            (self.gamma >= 0.0, "gamma must be nonnegative"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(CoreError::InvalidConfig(msg.to_string()));
            }
        }
        Ok(())
    }
}

impl Default for MaterialLaw {
    fn default() -> Self {
        MaterialLaw {
            d_intact: 1e-8,
            d_cracked: 1e-7,
            p: 1.0,
            q: 1.0,
            alpha: 0.01,
            gamma: 0.0316,
        }
    }
}

/// Moisture gate of the crack membrane model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GateSpec {
    /// Damage level above which a node counts as cracked and is gated.
    pub d_threshold: f64,
    /// Moisture level at which the gate sigmoid is half open.
    pub u_critical: f64,
    /// Transition sharpness of the gate sigmoid.
    pub delta_u_gate: f64,
    /// Floor conductance keeping the gated system positive definite.
    pub epsilon_gate: f64,
}

impl GateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_threshold > 0.0 && self.d_threshold < 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "d_threshold must lie in (0, 1), got {}",
                self.d_threshold
            )));
        }
        if !(self.u_critical > 0.0 && self.u_critical < 1.0) {
            return Err(CoreError::InvalidConfig(format!(
                "u_critical must lie in (0, 1), got {}",
                self.u_critical
            )));
        }
        if !(self.delta_u_gate > 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "delta_u_gate must be positive, got {}",
                self.delta_u_gate
            )));
        }
        if !(self.epsilon_gate > 0.0 && self.epsilon_gate <= 0.1) {
            return Err(CoreError::InvalidConfig(format!(
                "epsilon_gate must lie in (0, 0.1], got {}",
                self.epsilon_gate
            )));
        }
        Ok(())
    }
}

impl Default for GateSpec {
    fn default() -> Self {
        GateSpec {
            d_threshold: 0.5,
            u_critical: 0.5,
            delta_u_gate: 0.01,
            epsilon_gate: 1e-3,
        }
    }
}

/// Evaluates the Gaussian crack damage field at every node:
/// d(x, y) = exp(-((x-0.5) cos b - (y-0.5) sin b)^2 / sigma^2).
pub fn init_damage(mesh: &Mesh, crack: &CrackSpec) -> Vec<f64> {
    let (sin_b, cos_b) = crack.beta.sin_cos();
    let inv_s2 = 1.0 / (crack.sigma * crack.sigma);
    mesh.nodes
        .iter()
        .map(|p| {
            let s = (p[0] - 0.5) * cos_b - (p[1] - 0.5) * sin_b;
            (-s * s * inv_s2).exp()
        })
        .collect()
}

fn validated_unit_field(d: &[f64], what: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(d.len());
    for &v in d {
        if !v.is_finite() || v < -DAMAGE_DRIFT_TOL || v > 1.0 + DAMAGE_DRIFT_TOL {
            return Err(CoreError::InvalidField(format!(
                "{what} must lie in [0, 1], got {v}"
            )));
        }
        out.push(v.clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Damage-dependent diffusivity by log-space power-law interpolation
/// between the intact and cracked constants.
pub fn diffusivity(d: &[f64], law: &MaterialLaw) -> Result<Vec<f64>> {
    let d = validated_unit_field(d, "damage")?;
    let ln_i = law.d_intact.ln();
    let ln_c = law.d_cracked.ln();
    Ok(d.iter()
        .map(|&di| {
            let w = (1.0 - di).powf(law.p);
            (w * ln_i + (1.0 - w) * ln_c).exp()
        })
        .collect())
}

/// Local cement availability chi = (1 - d)^q.
pub fn cement_availability(d: &[f64], q: f64) -> Result<Vec<f64>> {
    let d = validated_unit_field(d, "damage")?;
    Ok(d.iter().map(|&di| (1.0 - di).powf(q)).collect())
}

/// Gate conductance G(u) = eps + (1 - eps) / (1 + exp(-(u - u_c) / du)).
pub fn gate(u: &[f64], spec: &GateSpec) -> Vec<f64> {
    u.iter().map(|&ui| gate_value(ui, spec)).collect()
}

pub fn gate_value(u: f64, spec: &GateSpec) -> f64 {
    let z = ((u - spec.u_critical) / spec.delta_u_gate).clamp(-500.0, 500.0);
    spec.epsilon_gate + (1.0 - spec.epsilon_gate) / (1.0 + (-z).exp())
}

/// Effective diffusivity of the crack membrane model: plain D(d) below the
/// damage threshold, gate-suppressed above it.
pub fn effective_diffusivity_cmm(
    d: &[f64],
    u: &[f64],
    law: &MaterialLaw,
    spec: &GateSpec,
) -> Result<Vec<f64>> {
    let diff = diffusivity(d, law)?;
    Ok(diff
        .iter()
        .zip(d.iter().zip(u))
        .map(|(&di, (&dmg, &ui))| {
            if dmg <= spec.d_threshold {
                di
            } else {
                gate_value(ui, spec) * di
            }
        })
        .collect())
}

/// Solves the Helmholtz smoothing problem
/// (M + gamma K) chi_eff = M chi with natural zero-flux boundaries.
pub fn helmholtz_filter(mesh: &Mesh, mass: &CsrMatrix, chi: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let asm = P1Assembler::new(mesh);
    let op = build_helmholtz_operator(&asm, gamma)?;
    apply_helmholtz(&op, mass, chi, chi, crate::solver::DEFAULT_REL_TOL)
}

/// Prebuilt Helmholtz operator; the matrix only depends on gamma and the
/// mesh, so simulation runs assemble it once.
pub struct HelmholtzOperator {
    matrix: Option<CsrMatrix>,
}

pub fn build_helmholtz_operator(asm: &P1Assembler, gamma: f64) -> Result<HelmholtzOperator> {
    if gamma < 0.0 {
        return Err(CoreError::InvalidConfig(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    if gamma == 0.0 {
        // The filter degenerates to the identity.
        return Ok(HelmholtzOperator { matrix: None });
    }
    let ones = vec![1.0; asm.n_nodes()];
    let matrix = asm.mass_plus_scaled_stiffness(gamma, &ones, CoeffAverage::Arithmetic, false)?;
    Ok(HelmholtzOperator {
        matrix: Some(matrix),
    })
}

pub fn apply_helmholtz(
    op: &HelmholtzOperator,
    mass: &CsrMatrix,
    chi: &[f64],
    warm_start: &[f64],
    rel_tol: f64,
) -> Result<Vec<f64>> {
    match &op.matrix {
        None => Ok(chi.to_vec()),
        Some(a) => {
            let mut rhs = vec![0.0; a.n];
            mass.matvec(chi, &mut rhs);
            solve_spd_from(a, &rhs, rel_tol, warm_start, 10 * a.n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_mass;
    use crate::mesh::build_unit_square_mesh;
    use std::f64::consts::PI;

    #[test]
    fn crack_centerline_has_full_damage() {
        let mesh = build_unit_square_mesh(16).unwrap();
        let crack = CrackSpec {
            beta: 0.0,
            sigma: 0.03,
        };
        let d = init_damage(&mesh, &crack);
        for (p, &di) in mesh.nodes.iter().zip(&d) {
            if (p[0] - 0.5).abs() < 1e-12 {
                assert_eq!(di, 1.0);
            }
            assert!(di > 0.0 && di <= 1.0);
        }
    }

    #[test]
    fn damage_at_three_sigma_offset() {
        // sigma^2 = 0.0005; at x = 0.5671 the exponent is
        // (0.0671)^2 / 0.0005 = 9.0048, so d = e^-9.0048 ~ 1.23e-4.
        let mesh = Mesh {
            nodes: vec![[0.5671, 0.25]],
            triangles: vec![],
            boundary_tags: vec![crate::mesh::BoundaryTag::Interior],
            n_div: 2,
        };
        let crack = CrackSpec {
            beta: 0.0,
            sigma: 0.0005f64.sqrt(),
        };
        let d = init_damage(&mesh, &crack);
        let expected = (-(0.0671f64 * 0.0671) / 0.0005).exp();
        assert!((d[0] - expected).abs() < 1e-12);
        assert!((d[0] - 1.23e-4).abs() < 2e-6);
    }

    #[test]
    fn mirror_angles_give_reflected_fields() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let np = mesh.n_div + 1;
        for beta in [0.3, 1.0, 2.2] {
            let d1 = init_damage(
                &mesh,
                &CrackSpec {
                    beta,
                    sigma: 0.0224,
                },
            );
            let d2 = init_damage(
                &mesh,
                &CrackSpec {
                    beta: PI - beta,
                    sigma: 0.0224,
                },
            );
            for j in 0..np {
                for i in 0..np {
                    let a = d1[j * np + i];
                    let b = d2[(np - 1 - j) * np + i];
                    assert!((a - b).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn diffusivity_endpoints_and_midpoint() {
        let law = MaterialLaw::default();
        let d = diffusivity(&[0.0, 1.0, 0.5], &law).unwrap();
        assert!((d[0] - 1e-8).abs() < 1e-22);
        assert!((d[1] - 1e-7).abs() < 1e-21);
        // Geometric mean at the midpoint for p = 1.
        assert!((d[2] - 10f64.powf(-7.5)).abs() < 1e-21);
    }

    #[test]
    fn diffusivity_sharpness_exponent() {
        let law = MaterialLaw {
            p: 2.0,
            ..Default::default()
        };
        let d = diffusivity(&[0.5], &law).unwrap();
        // (1-d)^p = 0.25: D = 1e-8^0.25 * 1e-7^0.75 = 10^-7.25.
        assert!((d[0] - 10f64.powf(-7.25)).abs() < 1e-20);
        assert!((d[0] - 5.623e-8).abs() < 1e-11);
    }

    #[test]
    fn damage_outside_unit_interval_rejected_or_clamped() {
        let law = MaterialLaw::default();
        assert!(diffusivity(&[1.0 + 1e-10], &law).is_ok());
        assert!(matches!(
            diffusivity(&[1.0 + 1e-6], &law),
            Err(CoreError::InvalidField(_))
        ));
        assert!(matches!(
            cement_availability(&[-1e-6], 1.0),
            Err(CoreError::InvalidField(_))
        ));
    }

    #[test]
    fn availability_endpoints_and_powers() {
        let chi = cement_availability(&[0.0, 1.0, 0.5], 1.0).unwrap();
        assert_eq!(chi[0], 1.0);
        assert_eq!(chi[1], 0.0);
        assert_eq!(chi[2], 0.5);
        let chi2 = cement_availability(&[0.5], 2.0).unwrap();
        assert!((chi2[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gate_midpoint_and_tails() {
        let spec = GateSpec {
            d_threshold: 0.5,
            u_critical: 0.5,
            delta_u_gate: 0.01,
            epsilon_gate: 1e-3,
        };
        let g = gate(&[0.5, 0.0, 1.0], &spec);
        assert!((g[0] - 0.5005).abs() < 1e-12);
        // exp(50) dominates: the offset from the floor is below 1e-20.
        assert!(g[1] - spec.epsilon_gate < 1e-20);
        assert!(1.0 - g[2] < 1e-20);
        // Extreme arguments must not overflow.
        let far = gate(&[1e6, -1e6], &spec);
        assert!(far.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cmm_diffusivity_branches() {
        let law = MaterialLaw::default();
        let spec = GateSpec::default();
        // Below threshold: plain diffusivity regardless of moisture.
        let low = effective_diffusivity_cmm(&[0.0, 0.0], &[0.0, 1.0], &law, &spec).unwrap();
        assert_eq!(low[0], low[1]);
        assert!((low[0] - 1e-8).abs() < 1e-22);
        // Fully damaged, dry: the gate floor times the cracked diffusivity.
        let shut = effective_diffusivity_cmm(&[1.0], &[0.0], &law, &spec).unwrap();
        assert!((shut[0] - spec.epsilon_gate * 1e-7).abs() < 1e-13);
        // Fully damaged, saturated: open gate.
        let open = effective_diffusivity_cmm(&[1.0], &[1.0], &law, &spec).unwrap();
        assert!((open[0] - 1e-7).abs() < 1e-11);
    }

    #[test]
    fn helmholtz_constant_fixed_point_and_identity() {
        let mesh = build_unit_square_mesh(8).unwrap();
        let mass = assemble_mass(&mesh);
        let chi = vec![0.37; mesh.n_nodes()];
        let out = helmholtz_filter(&mesh, &mass, &chi, 0.05).unwrap();
        for v in &out {
            assert!((v - 0.37).abs() < 1e-10);
        }
        let varied: Vec<f64> = (0..mesh.n_nodes()).map(|i| (i % 5) as f64 / 5.0).collect();
        let id = helmholtz_filter(&mesh, &mass, &varied, 0.0).unwrap();
        assert_eq!(id, varied);
    }

    #[test]
    fn helmholtz_preserves_integral() {
        let mesh = build_unit_square_mesh(12).unwrap();
        let mass = assemble_mass(&mesh);
        let chi: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|p| (7.3 * p[0]).sin().abs() * (3.1 * p[1] + 0.2).cos().abs())
            .collect();
        let out = helmholtz_filter(&mesh, &mass, &chi, 0.02).unwrap();
        let integral = |f: &[f64]| {
            let mut y = vec![0.0; f.len()];
            mass.matvec(f, &mut y);
            y.iter().sum::<f64>()
        };
        let before = integral(&chi);
        let after = integral(&out);
        assert!((before - after).abs() <= 1e-10 * before.abs());
        // The filter must not widen the value range.
        let (lo, hi) = chi.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        for v in &out {
            assert!(*v >= lo - 1e-8 && *v <= hi + 1e-8);
        }
    }
}
