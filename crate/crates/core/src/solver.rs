//! Jacobi-preconditioned conjugate gradients and the implicit diffusion
//! step built on it.

use crate::assembly::{apply_dirichlet, CoeffAverage, P1Assembler};
use crate::error::{CoreError, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Solves the symmetric positive definite system A x = b to
/// ||A x - b|| <= rel_tol ||b||, starting from the zero vector with an
/// iteration cap of 10 n.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let x0 = vec![0.0; a.n];
    solve_spd_from(a, b, rel_tol, &x0, 10 * a.n.max(1))
}

/// Conjugate gradient solve with an explicit starting guess. The result is
/// a deterministic function of the inputs.
pub fn solve_spd_from(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    x0: &[f64],
    max_iter: usize,
) -> Result<Vec<f64>> {
    assert!(rel_tol > 0.0 && rel_tol < 1.0, "rel_tol must be in (0, 1)");
    let n = a.n;
    let norm_b = norm(b);
    if norm_b == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = rel_tol * norm_b;

    let inv_diag: Vec<f64> = a
        .diag()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let mut resid = norm(&r);
    if resid <= target {
        return Ok(x);
    }
    for it in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(CoreError::SolverDivergence {
                iterations: it,
                residual: resid / norm_b,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        resid = norm(&r);
        if resid <= target {
            // Recurrence residuals can drift; accept only if the true
            // residual agrees.
            a.matvec(&x, &mut ap);
            let mut true_res = 0.0;
            for i in 0..n {
                let d = b[i] - ap[i];
                true_res += d * d;
                r[i] = d;
            }
            let true_res = true_res.sqrt();
            if true_res <= target {
                return Ok(x);
            }
            resid = true_res;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(CoreError::SolverDivergence {
        iterations: max_iter,
        residual: resid / norm_b,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// One backward Euler step of du/dt = div(coeff grad u):
/// (M + dt K(coeff)) u_new = M u_old, with `value` imposed on
/// `dirichlet_nodes` and natural zero-flux conditions elsewhere.
pub fn backward_euler_step(
    mesh: &Mesh,
    mass: &CsrMatrix,
    u_old: &[f64],
    coeff: &[f64],
    dt: f64,
    dirichlet_nodes: &[usize],
    dirichlet_value: f64,
) -> Result<Vec<f64>> {
    let asm = P1Assembler::new(mesh);
    backward_euler_step_with(
        &asm,
        mass,
        u_old,
        coeff,
        dt,
        dirichlet_nodes,
        dirichlet_value,
        CoeffAverage::Arithmetic,
        DEFAULT_REL_TOL,
        false,
    )
}

/// Backward Euler step on a prebuilt assembler; used by the simulation
/// loop where the mesh is fixed across many steps. With `lumped` set, the
/// mass part of the system and the right-hand side use the row-lumped
/// diagonal instead of `mass`.
#[allow(clippy::too_many_arguments)]
pub fn backward_euler_step_with(
    asm: &P1Assembler,
    mass: &CsrMatrix,
    u_old: &[f64],
    coeff: &[f64],
    dt: f64,
    dirichlet_nodes: &[usize],
    dirichlet_value: f64,
    avg: CoeffAverage,
    rel_tol: f64,
    lumped: bool,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(CoreError::InvalidConfig(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let n = asm.n_nodes();
    let mut rhs = vec![0.0; n];
    if lumped {
        for (r, (m, u)) in asm.lumped_slice().iter().zip(u_old).enumerate() {
            rhs[r] = m * u;
        }
    } else {
        mass.matvec(u_old, &mut rhs);
    }
    let mut a = asm.mass_plus_scaled_stiffness(dt, coeff, avg, lumped)?;
    apply_dirichlet(&mut a, &mut rhs, dirichlet_nodes, dirichlet_value);
    // Starting from u_old with constrained entries preset keeps those rows
    // at zero residual, so the solve returns them exactly.
    let mut x0 = u_old.to_vec();
    for &i in dirichlet_nodes {
        x0[i] = dirichlet_value;
    }
    solve_spd_from(&a, &rhs, rel_tol, &x0, 10 * n)
}
