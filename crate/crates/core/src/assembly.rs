//! P1 Galerkin assembly on the triangulated unit square.
//!
//! Element matrices for linear triangles:
//!   mass      M_e = (A/12) [2 1 1; 1 2 1; 1 1 2]
//!   stiffness K_e[i][j] = D_e (b_i b_j + c_i c_j) / (4A)
//! with b_i = y_j - y_k, c_i = x_k - x_j (cyclic) and A the triangle area.
//! The element diffusion coefficient D_e is reduced from the three nodal
//! values by a configurable rule.

use crate::error::{CoreError, Result};
use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;

/// Rule reducing three nodal coefficient values to one per-element value.
///
/// All three agree on constant fields. The arithmetic mean is the default
/// for the standalone assembly operations. The geometric mean matches
/// evaluating the log-linear diffusivity law at the element-mean damage.
/// The harmonic mean weights small values heavily, which preserves thin
/// low-diffusivity barriers (one node wide) that the other rules
/// short-circuit; the membrane model's gate relies on it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffAverage {
    #[default]
    Arithmetic,
    Geometric,
    Harmonic,
}

impl CoeffAverage {
    fn reduce(self, a: f64, b: f64, c: f64) -> f64 {
        match self {
            CoeffAverage::Arithmetic => (a + b + c) / 3.0,
            CoeffAverage::Geometric => (a * b * c).cbrt(),
            CoeffAverage::Harmonic => 3.0 / (1.0 / a + 1.0 / b + 1.0 / c),
        }
    }
}

/// Precomputed geometry and sparsity pattern for repeated assembly on a
/// fixed mesh.
pub struct P1Assembler {
    n: usize,
    tris: Vec<[usize; 3]>,
    /// Per triangle: area and gradient coefficients (b_i, c_i).
    geom: Vec<TriGeom>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// CSR slot of entry (i, j) of each element matrix, row-major.
    slots: Vec<[usize; 9]>,
    /// Consistent mass values aligned with the CSR pattern.
    mass_values: Vec<f64>,
    /// Row-lumped mass diagonal.
    lumped: Vec<f64>,
}

struct TriGeom {
    area: f64,
    b: [f64; 3],
    c: [f64; 3],
}

impl P1Assembler {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.n_nodes();
        let mut geom = Vec::with_capacity(mesh.n_triangles());
        for t in &mesh.triangles {
            let p: Vec<[f64; 2]> = t.iter().map(|&i| mesh.nodes[i]).collect();
            let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let mut b = [0.0; 3];
            let mut c = [0.0; 3];
            for i in 0..3 {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                b[i] = p[j][1] - p[k][1];
                c[i] = p[k][0] - p[j][0];
            }
            geom.push(TriGeom {
                area: 0.5 * area2,
                b,
                c,
            });
        }

        // Sparsity pattern from all element couplings.
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(mesh.n_triangles() * 9);
        for t in &mesh.triangles {
            for &r in t {
                for &c in t {
                    pairs.push((r, c));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(pairs.len());
        for &(r, c) in &pairs {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }

        let find_slot = |r: usize, c: usize| -> usize {
            let lo = row_ptr[r];
            let hi = row_ptr[r + 1];
            lo + col_idx[lo..hi].binary_search(&c).expect("pattern slot")
        };

        let mut slots = Vec::with_capacity(mesh.n_triangles());
        for t in &mesh.triangles {
            let mut s = [0usize; 9];
            for i in 0..3 {
                for j in 0..3 {
                    s[3 * i + j] = find_slot(t[i], t[j]);
                }
            }
            slots.push(s);
        }

        let mut mass_values = vec![0.0; col_idx.len()];
        let mut lumped = vec![0.0; n];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let m_off = geom[t].area / 12.0;
            for i in 0..3 {
                for j in 0..3 {
                    let v = if i == j { 2.0 * m_off } else { m_off };
                    mass_values[slots[t][3 * i + j]] += v;
                }
                lumped[tri[i]] += geom[t].area / 3.0;
            }
        }

        P1Assembler {
            n,
            tris: mesh.triangles.clone(),
            geom,
            row_ptr,
            col_idx,
            slots,
            mass_values,
            lumped,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    fn empty_like_pattern(&self) -> CsrMatrix {
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: vec![0.0; self.col_idx.len()],
        }
    }

    /// Consistent P1 mass matrix.
    pub fn mass(&self) -> CsrMatrix {
        let mut m = self.empty_like_pattern();
        m.values.copy_from_slice(&self.mass_values);
        m
    }

    /// Row-lumped mass diagonal.
    pub fn lumped_mass(&self) -> Vec<f64> {
        self.lumped.clone()
    }

    pub fn lumped_slice(&self) -> &[f64] {
        &self.lumped
    }

    /// Stiffness matrix for a strictly positive nodal coefficient field.
    pub fn stiffness(&self, coeff: &[f64], avg: CoeffAverage) -> Result<CsrMatrix> {
        let mut k = self.empty_like_pattern();
        self.add_stiffness(&mut k.values, coeff, avg, 1.0)?;
        Ok(k)
    }

    /// System matrix M + scale * K(coeff); `mass_values` of None means the
    /// lumped diagonal is used for the mass part.
    pub fn mass_plus_scaled_stiffness(
        &self,
        scale: f64,
        coeff: &[f64],
        avg: CoeffAverage,
        lumped: bool,
    ) -> Result<CsrMatrix> {
        let mut a = self.empty_like_pattern();
        if lumped {
            for r in 0..self.n {
                let lo = self.row_ptr[r];
                let hi = self.row_ptr[r + 1];
                let d = lo + self.col_idx[lo..hi].binary_search(&r).expect("diag slot");
                a.values[d] = self.lumped[r];
            }
        } else {
            a.values.copy_from_slice(&self.mass_values);
        }
        self.add_stiffness(&mut a.values, coeff, avg, scale)?;
        Ok(a)
    }

    fn add_stiffness(
        &self,
        values: &mut [f64],
        coeff: &[f64],
        avg: CoeffAverage,
        scale: f64,
    ) -> Result<()> {
        if coeff.len() != self.n {
            return Err(CoreError::InvalidField(format!(
                "coefficient field has {} entries, mesh has {} nodes",
                coeff.len(),
                self.n
            )));
        }
        if let Some(bad) = coeff.iter().find(|v| !(**v > 0.0)) {
            return Err(CoreError::InvalidField(format!(
                "diffusion coefficient must be strictly positive, got {bad}"
            )));
        }
        for (t, tri) in self.tris.iter().enumerate() {
            let g = &self.geom[t];
            let d = avg.reduce(coeff[tri[0]], coeff[tri[1]], coeff[tri[2]]);
            let f = scale * d / (4.0 * g.area);
            let slots = &self.slots[t];
            for i in 0..3 {
                for j in 0..3 {
                    values[slots[3 * i + j]] += f * (g.b[i] * g.b[j] + g.c[i] * g.c[j]);
                }
            }
        }
        Ok(())
    }
}

/// One-shot consistent mass assembly.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    P1Assembler::new(mesh).mass()
}

/// One-shot stiffness assembly with the default (arithmetic) element
/// coefficient rule.
pub fn assemble_stiffness(mesh: &Mesh, coeff: &[f64]) -> Result<CsrMatrix> {
    P1Assembler::new(mesh).stiffness(coeff, CoeffAverage::Arithmetic)
}

pub fn assemble_stiffness_with(
    mesh: &Mesh,
    coeff: &[f64],
    avg: CoeffAverage,
) -> Result<CsrMatrix> {
    P1Assembler::new(mesh).stiffness(coeff, avg)
}

/// Imposes `value` at the given nodes by symmetric row/column elimination,
/// moving known column contributions to the right-hand side. The reduced
/// system stays symmetric positive definite and its solution equals `value`
/// exactly at constrained nodes.
pub fn apply_dirichlet(system: &mut CsrMatrix, rhs: &mut [f64], nodes: &[usize], value: f64) {
    if nodes.is_empty() {
        return;
    }
    let mut constrained = vec![false; system.n];
    for &i in nodes {
        constrained[i] = true;
    }
    for r in 0..system.n {
        if constrained[r] {
            for k in system.row_ptr[r]..system.row_ptr[r + 1] {
                system.values[k] = if system.col_idx[k] == r { 1.0 } else { 0.0 };
            }
            rhs[r] = value;
        } else {
            for k in system.row_ptr[r]..system.row_ptr[r + 1] {
                if constrained[system.col_idx[k]] {
                    rhs[r] -= system.values[k] * value;
                    system.values[k] = 0.0;
                }
            }
        }
    }
}
