//! Structured triangulation of the unit square.
//!
//! The domain is the 1 cm x 1 cm square, meshed as an `n_div` x `n_div` grid
//! of cells, each split into two right triangles. The split diagonal
//! alternates in a checkerboard pattern so that the triangulation is exactly
//! invariant under the reflections x -> 1-x and y -> 1-y; mirror-symmetry
//! tests of the coupled simulation rely on this.

use crate::error::{CoreError, Result};
use std::io::Write;

/// Geometric tolerance for classifying a node as lying on the left edge.
const LEFT_EDGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    /// x = 0 edge; water supply with a fixed moisture value.
    Left,
    /// Remaining edges; sealed (zero-flux).
    OtherBoundary,
    Interior,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Left => "LEFT",
            BoundaryTag::OtherBoundary => "OTHER_BOUNDARY",
            BoundaryTag::Interior => "INTERIOR",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    /// Node coordinates in cm, row-major by y then x.
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_tags: Vec<BoundaryTag>,
    pub n_div: usize,
}

/// Builds the structured unit-square mesh with `n_div` cells per side.
pub fn build_unit_square_mesh(n_div: usize) -> Result<Mesh> {
    if n_div < 2 {
        return Err(CoreError::InvalidConfig(format!(
            "n_div must be at least 2, got {n_div}"
        )));
    }
    let n = n_div;
    let np = n + 1;
    let h = 1.0 / n as f64;

    let mut nodes = Vec::with_capacity(np * np);
    let mut tags = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            let x = i as f64 * h;
            let y = j as f64 * h;
            nodes.push([x, y]);
            let tag = if x.abs() <= LEFT_EDGE_TOL {
                BoundaryTag::Left
            } else if i == n || j == 0 || j == n {
                BoundaryTag::OtherBoundary
            } else {
                BoundaryTag::Interior
            };
            tags.push(tag);
        }
    }

    let idx = |i: usize, j: usize| j * np + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            if (i + j) % 2 == 0 {
                // Diagonal a-c.
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                // Diagonal b-d.
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }

    Ok(Mesh {
        nodes,
        triangles,
        boundary_tags: tags,
        n_div,
    })
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Indices of nodes on the x = 0 edge.
    pub fn left_nodes(&self) -> Vec<usize> {
        self.boundary_tags
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == BoundaryTag::Left)
            .map(|(i, _)| i)
            .collect()
    }

    /// Twice the signed area of a triangle (positive for CCW ordering).
    pub fn signed_area_x2(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangles[tri];
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        let pc = self.nodes[c];
        (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
    }

    /// Dumps the mesh as a sectioned CSV: a `nodes` section with
    /// `id,x,y,tag` rows followed by a `triangles` section with
    /// `id,n0,n1,n2` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nodes")?;
        writeln!(w, "id,x,y,tag")?;
        for (i, (p, tag)) in self.nodes.iter().zip(&self.boundary_tags).enumerate() {
            writeln!(w, "{},{},{},{}", i, p[0], p[1], tag.as_str())?;
        }
        writeln!(w, "triangles")?;
        writeln!(w, "id,n0,n1,n2")?;
        for (i, t) in self.triangles.iter().enumerate() {
            writeln!(w, "{},{},{},{}", i, t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
