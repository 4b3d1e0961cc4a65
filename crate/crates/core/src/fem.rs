//! Global P1 matrices: consistent mass, lumped mass, depth-weighted
//! stiffness and the two gradient matrices.
//!
//! Element contributions, for a triangle of area `A` with basis gradients
//! `∇φ_i` and mean depth `H̄`:
//!
//! * mass `M_ij = A/12 · (1 + δ_ij)`
//! * stiffness `S_ij = A · H̄ · ∇φ_i·∇φ_j`
//! * gradient `Q_k,ij = A/3 · ∂φ_j/∂x_k` (same for every test index `i`)

use alloc::vec::Vec;

use crate::mesh::{Mesh, Triangle};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct FemMatrices {
    pub mass: CsrMatrix,
    /// Row sums of `mass`.
    pub lumped: Vec<f64>,
    pub stiffness: CsrMatrix,
    pub grad_x1: CsrMatrix,
    pub grad_x2: CsrMatrix,
}

impl FemMatrices {
    /// Gradient matrix `Q_k` for `k` in {0, 1}.
    pub fn grad(&self, k: usize) -> &CsrMatrix {
        match k {
            0 => &self.grad_x1,
            1 => &self.grad_x2,
            _ => panic!("gradient direction {k} out of range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("lumped mass at node {node} is {value}, expected positive")]
pub struct LumpingFault {
    pub node: usize,
    pub value: f64,
}

pub fn element_mass(t: &Triangle) -> [[f64; 3]; 3] {
    let off = t.area / 12.0;
    let diag = 2.0 * off;
    [[diag, off, off], [off, diag, off], [off, off, diag]]
}

pub fn element_stiffness(t: &Triangle, mean_depth: f64) -> [[f64; 3]; 3] {
    let mut s = [[0.0; 3]; 3];
    let w = t.area * mean_depth;
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = w * (t.grads[i][0] * t.grads[j][0] + t.grads[i][1] * t.grads[j][1]);
        }
    }
    s
}

/// `Q_k` element block for direction `k` in {0, 1}.
pub fn element_gradient(t: &Triangle, k: usize) -> [[f64; 3]; 3] {
    let row = [0, 1, 2].map(|j| t.area / 3.0 * t.grads[j][k]);
    [row; 3]
}

/// Assemble all matrices in element order.
pub fn assemble(mesh: &Mesh) -> Result<FemMatrices, LumpingFault> {
    let n = mesh.node_count();
    let pattern = CsrMatrix::from_mesh_pattern(n, mesh.triangles());
    let mut mass = pattern.clone();
    let mut stiffness = pattern.clone();
    let mut grad_x1 = pattern.clone();
    let mut grad_x2 = pattern;
    let depth = mesh.depths();

    for t in mesh.triangles() {
        let me = element_mass(t);
        let se = element_stiffness(t, t.mean(&depth));
        let q1 = element_gradient(t, 0);
        let q2 = element_gradient(t, 1);
        for (a, &i) in t.vertices.iter().enumerate() {
            for (b, &j) in t.vertices.iter().enumerate() {
                mass.add(i, j, me[a][b]);
                stiffness.add(i, j, se[a][b]);
                grad_x1.add(i, j, q1[a][b]);
                grad_x2.add(i, j, q2[a][b]);
            }
        }
    }

    let lumped = lump(&mass)?;
    Ok(FemMatrices {
        mass,
        lumped,
        stiffness,
        grad_x1,
        grad_x2,
    })
}

/// Row-sum lumping.
pub fn lump(mass: &CsrMatrix) -> Result<Vec<f64>, LumpingFault> {
    let sums = mass.row_sums();
    if let Some((node, &value)) = sums.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(LumpingFault { node, value });
    }
    Ok(sums)
}

/// `M + τ̃² g θ1 θ2 S`, the matrix of the elevation increment system.
pub fn helmholtz_matrix(m: &FemMatrices, tau_tilde: f64, theta1: f64, theta2: f64, g: f64) -> CsrMatrix {
    m.mass
        .add_scaled(&m.stiffness, tau_tilde * tau_tilde * g * theta1 * theta2)
}
