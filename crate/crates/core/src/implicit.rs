//! Wave sub-step: θ-method elevation solve and velocity back-substitution.
//!
//! The elevation increment solves
//!
//! ```text
//! (M + τ̃² g θ1 θ2 S) Δη = -τ̃ { Σ_i Q_i [H (u_i + θ1 Δu_i*)] + τ̃ θ1 g S η }
//! ```
//!
//! and the velocity increments follow from `M Δu_i = -τ̃ g Q_i (η + θ2 Δη)`.

use alloc::vec::Vec;

use crate::error::Error;
use crate::explicit::{check_finite, SourceIncrement, State};
use crate::fem::FemMatrices;
use crate::forcing::Forcing;
use crate::mesh::Mesh;
use crate::solver::{conjugate_gradient, CgOptions, SolveError};
use crate::sparse::CsrMatrix;

pub use crate::solver::LinearSolveStats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConfig {
    /// Implicit step τ̃, s.
    pub tau_tilde: f64,
    /// Weight of the new velocity in the continuity equation.
    pub theta1: f64,
    /// Weight of the new elevation in the momentum equations.
    pub theta2: f64,
}

impl ThetaConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tau_tilde > 0.0) {
            return Err(Error::Config(alloc::format!(
                "tau_tilde must be positive, got {}",
                self.tau_tilde
            )));
        }
        for (name, v) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(alloc::format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Mass matrix used to back-substitute the velocity increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityMass {
    #[default]
    Lumped,
    Consistent,
}

fn check_len(expected: usize, found: usize) -> Result<(), Error> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Right-hand side of the elevation increment system.
pub fn elevation_rhs(
    state: &State,
    d_star: &SourceIncrement,
    matrices: &FemMatrices,
    mesh: &Mesh,
    cfg: &ThetaConfig,
    g: f64,
) -> Result<Vec<f64>, Error> {
    let n = mesh.node_count();
    state.check(n)?;
    check_len(n, d_star.d_u1.len())?;
    check_len(n, d_star.d_u2.len())?;
    check_len(n, matrices.lumped.len())?;

    let depth = mesh.depths();
    let flux = |u: &[f64], du: &[f64]| -> Vec<f64> { (0..n).map(|j| depth[j] * (u[j] + cfg.theta1 * du[j])).collect() };
    let q1 = matrices.grad_x1.mul_vec(&flux(&state.u1, &d_star.d_u1));
    let q2 = matrices.grad_x2.mul_vec(&flux(&state.u2, &d_star.d_u2));
    let s_eta = matrices.stiffness.mul_vec(&state.eta);
    let tt = cfg.tau_tilde;
    Ok((0..n)
        .map(|j| -tt * (q1[j] + q2[j] + tt * cfg.theta1 * g * s_eta[j]))
        .collect())
}

/// Conjugate-gradient solve of `A Δη = rhs` with `Δη` prescribed at the
/// given nodes through symmetric elimination.
pub fn solve_elevation(
    a: &CsrMatrix,
    rhs: &[f64],
    prescribed: &[(usize, f64)],
    opts: &CgOptions,
) -> Result<(Vec<f64>, LinearSolveStats), SolveError> {
    if a.nrows() != rhs.len() {
        return Err(SolveError::Dimension {
            matrix: a.nrows(),
            rhs: rhs.len(),
        });
    }
    if prescribed.is_empty() {
        return conjugate_gradient(a, rhs, opts);
    }
    let (reduced, b) = a.eliminate_dirichlet(rhs, prescribed);
    let (mut x, stats) = conjugate_gradient(&reduced, &b, opts)?;
    // identity rows reproduce the prescribed values only up to the CG tolerance
    for &(k, v) in prescribed {
        x[k] = v;
    }
    Ok((x, stats))
}

/// Velocity increments of the wave sub-step, with the wall-normal component
/// removed at land nodes.
#[allow(clippy::too_many_arguments)]
pub fn velocity_correction(
    state: &State,
    d_eta: &[f64],
    matrices: &FemMatrices,
    mesh: &Mesh,
    cfg: &ThetaConfig,
    g: f64,
    mass: VelocityMass,
    opts: &CgOptions,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let n = mesh.node_count();
    check_len(n, state.eta.len())?;
    check_len(n, d_eta.len())?;
    let level: Vec<f64> = (0..n).map(|j| state.eta[j] + cfg.theta2 * d_eta[j]).collect();
    let scale = -cfg.tau_tilde * g;

    let mut out = [Vec::new(), Vec::new()];
    for (k, du) in out.iter_mut().enumerate() {
        let rhs: Vec<f64> = matrices
            .grad(k)
            .mul_vec(&level)
            .into_iter()
            .map(|v| scale * v)
            .collect();
        *du = match mass {
            VelocityMass::Lumped => rhs.iter().zip(&matrices.lumped).map(|(r, m)| r / m).collect(),
            VelocityMass::Consistent => conjugate_gradient(&matrices.mass, &rhs, opts)?.0,
        };
    }
    let [mut d_u1, mut d_u2] = out;
    project_walls(mesh, &mut d_u1, &mut d_u2);
    check_finite("d_u1**", &d_u1)?;
    check_finite("d_u2**", &d_u2)?;
    Ok((d_u1, d_u2))
}

/// Remove the constrained velocity components at land nodes.
pub fn project_walls(mesh: &Mesh, u1: &mut [f64], u2: &mut [f64]) {
    for &j in mesh.land_nodes() {
        if let Some(wall) = mesh.wall(j) {
            let [a, b] = wall.project([u1[j], u2[j]]);
            u1[j] = a;
            u2[j] = b;
        }
    }
}

/// Impose the boundary data at time `t`: tidal elevation on open nodes and
/// zero normal velocity on land nodes.
pub fn apply_boundaries(state: &State, mesh: &Mesh, forcing: &Forcing, t: f64) -> Result<State, Error> {
    let mut out = state.clone();
    if let Some(level) = forcing.tide_at(t)? {
        for &j in mesh.open_nodes() {
            out.eta[j] = level;
        }
    }
    project_walls(mesh, &mut out.u1, &mut out.u2);
    Ok(out)
}
