//! Source sub-step: Coriolis, Chezy friction and wind integrated by the
//! two-stage Taylor–Galerkin scheme.
//!
//! Fields are P1 at integer steps and element-constant at the half step.
//! For every node `j` the increment solves
//!
//! ```text
//! M_L ΔU*_j = τ ∫ { R½ + [R(n) - R̄(n)] } φ_j
//! ```
//!
//! where `R½ = R(Ū + τ/2 R̄)` is evaluated per element with the drag rate
//! frozen at the element mean of its nodal values. The elevation component
//! of the source vanishes, so only velocities change.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::mesh::Mesh;
use crate::stability::{drag_d, PhysicalParams};

/// Nodal elevation and velocities at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub eta: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub t: f64,
}

impl State {
    /// Uniform elevation and velocity.
    pub fn uniform(n: usize, eta: f64, u: [f64; 2], t: f64) -> Self {
        Self {
            eta: vec![eta; n],
            u1: vec![u[0]; n],
            u2: vec![u[1]; n],
            t,
        }
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn check(&self, n: usize) -> Result<(), Error> {
        for field in [&self.eta, &self.u1, &self.u2] {
            if field.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: field.len(),
                });
            }
        }
        check_finite("eta", &self.eta)?;
        check_finite("u1", &self.u1)?;
        check_finite("u2", &self.u2)
    }

    pub fn speed(&self, node: usize) -> f64 {
        libm::hypot(self.u1[node], self.u2[node])
    }

    /// Total water column `max(H + η, h_min)` at every node.
    pub fn total_depth(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.nodes()
            .iter()
            .zip(&self.eta)
            .map(|(n, eta)| (n.depth + eta).max(mesh.h_min()))
            .collect()
    }
}

pub(crate) fn check_finite(field: &'static str, values: &[f64]) -> Result<(), Error> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(Error::NonFinite { field, node }),
        None => Ok(()),
    }
}

/// Velocity increment of the source sub-step; the elevation increment is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceIncrement {
    pub d_u1: Vec<f64>,
    pub d_u2: Vec<f64>,
}

impl SourceIncrement {
    pub fn zeros(n: usize) -> Self {
        Self {
            d_u1: vec![0.0; n],
            d_u2: vec![0.0; n],
        }
    }
}

/// `R = (k0 u2 - D u1 + w1, -k0 u1 - D u2 + w2)` for a frozen drag rate and
/// wind acceleration.
#[inline]
fn source(k0: f64, drag: f64, wind: [f64; 2], u: [f64; 2]) -> [f64; 2] {
    [k0 * u[1] - drag * u[0] + wind[0], -k0 * u[0] - drag * u[1] + wind[1]]
}

/// Frozen per-node coefficients: drag rate and wind acceleration `ξ|v|v/h`.
fn frozen_coefficients(
    state: &State,
    mesh: &Mesh,
    params: &PhysicalParams,
    wind: [f64; 2],
) -> (Vec<f64>, Vec<[f64; 2]>) {
    let h = state.total_depth(mesh);
    let wind_speed = libm::hypot(wind[0], wind[1]);
    let drag = (0..h.len()).map(|j| drag_d(state.speed(j), h[j], params)).collect();
    let accel = h
        .iter()
        .map(|&hj| {
            let s = params.xi * wind_speed / hj;
            [s * wind[0], s * wind[1]]
        })
        .collect();
    (drag, accel)
}

/// Nodal source vector at the current state.
pub fn source_terms(state: &State, mesh: &Mesh, params: &PhysicalParams, wind: [f64; 2]) -> Vec<[f64; 2]> {
    let (drag, accel) = frozen_coefficients(state, mesh, params, wind);
    (0..state.len())
        .map(|j| source(params.k0, drag[j], accel[j], [state.u1[j], state.u2[j]]))
        .collect()
}

/// One explicit sub-step of length `tau`.
pub fn taylor_galerkin_increment(
    state: &State,
    mesh: &Mesh,
    lumped: &[f64],
    params: &PhysicalParams,
    wind: [f64; 2],
    tau: f64,
) -> Result<SourceIncrement, Error> {
    let n = mesh.node_count();
    state.check(n)?;
    if lumped.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: lumped.len(),
        });
    }
    let k0 = params.k0;
    let (drag, accel) = frozen_coefficients(state, mesh, params, wind);
    let rn: Vec<[f64; 2]> = (0..n)
        .map(|j| source(k0, drag[j], accel[j], [state.u1[j], state.u2[j]]))
        .collect();

    let mut load = vec![[0.0; 2]; n];
    for t in mesh.triangles() {
        let v = t.vertices;
        let mean = |f: &dyn Fn(usize) -> f64| (f(v[0]) + f(v[1]) + f(v[2])) / 3.0;
        let u_bar = [mean(&|j| state.u1[j]), mean(&|j| state.u2[j])];
        let r_bar = [mean(&|j| rn[j][0]), mean(&|j| rn[j][1])];
        let d_bar = mean(&|j| drag[j]);
        let w_bar = [mean(&|j| accel[j][0]), mean(&|j| accel[j][1])];

        let half = [u_bar[0] + 0.5 * tau * r_bar[0], u_bar[1] + 0.5 * tau * r_bar[1]];
        let r_half = source(k0, d_bar, w_bar, half);

        let third = t.area / 3.0;
        let twelfth = t.area / 12.0;
        for &j in &v {
            for c in 0..2 {
                // ∫ R½ φ_j = A/3 R½ and ∫ (R - R̄) φ_j = A/12 (R_j - R̄)
                load[j][c] += tau * (third * r_half[c] + twelfth * (rn[j][c] - r_bar[c]));
            }
        }
    }

    let d_u1: Vec<f64> = (0..n).map(|j| load[j][0] / lumped[j]).collect();
    let d_u2: Vec<f64> = (0..n).map(|j| load[j][1] / lumped[j]).collect();
    check_finite("d_u1*", &d_u1)?;
    check_finite("d_u2*", &d_u2)?;
    Ok(SourceIncrement { d_u1, d_u2 })
}
