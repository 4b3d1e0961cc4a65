//! Outer time loop: sub-cycled explicit source steps, one implicit wave
//! step, boundary data and the stability gate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::explicit::{taylor_galerkin_increment, SourceIncrement, State};
use crate::fem::{assemble, helmholtz_matrix, FemMatrices};
use crate::forcing::Forcing;
use crate::implicit::{
    apply_boundaries, elevation_rhs, project_walls, solve_elevation, velocity_correction, LinearSolveStats,
    ThetaConfig, VelocityMass,
};
use crate::mesh::Mesh;
use crate::solver::CgOptions;
use crate::stability::{cubic_coefficients, drag_d, tau_c_closed_form, PhysicalParams};

/// Velocity floor applied inside the stability gate only, m/s.
pub const DEFAULT_U_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateMode {
    #[default]
    Enforce,
    Warn,
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Explicit step τ, s.
    pub tau: f64,
    pub theta: ThetaConfig,
    /// Simulated time, s; a multiple of τ̃.
    pub duration: f64,
    /// Snapshot spacing, s; a multiple of τ̃. Zero writes the initial snapshot only.
    pub snapshot_interval: f64,
    pub gauges: Vec<usize>,
    pub gate: GateMode,
    pub u_floor: f64,
    pub cg: CgOptions,
    pub velocity_mass: VelocityMass,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tau: 3.0,
            theta: ThetaConfig {
                tau_tilde: 300.0,
                theta1: 0.55,
                theta2: 0.55,
            },
            duration: 3600.0,
            snapshot_interval: 3600.0,
            gauges: Vec::new(),
            gate: GateMode::Enforce,
            u_floor: DEFAULT_U_FLOOR,
            cg: CgOptions::default(),
            velocity_mass: VelocityMass::Lumped,
        }
    }
}

/// `value / unit` when it is a whole number (to 1e-9 relative).
fn whole_multiple(value: f64, unit: f64) -> Option<usize> {
    let k = libm::round(value / unit);
    (k >= 0.0 && libm::fabs(k * unit - value) <= 1e-9 * value.max(unit)).then_some(k as usize)
}

impl RunConfig {
    /// Explicit sub-steps per implicit step.
    pub fn n_sub(&self) -> Result<usize, Error> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(alloc::format!("tau must be positive, got {}", self.tau)));
        }
        match whole_multiple(self.theta.tau_tilde, self.tau) {
            Some(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(alloc::format!(
                "tau_tilde = {} is not a whole multiple of tau = {}",
                self.theta.tau_tilde,
                self.tau
            ))),
        }
    }

    pub fn outer_steps(&self) -> Result<usize, Error> {
        whole_multiple(self.duration, self.theta.tau_tilde).ok_or_else(|| {
            Error::Config(alloc::format!(
                "duration = {} is not a whole multiple of tau_tilde = {}",
                self.duration,
                self.theta.tau_tilde
            ))
        })
    }

    /// Outer steps between snapshots; `None` disables periodic snapshots.
    pub fn snapshot_every(&self) -> Result<Option<usize>, Error> {
        if self.snapshot_interval == 0.0 {
            return Ok(None);
        }
        match whole_multiple(self.snapshot_interval, self.theta.tau_tilde) {
            Some(k) if k >= 1 => Ok(Some(k)),
            _ => Err(Error::Config(alloc::format!(
                "snapshot_interval = {} is not a positive multiple of tau_tilde = {}",
                self.snapshot_interval,
                self.theta.tau_tilde
            ))),
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<(), Error> {
        self.theta.validate()?;
        self.n_sub()?;
        self.outer_steps()?;
        self.snapshot_every()?;
        if !(self.u_floor >= 0.0) {
            return Err(Error::Config(alloc::format!(
                "u_floor must be non-negative, got {}",
                self.u_floor
            )));
        }
        if let Some(&g) = self.gauges.iter().find(|&&g| g >= mesh.node_count()) {
            return Err(Error::Config(alloc::format!(
                "gauge node {g} does not exist (mesh has {} nodes)",
                mesh.node_count()
            )));
        }
        Ok(())
    }
}

/// Result of the stability gate at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateVerdict {
    pub passed: bool,
    /// Smallest critical step over all nodes; `None` when some node has D = 0.
    pub min_tau_c: Option<f64>,
    pub worst_node: usize,
    pub worst_drag: f64,
    /// Whether the velocity floor replaced the true speed at any node.
    pub floor_active: bool,
}

/// Critical explicit step at every node from its current drag rate; the
/// verdict is `tau < min τ_c`.
pub fn stability_gate(state: &State, mesh: &Mesh, params: &PhysicalParams, tau: f64, u_floor: f64) -> GateVerdict {
    let h = state.total_depth(mesh);
    let mut verdict = GateVerdict {
        passed: true,
        min_tau_c: Some(f64::INFINITY),
        worst_node: 0,
        worst_drag: 0.0,
        floor_active: false,
    };
    for j in 0..mesh.node_count() {
        let speed = state.speed(j);
        if speed < u_floor {
            verdict.floor_active = true;
        }
        let drag = drag_d(speed.max(u_floor), h[j], params);
        let tau_c = tau_c_closed_form(&cubic_coefficients(params.k0, drag)).ok();
        let worse = match (tau_c, verdict.min_tau_c) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(b)) => a < b,
        };
        if worse {
            verdict.min_tau_c = tau_c;
            verdict.worst_node = j;
            verdict.worst_drag = drag;
        }
    }
    verdict.passed = matches!(verdict.min_tau_c, Some(tc) if tau < tc);
    verdict
}

/// Everything one outer step produced. `state` is computed as
/// `(U(n) + dU*) + dU**` from exactly these increments.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: State,
    pub d_star: SourceIncrement,
    pub d_eta: Vec<f64>,
    pub d_u1: Vec<f64>,
    pub d_u2: Vec<f64>,
    pub solve: LinearSolveStats,
    pub gate: Option<GateVerdict>,
}

/// Advance one implicit step τ̃.
///
/// Boundary data enter through the increments: open nodes receive the
/// elevation increment that lands on the tide at `t + τ̃`, and the velocity
/// increments have their wall-normal part removed at land nodes.
pub fn step(
    state: &State,
    mesh: &Mesh,
    matrices: &FemMatrices,
    params: &PhysicalParams,
    cfg: &RunConfig,
    forcing: &Forcing,
) -> Result<StepOutput, Error> {
    let n = mesh.node_count();
    state.check(n)?;
    let n_sub = cfg.n_sub()?;
    let theta = &cfg.theta;

    let gate = match cfg.gate {
        GateMode::Off => None,
        mode => {
            let v = stability_gate(state, mesh, params, cfg.tau, cfg.u_floor);
            if !v.passed {
                let tau_c = v.min_tau_c.unwrap_or(0.0);
                if mode == GateMode::Enforce {
                    return Err(Error::GateViolation {
                        tau: cfg.tau,
                        node: v.worst_node,
                        drag: v.worst_drag,
                        tau_c,
                    });
                }
                log::warn!(
                    "t = {} s: tau = {} s exceeds tau_c = {tau_c} s at node {}",
                    state.t,
                    cfg.tau,
                    v.worst_node
                );
            }
            Some(v)
        }
    };

    // a) sub-cycled source steps
    let mut d_star = SourceIncrement::zeros(n);
    let mut work = state.clone();
    for k in 0..n_sub {
        let t = state.t + k as f64 * cfg.tau;
        let wind = forcing.wind_at(t)?;
        let mut inc = taylor_galerkin_increment(&work, mesh, &matrices.lumped, params, wind, cfg.tau)?;
        project_walls(mesh, &mut inc.d_u1, &mut inc.d_u2);
        for j in 0..n {
            work.u1[j] += inc.d_u1[j];
            work.u2[j] += inc.d_u2[j];
            d_star.d_u1[j] += inc.d_u1[j];
            d_star.d_u2[j] += inc.d_u2[j];
        }
        work.t = t + cfg.tau;
    }

    // b) elevation increment
    let t_next = state.t + theta.tau_tilde;
    let rhs = elevation_rhs(state, &d_star, matrices, mesh, theta, params.g)?;
    let target = forcing.tide_at(t_next)?;
    let prescribed: Vec<(usize, f64)> = mesh
        .open_nodes()
        .iter()
        .map(|&j| (j, target.map_or(0.0, |level| level - state.eta[j])))
        .collect();
    let a = helmholtz_matrix(matrices, theta.tau_tilde, theta.theta1, theta.theta2, params.g);
    let (d_eta, solve) = solve_elevation(&a, &rhs, &prescribed, &cfg.cg)?;

    // c) velocity increments
    let (d_u1, d_u2) = velocity_correction(
        state,
        &d_eta,
        matrices,
        mesh,
        theta,
        params.g,
        cfg.velocity_mass,
        &cfg.cg,
    )?;

    // d) U(n+1) = U(n) + dU* + dU**
    let next = State {
        eta: (0..n).map(|j| state.eta[j] + d_eta[j]).collect(),
        u1: (0..n).map(|j| (state.u1[j] + d_star.d_u1[j]) + d_u1[j]).collect(),
        u2: (0..n).map(|j| (state.u2[j] + d_star.d_u2[j]) + d_u2[j]).collect(),
        t: t_next,
    };
    next.check(n)?;

    Ok(StepOutput {
        state: next,
        d_star,
        d_eta,
        d_u1,
        d_u2,
        solve,
        gate,
    })
}

/// `Σ_j M_L[j] η_j`.
pub fn mass_integral(lumped: &[f64], eta: &[f64]) -> f64 {
    lumped.iter().zip(eta).map(|(m, e)| m * e).sum()
}

/// Per-step line handed to the run log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub solve: LinearSolveStats,
    pub min_tau_c: Option<f64>,
}

/// Receives output while a run progresses.
pub trait Sink {
    fn snapshot(&mut self, step: usize, state: &State, mesh: &Mesh) -> Result<(), String>;
    /// Elevation at each configured gauge node, in configuration order.
    fn gauges(&mut self, t: f64, values: &[(usize, f64)]) -> Result<(), String>;
    fn step_log(&mut self, record: &StepRecord) -> Result<(), String>;
}

/// Discards all output.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl Sink for NullSink {
    fn snapshot(&mut self, _: usize, _: &State, _: &Mesh) -> Result<(), String> {
        Ok(())
    }
    fn gauges(&mut self, _: f64, _: &[(usize, f64)]) -> Result<(), String> {
        Ok(())
    }
    fn step_log(&mut self, _: &StepRecord) -> Result<(), String> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Largest `|mass - mass_initial| / |mass_initial|` seen (absolute drift when the initial mass is zero).
    pub max_mass_drift: f64,
    pub worst_solve: LinearSolveStats,
    pub total_cg_iterations: usize,
    pub gate_violations: usize,
    pub floor_active_steps: usize,
    pub min_tau_c: Option<f64>,
    pub final_state: State,
}

impl RunSummary {
    fn new(state: &State, mass: f64) -> Self {
        let (lo, hi) = min_max(&state.eta);
        Self {
            steps: 0,
            eta_min: lo,
            eta_max: hi,
            mass_initial: mass,
            mass_final: mass,
            max_mass_drift: 0.0,
            worst_solve: LinearSolveStats::default(),
            total_cg_iterations: 0,
            gate_violations: 0,
            floor_active_steps: 0,
            min_tau_c: None,
            final_state: state.clone(),
        }
    }

    fn record(&mut self, out: &StepOutput, mass: f64) {
        self.steps += 1;
        let (lo, hi) = min_max(&out.state.eta);
        self.eta_min = self.eta_min.min(lo);
        self.eta_max = self.eta_max.max(hi);
        self.mass_final = mass;
        let scale = if self.mass_initial != 0.0 {
            libm::fabs(self.mass_initial)
        } else {
            1.0
        };
        self.max_mass_drift = self.max_mass_drift.max(libm::fabs(mass - self.mass_initial) / scale);
        self.worst_solve.iterations = self.worst_solve.iterations.max(out.solve.iterations);
        self.worst_solve.relative_residual = self.worst_solve.relative_residual.max(out.solve.relative_residual);
        self.total_cg_iterations += out.solve.iterations;
        if let Some(g) = out.gate {
            self.gate_violations += usize::from(!g.passed);
            self.floor_active_steps += usize::from(g.floor_active);
            if let Some(tc) = g.min_tau_c {
                self.min_tau_c = Some(self.min_tau_c.map_or(tc, |m: f64| m.min(tc)));
            }
        }
        self.final_state = out.state.clone();
    }

    /// Relative drift between the first and last mass integrals.
    pub fn mass_drift(&self) -> f64 {
        let scale = if self.mass_initial != 0.0 {
            libm::fabs(self.mass_initial)
        } else {
            1.0
        };
        libm::fabs(self.mass_final - self.mass_initial) / scale
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

/// A run that stopped early, with the summary up to the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    pub summary: alloc::boxed::Box<RunSummary>,
    pub error: Error,
}

/// Mesh, assembled matrices and configuration of one simulation.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub mesh: Mesh,
    pub matrices: FemMatrices,
    pub params: PhysicalParams,
    pub cfg: RunConfig,
}

impl Simulator {
    pub fn new(mesh: Mesh, params: PhysicalParams, cfg: RunConfig) -> Result<Self, Error> {
        params.validate().map_err(|e| Error::Config(e.into()))?;
        cfg.validate(&mesh)?;
        let matrices = assemble(&mesh).map_err(|f| Error::Config(alloc::format!("{f}")))?;
        Ok(Self {
            mesh,
            matrices,
            params,
            cfg,
        })
    }

    pub fn step(&self, state: &State, forcing: &Forcing) -> Result<StepOutput, Error> {
        step(state, &self.mesh, &self.matrices, &self.params, &self.cfg, forcing)
    }

    pub fn mass(&self, state: &State) -> f64 {
        mass_integral(&self.matrices.lumped, &state.eta)
    }

    fn gauge_values(&self, state: &State) -> Vec<(usize, f64)> {
        self.cfg.gauges.iter().map(|&g| (g, state.eta[g])).collect()
    }

    /// Run for the configured duration. Boundary data are imposed on the
    /// initial state before the first snapshot.
    pub fn run(&self, initial: &State, forcing: &Forcing, sink: &mut dyn Sink) -> Result<RunSummary, RunFailure> {
        let fail = |summary: &RunSummary, error: Error| RunFailure {
            summary: alloc::boxed::Box::new(summary.clone()),
            error,
        };
        let placeholder = RunSummary::new(initial, 0.0);
        let setup = || -> Result<(usize, Option<usize>, State), Error> {
            initial.check(self.mesh.node_count())?;
            let steps = self.cfg.outer_steps()?;
            let every = self.cfg.snapshot_every()?;
            let state = apply_boundaries(initial, &self.mesh, forcing, initial.t)?;
            Ok((steps, every, state))
        };
        let (steps, every, mut state) = setup().map_err(|e| fail(&placeholder, e))?;

        let mut summary = RunSummary::new(&state, self.mass(&state));
        sink.snapshot(0, &state, &self.mesh)
            .and_then(|_| sink.gauges(state.t, &self.gauge_values(&state)))
            .map_err(|e| fail(&summary, Error::Sink(e)))?;

        for k in 0..steps {
            let out = self
                .step(&state, forcing)
                .map_err(|e| fail(&summary, e.at_step(k + 1)))?;
            let mass = self.mass(&out.state);
            summary.record(&out, mass);
            state = out.state;
            let record = StepRecord {
                step: k + 1,
                t: state.t,
                mass,
                solve: out.solve,
                min_tau_c: out.gate.and_then(|g| g.min_tau_c),
            };
            let mut emit = || -> Result<(), String> {
                sink.step_log(&record)?;
                sink.gauges(state.t, &self.gauge_values(&state))?;
                if every.is_some_and(|e| (k + 1) % e == 0) {
                    sink.snapshot(k + 1, &state, &self.mesh)?;
                }
                Ok(())
            };
            emit().map_err(|e| fail(&summary, Error::Sink(e)))?;
        }
        Ok(summary)
    }
}

/// Gauss bump `amplitude · exp(-|x - centre|² / (2 width²))` sampled at the nodes.
pub fn gaussian_elevation(mesh: &Mesh, centre: [f64; 2], width: f64, amplitude: f64) -> Vec<f64> {
    mesh.nodes()
        .iter()
        .map(|n| {
            let dx = n.x1 - centre[0];
            let dy = n.x2 - centre[1];
            amplitude * libm::exp(-(dx * dx + dy * dy) / (2.0 * width * width))
        })
        .collect()
}

/// Structured rectangle `[0, lx] × [0, ly]` split into `nx × ny` cells of two
/// triangles each, all boundary nodes tagged `boundary`.
pub fn rectangle_mesh(
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    depth: impl Fn(f64, f64) -> f64,
    boundary: crate::mesh::BoundaryTag,
    h_min: f64,
) -> Result<Mesh, crate::mesh::MeshError> {
    use crate::mesh::{BoundaryTag, Node};
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = lx * i as f64 / nx as f64;
            let y = ly * j as f64 / ny as f64;
            let on_edge = i == 0 || j == 0 || i == nx || j == ny;
            let tag = if on_edge { boundary } else { BoundaryTag::Interior };
            nodes.push(Node::new(x, y, depth(x, y), tag));
        }
    }
    let mut tris = vec![];
    for j in 0..ny {
        for i in 0..nx {
            let a = j * (nx + 1) + i;
            let b = a + 1;
            let c = a + nx + 2;
            let d = a + nx + 1;
            // alternate the diagonal to avoid a directional bias
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    Mesh::new(nodes, &tris, h_min)
}
