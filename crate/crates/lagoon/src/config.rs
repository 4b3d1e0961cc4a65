//! Flat `key=value` configuration with `#` comment lines.
//!
//! Every key is optional; missing keys keep the defaults below, which are the
//! reference regime: g = 9.81, k0 = 1e-4, k1 = 40, τ = 3 s, τ̃ = 300 s.
//! Unknown and repeated keys are errors. Relative paths are resolved against
//! the directory of the config file.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lagoon_core::implicit::VelocityMass;
use lagoon_core::simulator::{GateMode, RunConfig, DEFAULT_U_FLOOR};
use lagoon_core::solver::CgOptions;
use lagoon_core::{PhysicalParams, ThetaConfig};

use crate::error::{content_lines, read_text, AppError};

/// All recognised keys, in the order they are written back.
pub const KEYS: &[&str] = &[
    "mesh",
    "g",
    "k0",
    "k1",
    "xi",
    "h_min",
    "tau",
    "tau_tilde",
    "theta1",
    "theta2",
    "duration",
    "snapshot_interval",
    "gauges",
    "gate",
    "output_dir",
    "tide",
    "wind",
    "eta0",
    "u1_0",
    "u2_0",
    "restart",
    "t0",
    "u_floor",
    "cg_tol",
    "jacobi",
    "velocity_mass",
    "dump_matrices",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mesh: Option<PathBuf>,
    pub params: PhysicalParams,
    pub tau: f64,
    pub tau_tilde: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub duration: f64,
    pub snapshot_interval: f64,
    pub gauges: Vec<usize>,
    pub gate: GateMode,
    pub output_dir: PathBuf,
    pub tide: Option<PathBuf>,
    pub wind: Option<PathBuf>,
    /// Initial elevation, m, and velocity, m/s; ignored when `restart` is set.
    pub eta0: f64,
    pub u1_0: f64,
    pub u2_0: f64,
    /// Snapshot file providing the initial state.
    pub restart: Option<PathBuf>,
    /// Clock at the initial state, s.
    pub t0: f64,
    pub u_floor: f64,
    pub cg_tol: f64,
    pub jacobi: bool,
    pub velocity_mass: VelocityMass,
    pub dump_matrices: bool,
}

impl Default for Config {
    fn default() -> Self {
        let run = RunConfig::default();
        Self {
            mesh: None,
            params: PhysicalParams::default(),
            tau: run.tau,
            tau_tilde: run.theta.tau_tilde,
            theta1: run.theta.theta1,
            theta2: run.theta.theta2,
            duration: run.duration,
            snapshot_interval: run.snapshot_interval,
            gauges: Vec::new(),
            gate: GateMode::Enforce,
            output_dir: PathBuf::from("output"),
            tide: None,
            wind: None,
            eta0: 0.0,
            u1_0: 0.0,
            u2_0: 0.0,
            restart: None,
            t0: 0.0,
            u_floor: DEFAULT_U_FLOOR,
            cg_tol: CgOptions::default().rel_tol,
            jacobi: false,
            velocity_mass: VelocityMass::Lumped,
            dump_matrices: false,
        }
    }
}

fn float(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, found {v:?}")),
    }
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, found {v:?}")),
    }
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

pub fn gate_name(g: GateMode) -> &'static str {
    match g {
        GateMode::Enforce => "enforce",
        GateMode::Warn => "warn",
        GateMode::Off => "off",
    }
}

fn velocity_mass_name(m: VelocityMass) -> &'static str {
    match m {
        VelocityMass::Lumped => "lumped",
        VelocityMass::Consistent => "consistent",
    }
}

impl Config {
    /// Assign one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "mesh" => self.mesh = path(v),
            "g" => self.params.g = float(v)?,
            "k0" => self.params.k0 = float(v)?,
            "k1" => self.params.k1 = float(v)?,
            "xi" => self.params.xi = float(v)?,
            "h_min" => self.params.h_min = float(v)?,
            "tau" => self.tau = float(v)?,
            "tau_tilde" => self.tau_tilde = float(v)?,
            "theta1" => self.theta1 = float(v)?,
            "theta2" => self.theta2 = float(v)?,
            "duration" => self.duration = float(v)?,
            "snapshot_interval" => self.snapshot_interval = float(v)?,
            "gauges" => {
                self.gauges = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| format!("gauge {s:?} is not a node index")))
                    .collect::<Result<_, _>>()?
            }
            "gate" => {
                self.gate = match v {
                    "enforce" => GateMode::Enforce,
                    "warn" => GateMode::Warn,
                    "off" => GateMode::Off,
                    _ => return Err(format!("gate must be enforce, warn or off, found {v:?}")),
                }
            }
            "output_dir" => self.output_dir = PathBuf::from(v),
            "tide" => self.tide = path(v),
            "wind" => self.wind = path(v),
            "eta0" => self.eta0 = float(v)?,
            "u1_0" => self.u1_0 = float(v)?,
            "u2_0" => self.u2_0 = float(v)?,
            "restart" => self.restart = path(v),
            "t0" => self.t0 = float(v)?,
            "u_floor" => self.u_floor = float(v)?,
            "cg_tol" => self.cg_tol = float(v)?,
            "jacobi" => self.jacobi = flag(v)?,
            "velocity_mass" => {
                self.velocity_mass = match v {
                    "lumped" => VelocityMass::Lumped,
                    "consistent" => VelocityMass::Consistent,
                    _ => return Err(format!("velocity_mass must be lumped or consistent, found {v:?}")),
                }
            }
            "dump_matrices" => self.dump_matrices = flag(v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Text value of one key, as written by [`Config::to_text`].
    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.params;
        Some(match key {
            "mesh" => show_path(&self.mesh),
            "g" => format!("{:?}", p.g),
            "k0" => format!("{:?}", p.k0),
            "k1" => format!("{:?}", p.k1),
            "xi" => format!("{:?}", p.xi),
            "h_min" => format!("{:?}", p.h_min),
            "tau" => format!("{:?}", self.tau),
            "tau_tilde" => format!("{:?}", self.tau_tilde),
            "theta1" => format!("{:?}", self.theta1),
            "theta2" => format!("{:?}", self.theta2),
            "duration" => format!("{:?}", self.duration),
            "snapshot_interval" => format!("{:?}", self.snapshot_interval),
            "gauges" => self.gauges.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(","),
            "gate" => gate_name(self.gate).into(),
            "output_dir" => self.output_dir.display().to_string(),
            "tide" => show_path(&self.tide),
            "wind" => show_path(&self.wind),
            "eta0" => format!("{:?}", self.eta0),
            "u1_0" => format!("{:?}", self.u1_0),
            "u2_0" => format!("{:?}", self.u2_0),
            "restart" => show_path(&self.restart),
            "t0" => format!("{:?}", self.t0),
            "u_floor" => format!("{:?}", self.u_floor),
            "cg_tol" => format!("{:?}", self.cg_tol),
            "jacobi" => self.jacobi.to_string(),
            "velocity_mass" => velocity_mass_name(self.velocity_mass).into(),
            "dump_matrices" => self.dump_matrices.to_string(),
            _ => return None,
        })
    }

    /// Parse config text without validating cross-field constraints.
    pub fn parse(text: &str, origin: &str) -> Result<Self, AppError> {
        let mut cfg = Config::default();
        let mut seen = HashSet::new();
        for (line, content) in content_lines(text) {
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| AppError::parse(origin, line, format!("expected key=value, found {content:?}")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(AppError::parse(origin, line, format!("duplicate key {key:?}")));
            }
            cfg.set(key, value)
                .map_err(|m| AppError::parse(origin, line, format!("{key}: {m}")))?;
        }
        Ok(cfg)
    }

    /// Apply a `key=value` override from the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), AppError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| AppError::Config(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        self.set(key, value)
            .map_err(|m| AppError::Config(format!("{key}: {m}")))
    }

    /// Every key, one per line, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            writeln!(out, "{key}={}", self.get(key).expect("listed key")).unwrap();
        }
        out
    }

    pub fn theta(&self) -> ThetaConfig {
        ThetaConfig {
            tau_tilde: self.tau_tilde,
            theta1: self.theta1,
            theta2: self.theta2,
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            tau: self.tau,
            theta: self.theta(),
            duration: self.duration,
            snapshot_interval: self.snapshot_interval,
            gauges: self.gauges.clone(),
            gate: self.gate,
            u_floor: self.u_floor,
            cg: CgOptions {
                rel_tol: self.cg_tol,
                jacobi: self.jacobi,
                ..CgOptions::default()
            },
            velocity_mass: self.velocity_mass,
        }
    }

    /// Constraints that do not need the mesh: physical ranges, θ weights,
    /// step divisibility.
    pub fn validate(&self) -> Result<(), AppError> {
        let cfg = |e: String| AppError::Config(e);
        let core = |e: lagoon_core::Error| match e {
            lagoon_core::Error::Config(m) => AppError::Config(m),
            other => AppError::Config(other.to_string()),
        };
        self.params.validate().map_err(|e| cfg(e.into()))?;
        let run = self.run_config();
        run.theta.validate().map_err(core)?;
        let n_sub = run.n_sub().map_err(core)?;
        run.outer_steps().map_err(core)?;
        run.snapshot_every().map_err(core)?;
        log::debug!("{n_sub} explicit sub-steps per implicit step");
        if self.u_floor.is_nan() || self.u_floor < 0.0 {
            return Err(cfg(format!("u_floor must be non-negative, got {}", self.u_floor)));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(cfg(format!("cg_tol must lie in (0, 1), got {}", self.cg_tol)));
        }
        Ok(())
    }

    /// Path relative to `base` unless already absolute.
    pub fn resolve(base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

/// Read and parse a config file; cross-field validation is left to the caller
/// so command-line overrides can be applied first.
pub fn load_config(path: &Path) -> Result<Config, AppError> {
    Config::parse(&read_text(path, "config file")?, &path.display().to_string())
}
