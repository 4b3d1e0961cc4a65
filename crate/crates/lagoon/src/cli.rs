//! Command-line front end: `analyze` and `run`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use lagoon_core::forcing::Forcing;
use lagoon_core::stability::analyze;
use lagoon_core::{Simulator, StabilityInputs, State};

use crate::config::{load_config, Config};
use crate::error::{AppError, EXIT_FAULT, EXIT_OK};
use crate::forcing_io::load_series;
use crate::mesh_io::load_mesh;
use crate::output::{dump_matrices, format_summary, load_snapshot, write_summary, FileSink};
use crate::report;

#[derive(Debug, Parser)]
#[command(
    name = "lagoon",
    version,
    about = "Semi-implicit shallow-water solver and step-size analyzer"
)]
pub struct Cli {
    /// Configuration file (flat key=value lines)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Print key=value lines instead of formatted text
    #[arg(long, global = true)]
    pub machine: bool,

    /// Override one configuration key; repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergence analysis of the explicit source step for one parameter set
    Analyze {
        /// Explicit step, s (default: the configured tau)
        #[arg(long)]
        tau: Option<f64>,
        /// Flow speed |u|, m/s
        #[arg(long, default_value_t = 0.1)]
        speed: f64,
        /// Water depth H, m
        #[arg(long, default_value_t = 0.1)]
        depth: f64,
    },
    /// Run a simulation described by the configuration
    Run,
}

/// Configuration with overrides applied, plus the directory relative paths
/// are resolved against.
fn effective_config(cli: &Cli) -> Result<(Config, PathBuf), AppError> {
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (load_config(path)?, base)
        }
        None => (Config::default(), PathBuf::new()),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok((cfg, base))
}

pub fn cmd_analyze(cfg: &Config, tau: Option<f64>, speed: f64, depth: f64, machine: bool) -> Result<String, AppError> {
    let tau = tau.unwrap_or(cfg.tau);
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(AppError::Config(format!("--tau must be positive, got {tau}")));
    }
    if !(speed >= 0.0 && speed.is_finite()) {
        return Err(AppError::Config(format!("--speed must be non-negative, got {speed}")));
    }
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(AppError::Config(format!("--depth must be positive, got {depth}")));
    }
    let r = analyze(&StabilityInputs {
        tau,
        speed,
        depth,
        params: cfg.params,
    });
    Ok(if machine { report::machine(&r) } else { report::text(&r) })
}

fn initial_state(cfg: &Config, base: &Path, n: usize) -> Result<State, AppError> {
    match &cfg.restart {
        Some(p) => load_snapshot(&Config::resolve(base, p), n, cfg.t0),
        None => Ok(State::uniform(n, cfg.eta0, [cfg.u1_0, cfg.u2_0], cfg.t0)),
    }
}

/// Outcome of a run that got as far as producing output.
pub struct RunOutcome {
    pub text: String,
    pub error: Option<AppError>,
}

pub fn cmd_run(cfg: &Config, base: &Path, machine: bool) -> Result<RunOutcome, AppError> {
    let mesh_path = cfg
        .mesh
        .as_ref()
        .ok_or_else(|| AppError::Config("mesh is not set".into()))?;
    let mesh = load_mesh(&Config::resolve(base, mesh_path), cfg.params.h_min)?;
    let forcing = Forcing {
        tide: cfg
            .tide
            .as_ref()
            .map(|p| load_series(&Config::resolve(base, p)))
            .transpose()?,
        wind: cfg
            .wind
            .as_ref()
            .map(|p| load_series(&Config::resolve(base, p)))
            .transpose()?,
    };
    let initial = initial_state(cfg, base, mesh.node_count())?;
    let sim = Simulator::new(mesh, cfg.params, cfg.run_config())?;
    log::info!(
        "{} nodes, {} elements, {} outer steps of {} sub-steps",
        sim.mesh.node_count(),
        sim.mesh.triangles().len(),
        sim.cfg.outer_steps()?,
        sim.cfg.n_sub()?
    );

    let dir = Config::resolve(base, &cfg.output_dir);
    let mut sink = FileSink::create(&dir, &cfg.gauges)?;
    std::fs::write(dir.join("config.txt"), cfg.to_text()).map_err(|source| AppError::Write {
        path: dir.join("config.txt"),
        source,
    })?;
    if cfg.dump_matrices {
        dump_matrices(&dir, &sim.matrices)?;
    }

    let (summary, error) = match sim.run(&initial, &forcing, &mut sink) {
        Ok(s) => (s, None),
        Err(f) => (*f.summary, Some(AppError::Sim(f.error))),
    };
    sink.flush()?;
    let message = error.as_ref().map(|e| e.to_string());
    write_summary(&dir, &summary, message.as_deref())?;
    let text = if machine {
        format_summary(&summary, message.as_deref())
    } else {
        format!(
            "{} after {} steps (t = {} s); max mass drift {:e}; output in {}\n",
            if error.is_none() { "completed" } else { "aborted" },
            summary.steps,
            summary.final_state.t,
            summary.max_mass_drift,
            dir.display()
        )
    };
    Ok(RunOutcome { text, error })
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse `args` (including the program name) and execute; returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{}", one_line(first));
            return EXIT_FAULT;
        }
    };

    let fail = |stderr: &mut dyn Write, e: &AppError| {
        let _ = writeln!(stderr, "error: {}", one_line(&e.to_string()));
        e.exit_code()
    };
    let (cfg, base) = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => return fail(stderr, &e),
    };
    match cli.command {
        Command::Analyze { tau, speed, depth } => match cmd_analyze(&cfg, tau, speed, depth, cli.machine) {
            Ok(text) => {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            }
            Err(e) => fail(stderr, &e),
        },
        Command::Run => match cmd_run(&cfg, &base, cli.machine) {
            Ok(outcome) => {
                let _ = write!(stdout, "{}", outcome.text);
                match outcome.error {
                    None => EXIT_OK,
                    Some(e) => fail(stderr, &e),
                }
            }
            Err(e) => fail(stderr, &e),
        },
    }
}
