//! Run output: snapshot CSVs, gauge series, the per-step log, the final
//! summary and optional matrix dumps. Floats are written with the shortest
//! representation that parses back to the same value.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lagoon_core::mesh::Mesh;
use lagoon_core::simulator::{Sink, StepRecord};
use lagoon_core::sparse::CsrMatrix;
use lagoon_core::{FemMatrices, RunSummary, State};

use crate::error::{content_lines, read_text, AppError};

pub const SNAPSHOT_HEADER: &str = "node,x1,x2,eta,u1,u2";
pub const GAUGE_HEADER: &str = "t,eta";

pub fn snapshot_name(step: usize) -> String {
    format!("snap_{step}.csv")
}

pub fn gauge_name(node: usize) -> String {
    format!("gauge_{node}.csv")
}

pub fn format_snapshot(state: &State, mesh: &Mesh) -> String {
    let mut out = String::with_capacity(64 * mesh.node_count());
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for (j, n) in mesh.nodes().iter().enumerate() {
        writeln!(
            out,
            "{j},{:?},{:?},{:?},{:?},{:?}",
            n.x1, n.x2, state.eta[j], state.u1[j], state.u2[j]
        )
        .unwrap();
    }
    out
}

/// Read a snapshot back into a state at clock `t`. Rows may come in any
/// order but must cover every node exactly once.
pub fn parse_snapshot(text: &str, origin: &str, n: usize, t: f64) -> Result<State, AppError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, h)) if h == SNAPSHOT_HEADER => {}
        Some((line, h)) => {
            return Err(AppError::parse(
                origin,
                line,
                format!("expected header {SNAPSHOT_HEADER:?}, found {h:?}"),
            ))
        }
        None => return Err(AppError::parse(origin, 1, "empty snapshot")),
    }
    let mut state = State::uniform(n, 0.0, [0.0, 0.0], t);
    let mut seen = vec![false; n];
    for (line, row) in lines {
        let cols: Vec<&str> = row.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(AppError::parse(
                origin,
                line,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let node: usize = cols[0]
            .parse()
            .map_err(|_| AppError::parse(origin, line, format!("bad node index {:?}", cols[0])))?;
        if node >= n || std::mem::replace(&mut seen[node], true) {
            return Err(AppError::parse(
                origin,
                line,
                format!("node {node} is out of range or repeated"),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| AppError::parse(origin, line, format!("cannot parse {s:?} as a number")))
        };
        state.eta[node] = num(cols[3])?;
        state.u1[node] = num(cols[4])?;
        state.u2[node] = num(cols[5])?;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(AppError::parse(
            origin,
            0,
            format!("snapshot has no row for node {missing}"),
        ));
    }
    Ok(state)
}

pub fn load_snapshot(path: &Path, n: usize, t: f64) -> Result<State, AppError> {
    parse_snapshot(&read_text(path, "restart snapshot")?, &path.display().to_string(), n, t)
}

/// Coordinate text `i j value`, one stored entry per line, row-major.
pub fn format_matrix(m: &CsrMatrix) -> String {
    let mut out = String::new();
    for (i, j, v) in m.triplets() {
        writeln!(out, "{i} {j} {v:?}").unwrap();
    }
    out
}

fn write_file(path: PathBuf, contents: &str) -> Result<(), AppError> {
    fs::write(&path, contents).map_err(|source| AppError::Write { path, source })
}

pub fn dump_matrices(dir: &Path, m: &FemMatrices) -> Result<(), AppError> {
    for (name, mat) in [
        ("mass", &m.mass),
        ("stiffness", &m.stiffness),
        ("grad_x1", &m.grad_x1),
        ("grad_x2", &m.grad_x2),
    ] {
        write_file(dir.join(format!("{name}.txt")), &format_matrix(mat))?;
    }
    let lumped: String = m
        .lumped
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{i} {i} {v:?}\n"))
        .collect();
    write_file(dir.join("lumped_mass.txt"), &lumped)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| format!("{x:?}"))
}

/// `key=value` lines describing a finished or aborted run.
pub fn format_summary(summary: &RunSummary, error: Option<&str>) -> String {
    let mut out = String::new();
    let status = match error {
        None => "completed",
        Some(_) => "aborted",
    };
    writeln!(out, "status={status}").unwrap();
    writeln!(out, "steps={}", summary.steps).unwrap();
    writeln!(out, "t_final={:?}", summary.final_state.t).unwrap();
    writeln!(out, "eta_min={:?}", summary.eta_min).unwrap();
    writeln!(out, "eta_max={:?}", summary.eta_max).unwrap();
    writeln!(out, "mass_initial={:?}", summary.mass_initial).unwrap();
    writeln!(out, "mass_final={:?}", summary.mass_final).unwrap();
    writeln!(out, "max_mass_drift={:?}", summary.max_mass_drift).unwrap();
    writeln!(out, "worst_cg_iterations={}", summary.worst_solve.iterations).unwrap();
    writeln!(out, "worst_cg_residual={:?}", summary.worst_solve.relative_residual).unwrap();
    writeln!(out, "total_cg_iterations={}", summary.total_cg_iterations).unwrap();
    writeln!(out, "gate_violations={}", summary.gate_violations).unwrap();
    writeln!(out, "floor_active_steps={}", summary.floor_active_steps).unwrap();
    writeln!(out, "min_tau_c={}", opt(summary.min_tau_c)).unwrap();
    if let Some(e) = error {
        writeln!(out, "error={e}").unwrap();
    }
    out
}

pub fn write_summary(dir: &Path, summary: &RunSummary, error: Option<&str>) -> Result<(), AppError> {
    write_file(dir.join("summary.txt"), &format_summary(summary, error))
}

/// Writes run output into one directory.
pub struct FileSink {
    dir: PathBuf,
    gauges: Vec<(usize, BufWriter<File>)>,
    log: BufWriter<File>,
}

fn create(path: PathBuf) -> Result<BufWriter<File>, AppError> {
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| AppError::Write { path, source })
}

impl FileSink {
    /// Create `dir` if needed and open the gauge files and run log.
    pub fn create(dir: &Path, gauges: &[usize]) -> Result<Self, AppError> {
        fs::create_dir_all(dir).map_err(|source| AppError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut files = Vec::with_capacity(gauges.len());
        for &g in gauges {
            if files.iter().any(|(id, _)| *id == g) {
                continue;
            }
            let path = dir.join(gauge_name(g));
            let mut w = create(path.clone())?;
            writeln!(w, "{GAUGE_HEADER}").map_err(|source| AppError::Write { path, source })?;
            files.push((g, w));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            gauges: files,
            log: create(dir.join("run.log"))?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn flush(&mut self) -> Result<(), AppError> {
        let err = |path: PathBuf| move |source| AppError::Write { path, source };
        for (g, w) in &mut self.gauges {
            w.flush().map_err(err(self.dir.join(gauge_name(*g))))?;
        }
        self.log.flush().map_err(err(self.dir.join("run.log")))
    }
}

impl Sink for FileSink {
    fn snapshot(&mut self, step: usize, state: &State, mesh: &Mesh) -> Result<(), String> {
        let path = self.dir.join(snapshot_name(step));
        fs::write(&path, format_snapshot(state, mesh)).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn gauges(&mut self, t: f64, values: &[(usize, f64)]) -> Result<(), String> {
        for (k, &(node, eta)) in values.iter().enumerate() {
            // a node listed twice still gets one row per time
            if values[..k].iter().any(|(n, _)| *n == node) {
                continue;
            }
            if let Some((_, w)) = self.gauges.iter_mut().find(|(id, _)| *id == node) {
                writeln!(w, "{t:?},{eta:?}").map_err(|e| format!("{}: {e}", gauge_name(node)))?;
            }
        }
        Ok(())
    }

    fn step_log(&mut self, r: &StepRecord) -> Result<(), String> {
        writeln!(
            self.log,
            "step={} t={:?} mass={:?} cg_iterations={} cg_residual={:e} min_tau_c={}",
            r.step,
            r.t,
            r.mass,
            r.solve.iterations,
            r.solve.relative_residual,
            opt(r.min_tau_c)
        )
        .map_err(|e| format!("run.log: {e}"))
    }
}

impl Drop for FileSink {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}
