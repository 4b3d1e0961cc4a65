use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lagoon::mesh_io::format_mesh;
use lagoon_core::mesh::DEFAULT_H_MIN;
use lagoon_core::simulator::rectangle_mesh;
use lagoon_core::BoundaryTag;

fn lagoon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagoon"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn key_values(text: &str) -> HashMap<String, String> {
    let mut map = HashMap::new();
    for line in text.lines() {
        let (k, v) = line.split_once('=').expect("key=value line");
        assert!(map.insert(k.to_string(), v.to_string()).is_none(), "duplicate key {k}");
    }
    map
}

/// Closed basin, 0.1 m deep at its shallow end, plus a config naming it.
fn basin(dir: &Path, config: &str) {
    let mesh = rectangle_mesh(
        900.0,
        600.0,
        4,
        3,
        |x, _| 0.1 + 1e-4 * x,
        BoundaryTag::Land,
        DEFAULT_H_MIN,
    )
    .unwrap();
    fs::write(dir.join("basin.txt"), format_mesh(&mesh)).unwrap();
    fs::write(dir.join("run.cfg"), format!("mesh=basin.txt\noutput_dir=out\n{config}")).unwrap();
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn analyze_defaults_reproduce_reference_step() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lagoon(tmp.path(), &["analyze", "--machine"]);
    assert!(o.status.success());
    let map = key_values(&stdout(&o));
    assert_eq!(map["tau"], "3.0");
    assert_eq!(map["convergent_paper"], "true");
    let tc: f64 = map["tau_c_paper"].parse().unwrap();
    assert!((tc - 5.41).abs() < 0.02);
    for key in [
        "drag",
        "alpha",
        "beta",
        "modulus",
        "cubic_a",
        "cubic_b",
        "cubic_c",
        "cubic_d",
        "tau_c_modulus",
        "convergent_modulus",
    ] {
        assert!(map.contains_key(key), "{key}");
    }
}

#[test]
fn analyze_without_drag_never_converges() {
    let tmp = tempfile::tempdir().unwrap();
    for tau in ["0.01", "0.1", "1", "10", "100"] {
        let o = lagoon(tmp.path(), &["analyze", "--machine", "--speed", "0", "--tau", tau]);
        let map = key_values(&stdout(&o));
        assert_eq!(map["drag"], "0.0");
        assert_eq!(map["convergent_paper"], "false", "tau = {tau}");
    }
}

#[test]
fn analyze_boundary_is_strict() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lagoon(tmp.path(), &["analyze", "--machine", "--tau", "5.41"]);
    assert_eq!(key_values(&stdout(&o))["convergent_paper"], "false");
    let o = lagoon(tmp.path(), &["analyze", "--machine", "--tau", "5.40"]);
    assert_eq!(key_values(&stdout(&o))["convergent_paper"], "true");
}

#[test]
fn analyze_text_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lagoon(tmp.path(), &["analyze"]);
    let text = stdout(&o);
    assert!(text
        .lines()
        .any(|l| l.trim_start().starts_with("tau_c_paper") && l.contains("5.409")));
    // doubling the depth halves D and lengthens the critical step
    let o = lagoon(tmp.path(), &["analyze", "--machine", "--depth", "0.2"]);
    let tc: f64 = key_values(&stdout(&o))["tau_c_paper"].parse().unwrap();
    assert!(tc > 6.0);
    let o = lagoon(tmp.path(), &["--set", "k1=80", "analyze", "--machine"]);
    let map = key_values(&stdout(&o));
    assert_eq!(map["k1"], "80.0");
}

#[test]
fn analyze_rejects_bad_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["analyze", "--depth", "0"][..],
        &["analyze", "--tau", "nan"][..],
        &["analyze", "--speed=-1"][..],
        &["analyze", "--bogus"][..],
        &["--set", "k1=0", "analyze"][..],
    ] {
        let o = lagoon(tmp.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr(&o).lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn help_exits_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lagoon(tmp.path(), &["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("analyze"));
}

#[test]
fn zero_duration_writes_one_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    basin(tmp.path(), "duration=0\n");
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    assert_eq!(files(&out), ["config.txt", "run.log", "snap_0.csv", "summary.txt"]);
    let snap = fs::read_to_string(out.join("snap_0.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("node,x1,x2,eta,u1,u2"));
    assert_eq!(snap.lines().count(), 1 + 20);
    let summary = key_values(&fs::read_to_string(out.join("summary.txt")).unwrap());
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["steps"], "0");
}

#[test]
fn missing_mesh_is_a_fault() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.cfg"), "mesh=nowhere.txt\n").unwrap();
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "run"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.contains("cannot read mesh file") && err.contains("nowhere.txt"),
        "{err}"
    );
}

#[test]
fn config_errors_are_reported_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    basin(tmp.path(), "tau=3\ntau_tilde=299\n");
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not a whole multiple"));

    basin(tmp.path(), "colour=blue\n");
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.cfg:3: colour: unknown key"), "{}", stderr(&o));

    let o = lagoon(tmp.path(), &["--config", "absent.cfg", "analyze"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read config file"));
}

#[test]
fn gate_refusal_exits_two_and_names_the_critical_step() {
    let tmp = tempfile::tempdir().unwrap();
    basin(tmp.path(), "u1_0=0.1\nduration=600\n");
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "--set", "tau=6", "run"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    // the basin deepens with x, so the shallow nodes set the critical step
    let tau_c: f64 = err
        .split("tau_c = ")
        .nth(1)
        .unwrap()
        .trim_end_matches(" s\n")
        .parse()
        .unwrap();
    assert!(tau_c > 5.40 && tau_c < 6.0, "{err}");
    let summary = key_values(&fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap());
    assert_eq!(summary["status"], "aborted");
    assert_eq!(summary["steps"], "0");

    let o = lagoon(
        tmp.path(),
        &[
            "--config",
            "run.cfg",
            "--set",
            "tau=6",
            "--set",
            "gate=warn",
            "run",
            "--machine",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = key_values(&stdout(&o));
    assert_eq!(summary["steps"], "2");
    assert_ne!(summary["gate_violations"], "0");
}

#[test]
fn run_writes_log_gauges_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    basin(
        tmp.path(),
        "eta0=0.01\nu2_0=0.02\nduration=1200\nsnapshot_interval=600\ngauges=6,6,12\ndump_matrices=true\n",
    );
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    for f in [
        "snap_0.csv",
        "snap_2.csv",
        "snap_4.csv",
        "gauge_6.csv",
        "gauge_12.csv",
        "mass.txt",
        "stiffness.txt",
        "grad_x1.txt",
        "grad_x2.txt",
        "lumped_mass.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join("snap_1.csv").exists());
    let log = fs::read_to_string(out.join("run.log")).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(log.lines().next().unwrap().starts_with("step=1 t=300.0 mass="));
    let gauge = fs::read_to_string(out.join("gauge_6.csv")).unwrap();
    let rows: Vec<&str> = gauge.lines().collect();
    assert_eq!(rows[0], "t,eta");
    assert_eq!(rows.len(), 1 + 5);
    assert!(rows[1].starts_with("0.0,"));

    // the mass dump is symmetric and sums to the basin area
    let dump = fs::read_to_string(out.join("mass.txt")).unwrap();
    let entries: HashMap<(usize, usize), f64> = dump
        .lines()
        .map(|l| {
            let p: Vec<&str> = l.split(' ').collect();
            ((p[0].parse().unwrap(), p[1].parse().unwrap()), p[2].parse().unwrap())
        })
        .collect();
    let total: f64 = entries.values().sum();
    assert!((total - 900.0 * 600.0).abs() < 1e-6);
    assert!(entries.iter().all(|(&(i, j), v)| entries[&(j, i)] == *v));

    // the effective config is a valid config
    let echoed = lagoon::Config::parse(&fs::read_to_string(out.join("config.txt")).unwrap(), "config.txt").unwrap();
    assert_eq!(echoed.gauges, vec![6, 6, 12]);
}

#[test]
fn restart_continues_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("tide.txt"), "0 0\n3600 0.05\n").unwrap();
    let mesh = rectangle_mesh(900.0, 600.0, 4, 3, |_, _| 0.5, BoundaryTag::Open, DEFAULT_H_MIN).unwrap();
    fs::write(tmp.path().join("open.txt"), format_mesh(&mesh)).unwrap();
    fs::write(
        tmp.path().join("full.cfg"),
        "mesh=open.txt\ntide=tide.txt\nduration=1200\nsnapshot_interval=300\noutput_dir=full\n",
    )
    .unwrap();
    fs::write(
        tmp.path().join("rest.cfg"),
        "mesh=open.txt\ntide=tide.txt\nrestart=full/snap_2.csv\nt0=600\nduration=600\nsnapshot_interval=300\noutput_dir=rest\n",
    )
    .unwrap();
    assert!(lagoon(tmp.path(), &["--config", "full.cfg", "run"]).status.success());
    let o = lagoon(tmp.path(), &["--config", "rest.cfg", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let full = fs::read(tmp.path().join("full/snap_4.csv")).unwrap();
    let rest = fs::read(tmp.path().join("rest/snap_2.csv")).unwrap();
    assert_eq!(full, rest);
}

#[test]
fn relative_paths_follow_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let case = tmp.path().join("case");
    fs::create_dir(&case).unwrap();
    basin(&case, "duration=0\n");
    let o = lagoon(tmp.path(), &["--config", "case/run.cfg", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(case.join("out/snap_0.csv").exists());
}

#[test]
fn malformed_forcing_is_a_fault() {
    let tmp = tempfile::tempdir().unwrap();
    basin(tmp.path(), "wind=wind.txt\n");
    fs::write(tmp.path().join("wind.txt"), "0 1 2\n0 1 2\n").unwrap();
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("forcing"), "{}", stderr(&o));

    // forcing that ends before the run does is a fault at the step that needs it
    fs::write(tmp.path().join("wind.txt"), "0 1 2\n400 1 2\n").unwrap();
    let o = lagoon(tmp.path(), &["--config", "run.cfg", "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("step 2"), "{}", stderr(&o));
}
