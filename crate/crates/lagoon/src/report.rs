//! Rendering of a stability report as aligned text or `key=value` lines.

use std::fmt::Write as _;

use lagoon_core::StabilityReport;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| format!("{x:?}"))
}

/// `(key, value, unit)` rows shared by both renderings.
fn rows(r: &StabilityReport) -> Vec<(&'static str, String, &'static str)> {
    let i = &r.inputs;
    vec![
        ("tau", format!("{:?}", i.tau), "s"),
        ("speed", format!("{:?}", i.speed), "m/s"),
        ("depth", format!("{:?}", i.depth), "m"),
        ("g", format!("{:?}", i.params.g), "m/s^2"),
        ("k0", format!("{:?}", i.params.k0), "1/s"),
        ("k1", format!("{:?}", i.params.k1), "m^(1/2)/s"),
        ("drag", format!("{:?}", r.drag), "1/s"),
        ("alpha", format!("{:?}", r.alpha), ""),
        ("beta", format!("{:?}", r.beta), ""),
        ("modulus", format!("{:?}", r.modulus), ""),
        ("cubic_a", format!("{:?}", r.cubic.a), ""),
        ("cubic_b", format!("{:?}", r.cubic.b), ""),
        ("cubic_c", format!("{:?}", r.cubic.c), ""),
        ("cubic_d", format!("{:?}", r.cubic.d), ""),
        ("tau_c_paper", opt(r.tau_c_paper), "s"),
        ("tau_c_modulus", opt(r.tau_c_modulus), "s"),
        ("convergent_paper", r.convergent_paper.to_string(), ""),
        ("convergent_modulus", r.convergent_modulus.to_string(), ""),
    ]
}

pub fn machine(r: &StabilityReport) -> String {
    let mut out = String::new();
    for (k, v, _) in rows(r) {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}

pub fn text(r: &StabilityReport) -> String {
    let rows = rows(r);
    let kw = rows.iter().map(|(k, ..)| k.len()).max().unwrap_or(0);
    let vw = rows.iter().map(|(_, v, _)| v.len()).max().unwrap_or(0);
    let mut out = String::from("stability of the source sub-step\n");
    for (k, v, u) in rows {
        writeln!(out, "  {k:<kw$}  {v:>vw$}  {u}").unwrap();
    }
    // keep lines free of trailing blanks
    out.lines().map(|l| l.trim_end().to_string() + "\n").collect()
}
