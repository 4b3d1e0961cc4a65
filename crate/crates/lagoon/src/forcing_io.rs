//! Forcing files: `t value` (tide) and `t v1 v2` (wind), whitespace separated,
//! strictly increasing `t`, `#` comments.

use std::path::Path;

use lagoon_core::forcing::Series;

use crate::error::{content_lines, read_text, AppError};

pub fn parse_series<const N: usize>(text: &str, origin: &str) -> Result<Series<N>, AppError> {
    let mut samples = Vec::new();
    for (line, content) in content_lines(text) {
        let parts: Vec<&str> = content.split_whitespace().collect();
        if parts.len() != N + 1 {
            return Err(AppError::parse(
                origin,
                line,
                format!("expected {} columns, found {}", N + 1, parts.len()),
            ));
        }
        let mut values = [0.0; N];
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| AppError::parse(origin, line, format!("cannot parse {s:?} as a number")))
        };
        let t = parse(parts[0])?;
        for (v, s) in values.iter_mut().zip(&parts[1..]) {
            *v = parse(s)?;
        }
        samples.push((t, values));
    }
    Series::new(samples).map_err(|source| AppError::Forcing {
        path: origin.into(),
        source,
    })
}

pub fn load_series<const N: usize>(path: &Path) -> Result<Series<N>, AppError> {
    parse_series(&read_text(path, "forcing file")?, &path.display().to_string())
}
