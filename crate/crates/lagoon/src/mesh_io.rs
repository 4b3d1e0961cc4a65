//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! nnodes nelems
//! x1 x2 H tag        (nnodes lines; tag 0 interior, 1 land, 2 open)
//! i j k              (nelems lines; 0-based node indices)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use lagoon_core::mesh::{BoundaryTag, Mesh, Node};

use crate::error::{content_lines, read_text, AppError};

fn fields<'a, const N: usize>(origin: &str, line: usize, text: &'a str, what: &str) -> Result<[&'a str; N], AppError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    parts.try_into().map_err(|p: Vec<&str>| {
        AppError::parse(origin, line, format!("expected {N} fields ({what}), found {}", p.len()))
    })
}

fn number<T: std::str::FromStr>(origin: &str, line: usize, s: &str) -> Result<T, AppError> {
    s.parse()
        .map_err(|_| AppError::parse(origin, line, format!("cannot parse {s:?} as a number")))
}

/// Parse mesh text; `origin` names the source in error messages.
pub fn parse_mesh(text: &str, origin: &str, h_min: f64) -> Result<Mesh, AppError> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| AppError::parse(origin, 1, "missing `nnodes nelems` header"))?;
    let [n, e] = fields::<2>(origin, line, header, "nnodes nelems")?;
    let (n, e): (usize, usize) = (number(origin, line, n)?, number(origin, line, e)?);

    let mut nodes = Vec::with_capacity(n);
    let mut tris = Vec::with_capacity(e);
    let mut last = line;
    for (line, text) in lines {
        last = line;
        if nodes.len() < n {
            let [x1, x2, h, tag] = fields::<4>(origin, line, text, "x1 x2 H tag")?;
            let code: u8 = number(origin, line, tag)?;
            let tag = BoundaryTag::from_code(code)
                .ok_or_else(|| AppError::parse(origin, line, format!("unknown boundary tag {code}")))?;
            nodes.push(Node::new(
                number(origin, line, x1)?,
                number(origin, line, x2)?,
                number(origin, line, h)?,
                tag,
            ));
        } else if tris.len() < e {
            let [i, j, k] = fields::<3>(origin, line, text, "i j k")?;
            tris.push([
                number(origin, line, i)?,
                number(origin, line, j)?,
                number(origin, line, k)?,
            ]);
        } else {
            return Err(AppError::parse(
                origin,
                line,
                format!("unexpected line after {n} nodes and {e} elements"),
            ));
        }
    }
    if nodes.len() < n || tris.len() < e {
        return Err(AppError::parse(
            origin,
            last,
            format!(
                "file ends after {} of {n} nodes and {} of {e} elements",
                nodes.len(),
                tris.len()
            ),
        ));
    }
    Mesh::new(nodes, &tris, h_min).map_err(|source| AppError::Mesh {
        path: origin.into(),
        source,
    })
}

pub fn load_mesh(path: &Path, h_min: f64) -> Result<Mesh, AppError> {
    parse_mesh(&read_text(path, "mesh file")?, &path.display().to_string(), h_min)
}

/// Render a mesh back to the file format, full precision.
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", mesh.node_count(), mesh.triangles().len()).unwrap();
    for n in mesh.nodes() {
        writeln!(out, "{:?} {:?} {:?} {}", n.x1, n.x2, n.depth, n.tag.code()).unwrap();
    }
    for t in mesh.triangles() {
        let [i, j, k] = t.vertices;
        writeln!(out, "{i} {j} {k}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use lagoon_core::mesh::{MeshError, DEFAULT_H_MIN};

    const TRIANGLE: &str = "# unit right triangle\n3 1\n0 0 1 1\n1 0 1 1\n0 1 1 1\n0 1 2\n";

    #[test]
    fn unit_triangle() {
        let mesh = parse_mesh(TRIANGLE, "t", DEFAULT_H_MIN).unwrap();
        let t = mesh.triangles()[0];
        assert_eq!(t.area, 0.5);
        assert_eq!(t.grads, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn clockwise_is_reoriented() {
        let text = TRIANGLE.replace("0 1 2\n", "0 2 1\n");
        let mesh = parse_mesh(&text, "t", DEFAULT_H_MIN).unwrap();
        assert_eq!(mesh.triangles()[0].area, 0.5);
    }

    #[test]
    fn repeated_vertex_is_rejected() {
        let text = TRIANGLE.replace("0 1 2\n", "0 1 1\n");
        let err = parse_mesh(&text, "t", DEFAULT_H_MIN).unwrap_err();
        assert!(
            matches!(
                err,
                AppError::Mesh {
                    source: MeshError::RepeatedVertex { .. },
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let err = parse_mesh("3 1\n0 0 1 1\n1 0 x 1\n0 1 1 1\n0 1 2\n", "m.txt", DEFAULT_H_MIN).unwrap_err();
        assert_eq!(err.to_string(), "m.txt:3: cannot parse \"x\" as a number");
        let err = parse_mesh("3 1\n0 0 1 1\n1 0 1\n", "m.txt", DEFAULT_H_MIN).unwrap_err();
        assert!(err.to_string().starts_with("m.txt:3: expected 4 fields"));
        let err = parse_mesh("3 1\n0 0 1 1\n1 0 1 1\n", "m.txt", DEFAULT_H_MIN).unwrap_err();
        assert!(err.to_string().contains("2 of 3 nodes"));
        let err = parse_mesh(&format!("{TRIANGLE}0 1 2\n"), "m.txt", DEFAULT_H_MIN).unwrap_err();
        assert!(err.to_string().contains("unexpected line"));
        let err = parse_mesh("3 1\n0 0 1 7\n", "m.txt", DEFAULT_H_MIN).unwrap_err();
        assert!(err.to_string().contains("unknown boundary tag 7"));
    }

    #[test]
    fn format_round_trips() {
        let mesh = parse_mesh(TRIANGLE, "t", DEFAULT_H_MIN).unwrap();
        let again = parse_mesh(&format_mesh(&mesh), "t", DEFAULT_H_MIN).unwrap();
        assert_eq!(mesh.nodes(), again.nodes());
        assert_eq!(mesh.triangles(), again.triangles());
    }
}
