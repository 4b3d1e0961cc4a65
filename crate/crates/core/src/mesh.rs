//! Unstructured P1 triangle meshes with nodal bathymetry and boundary tags.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Smallest element area accepted, in m².
pub const MIN_ELEMENT_AREA: f64 = 1e-12;

/// Default bathymetry clamp in m.
pub const DEFAULT_H_MIN: f64 = 0.05;

/// Adjacent wall edges whose unit normals have a smaller dot product than
/// this are treated as a corner, where both velocity components are pinned.
const CORNER_COS: f64 = core::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("mesh has no nodes")]
    Empty,
    #[error("triangle {element} references node {index} but the mesh has {count} nodes")]
    BadIndex { element: usize, index: usize, count: usize },
    #[error("triangle {element} repeats node {index}")]
    RepeatedVertex { element: usize, index: usize },
    #[error("triangle {element} is degenerate (area {area:e} m²)")]
    Degenerate { element: usize, area: f64 },
    #[error("node {node} has a non-finite coordinate or depth")]
    NonFinite { node: usize },
    #[error("boundary edge ({a}, {b}) touches interior-tagged node {node}")]
    UntaggedBoundary { a: usize, b: usize, node: usize },
    #[error("depth clamp must be positive, got {0}")]
    BadClamp(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Interior,
    Land,
    Open,
}

impl BoundaryTag {
    /// Numeric code used by the mesh file format.
    pub fn code(self) -> u8 {
        match self {
            BoundaryTag::Interior => 0,
            BoundaryTag::Land => 1,
            BoundaryTag::Open => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BoundaryTag::Interior),
            1 => Some(BoundaryTag::Land),
            2 => Some(BoundaryTag::Open),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x1: f64,
    pub x2: f64,
    /// Still-water depth H in m (clamped to `h_min` once inside a [`Mesh`]).
    pub depth: f64,
    pub tag: BoundaryTag,
}

impl Node {
    pub fn new(x1: f64, x2: f64, depth: f64, tag: BoundaryTag) -> Self {
        Self { x1, x2, depth, tag }
    }
}

/// A counter-clockwise P1 element with its derived geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub area: f64,
    /// `grads[i] = (dphi_i/dx1, dphi_i/dx2)` for the local basis function of vertex `i`.
    pub grads: [[f64; 2]; 3],
}

impl Triangle {
    /// Mean of a nodal field over the element's vertices.
    pub fn mean(&self, field: &[f64]) -> f64 {
        let [a, b, c] = self.vertices;
        (field[a] + field[b] + field[c]) / 3.0
    }
}

/// Velocity constraint applied at a land node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallConstraint {
    /// Straight wall: the component along the unit outward normal is removed.
    Slip([f64; 2]),
    /// Corner (or isolated land node): both components are pinned to zero.
    NoFlow,
}

impl WallConstraint {
    /// Remove the constrained part of a velocity vector.
    pub fn project(&self, u: [f64; 2]) -> [f64; 2] {
        match *self {
            WallConstraint::Slip(n) => {
                let un = u[0] * n[0] + u[1] * n[1];
                [u[0] - un * n[0], u[1] - un * n[1]]
            }
            WallConstraint::NoFlow => [0.0, 0.0],
        }
    }
}

/// Area and basis gradients of the triangle spanned by three points, taken
/// in the given order. A negative signed area means the points are clockwise.
pub fn signed_geometry(p: [[f64; 2]; 3]) -> (f64, [[f64; 2]; 3]) {
    let [[x0, y0], [x1, y1], [x2, y2]] = p;
    let twice = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    let inv = 1.0 / twice;
    let g1 = [(y2 - y0) * inv, (x0 - x2) * inv];
    let g2 = [(y0 - y1) * inv, (x1 - x0) * inv];
    let g0 = [-(g1[0] + g2[0]), -(g1[1] + g2[1])];
    (0.5 * twice, [g0, g1, g2])
}

/// Area and P1 basis gradients of a triangle, gradients listed in the given
/// vertex order. Barycentric gradients do not depend on orientation.
pub fn element_geometry(vertices: [usize; 3], nodes: &[Node]) -> Result<(f64, [[f64; 2]; 3]), MeshError> {
    let p = vertices.map(|v| [nodes[v].x1, nodes[v].x2]);
    let (area, grads) = signed_geometry(p);
    if !(libm::fabs(area) >= MIN_ELEMENT_AREA) {
        return Err(MeshError::Degenerate { element: 0, area });
    }
    Ok((libm::fabs(area), grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Node>,
    triangles: Vec<Triangle>,
    open_nodes: Vec<usize>,
    land_nodes: Vec<usize>,
    walls: Vec<Option<WallConstraint>>,
    h_min: f64,
}

impl Mesh {
    /// Validate raw nodes and connectivity and derive the element geometry.
    ///
    /// Clockwise triangles are reoriented and depths below `h_min` are
    /// clamped; both are reported through `log::warn!`.
    pub fn new(mut nodes: Vec<Node>, connectivity: &[[usize; 3]], h_min: f64) -> Result<Self, MeshError> {
        if !(h_min > 0.0) {
            return Err(MeshError::BadClamp(h_min));
        }
        if nodes.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, n) in nodes.iter_mut().enumerate() {
            if !(n.x1.is_finite() && n.x2.is_finite() && n.depth.is_finite()) {
                return Err(MeshError::NonFinite { node: i });
            }
            if n.depth < h_min {
                log::warn!("node {i}: depth {} m below clamp, raised to {h_min} m", n.depth);
                n.depth = h_min;
            }
        }

        let count = nodes.len();
        let mut triangles = Vec::with_capacity(connectivity.len());
        for (element, &tri) in connectivity.iter().enumerate() {
            for (k, &index) in tri.iter().enumerate() {
                if index >= count {
                    return Err(MeshError::BadIndex { element, index, count });
                }
                if tri[..k].contains(&index) {
                    return Err(MeshError::RepeatedVertex { element, index });
                }
            }
            let p = tri.map(|v| [nodes[v].x1, nodes[v].x2]);
            let (signed, grads) = signed_geometry(p);
            if !(libm::fabs(signed) >= MIN_ELEMENT_AREA) {
                return Err(MeshError::Degenerate { element, area: signed });
            }
            let triangle = if signed > 0.0 {
                Triangle {
                    vertices: tri,
                    area: signed,
                    grads,
                }
            } else {
                log::warn!("triangle {element}: clockwise vertex order, reoriented");
                let vertices = [tri[0], tri[2], tri[1]];
                let (area, grads) = signed_geometry(vertices.map(|v| [nodes[v].x1, nodes[v].x2]));
                Triangle { vertices, area, grads }
            };
            triangles.push(triangle);
        }

        let walls = wall_constraints(&nodes, &triangles)?;
        let open_nodes = indices_with(&nodes, BoundaryTag::Open);
        let land_nodes = indices_with(&nodes, BoundaryTag::Land);
        Ok(Self {
            nodes,
            triangles,
            open_nodes,
            land_nodes,
            walls,
            h_min,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn open_nodes(&self) -> &[usize] {
        &self.open_nodes
    }

    pub fn land_nodes(&self) -> &[usize] {
        &self.land_nodes
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    /// Clamped still-water depth at every node.
    pub fn depths(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.depth).collect()
    }

    /// Velocity constraint at a land node, `None` elsewhere.
    pub fn wall(&self, node: usize) -> Option<WallConstraint> {
        self.walls[node]
    }

    pub fn total_area(&self) -> f64 {
        self.triangles.iter().map(|t| t.area).sum()
    }
}

fn indices_with(nodes: &[Node], tag: BoundaryTag) -> Vec<usize> {
    nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.tag == tag)
        .map(|(i, _)| i)
        .collect()
}

/// Edges used by exactly one triangle, oriented as they appear in that
/// counter-clockwise triangle (so the outward normal is to the right).
pub(crate) fn boundary_edges(triangles: &[Triangle]) -> Vec<(usize, usize)> {
    let mut uses: BTreeMap<(usize, usize), (usize, (usize, usize))> = BTreeMap::new();
    for t in triangles {
        let [a, b, c] = t.vertices;
        for (p, q) in [(a, b), (b, c), (c, a)] {
            let key = if p < q { (p, q) } else { (q, p) };
            uses.entry(key).or_insert((0, (p, q))).0 += 1;
        }
    }
    uses.into_values().filter(|(n, _)| *n == 1).map(|(_, e)| e).collect()
}

fn wall_constraints(nodes: &[Node], triangles: &[Triangle]) -> Result<Vec<Option<WallConstraint>>, MeshError> {
    let mut normals: Vec<Vec<[f64; 2]>> = vec![Vec::new(); nodes.len()];
    for (a, b) in boundary_edges(triangles) {
        for node in [a, b] {
            if nodes[node].tag == BoundaryTag::Interior {
                return Err(MeshError::UntaggedBoundary { a, b, node });
            }
        }
        let dx = nodes[b].x1 - nodes[a].x1;
        let dy = nodes[b].x2 - nodes[a].x2;
        let len = libm::hypot(dx, dy);
        let n = [dy / len, -dx / len];
        normals[a].push(n);
        normals[b].push(n);
    }

    let mut walls = vec![None; nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        if node.tag != BoundaryTag::Land {
            continue;
        }
        let adj = &normals[i];
        let corner = adj.is_empty()
            || adj
                .iter()
                .enumerate()
                .any(|(k, n)| adj[k + 1..].iter().any(|m| n[0] * m[0] + n[1] * m[1] < CORNER_COS));
        walls[i] = Some(if corner {
            if adj.is_empty() {
                log::warn!("node {i}: land tag away from the boundary, velocity pinned");
            }
            WallConstraint::NoFlow
        } else {
            let sx: f64 = adj.iter().map(|n| n[0]).sum();
            let sy: f64 = adj.iter().map(|n| n[1]).sum();
            let len = libm::hypot(sx, sy);
            WallConstraint::Slip([sx / len, sy / len])
        });
    }
    Ok(walls)
}
