//! Independent oracles: dense eigen-decomposition, Gauss quadrature with
//! basis functions solved from the interpolation conditions, bisection.

use nalgebra::{DMatrix, Matrix3, Vector3};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use lagoon_core::fem::{assemble, element_gradient, element_mass, element_stiffness, helmholtz_matrix};
use lagoon_core::mesh::{element_geometry, BoundaryTag, Mesh, Node, Triangle, DEFAULT_H_MIN};
use lagoon_core::simulator::rectangle_mesh;
use lagoon_core::sparse::CsrMatrix;
use lagoon_core::stability::*;

fn moduli(m: [[f64; 3]; 3]) -> Vec<f64> {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let mut v: Vec<f64> = mat.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn j_star_spectrum_matches_dense_eigensolver() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..1000 {
        let alpha = rng.random_range(-2.0..2.0);
        let beta = rng.random_range(-2.0..2.0);
        let mat = Matrix3::from_fn(|i, j| build_j_star(alpha, beta)[i][j]);
        let mut eig: Vec<(f64, f64)> = mat.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
        eig.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        let mut expected = vec![(1.0, 0.0), (1.0 + alpha, beta), (1.0 + alpha, -beta)];
        expected.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        for (e, x) in eig.iter().zip(&expected) {
            assert!(
                (e.0 - x.0).abs() < 1e-12 && (e.1 - x.1).abs() < 1e-12,
                "{eig:?} vs {expected:?}"
            );
        }
    }
}

#[test]
fn j_star_star_shares_velocity_moduli() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..1000 {
        let alpha = rng.random_range(-1.0..1.0);
        let beta = rng.random_range(-1.0..1.0);
        let grad = [rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01)];
        let tt = rng.random_range(1.0..600.0);
        let theta1 = rng.random_range(0.0..1.0);
        let a = moduli(build_j_star(alpha, beta));
        let b = moduli(build_j_star_star(alpha, beta, tt, theta1, grad));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn collapsed_velocity_block() {
    let m = moduli(build_j_star(-1.0, 0.0));
    assert!(m[0].abs() < 1e-15 && m[1].abs() < 1e-15 && (m[2] - 1.0).abs() < 1e-15);
}

fn bisect_cubic(c: &Cubic, mut lo: f64, mut hi: f64) -> f64 {
    assert!(c.eval(lo) < 0.0 && c.eval(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if c.eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn reference_tau_c_by_bisection() {
    let p = PhysicalParams::default();
    let c = cubic_coefficients(p.k0, drag_d(0.1, 0.1, &p));
    let tc = tau_c_closed_form(&c).unwrap();
    assert!((tc - bisect_cubic(&c, 0.0, 100.0)).abs() < 1e-6);
    assert!(c.eval(tc - 1e-6) < 0.0 && c.eval(tc + 1e-6) > 0.0);
}

#[test]
fn cubic_verdict_onset_is_monotone() {
    let p = PhysicalParams::default();
    let d = drag_d(0.1, 0.1, &p);
    let tc = tau_c_closed_form(&cubic_coefficients(p.k0, d)).unwrap();
    for i in 1..2000 {
        let tau = tc * i as f64 / 2000.0;
        assert!(is_convergent_paper(tau, p.k0, d), "tau = {tau}");
    }
    for i in 1..=2000 {
        let tau = tc + 10.0 * i as f64 / 2000.0;
        assert!(!is_convergent_paper(tau, p.k0, d), "tau = {tau}");
    }
}

#[test]
fn verdicts_do_not_depend_on_implicit_parameters() {
    let p = PhysicalParams::default();
    let d = drag_d(0.1, 0.1, &p);
    for tau in [1.0, 3.0, 6.0, 8.0] {
        let (alpha, beta) = alpha_beta(tau, p.k0, d);
        let reference = moduli(build_j_star(alpha, beta));
        for tt in [1.0, 60.0, 300.0, 900.0] {
            for theta1 in [0.0, 0.3, 0.55, 1.0] {
                let m = moduli(build_j_star_star(alpha, beta, tt, theta1, [3e-3, -2e-3]));
                assert!((m[2] - reference[2]).abs() < 1e-12);
                assert_eq!(m[2] < 1.0 + 1e-12, reference[2] < 1.0 + 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn modulus_predicate_is_the_expanded_inequality(tau in 1e-3f64..50.0, k0 in 0.0f64..1e-3, d in 1e-5f64..0.1) {
        let (a, b) = alpha_beta(tau, k0, d);
        let excess = 2.0 * a + a * a + b * b;
        prop_assume!(excess.abs() > 1e-12);
        prop_assert_eq!(is_convergent_modulus(tau, k0, d), excess < 0.0);
        prop_assert_eq!(velocity_mode_modulus(a, b) < 1.0, excess < 0.0);
    }

    #[test]
    fn closed_form_is_a_root(k0 in 0.0f64..1e-3, d in 1e-4f64..1e-1) {
        let c = cubic_coefficients(k0, d);
        let tc = tau_c_closed_form(&c).unwrap();
        prop_assert!(c.eval(tc).abs() < 1e-9 * c.d);
        prop_assert!(c.eval(tc * (1.0 - 1e-6)) < 0.0);
        prop_assert!(c.eval(tc * (1.0 + 1e-6)) > 0.0);
    }
}

// ---------------------------------------------------------------------------
// FEM quadrature oracle

/// Coefficients `(a, b, c)` of `φ_i = a + b x + c y` from `φ_i(v_j) = δ_ij`.
fn basis_by_interpolation(p: [[f64; 2]; 3]) -> [Vector3<f64>; 3] {
    let v = Matrix3::from_fn(|r, c| match c {
        0 => 1.0,
        1 => p[r][0],
        _ => p[r][1],
    });
    let inv = v.try_inverse().expect("non-degenerate triangle");
    [0, 1, 2].map(|i| inv.column(i).into_owned())
}

struct Quadrature {
    mass: [[f64; 3]; 3],
    stiffness: [[f64; 3]; 3],
    grad: [[[f64; 3]; 3]; 2],
}

/// Three interior points `(2/3, 1/6, 1/6)` with weights `A/3`; exact for quadratics.
fn gauss3(p: [[f64; 2]; 3], depth: [f64; 3]) -> Quadrature {
    let basis = basis_by_interpolation(p);
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
    let h_bar = (depth[0] + depth[1] + depth[2]) / 3.0;
    let bary = [
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ];
    let mut q = Quadrature {
        mass: [[0.0; 3]; 3],
        stiffness: [[0.0; 3]; 3],
        grad: [[[0.0; 3]; 3]; 2],
    };
    for l in bary {
        let x = l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0];
        let y = l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1];
        let w = area / 3.0;
        let phi: Vec<f64> = basis.iter().map(|b| b[0] + b[1] * x + b[2] * y).collect();
        for i in 0..3 {
            for j in 0..3 {
                q.mass[i][j] += w * phi[i] * phi[j];
                q.stiffness[i][j] += w * h_bar * (basis[i][1] * basis[j][1] + basis[i][2] * basis[j][2]);
                q.grad[0][i][j] += w * phi[i] * basis[j][1];
                q.grad[1][i][j] += w * phi[i] * basis[j][2];
            }
        }
    }
    q
}

fn assert_rel(got: [[f64; 3]; 3], want: [[f64; 3]; 3], what: &str) {
    let scale = want.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..3 {
        for j in 0..3 {
            assert!(
                (got[i][j] - want[i][j]).abs() <= 1e-13 * scale,
                "{what}[{i}][{j}]: {} vs {}",
                got[i][j],
                want[i][j]
            );
        }
    }
}

fn random_triangle(rng: &mut StdRng) -> ([[f64; 2]; 3], [f64; 3]) {
    loop {
        let p: [[f64; 2]; 3] = [0, 1, 2].map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)]);
        let twice = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        // keep reasonably shaped elements so the dense inverse stays accurate
        let perim2: f64 = (0..3)
            .map(|k| {
                let a = p[k];
                let b = p[(k + 1) % 3];
                (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
            })
            .sum();
        if twice.abs() > 0.05 * perim2 {
            return (p, [0, 1, 2].map(|_| rng.random_range(0.1..20.0)));
        }
    }
}

fn single_element(p: [[f64; 2]; 3], depth: [f64; 3]) -> Triangle {
    let nodes: Vec<Node> = (0..3)
        .map(|i| Node::new(p[i][0], p[i][1], depth[i], BoundaryTag::Land))
        .collect();
    Mesh::new(nodes, &[[0, 1, 2]], 1e-3).unwrap().triangles()[0]
}

#[test]
fn element_matrices_match_gauss_quadrature() {
    let mut rng = StdRng::seed_from_u64(2024);
    for _ in 0..100 {
        let (p, depth) = random_triangle(&mut rng);
        let t = single_element(p, depth);
        // the mesh may have reordered the vertices to counter-clockwise
        let order = t.vertices;
        let q = gauss3(order.map(|v| p[v]), order.map(|v| depth[v]));
        assert_rel(element_mass(&t), q.mass, "mass");
        assert_rel(
            element_stiffness(&t, depth.iter().sum::<f64>() / 3.0),
            q.stiffness,
            "stiffness",
        );
        assert_rel(element_gradient(&t, 0), q.grad[0], "q1");
        assert_rel(element_gradient(&t, 1), q.grad[1], "q2");
    }
}

fn random_mesh(rng: &mut StdRng, nx: usize, ny: usize) -> Mesh {
    let jitter: Vec<f64> = (0..(nx + 1) * (ny + 1) * 2)
        .map(|_| rng.random_range(-0.2..0.2))
        .collect();
    let base = rectangle_mesh(
        nx as f64,
        ny as f64,
        nx,
        ny,
        |_, _| 1.0,
        BoundaryTag::Land,
        DEFAULT_H_MIN,
    )
    .unwrap();
    let nodes: Vec<Node> = base
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, n)| {
            let interior = n.tag == BoundaryTag::Interior;
            let (dx, dy) = if interior {
                (jitter[2 * k], jitter[2 * k + 1])
            } else {
                (0.0, 0.0)
            };
            Node::new(n.x1 + dx, n.x2 + dy, rng.random_range(0.1..5.0), n.tag)
        })
        .collect();
    let tris: Vec<[usize; 3]> = base.triangles().iter().map(|t| t.vertices).collect();
    Mesh::new(nodes, &tris, DEFAULT_H_MIN).unwrap()
}

fn dense(m: &CsrMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i][j])
}

#[test]
fn global_matrix_properties_on_small_meshes() {
    let mut rng = StdRng::seed_from_u64(99);
    for (nx, ny) in [(1, 1), (2, 2), (3, 4), (4, 4)] {
        let mesh = random_mesh(&mut rng, nx, ny);
        assert!(mesh.node_count() <= 30);
        let m = assemble(&mesh).unwrap();
        assert!(m.mass.asymmetry() <= 1e-14);
        assert!(m.stiffness.asymmetry() <= 1e-14);
        let s_eig = dense(&m.stiffness).symmetric_eigenvalues();
        assert!(s_eig.min() >= -1e-12, "S min eigenvalue {}", s_eig.min());
        assert!(dense(&m.mass).symmetric_eigenvalues().min() > 0.0);
        for q in [&m.grad_x1, &m.grad_x2] {
            assert!(q.row_sums().iter().all(|s| s.abs() <= 1e-14));
        }
        let ones = vec![1.0; mesh.node_count()];
        assert!(m.stiffness.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!((m.lumped.iter().sum::<f64>() - mesh.total_area()).abs() < 1e-12);
        for (tt, th1, th2) in [(300.0, 0.55, 0.55), (1.0, 1.0, 1.0), (900.0, 0.0, 1.0)] {
            let a = helmholtz_matrix(&m, tt, th1, th2, 9.81);
            assert!(dense(&a).symmetric_eigenvalues().min() > 0.0);
        }
    }
}

#[test]
fn scaling_of_assembled_matrices() {
    let mut rng = StdRng::seed_from_u64(5);
    let mesh = random_mesh(&mut rng, 3, 3);
    let scaled_nodes: Vec<Node> = mesh
        .nodes()
        .iter()
        .map(|n| Node {
            x1: 3.0 * n.x1,
            x2: 3.0 * n.x2,
            ..*n
        })
        .collect();
    let tris: Vec<[usize; 3]> = mesh.triangles().iter().map(|t| t.vertices).collect();
    let scaled = Mesh::new(scaled_nodes, &tris, DEFAULT_H_MIN).unwrap();
    let (a, b) = (assemble(&mesh).unwrap(), assemble(&scaled).unwrap());
    for (i, j, v) in a.mass.triplets() {
        assert!((b.mass.get(i, j) - 9.0 * v).abs() < 1e-12);
        assert!((b.stiffness.get(i, j) - a.stiffness.get(i, j)).abs() < 1e-12);
        assert!((b.grad_x1.get(i, j) - 3.0 * a.grad_x1.get(i, j)).abs() < 1e-12);
    }
}

#[test]
fn assembly_is_permutation_equivariant() {
    let mut rng = StdRng::seed_from_u64(13);
    let mesh = random_mesh(&mut rng, 3, 2);
    let n = mesh.node_count();
    let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect();
    assert_eq!(
        {
            let mut p = perm.clone();
            p.sort();
            p
        },
        (0..n).collect::<Vec<_>>()
    );
    let mut nodes = vec![mesh.nodes()[0]; n];
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = mesh.nodes()[old];
    }
    let tris: Vec<[usize; 3]> = mesh.triangles().iter().map(|t| t.vertices.map(|v| perm[v])).collect();
    let renumbered = Mesh::new(nodes, &tris, DEFAULT_H_MIN).unwrap();
    let (a, b) = (assemble(&mesh).unwrap(), assemble(&renumbered).unwrap());
    assert!((a.lumped.iter().sum::<f64>() - b.lumped.iter().sum::<f64>()).abs() < 1e-12);
    for (i, j, v) in a.stiffness.triplets() {
        assert!((b.stiffness.get(perm[i], perm[j]) - v).abs() < 1e-12);
        assert!((b.mass.get(perm[i], perm[j]) - a.mass.get(i, j)).abs() < 1e-14);
        assert!((b.grad_x2.get(perm[i], perm[j]) - a.grad_x2.get(i, j)).abs() < 1e-14);
    }
    assert!((mesh.total_area() - renumbered.total_area()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn gradients_reproduce_linear_fields(
        pts in prop::array::uniform3((-100.0f64..100.0, -100.0f64..100.0)),
        coeff in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
    ) {
        let nodes: Vec<Node> = pts.iter().map(|&(x, y)| Node::new(x, y, 1.0, BoundaryTag::Land)).collect();
        let (area, grads) = match element_geometry([0, 1, 2], &nodes) {
            Ok(g) => g,
            Err(_) => return Ok(()),
        };
        let scale = pts.iter().fold(1.0f64, |m, p| m.max(p.0.abs()).max(p.1.abs()));
        prop_assume!(area > 1e-3 * scale * scale);
        let (c0, c1, c2) = coeff;
        let f: Vec<f64> = pts.iter().map(|&(x, y)| c0 + c1 * x + c2 * y).collect();
        let gx: f64 = (0..3).map(|i| f[i] * grads[i][0]).sum();
        let gy: f64 = (0..3).map(|i| f[i] * grads[i][1]).sum();
        let tol = 1e-9 * (1.0 + c0.abs() + scale * (c1.abs() + c2.abs()));
        prop_assert!((gx - c1).abs() < tol && (gy - c2).abs() < tol);
        // partition of unity
        for k in 0..2 {
            let s: f64 = grads.iter().map(|g| g[k]).sum();
            let mag: f64 = grads.iter().map(|g| g[k].abs()).sum();
            prop_assert!(s.abs() <= 4.0 * f64::EPSILON * mag);
        }
    }
}
