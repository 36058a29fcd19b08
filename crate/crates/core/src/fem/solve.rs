//! P1 Galerkin solver for the difference potential `d_j = u0_j - u_j`.
//!
//! `d_j` solves `div(sigma grad d) = div((sigma - 1) grad u0_j)` with the
//! co-normal flux of `sigma grad d - (sigma - 1) grad u0_j` vanishing on the
//! boundary. The Neumann nullspace is removed by a Lagrange multiplier on the
//! boundary mean, giving the symmetric indefinite system
//!
//! ```text
//! [ K   c ] [ d      ]   [ f ]
//! [ c^T 0 ] [ lambda ] = [ 0 ]
//! ```
//!
//! which is factored once per mesh and reused for every current.

use nalgebra::Vector2;

use super::mesh::Mesh;
use super::potential::{boundary_current, potential_gradient, CurrentKind};
use super::sparse::{CsrMatrix, Envelope, LdlFactor};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Nodal values of one difference potential.
#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    pub nodal_values: Vec<f64>,
    pub current_index: usize,
    pub kind: CurrentKind,
    /// Lagrange multiplier of the mean constraint (zero for compatible data).
    pub multiplier: f64,
}

/// Gradients of the three P1 hat functions on a triangle, and its area.
pub(crate) fn hat_gradients(p: [Point; 3]) -> ([Vector2<f64>; 3], f64) {
    let twice = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    let grads = [
        Vector2::new(p[1].y - p[2].y, p[2].x - p[1].x) / twice,
        Vector2::new(p[2].y - p[0].y, p[0].x - p[2].x) / twice,
        Vector2::new(p[0].y - p[1].y, p[1].x - p[0].x) / twice,
    ];
    (grads, 0.5 * twice)
}

fn triangle_points(mesh: &Mesh, t: usize) -> [Point; 3] {
    let [a, b, c] = mesh.triangles[t];
    [mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]]
}

/// Conductivity-weighted stiffness matrix `K_ab = int sigma grad phi_a . grad phi_b`.
pub fn assemble_stiffness(mesh: &Mesh) -> CsrMatrix {
    CsrMatrix::from_triplets(mesh.num_nodes(), stiffness_triplets(mesh))
}

fn stiffness_triplets(mesh: &Mesh) -> Vec<(usize, usize, f64)> {
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = hat_gradients(triangle_points(mesh, t));
        let s = mesh.element_sigma[t] * area;
        for a in 0..3 {
            for b in 0..3 {
                trip.push((tri[a], tri[b], s * g[a].dot(&g[b])));
            }
        }
    }
    trip
}

/// `c_a = int_{boundary} phi_a ds` on the boundary polygon.
pub fn boundary_mass(mesh: &Mesh) -> Vec<f64> {
    let mut c = vec![0.0; mesh.num_nodes()];
    for &[a, b] in &mesh.boundary_edges {
        let len = (mesh.nodes[b] - mesh.nodes[a]).norm();
        c[a] += 0.5 * len;
        c[b] += 0.5 * len;
    }
    c
}

/// Load vector `f_a = int (sigma - 1) grad u0_j . grad phi_a`, one-point
/// (centroid) quadrature per element.
pub fn difference_load(mesh: &Mesh, j: usize, kind: CurrentKind) -> Vec<f64> {
    let mut f = vec![0.0; mesh.num_nodes()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let excess = mesh.element_sigma[t] - 1.0;
        if excess == 0.0 {
            continue;
        }
        let (g, area) = hat_gradients(triangle_points(mesh, t));
        let grad_u0 = potential_gradient(j, kind, &mesh.centroid(t));
        for a in 0..3 {
            f[tri[a]] += excess * area * grad_u0.dot(&g[a]);
        }
    }
    f
}

/// Factored bordered system for one mesh.
#[derive(Debug, Clone)]
pub struct DifferenceSolver<'m> {
    mesh: &'m Mesh,
    factor: LdlFactor,
}

impl<'m> DifferenceSolver<'m> {
    /// Assembles and factors the bordered system.
    ///
    /// Unknown order: nodes `0..n-1`, then the multiplier, then node `n-1`
    /// (a boundary node). Every leading block before the multiplier is a
    /// proper principal submatrix of the connected Neumann stiffness matrix
    /// and hence positive definite.
    pub fn new(mesh: &'m Mesh) -> Result<Self> {
        let n = mesh.num_nodes();
        if n < 3 || mesh.element_sigma.len() != mesh.triangles.len() {
            return Err(Error::Dimension(format!(
                "mesh has {n} nodes and {} conductivities for {} triangles",
                mesh.element_sigma.len(),
                mesh.triangles.len()
            )));
        }
        let last = n - 1;
        if !mesh
            .boundary_edges
            .iter()
            .any(|e| e[0] == last || e[1] == last)
        {
            return Err(Error::Dimension(
                "last mesh node must lie on the boundary".into(),
            ));
        }
        let pos = |k: usize| if k < last { k } else { n };
        let mut trip: Vec<(usize, usize, f64)> = stiffness_triplets(mesh)
            .into_iter()
            .map(|(i, j, v)| (pos(i), pos(j), v))
            .collect();
        for (k, &ck) in boundary_mass(mesh).iter().enumerate() {
            if ck != 0.0 {
                trip.push((pos(k).max(last), pos(k).min(last), ck));
            }
        }
        let factor = Envelope::from_triplets(n + 1, &trip).factor()?;
        Ok(Self { mesh, factor })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    /// Solves the bordered system for an arbitrary load vector.
    pub fn solve_load(&self, load: &[f64]) -> (Vec<f64>, f64) {
        let n = self.mesh.num_nodes();
        let last = n - 1;
        let mut rhs = Vec::with_capacity(n + 1);
        rhs.extend_from_slice(&load[..last]);
        rhs.push(0.0);
        rhs.push(load[last]);
        let x = self.factor.solve(&rhs);
        let mut d = x[..last].to_vec();
        d.push(x[n]);
        (d, x[last])
    }

    pub fn solve(&self, j: usize, kind: CurrentKind) -> Result<FemSolution> {
        if j == 0 {
            return Err(Error::Domain("current order j must be >= 1".into()));
        }
        let load = difference_load(self.mesh, j, kind);
        let (nodal_values, multiplier) = self.solve_load(&load);
        if nodal_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem {
                index: 0,
                pivot: f64::NAN,
                scale: 0.0,
                size: self.factor.dim(),
            });
        }
        Ok(FemSolution {
            nodal_values,
            current_index: j,
            kind,
            multiplier,
        })
    }
}

/// One-shot difference solve; prefer [`DifferenceSolver`] for many currents.
pub fn solve_difference(mesh: &Mesh, j: usize, kind: CurrentKind) -> Result<FemSolution> {
    DifferenceSolver::new(mesh)?.solve(j, kind)
}

/// Two-point Gauss abscissae on `[0, 1]`.
const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// `int_{boundary} g_i d ds` over the boundary polygon, two-point Gauss per
/// edge, with `g_i` evaluated at the polar angle of each quadrature point.
pub fn boundary_inner_product(mesh: &Mesh, sol: &FemSolution, i: usize, kind: CurrentKind) -> f64 {
    boundary_integral(mesh, &sol.nodal_values, |p| {
        boundary_current(i, kind, p.y.atan2(p.x))
    })
}

/// Energy form of `<g_i, d_j>`:
/// `int (sigma - 1) grad u0_i . grad u0_j - f_i . d_j`, with `f_i` the
/// difference load of current `(i, kind)`. Both terms use the same centroid
/// rule as the load, so the result is symmetric in `(i, j)` up to rounding.
pub fn energy_inner_product(
    mesh: &Mesh,
    sol: &FemSolution,
    load_i: &[f64],
    i: usize,
    kind: CurrentKind,
) -> f64 {
    let mut direct = 0.0;
    for (t, &sigma) in mesh.element_sigma.iter().enumerate() {
        let excess = sigma - 1.0;
        if excess == 0.0 {
            continue;
        }
        let c = mesh.centroid(t);
        let (gi, gj) = (
            potential_gradient(i, kind, &c),
            potential_gradient(sol.current_index, sol.kind, &c),
        );
        direct += excess * mesh.signed_area(t) * gi.dot(&gj);
    }
    let coupling: f64 = load_i
        .iter()
        .zip(&sol.nodal_values)
        .map(|(f, d)| f * d)
        .sum();
    direct - coupling
}

/// `int_{boundary} weight(p) v(p) ds` for a P1 nodal field `v`.
pub fn boundary_integral<F: Fn(&Point) -> f64>(mesh: &Mesh, values: &[f64], weight: F) -> f64 {
    let mut total = 0.0;
    for &[a, b] in &mesh.boundary_edges {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let half = 0.5 * (pb - pa).norm();
        for t in GAUSS2 {
            let p = Point::from(pa.coords * (1.0 - t) + pb.coords * t);
            let v = values[a] * (1.0 - t) + values[b] * t;
            total += half * weight(&p) * v;
        }
    }
    total
}

/// Mean of a nodal field over the boundary polygon.
pub fn boundary_mean(mesh: &Mesh, values: &[f64]) -> f64 {
    let c = boundary_mass(mesh);
    let total: f64 = c.iter().zip(values).map(|(c, v)| c * v).sum();
    total / mesh.perimeter()
}
