//! Structured polar triangulation of the unit disk.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::{Phantom, Point, Shape};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Node triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary polygon edges, counterclockwise and consecutive.
    pub boundary_edges: Vec<[usize; 2]>,
    pub element_sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshOptions {
    /// Number of concentric rings `R`.
    pub rings: usize,
    /// Ring `r` gets `ceil(6 r scale)` nodes.
    pub scale: f64,
    /// Move the ring nearest to each origin-centered disk inclusion onto its
    /// boundary, so the interface is resolved by element edges.
    pub snap_interfaces: bool,
}

impl MeshOptions {
    pub fn new(rings: usize) -> Self {
        Self {
            rings,
            scale: 1.0,
            snap_interfaces: true,
        }
    }
}

/// Radius of each ring `1..=R`: `r / R`, except for snapped interfaces.
fn ring_radii(opts: &MeshOptions, counts: &[usize], phantom: &Phantom) -> Vec<f64> {
    let rings = opts.rings;
    let mut radii: Vec<f64> = (1..=rings).map(|r| r as f64 / rings as f64).collect();
    if opts.snap_interfaces {
        for inc in phantom.inclusions() {
            if let Shape::Disk { center, radius } = inc.shape {
                if center.coords.norm() > 1e-12 {
                    continue;
                }
                // Moving by about h/2 at most keeps the rings strictly ordered.
                let r = (radius * rings as f64).round() as usize;
                if r >= 1 && r < rings {
                    // Polygon with the same area as the disk.
                    let theta = std::f64::consts::TAU / counts[r - 1] as f64;
                    radii[r - 1] = radius * (theta / theta.sin()).sqrt();
                }
            }
        }
    }
    radii
}

/// Polar mesh with `refinement` rings and conductivity sampled from the
/// phantom at triangle centroids. Ring `r` lies at radius `r / R` unless it
/// is snapped to a centered disk inclusion (see [`MeshOptions`]).
pub fn generate_mesh(refinement: usize, phantom: &Phantom) -> Result<Mesh> {
    generate_mesh_with(&MeshOptions::new(refinement), phantom)
}

pub fn generate_mesh_with(opts: &MeshOptions, phantom: &Phantom) -> Result<Mesh> {
    if opts.rings == 0 {
        return Err(Error::Config("mesh refinement must be >= 1".into()));
    }
    if !(opts.scale.is_finite() && opts.scale > 0.0) {
        return Err(Error::Config(format!(
            "mesh scale must be positive, got {}",
            opts.scale
        )));
    }
    let rings = opts.rings;
    let counts: Vec<usize> = (1..=rings)
        .map(|r| ((6.0 * r as f64 * opts.scale).ceil() as usize).max(3))
        .collect();

    let radii = ring_radii(opts, &counts, phantom);
    let mut nodes = vec![Point::origin()];
    let mut starts = Vec::with_capacity(rings);
    for (&n, &radius) in counts.iter().zip(&radii) {
        starts.push(nodes.len());
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            nodes.push(Point::new(radius * t.cos(), radius * t.sin()));
        }
    }

    let mut triangles = Vec::new();
    // Fan around the center.
    let n1 = counts[0];
    for i in 0..n1 {
        triangles.push([0, starts[0] + i, starts[0] + (i + 1) % n1]);
    }
    // Strips between consecutive rings, merged by angle.
    for r in 1..rings {
        let (n_in, n_out) = (counts[r - 1], counts[r]);
        let (s_in, s_out) = (starts[r - 1], starts[r]);
        let (mut i, mut k) = (0usize, 0usize);
        while i < n_in || k < n_out {
            let advance_outer = if i == n_in {
                true
            } else if k == n_out {
                false
            } else {
                // angle(out k+1) <= angle(in i+1)
                (k + 1) * n_in <= (i + 1) * n_out
            };
            let a = s_in + i % n_in;
            let b = s_out + k % n_out;
            if advance_outer {
                triangles.push([a, b, s_out + (k + 1) % n_out]);
                k += 1;
            } else {
                triangles.push([a, b, s_in + (i + 1) % n_in]);
                i += 1;
            }
        }
    }

    let s_last = starts[rings - 1];
    let n_last = counts[rings - 1];
    let boundary_edges = (0..n_last)
        .map(|i| [s_last + i, s_last + (i + 1) % n_last])
        .collect();

    let mut mesh = Mesh {
        nodes,
        triangles,
        boundary_edges,
        element_sigma: Vec::new(),
    };
    mesh.assign_conductivity(phantom)?;
    Ok(mesh)
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        Point::from((self.nodes[a].coords + self.nodes[b].coords + self.nodes[c].coords) / 3.0)
    }

    /// Signed area; positive for counterclockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|&[a, b]| (self.nodes[b] - self.nodes[a]).norm())
            .sum()
    }

    /// Number of distinct undirected edges.
    pub fn num_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// Re-samples the per-element conductivity at the triangle centroids.
    pub fn assign_conductivity(&mut self, phantom: &Phantom) -> Result<()> {
        self.element_sigma = (0..self.triangles.len())
            .map(|t| phantom.sigma_at(&self.centroid(t)))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Plain-text listing for debugging; not a stable format.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "nodes {}", self.nodes.len())?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(w, "{i} {:.17e} {:.17e}", p.x, p.y)?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for (i, [a, b, c]) in self.triangles.iter().enumerate() {
            writeln!(w, "{i} {a} {b} {c} {}", self.element_sigma[i])?;
        }
        Ok(())
    }
}
