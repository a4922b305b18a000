//! Rational bilinear hyperboloid patches and triangle-mesh export.
//!
//! A crisscrossed quadrilateral is parametrized over `[0,1]²` by
//! `P(u,v) = Σ B_i ρ_i x_i / Σ B_i ρ_i` with the bilinear basis
//! `B1 = (1-u)(1-v)`, `B2 = u(1-v)`, `B3 = uv`, `B4 = (1-u)v`. Its half-parameter
//! lines are the two lines of the cross.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::hypnet::{CrisscrossedQuad, HyperbolicNet, NetStatus};
use crate::lattice::ix2;

pub fn eval_patch(q: &CrisscrossedQuad, u: f64, v: f64) -> Result<Point3> {
    let b = [(1.0 - u) * (1.0 - v), u * (1.0 - v), u * v, (1.0 - u) * v];
    let mut num = Point3::ORIGIN;
    let mut den = 0.0;
    for k in 0..4 {
        num += q.corners[k] * (b[k] * q.rho[k]);
        den += b[k] * q.rho[k];
    }
    let big = q.rho.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if den.abs() <= 1e-12 * big {
        return Err(Error::Degenerate(format!(
            "patch denominator vanishes at ({u}, {v})"
        )));
    }
    Ok(num / den)
}

/// 1D rational blend along an edge, from the lower lattice vertex `a`.
/// Exact at the endpoints, so lattice vertices pass through unchanged.
fn blend(a: Point3, ra: f64, b: Point3, rb: f64, t: f64) -> Point3 {
    if t == 0.0 {
        return a;
    }
    if t == 1.0 {
        return b;
    }
    let (wa, wb) = ((1.0 - t) * ra, t * rb);
    (a * wa + b * wb) / (wa + wb)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub name: String,
    /// Range of triangle indices.
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[usize; 3]>,
    pub groups: Vec<Group>,
}

impl TriMesh {
    pub fn triangle_normal(&self, t: usize) -> Point3 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        (b - a).cross(c - a)
    }

    fn group_of(&self) -> Vec<usize> {
        let mut g = vec![0; self.triangles.len()];
        for (k, grp) in self.groups.iter().enumerate() {
            g[grp.start..grp.start + grp.len].fill(k);
        }
        g
    }

    fn edge_map(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut m: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                m.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        m
    }

    pub fn stats(&self) -> MeshStats {
        let edges = self.edge_map();
        let group = self.group_of();
        let mut s = MeshStats::default();
        for tris in edges.values() {
            match tris.len() {
                1 => s.boundary_edges += 1,
                2 => {
                    if group[tris[0]] != group[tris[1]] {
                        s.seam_edges += 1;
                    }
                }
                _ => s.nonmanifold_edges += 1,
            }
        }
        let mut seen: HashMap<[u64; 3], usize> = HashMap::new();
        for v in &self.vertices {
            *seen
                .entry([v.x.to_bits(), v.y.to_bits(), v.z.to_bits()])
                .or_default() += 1;
        }
        s.duplicate_vertices = seen.values().filter(|&&n| n > 1).map(|n| n - 1).sum();
        s.degenerate_triangles = (0..self.triangles.len())
            .filter(|&t| !(self.triangle_normal(t).norm() > 0.0))
            .count();
        s
    }

    /// Angles in degrees between the normals of triangle pairs that share an
    /// edge but belong to different groups.
    pub fn seam_dihedrals(&self) -> Vec<f64> {
        let group = self.group_of();
        self.edge_map()
            .values()
            .filter(|t| t.len() == 2 && group[t[0]] != group[t[1]])
            .map(|t| {
                let (n1, n2) = (self.triangle_normal(t[0]), self.triangle_normal(t[1]));
                n1.cross(n2).norm().atan2(n1.dot(n2)).to_degrees()
            })
            .collect()
    }

    pub fn max_seam_dihedral(&self) -> f64 {
        self.seam_dihedrals().into_iter().fold(0.0, f64::max)
    }

    /// Like [`Self::max_seam_dihedral`] but between unoriented tangent planes,
    /// so a fold where the parametrization reverses orientation counts as flat.
    pub fn max_seam_plane_angle(&self) -> f64 {
        self.seam_dihedrals()
            .into_iter()
            .map(|a| a.min(180.0 - a))
            .fold(0.0, f64::max)
    }

    /// `v` lines, then one `g` block of 1-based `f` lines per group.
    pub fn write_obj<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for g in &self.groups {
            writeln!(w, "g {}", g.name)?;
            for t in &self.triangles[g.start..g.start + g.len] {
                writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MeshStats {
    pub boundary_edges: usize,
    pub seam_edges: usize,
    pub nonmanifold_edges: usize,
    /// Distinct vertex ids with bit-identical coordinates (unwelded seams).
    pub duplicate_vertices: usize,
    pub degenerate_triangles: usize,
}

impl MeshStats {
    /// Closed along every interior edge of a `w1 × w2` vertex grid sampled at
    /// `resolution`.
    pub fn watertight(&self, w1: usize, w2: usize, resolution: usize) -> bool {
        let perimeter = 2 * resolution * (w1 - 1 + w2 - 1);
        self.nonmanifold_edges == 0
            && self.duplicate_vertices == 0
            && self.boundary_edges == perimeter
    }
}

/// Samples every patch of a hyperbolic net on a `(resolution + 1)²` grid and
/// triangulates it. Samples on lattice edges come from the edge's own 1D blend,
/// so neighbouring patches produce bit-identical seam vertices, which are then
/// merged by their global grid position.
pub fn tessellate(net: &HyperbolicNet, resolution: usize) -> Result<TriMesh> {
    if net.status != NetStatus::Hyperbolic {
        return Err(Error::NotHyperbolic(net.status.to_string()));
    }
    if resolution == 0 {
        return Err(Error::Invalid("resolution must be at least 1".into()));
    }
    let n = resolution as i64;
    let faces = net.surface.window().faces((1, 2));
    let mut mesh = TriMesh::default();
    let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
    for z in faces.indices() {
        let (i, j) = (z.get(1), z.get(2));
        let q = net.quad(ix2(i, j))?;
        let [x1, x2, x3, x4] = q.corners;
        let [r1, r2, r3, r4] = q.rho;
        let mut local = vec![0usize; ((n + 1) * (n + 1)) as usize];
        for b in 0..=n {
            for a in 0..=n {
                let key = (i * n + a, j * n + b);
                let id = match ids.get(&key) {
                    Some(&id) => id,
                    None => {
                        let (u, v) = (a as f64 / n as f64, b as f64 / n as f64);
                        let p = if b == 0 {
                            blend(x1, r1, x2, r2, u)
                        } else if b == n {
                            blend(x4, r4, x3, r3, u)
                        } else if a == 0 {
                            blend(x1, r1, x4, r4, v)
                        } else if a == n {
                            blend(x2, r2, x3, r3, v)
                        } else {
                            eval_patch(&q, u, v)?
                        };
                        mesh.vertices.push(p);
                        ids.insert(key, mesh.vertices.len() - 1);
                        mesh.vertices.len() - 1
                    }
                };
                local[(b * (n + 1) + a) as usize] = id;
            }
        }
        let start = mesh.triangles.len();
        let at = |a: i64, b: i64| local[(b * (n + 1) + a) as usize];
        for b in 0..n {
            for a in 0..n {
                let (p, q, r, s) = (at(a, b), at(a + 1, b), at(a + 1, b + 1), at(a, b + 1));
                mesh.triangles.push([p, q, r]);
                mesh.triangles.push([p, r, s]);
            }
        }
        mesh.groups.push(Group {
            name: format!("patch_{i}_{j}"),
            start,
            len: mesh.triangles.len() - start,
        });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(rho: [f64; 4]) -> CrisscrossedQuad {
        let x = [
            Point3::new(0., 0., 0.),
            Point3::new(1., 0., 0.),
            Point3::new(1., 1., 1.),
            Point3::new(0., 1., 0.),
        ];
        CrisscrossedQuad::new(x, rho).unwrap()
    }

    #[test]
    fn corners_and_midpoints() {
        let q = quad([1.0, 2.0, 0.5, 3.0]);
        assert_eq!(eval_patch(&q, 0., 0.).unwrap(), q.corners[0]);
        assert_eq!(eval_patch(&q, 1., 0.).unwrap(), q.corners[1]);
        assert_eq!(eval_patch(&q, 1., 1.).unwrap(), q.corners[2]);
        assert_eq!(eval_patch(&q, 0., 1.).unwrap(), q.corners[3]);
        let c = crate::hypnet::cross_from_rho(&q).unwrap();
        let half = [(0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)];
        for k in 0..4 {
            let p = eval_patch(&q, half[k].0, half[k].1).unwrap();
            assert!(p.distance(c.vertices[k]) < 1e-14);
        }
        assert!(eval_patch(&q, 0.5, 0.5).unwrap().distance(c.centre) < 1e-14);
    }

    #[test]
    fn unit_weights_give_bilinear_centroid() {
        let q = quad([1.0; 4]);
        let c = eval_patch(&q, 0.5, 0.5).unwrap();
        assert!(c.distance(Point3::new(0.5, 0.5, 0.25)) < 1e-15);
    }
}
