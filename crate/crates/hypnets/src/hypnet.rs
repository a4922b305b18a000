//! Crisscrossed quadrilaterals and (pre-)hyperbolic nets.
//!
//! A quadrilateral is labelled `x1 = x(z)`, `x2 = x(z+e1)`, `x3 = x(z+e1+e2)`,
//! `x4 = x(z+e2)` and carries one weight `ρ_i` per corner. The cross vertex on
//! the edge `x_i x_{i+1}` is `(ρ_i x_i + ρ_{i+1} x_{i+1}) / (ρ_i + ρ_{i+1})`, so
//! adjacent quadrilaterals built from one global ρ share their edge vertices.

use serde::{Deserialize, Serialize};

use crate::anet::{parallel_invariants, ANet};
use crate::error::{Error, Result};
use crate::geometry::{
    coplanarity_residual, diameter, intersect_lines, project_through_line, tetra_volume_rel, Line3,
    Plane3, Point3, Tolerances,
};
use crate::lattice::{ix2, GridIndex, ScalarField, Window};

/// Sums `|ρ_i + ρ_j|` at or below this fraction of `max |ρ|` are rejected.
const RHO_SUM_EPS: f64 = 1e-12;

/// Nonzero vertex weights; two fields describe the same crosses iff they differ
/// by one global factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RhoField(ScalarField);

impl RhoField {
    pub fn new(field: ScalarField) -> Result<Self> {
        field.ensure_complete()?;
        if let Some((i, _)) = field.iter().find(|&(_, v)| v == 0.0 || !v.is_finite()) {
            return Err(Error::Zero(format!("rho at {i}")));
        }
        Ok(RhoField(field))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_field(self) -> ScalarField {
        self.0
    }

    pub fn window(&self) -> &Window {
        self.0.window()
    }

    pub fn at(&self, idx: GridIndex) -> f64 {
        self.0[idx]
    }

    /// `+1` or `-1` if all weights share that sign, otherwise `None`.
    pub fn sign(&self) -> Option<f64> {
        let mut it = self.0.iter().map(|(_, v)| v.signum());
        let first = it.next()?;
        it.all(|s| s == first).then_some(first)
    }

    /// Equal up to one global factor, within `rel`.
    pub fn geometrically_equal(&self, other: &RhoField, rel: f64) -> bool {
        if self.window() != other.window() {
            return false;
        }
        let o = self.window().origin();
        let c = other.at(o) / self.at(o);
        self.0
            .iter()
            .all(|(i, v)| ((other.at(i) - c * v) / (c * v)).abs() <= rel)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrisscrossedQuad {
    pub corners: [Point3; 4],
    pub rho: [f64; 4],
}

impl CrisscrossedQuad {
    pub fn new(corners: [Point3; 4], rho: [f64; 4]) -> Result<Self> {
        if rho.iter().any(|r| *r == 0.0 || !r.is_finite()) {
            return Err(Error::Zero("corner rho".into()));
        }
        Ok(CrisscrossedQuad { corners, rho })
    }

    /// Relabels `(x1, x2, x3, x4)` as `(x1, x4, x3, x2)`, swapping the roles of
    /// the two lattice directions.
    pub fn transposed(&self) -> Self {
        let c = self.corners;
        let r = self.rho;
        CrisscrossedQuad {
            corners: [c[0], c[3], c[2], c[1]],
            rho: [r[0], r[3], r[2], r[1]],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        CrisscrossedQuad {
            corners: self.corners,
            rho: self.rho.map(|r| r * s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cross {
    /// `p12, p23, p34, p41`
    pub vertices: [Point3; 4],
    pub centre: Point3,
    pub plane: Plane3,
    /// Vertex `i` lies between `x_i` and `x_{i+1}`.
    pub internal: [bool; 4],
}

impl Cross {
    /// Cross through four given vertices; the centre is the intersection of the
    /// diagonals and `edges` tells which segment each vertex belongs to.
    pub fn from_vertices(vertices: [Point3; 4], edges: [(Point3, Point3); 4]) -> Result<Self> {
        let d1 = Line3::through(vertices[0], vertices[2])?;
        let d2 = Line3::through(vertices[1], vertices[3])?;
        let (centre, _) = intersect_lines(&d1, &d2)?;
        let plane = Plane3::through_point(centre, d1.direction.cross(d2.direction))?;
        let internal = std::array::from_fn(|i| {
            let (a, b) = edges[i];
            let e = b - a;
            let t = (vertices[i] - a).dot(e) / e.dot(e);
            t > 0.0 && t < 1.0
        });
        Ok(Cross {
            vertices,
            centre,
            plane,
            internal,
        })
    }

    /// Max distance of the vertices to the cross plane and of the centre to the
    /// diagonals, relative to the cross diameter.
    pub fn residual(&self) -> Result<f64> {
        let v = self.vertices;
        let scale = diameter(&v);
        let planar = coplanarity_residual(&v)?;
        let d1 = Line3::through(v[0], v[2])?;
        let d2 = Line3::through(v[1], v[3])?;
        let centre = d1.distance(self.centre).max(d2.distance(self.centre)) / scale;
        Ok(planar.max(centre))
    }
}

pub fn cross_from_rho(q: &CrisscrossedQuad) -> Result<Cross> {
    let [x1, x2, x3, x4] = q.corners;
    if tetra_volume_rel(x1, x2, x3, x4) < Tolerances::default().genericity_rel {
        return Err(Error::Degenerate("quadrilateral is not skew".into()));
    }
    let r = q.rho;
    let big = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut vertices = [Point3::ORIGIN; 4];
    let mut internal = [false; 4];
    for i in 0..4 {
        let j = (i + 1) % 4;
        let s = r[i] + r[j];
        if s.abs() <= RHO_SUM_EPS * big {
            return Err(Error::InfiniteCrossVertex);
        }
        vertices[i] = (q.corners[i] * r[i] + q.corners[j] * r[j]) / s;
        internal[i] = r[i].signum() == r[j].signum();
    }
    let total: f64 = r.iter().sum();
    if total.abs() <= RHO_SUM_EPS * big {
        return Err(Error::Degenerate(
            "centre at infinity (sum of rho vanishes)".into(),
        ));
    }
    let centre = (x1 * r[0] + x2 * r[1] + x3 * r[2] + x4 * r[3]) / total;
    let d1 = vertices[2] - vertices[0];
    let d2 = vertices[3] - vertices[1];
    let plane = Plane3::through_point(centre, d1.cross(d2))?;
    Ok(Cross {
        vertices,
        centre,
        plane,
        internal,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossKind {
    Internal,
    Restrictable,
    NonRestrictable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossClass {
    pub kind: CrossKind,
    /// `ρ1 ρ3 / (ρ2 ρ4) = 1`: the adapted hyperboloid is a hyperbolic paraboloid.
    pub paraboloid: bool,
}

fn nonzero(rho: &[f64]) -> Result<()> {
    if rho.iter().any(|r| *r == 0.0 || !r.is_finite()) {
        Err(Error::Zero("rho".into()))
    } else {
        Ok(())
    }
}

fn shape_ratio(r: &[f64; 4]) -> f64 {
    r[0] * r[2] / (r[1] * r[3])
}

pub fn classify_cross(rho: [f64; 4]) -> Result<CrossClass> {
    nonzero(&rho)?;
    let kind = if rho.iter().all(|r| r.signum() == rho[0].signum()) {
        CrossKind::Internal
    } else if rho.iter().product::<f64>() > 0.0 {
        CrossKind::Restrictable
    } else {
        CrossKind::NonRestrictable
    };
    let paraboloid = (shape_ratio(&rho) - 1.0).abs() <= 1e-10;
    Ok(CrossClass { kind, paraboloid })
}

/// Whether two weight quadruples define the same adapted hyperboloid.
pub fn same_hyperboloid(a: [f64; 4], b: [f64; 4]) -> Result<bool> {
    nonzero(&a)?;
    nonzero(&b)?;
    let (s, t) = (shape_ratio(&a), shape_ratio(&b));
    Ok((s - t).abs() <= 1e-10 * s.abs().max(t.abs()))
}

/// Geometric C¹ test for two quadrilaterals sharing the edge `left.x2 left.x3`
/// = `right.x1 right.x4` (neighbours along the first lattice direction).
///
/// Returns the coplanarity residual of the two far cross vertices together with
/// the endpoints of the shared edge.
pub fn c1_residual_geometric(
    left: &CrisscrossedQuad,
    right: &CrisscrossedQuad,
    tol: &Tolerances,
) -> Result<f64> {
    let lc = cross_from_rho(left)?;
    let rc = cross_from_rho(right)?;
    let mut all = left.corners.to_vec();
    all.extend_from_slice(&[right.corners[1], right.corners[2]]);
    let scale = diameter(&all);
    let gap = left.corners[1]
        .distance(right.corners[0])
        .max(left.corners[2].distance(right.corners[3]));
    if gap > tol.incidence_rel * scale {
        return Err(Error::Invalid("quadrilaterals do not share an edge".into()));
    }
    let shared = lc.vertices[1].distance(rc.vertices[3]) / scale;
    if shared > tol.incidence_rel {
        return Err(Error::Inconsistent {
            what: "shared cross vertex".into(),
            cell: GridIndex::new(&[]),
            residual: shared,
        });
    }
    coplanarity_residual(&[
        lc.vertices[3],
        left.corners[1],
        rc.vertices[1],
        left.corners[2],
    ])
}

/// `|ρ3 ρ6 / (ρ1 ρ4) - aã| / |aã|` for the six vertices of two adjacent
/// quadrilaterals, labelled `x(z), x(z+e), x(z+2e), x(z+2e+f), x(z+e+f), x(z+f)`.
pub fn c1_residual_algebraic(rho: [f64; 6], inv: f64) -> Result<f64> {
    nonzero(&rho)?;
    if inv == 0.0 || !inv.is_finite() {
        return Err(Error::Zero("parallel invariant".into()));
    }
    let lhs = rho[2] * rho[5] / (rho[0] * rho[3]);
    Ok(((lhs - inv) / inv).abs())
}

/// The parallel invariant recovered from lengths alone: with
/// `r = <x2,x5> ∩ <x1,x3>` and `s = <x2,x5> ∩ <x4,x6>` it equals
/// `l(x1,r)/l(r,x3) · l(x4,s)/l(s,x6)` (same six-vertex labelling as above).
pub fn invariant_from_lengths(x: [Point3; 6]) -> Result<f64> {
    let [x1, x2, x3, x4, x5, x6] = x;
    let mid = Line3::through(x2, x5)?;
    let ratio = |a: Point3, b: Point3| -> Result<f64> {
        let l = Line3::through(a, b)?;
        let (p, _) = intersect_lines(&mid, &l)?;
        let t = l.param(p);
        Ok(t / (l.param(b) - t))
    };
    Ok(ratio(x1, x3)? * ratio(x4, x6)?)
}

/// Far cross vertex of the neighbour: projection of `far` through the shared
/// edge line onto the neighbour's opposite edge line.
pub fn propagate_cross_vertex(
    edge: (Point3, Point3),
    far: Point3,
    target: (Point3, Point3),
) -> Result<Point3> {
    let axis = Line3::through(edge.0, edge.1)?;
    let t = Line3::through(target.0, target.1)?;
    project_through_line(far, &axis, &t)
}

/// `ρ_iij = ρ_ii ρ_j / (ρ a^ij a^ij_i)`.
pub fn rho_evolve(rho: f64, rho_j: f64, rho_ii: f64, a_ij: f64, a_ij_i: f64) -> Result<f64> {
    nonzero(&[rho, rho_j, rho_ii])?;
    if a_ij == 0.0 || a_ij_i == 0.0 {
        return Err(Error::Zero("Moutard coefficient".into()));
    }
    Ok(rho_ii * rho_j / (rho * a_ij * a_ij_i))
}

/// Cauchy data for ρ: both axes and the vertex `(1,1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoSeeds {
    /// `ρ(i, 0)` for every `i` of the window.
    pub axis1: Vec<f64>,
    /// `ρ(0, j)` for every `j` of the window.
    pub axis2: Vec<f64>,
    pub rho11: f64,
}

impl RhoSeeds {
    pub fn constant(extent: (usize, usize), v: f64) -> Self {
        RhoSeeds {
            axis1: vec![v; extent.0],
            axis2: vec![v; extent.1],
            rho11: v,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        RhoSeeds {
            axis1: self.axis1.iter().map(|v| v * c).collect(),
            axis2: self.axis2.iter().map(|v| v * c).collect(),
            rho11: self.rho11 * c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionOrder {
    #[default]
    RowsFirst,
    ColumnsFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetStatus {
    PreHyperbolic,
    Hyperbolic,
    Invalid,
}

impl std::fmt::Display for NetStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NetStatus::PreHyperbolic => "pre_hyperbolic",
            NetStatus::Hyperbolic => "hyperbolic",
            NetStatus::Invalid => "invalid",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicNet {
    pub surface: ANet,
    pub rho: RhoField,
    pub status: NetStatus,
    /// Failing pairs (invalid) or quadrilaterals with external cross vertices
    /// (pre-hyperbolic), by lowest anchor.
    pub offending: Vec<GridIndex>,
}

impl HyperbolicNet {
    pub fn quad(&self, anchor: GridIndex) -> Result<CrisscrossedQuad> {
        quad_at(&self.surface, &self.rho, anchor)
    }

    /// Recomputes status and offending cells from the current ρ.
    pub fn classify(surface: ANet, rho: RhoField, tol: &Tolerances) -> Result<Self> {
        let sweep = c1_sweep(&surface, &rho, tol)?;
        let failing: Vec<GridIndex> = sweep
            .iter()
            .filter(|p| !p.passes(tol) || p.disagrees(tol))
            .map(|p| p.anchor)
            .collect();
        let (status, offending) = if !failing.is_empty() {
            (NetStatus::Invalid, failing)
        } else if rho.sign().is_some() {
            (NetStatus::Hyperbolic, Vec::new())
        } else {
            let w = surface.window().faces((1, 2));
            let ext = w
                .indices()
                .filter(|&z| {
                    let q = [
                        z,
                        z.offset(1, 1),
                        z.offset(1, 1).offset(2, 1),
                        z.offset(2, 1),
                    ];
                    q.iter().any(|&v| rho.at(v).signum() != rho.at(z).signum())
                })
                .collect();
            (NetStatus::PreHyperbolic, ext)
        };
        Ok(HyperbolicNet {
            surface,
            rho,
            status,
            offending,
        })
    }
}

/// Crisscrossed quadrilateral of a 2D net at `anchor`.
pub fn quad_at(surface: &ANet, rho: &RhoField, anchor: GridIndex) -> Result<CrisscrossedQuad> {
    let idx = [
        anchor,
        anchor.offset(1, 1),
        anchor.offset(1, 1).offset(2, 1),
        anchor.offset(2, 1),
    ];
    let mut corners = [Point3::ORIGIN; 4];
    let mut r = [0.0; 4];
    for k in 0..4 {
        corners[k] = surface.vertices.get(idx[k])?;
        r[k] = rho.field().get(idx[k])?;
    }
    CrisscrossedQuad::new(corners, r)
}

/// Both C¹ residuals for one pair of edge-adjacent quadrilaterals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C1Pair {
    /// Anchor of the first quadrilateral of the pair.
    pub anchor: GridIndex,
    /// Lattice direction in which the pair is adjacent.
    pub axis: usize,
    pub geometric: f64,
    pub algebraic: f64,
}

impl C1Pair {
    pub fn passes(&self, tol: &Tolerances) -> bool {
        self.geometric <= tol.incidence_rel && self.algebraic <= tol.incidence_rel
    }

    pub fn disagrees(&self, tol: &Tolerances) -> bool {
        (self.geometric <= tol.incidence_rel) != (self.algebraic <= tol.incidence_rel)
    }
}

/// Geometric and algebraic C¹ residuals of all adjacent pairs of a 2D net.
pub fn c1_sweep(surface: &ANet, rho: &RhoField, tol: &Tolerances) -> Result<Vec<C1Pair>> {
    if surface.dim() != 2 {
        return Err(Error::Invalid("C1 sweep needs a 2D net".into()));
    }
    let a12 = surface
        .coefficients((1, 2))
        .ok_or_else(|| Error::Invalid("missing a^12 coefficients".into()))?;
    let faces = surface.window().faces((1, 2));
    let mut out = Vec::new();
    for axis in [1usize, 2] {
        let other = 3 - axis;
        for z in faces.shrink(axis, 1).indices() {
            let mut left = quad_at(surface, rho, z)?;
            let mut right = quad_at(surface, rho, z.offset(axis, 1))?;
            if axis == 2 {
                left = left.transposed();
                right = right.transposed();
            }
            let geometric = c1_residual_geometric(&left, &right, tol)?;
            let e = |a: i64, b: i64| z.offset(axis, a).offset(other, b);
            let r = |i: GridIndex| rho.at(i);
            let six = [
                r(e(0, 0)),
                r(e(1, 0)),
                r(e(2, 0)),
                r(e(2, 1)),
                r(e(1, 1)),
                r(e(0, 1)),
            ];
            let inv = a12.get(z)? * a12.get(z.offset(axis, 1))?;
            let algebraic = c1_residual_algebraic(six, inv)?;
            out.push(C1Pair {
                anchor: z,
                axis,
                geometric,
                algebraic,
            });
        }
    }
    Ok(out)
}

/// ρ on a 2D net from its Cauchy data, imposing C¹ on every pair of
/// edge-adjacent quadrilaterals. Rows-first evolution.
pub fn solve_rho_cauchy(net: &ANet, seeds: &RhoSeeds, tol: &Tolerances) -> Result<HyperbolicNet> {
    solve_rho_cauchy_ordered(net, seeds, EvolutionOrder::RowsFirst, tol)
}

/// As [`solve_rho_cauchy`] with an explicit evolution order. Cells with both
/// coordinates `>= 2` can be reached in either direction; the other direction's
/// value is computed as well and must agree.
pub fn solve_rho_cauchy_ordered(
    net: &ANet,
    seeds: &RhoSeeds,
    order: EvolutionOrder,
    tol: &Tolerances,
) -> Result<HyperbolicNet> {
    let rho = evolve_rho(net, seeds, order, tol)?;
    HyperbolicNet::classify(net.clone(), rho, tol)
}

/// The ρ field alone, without the status sweep.
pub fn evolve_rho(
    net: &ANet,
    seeds: &RhoSeeds,
    order: EvolutionOrder,
    tol: &Tolerances,
) -> Result<RhoField> {
    if net.dim() != 2 {
        return Err(Error::Invalid("rho Cauchy problem needs a 2D net".into()));
    }
    let w = net.window();
    let (w1, w2) = (w.extent(1), w.extent(2));
    if w.origin() != ix2(0, 0) {
        return Err(Error::Shape("window must start at the origin".into()));
    }
    if seeds.axis1.len() < w1 {
        return Err(Error::Invalid(format!(
            "missing rho seed at cell ({},0)",
            seeds.axis1.len()
        )));
    }
    if seeds.axis2.len() < w2 {
        return Err(Error::Invalid(format!(
            "missing rho seed at cell (0,{})",
            seeds.axis2.len()
        )));
    }
    if seeds.axis1[0] != seeds.axis2[0] {
        return Err(Error::Invalid("rho seeds disagree at the origin".into()));
    }
    nonzero(&seeds.axis1[..w1])?;
    nonzero(&seeds.axis2[..w2])?;
    let a12 = net
        .coefficients((1, 2))
        .ok_or_else(|| Error::Invalid("missing a^12 coefficients".into()))?;
    let a = |i: i64, j: i64| a12.get(ix2(i, j));

    let mut rho = ScalarField::unset(w);
    for i in 0..w1 {
        rho.set(ix2(i as i64, 0), seeds.axis1[i])?;
    }
    for j in 0..w2 {
        rho.set(ix2(0, j as i64), seeds.axis2[j])?;
    }
    if w1 < 2 || w2 < 2 {
        return RhoField::new(rho);
    }
    nonzero(&[seeds.rho11])?;
    rho.set(ix2(1, 1), seeds.rho11)?;

    // Cell (i, j) from the pair of quadrilaterals to its lower left, along 1 or 2.
    let along1 = |r: &ScalarField, i: i64, j: i64| -> Result<f64> {
        rho_evolve(
            r[ix2(i - 2, j - 1)],
            r[ix2(i - 2, j)],
            r[ix2(i, j - 1)],
            a(i - 2, j - 1)?,
            a(i - 1, j - 1)?,
        )
    };
    let along2 = |r: &ScalarField, i: i64, j: i64| -> Result<f64> {
        rho_evolve(
            r[ix2(i - 1, j - 2)],
            r[ix2(i, j - 2)],
            r[ix2(i - 1, j)],
            a(i - 1, j - 2)?,
            a(i - 1, j - 1)?,
        )
    };
    let (w1, w2) = (w1 as i64, w2 as i64);
    for i in 2..w1 {
        let v = along1(&rho, i, 1)?;
        rho.set(ix2(i, 1), v)?;
    }
    for j in 2..w2 {
        let v = along2(&rho, 1, j)?;
        rho.set(ix2(1, j), v)?;
    }
    let cells: Vec<(i64, i64)> = match order {
        EvolutionOrder::RowsFirst => (2..w2).flat_map(|j| (2..w1).map(move |i| (i, j))).collect(),
        EvolutionOrder::ColumnsFirst => {
            (2..w1).flat_map(|i| (2..w2).map(move |j| (i, j))).collect()
        }
    };
    for (i, j) in cells {
        let (v, check) = match order {
            EvolutionOrder::RowsFirst => (along1(&rho, i, j)?, along2(&rho, i, j)?),
            EvolutionOrder::ColumnsFirst => (along2(&rho, i, j)?, along1(&rho, i, j)?),
        };
        let res = ((v - check) / v).abs();
        if !(res <= tol.incidence_rel) {
            return Err(Error::Inconsistent {
                what: "rho evolution".into(),
                cell: ix2(i, j),
                residual: res,
            });
        }
        rho.set(ix2(i, j), v)?;
    }
    RhoField::new(rho)
}

/// True iff every parallel invariant is positive; otherwise lists the offending
/// pairs as `(anchor, direction)`.
pub fn extendability_check(net: &ANet) -> Result<(bool, Vec<(GridIndex, usize)>)> {
    let inv = parallel_invariants(net)?;
    let mut bad = Vec::new();
    for (axis, f) in [(1usize, &inv.first), (2, &inv.second)] {
        for (z, v) in f.iter() {
            if !(v > 0.0) {
                bad.push((z, axis));
            }
        }
    }
    Ok((bad.is_empty(), bad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    fn unit_quad() -> [Point3; 4] {
        [p(0., 0., 0.), p(1., 0., 0.), p(1., 1., 1.), p(0., 1., 0.)]
    }

    #[test]
    fn midpoint_cross() {
        let q = CrisscrossedQuad::new(unit_quad(), [1.0; 4]).unwrap();
        let c = cross_from_rho(&q).unwrap();
        assert_eq!(c.vertices[0], p(0.5, 0., 0.));
        assert_eq!(c.vertices[1], p(1., 0.5, 0.5));
        assert_eq!(c.centre, p(0.5, 0.5, 0.25));
        assert_eq!(c.internal, [true; 4]);
        assert!(c.residual().unwrap() < 1e-15);

        let c7 = cross_from_rho(&q.scaled(7.0)).unwrap();
        for k in 0..4 {
            assert!(c7.vertices[k].distance(c.vertices[k]) < 1e-15);
        }
        assert!(c7.centre.distance(c.centre) < 1e-15);
    }

    #[test]
    fn infinite_vertex_rejected() {
        let q = CrisscrossedQuad::new(unit_quad(), [1.0, -1.0, 2.0, 3.0]).unwrap();
        assert_eq!(cross_from_rho(&q), Err(Error::InfiniteCrossVertex));
    }

    #[test]
    fn classification() {
        let c = classify_cross([1.0; 4]).unwrap();
        assert_eq!(
            c,
            CrossClass {
                kind: CrossKind::Internal,
                paraboloid: true
            }
        );
        assert_eq!(
            classify_cross([1., -1., 1., -1.]).unwrap().kind,
            CrossKind::Restrictable
        );
        assert_eq!(
            classify_cross([1., 1., 1., -1.]).unwrap().kind,
            CrossKind::NonRestrictable
        );
        assert!(classify_cross([1., 0., 1., 1.]).is_err());
    }

    #[test]
    fn hyperboloid_identity() {
        assert!(same_hyperboloid([1.; 4], [2.; 4]).unwrap());
        assert!(!same_hyperboloid([1.; 4], [2., 1., 2., 1.]).unwrap());
        let (a, b, c, d) = (0.3, -1.7, 2.2, 0.9);
        let t = -3.1;
        assert!(same_hyperboloid([a, b, c, d], [t * a, b, c / t, d]).unwrap());
    }

    #[test]
    fn algebraic_examples() {
        assert_eq!(c1_residual_algebraic([1.; 6], 1.0).unwrap(), 0.0);
        assert_eq!(
            c1_residual_algebraic([1., 1., 2., 1., 1., 1.], 2.0).unwrap(),
            0.0
        );
        assert!(c1_residual_algebraic([1., 1., 2., 0., 1., 1.], 2.0).is_err());
    }

    #[test]
    fn evolve_examples() {
        assert_eq!(rho_evolve(1., 1., 1., 1., 1.).unwrap(), 1.0);
        assert_eq!(rho_evolve(1., 2., 3., 1., 2.).unwrap(), 3.0);
        assert!(rho_evolve(1., 2., 3., 0., 2.).is_err());
    }

    #[test]
    fn mirror_symmetric_pair() {
        // Reflection z -> -z maps the configuration onto itself.
        let left = [
            p(-1., 0., 0.3),
            p(0., 0., 0.),
            p(0., 1., 0.),
            p(-1., 1., -0.3),
        ];
        let right = [
            p(0., 0., 0.),
            p(1., 0., 0.3),
            p(1., 1., -0.3),
            p(0., 1., 0.),
        ];
        let l = CrisscrossedQuad::new(left, [1.0; 4]).unwrap();
        let r = CrisscrossedQuad::new(right, [1.0; 4]).unwrap();
        let res = c1_residual_geometric(&l, &r, &Tolerances::default()).unwrap();
        assert!(res < 1e-15, "{res}");
    }

    #[test]
    fn symmetric_projection() {
        let q = propagate_cross_vertex(
            (p(0., 0., 0.), p(0., 1., 0.)),
            p(-1., 0.5, 0.2),
            (p(1., 0., 0.), p(1., 1., 0.4)),
        )
        .unwrap();
        // The plane through the y-axis and (-1, 0.5, 0.2) is z = -0.2 x.
        assert_relative_eq!(q.z, -0.2 * q.x, epsilon = 1e-14);
        assert_relative_eq!(q.x, 1.0, epsilon = 1e-14);
    }
}
