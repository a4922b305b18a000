//! Discrete A-nets in Lelieuvre form.
//!
//! Normals satisfy the Moutard equation `n_ij - n = a^ij (n_j - n_i)` and the
//! vertices are recovered from `x_i - x = n_i × n`. Only the canonical
//! coefficients `a^ij` with `i < j` are stored; `a^ji = -a^ij`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{coplanarity_residual, tetra_volume_rel, Point3, Tolerances};
use crate::lattice::{ix2, FaceField, GridIndex, ScalarField, VectorField, Window};

pub const PLANES_3D: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

#[derive(Clone, Debug, PartialEq)]
pub struct ANet {
    pub vertices: VectorField,
    pub normals: Option<VectorField>,
    /// Canonical coefficient fields, one per plane pair `(i, j)` with `i < j`.
    pub moutard: Vec<FaceField>,
}

/// Which ordered triple of coefficients a τ-potential parametrizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientFamily {
    /// `(a^12, a^13, a^23)`
    Lexicographic,
    /// `(a^21, a^23, a^31)`
    Weingarten,
    /// `(a^12, a^32, a^13)`, the negative of the Weingarten family.
    WeingartenDual,
}

impl CoefficientFamily {
    /// Factor turning the canonical `a^ij` (i<j) into this family's member.
    pub fn sign(self, plane: (usize, usize)) -> f64 {
        match (self, plane) {
            (CoefficientFamily::Lexicographic, _) => 1.0,
            (CoefficientFamily::Weingarten, (2, 3)) => 1.0,
            (CoefficientFamily::Weingarten, _) => -1.0,
            (CoefficientFamily::WeingartenDual, (2, 3)) => -1.0,
            (CoefficientFamily::WeingartenDual, _) => 1.0,
        }
    }

    /// dBKP signs `(ε1, ε2, ε3)` satisfied by potentials of this family.
    pub fn bkp_signs(self) -> [f64; 3] {
        match self {
            CoefficientFamily::Lexicographic => [-1.0, 1.0, -1.0],
            _ => [-1.0, -1.0, 1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Canonical,
    SignFlipped,
    Reciprocal,
    SignFlippedReciprocal,
}

/// A coefficient together with the orientation of the picture it belongs to.
/// Reversing one normal flips the sign; exchanging the diagonal roles inverts it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoutardCoefficient {
    pub value: f64,
    pub orientation: Orientation,
}

impl MoutardCoefficient {
    pub fn canonical(a: f64) -> Self {
        MoutardCoefficient {
            value: a,
            orientation: Orientation::Canonical,
        }
    }

    pub fn canonical_value(&self) -> f64 {
        match self.orientation {
            Orientation::Canonical => self.value,
            Orientation::SignFlipped => -self.value,
            Orientation::Reciprocal => 1.0 / self.value,
            Orientation::SignFlippedReciprocal => -1.0 / self.value,
        }
    }

    pub fn to(&self, orientation: Orientation) -> Self {
        let a = self.canonical_value();
        let value = match orientation {
            Orientation::Canonical => a,
            Orientation::SignFlipped => -a,
            Orientation::Reciprocal => 1.0 / a,
            Orientation::SignFlippedReciprocal => -1.0 / a,
        };
        MoutardCoefficient { value, orientation }
    }
}

pub fn moutard_step(n: Point3, n_i: Point3, n_j: Point3, a: f64) -> Point3 {
    n + (n_j - n_i) * a
}

fn unit(axis: usize, dim: usize) -> GridIndex {
    let mut c = [0i64; 3];
    c[axis - 1] = 1;
    GridIndex::new(&c[..dim])
}

fn add(a: GridIndex, b: GridIndex) -> GridIndex {
    let c: Vec<i64> = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x + y)
        .collect();
    GridIndex::new(&c)
}

fn bbox_diagonal(points: impl Iterator<Item = Point3>) -> f64 {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    let mut any = false;
    for p in points {
        any = true;
        lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    if any {
        (hi - lo).norm()
    } else {
        0.0
    }
}

/// Largest `|x_i - x - n_i × n|` over all lattice edges, divided by `scale`.
fn edge_residual(x: &VectorField, n: &VectorField, scale: f64) -> (f64, Option<GridIndex>) {
    let w = *x.window();
    let mut worst = (0.0, None);
    for idx in w.indices() {
        for a in 1..=w.dim() {
            let nb = idx.offset(a, 1);
            if !w.contains(nb) {
                continue;
            }
            let r = (x[nb] - x[idx] - n[nb].cross(n[idx])).norm() / scale;
            if !(r <= worst.0) {
                worst = (r, Some(idx));
            }
        }
    }
    worst
}

/// Vertices from normals by summing `n_i × n` along lexicographic paths starting
/// at `x0` (placed at the window origin); every edge is checked afterwards.
pub fn lelieuvre_integrate(
    normals: &VectorField,
    x0: Point3,
    tol: &Tolerances,
) -> Result<VectorField> {
    normals.ensure_complete()?;
    let w = *normals.window();
    let mut x = VectorField::unset(w);
    for idx in w.indices() {
        let back = (1..=w.dim()).rev().find(|&a| idx.get(a) > w.lo(a));
        let v = match back {
            None => x0,
            Some(a) => {
                let prev = idx.offset(a, -1);
                x[prev] + normals[idx].cross(normals[prev])
            }
        };
        x.set(idx, v)?;
    }
    let scale = bbox_diagonal(x.iter().map(|(_, p)| p));
    if !(scale > 0.0) {
        return Err(Error::Genericity {
            cell: w.origin(),
            what: "all vertices coincide (degenerate normal field)".into(),
        });
    }
    let (res, at) = edge_residual(&x, normals, scale);
    if !(res <= tol.incidence_rel) {
        return Err(Error::Closure {
            cell: at.unwrap_or(w.origin()),
            residual: res,
        });
    }
    Ok(x)
}

impl ANet {
    pub fn dim(&self) -> usize {
        self.vertices.window().dim()
    }

    pub fn window(&self) -> Window {
        *self.vertices.window()
    }

    pub fn coefficients(&self, plane: (usize, usize)) -> Option<&FaceField> {
        self.moutard.iter().find(|f| f.plane == plane)
    }

    /// Oriented coefficient `a^ij` at `anchor`, derived from storage for `i > j`.
    pub fn a(&self, i: usize, j: usize, anchor: GridIndex) -> Result<f64> {
        let (p, s) = if i < j { ((i, j), 1.0) } else { ((j, i), -1.0) };
        let f = self
            .coefficients(p)
            .ok_or_else(|| Error::Invalid(format!("no coefficients for plane {p:?}")))?;
        Ok(s * f.get(anchor)?)
    }

    pub fn scale(&self) -> f64 {
        bbox_diagonal(self.vertices.iter().map(|(_, p)| p))
    }

    /// Max vertex-star coplanarity residual and where it occurs.
    pub fn planarity_residual(&self) -> Result<(f64, Option<GridIndex>)> {
        let w = self.window();
        let mut worst = (0.0, None);
        for idx in w.indices() {
            let mut star = vec![self.vertices.get(idx)?];
            for a in 1..=w.dim() {
                for k in [-1, 1] {
                    if let Some(p) = self.vertices.try_at(idx.offset(a, k)) {
                        star.push(p);
                    }
                }
            }
            if star.len() < 4 {
                continue;
            }
            let r = coplanarity_residual(&star)?;
            if !(r <= worst.0) {
                worst = (r, Some(idx));
            }
        }
        Ok(worst)
    }

    /// Max Lelieuvre edge residual relative to the net's scale; `None` without normals.
    pub fn lelieuvre_residual(&self) -> Option<f64> {
        let n = self.normals.as_ref()?;
        let scale = self.scale();
        Some(edge_residual(&self.vertices, n, if scale > 0.0 { scale } else { 1.0 }).0)
    }

    /// Rejects nets with a (nearly) planar elementary quadrilateral.
    pub fn check_genericity(&self, tol: &Tolerances) -> Result<()> {
        let w = self.window();
        let dim = w.dim();
        for &(i, j) in planes_of(dim) {
            for anchor in w.faces((i, j)).indices() {
                let q = [
                    self.vertices[anchor],
                    self.vertices[anchor.offset(i, 1)],
                    self.vertices[add(anchor, add(unit(i, dim), unit(j, dim)))],
                    self.vertices[anchor.offset(j, 1)],
                ];
                let vol = tetra_volume_rel(q[0], q[1], q[2], q[3]);
                if !(vol >= tol.genericity_rel) {
                    return Err(Error::Genericity {
                        cell: anchor,
                        what: format!("quadrilateral in plane {i}{j} is not skew (volume {vol:e})"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Planarity and Lelieuvre checks every solver output must pass.
    pub fn check_invariants(&self, tol: &Tolerances) -> Result<()> {
        let (planar, _) = self.planarity_residual()?;
        if !(planar <= tol.incidence_rel) {
            return Err(Error::Invariant {
                what: "vertex star planarity".into(),
                residual: planar,
            });
        }
        if let Some(l) = self.lelieuvre_residual() {
            if !(l <= tol.incidence_rel) {
                return Err(Error::Invariant {
                    what: "Lelieuvre edges".into(),
                    residual: l,
                });
            }
        }
        Ok(())
    }

    /// The 2D net at height `k` of a 3D net, re-indexed over `(z1, z2)`.
    pub fn layer(&self, k: i64) -> Result<ANet> {
        if self.dim() != 3 {
            return Err(Error::Invalid("layer() needs a 3D net".into()));
        }
        let w = self.window();
        if k < w.lo(3) || k >= w.hi(3) {
            return Err(Error::OutOfWindow {
                index: GridIndex::new(&[w.lo(1), w.lo(2), k]),
            });
        }
        let w2 = Window::new(&[(w.lo(1), w.hi(1)), (w.lo(2), w.hi(2))])?;
        let lift = |i: GridIndex| GridIndex::new(&[i.get(1), i.get(2), k]);
        let vertices = VectorField::from_fn(w2, |i| self.vertices[lift(i)]);
        let normals = self
            .normals
            .as_ref()
            .map(|n| VectorField::from_fn(w2, |i| n[lift(i)]));
        let mut moutard = Vec::new();
        if let Some(f) = self.coefficients((1, 2)) {
            let vals = ScalarField::from_values(
                w2.faces((1, 2)),
                w2.faces((1, 2))
                    .indices()
                    .map(|i| f.values.try_at(lift(i)))
                    .collect(),
            )?;
            moutard.push(FaceField::new((1, 2), vals)?);
        }
        Ok(ANet {
            vertices,
            normals,
            moutard,
        })
    }

    /// Layers `k0..=k1` of a 3D net, shifted so the first one sits at height 0.
    pub fn layers(&self, k0: i64, k1: i64) -> Result<ANet> {
        let w = self.window();
        if self.dim() != 3 || k0 < w.lo(3) || k1 >= w.hi(3) || k1 <= k0 {
            return Err(Error::Invalid(format!("bad layer range {k0}..={k1}")));
        }
        let sub = Window::new(&[(w.lo(1), w.hi(1)), (w.lo(2), w.hi(2)), (0, k1 - k0 + 1)])?;
        let lift = |i: GridIndex| GridIndex::new(&[i.get(1), i.get(2), i.get(3) + k0]);
        let vertices = VectorField::from_fn(sub, |i| self.vertices[lift(i)]);
        let normals = self
            .normals
            .as_ref()
            .map(|n| VectorField::from_fn(sub, |i| n[lift(i)]));
        let mut moutard = Vec::new();
        for f in &self.moutard {
            let fw = sub.faces(f.plane);
            let vals = ScalarField::from_values(
                fw,
                fw.indices().map(|i| f.values.try_at(lift(i))).collect(),
            )?;
            moutard.push(FaceField::new(f.plane, vals)?);
        }
        Ok(ANet {
            vertices,
            normals,
            moutard,
        })
    }

    /// Same net with black-white rescaled normals and correspondingly rescaled
    /// coefficients (`α²` on even anchors, `α⁻²` on odd ones).
    pub fn bw_rescaled(&self, alpha: f64) -> Result<ANet> {
        let normals = match &self.normals {
            Some(n) => Some(bw_rescale(n, alpha)?),
            None => return Err(Error::Invalid("net has no normals".into())),
        };
        let moutard = self
            .moutard
            .iter()
            .map(|f| {
                let w = *f.values.window();
                let vals = ScalarField::from_values(
                    w,
                    w.indices()
                        .map(|i| {
                            let s = if i.is_even() {
                                alpha * alpha
                            } else {
                                1.0 / (alpha * alpha)
                            };
                            f.values.try_at(i).map(|a| a * s)
                        })
                        .collect(),
                )?;
                FaceField::new(f.plane, vals)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ANet {
            vertices: self.vertices.clone(),
            normals,
            moutard,
        })
    }
}

fn planes_of(dim: usize) -> &'static [(usize, usize)] {
    if dim == 3 {
        &PLANES_3D
    } else {
        &PLANES_3D[..1]
    }
}

/// Fills every unset normal from earlier ones with the Moutard equation.
fn complete_normals(normals: &mut VectorField, moutard: &[FaceField]) -> Result<()> {
    let w = *normals.window();
    let dim = w.dim();
    for idx in w.indices() {
        if normals.is_set(idx) {
            continue;
        }
        let up: Vec<usize> = (1..=dim).filter(|&a| idx.get(a) > w.lo(a)).collect();
        if up.len() < 2 {
            return Err(Error::Unset { index: idx });
        }
        let (i, j) = (up[up.len() - 2], up[up.len() - 1]);
        let anchor = idx.offset(i, -1).offset(j, -1);
        let f = moutard
            .iter()
            .find(|f| f.plane == (i, j))
            .ok_or_else(|| Error::Invalid(format!("no coefficients for plane {i}{j}")))?;
        let n = moutard_step(
            normals[anchor],
            normals[anchor.offset(i, 1)],
            normals[anchor.offset(j, 1)],
            f.get(anchor)?,
        );
        normals.set(idx, n)?;
    }
    Ok(())
}

/// A-surface from normals on both coordinate axes and `a^12` on every quadrilateral.
///
/// `axis1[i] = n(i, 0)`, `axis2[j] = n(0, j)`; the window is
/// `[0, axis1.len()) x [0, axis2.len())`.
pub fn solve_surface_cauchy(
    axis1: &[Point3],
    axis2: &[Point3],
    a12: &FaceField,
    x0: Point3,
    tol: &Tolerances,
) -> Result<ANet> {
    if axis1.is_empty() || axis2.is_empty() {
        return Err(Error::Shape("empty axis data".into()));
    }
    if axis1[0] != axis2[0] {
        return Err(Error::Invalid("axis normals disagree at the origin".into()));
    }
    let w = Window::sized(&[axis1.len(), axis2.len()]);
    if a12.plane != (1, 2) || a12.values.window() != &w.faces((1, 2)) {
        return Err(Error::Shape(format!(
            "a12 must cover {:?}",
            w.faces((1, 2))
        )));
    }
    a12.values.ensure_complete()?;
    let mut normals = VectorField::unset(w);
    for (i, n) in axis1.iter().enumerate() {
        normals.set(ix2(i as i64, 0), *n)?;
    }
    for (j, n) in axis2.iter().enumerate() {
        normals.set(ix2(0, j as i64), *n)?;
    }
    let moutard = vec![a12.clone()];
    complete_normals(&mut normals, &moutard)?;
    let vertices = lelieuvre_integrate(&normals, x0, tol)?;
    let net = ANet {
        vertices,
        normals: Some(normals),
        moutard,
    };
    net.check_genericity(tol)?;
    net.check_invariants(tol)?;
    Ok(net)
}

/// Black-white rescaling: `α n` on even vertices, `n / α` on odd ones.
pub fn bw_rescale(normals: &VectorField, alpha: f64) -> Result<VectorField> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::Zero("black-white rescaling factor".into()));
    }
    let w = *normals.window();
    let vals = w
        .indices()
        .map(|i| {
            normals
                .try_at(i)
                .map(|n| if i.is_even() { n * alpha } else { n / alpha })
        })
        .collect();
    VectorField::from_values(w, vals)
}

/// Least-squares coefficients `a^ij` of a normal field on the plane `(i, j)`.
pub fn moutard_from_normals(normals: &VectorField, plane: (usize, usize)) -> Result<FaceField> {
    let w = *normals.window();
    let (i, j) = plane;
    let dim = w.dim();
    let mut out = FaceField::unset_over(&w, plane);
    for anchor in out.values.window().indices().collect::<Vec<_>>() {
        let n = normals.get(anchor)?;
        let ni = normals.get(anchor.offset(i, 1))?;
        let nj = normals.get(anchor.offset(j, 1))?;
        let nij = normals.get(add(anchor, add(unit(i, dim), unit(j, dim))))?;
        let d = nj - ni;
        let dd = d.dot(d);
        if !(dd > 0.0) {
            return Err(Error::Genericity {
                cell: anchor,
                what: "n_i = n_j".into(),
            });
        }
        out.values.set(anchor, (nij - n).dot(d) / dd)?;
    }
    Ok(out)
}

/// Products `a(z) a(z + e)` of edge-adjacent quadrilaterals.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelInvariants {
    /// Neighbours along the first axis of the plane, anchored at the left quad.
    pub first: ScalarField,
    /// Neighbours along the second axis, anchored at the lower quad.
    pub second: ScalarField,
}

pub fn parallel_invariants_of(face: &FaceField) -> Result<ParallelInvariants> {
    let w = *face.values.window();
    let (i, j) = face.plane;
    let build = |axis: usize| -> Result<ScalarField> {
        let pw = w.shrink(axis, 1);
        let mut f = ScalarField::unset(pw);
        for z in pw.indices().collect::<Vec<_>>() {
            f.set(z, face.get(z)? * face.get(z.offset(axis, 1))?)?;
        }
        Ok(f)
    };
    Ok(ParallelInvariants {
        first: build(i)?,
        second: build(j)?,
    })
}

/// Parallel invariants `a^12 a^12_i` of the (1,2) coefficients.
pub fn parallel_invariants(net: &ANet) -> Result<ParallelInvariants> {
    let f = net
        .coefficients((1, 2))
        .ok_or_else(|| Error::Invalid("missing a^12 coefficients".into()))?;
    parallel_invariants_of(f)
}

/// Shifted coefficients of an A-cube in the Weingarten orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeStep {
    pub a21_3: f64,
    pub a23_1: f64,
    pub a31_2: f64,
    /// `a21 (a23 + a31) - a23 a31`; every coefficient is divided by it.
    pub denom: f64,
}

fn singular(d: f64, scale: f64) -> bool {
    !(d.abs() > 1e-12 * scale) || !d.is_finite()
}

/// `a^ij_k = a^ij / (a21 (a23 + a31) - a23 a31)` for the triple `(a21, a23, a31)`.
pub fn evolve_moutard_cube(a21: f64, a23: f64, a31: f64) -> Result<CubeStep> {
    let denom = a21 * (a23 + a31) - a23 * a31;
    let scale = (a21 * a23).abs() + (a21 * a31).abs() + (a23 * a31).abs();
    if singular(denom, scale) {
        return Err(Error::Singular {
            cell: GridIndex::new(&[]),
        });
    }
    Ok(CubeStep {
        a21_3: a21 / denom,
        a23_1: a23 / denom,
        a31_2: a31 / denom,
        denom,
    })
}

/// Lexicographic form `a^ij_k = -a^ij / (a12 a23 + a23 a31 + a31 a12)`.
pub fn evolve_lexicographic(a12: f64, a23: f64, a31: f64) -> Result<(f64, f64, f64)> {
    let s = a12 * a23 + a23 * a31 + a31 * a12;
    let scale = (a12 * a23).abs() + (a23 * a31).abs() + (a31 * a12).abs();
    if singular(s, scale) {
        return Err(Error::Singular {
            cell: GridIndex::new(&[]),
        });
    }
    Ok((-a12 / s, -a23 / s, -a31 / s))
}

/// Cube evolution on canonical storage: `(a12, a13, a23) -> (a12_3, a13_2, a23_1)`.
pub fn evolve_canonical(a12: f64, a13: f64, a23: f64) -> Result<(f64, f64, f64)> {
    let s = evolve_moutard_cube(-a12, a23, -a13)?;
    Ok((-s.a21_3, -s.a31_2, s.a23_1))
}

/// Cauchy data for a 3D A-net on `[0,W1) x [0,W2) x [0,W3)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredCauchyData {
    /// Normals along each coordinate axis; index 0 of all three must agree.
    pub axis_normals: [Vec<Point3>; 3],
    /// `a^12` on the plane `z3 = 0`, indexed by `(z1, z2)`.
    pub a12: ScalarField,
    /// `a^13` on the plane `z2 = 0`, indexed by `(z1, z3)`.
    pub a13: ScalarField,
    /// `a^23` on the plane `z1 = 0`, indexed by `(z2, z3)`.
    pub a23: ScalarField,
    pub x0: Point3,
}

/// 3D A-net from data on the three coordinate planes.
///
/// Coefficients are evolved cube by cube with [`evolve_canonical`], normals by
/// the Moutard equation and vertices by Lelieuvre integration. Any number of
/// layers `W3 >= 2` is accepted.
pub fn solve_two_layer_cauchy(data: &LayeredCauchyData, tol: &Tolerances) -> Result<ANet> {
    let ext: Vec<usize> = data.axis_normals.iter().map(Vec::len).collect();
    if ext.iter().any(|&n| n < 2) {
        return Err(Error::Shape(
            "every axis needs at least two vertices".into(),
        ));
    }
    let o = data.axis_normals[0][0];
    if data.axis_normals[1][0] != o || data.axis_normals[2][0] != o {
        return Err(Error::Invalid("axis normals disagree at the origin".into()));
    }
    let w = Window::sized(&ext);
    let expect = |f: &ScalarField, a: usize, b: usize, name: &str| -> Result<()> {
        let want = Window::sized(&[ext[a] - 1, ext[b] - 1]);
        if f.window() != &want {
            return Err(Error::Shape(format!("{name} must cover {want:?}")));
        }
        f.ensure_complete()
    };
    expect(&data.a12, 0, 1, "a12")?;
    expect(&data.a13, 0, 2, "a13")?;
    expect(&data.a23, 1, 2, "a23")?;

    let mut f12 = FaceField::unset_over(&w, (1, 2));
    let mut f13 = FaceField::unset_over(&w, (1, 3));
    let mut f23 = FaceField::unset_over(&w, (2, 3));
    for (z, v) in data.a12.iter() {
        f12.values
            .set(GridIndex::new(&[z.get(1), z.get(2), 0]), v)?;
    }
    for (z, v) in data.a13.iter() {
        f13.values
            .set(GridIndex::new(&[z.get(1), 0, z.get(2)]), v)?;
    }
    for (z, v) in data.a23.iter() {
        f23.values
            .set(GridIndex::new(&[0, z.get(1), z.get(2)]), v)?;
    }
    let cubes = w.shrink(1, 1).shrink(2, 1).shrink(3, 1);
    for z in cubes.indices() {
        let (a12, a13, a23) = (f12.get(z)?, f13.get(z)?, f23.get(z)?);
        let (b12, b13, b23) =
            evolve_canonical(a12, a13, a23).map_err(|_| Error::Singular { cell: z })?;
        f12.values.set(z.offset(3, 1), b12)?;
        f13.values.set(z.offset(2, 1), b13)?;
        f23.values.set(z.offset(1, 1), b23)?;
    }
    let moutard = vec![f12, f13, f23];
    for f in &moutard {
        f.values.ensure_complete()?;
    }

    let mut normals = VectorField::unset(w);
    for (axis, ns) in data.axis_normals.iter().enumerate() {
        for (t, n) in ns.iter().enumerate() {
            let mut c = [0i64; 3];
            c[axis] = t as i64;
            normals.set(GridIndex::new(&c), *n)?;
        }
    }
    complete_normals(&mut normals, &moutard)?;
    let vertices = lelieuvre_integrate(&normals, data.x0, tol)?;
    let net = ANet {
        vertices,
        normals: Some(normals),
        moutard,
    };
    net.check_genericity(tol)?;
    net.check_invariants(tol)?;
    Ok(net)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauField {
    pub tau: ScalarField,
    pub family: CoefficientFamily,
}

/// τ-potential with `A^ij = τ_i τ_j / (τ τ_ij)` for the family member `A^ij`.
///
/// Only the axis cells of `seeds` are read; the coordinate planes and the
/// interior follow from the defining relation. In 3D the equal-ratio identity
/// `a^ij / a^ij_k` (same for all three planes) is checked first, since it is
/// exactly the integrability condition.
pub fn tau_potential(
    net: &ANet,
    family: CoefficientFamily,
    seeds: &ScalarField,
    tol: &Tolerances,
) -> Result<TauField> {
    let w = net.window();
    let dim = w.dim();
    if seeds.window() != &w {
        return Err(Error::Shape("seed field must use the net's window".into()));
    }
    let coef = |p: (usize, usize), z: GridIndex| -> Result<f64> {
        let a = family.sign(p) * net.a(p.0, p.1, z)?;
        if a == 0.0 {
            return Err(Error::Zero(format!("coefficient a{}{} at {z}", p.0, p.1)));
        }
        Ok(a)
    };
    if dim == 3 {
        let cubes = w.shrink(1, 1).shrink(2, 1).shrink(3, 1);
        for z in cubes.indices() {
            let r12 = coef((1, 2), z)? / coef((1, 2), z.offset(3, 1))?;
            let r13 = coef((1, 3), z)? / coef((1, 3), z.offset(2, 1))?;
            let r23 = coef((2, 3), z)? / coef((2, 3), z.offset(1, 1))?;
            let res = ((r12 - r13).abs().max((r12 - r23).abs())) / r12.abs();
            if !(res <= tol.incidence_rel) {
                return Err(Error::Inconsistent {
                    what: "integrability".into(),
                    cell: z,
                    residual: res,
                });
            }
        }
    }
    let mut tau = ScalarField::unset(w);
    for idx in w.indices() {
        let up: Vec<usize> = (1..=dim).filter(|&a| idx.get(a) > w.lo(a)).collect();
        let v = if up.len() < 2 {
            let s = seeds.get(idx)?;
            if s == 0.0 {
                return Err(Error::Zero(format!("tau seed at {idx}")));
            }
            s
        } else {
            let (i, j) = (up[up.len() - 2], up[up.len() - 1]);
            let z = idx.offset(i, -1).offset(j, -1);
            tau[z.offset(i, 1)] * tau[z.offset(j, 1)] / (tau[z] * coef((i, j), z)?)
        };
        tau.set(idx, v)?;
    }
    let out = TauField { tau, family };
    let res = tau_residual(net, &out)?;
    if !(res <= tol.incidence_rel) {
        return Err(Error::Invariant {
            what: "tau defining relation".into(),
            residual: res,
        });
    }
    Ok(out)
}

/// Max relative residual of `A^ij = τ_i τ_j / (τ τ_ij)` over all quadrilaterals.
pub fn tau_residual(net: &ANet, tau: &TauField) -> Result<f64> {
    let w = net.window();
    let mut worst: f64 = 0.0;
    for &p in planes_of(w.dim()) {
        for z in w.faces(p).indices() {
            let a = tau.family.sign(p) * net.a(p.0, p.1, z)?;
            let t = &tau.tau;
            let zi = z.offset(p.0, 1);
            let zj = z.offset(p.1, 1);
            let model = t[zi] * t[zj] / (t[z] * t[zi.offset(p.1, 1)]);
            worst = worst.max(((a - model) / a).abs());
        }
    }
    Ok(worst)
}

/// Coefficient pattern of a BKP-type equation
/// `τ τ_123 + κ1 τ_1 τ_23 + κ2 τ_2 τ_13 + κ3 τ_3 τ_12 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum BkpPattern {
    Signs([f64; 3]),
    /// Per-cube `κ` fields anchored at the lowest corner.
    Kappa(Box<[ScalarField; 3]>),
}

/// Per-cube residual `|τ τ_123 + Σ κ_i τ_i τ_jk| / max |term|`.
pub fn dbkp_residual(tau: &ScalarField, pattern: &BkpPattern) -> Result<ScalarField> {
    let w = *tau.window();
    if w.dim() != 3 || (1..=3).any(|a| w.extent(a) < 2) {
        return Err(Error::Shape(
            "dBKP needs a 3D window with extent >= 2".into(),
        ));
    }
    let cubes = w.shrink(1, 1).shrink(2, 1).shrink(3, 1);
    let mut out = ScalarField::unset(cubes);
    for z in cubes.indices() {
        let k = match pattern {
            BkpPattern::Signs(s) => *s,
            BkpPattern::Kappa(f) => [f[0].get(z)?, f[1].get(z)?, f[2].get(z)?],
        };
        let t = |d: [i64; 3]| tau.get(z.offset(1, d[0]).offset(2, d[1]).offset(3, d[2]));
        let terms = [
            t([0, 0, 0])? * t([1, 1, 1])?,
            k[0] * t([1, 0, 0])? * t([0, 1, 1])?,
            k[1] * t([0, 1, 0])? * t([1, 0, 1])?,
            k[2] * t([0, 0, 1])? * t([1, 1, 0])?,
        ];
        let big = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sum: f64 = terms.iter().sum();
        out.set(z, if big > 0.0 { sum.abs() / big } else { 0.0 })?;
    }
    Ok(out)
}
