//! Points, lines and planes in R^3 with tolerance-based incidence predicates.
//!
//! Every residual returned here is relative: distances are divided by the
//! diameter of the configuration, so tolerances do not depend on the scale of
//! the input.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold below which a normalized determinant or sine counts as zero.
const PARALLEL_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Point3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn normalized(self) -> Option<Point3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Point3> for f64 {
    type Output = Point3;
    fn mul(self, p: Point3) -> Point3 {
        p * self
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Line through `base` with unit `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line3 {
    pub base: Point3,
    pub direction: Point3,
}

impl Line3 {
    pub fn new(base: Point3, direction: Point3) -> Result<Self> {
        let direction = direction
            .normalized()
            .ok_or_else(|| Error::Degenerate("zero line direction".into()))?;
        Ok(Line3 { base, direction })
    }

    pub fn through(a: Point3, b: Point3) -> Result<Self> {
        Line3::new(a, b - a).map_err(|_| Error::RepeatedPoints)
    }

    pub fn point_at(&self, t: f64) -> Point3 {
        self.base + self.direction * t
    }

    /// Signed coordinate of the orthogonal projection of `p`.
    pub fn param(&self, p: Point3) -> f64 {
        (p - self.base).dot(self.direction)
    }

    pub fn distance(&self, p: Point3) -> f64 {
        let d = p - self.base;
        (d - self.direction * d.dot(self.direction)).norm()
    }
}

/// Plane `{p : normal . p = offset}` with unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane3 {
    pub normal: Point3,
    pub offset: f64,
}

impl Plane3 {
    pub fn new(normal: Point3, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Degenerate("zero plane normal".into()));
        }
        Ok(Plane3 {
            normal: normal / n,
            offset: offset / n,
        })
    }

    pub fn through_point(p: Point3, normal: Point3) -> Result<Self> {
        Plane3::new(normal, normal.dot(p))
    }

    /// Exact plane through three points; fails when they are (nearly) collinear.
    pub fn from_points(a: Point3, b: Point3, c: Point3) -> Result<Self> {
        let u = b - a;
        let v = c - a;
        let n = u.cross(v);
        let scale = u.norm().max(v.norm()).max((c - b).norm());
        if n.norm() <= PARALLEL_EPS * scale * scale {
            return Err(Error::Degenerate("collinear plane points".into()));
        }
        Plane3::through_point(a, n)
    }

    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Tolerances shared by all incidence predicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Incidence residual bound, relative to the configuration diameter.
    pub incidence_rel: f64,
    /// Minimum normalized tetrahedron volume for a quadrilateral to count as skew.
    pub genericity_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            incidence_rel: 1e-9,
            genericity_rel: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn new(incidence_rel: f64, genericity_rel: f64) -> Result<Self> {
        let t = Tolerances {
            incidence_rel,
            genericity_rel,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.incidence_rel > 0.0 && self.genericity_rel > 0.0 {
            Ok(())
        } else {
            Err(Error::Invalid(
                "tolerances must be strictly positive".into(),
            ))
        }
    }
}

/// Point type usable by the dimension-generic routines (Menelaus, hyperplane fits).
pub trait AffinePoint: Copy {
    fn dim(&self) -> usize;
    fn coord(&self, k: usize) -> f64;
}

impl AffinePoint for Point3 {
    fn dim(&self) -> usize {
        3
    }
    fn coord(&self, k: usize) -> f64 {
        match k {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl<const D: usize> AffinePoint for [f64; D] {
    fn dim(&self) -> usize {
        D
    }
    fn coord(&self, k: usize) -> f64 {
        self[k]
    }
}

fn diff<P: AffinePoint>(a: &P, b: &P) -> Vec<f64> {
    (0..a.dim()).map(|k| a.coord(k) - b.coord(k)).collect()
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn diameter<P: AffinePoint>(points: &[P]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let v = diff(a, b);
            d = d.max(dotv(&v, &v).sqrt());
        }
    }
    d
}

/// Max distance to the best-fit hyperplane over the diameter, in any dimension.
///
/// The fit uses the centroid and the eigenvector of the smallest eigenvalue of
/// the second-moment matrix.
pub fn hyperplane_residual<P: AffinePoint>(points: &[P]) -> Result<f64> {
    let Some(first) = points.first() else {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    };
    let dim = first.dim();
    if points.len() < dim + 1 {
        return Err(Error::TooFewPoints {
            needed: dim + 1,
            got: points.len(),
        });
    }
    let diam = diameter(points);
    if !(diam > 0.0) {
        return Err(Error::Coincident);
    }
    let n = points.len() as f64;
    let centroid: Vec<f64> = (0..dim)
        .map(|k| points.iter().map(|p| p.coord(k)).sum::<f64>() / n)
        .collect();
    let centred: Vec<Vec<f64>> = points
        .iter()
        .map(|p| (0..dim).map(|k| p.coord(k) - centroid[k]).collect())
        .collect();
    let normal: Vec<f64> = if dim == 3 {
        let mut m = Matrix3::zeros();
        for c in &centred {
            let v = Vector3::new(c[0], c[1], c[2]);
            m += v * v.transpose();
        }
        smallest_eigvec3(m).iter().copied().collect()
    } else {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for c in &centred {
            for i in 0..dim {
                for j in 0..dim {
                    m[(i, j)] += c[i] * c[j];
                }
            }
        }
        let eig = SymmetricEigen::new(m);
        let k = eig.eigenvalues.imin();
        eig.eigenvectors.column(k).iter().copied().collect()
    };
    let worst = centred
        .iter()
        .map(|c| dotv(c, &normal).abs())
        .fold(0.0, f64::max);
    Ok(worst / diam)
}

fn smallest_eigvec3(m: Matrix3<f64>) -> Vector3<f64> {
    let eig = SymmetricEigen::new(m);
    let k = eig.eigenvalues.imin();
    eig.eigenvectors.column(k).into_owned()
}

/// Relative distance of at least four points from their best-fit plane.
pub fn coplanarity_residual(points: &[Point3]) -> Result<f64> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: points.len(),
        });
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Invalid("non-finite point".into()));
    }
    hyperplane_residual(points)
}

/// Closest-point midpoint of two lines and the length of the shortest segment.
///
/// The gap is absolute since a pair of lines carries no scale of its own;
/// callers normalize by their configuration diameter.
pub fn intersect_lines(l1: &Line3, l2: &Line3) -> Result<(Point3, f64)> {
    let b = l1.direction.dot(l2.direction);
    let denom = 1.0 - b * b;
    if denom.max(0.0).sqrt() < Tolerances::default().genericity_rel {
        return Err(Error::Parallel);
    }
    let w0 = l1.base - l2.base;
    let d = l1.direction.dot(w0);
    let e = l2.direction.dot(w0);
    let s = (b * e - d) / denom;
    let t = (e - b * d) / denom;
    let p1 = l1.point_at(s);
    let p2 = l2.point_at(t);
    Ok(((p1 + p2) * 0.5, p1.distance(p2)))
}

/// Intersection of the plane spanned by `p` and `axis` with `target`.
pub fn project_through_line(p: Point3, axis: &Line3, target: &Line3) -> Result<Point3> {
    let rel = p - axis.base;
    let n = axis.direction.cross(rel);
    let scale = 1.0 + rel.norm();
    if n.norm() <= PARALLEL_EPS * scale {
        return Err(Error::Degenerate("point lies on projection axis".into()));
    }
    let n = n / n.norm();
    let denom = n.dot(target.direction);
    if denom.abs() <= PARALLEL_EPS {
        return Err(Error::Parallel);
    }
    let t = n.dot(axis.base - target.base) / denom;
    Ok(target.point_at(t))
}

/// `l(a,b)/l(b,c) * l(c,d)/l(d,a)` with signed lengths along the common line.
pub fn cross_ratio(a: Point3, b: Point3, c: Point3, d: Point3) -> Result<f64> {
    let pts = [a, b, c, d];
    let diam = diameter(&pts);
    if !(diam > 0.0) {
        return Err(Error::Coincident);
    }
    for i in 0..4 {
        for j in i + 1..4 {
            if pts[i].distance(pts[j]) <= 1e-14 * diam {
                return Err(Error::RepeatedPoints);
            }
        }
    }
    let far = pts
        .iter()
        .copied()
        .max_by(|p, q| p.distance(a).total_cmp(&q.distance(a)))
        .unwrap_or(b);
    let line = Line3::through(a, far)?;
    let residual = pts.iter().map(|&p| line.distance(p)).fold(0.0, f64::max) / diam;
    if residual > Tolerances::default().incidence_rel {
        return Err(Error::NotCollinear { residual });
    }
    let l = |p: Point3, q: Point3| line.param(q) - line.param(p);
    Ok(l(a, b) / l(b, c) * (l(c, d) / l(d, a)))
}

/// Product of the directed ratios `l(x_i, p_i) / l(p_i, x_{i+1})` around a closed
/// polygon, with `p_i` on the line through `x_i` and `x_{i+1}`.
///
/// Each edge is measured along its own direction `x_{i+1} - x_i`; the orientation
/// cancels inside every quotient, so the value is independent of that choice.
pub fn menelaus_multiratio<P: AffinePoint>(x: &[P], p: &[P]) -> Result<f64> {
    if x.len() != p.len() {
        return Err(Error::Shape("x and p must have equal length".into()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: x.len(),
        });
    }
    let all: Vec<P> = x.iter().chain(p).copied().collect();
    let diam = diameter(&all);
    if !(diam > 0.0) {
        return Err(Error::Coincident);
    }
    let m = x.len();
    let mut product = 1.0;
    for i in 0..m {
        let a = &x[i];
        let b = &x[(i + 1) % m];
        let e = diff(b, a);
        let len = dotv(&e, &e).sqrt();
        if len <= 1e-14 * diam {
            return Err(Error::Coincident);
        }
        let e: Vec<f64> = e.iter().map(|v| v / len).collect();
        let ap = diff(&p[i], a);
        let t = dotv(&ap, &e);
        let off: f64 = ap
            .iter()
            .zip(&e)
            .map(|(v, u)| (v - t * u).powi(2))
            .sum::<f64>()
            .sqrt();
        let residual = off / diam;
        if residual > Tolerances::default().incidence_rel {
            return Err(Error::OffLine { index: i, residual });
        }
        let head = len - t;
        if t.abs() <= 1e-14 * diam || head.abs() <= 1e-14 * diam {
            return Err(Error::Coincident);
        }
        product *= t / head;
    }
    Ok(product)
}

/// Common point of three planes.
pub fn meet_planes(p: &Plane3, q: &Plane3, r: &Plane3) -> Result<Point3> {
    let m = Matrix3::from_rows(&[
        p.normal.to_vector().transpose(),
        q.normal.to_vector().transpose(),
        r.normal.to_vector().transpose(),
    ]);
    if m.determinant().abs() <= PARALLEL_EPS {
        return Err(Error::Degenerate(
            "three planes without a unique common point".into(),
        ));
    }
    let rhs = Vector3::new(p.offset, q.offset, r.offset);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("singular plane system".into()))?;
    Ok(Point3::from_vector(&sol))
}

/// Spread of the four triple intersections of the planes `P_123, P_124, P_134, P_234`,
/// relative to the diameter of the whole configuration including those points.
///
/// `x` holds the points on `P_i ∩ P_j` in the order 12, 13, 14, 23, 24, 34.
/// Points are not required to lie on their lines, so perturbed configurations
/// can be used as negative controls.
pub fn verify_cox(apex: Point3, planes: &[Plane3; 4], x: &[Point3; 6]) -> Result<f64> {
    let mut cloud = vec![apex];
    cloud.extend_from_slice(x);
    let scale = diameter(&cloud);
    if !(scale > 0.0) {
        return Err(Error::Coincident);
    }
    let miss = planes
        .iter()
        .map(|pl| pl.signed_distance(apex).abs())
        .fold(0.0, f64::max)
        / scale;
    if miss > Tolerances::default().incidence_rel {
        return Err(Error::NotConcurrent { residual: miss });
    }
    let [x12, x13, x14, x23, x24, x34] = *x;
    let p123 = Plane3::from_points(x12, x23, x13)?;
    let p124 = Plane3::from_points(x12, x24, x14)?;
    let p134 = Plane3::from_points(x13, x34, x14)?;
    let p234 = Plane3::from_points(x23, x34, x24)?;
    let meets = [
        meet_planes(&p123, &p124, &p134)?,
        meet_planes(&p123, &p124, &p234)?,
        meet_planes(&p123, &p134, &p234)?,
        meet_planes(&p124, &p134, &p234)?,
    ];
    cloud.extend_from_slice(&meets);
    Ok(diameter(&meets) / diameter(&cloud))
}

/// Least-squares common point of several lines and its max distance to them.
pub fn lines_concurrency(lines: &[Line3]) -> Result<(Point3, f64)> {
    if lines.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: lines.len(),
        });
    }
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for l in lines {
        let d = l.direction.to_vector();
        let proj = Matrix3::identity() - d * d.transpose();
        a += proj;
        b += proj * l.base.to_vector();
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("parallel lines".into()))?;
    let p = Point3::from_vector(&sol);
    let worst = lines.iter().map(|l| l.distance(p)).fold(0.0, f64::max);
    Ok((p, worst))
}

/// Normalized volume `|det(b-a, c-a, d-a)| / diam^3` of four points.
pub fn tetra_volume_rel(a: Point3, b: Point3, c: Point3, d: Point3) -> f64 {
    let diam = diameter(&[a, b, c, d]);
    if !(diam > 0.0) {
        return 0.0;
    }
    (b - a).cross(c - a).dot(d - a).abs() / diam.powi(3)
}
