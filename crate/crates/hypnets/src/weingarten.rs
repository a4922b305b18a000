//! Blaschke and Weingarten cubes, Bäcklund and Weingarten transformations of
//! (pre-)hyperbolic nets, ρ = τ normalization, equi-twisted data from a
//! potential Φ, and iteration of the Weingarten transformation.
//!
//! Transforms act on a 3D net whose layer `z3 = 0` is the surface of the given
//! hyperbolic net and whose layer `z3 = 1` is the transformed surface. Within a
//! cube the coefficients are read in the Weingarten orientation
//! `(a21, a23, a31)`, i.e. `(-a12, a23, -a13)` in canonical storage.
//!
//! Corners of an [`ACube`] are indexed by `b1 + 2 b2 + 4 b3` for the offset
//! `(b1, b2, b3)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anet::{
    dbkp_residual, solve_two_layer_cauchy, tau_residual, ANet, BkpPattern, CoefficientFamily,
    LayeredCauchyData, TauField,
};
use crate::error::{Error, Result};
use crate::geometry::{
    coplanarity_residual, diameter, lines_concurrency, project_through_line, tetra_volume_rel,
    Line3, Point3, Tolerances,
};
use crate::hypnet::{
    cross_from_rho, rho_evolve, CrisscrossedQuad, Cross, HyperbolicNet, NetStatus, RhoField,
};
use crate::lattice::{ix2, ix3, GridIndex, ScalarField, Window};

/// Corner cycles of the six faces: bottom, top, front, back, left, right.
/// Consecutive entries are opposite faces.
pub const CUBE_FACES: [[usize; 4]; 6] = [
    [0, 1, 3, 2],
    [4, 5, 7, 6],
    [0, 1, 5, 4],
    [2, 3, 7, 6],
    [0, 2, 6, 4],
    [1, 3, 7, 5],
];

const BOTTOM: [usize; 4] = CUBE_FACES[0];
const TOP: [usize; 4] = CUBE_FACES[1];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ACube {
    pub corners: [Point3; 8],
}

impl ACube {
    pub fn new(corners: [Point3; 8]) -> Self {
        ACube { corners }
    }

    pub fn from_net(net: &ANet, anchor: GridIndex) -> Result<Self> {
        if net.dim() != 3 {
            return Err(Error::Invalid("cubes need a 3D net".into()));
        }
        let mut corners = [Point3::ORIGIN; 8];
        for (k, c) in corners.iter_mut().enumerate() {
            let idx = anchor
                .offset(1, (k & 1) as i64)
                .offset(2, (k >> 1 & 1) as i64)
                .offset(3, (k >> 2) as i64);
            *c = net.vertices.get(idx)?;
        }
        Ok(ACube { corners })
    }

    pub fn face(&self, f: usize) -> [Point3; 4] {
        CUBE_FACES[f].map(|k| self.corners[k])
    }

    pub fn scale(&self) -> f64 {
        diameter(&self.corners)
    }

    /// Every face must be a skew quadrilateral.
    pub fn check_faces(&self, tol: &Tolerances) -> Result<()> {
        for f in 0..6 {
            let [a, b, c, d] = self.face(f);
            if tetra_volume_rel(a, b, c, d) < tol.genericity_rel {
                return Err(Error::Degenerate(format!("cube face {f} is planar")));
            }
        }
        Ok(())
    }
}

/// Coefficients of one cube in the Weingarten orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeCoefficients {
    pub a21: f64,
    pub a23: f64,
    pub a31: f64,
    pub a23_1: f64,
    pub a31_2: f64,
}

impl CubeCoefficients {
    pub fn from_net(net: &ANet, z: GridIndex) -> Result<Self> {
        Ok(CubeCoefficients {
            a21: net.a(2, 1, z)?,
            a23: net.a(2, 3, z)?,
            a31: net.a(3, 1, z)?,
            a23_1: net.a(2, 3, z.offset(1, 1))?,
            a31_2: net.a(3, 1, z.offset(2, 1))?,
        })
    }

    fn all(&self) -> [f64; 5] {
        [self.a21, self.a23, self.a31, self.a23_1, self.a31_2]
    }
}

fn face_centre(x: [Point3; 4], r: [f64; 4]) -> Result<Point3> {
    let s: f64 = r.iter().sum();
    let big = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s.abs() <= 1e-12 * big {
        return Err(Error::Degenerate("face weights sum to zero".into()));
    }
    Ok((0..4).fold(Point3::ORIGIN, |acc, k| acc + x[k] * r[k]) / s)
}

/// The eighth weight of a Blaschke cube from seven corner weights and the cross
/// vertex on the edge `110–111` taken from one of the faces through `111`.
pub fn complete_blaschke_cube(
    cube: &ACube,
    rho: [f64; 7],
    edge_vertex: Point3,
) -> Result<[f64; 8]> {
    if rho.iter().any(|r| *r == 0.0 || !r.is_finite()) {
        return Err(Error::Zero("corner rho".into()));
    }
    let (a, b) = (cube.corners[3], cube.corners[7]);
    let d = b - a;
    let line = Line3::through(a, b)?;
    let off = line.distance(edge_vertex) / cube.scale();
    if off > Tolerances::default().incidence_rel {
        return Err(Error::OffLine {
            index: 7,
            residual: off,
        });
    }
    let den = (b - edge_vertex).dot(d);
    if den == 0.0 {
        return Err(Error::InfiniteCrossVertex);
    }
    let r7 = rho[3] * (edge_vertex - a).dot(d) / den;
    if r7 == 0.0 {
        return Err(Error::Degenerate(
            "edge vertex coincides with a corner".into(),
        ));
    }
    let mut out = [0.0; 8];
    out[..7].copy_from_slice(&rho);
    out[7] = r7;
    Ok(out)
}

/// `p = Σ ρ x / Σ ρ` and the max distance from `p` to the three lines joining
/// centres of opposite crosses, relative to the cube diameter.
pub fn blaschke_center(cube: &ACube, rho: [f64; 8]) -> Result<(Point3, f64)> {
    let s: f64 = rho.iter().sum();
    let big = rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s.abs() <= 1e-12 * big {
        return Err(Error::Degenerate("sum of rho vanishes".into()));
    }
    let p = (0..8).fold(Point3::ORIGIN, |acc, k| acc + cube.corners[k] * rho[k]) / s;
    let mut worst: f64 = 0.0;
    for pair in 0..3 {
        let c: Vec<Point3> = (0..2)
            .map(|h| {
                let f = 2 * pair + h;
                face_centre(cube.face(f), CUBE_FACES[f].map(|k| rho[k]))
            })
            .collect::<Result<_>>()?;
        worst = worst.max(Line3::through(c[0], c[1])?.distance(p));
    }
    Ok((p, worst / cube.scale()))
}

/// Concurrency of the three centre lines when every face carries its own four
/// weights. Agrees with [`blaschke_center`] when the faces come from one ρ.
pub fn face_rho_concurrency(cube: &ACube, face_rho: &[[f64; 4]; 6]) -> Result<(Point3, f64)> {
    let c: Vec<Point3> = (0..6)
        .map(|f| face_centre(cube.face(f), face_rho[f]))
        .collect::<Result<_>>()?;
    let lines = [
        Line3::through(c[0], c[1])?,
        Line3::through(c[2], c[3])?,
        Line3::through(c[4], c[5])?,
    ];
    let (p, d) = lines_concurrency(&lines)?;
    Ok((p, d / cube.scale()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlgebraicPropagation {
    pub rho13: f64,
    pub rho23: f64,
    pub rho123: f64,
    /// Relative residual of the unused fourth condition.
    pub residual: f64,
}

/// Top weights of a Weingarten cube from the bottom weights `(ρ, ρ1, ρ2, ρ12)`
/// and the gauge `ρ3`.
pub fn weingarten_propagate_algebraic(
    bottom: [f64; 4],
    rho3: f64,
    c: &CubeCoefficients,
) -> Result<AlgebraicPropagation> {
    let [r, r1, r2, r12] = bottom;
    if bottom
        .iter()
        .chain(std::iter::once(&rho3))
        .any(|v| *v == 0.0 || !v.is_finite())
    {
        return Err(Error::Zero("rho".into()));
    }
    if c.all().iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::Zero("cube coefficient".into()));
    }
    let rho13 = rho3 * r12 * c.a21 / (r2 * c.a31);
    let rho23 = rho3 * r12 * c.a21 / (r1 * c.a23);
    let rho123 = r1 * rho23 / (r * c.a21 * c.a31_2);
    let lhs = c.a21 * c.a23_1;
    let residual = ((lhs - r2 * rho13 / (r * rho123)) / lhs).abs();
    Ok(AlgebraicPropagation {
        rho13,
        rho23,
        rho123,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricPropagation {
    pub top: Cross,
    /// Distance between the projections through the top edge and through the
    /// opposite bottom edge, relative to the diameter of the cube and both crosses.
    pub projection_gap: f64,
    pub planarity: f64,
    /// `q ∈ Π̃` and `q̃ ∈ Π`, relative to the same diameter.
    pub centre_residual: f64,
}

fn edges(x: [Point3; 4]) -> [(Point3, Point3); 4] {
    std::array::from_fn(|i| (x[i], x[(i + 1) % 4]))
}

/// Top cross of a Weingarten cube from the bottom cross, by projecting each
/// bottom vertex through the parallel top edge onto the opposite top edge.
pub fn weingarten_propagate_geometric(
    cube: &ACube,
    bottom: &Cross,
    tol: &Tolerances,
) -> Result<GeometricPropagation> {
    let b = BOTTOM.map(|k| cube.corners[k]);
    let t = TOP.map(|k| cube.corners[k]);
    let mut top = [Point3::ORIGIN; 4];
    let mut other = [Point3::ORIGIN; 4];
    for i in 0..4 {
        let k = (i + 2) % 4;
        let target = Line3::through(t[k], t[(k + 1) % 4])?;
        top[k] = project_through_line(
            bottom.vertices[i],
            &Line3::through(t[i], t[(i + 1) % 4])?,
            &target,
        )?;
        other[k] = project_through_line(
            bottom.vertices[i],
            &Line3::through(b[k], b[(k + 1) % 4])?,
            &target,
        )?;
    }
    let mut cloud = cube.corners.to_vec();
    cloud.extend_from_slice(&bottom.vertices);
    cloud.extend_from_slice(&top);
    let scale = diameter(&cloud);
    let gap = (0..4)
        .map(|k| top[k].distance(other[k]))
        .fold(0.0, f64::max)
        / scale;
    if gap > tol.incidence_rel {
        return Err(Error::Inconsistent {
            what: "edge projections".into(),
            cell: GridIndex::new(&[]),
            residual: gap,
        });
    }
    let planarity = coplanarity_residual(&top)?;
    if planarity > tol.incidence_rel {
        return Err(Error::Inconsistent {
            what: "top cross planarity".into(),
            cell: GridIndex::new(&[]),
            residual: planarity,
        });
    }
    let top = Cross::from_vertices(top, edges(t))?;
    cloud.extend_from_slice(&[bottom.centre, top.centre]);
    let centre_residual = top
        .plane
        .signed_distance(bottom.centre)
        .abs()
        .max(bottom.plane.signed_distance(top.centre).abs())
        / diameter(&cloud);
    Ok(GeometricPropagation {
        top,
        projection_gap: gap,
        planarity,
        centre_residual,
    })
}

/// Max over the four vertex pairs of the coplanarity residuals of
/// `{p̃_i, x_i, x_{i+1}, p_k}` and `{p_i, x̃_i, x̃_{i+1}, p̃_k}` with `k = i + 2`.
pub fn is_weingarten_cube(cube: &ACube, bottom: &Cross, top: &Cross) -> Result<f64> {
    let b = BOTTOM.map(|k| cube.corners[k]);
    let t = TOP.map(|k| cube.corners[k]);
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let (j, k) = ((i + 1) % 4, (i + 2) % 4);
        worst = worst.max(coplanarity_residual(&[
            top.vertices[i],
            b[i],
            b[j],
            bottom.vertices[k],
        ])?);
        worst = worst.max(coplanarity_residual(&[
            bottom.vertices[i],
            t[i],
            t[j],
            top.vertices[k],
        ])?);
    }
    Ok(worst)
}

/// Crosses of the bottom and top face of the cube at `z` under a 3D ρ.
pub fn cube_crosses(net: &ANet, rho: &RhoField, z: GridIndex) -> Result<(ACube, Cross, Cross)> {
    let cube = ACube::from_net(net, z)?;
    let w = |k: usize| {
        rho.field().get(
            z.offset(1, (k & 1) as i64)
                .offset(2, (k >> 1 & 1) as i64)
                .offset(3, (k >> 2) as i64),
        )
    };
    let quad = |f: [usize; 4]| -> Result<CrisscrossedQuad> {
        CrisscrossedQuad::new(
            f.map(|k| cube.corners[k]),
            [w(f[0])?, w(f[1])?, w(f[2])?, w(f[3])?],
        )
    };
    Ok((
        cube,
        cross_from_rho(&quad(BOTTOM)?)?,
        cross_from_rho(&quad(TOP)?)?,
    ))
}

fn check_pair(f: &HyperbolicNet, pair: &ANet, tol: &Tolerances) -> Result<()> {
    let w = pair.window();
    if pair.dim() != 3 || w.extent(3) != 2 || w.lo(3) != 0 {
        return Err(Error::Shape("transform needs a two-layer 3D net".into()));
    }
    let fw = f.surface.window();
    if fw.origin() != ix2(0, 0) || (1..=2).any(|a| w.lo(a) != fw.lo(a) || w.hi(a) != fw.hi(a)) {
        return Err(Error::Shape(
            "layer window differs from the net's window".into(),
        ));
    }
    let scale = f.surface.scale();
    for (i, x) in f.surface.vertices.iter() {
        let d = x.distance(pair.vertices.get(ix3(i.get(1), i.get(2), 0))?);
        if d > tol.incidence_rel * scale {
            return Err(Error::Invalid(format!(
                "bottom layer differs from the net at {i}"
            )));
        }
    }
    Ok(())
}

/// ρ of layer `k`, re-indexed over `(z1, z2)`.
pub fn layer_rho(rho: &ScalarField, k: i64) -> Result<RhoField> {
    let w = rho.window();
    let w2 = Window::new(&[(w.lo(1), w.hi(1)), (w.lo(2), w.hi(2))])?;
    RhoField::new(ScalarField::from_fn(w2, |i| {
        rho[ix3(i.get(1), i.get(2), k)]
    }))
}

/// ρ on both layers: the net's ρ below and a Bäcklund-evolved ρ̃ above.
///
/// `seeds` are ρ̃ at `(0,0)`, `(1,0)`, `(0,1)`, `(1,1)`. Rows `j < 2` use the
/// C¹ evolution in the planes `(1,3)`, the rest the planes `(2,3)`.
pub fn backlund_rho(
    f: &HyperbolicNet,
    pair: &ANet,
    seeds: [f64; 4],
    tol: &Tolerances,
) -> Result<RhoField> {
    check_pair(f, pair, tol)?;
    let w = pair.window();
    let mut rho = ScalarField::unset(w);
    for (i, v) in f.rho.field().iter() {
        rho.set(ix3(i.get(1), i.get(2), 0), v)?;
    }
    let (w1, w2) = (w.extent(1) as i64, w.extent(2) as i64);
    let a = |p: (usize, usize), i: i64, j: i64| -> Result<f64> {
        pair.coefficients(p)
            .ok_or_else(|| Error::Invalid("missing vertical coefficients".into()))?
            .get(ix3(i, j, 0))
    };
    for j in 0..w2 {
        for i in 0..w1 {
            let v = if i < 2 && j < 2 {
                seeds[(i + 2 * j) as usize]
            } else if j < 2 {
                rho_evolve(
                    rho[ix3(i - 2, j, 0)],
                    rho[ix3(i - 2, j, 1)],
                    rho[ix3(i, j, 0)],
                    a((1, 3), i - 2, j)?,
                    a((1, 3), i - 1, j)?,
                )?
            } else {
                rho_evolve(
                    rho[ix3(i, j - 2, 0)],
                    rho[ix3(i, j - 2, 1)],
                    rho[ix3(i, j, 0)],
                    a((2, 3), i, j - 2)?,
                    a((2, 3), i, j - 1)?,
                )?
            };
            rho.set(ix3(i, j, 1), v)?;
        }
    }
    RhoField::new(rho)
}

/// Bäcklund transform: the top layer with ρ̃ from [`backlund_rho`].
pub fn backlund_transform(
    f: &HyperbolicNet,
    pair: &ANet,
    seeds: [f64; 4],
    tol: &Tolerances,
) -> Result<HyperbolicNet> {
    let rho = backlund_rho(f, pair, seeds, tol)?;
    HyperbolicNet::classify(pair.layer(1)?, layer_rho(rho.field(), 1)?, tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeingartenPair {
    pub net: ANet,
    /// ρ on both layers.
    pub rho: RhoField,
    /// `a21 ρ ρ12 / (ρ1 ρ2)` on the lowest cube; `±1` after normalization.
    pub lambda: f64,
    /// Status of the transformed (top) net.
    pub status: NetStatus,
}

impl WeingartenPair {
    /// Pair from an arbitrary 3D ρ, e.g. a Bäcklund one.
    pub fn from_parts(net: ANet, rho: RhoField, tol: &Tolerances) -> Result<Self> {
        let lambda = lambda_at(&net, &rho, net.window().origin())?;
        let top = HyperbolicNet::classify(net.layer(1)?, layer_rho(rho.field(), 1)?, tol)?;
        Ok(WeingartenPair {
            net,
            rho,
            lambda,
            status: top.status,
        })
    }

    pub fn bottom(&self, tol: &Tolerances) -> Result<HyperbolicNet> {
        HyperbolicNet::classify(self.net.layer(0)?, layer_rho(self.rho.field(), 0)?, tol)
    }

    pub fn top(&self, tol: &Tolerances) -> Result<HyperbolicNet> {
        HyperbolicNet::classify(self.net.layer(1)?, layer_rho(self.rho.field(), 1)?, tol)
    }

    /// Max [`is_weingarten_cube`] residual over all cubes.
    pub fn cube_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for z in cubes(&self.net.window()).indices() {
            let (cube, b, t) = cube_crosses(&self.net, &self.rho, z)?;
            worst = worst.max(is_weingarten_cube(&cube, &b, &t)?);
        }
        Ok(worst)
    }
}

fn cubes(w: &Window) -> Window {
    w.shrink(1, 1).shrink(2, 1).shrink(3, 1)
}

/// `a21 ρ ρ12 / (ρ1 ρ2)` on the bottom face of the cube at `z`.
pub fn lambda_at(net: &ANet, rho: &RhoField, z: GridIndex) -> Result<f64> {
    let r = |i: GridIndex| rho.field().get(i);
    Ok(net.a(2, 1, z)? * r(z)? * r(z.offset(1, 1).offset(2, 1))?
        / (r(z.offset(1, 1))? * r(z.offset(2, 1))?))
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct TransformOptions {
    /// Anchor `(i, j)` of the initial Weingarten cube; lowest by default.
    pub initial: Option<(i64, i64)>,
    /// ρ̃ at the initial anchor; ρ there by default.
    pub gauge: Option<f64>,
}

/// Weingarten transform of `f` onto the top layer of `pair`.
///
/// The initial cube is completed algebraically and the top weights are spread
/// cube by cube in order of lattice distance; every top corner reached twice
/// must agree. Geometric checks are left to [`WeingartenPair::cube_residual`].
pub fn weingarten_transform(
    f: &HyperbolicNet,
    pair: &ANet,
    opts: TransformOptions,
    tol: &Tolerances,
) -> Result<WeingartenPair> {
    check_pair(f, pair, tol)?;
    let w = pair.window();
    let faces = f.surface.window().faces((1, 2));
    if faces.is_empty() {
        return Err(Error::Shape("net has no quadrilaterals".into()));
    }
    let (i0, j0) = opts.initial.unwrap_or((faces.lo(1), faces.lo(2)));
    if !faces.contains(ix2(i0, j0)) {
        return Err(Error::OutOfWindow { index: ix2(i0, j0) });
    }
    let mut rho = ScalarField::unset(w);
    for (i, v) in f.rho.field().iter() {
        rho.set(ix3(i.get(1), i.get(2), 0), v)?;
    }
    let gauge = opts.gauge.unwrap_or(f.rho.at(ix2(i0, j0)));
    rho.set(ix3(i0, j0, 1), gauge)?;

    let mut order: Vec<GridIndex> = faces.indices().collect();
    order.sort_by_key(|z| ((z.get(1) - i0).abs() + (z.get(2) - j0).abs(), *z));
    for z2 in order {
        let z = ix3(z2.get(1), z2.get(2), 0);
        let c = CubeCoefficients::from_net(pair, z)?;
        let at = |di: i64, dj: i64, k: i64| ix3(z.get(1) + di, z.get(2) + dj, k);
        let bottom = [
            rho[at(0, 0, 0)],
            rho[at(1, 0, 0)],
            rho[at(0, 1, 0)],
            rho[at(1, 1, 0)],
        ];
        let p = weingarten_propagate_algebraic(bottom, 1.0, &c)?;
        if !(p.residual <= tol.incidence_rel) {
            return Err(Error::Inconsistent {
                what: "Weingarten cube".into(),
                cell: z,
                residual: p.residual,
            });
        }
        let top = [at(0, 0, 1), at(1, 0, 1), at(0, 1, 1), at(1, 1, 1)];
        let ratio = [1.0, p.rho13, p.rho23, p.rho123];
        let k = (0..4)
            .find(|&k| rho.is_set(top[k]))
            .ok_or_else(|| Error::Invalid(format!("cube {z} not reached from the initial cube")))?;
        let s = rho[top[k]] / ratio[k];
        for k in 0..4 {
            let v = s * ratio[k];
            match rho.try_at(top[k]) {
                Some(old) => {
                    let res = ((old - v) / old).abs();
                    if !(res <= tol.incidence_rel) {
                        return Err(Error::Inconsistent {
                            what: "top weight".into(),
                            cell: top[k],
                            residual: res,
                        });
                    }
                }
                None => rho.set(top[k], v)?,
            }
        }
    }
    WeingartenPair::from_parts(pair.clone(), RhoField::new(rho)?, tol)
}

/// Black-white rescaling of the pair's normals that brings λ to `±1`, without
/// any consistency check.
pub fn normalized(pair: &WeingartenPair) -> Result<WeingartenPair> {
    let alpha = 1.0 / pair.lambda.abs().sqrt();
    let net = pair.net.bw_rescaled(alpha)?;
    Ok(WeingartenPair {
        lambda: pair.lambda.signum(),
        net,
        rho: pair.rho.clone(),
        status: pair.status,
    })
}

/// λ of the lowest cube and the normalized pair. Fails if `a^ij = λ ρ_i ρ_j /
/// (ρ ρ_ij)` does not then hold on every face.
pub fn normalize_lambda(pair: &WeingartenPair, tol: &Tolerances) -> Result<(f64, WeingartenPair)> {
    let out = normalized(pair)?;
    let report = verify_rho_equals_tau(&out)?;
    if !(report.residual <= tol.incidence_rel) {
        return Err(Error::Invariant {
            what: "lambda inconsistent across cubes".into(),
            residual: report.residual,
        });
    }
    Ok((pair.lambda, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoTauReport {
    pub family: CoefficientFamily,
    pub residual: f64,
}

/// Residual of `a^ij = ρ_i ρ_j / (ρ ρ_ij)` for the family selected by the sign
/// of λ: `(a21, a23, a31)` for `+1`, `(a12, a32, a13)` for `-1`.
pub fn verify_rho_equals_tau(pair: &WeingartenPair) -> Result<RhoTauReport> {
    let family = if pair.lambda > 0.0 {
        CoefficientFamily::Weingarten
    } else {
        CoefficientFamily::WeingartenDual
    };
    let tau = TauField {
        tau: pair.rho.field().clone(),
        family,
    };
    Ok(RhoTauReport {
        family,
        residual: tau_residual(&pair.net, &tau)?,
    })
}

/// The four parallel invariants around the two vertical loops are positive.
pub fn equi_twist_cube_check(c: &CubeCoefficients) -> Result<bool> {
    if c.all().iter().any(|v| *v == 0.0) {
        return Err(Error::Zero("cube coefficient".into()));
    }
    Ok(
        c.a31 / c.a21 > 0.0
            && c.a21 * c.a31_2 > 0.0
            && c.a23 / c.a21 > 0.0
            && c.a21 * c.a23_1 > 0.0,
    )
}

/// C¹ sign conditions of the remaining horizontal loop.
pub fn horizontal_loop_holds(c: &CubeCoefficients) -> bool {
    c.a31 / c.a23 < 0.0 && c.a31 * c.a23_1 < 0.0
}

/// Positive potential over a 2D window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhiField(ScalarField);

impl PhiField {
    pub fn new(phi: ScalarField) -> Result<Self> {
        phi.ensure_complete()?;
        if let Some((i, _)) = phi.iter().find(|&(_, v)| !(v > 0.0)) {
            return Err(Error::Invalid(format!("phi not positive at {i}")));
        }
        Ok(PhiField(phi))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    /// `a23 = Φ / Φ2` on every quadrilateral.
    pub fn a23(&self) -> ScalarField {
        let f = &self.0;
        ScalarField::from_fn(f.window().faces((1, 2)), |z| f[z] / f[z.offset(2, 1)])
    }

    /// `a31 = Φ / Φ1` on every quadrilateral.
    pub fn a31(&self) -> ScalarField {
        let f = &self.0;
        ScalarField::from_fn(f.window().faces((1, 2)), |z| f[z] / f[z.offset(1, 1)])
    }
}

/// How `a = a21` is chosen on each quadrilateral; it must exceed `Φ/(Φ1+Φ2)`.
#[derive(Clone, Debug, PartialEq)]
pub enum APolicy {
    /// `Φ/(Φ1+Φ2) + u` with `u` uniform in `[lo, hi)`.
    UniformOffset {
        lo: f64,
        hi: f64,
    },
    Given(ScalarField),
}

impl Default for APolicy {
    fn default() -> Self {
        APolicy::UniformOffset { lo: 0.5, hi: 1.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquitwistConfig {
    pub phi_axis1: Vec<f64>,
    pub phi_axis2: Vec<f64>,
    pub policy: APolicy,
    /// Normals along the three axes; the third has two entries.
    pub normals: [Vec<Point3>; 3],
    pub x0: Point3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquitwistedPair {
    pub phi: PhiField,
    pub a: ScalarField,
    pub a3: ScalarField,
    pub a23: ScalarField,
    pub a31: ScalarField,
    pub net: ANet,
}

/// Two-layer net whose every cube is equi-twisted, from one-dimensional Φ data.
///
/// `Φ12 = a (Φ1 + Φ2) - Φ`, `a23 = Φ/Φ2`, `a31 = Φ/Φ1`, `a3 = Φ1 Φ2 / (Φ Φ12) a`.
pub fn generate_equitwisted_pair<R: Rng + ?Sized>(
    cfg: &EquitwistConfig,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<EquitwistedPair> {
    let (w1, w2) = (cfg.phi_axis1.len(), cfg.phi_axis2.len());
    if w1 < 2 || w2 < 2 {
        return Err(Error::Shape("phi axes need at least two entries".into()));
    }
    if cfg.phi_axis1[0] != cfg.phi_axis2[0] {
        return Err(Error::Invalid("phi axes disagree at the origin".into()));
    }
    if cfg
        .phi_axis1
        .iter()
        .chain(&cfg.phi_axis2)
        .any(|v| !(*v > 0.0))
    {
        return Err(Error::Invalid("phi axis data must be positive".into()));
    }
    if cfg.normals[0].len() != w1 || cfg.normals[1].len() != w2 || cfg.normals[2].len() != 2 {
        return Err(Error::Shape(
            "axis normals do not match the phi window".into(),
        ));
    }
    let vw = Window::sized(&[w1, w2]);
    let fw = vw.faces((1, 2));
    if let APolicy::Given(f) = &cfg.policy {
        if f.window() != &fw {
            return Err(Error::Shape(format!("a must cover {fw:?}")));
        }
    }
    let mut phi = ScalarField::unset(vw);
    for (i, v) in cfg.phi_axis1.iter().enumerate() {
        phi.set(ix2(i as i64, 0), *v)?;
    }
    for (j, v) in cfg.phi_axis2.iter().enumerate() {
        phi.set(ix2(0, j as i64), *v)?;
    }
    let mut a = ScalarField::unset(fw);
    for z in fw.indices() {
        let (p, p1, p2) = (phi[z], phi[z.offset(1, 1)], phi[z.offset(2, 1)]);
        let bound = p / (p1 + p2);
        let v = match &cfg.policy {
            APolicy::UniformOffset { lo, hi } => bound + rng.gen_range(*lo..*hi),
            APolicy::Given(f) => f.get(z)?,
        };
        let p12 = v * (p1 + p2) - p;
        if !(v > bound) || !(p12 > 0.0) {
            return Err(Error::Invalid(format!(
                "a at {z} violates a > phi/(phi1+phi2)"
            )));
        }
        a.set(z, v)?;
        phi.set(z.offset(1, 1).offset(2, 1), p12)?;
    }
    let phi = PhiField::new(phi)?;
    let (a23, a31) = (phi.a23(), phi.a31());
    let pf = phi.field();
    let a3 = ScalarField::from_fn(fw, |z| {
        let z12 = z.offset(1, 1).offset(2, 1);
        pf[z.offset(1, 1)] * pf[z.offset(2, 1)] / (pf[z] * pf[z12]) * a[z]
    });

    let data = LayeredCauchyData {
        axis_normals: cfg.normals.clone(),
        a12: a.map(|v| -v),
        a13: ScalarField::from_fn(Window::sized(&[w1 - 1, 1]), |z| -a31[ix2(z.get(1), 0)]),
        a23: ScalarField::from_fn(Window::sized(&[w2 - 1, 1]), |z| a23[ix2(0, z.get(1))]),
        x0: cfg.x0,
    };
    let net = solve_two_layer_cauchy(&data, tol)?;
    let mut worst: f64 = 0.0;
    for z in fw.indices() {
        let z3 = ix3(z.get(1), z.get(2), 0);
        let pairs = [
            (net.a(2, 3, z3)?, a23[z]),
            (net.a(3, 1, z3)?, a31[z]),
            (net.a(2, 1, z3.offset(3, 1))?, a3[z]),
        ];
        for (got, want) in pairs {
            worst = worst.max(((got - want) / want).abs());
        }
    }
    if !(worst <= tol.incidence_rel) {
        return Err(Error::Invariant {
            what: "evolved coefficients differ from the phi formulas".into(),
            residual: worst,
        });
    }
    Ok(EquitwistedPair {
        phi,
        a,
        a3,
        a23,
        a31,
        net,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackResult {
    /// ρ on every layer.
    pub rho: RhoField,
    /// Per-cube dBKP residual with signs `(-, -, +)`.
    pub dbkp: ScalarField,
    pub max_dbkp: f64,
    /// Unnormalized λ of each layer pair.
    pub lambdas: Vec<f64>,
    /// Status of each transformed layer.
    pub statuses: Vec<NetStatus>,
}

/// Weingarten transforms of `f0` through every layer of `stack`.
///
/// The dBKP residual needs no λ normalization: each of its four terms pairs an
/// even with an odd vertex, so parity rescalings of ρ cancel.
pub fn iterate_weingarten(
    f0: &HyperbolicNet,
    stack: &ANet,
    tol: &Tolerances,
) -> Result<StackResult> {
    let w = stack.window();
    if stack.dim() != 3 || w.lo(3) != 0 || w.extent(3) < 2 {
        return Err(Error::Shape(
            "stack needs a 3D window with at least two layers".into(),
        ));
    }
    let mut rho = ScalarField::unset(w);
    let mut current = f0.clone();
    for (i, v) in f0.rho.field().iter() {
        rho.set(ix3(i.get(1), i.get(2), 0), v)?;
    }
    let mut lambdas = Vec::new();
    let mut statuses = Vec::new();
    for k in 0..w.hi(3) - 1 {
        let pair = stack.layers(k, k + 1)?;
        let wp = weingarten_transform(&current, &pair, TransformOptions::default(), tol)?;
        for (i, v) in wp.rho.field().iter().filter(|(i, _)| i.get(3) == 1) {
            rho.set(ix3(i.get(1), i.get(2), k + 1), v)?;
        }
        lambdas.push(wp.lambda);
        current = wp.top(tol)?;
        statuses.push(current.status);
    }
    let dbkp = dbkp_residual(
        &rho,
        &BkpPattern::Signs(CoefficientFamily::Weingarten.bkp_signs()),
    )?;
    let max_dbkp = dbkp.iter().fold(0.0f64, |m, (_, v)| m.max(v));
    Ok(StackResult {
        rho: RhoField::new(rho)?,
        dbkp,
        max_dbkp,
        lambdas,
        statuses,
    })
}
