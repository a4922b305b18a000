//! Seeded instance generators.
//!
//! Every generator draws from a caller-supplied RNG; [`rng`] fixes the
//! generator used throughout the crate and the CLI (ChaCha8 seeded from a
//! `u64`). Generators that can hit a non-generic draw retry with fresh numbers
//! from the same stream, so a seed always maps to the same instance.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::anet::{solve_surface_cauchy, solve_two_layer_cauchy, ANet, LayeredCauchyData};
use crate::error::{Error, Result};
use crate::geometry::{Plane3, Point3, Tolerances};
use crate::hypnet::{CrisscrossedQuad, RhoSeeds};
use crate::lattice::{FaceField, ScalarField, Window};
use crate::weingarten::{ACube, CubeCoefficients, EquitwistConfig};

pub type SynthRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SynthRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const ATTEMPTS: usize = 64;

/// Calls `f` until it succeeds, at most [`ATTEMPTS`] times, and returns the
/// last error otherwise.
pub fn retry<R: Rng + ?Sized, T>(rng: &mut R, mut f: impl FnMut(&mut R) -> Result<T>) -> Result<T> {
    let mut last = Error::Invalid("no attempt made".into());
    for _ in 0..ATTEMPTS {
        match f(rng) {
            Ok(v) => return Ok(v),
            Err(e) => last = e,
        }
    }
    Err(last)
}

pub fn random_point<R: Rng + ?Sized>(rng: &mut R, r: f64) -> Point3 {
    Point3::new(
        rng.gen_range(-r..r),
        rng.gen_range(-r..r),
        rng.gen_range(-r..r),
    )
}

fn signed<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let v = rng.gen_range(lo..hi);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Step size of the smooth generators.
pub const SMOOTH_STEP: f64 = 0.1;

/// Normals along both axes of a smooth surface. Along the first axis they
/// alternate in sign, so `a^12 ≈ -1` and every parallel invariant is close to 1.
pub fn smooth_axes<R: Rng + ?Sized>(
    rng: &mut R,
    w1: usize,
    w2: usize,
    h: f64,
) -> (Vec<Point3>, Vec<Point3>) {
    let (c1, c2) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
    let (d1, d2) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let axis1 = (0..w1)
        .map(|i| {
            let t = h * i as f64 * (1.0 + c1 * h * i as f64);
            let m = Point3::new(t.sin(), d1 * (1.0 - t.cos()), t.cos());
            if i % 2 == 0 {
                m
            } else {
                -m
            }
        })
        .collect();
    let axis2 = (0..w2)
        .map(|j| {
            let t = h * j as f64 * (1.0 + c2 * h * j as f64);
            Point3::new(d2 * (1.0 - t.cos()), t.sin(), t.cos())
        })
        .collect();
    (axis1, axis2)
}

/// `a^12 = -(1 + h² A)` with `A` uniform in `[-0.5, 0.5)`.
pub fn smooth_coefficients<R: Rng + ?Sized>(rng: &mut R, faces: Window, h: f64) -> ScalarField {
    ScalarField::from_fn(faces, |_| -(1.0 + h * h * rng.gen_range(-0.5..0.5)))
}

/// Discretization of a smooth negatively curved surface; all parallel
/// invariants are positive.
pub fn smooth_surface<R: Rng + ?Sized>(
    rng: &mut R,
    w1: usize,
    w2: usize,
    tol: &Tolerances,
) -> Result<ANet> {
    retry(rng, |rng| {
        let (a1, a2) = smooth_axes(rng, w1, w2, SMOOTH_STEP);
        let faces = Window::sized(&[w1, w2]).faces((1, 2));
        let a12 = FaceField::new((1, 2), smooth_coefficients(rng, faces, SMOOTH_STEP))?;
        solve_surface_cauchy(&a1, &a2, &a12, Point3::ORIGIN, tol)
    })
}

/// Random normals and `|a^12|` in `[0.5, 1.5)` with random signs.
pub fn random_surface<R: Rng + ?Sized>(
    rng: &mut R,
    w1: usize,
    w2: usize,
    tol: &Tolerances,
) -> Result<ANet> {
    retry(rng, |rng| {
        let o = random_point(rng, 1.0);
        let mut a1: Vec<Point3> = (0..w1).map(|_| random_point(rng, 1.0)).collect();
        let mut a2: Vec<Point3> = (0..w2).map(|_| random_point(rng, 1.0)).collect();
        a1[0] = o;
        a2[0] = o;
        let faces = Window::sized(&[w1, w2]).faces((1, 2));
        let a12 = FaceField::new(
            (1, 2),
            ScalarField::from_fn(faces, |_| signed(rng, 0.5, 1.5)),
        )?;
        solve_surface_cauchy(&a1, &a2, &a12, Point3::ORIGIN, tol)
    })
}

/// A 2D surface with exactly one negative coefficient among smooth ones.
pub fn surface_with_flipped_coefficient<R: Rng + ?Sized>(
    rng: &mut R,
    w1: usize,
    w2: usize,
    at: (i64, i64),
    tol: &Tolerances,
) -> Result<ANet> {
    retry(rng, |rng| {
        let (a1, a2) = smooth_axes(rng, w1, w2, SMOOTH_STEP);
        let faces = Window::sized(&[w1, w2]).faces((1, 2));
        let mut vals = smooth_coefficients(rng, faces, SMOOTH_STEP);
        let z = crate::lattice::ix2(at.0, at.1);
        let v = vals.get(z)?;
        vals.set(z, -v)?;
        solve_surface_cauchy(
            &a1,
            &a2,
            &FaceField::new((1, 2), vals)?,
            Point3::ORIGIN,
            tol,
        )
    })
}

/// 3D net with a smooth bottom layer, third-axis normals near the first one
/// and vertical coefficients with `|a|` in `[0.5, 1.5)`.
///
/// With `positive_vertical` the canonical `a^13` is negative and `a^23`
/// positive, which keeps the vertical parallel invariants positive.
pub fn layered_net<R: Rng + ?Sized>(
    rng: &mut R,
    w1: usize,
    w2: usize,
    w3: usize,
    positive_vertical: bool,
    tol: &Tolerances,
) -> Result<ANet> {
    retry(rng, |rng| {
        let (a1, a2) = smooth_axes(rng, w1, w2, SMOOTH_STEP);
        let mut a3 = vec![a1[0]];
        for k in 1..w3 {
            let prev: Point3 = a3[k - 1];
            a3.push(prev * -1.0 + random_point(rng, 0.6));
        }
        let a12 = smooth_coefficients(rng, Window::sized(&[w1 - 1, w2 - 1]), SMOOTH_STEP);
        let vertical = |rng: &mut R, n: usize, sign: f64| {
            ScalarField::from_fn(Window::sized(&[n, w3 - 1]), |_| {
                if positive_vertical {
                    sign * rng.gen_range(0.5..1.5)
                } else {
                    signed(rng, 0.5, 1.5)
                }
            })
        };
        let a13 = vertical(rng, w1 - 1, -1.0);
        let a23 = vertical(rng, w2 - 1, 1.0);
        let data = LayeredCauchyData {
            axis_normals: [a1, a2, a3],
            a12,
            a13,
            a23,
            x0: Point3::ORIGIN,
        };
        solve_two_layer_cauchy(&data, tol)
    })
}

/// Φ axes growing by factors in `[4, 8)` and random axis normals.
///
/// Fast growth keeps the bound `Φ/(Φ1+Φ2)` small, so the default policy draws
/// `a` close to `[0.5, 1.5)` and the normals stay spread out.
pub fn equitwist_config<R: Rng + ?Sized>(rng: &mut R, w1: usize, w2: usize) -> EquitwistConfig {
    let p0 = rng.gen_range(0.5..2.0);
    let mut grow = |n: usize| {
        let mut v = vec![p0];
        for _ in 1..n {
            let last = v[v.len() - 1];
            v.push(last * rng.gen_range(4.0..8.0));
        }
        v
    };
    let (phi_axis1, phi_axis2) = (grow(w1), grow(w2));
    let o = random_point(rng, 1.0);
    let mut axis = |n: usize| {
        let mut v: Vec<Point3> = (0..n).map(|_| random_point(rng, 1.0)).collect();
        v[0] = o;
        v
    };
    let normals = [axis(w1), axis(w2), axis(2)];
    EquitwistConfig {
        phi_axis1,
        phi_axis2,
        policy: Default::default(),
        normals,
        x0: Point3::ORIGIN,
    }
}

/// Equi-twisted two-layer net; redraws the configuration on genericity failures.
pub fn equitwisted_pair<R: Rng + ?Sized>(
    rng: &mut R,
    w1: usize,
    w2: usize,
    tol: &Tolerances,
) -> Result<crate::weingarten::EquitwistedPair> {
    retry(rng, |rng| {
        let cfg = equitwist_config(rng, w1, w2);
        crate::weingarten::generate_equitwisted_pair(&cfg, rng, tol)
    })
}

/// Uniform weights in `[lo, hi)` on both axes and at `(1,1)`.
pub fn rho_seeds<R: Rng + ?Sized>(rng: &mut R, w1: usize, w2: usize, lo: f64, hi: f64) -> RhoSeeds {
    let r0 = rng.gen_range(lo..hi);
    let mut axis1: Vec<f64> = (0..w1).map(|_| rng.gen_range(lo..hi)).collect();
    let mut axis2: Vec<f64> = (0..w2).map(|_| rng.gen_range(lo..hi)).collect();
    axis1[0] = r0;
    axis2[0] = r0;
    RhoSeeds {
        axis1,
        axis2,
        rho11: rng.gen_range(lo..hi),
    }
}

/// Weights within `1 ± SMOOTH_STEP`, the weight analogue of [`smooth_surface`].
pub fn smooth_rho_seeds<R: Rng + ?Sized>(rng: &mut R, w1: usize, w2: usize) -> RhoSeeds {
    rho_seeds(rng, w1, w2, 1.0 - SMOOTH_STEP, 1.0 + SMOOTH_STEP)
}

/// Elementary A-cube from random normals and coefficients, with its net.
pub fn random_a_cube<R: Rng + ?Sized>(
    rng: &mut R,
    tol: &Tolerances,
) -> Result<(ACube, CubeCoefficients, ANet)> {
    retry(rng, |rng| {
        let n: Vec<Point3> = (0..4).map(|_| random_point(rng, 1.0)).collect();
        let one = Window::sized(&[1, 1]);
        let data = LayeredCauchyData {
            axis_normals: [vec![n[0], n[1]], vec![n[0], n[2]], vec![n[0], n[3]]],
            a12: ScalarField::filled(one, signed(rng, 0.5, 1.5)),
            a13: ScalarField::filled(one, signed(rng, 0.5, 1.5)),
            a23: ScalarField::filled(one, signed(rng, 0.5, 1.5)),
            x0: random_point(rng, 1.0),
        };
        let net = solve_two_layer_cauchy(&data, tol)?;
        let z = net.window().origin();
        let cube = ACube::from_net(&net, z)?;
        cube.check_faces(tol)?;
        Ok((cube, CubeCoefficients::from_net(&net, z)?, net))
    })
}

/// Random nonzero-sum weights: magnitudes in `[0.5, 2)`, optionally signed.
pub fn random_weights<R: Rng + ?Sized, const N: usize>(rng: &mut R, signs: bool) -> [f64; N] {
    std::array::from_fn(|_| {
        if signs {
            signed(rng, 0.5, 2.0)
        } else {
            rng.gen_range(0.5..2.0)
        }
    })
}

/// Two edge-adjacent crisscrossed quadrilaterals of a random 3×2 A-net with
/// weights at five vertices; the sixth is C¹-consistent when `consistent` is
/// set and off by a factor in `[1.01, 1.5)` otherwise. Also returns the six
/// weights and the parallel invariant.
pub fn c1_pair<R: Rng + ?Sized>(
    rng: &mut R,
    consistent: bool,
    tol: &Tolerances,
) -> Result<(CrisscrossedQuad, CrisscrossedQuad, [f64; 6], f64)> {
    use crate::hypnet::cross_from_rho;
    use crate::lattice::ix2;
    retry(rng, |rng| {
        let net = random_surface(rng, 3, 2, tol)?;
        let a = net
            .coefficients((1, 2))
            .ok_or_else(|| Error::Invalid("no coefficients".into()))?;
        let inv = a.get(ix2(0, 0))? * a.get(ix2(1, 0))?;
        let mut r: [f64; 6] = random_weights(rng, false);
        r[3] = r[2] * r[5] / (r[0] * inv);
        if !consistent {
            r[3] *= rng.gen_range(1.01..1.5);
        }
        let x = |i, j| net.vertices.get(ix2(i, j));
        let left = CrisscrossedQuad::new(
            [x(0, 0)?, x(1, 0)?, x(1, 1)?, x(0, 1)?],
            [r[0], r[1], r[4], r[5]],
        )?;
        let right = CrisscrossedQuad::new(
            [x(1, 0)?, x(2, 0)?, x(2, 1)?, x(1, 1)?],
            [r[1], r[2], r[3], r[4]],
        )?;
        cross_from_rho(&left)?;
        cross_from_rho(&right)?;
        Ok((left, right, r, inv))
    })
}

/// Four planes through a random apex and one point on each of the six
/// pairwise intersection lines, ordered `12, 13, 14, 23, 24, 34`.
pub fn cox_config<R: Rng + ?Sized>(rng: &mut R) -> Result<(Point3, [Plane3; 4], [Point3; 6])> {
    use crate::geometry::Line3;
    retry(rng, |rng| {
        let apex = random_point(rng, 1.0);
        let mut planes = [Plane3::through_point(apex, Point3::new(0., 0., 1.))?; 4];
        for pl in &mut planes {
            *pl = Plane3::through_point(apex, random_point(rng, 1.0))?;
        }
        let mut x = [Point3::ORIGIN; 6];
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let l = Line3::new(apex, planes[i].normal.cross(planes[j].normal))?;
            x[k] = l.point_at(signed(rng, 0.5, 2.0));
        }
        crate::geometry::verify_cox(apex, &planes, &x)?;
        Ok((apex, planes, x))
    })
}

/// Closed polygon `x_0..x_n` in `R^D` and the points where a random
/// hyperplane meets its edge lines.
pub fn menelaus_instance<R: Rng + ?Sized, const D: usize>(
    rng: &mut R,
) -> Result<(Vec<[f64; D]>, Vec<[f64; D]>)> {
    retry(rng, |rng| {
        let x: Vec<[f64; D]> = (0..=D)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
            .collect();
        let normal: [f64; D] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let c: f64 = rng.gen_range(-0.3..0.3);
        let h = |p: &[f64; D]| p.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>() - c;
        let mut p = Vec::with_capacity(D + 1);
        for i in 0..=D {
            let (a, b) = (&x[i], &x[(i + 1) % (D + 1)]);
            let (ha, hb) = (h(a), h(b));
            if (ha - hb).abs() < 1e-3 || ha.abs() < 1e-3 || hb.abs() < 1e-3 {
                return Err(Error::Parallel);
            }
            let t = ha / (ha - hb);
            p.push(std::array::from_fn(|k| a[k] + t * (b[k] - a[k])));
        }
        Ok((x, p))
    })
}
