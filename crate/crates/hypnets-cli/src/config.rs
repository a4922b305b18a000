//! `synth` configuration files.

use std::collections::BTreeMap;

use hypnets::anet::{solve_surface_cauchy, solve_two_layer_cauchy, ANet, LayeredCauchyData};
use hypnets::lattice::{FaceField, ScalarField, Window};
use hypnets::synth::{self, SynthRng, SMOOTH_STEP};
use hypnets::{Error, Point3, Result, Tolerances};
use rand::Rng;
use serde::Deserialize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Named {
    #[default]
    Random,
    Smooth,
    /// Coefficients of one sign, so every parallel invariant is positive.
    Positive,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NormalSpec {
    Named(Named),
    /// Normals along each axis; entry 0 of every axis must agree.
    Axes(Vec<Vec<Point3>>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CoefSpec {
    Named(Named),
    Constant(f64),
    /// Row-major values keyed by plane: `"12"` over `z3 = 0`, `"13"` over
    /// `z2 = 0`, `"23"` over `z1 = 0`.
    Planes(BTreeMap<String, Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Vertex counts per axis, two or three entries.
    pub extent: Vec<usize>,
    #[serde(default)]
    pub normals: Option<NormalSpec>,
    #[serde(default)]
    pub coefficients: Option<CoefSpec>,
    #[serde(default)]
    pub x0: Option<Point3>,
    /// Two-layer net from the Φ construction; `normals` and `coefficients`
    /// must then be absent.
    #[serde(default)]
    pub equi_twisted: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn magnitude(rng: &mut SynthRng) -> f64 {
    rng.gen_range(0.5..1.5)
}

fn coef_field(spec: &CoefSpec, key: &str, w: Window, sign: f64, rng: &mut SynthRng) -> Result<ScalarField> {
    Ok(match spec {
        CoefSpec::Constant(c) => ScalarField::filled(w, *c),
        CoefSpec::Named(Named::Random) => ScalarField::from_fn(w, |_| {
            let m = magnitude(rng);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        }),
        CoefSpec::Named(Named::Positive) => ScalarField::from_fn(w, |_| sign * magnitude(rng)),
        CoefSpec::Named(Named::Smooth) if key == "12" => synth::smooth_coefficients(rng, w, SMOOTH_STEP),
        CoefSpec::Named(Named::Smooth) => ScalarField::from_fn(w, |_| sign * magnitude(rng)),
        CoefSpec::Planes(m) => {
            let v = m.get(key).ok_or_else(|| bad(format!("coefficients: missing plane \"{key}\"")))?;
            if v.len() != w.len() {
                return Err(bad(format!("coefficients \"{key}\": expected {} values, got {}", w.len(), v.len())));
            }
            ScalarField::from_values(w, v.iter().map(|&x| Some(x)).collect())?
        }
    })
}

fn axes(spec: &NormalSpec, extent: &[usize], rng: &mut SynthRng) -> Result<Vec<Vec<Point3>>> {
    match spec {
        NormalSpec::Axes(a) => {
            if a.len() != extent.len() || a.iter().zip(extent).any(|(v, &n)| v.len() != n) {
                return Err(bad(format!("normals: expected axes of lengths {extent:?}")));
            }
            Ok(a.clone())
        }
        NormalSpec::Named(Named::Smooth) => {
            let (a1, a2) = synth::smooth_axes(rng, extent[0], extent[1], SMOOTH_STEP);
            let mut out = vec![a1.clone(), a2];
            if let Some(&w3) = extent.get(2) {
                let mut a3 = vec![a1[0]];
                for k in 1..w3 {
                    a3.push(a3[k - 1] * -1.0 + synth::random_point(rng, 0.6));
                }
                out.push(a3);
            }
            Ok(out)
        }
        NormalSpec::Named(_) => {
            let o = synth::random_point(rng, 1.0);
            Ok(extent
                .iter()
                .map(|&n| (0..n).map(|k| if k == 0 { o } else { synth::random_point(rng, 1.0) }).collect())
                .collect())
        }
    }
}

impl SynthConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| bad(format!("bad synth config: {e}")))
    }

    /// Draws nothing from the generator.
    pub fn is_explicit(&self) -> bool {
        !self.equi_twisted
            && matches!(self.normals, Some(NormalSpec::Axes(_)))
            && matches!(self.coefficients, Some(CoefSpec::Constant(_) | CoefSpec::Planes(_)))
    }

    /// Random configurations are redrawn from the same stream after a
    /// genericity failure, so a seed still fixes the result.
    pub fn build(&self, rng: &mut SynthRng, tol: &Tolerances) -> Result<ANet> {
        if self.is_explicit() {
            self.build_once(rng, tol)
        } else {
            synth::retry(rng, |rng| self.build_once(rng, tol))
        }
    }

    fn build_once(&self, rng: &mut SynthRng, tol: &Tolerances) -> Result<ANet> {
        let e = &self.extent;
        if !(2..=3).contains(&e.len()) || e.iter().any(|&n| n < 2) {
            return Err(bad("extent needs two or three axes of at least 2 vertices"));
        }
        if self.equi_twisted {
            if self.normals.is_some() || self.coefficients.is_some() {
                return Err(bad("equi_twisted draws its own normals and coefficients"));
            }
            if e.len() == 3 && e[2] != 2 {
                return Err(bad("equi_twisted nets have exactly two layers"));
            }
            return Ok(synth::equitwisted_pair(rng, e[0], e[1], tol)?.net);
        }
        let normals = self.normals.clone().unwrap_or(NormalSpec::Named(Named::Random));
        let coef = self.coefficients.clone().unwrap_or(CoefSpec::Named(Named::Random));
        let x0 = self.x0.unwrap_or(Point3::ORIGIN);
        let mut ax = axes(&normals, e, rng)?;
        if e.len() == 2 {
            let a12 = coef_field(&coef, "12", Window::sized(&[e[0] - 1, e[1] - 1]), -1.0, rng)?;
            let (a2, a1) = (ax.pop().unwrap(), ax.pop().unwrap());
            return solve_surface_cauchy(&a1, &a2, &FaceField::new((1, 2), a12)?, x0, tol);
        }
        let a12 = coef_field(&coef, "12", Window::sized(&[e[0] - 1, e[1] - 1]), -1.0, rng)?;
        let a13 = coef_field(&coef, "13", Window::sized(&[e[0] - 1, e[2] - 1]), -1.0, rng)?;
        let a23 = coef_field(&coef, "23", Window::sized(&[e[1] - 1, e[2] - 1]), 1.0, rng)?;
        let (a3, a2, a1) = (ax.pop().unwrap(), ax.pop().unwrap(), ax.pop().unwrap());
        solve_two_layer_cauchy(&LayeredCauchyData { axis_normals: [a1, a2, a3], a12, a13, a23, x0 }, tol)
    }
}
