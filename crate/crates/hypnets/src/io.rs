//! JSON artifacts.
//!
//! Every file is one object with a `kind` discriminator (`anet`, `hypnet`,
//! `weingarten_pair`, `weingarten_stack`), a format `version` and the `seed`
//! that produced it. Net data sits at the top level: `dim`, `window` as
//! `[[lo, hi), ...]`, row-major flat `vertices`, optional `normals`, and the
//! canonical coefficients as `moutard: {"12": [...], "13": [...], "23": [...]}`
//! over the face windows. Unknown keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::anet::{ANet, CoefficientFamily, TauField};
use crate::error::{Error, Result};
use crate::geometry::{Point3, Tolerances};
use crate::hypnet::{HyperbolicNet, NetStatus, RhoField};
use crate::lattice::{FaceField, Field, GridIndex, ScalarField, Window};
use crate::verify::Report;
use crate::weingarten::WeingartenPair;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauDoc {
    pub family: CoefficientFamily,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetBody {
    pub dim: usize,
    pub window: Vec<[i64; 2]>,
    pub vertices: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Point3>>,
    pub moutard: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauDoc>,
}

const NET_KEYS: [&str; 6] = ["dim", "window", "vertices", "normals", "moutard", "tau"];

fn complete<T: Copy>(f: &Field<T>) -> Result<Vec<T>> {
    f.ensure_complete()?;
    Ok(f.raw().iter().map(|v| v.expect("complete")).collect())
}

fn field<T: Copy>(window: Window, values: &[T], what: &str) -> Result<Field<T>> {
    if values.len() != window.len() {
        return Err(Error::Shape(format!(
            "{what}: expected {} values, got {}",
            window.len(),
            values.len()
        )));
    }
    Field::from_values(window, values.iter().map(|&v| Some(v)).collect())
}

fn plane_key(p: (usize, usize)) -> String {
    format!("{}{}", p.0, p.1)
}

impl NetBody {
    pub fn from_net(net: &ANet, tau: Option<&TauField>) -> Result<Self> {
        let mut moutard = BTreeMap::new();
        for f in &net.moutard {
            moutard.insert(plane_key(f.plane), complete(&f.values)?);
        }
        Ok(NetBody {
            dim: net.dim(),
            window: net.window().bounds(),
            vertices: complete(&net.vertices)?,
            normals: net.normals.as_ref().map(complete).transpose()?,
            moutard,
            tau: tau
                .map(|t| {
                    Ok::<_, Error>(TauDoc {
                        family: t.family,
                        values: complete(&t.tau)?,
                    })
                })
                .transpose()?,
        })
    }

    pub fn window(&self) -> Result<Window> {
        if self.window.len() != self.dim || !(2..=3).contains(&self.dim) {
            return Err(Error::Shape(format!(
                "dim {} with {} window axes",
                self.dim,
                self.window.len()
            )));
        }
        let b: Vec<(i64, i64)> = self.window.iter().map(|w| (w[0], w[1])).collect();
        Window::new(&b)
    }

    pub fn to_net(&self) -> Result<ANet> {
        let w = self.window()?;
        let vertices = field(w, &self.vertices, "vertices")?;
        let normals = self
            .normals
            .as_ref()
            .map(|n| field(w, n, "normals"))
            .transpose()?;
        let planes: &[(usize, usize)] = if self.dim == 2 {
            &[(1, 2)]
        } else {
            &crate::anet::PLANES_3D
        };
        if let Some(k) = self
            .moutard
            .keys()
            .find(|k| !planes.iter().any(|&p| plane_key(p) == **k))
        {
            return Err(Error::Invalid(format!("unexpected moutard plane \"{k}\"")));
        }
        let moutard = planes
            .iter()
            .map(|&p| {
                let key = plane_key(p);
                let v = self
                    .moutard
                    .get(&key)
                    .ok_or_else(|| Error::Invalid(format!("missing moutard plane \"{key}\"")))?;
                FaceField::new(p, field(w.faces(p), v, &format!("moutard {key}"))?)
            })
            .collect::<Result<_>>()?;
        Ok(ANet {
            vertices,
            normals,
            moutard,
        })
    }

    pub fn tau_field(&self) -> Result<Option<TauField>> {
        let w = self.window()?;
        self.tau
            .as_ref()
            .map(|t| {
                Ok(TauField {
                    tau: field(w, &t.values, "tau")?,
                    family: t.family,
                })
            })
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnetDoc {
    pub version: u32,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub net: NetBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypnetDoc {
    pub version: u32,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub net: NetBody,
    pub rho: Vec<f64>,
    pub status: NetStatus,
    #[serde(default)]
    pub offending: Vec<GridIndex>,
    /// Two-layer net whose bottom layer is this surface, for `transform`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<NetBody>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDoc {
    pub version: u32,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub net: NetBody,
    pub rho: Vec<f64>,
    pub lambda: f64,
    pub status: NetStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Report>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackDoc {
    pub version: u32,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub net: NetBody,
    pub rho: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub statuses: Vec<NetStatus>,
    pub max_dbkp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Report>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Anet(AnetDoc),
    Hypnet(HypnetDoc),
    WeingartenPair(PairDoc),
    WeingartenStack(StackDoc),
}

fn rho_field(w: Window, values: &[f64]) -> Result<RhoField> {
    RhoField::new(field(w, values, "rho")?)
}

impl Artifact {
    pub fn anet(net: &ANet, tau: Option<&TauField>, seed: Option<u64>) -> Result<Self> {
        Ok(Artifact::Anet(AnetDoc {
            version: FORMAT_VERSION,
            seed,
            net: NetBody::from_net(net, tau)?,
        }))
    }

    pub fn hypnet(h: &HyperbolicNet, support: Option<&ANet>, seed: Option<u64>) -> Result<Self> {
        Ok(Artifact::Hypnet(HypnetDoc {
            version: FORMAT_VERSION,
            seed,
            net: NetBody::from_net(&h.surface, None)?,
            rho: complete(h.rho.field())?,
            status: h.status,
            offending: h.offending.clone(),
            support: support.map(|s| NetBody::from_net(s, None)).transpose()?,
        }))
    }

    pub fn pair(
        p: &WeingartenPair,
        verification: Option<Report>,
        seed: Option<u64>,
    ) -> Result<Self> {
        Ok(Artifact::WeingartenPair(PairDoc {
            version: FORMAT_VERSION,
            seed,
            net: NetBody::from_net(&p.net, None)?,
            rho: complete(p.rho.field())?,
            lambda: p.lambda,
            status: p.status,
            verification,
        }))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Anet(_) => "anet",
            Artifact::Hypnet(_) => "hypnet",
            Artifact::WeingartenPair(_) => "weingarten_pair",
            Artifact::WeingartenStack(_) => "weingarten_stack",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Artifact::Anet(d) => d.seed,
            Artifact::Hypnet(d) => d.seed,
            Artifact::WeingartenPair(d) => d.seed,
            Artifact::WeingartenStack(d) => d.seed,
        }
    }

    pub fn net_body(&self) -> &NetBody {
        match self {
            Artifact::Anet(d) => &d.net,
            Artifact::Hypnet(d) => &d.net,
            Artifact::WeingartenPair(d) => &d.net,
            Artifact::WeingartenStack(d) => &d.net,
        }
    }

    pub fn net(&self) -> Result<ANet> {
        self.net_body().to_net()
    }

    /// Surface with ρ; the status is recomputed rather than trusted.
    pub fn to_hypnet(&self, tol: &Tolerances) -> Result<HyperbolicNet> {
        match self {
            Artifact::Hypnet(d) => {
                let surface = d.net.to_net()?;
                let rho = rho_field(surface.window(), &d.rho)?;
                HyperbolicNet::classify(surface, rho, tol)
            }
            other => Err(Error::Invalid(format!(
                "expected a hypnet file, got {}",
                other.kind()
            ))),
        }
    }

    /// The 3D net with ρ on all of its vertices.
    pub fn to_rho_net(&self) -> Result<(ANet, RhoField)> {
        let (body, rho) = match self {
            Artifact::WeingartenPair(d) => (&d.net, &d.rho),
            Artifact::WeingartenStack(d) => (&d.net, &d.rho),
            Artifact::Hypnet(d) => (&d.net, &d.rho),
            Artifact::Anet(_) => return Err(Error::Invalid("anet files carry no rho".into())),
        };
        let net = body.to_net()?;
        let rho = rho_field(net.window(), rho)?;
        Ok((net, rho))
    }

    pub fn to_pair(&self) -> Result<WeingartenPair> {
        match self {
            Artifact::WeingartenPair(d) => {
                let (net, rho) = self.to_rho_net()?;
                Ok(WeingartenPair {
                    net,
                    rho,
                    lambda: d.lambda,
                    status: d.status,
                })
            }
            other => Err(Error::Invalid(format!(
                "expected a weingarten_pair file, got {}",
                other.kind()
            ))),
        }
    }

    /// Parses and validates keys, version and shapes.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("malformed JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Invalid("artifact must be a JSON object".into()))?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Invalid("missing \"kind\"".into()))?
            .to_string();
        let extra: &[&str] = match kind.as_str() {
            "anet" => &[],
            "hypnet" => &["rho", "status", "offending", "support"],
            "weingarten_pair" => &["rho", "lambda", "status", "verification"],
            "weingarten_stack" => &["rho", "lambdas", "statuses", "max_dbkp", "verification"],
            other => return Err(Error::Invalid(format!("unknown kind \"{other}\""))),
        };
        let allowed = |k: &str| {
            ["kind", "version", "seed"].contains(&k) || NET_KEYS.contains(&k) || extra.contains(&k)
        };
        if let Some(k) = obj.keys().find(|k| !allowed(k)) {
            return Err(Error::Invalid(format!(
                "unknown key \"{k}\" in {kind} file"
            )));
        }
        if let Some(s) = obj.get("support").and_then(Value::as_object) {
            if let Some(k) = s.keys().find(|k| !NET_KEYS.contains(&k.as_str())) {
                return Err(Error::Invalid(format!(
                    "unknown key \"{k}\" in support net"
                )));
            }
        }
        let a: Artifact = serde_json::from_value(v)
            .map_err(|e| Error::Invalid(format!("bad {kind} file: {e}")))?;
        let version = match &a {
            Artifact::Anet(d) => d.version,
            Artifact::Hypnet(d) => d.version,
            Artifact::WeingartenPair(d) => d.version,
            Artifact::WeingartenStack(d) => d.version,
        };
        if version == 0 || version > FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported format version {version}"
            )));
        }
        match &a {
            Artifact::Anet(_) => drop(a.net()?),
            _ => drop(a.to_rho_net()?),
        }
        if let Artifact::Hypnet(HypnetDoc {
            support: Some(s), ..
        }) = &a
        {
            s.to_net()?;
        }
        Ok(a)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }
}

pub fn stack_doc(
    net: &ANet,
    rho: &ScalarField,
    lambdas: Vec<f64>,
    statuses: Vec<NetStatus>,
    max_dbkp: f64,
    verification: Option<Report>,
    seed: Option<u64>,
) -> Result<Artifact> {
    Ok(Artifact::WeingartenStack(StackDoc {
        version: FORMAT_VERSION,
        seed,
        net: NetBody::from_net(net, None)?,
        rho: complete(rho)?,
        lambdas,
        statuses,
        max_dbkp,
        verification,
    }))
}
