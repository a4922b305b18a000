//! Invariant sweeps over whole artifacts.
//!
//! Each check reports the number of cells it visited, the worst residual and
//! where it occurred. A check that cannot run on the input (no normals, no ρ,
//! a 2D net for cube checks) is marked skipped rather than failed. Equi-twist is
//! reported for information only, since Weingarten pairs need not be
//! equi-twisted.

use serde::{Deserialize, Serialize};

use crate::anet::{evolve_canonical, tau_residual, ANet, BkpPattern, CoefficientFamily};
use crate::error::{Error, Result};
use crate::geometry::{meet_planes, menelaus_multiratio, Plane3, Tolerances};
use crate::hypnet::{c1_sweep, cross_from_rho, quad_at, HyperbolicNet, RhoField};
use crate::io::Artifact;
use crate::lattice::{ix3, GridIndex, ScalarField, Window};
use crate::weingarten::{
    blaschke_center, cube_crosses, equi_twist_cube_check, is_weingarten_cube, lambda_at, layer_rho,
    normalized, verify_rho_equals_tau, ACube, CubeCoefficients, WeingartenPair,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckResult {
    pub check: String,
    pub count: usize,
    pub max_residual: Option<f64>,
    pub threshold: f64,
    /// `false` only for failed checks.
    pub pass: bool,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_cell: Option<GridIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, check: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == check)
    }

    fn skip(&mut self, check: &str, why: &str) {
        self.checks.push(CheckResult {
            check: check.into(),
            count: 0,
            max_residual: None,
            threshold: 0.0,
            pass: true,
            status: CheckStatus::Skipped,
            worst_cell: None,
            note: Some(why.into()),
        });
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "SKIP",
                CheckStatus::Info => "INFO",
            };
            let r = c
                .max_residual
                .map_or("-".to_string(), |r| format!("{r:.3e}"));
            s.push_str(&format!(
                "{status:4} {:24} n={:<6} max={r}",
                c.check, c.count
            ));
            if let Some(z) = c.worst_cell {
                s.push_str(&format!(" at {z}"));
            }
            if let Some(n) = &c.note {
                s.push_str(&format!(" ({n})"));
            }
            s.push('\n');
        }
        s
    }
}

struct Sweep {
    check: &'static str,
    threshold: f64,
    count: usize,
    worst: f64,
    cell: Option<GridIndex>,
    note: Option<String>,
    info: bool,
}

impl Sweep {
    fn new(check: &'static str, threshold: f64) -> Self {
        Sweep {
            check,
            threshold,
            count: 0,
            worst: 0.0,
            cell: None,
            note: None,
            info: false,
        }
    }

    fn add(&mut self, cell: GridIndex, r: f64) {
        self.count += 1;
        if !(r <= self.worst) && !self.worst.is_nan() {
            self.worst = r;
            self.cell = Some(cell);
        }
    }

    fn error(&mut self, cell: GridIndex, e: &Error) {
        self.add(cell, f64::INFINITY);
        if self.note.is_none() {
            self.note = Some(format!("{e} at {cell}"));
            self.cell = Some(cell);
        }
    }

    fn record(&mut self, cell: GridIndex, r: Result<f64>) {
        match r {
            Ok(r) => self.add(cell, r),
            Err(e) => self.error(cell, &e),
        }
    }

    fn finish(self, report: &mut Report) {
        if self.count == 0 {
            return report.skip(self.check, "no cells");
        }
        let ok = self.note.is_none() && self.worst <= self.threshold;
        let status = match (self.info, ok) {
            (true, _) => CheckStatus::Info,
            (false, true) => CheckStatus::Pass,
            (false, false) => CheckStatus::Fail,
        };
        report.checks.push(CheckResult {
            check: self.check.into(),
            count: self.count,
            max_residual: Some(self.worst),
            threshold: self.threshold,
            pass: status != CheckStatus::Fail,
            status,
            worst_cell: self.cell,
            note: self.note,
        });
    }
}

fn cube_window(w: &Window) -> Window {
    w.shrink(1, 1).shrink(2, 1).shrink(3, 1)
}

/// Checks on the net alone.
pub fn verify_net(net: &ANet, tol: &Tolerances, report: &mut Report) {
    let eps = tol.incidence_rel;
    let w = net.window();

    let mut s = Sweep::new("planarity", eps);
    match net.planarity_residual() {
        Ok((r, cell)) => {
            s.count = w.len();
            s.worst = r;
            s.cell = cell;
        }
        Err(e) => s.error(w.origin(), &e),
    }
    s.finish(report);

    match (&net.normals, net.lelieuvre_residual()) {
        (Some(n), Some(r)) => {
            let mut s = Sweep::new("lelieuvre", eps);
            s.count = (1..=w.dim()).map(|a| w.shrink(a, 1).len()).sum();
            s.worst = r;
            s.finish(report);
            let mut s = Sweep::new("moutard", eps);
            for f in &net.moutard {
                let (i, j) = f.plane;
                for z in w.faces(f.plane).indices() {
                    s.record(
                        z,
                        (|| {
                            let (n0, ni, nj) =
                                (n.get(z)?, n.get(z.offset(i, 1))?, n.get(z.offset(j, 1))?);
                            let nij = n.get(z.offset(i, 1).offset(j, 1))?;
                            let big = n0.norm().max(ni.norm()).max(nj.norm()).max(nij.norm());
                            Ok((nij - n0 - (nj - ni) * f.get(z)?).norm() / big)
                        })(),
                    );
                }
            }
            s.finish(report);
        }
        _ => {
            report.skip("lelieuvre", "net has no normals");
            report.skip("moutard", "net has no normals");
        }
    }

    if net.dim() != 3 {
        for c in ["moutard_compatibility", "cox_closure", "equi_twist"] {
            report.skip(c, "needs a 3D net");
        }
        return;
    }
    let cubes = cube_window(&w);
    let mut compat = Sweep::new("moutard_compatibility", eps);
    let mut cox = Sweep::new("cox_closure", eps);
    let mut twist = Sweep::new("equi_twist", 0.0);
    twist.info = true;
    let mut twisted = 0usize;
    for z in cubes.indices() {
        compat.record(
            z,
            (|| {
                let a = |p: (usize, usize), at: GridIndex| net.a(p.0, p.1, at);
                let (e12, e13, e23) =
                    evolve_canonical(a((1, 2), z)?, a((1, 3), z)?, a((2, 3), z)?)?;
                let stored = [
                    a((1, 2), z.offset(3, 1))?,
                    a((1, 3), z.offset(2, 1))?,
                    a((2, 3), z.offset(1, 1))?,
                ];
                Ok([e12, e13, e23]
                    .iter()
                    .zip(stored)
                    .map(|(e, s)| ((e - s) / s).abs())
                    .fold(0.0, f64::max))
            })(),
        );
        cox.record(
            z,
            (|| {
                let cube = ACube::from_net(net, z)?;
                let x = cube.corners;
                let meet = meet_planes(
                    &Plane3::from_points(x[3], x[1], x[2])?,
                    &Plane3::from_points(x[5], x[1], x[4])?,
                    &Plane3::from_points(x[6], x[2], x[4])?,
                )?;
                Ok(meet.distance(x[7]) / cube.scale())
            })(),
        );
        match CubeCoefficients::from_net(net, z).and_then(|c| equi_twist_cube_check(&c)) {
            Ok(t) => {
                twisted += t as usize;
                twist.count += 1;
            }
            Err(e) => twist.error(z, &e),
        }
    }
    compat.finish(report);
    cox.finish(report);
    if twist.count > 0 {
        twist.worst = 1.0 - twisted as f64 / twist.count as f64;
        twist
            .note
            .get_or_insert(format!("{twisted} of {} cubes equi-twisted", twist.count));
    }
    twist.finish(report);
}

/// Cross checks on a 2D surface with ρ; `lift` maps surface cells to the
/// artifact's own indices for reporting.
fn verify_surface_rho(
    surface: &ANet,
    rho: &RhoField,
    lift: &dyn Fn(GridIndex) -> GridIndex,
    tol: &Tolerances,
    sweeps: &mut [Sweep; 4],
) {
    let [geo, alg, men, cross] = sweeps;
    match c1_sweep(surface, rho, tol) {
        Ok(pairs) => {
            for p in pairs {
                geo.add(lift(p.anchor), p.geometric);
                alg.add(lift(p.anchor), p.algebraic);
            }
        }
        Err(e) => {
            geo.error(lift(surface.window().origin()), &e);
            alg.error(lift(surface.window().origin()), &e);
        }
    }
    for z in surface.window().faces((1, 2)).indices() {
        match quad_at(surface, rho, z).and_then(|q| Ok((q, cross_from_rho(&q)?))) {
            Ok((q, c)) => {
                men.record(
                    lift(z),
                    menelaus_multiratio(&q.corners, &c.vertices).map(|m| (m - 1.0).abs()),
                );
                cross.record(lift(z), c.residual());
            }
            Err(e) => {
                men.error(lift(z), &e);
                cross.error(lift(z), &e);
            }
        }
    }
}

fn surface_sweeps(tol: &Tolerances) -> [Sweep; 4] {
    let eps = tol.incidence_rel;
    [
        Sweep::new("c1_geometric", eps),
        Sweep::new("c1_algebraic", eps),
        Sweep::new("menelaus", eps),
        Sweep::new("cross_planarity", eps),
    ]
}

pub fn verify_hypnet(h: &HyperbolicNet, tol: &Tolerances, report: &mut Report) {
    verify_net(&h.surface, tol, report);
    let mut sweeps = surface_sweeps(tol);
    verify_surface_rho(&h.surface, &h.rho, &|z| z, tol, &mut sweeps);
    for s in sweeps {
        s.finish(report);
    }
}

fn layer_pair(net: &ANet, rho: &RhoField, k: i64) -> Result<WeingartenPair> {
    let sub = net.layers(k, k + 1)?;
    let w = sub.window();
    let field = ScalarField::from_fn(w, |i| rho.at(ix3(i.get(1), i.get(2), i.get(3) + k)));
    let rho = RhoField::new(field)?;
    let lambda = lambda_at(&sub, &rho, w.origin())?;
    Ok(WeingartenPair {
        net: sub,
        rho,
        lambda,
        status: crate::hypnet::NetStatus::Invalid,
    })
}

/// Checks on a 3D net with ρ on every layer.
pub fn verify_rho_net(net: &ANet, rho: &RhoField, tol: &Tolerances, report: &mut Report) {
    verify_net(net, tol, report);
    let eps = tol.incidence_rel;
    let w = net.window();
    let mut sweeps = surface_sweeps(tol);
    for k in w.lo(3)..w.hi(3) {
        match net
            .layer(k)
            .and_then(|s| Ok((s, layer_rho(rho.field(), k)?)))
        {
            Ok((surface, r)) => {
                verify_surface_rho(
                    &surface,
                    &r,
                    &|z| ix3(z.get(1), z.get(2), k),
                    tol,
                    &mut sweeps,
                );
            }
            Err(e) => sweeps
                .iter_mut()
                .for_each(|s| s.error(ix3(w.lo(1), w.lo(2), k), &e)),
        }
    }
    for s in sweeps {
        s.finish(report);
    }

    let mut weing = Sweep::new("weingarten_cubes", eps);
    let mut blaschke = Sweep::new("blaschke_concurrency", eps);
    for z in cube_window(&w).indices() {
        match cube_crosses(net, rho, z) {
            Ok((cube, b, t)) => {
                weing.record(z, is_weingarten_cube(&cube, &b, &t));
                let r: [f64; 8] = std::array::from_fn(|k| {
                    rho.at(z
                        .offset(1, (k & 1) as i64)
                        .offset(2, (k >> 1 & 1) as i64)
                        .offset(3, (k >> 2) as i64))
                });
                blaschke.record(z, blaschke_center(&cube, r).map(|(_, d)| d));
            }
            Err(e) => {
                weing.error(z, &e);
                blaschke.error(z, &e);
            }
        }
    }
    weing.finish(report);
    blaschke.finish(report);

    let mut rt = Sweep::new("rho_tau", eps);
    for k in w.lo(3)..w.hi(3) - 1 {
        let cell = ix3(w.lo(1), w.lo(2), k);
        rt.record(
            cell,
            layer_pair(net, rho, k)
                .and_then(|p| Ok(verify_rho_equals_tau(&normalized(&p)?)?.residual)),
        );
    }
    rt.finish(report);

    let mut bkp = Sweep::new("dbkp", eps);
    let signs = CoefficientFamily::Weingarten.bkp_signs();
    match crate::anet::dbkp_residual(rho.field(), &BkpPattern::Signs(signs)) {
        Ok(f) => f.iter().for_each(|(z, r)| bkp.add(z, r)),
        Err(e) => bkp.error(w.origin(), &e),
    }
    bkp.finish(report);
}

/// Every applicable check for an artifact.
pub fn verify_artifact(a: &Artifact, tol: &Tolerances) -> Report {
    let mut report = Report::default();
    let fatal = |report: &mut Report, e: Error| {
        report.checks.push(CheckResult {
            check: "load".into(),
            count: 1,
            max_residual: None,
            threshold: 0.0,
            pass: false,
            status: CheckStatus::Fail,
            worst_cell: None,
            note: Some(e.to_string()),
        })
    };
    match a {
        Artifact::Anet(_) => match a.net() {
            Ok(net) => {
                verify_net(&net, tol, &mut report);
                match a.net_body().tau_field() {
                    Ok(Some(t)) => {
                        let mut s = Sweep::new("tau", tol.incidence_rel);
                        s.record(net.window().origin(), tau_residual(&net, &t));
                        s.finish(&mut report);
                    }
                    Ok(None) => report.skip("tau", "no tau field"),
                    Err(e) => fatal(&mut report, e),
                }
            }
            Err(e) => fatal(&mut report, e),
        },
        Artifact::Hypnet(d) => match a.to_hypnet(tol) {
            Ok(h) => {
                verify_hypnet(&h, tol, &mut report);
                let ok = h.status == d.status;
                report.checks.push(CheckResult {
                    check: "status".into(),
                    count: 1,
                    max_residual: None,
                    threshold: 0.0,
                    pass: ok,
                    status: if ok {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    },
                    worst_cell: h.offending.first().copied(),
                    note: Some(format!("stored {}, recomputed {}", d.status, h.status)),
                });
            }
            Err(e) => fatal(&mut report, e),
        },
        Artifact::WeingartenPair(_) | Artifact::WeingartenStack(_) => match a.to_rho_net() {
            Ok((net, rho)) if net.dim() == 3 => verify_rho_net(&net, &rho, tol, &mut report),
            Ok(_) => fatal(
                &mut report,
                Error::Shape("transform files hold a 3D net".into()),
            ),
            Err(e) => fatal(&mut report, e),
        },
    }
    report
}
