//! Acceptance suite: the eleven desk-scale criteria, each at its stated
//! tolerance and sample size. Prints one PASS/FAIL line per criterion and fails
//! if any criterion fails.
//!
//! Run with `cargo test -p hypnets --test acceptance -- --nocapture` to see the
//! table. Timing bounds are measured in whatever profile the suite is built in.

use std::time::{Duration, Instant};

use hypnets::anet::{
    bw_rescale, evolve_moutard_cube, moutard_from_normals, parallel_invariants_of, ANet,
};
use hypnets::geometry::{diameter, menelaus_multiratio, verify_cox};
use hypnets::hypnet::{
    c1_residual_algebraic, c1_residual_geometric, cross_from_rho, evolve_rho, solve_rho_cauchy,
    CrisscrossedQuad, EvolutionOrder, NetStatus, RhoField,
};
use hypnets::lattice::{ix3, ScalarField};
use hypnets::meshout::{eval_patch, tessellate};
use hypnets::synth::{self, SynthRng};
use hypnets::weingarten::{
    backlund_rho, blaschke_center, cube_crosses, equi_twist_cube_check, horizontal_loop_holds,
    iterate_weingarten, normalize_lambda, normalized, weingarten_propagate_algebraic,
    weingarten_propagate_geometric, weingarten_transform, CubeCoefficients, WeingartenPair,
};
use hypnets::{Point3, Tolerances};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn secs(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

/// `max |a^ij - λ ρ_i ρ_j / (ρ ρ_ij)| / |a^ij|` over the Weingarten planes
/// `(2,1)`, `(2,3)`, `(3,1)` of every cube, computed straight from the net.
fn weingarten_coefficient_residual(p: &WeingartenPair) -> f64 {
    let net = &p.net;
    let rho = p.rho.field();
    let w = net.window();
    let mut worst: f64 = 0.0;
    for z in w.shrink(1, 1).shrink(2, 1).shrink(3, 1).indices() {
        for (i, j) in [(2, 1), (2, 3), (3, 1)] {
            let a = net.a(i, j, z).unwrap();
            let model = p.lambda * rho[z.offset(i, 1)] * rho[z.offset(j, 1)]
                / (rho[z] * rho[z.offset(i, 1).offset(j, 1)]);
            worst = worst.max(((a - model) / a).abs());
        }
    }
    worst
}

/// Hyperbolic net on the bottom layer of `net` with positive seeds in `[0.5, 2)`.
fn bottom_hypnet(rng: &mut SynthRng, net: &ANet) -> hypnets::hypnet::HyperbolicNet {
    let surface = net.layer(0).unwrap();
    let w = surface.window();
    let seeds = synth::rho_seeds(rng, w.extent(1), w.extent(2), 0.5, 2.0);
    solve_rho_cauchy(&surface, &seeds, &tol()).unwrap()
}

fn crit1_synthesis() -> Outcome {
    let t = tol();
    let start = Instant::now();
    let nets: Vec<ANet> = (0..20)
        .map(|s| synth::random_surface(&mut synth::rng(100 + s), 12, 12, &t).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let planar = nets
        .iter()
        .map(|n| n.planarity_residual().unwrap().0)
        .fold(0.0, f64::max);
    let lel = nets
        .iter()
        .map(|n| n.lelieuvre_residual().unwrap())
        .fold(0.0, f64::max);
    let ok = planar <= 1e-9 && lel <= 1e-10 && elapsed < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "20 nets 12x12, planarity {planar:.1e}, lelieuvre {lel:.1e}, {}",
            secs(elapsed)
        ),
    )
}

fn crit2_invariance() -> Outcome {
    let t = tol();
    let net = synth::random_surface(&mut synth::rng(2), 10, 10, &t).unwrap();
    let n = net.normals.clone().unwrap();
    let base = parallel_invariants_of(&moutard_from_normals(&n, (1, 2)).unwrap()).unwrap();
    let mut rng = synth::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let alpha = rng.gen_range(0.2..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let scaled = bw_rescale(&n, alpha).unwrap();
        let inv = parallel_invariants_of(&moutard_from_normals(&scaled, (1, 2)).unwrap()).unwrap();
        for (a, b) in [(&inv.first, &base.first), (&inv.second, &base.second)] {
            for (z, v) in a.iter() {
                worst = worst.max(rel(v, b[z]));
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("100 rescalings, max relative change {worst:.1e}"),
    )
}

fn crit3_c1_equivalence() -> Outcome {
    let t = tol();
    let mut rng = synth::rng(4);
    let mut disagree = 0;
    let mut passing = 0;
    for k in 0..1000 {
        let (l, r, six, inv) = synth::c1_pair(&mut rng, k % 2 == 0, &t).unwrap();
        let g = c1_residual_geometric(&l, &r, &t).unwrap() <= t.incidence_rel;
        let a = c1_residual_algebraic(six, inv).unwrap() <= t.incidence_rel;
        disagree += usize::from(g != a);
        passing += usize::from(g && a);
    }
    outcome(
        disagree == 0,
        format!("1000 pairs, {passing} C1, {disagree} disagreements"),
    )
}

fn crit4_consistency() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    for s in 0..50 {
        let mut rng = synth::rng(400 + s);
        let net = synth::random_surface(&mut rng, 10, 10, &t).unwrap();
        let seeds = synth::rho_seeds(&mut rng, 10, 10, 0.5, 2.0);
        let rows = evolve_rho(&net, &seeds, EvolutionOrder::RowsFirst, &t).unwrap();
        let cols = evolve_rho(&net, &seeds, EvolutionOrder::ColumnsFirst, &t).unwrap();
        for (z, v) in rows.field().iter() {
            worst = worst.max(rel(cols.at(z), v));
        }
    }
    outcome(
        worst <= 1e-12,
        format!("50 nets 10x10, max relative gap {worst:.1e}"),
    )
}

fn menelaus_worst<const D: usize>(rng: &mut SynthRng) -> f64 {
    let expected = if D % 2 == 0 { -1.0 } else { 1.0 };
    (0..1000)
        .map(|_| {
            let (x, p) = synth::menelaus_instance::<_, D>(rng).unwrap();
            (menelaus_multiratio(&x, &p).unwrap() - expected).abs()
        })
        .fold(0.0, f64::max)
}

fn crit5_incidence() -> Outcome {
    let t = tol();
    let mut rng = synth::rng(5);
    let cox = (0..1000)
        .map(|_| {
            let (apex, planes, x) = synth::cox_config(&mut rng).unwrap();
            verify_cox(apex, &planes, &x).unwrap()
        })
        .fold(0.0, f64::max);
    let men = [
        menelaus_worst::<2>(&mut rng),
        menelaus_worst::<3>(&mut rng),
        menelaus_worst::<4>(&mut rng),
    ];
    let blaschke = (0..500)
        .map(|_| {
            let (cube, _, _) = synth::random_a_cube(&mut rng, &t).unwrap();
            blaschke_center(&cube, synth::random_weights(&mut rng, false))
                .unwrap()
                .1
        })
        .fold(0.0, f64::max);
    let men_max = men.iter().copied().fold(0.0, f64::max);
    let ok = cox <= 1e-9 && men_max <= 1e-9 && blaschke <= 1e-9;
    outcome(
        ok,
        format!(
            "cox {cox:.1e}, menelaus n=2,3,4 {:.1e}/{:.1e}/{:.1e}, blaschke {blaschke:.1e}",
            men[0], men[1], men[2]
        ),
    )
}

fn crit6_dual_path() -> Outcome {
    let t = tol();
    let mut rng = synth::rng(6);
    let (mut vertex, mut centre): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let (_, c, net) = synth::random_a_cube(&mut rng, &t).unwrap();
        let bottom: [f64; 4] = synth::random_weights(&mut rng, false);
        let rho3 = rng.gen_range(0.5..2.0);
        let alg = weingarten_propagate_algebraic(bottom, rho3, &c).unwrap();
        let [r, r1, r2, r12] = bottom;
        let z = net.window().origin();
        let values = [r, r1, r2, r12, rho3, alg.rho13, alg.rho23, alg.rho123];
        let field = ScalarField::from_fn(net.window(), |i| {
            values[(i.get(1) + 2 * i.get(2) + 4 * i.get(3) - z.get(1) - 2 * z.get(2) - 4 * z.get(3))
                as usize]
        });
        let (cube, bc, tc) = cube_crosses(&net, &RhoField::new(field).unwrap(), z).unwrap();
        let geo = weingarten_propagate_geometric(&cube, &bc, &t).unwrap();
        let mut cloud = cube.corners.to_vec();
        cloud.extend(
            bc.vertices
                .iter()
                .chain(&tc.vertices)
                .chain([&bc.centre, &tc.centre]),
        );
        let scale = diameter(&cloud);
        for k in 0..4 {
            vertex = vertex.max(geo.top.vertices[k].distance(tc.vertices[k]) / scale);
        }
        let miss = tc
            .plane
            .signed_distance(bc.centre)
            .abs()
            .max(bc.plane.signed_distance(tc.centre).abs());
        centre = centre.max(miss / scale);
    }
    outcome(
        vertex <= 1e-9 && centre <= 1e-9,
        format!("500 cubes, vertex gap {vertex:.1e}, centre line off planes {centre:.1e} (relative to configuration diameter)"),
    )
}

fn crit7_rho_tau() -> Outcome {
    let t = tol();
    let (mut worst, mut controls): (f64, usize) = (0.0, 0);
    for s in 0..20 {
        let mut rng = synth::rng(700 + s);
        let net = synth::layered_net(&mut rng, 8, 8, 2, false, &t).unwrap();
        let f = bottom_hypnet(&mut rng, &net);
        let pair = weingarten_transform(&f, &net, Default::default(), &t).unwrap();
        let (_, p) = normalize_lambda(&pair, &t).unwrap();
        worst = worst.max(weingarten_coefficient_residual(&p));

        let seeds: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.5..2.0));
        let rho = backlund_rho(&f, &net, seeds, &t).unwrap();
        let b = normalized(&WeingartenPair::from_parts(net, rho, &t).unwrap()).unwrap();
        controls += usize::from(weingarten_coefficient_residual(&b) > 1e-3);
    }
    outcome(
        worst <= 1e-9 && controls >= 19,
        format!("20 transforms 8x8x2, max residual {worst:.1e}; Backlund controls above 1e-3: {controls}/20"),
    )
}

fn crit8_dbkp() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    for s in 0..10 {
        let mut rng = synth::rng(800 + s);
        let stack = synth::layered_net(&mut rng, 8, 8, 4, true, &t).unwrap();
        let f = bottom_hypnet(&mut rng, &stack);
        let r = iterate_weingarten(&f, &stack, &t).unwrap();
        let tau = r.rho.field();
        for z in stack
            .window()
            .shrink(1, 1)
            .shrink(2, 1)
            .shrink(3, 1)
            .indices()
        {
            let at = |a: i64, b: i64, c: i64| tau[ix3(z.get(1) + a, z.get(2) + b, z.get(3) + c)];
            let terms = [
                at(0, 0, 0) * at(1, 1, 1),
                -at(1, 0, 0) * at(0, 1, 1),
                -at(0, 1, 0) * at(1, 0, 1),
                at(0, 0, 1) * at(1, 1, 0),
            ];
            let big = terms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            worst = worst.max(terms.iter().sum::<f64>().abs() / big);
        }
    }
    outcome(
        worst <= 1e-9,
        format!("10 stacks 8x8x4, max dBKP residual {worst:.1e}"),
    )
}

fn crit9_positivity() -> Outcome {
    let t = tol();
    let (mut positive, mut hyperbolic) = (0, 0);
    for s in 0..20 {
        let mut rng = synth::rng(900 + s);
        let ep = synth::equitwisted_pair(&mut rng, 10, 10, &t).unwrap();
        let all_positive = [ep.phi.field(), &ep.a, &ep.a3, &ep.a23, &ep.a31]
            .iter()
            .all(|f| f.iter().all(|(_, v)| v > 0.0));
        positive += usize::from(all_positive);
        let f = bottom_hypnet(&mut rng, &ep.net);
        let pair = weingarten_transform(&f, &ep.net, Default::default(), &t).unwrap();
        let top = pair.top(&t).unwrap();
        if top.rho.sign().is_some() && top.status == NetStatus::Hyperbolic {
            hyperbolic += 1;
        }
    }
    outcome(
        positive == 20 && hyperbolic == 20,
        format!("20 windows 10x10, positive data {positive}/20, one-sign hyperbolic transforms {hyperbolic}/20"),
    )
}

fn crit10_no_third_loop() -> Outcome {
    let mut rng = synth::rng(10);
    let (mut found, mut failed) = (0, 0);
    while found < 10_000 {
        let [a21, a23, a31]: [f64; 3] = synth::random_weights(&mut rng, true);
        let Ok(step) = evolve_moutard_cube(a21, a23, a31) else {
            continue;
        };
        let c = CubeCoefficients {
            a21,
            a23,
            a31,
            a23_1: step.a23_1,
            a31_2: step.a31_2,
        };
        if !equi_twist_cube_check(&c).unwrap() {
            continue;
        }
        found += 1;
        let direct = c.a31 / c.a23 < 0.0 && c.a31 * c.a23_1 < 0.0;
        failed += usize::from(!direct && !horizontal_loop_holds(&c));
    }
    outcome(
        failed == found,
        format!("{found} equi-twisted tuples, horizontal loop fails in {failed}"),
    )
}

fn crit11_mesh() -> Outcome {
    let t = tol();
    let mut rng = synth::rng(11);
    let mut exact: f64 = 0.0;
    for _ in 0..1000 {
        let x: [Point3; 4] = std::array::from_fn(|_| synth::random_point(&mut rng, 1.0));
        let Ok(q) = CrisscrossedQuad::new(x, synth::random_weights(&mut rng, false)) else {
            continue;
        };
        let c = cross_from_rho(&q).unwrap();
        let half = [(0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)];
        for (k, (u, v)) in half.into_iter().enumerate() {
            exact = exact.max(eval_patch(&q, u, v).unwrap().distance(c.vertices[k]));
        }
        exact = exact.max(eval_patch(&q, 0.5, 0.5).unwrap().distance(c.centre));
    }

    let start = Instant::now();
    let surface = synth::smooth_surface(&mut rng, 10, 10, &t).unwrap();
    let seeds = synth::smooth_rho_seeds(&mut rng, 10, 10);
    let h = solve_rho_cauchy(&surface, &seeds, &t).unwrap();
    let mesh = tessellate(&h, 16).unwrap();
    let mut obj = Vec::new();
    mesh.write_obj(&mut obj).unwrap();
    let elapsed = start.elapsed();
    let watertight = mesh.stats().watertight(10, 10, 16);
    let dihedral = mesh.max_seam_dihedral();
    let ok = h.status == NetStatus::Hyperbolic
        && exact <= 1e-14
        && watertight
        && mesh.groups.len() == 81
        && dihedral <= 2.0
        && elapsed < Duration::from_secs(5);
    outcome(
        ok,
        format!(
            "cross identity {exact:.1e}; 10x10 net at 16: watertight {watertight}, max dihedral {dihedral:.2} deg, {} bytes OBJ, {}",
            obj.len(),
            secs(elapsed)
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("a-net synthesis", crit1_synthesis),
        ("parallel invariants under rescaling", crit2_invariance),
        ("C1 equivalence", crit3_c1_equivalence),
        ("4-quad consistency", crit4_consistency),
        ("incidence theorems", crit5_incidence),
        ("Weingarten cube dual path", crit6_dual_path),
        ("rho = tau", crit7_rho_tau),
        ("dBKP", crit8_dbkp),
        ("positivity pipeline", crit9_positivity),
        ("no third loop", crit10_no_third_loop),
        ("mesh", crit11_mesh),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
        if !o.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
