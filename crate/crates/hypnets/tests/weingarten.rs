use hypnets::anet::ANet;
use hypnets::hypnet::{
    c1_residual_geometric, c1_sweep, cross_from_rho, propagate_cross_vertex, solve_rho_cauchy,
    CrisscrossedQuad, HyperbolicNet, RhoField,
};
use hypnets::lattice::{ix3, ScalarField, Window};
use hypnets::synth::{self, SynthRng};
use hypnets::weingarten::{
    backlund_rho, backlund_transform, blaschke_center, complete_blaschke_cube, cube_crosses,
    equi_twist_cube_check, face_rho_concurrency, generate_equitwisted_pair, is_weingarten_cube,
    iterate_weingarten, layer_rho, normalize_lambda, weingarten_transform, APolicy,
    CubeCoefficients, EquitwistConfig, TransformOptions, WeingartenPair, CUBE_FACES,
};
use hypnets::{Point3, Tolerances};
use proptest::prelude::*;
use rand::Rng;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn bottom(rng: &mut SynthRng, net: &ANet) -> HyperbolicNet {
    let s = net.layer(0).unwrap();
    let w = s.window();
    solve_rho_cauchy(
        &s,
        &synth::rho_seeds(rng, w.extent(1), w.extent(2), 0.5, 2.0),
        &tol(),
    )
    .unwrap()
}

fn transformed(seed: u64, w: usize) -> (ANet, HyperbolicNet, WeingartenPair) {
    let mut rng = synth::rng(seed);
    let net = synth::layered_net(&mut rng, w, w, 2, false, &tol()).unwrap();
    let f = bottom(&mut rng, &net);
    let pair = weingarten_transform(&f, &net, TransformOptions::default(), &tol()).unwrap();
    (net, f, pair)
}

#[test]
fn blaschke_completion_recovers_the_eighth_weight() {
    let mut rng = synth::rng(200);
    for _ in 0..300 {
        let (cube, _, _) = synth::random_a_cube(&mut rng, &tol()).unwrap();
        let rho: [f64; 8] = std::array::from_fn(|_| rng.gen_range(0.5..2.0));
        let (a, b) = (cube.corners[3], cube.corners[7]);
        let edge = (a * rho[3] + b * rho[7]) / (rho[3] + rho[7]);
        let seven: [f64; 7] = std::array::from_fn(|k| rho[k]);
        let got = complete_blaschke_cube(&cube, seven, edge).unwrap();
        assert!(((got[7] - rho[7]) / rho[7]).abs() < 1e-10);
        assert!(blaschke_center(&cube, got).unwrap().1 < 1e-9);

        let c = rng.gen_range(-3.0..-0.2);
        let scaled = complete_blaschke_cube(&cube, seven.map(|r| r * c), edge).unwrap();
        assert!(((scaled[7] - c * got[7]) / got[7]).abs() < 1e-12);
    }
}

#[test]
fn faces_with_their_own_weights_lose_concurrency() {
    let mut rng = synth::rng(201);
    let mut broken = 0;
    for _ in 0..200 {
        let (cube, _, _) = synth::random_a_cube(&mut rng, &tol()).unwrap();
        let rho: [f64; 8] = std::array::from_fn(|_| rng.gen_range(0.5..2.0));
        let mut faces = CUBE_FACES.map(|f| f.map(|k| rho[k]));
        assert!(face_rho_concurrency(&cube, &faces).unwrap().1 < 1e-9);
        let f = rng.gen_range(0..6);
        faces[f][rng.gen_range(0..4)] *= 1.5;
        broken += usize::from(face_rho_concurrency(&cube, &faces).unwrap().1 > 1e-6);
    }
    assert!(broken >= 190, "{broken}");
}

#[test]
fn transformed_pairs_are_weingarten_cubes_and_unrelated_tops_are_not() {
    for s in 0..5 {
        let (net, _, pair) = transformed(210 + s, 6);
        assert!(pair.cube_residual().unwrap() <= 1e-9, "seed {s}");

        let mut rng = synth::rng(220 + s);
        let mut f = pair.rho.field().clone();
        for (z, _) in pair
            .rho
            .field()
            .iter()
            .filter(|(z, _)| z.get(3) == 1)
            .collect::<Vec<_>>()
        {
            f.set(z, rng.gen_range(0.5..2.0)).unwrap();
        }
        let rho = RhoField::new(f).unwrap();
        let (cube, b, t) = cube_crosses(&net, &rho, ix3(2, 2, 0)).unwrap();
        assert!(
            is_weingarten_cube(&cube, &b, &t).unwrap() > 1e-6,
            "seed {s}"
        );
    }
}

#[test]
fn backlund_from_weingarten_seeds_reproduces_the_transform() {
    for s in 0..5 {
        let (net, f, pair) = transformed(230 + s, 7);
        let seeds = [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(i, j)| pair.rho.at(ix3(i, j, 1)));
        let b = backlund_rho(&f, &net, seeds, &tol()).unwrap();
        for (z, v) in pair.rho.field().iter() {
            assert!(((b.at(z) - v) / v).abs() < 1e-12, "seed {s} at {z}");
        }
    }
}

#[test]
fn backlund_layers_are_hyperbolic_nets() {
    for s in 0..5 {
        let mut rng = synth::rng(240 + s);
        let net = synth::layered_net(&mut rng, 7, 7, 2, false, &tol()).unwrap();
        let f = bottom(&mut rng, &net);
        let seeds: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.5..2.0));
        let top = backlund_transform(&f, &net, seeds, &tol()).unwrap();
        for p in c1_sweep(&top.surface, &top.rho, &tol()).unwrap() {
            assert!(p.passes(&tol()), "seed {s}: {p:?}");
        }
    }
}

#[test]
fn initial_cube_and_gauge_do_not_change_the_transform() {
    for s in 0..5 {
        let (net, f, pair) = transformed(250 + s, 7);
        for (initial, gauge) in [((3, 2), None), ((5, 5), None), ((0, 0), Some(-4.0))] {
            let opts = TransformOptions {
                initial: Some(initial),
                gauge,
            };
            let other = weingarten_transform(&f, &net, opts, &tol()).unwrap();
            // The bottom is fixed, so only the top is free up to a factor.
            let (a, b) = (
                layer_rho(pair.rho.field(), 1).unwrap(),
                layer_rho(other.rho.field(), 1).unwrap(),
            );
            assert!(
                a.geometrically_equal(&b, 1e-10),
                "seed {s} from {initial:?}"
            );
        }
    }
}

#[test]
fn normalized_lambda_ignores_rescaled_normals() {
    for s in 0..5 {
        let (net, f, pair) = transformed(260 + s, 6);
        let (lambda, p) = normalize_lambda(&pair, &tol()).unwrap();
        assert_eq!(p.lambda, lambda.signum());

        let scaled = net.bw_rescaled(2.0).unwrap();
        let again = weingarten_transform(&f, &scaled, TransformOptions::default(), &tol()).unwrap();
        let (_, q) = normalize_lambda(&again, &tol()).unwrap();
        assert_eq!(q.lambda, p.lambda);
        let (n, m) = (
            p.net.normals.as_ref().unwrap(),
            q.net.normals.as_ref().unwrap(),
        );
        for (z, v) in n.iter() {
            assert!(m[z].distance(v) <= 1e-10 * v.norm(), "seed {s} at {z}");
        }
    }
}

#[test]
fn stacks_without_equi_twist_still_solve_dbkp() {
    let mut sign_changes = 0;
    for s in 0..10 {
        let mut rng = synth::rng(270 + s);
        let stack = synth::layered_net(&mut rng, 5, 5, 3, false, &tol()).unwrap();
        let f = bottom(&mut rng, &stack);
        let r = iterate_weingarten(&f, &stack, &tol()).unwrap();
        assert!(r.max_dbkp <= 1e-9, "seed {s}: {}", r.max_dbkp);
        sign_changes += usize::from(r.rho.sign().is_none());
    }
    assert!(sign_changes > 0);
}

#[test]
fn equitwisted_pairs_pass_every_cube() {
    for s in 0..5 {
        let ep = synth::equitwisted_pair(&mut synth::rng(280 + s), 8, 8, &tol()).unwrap();
        let w = ep.net.window();
        for z in w.shrink(1, 1).shrink(2, 1).shrink(3, 1).indices() {
            assert!(
                equi_twist_cube_check(&CubeCoefficients::from_net(&ep.net, z).unwrap()).unwrap()
            );
        }
    }
}

fn constant_config(a: f64) -> EquitwistConfig {
    let mut rng = synth::rng(290);
    let mut cfg = synth::equitwist_config(&mut rng, 4, 4);
    cfg.phi_axis1 = vec![1.0; 4];
    cfg.phi_axis2 = vec![1.0; 4];
    cfg.policy = APolicy::Given(ScalarField::filled(Window::sized(&[3, 3]), a));
    cfg
}

#[test]
fn phi_policy_enforces_its_bound() {
    let mut rng = synth::rng(291);
    let ep = generate_equitwisted_pair(&constant_config(1.0), &mut rng, &tol()).unwrap();
    assert!(ep.phi.field().iter().all(|(_, v)| v == 1.0));
    assert!(ep.a3.iter().all(|(_, v)| (v - 1.0).abs() < 1e-15));
    // Φ/(Φ1+Φ2) is exactly one half here.
    assert!(generate_equitwisted_pair(&constant_config(0.5), &mut rng, &tol()).is_err());
}

/// Corners `[x1, s1, s2, x4]` around a shared edge `s1 s2` that is `x2 x3`.
fn left_quad(far: [Point3; 2], s: [Point3; 2], r: [f64; 4]) -> CrisscrossedQuad {
    CrisscrossedQuad::new([far[0], s[0], s[1], far[1]], r).unwrap()
}

/// Quad `[s1, c, d, s2]` whose far cross vertex on `c d` is `target`.
fn matching_quad(
    s: [Point3; 2],
    rs: [f64; 2],
    c: Point3,
    d: Point3,
    target: Point3,
) -> Option<CrisscrossedQuad> {
    let t = (target - c).dot(d - c) / (d - c).dot(d - c);
    if (t - 1.0).abs() < 1e-3 || t.abs() < 1e-3 {
        return None;
    }
    CrisscrossedQuad::new([s[0], c, d, s[1]], [rs[0], 1.0, t / (1.0 - t), rs[1]]).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Three quads around one edge: C¹ from the first to the second and from
    /// the second to the third gives C¹ from the first to the third.
    #[test]
    fn c1_is_transitive_around_an_edge(seed in 0u64..1_000_000) {
        let mut rng = synth::rng(seed);
        let p: [Point3; 8] = std::array::from_fn(|_| synth::random_point(&mut rng, 1.0));
        let r: [f64; 4] = synth::random_weights(&mut rng, false);
        let s = [p[0], p[1]];
        let q1 = left_quad([p[2], p[3]], s, r);
        let Ok(c1) = cross_from_rho(&q1) else { return Ok(()) };
        let Ok(f2) = propagate_cross_vertex((s[0], s[1]), c1.vertices[3], (p[4], p[5])) else { return Ok(()) };
        let Some(q2) = matching_quad(s, [r[1], r[2]], p[4], p[5], f2) else { return Ok(()) };
        let Ok(f3) = propagate_cross_vertex((s[0], s[1]), f2, (p[6], p[7])) else { return Ok(()) };
        let Some(q3) = matching_quad(s, [r[1], r[2]], p[6], p[7], f3) else { return Ok(()) };
        if [f2, f3].iter().any(|v| v.norm() > 1e2) {
            return Ok(());
        }
        prop_assert!(c1_residual_geometric(&q1, &q2, &tol()).unwrap() <= 1e-9);
        prop_assert!(c1_residual_geometric(&q1, &q3, &tol()).unwrap() <= 1e-9);
    }
}

#[test]
fn transform_rejects_mismatched_bottoms() {
    let (net, f, _) = transformed(295, 5);
    let other = synth::layered_net(&mut synth::rng(296), 5, 5, 2, false, &tol()).unwrap();
    assert!(weingarten_transform(&f, &other, TransformOptions::default(), &tol()).is_err());
    let ok = weingarten_transform(
        &f,
        &net,
        TransformOptions {
            initial: Some((9, 9)),
            gauge: None,
        },
        &tol(),
    );
    assert!(ok.is_err());
}
