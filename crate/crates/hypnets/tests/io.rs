use hypnets::hypnet::{solve_rho_cauchy, HyperbolicNet};
use hypnets::io::{stack_doc, Artifact};
use hypnets::synth;
use hypnets::verify::{verify_artifact, CheckStatus};
use hypnets::weingarten::{iterate_weingarten, normalize_lambda, weingarten_transform, TransformOptions};
use hypnets::Tolerances;
use serde_json::Value;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn hypnet(seed: u64) -> HyperbolicNet {
    let mut rng = synth::rng(seed);
    let net = synth::smooth_surface(&mut rng, 6, 5, &tol()).unwrap();
    solve_rho_cauchy(&net, &synth::smooth_rho_seeds(&mut rng, 6, 5), &tol()).unwrap()
}

fn edit(a: &Artifact, f: impl FnOnce(&mut serde_json::Map<String, Value>)) -> String {
    let mut v: Value = serde_json::from_str(&a.to_json()).unwrap();
    f(v.as_object_mut().unwrap());
    v.to_string()
}

#[test]
fn round_trips_are_bit_exact() {
    let h = hypnet(400);
    let a = Artifact::hypnet(&h, None, Some(400)).unwrap();
    let text = a.to_json();
    let back = Artifact::from_json(&text).unwrap();
    assert_eq!(back, a);
    assert_eq!(back.to_json(), text);
    let again = back.to_hypnet(&tol()).unwrap();
    for (z, v) in h.rho.field().iter() {
        assert_eq!(again.rho.at(z).to_bits(), v.to_bits());
    }
    for (z, x) in h.surface.vertices.iter() {
        assert_eq!(again.surface.vertices[z], x);
    }

    let net = synth::layered_net(&mut synth::rng(401), 4, 5, 3, true, &tol()).unwrap();
    let a = Artifact::anet(&net, None, None).unwrap();
    assert_eq!(Artifact::from_json(&a.to_json()).unwrap().net().unwrap(), net);
}

#[test]
fn unknown_keys_and_versions_are_rejected() {
    let a = Artifact::hypnet(&hypnet(402), None, None).unwrap();
    assert!(Artifact::from_json(&edit(&a, |o| {
        o.insert("colour".into(), Value::from("red"));
    }))
    .is_err());
    for v in [0, 99] {
        assert!(Artifact::from_json(&edit(&a, |o| {
            o.insert("version".into(), Value::from(v));
        }))
        .is_err());
    }
    assert!(Artifact::from_json(&edit(&a, |o| {
        o.insert("kind".into(), Value::from("surface"));
    }))
    .is_err());
    assert!(Artifact::from_json(&edit(&a, |o| {
        o["rho"].as_array_mut().unwrap().pop();
    }))
    .is_err());
}

#[test]
fn pipeline_artifacts_verify() {
    let mut rng = synth::rng(403);
    let ep = synth::equitwisted_pair(&mut rng, 6, 6, &tol()).unwrap();
    let s = ep.net.layer(0).unwrap();
    let f = solve_rho_cauchy(&s, &synth::rho_seeds(&mut rng, 6, 6, 0.5, 2.0), &tol()).unwrap();
    let report = verify_artifact(&Artifact::hypnet(&f, Some(&ep.net), None).unwrap(), &tol());
    assert!(report.passed(), "{}", report.summary());

    let pair = weingarten_transform(&f, &ep.net, TransformOptions::default(), &tol()).unwrap();
    let (_, p) = normalize_lambda(&pair, &tol()).unwrap();
    let report = verify_artifact(&Artifact::pair(&p, None, None).unwrap(), &tol());
    assert!(report.passed(), "{}", report.summary());
    assert_eq!(report.get("weingarten_cubes").unwrap().status, CheckStatus::Pass);

    let stack = synth::layered_net(&mut rng, 5, 5, 4, true, &tol()).unwrap();
    let s = stack.layer(0).unwrap();
    let f = solve_rho_cauchy(&s, &synth::rho_seeds(&mut rng, 5, 5, 0.5, 2.0), &tol()).unwrap();
    let r = iterate_weingarten(&f, &stack, &tol()).unwrap();
    let doc = stack_doc(&stack, r.rho.field(), r.lambdas, r.statuses, r.max_dbkp, None, None).unwrap();
    let report = verify_artifact(&Artifact::from_json(&doc.to_json()).unwrap(), &tol());
    assert!(report.passed(), "{}", report.summary());
    assert_eq!(report.get("dbkp").unwrap().status, CheckStatus::Pass);
}

#[test]
fn corrupted_rho_fails_near_the_corruption() {
    let h = hypnet(404);
    let a = Artifact::hypnet(&h, None, None).unwrap();
    let bad = Artifact::from_json(&edit(&a, |o| {
        let r = &mut o["rho"].as_array_mut().unwrap()[14];
        *r = Value::from(r.as_f64().unwrap() * 1.02);
    }))
    .unwrap();
    let moved = bad.to_hypnet(&tol()).unwrap();
    let (z, _) = h.rho.field().iter().find(|&(z, v)| moved.rho.at(z) != v).unwrap();

    let report = verify_artifact(&bad, &tol());
    assert!(!report.passed());
    let c1 = report.get("c1_geometric").unwrap();
    assert_eq!(c1.status, CheckStatus::Fail);
    let cell = c1.worst_cell.unwrap();
    assert!((1..=2).all(|k| (cell.get(k) - z.get(k)).abs() <= 2), "{cell} vs {z}");
    assert_eq!(report.get("planarity").unwrap().status, CheckStatus::Pass);
}

#[test]
fn nets_without_normals_skip_normal_checks() {
    let net = synth::random_surface(&mut synth::rng(405), 4, 4, &tol()).unwrap();
    let a = Artifact::anet(&net, None, None).unwrap();
    let bare = Artifact::from_json(&edit(&a, |o| {
        o.remove("normals");
    }))
    .unwrap();
    let report = verify_artifact(&bare, &tol());
    assert!(report.passed(), "{}", report.summary());
    for c in ["lelieuvre", "moutard", "cox_closure"] {
        assert_eq!(report.get(c).unwrap().status, CheckStatus::Skipped, "{c}");
    }
    assert_eq!(report.get("planarity").unwrap().status, CheckStatus::Pass);
}
