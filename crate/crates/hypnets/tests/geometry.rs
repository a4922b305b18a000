use hypnets::geometry::{
    coplanarity_residual, cross_ratio, hyperplane_residual, menelaus_multiratio,
    project_through_line, verify_cox, Line3,
};
use hypnets::synth;
use hypnets::Point3;
use proptest::prelude::*;
use rand::Rng;

fn pt() -> impl Strategy<Value = Point3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

#[test]
fn menelaus_sign_in_every_dimension() {
    let mut rng = synth::rng(21);
    for _ in 0..200 {
        let (x, p) = synth::menelaus_instance::<_, 2>(&mut rng).unwrap();
        assert!((menelaus_multiratio(&x, &p).unwrap() + 1.0).abs() < 1e-9);
        let (x, p) = synth::menelaus_instance::<_, 3>(&mut rng).unwrap();
        assert!((menelaus_multiratio(&x, &p).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn menelaus_points_lie_in_their_hyperplane() {
    let mut rng = synth::rng(22);
    for _ in 0..100 {
        let (_, p) = synth::menelaus_instance::<_, 4>(&mut rng).unwrap();
        assert!(hyperplane_residual(&p).unwrap() < 1e-12);
    }
}

#[test]
fn cox_perturbation_is_detected() {
    let mut rng = synth::rng(23);
    let mut detected = 0;
    for _ in 0..200 {
        let (apex, planes, mut x) = synth::cox_config(&mut rng).unwrap();
        assert!(verify_cox(apex, &planes, &x).unwrap() < 1e-9);
        let k = rng.gen_range(0..6);
        x[k] += synth::random_point(&mut rng, 0.05);
        if let Ok(s) = verify_cox(apex, &planes, &x) {
            detected += usize::from(s > 1e-6);
        }
    }
    assert!(detected >= 190, "{detected}");
}

#[test]
fn projection_lands_in_plane_of_axis_and_point() {
    let mut rng = synth::rng(24);
    for _ in 0..200 {
        let [a, b, c, d, p] = std::array::from_fn(|_| synth::random_point(&mut rng, 1.0));
        let axis = Line3::through(a, b).unwrap();
        let target = Line3::through(c, d).unwrap();
        let Ok(q) = project_through_line(p, &axis, &target) else {
            continue;
        };
        if q.norm() > 1e3 {
            continue;
        }
        assert!(target.distance(q) < 1e-9 * (1.0 + q.norm()));
        assert!(coplanarity_residual(&[a, b, p, q]).unwrap() < 1e-9);
    }
}

proptest! {
    #[test]
    fn cross_ratio_is_affine_invariant(
        base in pt(), dir in pt(), s in 0.2..3.0f64, shift in pt(),
        t in prop::array::uniform4(-3.0..3.0f64),
    ) {
        prop_assume!(dir.norm() > 0.3);
        let mut ts = t;
        ts.sort_by(f64::total_cmp);
        prop_assume!(ts.windows(2).all(|w| w[1] - w[0] > 0.05));
        let p: [Point3; 4] = std::array::from_fn(|k| base + dir * t[k]);
        let q: [Point3; 4] = std::array::from_fn(|k| Point3::new(s * p[k].x, p[k].y - p[k].z, 2.0 * p[k].z + p[k].x) + shift);
        let a = cross_ratio(p[0], p[1], p[2], p[3]).unwrap();
        let b = cross_ratio(q[0], q[1], q[2], q[3]).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn coplanar_points_stay_coplanar(a in pt(), u in pt(), v in pt(), w in prop::array::uniform8((-1.0..1.0f64, -1.0..1.0f64))) {
        prop_assume!(u.cross(v).norm() > 0.1);
        let pts: Vec<Point3> = w.iter().map(|&(s, t)| a + u * s + v * t).collect();
        prop_assert!(coplanarity_residual(&pts).unwrap() < 1e-12);
    }

    #[test]
    fn lifted_point_breaks_coplanarity(a in pt(), u in pt(), v in pt(), h in 0.05..1.0f64) {
        prop_assume!(u.cross(v).norm() > 0.3 && u.norm() < 3.0 && v.norm() < 3.0);
        let n = u.cross(v) / u.cross(v).norm();
        let pts = [a, a + u, a + v, a + u + v + n * h];
        prop_assert!(coplanarity_residual(&pts).unwrap() > 1e-4);
    }
}
