use cubicsp::parameter::{enumerate_regions, trace_parameter_ray, EscapeRegion, Landing, ParamRayOptions};
use cubicsp::rays::{kneading_invariant, orbit_portrait_numeric, trace_dynamic_ray, KneadingInvariant, RayOptions, RayStatus};
use cubicsp::tessellation::{build, wake_detect, BuildOptions};
use cubicsp::{Angle, CubicMap, OrbitPortrait};
use num_complex::Complex64 as C64;

fn a(n: u64, d: u64) -> Angle {
    Angle::frac(n, d)
}

fn close(x: &CubicMap, y: &CubicMap, tol: f64) -> bool {
    (x.a - y.a).norm() + (x.v - y.v).norm() < tol
}

#[test]
fn rays_crash_together_at_the_free_critical_point() {
    let ray = trace_parameter_ray(&EscapeRegion::s2_inner(), &a(11, 24), &ParamRayOptions::default()).unwrap();
    let f = ray.samples.iter().find(|s| s.g < 0.5).unwrap().map;
    for theta in [a(1, 8), a(19, 24)] {
        let r = trace_dynamic_ray(&f, &theta, &RayOptions::default()).unwrap();
        match r.status {
            RayStatus::Crashed { z, .. } => assert!((z + f.a).norm() < 1e-3, "{theta} crashed at {z}, -a = {}", -f.a),
            other => panic!("{theta}: {other:?}"),
        }
    }
}

#[test]
fn fixed_rays_of_z_cubed() {
    let f = CubicMap::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for (theta, want) in [(Angle::zero(), 1.0), (a(1, 2), -1.0)] {
        let r = trace_dynamic_ray(&f, &theta, &RayOptions::default()).unwrap();
        assert!(matches!(r.status, RayStatus::Landed { .. }));
        assert!((r.endpoint() - want).norm() < 1e-6);
    }
    assert_eq!(orbit_portrait_numeric(&f, 2, 1e-4).unwrap(), OrbitPortrait::trivial(2));
}

#[test]
fn primary_wakes_of_s1_join_the_fixed_rays() {
    let t = build(1, 1, &BuildOptions::default()).unwrap();
    let zero_half = OrbitPortrait::from_numerators(1, &[&[0, 1]]).unwrap();
    let wake = wake_detect(&t).into_iter().find(|w| w.from == a(2, 3) && w.to == a(5, 6)).unwrap();
    for &face in &wake.faces {
        for s in &t.faces[face].samples {
            assert_eq!(orbit_portrait_numeric(&s.map, 1, 1e-4).unwrap(), zero_half);
        }
    }
}

#[test]
fn four_ray_face_portrait_numerically() {
    let t = build(2, 2, &BuildOptions::default()).unwrap();
    let want = OrbitPortrait::from_numerators(2, &[&[1, 2, 3, 6]]).unwrap();
    let face = t.faces.iter().find(|f| f.portrait.as_ref() == Some(&want)).unwrap();
    assert!(face.samples.len() >= 2);
    for s in &face.samples {
        assert_eq!(orbit_portrait_numeric(&s.map, 2, 1e-4).unwrap(), want);
    }
}

#[test]
fn s3_rays_share_a_landing_across_kneading_regions() {
    let regions = enumerate_regions(3).unwrap();
    assert_eq!(regions.len(), 8);
    let with = |w: &[u8]| regions.iter().filter(|r| r.kneading == KneadingInvariant(w.to_vec())).collect::<Vec<_>>();
    let opts = ParamRayOptions::default();
    let first = with(&[1, 1, 0]);
    assert_eq!(first.len(), 1);
    let alpha = trace_parameter_ray(first[0], &a(17, 24), &opts).unwrap();
    let Landing::Parabolic { ray_period: 2, map: f, .. } = alpha.landing else { panic!("{:?}", alpha.landing) };
    let sample = alpha.samples.iter().find(|s| s.g < 1.0).unwrap().map;
    assert_eq!(kneading_invariant(&sample, Some(&a(17, 24)), 3).unwrap(), KneadingInvariant(vec![1, 1, 0]));

    let partners: Vec<_> = with(&[0, 1, 0])
        .into_iter()
        .filter_map(|r| trace_parameter_ray(r, &a(19, 24), &opts).ok())
        .filter(|ray| ray.landing.map().is_some_and(|g| close(&f, &g, 1e-6)))
        .collect();
    assert_eq!(partners.len(), 1);
    let sample = partners[0].samples.iter().find(|s| s.g < 1.0).unwrap().map;
    assert_eq!(kneading_invariant(&sample, Some(&a(19, 24)), 3).unwrap(), KneadingInvariant(vec![0, 1, 0]));
}
