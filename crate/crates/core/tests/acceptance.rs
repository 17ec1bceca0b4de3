//! Acceptance suite: one pass/fail line per criterion, with pinned
//! tolerances and time budgets.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use cubicsp::angle::coperiodic_angles;
use cubicsp::combinatorics::{angle_counts, curve_stats, degree, table4};
use cubicsp::dynamics::{bottcher, critical_level, green, parameter_green, CubicMap};
use cubicsp::parameter::{
    chart_map, find_centers, s2_map, trace_parameter_ray, CenterKind, EscapeRegion, Landing, ParamRayOptions,
};
use cubicsp::portrait::{amalgamate, classify_edge, four_ray_faces, is_formal, EdgeKind, OrbitPortrait};
use cubicsp::rays::{
    counterexample_family, kneading_flood_fill, kneading_invariant, parabolic_stability_probe, Continuity,
    KneadingInvariant, RayOptions,
};
use cubicsp::tessellation::{build, faces_around, wake_detect, wake_nested_in, BuildOptions};
use cubicsp::Angle;
use num_bigint::BigUint;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEDUP_TOL: f64 = 1e-8;
const GAMMA_TOL: f64 = 1e-9;
const BOTTCHER_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-5;
const JUMP_MIN: f64 = 0.1;
const JUMP_RATIO_MAX: f64 = 10.0;
const FLOOD_RES: usize = 512;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn a(n: u64, d: u64) -> Angle {
    Angle::frac(n, d)
}

fn portrait(q: u32, classes: &[&[u64]]) -> OrbitPortrait {
    OrbitPortrait::from_numerators(q, classes).unwrap()
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn counting() -> Outcome {
    let d = [1u64, 2, 8, 24, 80, 232, 728, 2160, 6552];
    for (p, want) in (1..=9).zip(d) {
        check(degree(p).unwrap() == big(want), format!("d_{p}"))?;
    }
    let periodic = [2u64, 6, 24, 72, 240, 696, 2184, 6480];
    for (q, want) in (1..=8).zip(periodic) {
        check(angle_counts(q).unwrap() == (big(want), big(2 * want)), format!("angle counts q={q}"))?;
    }
    // (q, p, ideal, parabolic, edges, faces, chi, kernel, image)
    let rows: [(u32, u32, u64, u64, u64, i64, i64, u64, u64); 9] = [
        (1, 1, 1, 2, 4, 3, 2, 0, 0),
        (2, 1, 1, 6, 12, 7, 2, 0, 0),
        (3, 1, 1, 24, 48, 25, 2, 0, 0),
        (1, 2, 2, 6, 8, 3, 2, 1, 0),
        (2, 2, 2, 8, 24, 16, 2, 0, 0),
        (3, 2, 2, 48, 96, 49, 2, 1, 0),
        (1, 3, 8, 24, 32, 9, 0, 7, 2),
        (2, 3, 8, 48, 96, 42, 0, 2, 0),
        (3, 3, 8, 168, 384, 208, 0, 0, 0),
    ];
    let table = table4();
    for r in rows {
        let t = table.iter().find(|t| (t.q, t.p) == (r.0, r.1)).ok_or("missing row")?;
        let got = (
            t.v_ideal.clone(),
            t.v_par.clone(),
            t.e.clone(),
            t.f.clone(),
            t.chi.clone(),
            t.h1_kernel_rank,
            t.h1_image_rank,
        );
        let want = (big(r.2), big(r.3), big(r.4), r.5.into(), r.6.into(), r.7, r.8);
        check(got == want, format!("row (q,p)=({},{}): {got:?}", r.0, r.1))?;
        check(t.euler_holds(), "Euler formula")?;
        check(curve_stats(r.1).unwrap().chi == r.6.into(), "chi from N_p + (2-p) d_p")?;
    }
    Ok("degrees, region counts and tessellation rows reproduced".into())
}

fn coperiodic() -> Outcome {
    let sizes: Vec<usize> = (1..=6).map(|q| coperiodic_angles(q).unwrap().len()).collect();
    check(sizes == [4, 12, 48, 144, 480, 1392], format!("sizes {sizes:?}"))?;
    let nums: Vec<u64> = coperiodic_angles(2)
        .unwrap()
        .iter()
        .map(|x| (x.to_f64() * 24.0).round() as u64)
        .collect();
    check(nums == [1, 2, 5, 7, 10, 11, 13, 14, 17, 19, 22, 23], format!("q=2 numerators {nums:?}"))?;
    Ok(format!("sizes {sizes:?}"))
}

fn portrait_algebra() -> Outcome {
    check(!is_formal(&portrait(2, &[&[1, 2, 3, 5, 6, 7]])), "all-equivalent relation accepted")?;
    check(is_formal(&portrait(2, &[&[1, 2, 3, 6]])), "four-angle class rejected")?;
    let (x, y, z) = (portrait(2, &[&[1, 3]]), portrait(2, &[&[2, 6]]), portrait(2, &[&[5, 7]]));
    for (p, q) in [(&x, &y), (&y, &z), (&x, &z)] {
        let m = amalgamate(p, q).map_err(|e| e.to_string())?;
        check(is_formal(&m), format!("pairwise join {m} not formal"))?;
    }
    let triple_formal = amalgamate(&x, &y)
        .and_then(|m| amalgamate(&m, &z))
        .map(|m| is_formal(&m))
        .unwrap_or(false);
    check(!triple_formal, "triple join formal")?;
    let f = four_ray_faces(&a(10, 24), &a(11, 24), &a(14, 24), &a(17, 24), 2, None).map_err(|e| e.to_string())?;
    check(f.shifts == [1], format!("shifts {:?}", f.shifts))?;
    let faces = &f.model.faces;
    let want = [
        portrait(2, &[&[1, 2, 3, 6]]),
        portrait(2, &[&[2, 6]]),
        portrait(2, &[&[1, 2], &[3, 6]]),
        portrait(2, &[&[1, 3]]),
    ];
    check(faces[..] == want[..], "four-ray face portraits")?;
    let kinds: Vec<EdgeKind> = (0..4).map(|i| classify_edge(&faces[i], &faces[(i + 1) % 4])).collect();
    let primary = kinds.iter().filter(|&&k| k == EdgeKind::Primary).count();
    let secondary = kinds.iter().filter(|&&k| k == EdgeKind::Secondary).count();
    check((primary, secondary) == (2, 2), format!("edge kinds {kinds:?}"))?;
    check(kinds[0] == EdgeKind::Primary && kinds[3] == EdgeKind::Primary, "edges at the D face are primary")?;
    Ok(format!("edge kinds around the vertex {kinds:?}"))
}

fn centers() -> Outcome {
    let mut report = Vec::new();
    for p in 1..=4u32 {
        let n = find_centers(p, CenterKind::A).map_err(|e| e.to_string())?.len();
        check(big(n as u64) == degree(p).unwrap(), format!("|A({p})| = {n}"))?;
        report.push(format!("A({p})={n}"));
    }
    for s in 2..=4u32 {
        for m in 1..s {
            let n = s - m;
            let cs = find_centers(s, CenterKind::B(m, n)).map_err(|e| e.to_string())?;
            check(big(cs.len() as u64) == degree(s).unwrap(), format!("|B({m},{n})| = {}", cs.len()))?;
            for (i, x) in cs.iter().enumerate() {
                for y in &cs[i + 1..] {
                    check((x.a - y.a).norm() + (x.v - y.v).norm() > DEDUP_TOL, "duplicate center")?;
                }
            }
            report.push(format!("B({m},{n})={}", cs.len()));
        }
    }
    let b11 = find_centers(2, CenterKind::B(1, 1)).map_err(|e| e.to_string())?;
    let r = 0.5f64.sqrt();
    let mut re: Vec<f64> = b11.iter().map(|m| m.a.re).collect();
    re.sort_by(f64::total_cmp);
    check(
        b11.iter().all(|m| m.a.im.abs() < 1e-10) && (re[0] + r).abs() < 1e-10 && (re[1] - r).abs() < 1e-10,
        "B(1,1) at a = ±1/√2",
    )?;
    let d2 = find_centers(1, CenterKind::D(2)).map_err(|e| e.to_string())?.len();
    check(d2 == 6, format!("|D(2) ∩ S_1| = {d2}"))?;
    report.push(format!("D(2)∩S_1={d2}"));
    Ok(report.join(" "))
}

fn functional_equations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let f = CubicMap::new(
            C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)),
            C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        );
        let floor = critical_level(&f) * 1.5;
        let mut n = 0;
        while n < 1000 {
            let r = f.escape_radius() * rng.gen_range(0.2..3.0);
            let z = C64::from_polar(r, rng.gen_range(0.0..2.0 * PI));
            let g = green(&f, z).map_err(|e| e.to_string())?;
            if g <= floor.max(1e-3) {
                continue;
            }
            n += 1;
            let g1 = green(&f, f.eval(z)).map_err(|e| e.to_string())?;
            let e1 = (g1 - 3.0 * g).abs() / g.max(1.0);
            let b = bottcher(&f, z).map_err(|e| e.to_string())?;
            let b1 = bottcher(&f, f.eval(z)).map_err(|e| e.to_string())?;
            let e2 = (b1 - b * b * b).norm() / b.norm().powi(3);
            worst = (worst.0.max(e1), worst.1.max(e2));
        }
    }
    check(worst.0 <= GAMMA_TOL, format!("γ relative error {:.2e}", worst.0))?;
    check(worst.1 <= BOTTCHER_TOL, format!("B relative error {:.2e}", worst.1))?;
    Ok(format!("worst γ {:.1e}, worst B {:.1e}", worst.0, worst.1))
}

fn landing_dichotomy() -> Outcome {
    let opts = ParamRayOptions::default();
    let mut jobs = Vec::new();
    for region in [EscapeRegion::s2_inner(), EscapeRegion::s2_outer()] {
        for q in 1..=2 {
            for phi in coperiodic_angles(q).unwrap() {
                jobs.push((region.clone(), phi, q));
            }
        }
    }
    for (region, phi, q) in &jobs {
        let ray = trace_parameter_ray(region, phi, &opts).map_err(|e| format!("{} {phi}: {e}", region.label()))?;
        match ray.landing {
            Landing::Parabolic { ray_period, .. } if ray_period == *q => {}
            other => return Err(format!("{} {phi}: {other:?}", region.label())),
        }
    }
    let outer = EscapeRegion::s2_outer();
    let mut zero_map = None;
    for (phi, want) in [(Angle::zero(), (1, 1)), (a(1, 9), (2, 1))] {
        let ray = trace_parameter_ray(&outer, &phi, &opts).map_err(|e| e.to_string())?;
        match ray.landing {
            Landing::Misiurewicz { preperiod, period, map, .. } if (preperiod, period) == want => {
                if phi.is_zero() {
                    zero_map = Some(map);
                }
            }
            other => return Err(format!("outer {phi}: {other:?}")),
        }
    }
    // Oracle: with F(2a) = 2a, i.e. v = 2a - 4a³, the period-2 condition in
    // the chart s reduces to -4(s²+1)³ + 9s²(s²+1) + 27s⁴ = 0.
    let m = zero_map.unwrap();
    let s = m.v - m.a;
    let s2 = s * s;
    let oracle = -4.0 * (s2 + 1.0).powi(3) + 9.0 * s2 * (s2 + 1.0) + 27.0 * s2 * s2;
    let fixed = (m.eval(2.0 * m.a) - 2.0 * m.a).norm();
    check(oracle.norm() < ORACLE_TOL && fixed < ORACLE_TOL, format!("oracle residual {:.1e}", oracle.norm()))?;
    Ok(format!("{} parabolic rays; φ=0 oracle residual {:.1e}", jobs.len(), oracle.norm()))
}

fn tessellations() -> Outcome {
    let opts = BuildOptions::default();
    let want = [((1, 1), (1, 2, 4, 3)), ((2, 1), (1, 6, 12, 7)), ((1, 2), (2, 6, 8, 3)), ((2, 2), (2, 8, 24, 16))];
    let mut built = Vec::new();
    for ((q, p), counts) in want {
        let t = build(q, p, &opts).map_err(|e| format!("Tes_{q}(S_{p}): {e}"))?;
        let got = (t.ideal_count(), t.parabolic_count(), t.edges.len(), t.faces.len());
        check(got == counts, format!("Tes_{q}(S_{p}) counts {got:?}"))?;
        built.push(t);
    }
    let t22 = &built[3];
    let kinds = t22.edge_kinds();
    let primary = kinds.iter().filter(|&&k| k == EdgeKind::Primary).count();
    let secondary = kinds.iter().filter(|&&k| k == EdgeKind::Secondary).count();
    check((primary, secondary) == (16, 8), format!("edge kinds {primary}+{secondary}"))?;
    let outer = 1;
    let big_wake = wake_detect(&built[2])
        .into_iter()
        .find(|w| w.region == outer && w.from == a(2, 3) && w.to == a(5, 6))
        .ok_or("no (2/3, 5/6) wake")?;
    let small = wake_detect(t22)
        .into_iter()
        .find(|w| w.region == outer && w.from == a(17, 24) && w.to == a(19, 24))
        .ok_or("no (17/24, 19/24) wake")?;
    check(wake_nested_in(&small, &big_wake), "(17/24, 19/24) not inside (2/3, 5/6)")?;
    Ok(format!("Tes_2(S_2): {primary} primary + {secondary} secondary"))
}

fn face_constancy() -> Outcome {
    let t = build(2, 2, &BuildOptions::default()).map_err(|e| e.to_string())?;
    for (i, f) in t.faces.iter().enumerate() {
        let regions: Vec<_> = f.samples.iter().map(|s| (s.region, s.angle.clone())).collect();
        check(f.samples.len() >= 2 && f.portrait.is_some(), format!("face {i} has {} samples", regions.len()))?;
    }
    let angles = [a(10, 24), a(11, 24), a(14, 24), a(17, 24)];
    let model = four_ray_faces(&angles[0], &angles[1], &angles[2], &angles[3], 2, None).unwrap().model;
    let v = t
        .vertices
        .iter()
        .position(|v| {
            let mut here: Vec<Angle> = v.rotation.iter().map(|d| t.edges[d / 2].angle.clone()).collect();
            here.sort();
            here == angles
        })
        .ok_or("no four-ray vertex")?;
    let around: Vec<OrbitPortrait> = faces_around(&t, v).iter().map(|(_, f)| t.faces[*f].portrait.clone().unwrap()).collect();
    let start = around.iter().position(|p| *p == model.faces[0]).ok_or("no D face at the vertex")?;
    let rotated: Vec<OrbitPortrait> = (0..4).map(|i| around[(start + i) % 4].clone()).collect();
    check(rotated == model.faces, "faces around the four-ray vertex differ from the model")?;
    let samples: usize = t.faces.iter().map(|f| f.samples.len()).sum();
    Ok(format!("{} faces, {samples} samples, four-ray vertex matches", t.faces.len()))
}

fn kneading() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (region, want) in [(EscapeRegion::s2_outer(), vec![0u8, 0]), (EscapeRegion::s2_inner(), vec![1, 0])] {
        let want = KneadingInvariant(want);
        for _ in 0..5 {
            let phi = rng.gen_range(0.0..1.0);
            let map = region.seed(rng.gen_range(0.5..3.0), phi).map_err(|e| e.to_string())?;
            let k = kneading_invariant(&map, None, 2).map_err(|e| e.to_string())?;
            check(k == want, format!("{} {phi:.4}: {k:?}", region.label()))?;
        }
        let choices = coperiodic_angles(2).unwrap();
        let phi = choices[rng.gen_range(0..choices.len())].clone();
        let ray = trace_parameter_ray(&region, &phi, &ParamRayOptions::default()).map_err(|e| e.to_string())?;
        for sample in ray.samples.iter().filter(|s| s.g > 0.2).step_by(7) {
            let k = kneading_invariant(&sample.map, Some(&phi), 2).map_err(|e| e.to_string())?;
            check(k == want, format!("{} ray {phi} at G={:.3}: {k:?}", region.label(), sample.g))?;
        }
    }
    let mut n = 0;
    while n < 20 {
        let t = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let Ok(map) = s2_map(t) else { continue };
        if parameter_green(&map).map_or(true, |g| g < 0.05) {
            continue;
        }
        n += 1;
        let wall = kneading_invariant(&map, None, 2).map_err(|e| format!("t={t}: {e}"))?;
        let fill = kneading_flood_fill(&map, 2, FLOOD_RES).map_err(|e| format!("t={t}: {e}"))?;
        check(wall == fill, format!("t={t}: wall {wall:?} vs flood fill {fill:?}"))?;
    }
    Ok("regions (0,0)/(1,0); wall and flood fill agree on 20 maps".into())
}

fn stability_probe() -> Outcome {
    let ray_opts = RayOptions::default();
    let jumpy = parabolic_stability_probe(counterexample_family, &Angle::zero(), &[0.0, 0.05, 0.1, 0.2], &ray_opts)
        .map_err(|e| e.to_string())?;
    check(jumpy.max_jump >= JUMP_MIN, format!("0-ray max jump {:.3}", jumpy.max_jump))?;
    check(jumpy.verdict == Continuity::Discontinuous, "counterexample judged continuous")?;

    let ray = trace_parameter_ray(&EscapeRegion::s2_inner(), &a(5, 6), &ParamRayOptions::default())
        .map_err(|e| e.to_string())?;
    let f0 = ray.landing.map().ok_or("5/6 ray has no landing map")?;
    let t0 = cubicsp::parameter::chart_coordinate(2, &f0).map_err(|e| e.to_string())?;
    let t_last = cubicsp::parameter::chart_coordinate(2, &ray.samples.last().unwrap().map).unwrap();
    // Approach the landing map transversally to the parameter ray, on which
    // the 1/2 ray crashes into -a.
    let dir = C64::i() * (t_last - t0) / (t_last - t0).norm();
    let s: Vec<f64> = (0..=10).map(|i| 0.005 * i as f64).collect();
    let probe = parabolic_stability_probe(|x| chart_map(2, t0 + dir * x).unwrap(), &a(1, 2), &s, &ray_opts)
        .map_err(|e| e.to_string())?;
    let ratio = probe.jumps.iter().zip(&probe.map_steps).map(|(j, m)| j / m).fold(0.0, f64::max);
    check(probe.verdict == Continuity::Continuous && ratio <= JUMP_RATIO_MAX, format!("1/2 ray jump ratio {ratio:.2}"))?;
    Ok(format!(
        "0-ray jump {:.3}; 1/2-ray max jump/step {ratio:.2}",
        jumpy.max_jump
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("counting golden tests", counting, 1),
        ("co-periodic enumeration", coperiodic, 1),
        ("portrait algebra", portrait_algebra, 10),
        ("center enumeration", centers, 60),
        ("functional equations", functional_equations, 10),
        ("landing dichotomy on S_2", landing_dichotomy, 300),
        ("tessellation build", tessellations, 600),
        ("face-portrait constancy", face_constancy, 300),
        ("kneading", kneading, 60),
        ("parabolic stability probe", stability_probe, 60),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(_) if took > Duration::from_secs(*budget) => Err(format!("took {took:.1?}, budget {budget}s")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({took:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({took:.2?}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
