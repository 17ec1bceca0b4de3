//! Dynamic rays: tracing by Newton pullback, crash detection, landing
//! points, numerical orbit portraits, kneading walls and the landing
//! stability probe.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Serialize, Serializer};

use crate::angle::{periodic_angles, Angle};
use crate::dynamics::{
    depth_for, escaping_critical_points, green_with_budget, parameter_green, ray_point, CubicMap,
    EscapingCritical,
};
use crate::error::{Error, NumericError};
use crate::numeric::Jet;
use crate::portrait::{is_formal, OrbitPortrait};

/// Angle of a ray: exact, or a float for rays attached to an irrational
/// co-critical angle.
#[derive(Clone, Debug, PartialEq)]
pub enum RayAngle {
    Exact(Angle),
    Float(f64),
}

impl RayAngle {
    /// `3^k θ mod 1`, for `k = 0..=max_k`.
    fn table(&self, max_k: u32) -> Vec<f64> {
        match self {
            RayAngle::Exact(a) => {
                let mut x = a.clone();
                let mut out = Vec::with_capacity(max_k as usize + 1);
                for _ in 0..=max_k {
                    out.push(x.to_f64());
                    x = x.triple();
                }
                out
            }
            RayAngle::Float(t) => {
                let mut x = t.rem_euclid(1.0);
                let mut out = Vec::with_capacity(max_k as usize + 1);
                for _ in 0..=max_k {
                    out.push(x);
                    x = (3.0 * x).rem_euclid(1.0);
                }
                out
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RayAngle::Exact(a) => a.to_f64(),
            RayAngle::Float(t) => t.rem_euclid(1.0),
        }
    }
}

impl Serialize for RayAngle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RayAngle::Exact(a) => a.serialize(s),
            RayAngle::Float(t) => s.serialize_f64(*t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayOptions {
    /// Potential of the first sample (raised to the Böttcher level if lower).
    pub g_max: f64,
    pub g_min: f64,
    /// Ratio between consecutive potentials, in `(0, 1)`.
    pub step_factor: f64,
    /// Stop at potentials where the ray runs into a (pre)critical point.
    pub detect_crash: bool,
    /// Attempt to refine the landing point of rational rays.
    pub refine_landing: bool,
}

impl Default for RayOptions {
    fn default() -> Self {
        Self {
            g_max: 16.0,
            g_min: 1e-8,
            step_factor: 3f64.powf(-1.0 / 8.0),
            detect_crash: true,
            refine_landing: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RaySample {
    #[serde(rename = "G")]
    pub g: f64,
    pub z: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RayStatus {
    Landed { z: C64 },
    Crashed { z: C64, potential: f64 },
    Truncated { g_min: f64, z: C64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicRay {
    pub angle: RayAngle,
    pub samples: Vec<RaySample>,
    pub status: RayStatus,
}

impl DynamicRay {
    pub fn last(&self) -> C64 {
        self.samples.last().expect("rays have samples").z
    }

    /// Landing point if landed, otherwise the last traced point.
    pub fn endpoint(&self) -> C64 {
        match self.status {
            RayStatus::Landed { z } | RayStatus::Crashed { z, .. } | RayStatus::Truncated { z, .. } => z,
        }
    }
}

pub fn trace_dynamic_ray(map: &CubicMap, theta: &Angle, opts: &RayOptions) -> Result<DynamicRay, NumericError> {
    let crit = if opts.detect_crash { escaping_critical_points(map)? } else { Vec::new() };
    trace_ray_with(map, &RayAngle::Exact(theta.clone()), opts, &crit)
}

/// Traces a ray using precomputed escaping-critical-point data.
pub fn trace_ray_with(
    map: &CubicMap,
    angle: &RayAngle,
    opts: &RayOptions,
    crit: &[EscapingCritical],
) -> Result<DynamicRay, NumericError> {
    let level = map.series_level();
    let max_k = depth_for(opts.g_min, level) + 1;
    let angles = angle.table(max_k);

    let crash = if opts.detect_crash { first_crash(&angles, crit, opts.g_min) } else { None };
    let stop = crash.map(|(g, _, _)| g * (1.0 + 1e-7)).unwrap_or(opts.g_min);

    let mut g = opts.g_max.max(level);
    let seed = C64::from_polar(g.exp(), 2.0 * PI * angles[0]);
    let mut z = ray_point(map, seed, 0, g, angles[0])
        .ok_or(NumericError::NewtonDivergence { potential: g })?;
    let mut samples = vec![RaySample { g, z }];
    let mut factor = opts.step_factor;
    let mut last_move = f64::INFINITY;
    while g > stop {
        let g_next = (g * factor).max(stop);
        let k = depth_for(g_next, level);
        let accepted = ray_point(map, z, k, g_next, angles[k as usize])
            .filter(|z1| (z1 - z).norm() <= 4.0 * last_move + 1e-9 * z.norm().max(1.0));
        match accepted {
            Some(z1) => {
                last_move = (z1 - z).norm();
                z = z1;
                g = g_next;
                samples.push(RaySample { g, z });
                factor = (factor * factor).max(opts.step_factor);
            }
            None => {
                // Near a repelling landing point the ray converges faster
                // than double precision can follow.
                if last_move < 1e-11 * z.norm().max(1.0) && crash.is_none() {
                    break;
                }
                // The ray equation is singular at the crash point itself.
                if crash.is_some_and(|(g_c, _, _)| g <= g_c * (1.0 + 1e-3)) {
                    break;
                }
                factor = factor.sqrt();
                if factor > 1.0 - 1e-9 {
                    return Err(NumericError::NewtonDivergence { potential: g });
                }
            }
        }
    }

    let status = if let Some((g_c, j, c)) = crash {
        let w = map.iterate(z, j as usize);
        if (w - c).norm() < 0.05 * c.norm().max(1.0) {
            RayStatus::Crashed { z, potential: g_c }
        } else {
            return Err(NumericError::VerificationFailed(format!(
                "ray predicted to crash at potential {g_c:e} stays away from the critical point"
            )));
        }
    } else {
        match angle {
            RayAngle::Exact(a) if opts.refine_landing => landing_status(map, a, &samples, opts.g_min),
            _ => RayStatus::Truncated { g_min: opts.g_min, z },
        }
    };
    Ok(DynamicRay { angle: angle.clone(), samples, status })
}

/// Highest potential at which the ray meets a (pre)critical point:
/// `(potential, depth j, critical point)`.
fn first_crash(angles: &[f64], crit: &[EscapingCritical], g_min: f64) -> Option<(f64, u32, C64)> {
    let mut best: Option<(f64, u32, C64)> = None;
    for c in crit {
        let mut level = c.potential;
        let mut j = 0u32;
        while level > g_min && (j as usize) < angles.len() {
            let hit = c.crash_angles.iter().any(|&t| {
                let d = (angles[j as usize] - t).rem_euclid(1.0);
                d.min(1.0 - d) < 1e-9
            });
            if hit {
                if best.is_none_or(|b| level > b.0) {
                    best = Some((level, j, c.point));
                }
                break;
            }
            level /= 3.0;
            j += 1;
        }
    }
    best
}

/// Refines the landing point of a rational ray from its last samples.
fn landing_status(map: &CubicMap, theta: &Angle, samples: &[RaySample], g_min: f64) -> RayStatus {
    let z_last = samples.last().expect("nonempty").z;
    let truncated = RayStatus::Truncated { g_min, z: z_last };
    let Ok((l, n)) = theta.preperiod_and_period() else { return truncated };
    let Some(z) = refine_preperiodic(map, z_last, l, n) else { return truncated };
    let cycle_point = map.iterate(z, l as usize);
    let (_, lambda) = map.iterate_with_derivative(cycle_point, n as usize);
    if lambda.norm() <= 1.0 + 1e-6 {
        return truncated;
    }
    let close = (z - z_last).norm() < 1e-2 * z.norm().max(1.0);
    let tail: Vec<f64> = samples.iter().rev().take(6).map(|s| (s.z - z).norm()).collect();
    let approaching = tail.len() >= 4 && tail.windows(2).all(|w| w[0] < w[1]) && tail[0] < 0.1;
    if close || approaching {
        RayStatus::Landed { z }
    } else {
        truncated
    }
}

/// Newton's method for `F^{l+n}(z) = F^l(z)`.
pub fn refine_preperiodic(map: &CubicMap, z: C64, l: u32, n: u32) -> Option<C64> {
    let mut z = z;
    for _ in 0..60 {
        let x = Jet::<1>::var(z, 0);
        let head = map.iterate_jet(x, l as usize);
        let tail = map.iterate_jet(head, n as usize);
        let r = tail - head;
        let dz = r.v / r.d[0];
        if !dz.is_finite() {
            return None;
        }
        z -= dz;
        if dz.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let r = map.iterate(map.iterate(z, l as usize), n as usize) - map.iterate(z, l as usize);
    (r.norm() < 1e-10 * z.norm().max(1.0)).then_some(z)
}

/// Numerical period-`q` orbit portrait: rays landing within `tol` of each
/// other are identified.
pub fn orbit_portrait_numeric(map: &CubicMap, q: u32, tol: f64) -> Result<OrbitPortrait, Error> {
    let angles = periodic_angles(q)?;
    let crit = escaping_critical_points(map)?;
    let opts = RayOptions::default();
    let rays = crate::exec::map_collect(&angles, |a| trace_ray_with(map, &RayAngle::Exact(a.clone()), &opts, &crit));
    let mut ends = Vec::with_capacity(rays.len());
    for (a, r) in angles.iter().zip(rays) {
        let r = r?;
        if let RayStatus::Crashed { .. } = r.status {
            return Err(NumericError::RayCrashed(a.to_string()).into());
        }
        ends.push(r.endpoint());
    }
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            let d = (ends[i] - ends[j]).norm();
            if d >= tol && d < 3.0 * tol {
                return Err(NumericError::ClusterAmbiguous(tol, 3.0 * tol).into());
            }
        }
    }
    let mut classes: Vec<Vec<Angle>> = Vec::new();
    let mut reps: Vec<C64> = Vec::new();
    for (a, z) in angles.iter().zip(&ends) {
        match reps.iter().position(|r| (r - z).norm() < tol) {
            Some(k) => classes[k].push(a.clone()),
            None => {
                reps.push(*z);
                classes.push(vec![a.clone()]);
            }
        }
    }
    let portrait = OrbitPortrait::new(q, classes)?;
    if !is_formal(&portrait) {
        return Err(NumericError::VerificationFailed(format!("numerical portrait {portrait} is not formal")).into());
    }
    Ok(portrait)
}

/// A closed polygon made of two rays that meet near a common point, closed
/// far away. Points are classified by winding number.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Wall {
    pub first: Vec<C64>,
    pub second: Vec<C64>,
}

impl Wall {
    fn polygon(&self) -> Vec<C64> {
        let mut poly = self.first.clone();
        poly.extend(self.second.iter().rev());
        poly
    }

    /// Side of the wall: `true` on the side enclosed by the closed polygon.
    pub fn side(&self, z: C64) -> bool {
        winding_number(&self.polygon(), z) != 0
    }
}

/// Winding number of the closed polygon `poly` around `z`.
pub fn winding_number(poly: &[C64], z: C64) -> i32 {
    let mut wn = 0;
    let n = poly.len();
    for i in 0..n {
        let (p, q) = (poly[i] - z, poly[(i + 1) % n] - z);
        let cross = p.re * q.im - p.im * q.re;
        if p.im <= 0.0 {
            if q.im > 0.0 && cross > 0.0 {
                wn += 1;
            }
        } else if q.im <= 0.0 && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Kneading bits `κ_1..κ_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct KneadingInvariant(pub Vec<u8>);

impl std::fmt::Display for KneadingInvariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Wall through `-a` made of the two rays that crash there. `theta` is the
/// co-critical angle when known exactly.
pub fn kneading_wall(map: &CubicMap, theta: Option<&Angle>) -> Result<Wall, NumericError> {
    let g = parameter_green(map)?;
    let (up, down) = match theta {
        Some(t) => {
            let third = Angle::frac(1, 3);
            (RayAngle::Exact(t.add(&third)), RayAngle::Exact(t.sub(&third)))
        }
        None => {
            let t = crate::dynamics::cocritical_angle(map)?;
            (RayAngle::Float(t + 1.0 / 3.0), RayAngle::Float(t - 1.0 / 3.0))
        }
    };
    let opts = RayOptions {
        g_min: g * (1.0 + 1e-6),
        detect_crash: false,
        refine_landing: false,
        ..RayOptions::default()
    };
    let trace = |a: &RayAngle| -> Result<Vec<C64>, NumericError> {
        let r = trace_ray_with(map, a, &opts, &[]).map_err(|e| NumericError::WallTraceFailed(e.to_string()))?;
        let mut pts: Vec<C64> = r.samples.iter().map(|s| s.z).collect();
        pts.push(-map.a);
        Ok(pts)
    };
    let wall = Wall { first: trace(&up)?, second: trace(&down)? };
    let gap = (wall.first[wall.first.len() - 2] - wall.second[wall.second.len() - 2]).norm();
    if gap > 0.05 * map.a.norm().max(1e-3) {
        return Err(NumericError::WallTraceFailed(format!("rays end {gap:e} apart instead of meeting at -a")));
    }
    Ok(wall)
}

/// Kneading invariant of an escaping map with marked critical point of
/// period `p`, from the wall through `-a`.
pub fn kneading_invariant(map: &CubicMap, theta: Option<&Angle>, p: u32) -> Result<KneadingInvariant, NumericError> {
    let wall = kneading_wall(map, theta)?;
    kneading_from_wall(map, &wall, p)
}

pub fn kneading_from_wall(map: &CubicMap, wall: &Wall, p: u32) -> Result<KneadingInvariant, NumericError> {
    let home = wall.side(map.a);
    if wall.side(-2.0 * map.a) == home {
        return Err(NumericError::WallTraceFailed("a and -2a lie on the same side".into()));
    }
    let orbit = map.orbit(map.a, p as usize);
    Ok(KneadingInvariant(orbit[1..].iter().map(|&z| u8::from(wall.side(z) != home)).collect()))
}

/// Kneading invariant from the connected components of `{γ < γ(-a)}` on a
/// `res × res` grid, with a small disk around `-a` removed.
pub fn kneading_flood_fill(map: &CubicMap, p: u32, res: usize) -> Result<KneadingInvariant, NumericError> {
    let g = parameter_green(map)?;
    let orbit = map.orbit(map.a, p as usize);
    let mut pts = orbit.clone();
    pts.push(-2.0 * map.a);
    pts.push(-map.a);
    pts.push(2.0 * map.a);
    let (mut lo, mut hi) = (C64::new(f64::MAX, f64::MAX), C64::new(f64::MIN, f64::MIN));
    for z in &pts {
        lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let center = (lo + hi) / 2.0;
    let half = ((hi - lo).re.max((hi - lo).im) / 2.0) * 1.6 + 0.5;
    let h = 2.0 * half / res as f64;
    let at = |i: usize, j: usize| center + C64::new(-half + (i as f64 + 0.5) * h, -half + (j as f64 + 0.5) * h);
    let mask_r = 2.5 * h;
    let inside: Vec<bool> = crate::exec::map_range(res * res, |idx| {
        let z = at(idx % res, idx / res);
        (z + map.a).norm() > mask_r && green_with_budget(map, z, 2000).map(|x| x < g).unwrap_or(true)
    });
    let mut label = vec![usize::MAX; res * res];
    let mut next = 0;
    for start in 0..res * res {
        if !inside[start] || label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(c) = stack.pop() {
            let (i, j) = (c % res, c / res);
            let mut push = |ni: usize, nj: usize| {
                let n = nj * res + ni;
                if inside[n] && label[n] == usize::MAX {
                    label[n] = next;
                    stack.push(n);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < res {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < res {
                push(i, j + 1);
            }
        }
        next += 1;
    }
    let label_of = |z: C64| -> Option<usize> {
        let i = ((z.re - center.re + half) / h).floor();
        let j = ((z.im - center.im + half) / h).floor();
        if i < 0.0 || j < 0.0 || i >= res as f64 || j >= res as f64 {
            return None;
        }
        let l = label[j as usize * res + i as usize];
        (l != usize::MAX).then_some(l)
    };
    let fail = || NumericError::WallTraceFailed("grid point of the marked orbit lies outside both lobes".into());
    let home = label_of(map.a).ok_or_else(fail)?;
    let other = label_of(-2.0 * map.a).ok_or_else(fail)?;
    if home == other {
        return Err(NumericError::WallTraceFailed("lobes are not separated on the grid".into()));
    }
    let mut bits = Vec::new();
    for z in &orbit[1..] {
        let l = label_of(*z).ok_or_else(fail)?;
        bits.push(if l == home {
            0
        } else if l == other {
            1
        } else {
            return Err(fail());
        });
    }
    Ok(KneadingInvariant(bits))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Continuity {
    Continuous,
    Discontinuous,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub s: Vec<f64>,
    pub landing: Vec<C64>,
    /// Distances between consecutive landing points.
    pub jumps: Vec<f64>,
    /// Distances between consecutive maps in centered coefficients.
    pub map_steps: Vec<f64>,
    pub max_jump: f64,
    pub verdict: Continuity,
}

/// Landing point of the `theta` ray across a family of maps. A jump larger
/// than ten times the distance between consecutive maps is a discontinuity.
pub fn parabolic_stability_probe<F>(
    family: F,
    theta: &Angle,
    s_samples: &[f64],
    opts: &RayOptions,
) -> Result<ProbeReport, NumericError>
where
    F: Fn(f64) -> CubicMap + Sync,
{
    let maps: Vec<CubicMap> = s_samples.iter().map(|&s| family(s)).collect();
    let rays = crate::exec::map_collect(&maps, |m| trace_dynamic_ray(m, theta, opts));
    let mut landing = Vec::with_capacity(rays.len());
    for r in rays {
        landing.push(r?.endpoint());
    }
    let mut jumps = Vec::new();
    let mut map_steps = Vec::new();
    let mut verdict = Continuity::Continuous;
    for i in 1..maps.len() {
        let jump = (landing[i] - landing[i - 1]).norm();
        let (m0, m1) = (&maps[i - 1], &maps[i]);
        let dist = ((m1.c1() - m0.c1()).norm_sqr() + (m1.c0() - m0.c0()).norm_sqr()).sqrt();
        if jump > 10.0 * dist + 1e-9 {
            verdict = Continuity::Discontinuous;
        }
        jumps.push(jump);
        map_steps.push(dist);
    }
    let max_jump = jumps.iter().copied().fold(0.0, f64::max);
    Ok(ProbeReport { s: s_samples.to_vec(), landing, jumps, map_steps, max_jump, verdict })
}

/// The family `z³ + z² + (1+s)z + s`, centered. Landing points are reported
/// in the centered coordinate `w = z + 1/3`.
pub fn counterexample_family(s: f64) -> CubicMap {
    let one = C64::new(1.0, 0.0);
    CubicMap::from_monic(one, one + s, C64::new(s, 0.0)).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rays_of_z_cubed() {
        let f = CubicMap::new(c(0.0, 0.0), c(0.0, 0.0));
        let r = trace_dynamic_ray(&f, &Angle::zero(), &RayOptions::default()).unwrap();
        match r.status {
            RayStatus::Landed { z } => assert!((z - c(1.0, 0.0)).norm() < 1e-12),
            s => panic!("{s:?}"),
        }
        for s in &r.samples {
            assert!(s.z.im.abs() < 1e-9 && (s.z.re.ln() - s.g).abs() < 1e-9);
        }
        let r = trace_dynamic_ray(&f, &Angle::frac(1, 2), &RayOptions::default()).unwrap();
        assert!(matches!(r.status, RayStatus::Landed { z } if (z + 1.0).norm() < 1e-12));
        assert!(r.samples.windows(2).all(|w| w[1].g < w[0].g));
    }

    #[test]
    fn preperiodic_landing() {
        let f = CubicMap::new(c(0.0, 0.0), c(0.0, 0.0));
        let r = trace_dynamic_ray(&f, &Angle::frac(1, 9), &RayOptions::default()).unwrap();
        let expected = C64::from_polar(1.0, 2.0 * PI / 9.0);
        assert!(matches!(r.status, RayStatus::Landed { z } if (z - expected).norm() < 1e-10));
    }

    #[test]
    fn trivial_portrait_for_z_cubed() {
        let f = CubicMap::new(c(0.0, 0.0), c(0.0, 0.0));
        assert!(orbit_portrait_numeric(&f, 2, 1e-6).unwrap().is_trivial());
    }

    #[test]
    fn winding() {
        let sq = [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)];
        assert_eq!(winding_number(&sq, c(0.5, 0.5)), 1);
        assert_eq!(winding_number(&sq, c(1.5, 0.5)), 0);
    }

    #[test]
    fn constant_family_is_continuous() {
        let m = CubicMap::new(c(0.1, 0.0), c(0.2, 0.1));
        let r = parabolic_stability_probe(|_| m, &Angle::zero(), &[0.0, 0.1, 0.2], &RayOptions::default()).unwrap();
        assert_eq!(r.verdict, Continuity::Continuous);
        assert_eq!(r.max_jump, 0.0);
    }
}
