//! The curves `S_p`: charts for `p ≤ 2`, escape regions, parameter rays and
//! their landing maps, hyperbolic centers, duality and the Misiurewicz
//! coordinate.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::angle::Angle;
use crate::dynamics::{coefficients, depth_for, log_bottcher_series, periodic_points, series_level, step, CubicMap};
use crate::error::{Error, NumericError};
use crate::numeric::{aberth, solve_linear, total_degree_homotopy_with, wrap_im, Jet, Scalar, System2};
use crate::rays::KneadingInvariant;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `S_1` chart: `a = v = t`.
pub fn s1_map(t: C64) -> CubicMap {
    CubicMap::new(t, t)
}

/// `S_2` chart: with `s = 1/(3t)`, `a = -(s² + 1)/(3s)` and `v = a + s`.
pub fn s2_map(t: C64) -> Result<CubicMap, NumericError> {
    if t.norm() == 0.0 || !t.is_finite() {
        return Err(NumericError::ZeroParameter);
    }
    let s = (3.0 * t).inv();
    let a = -(s * s + 1.0) / (3.0 * s);
    Ok(CubicMap::new(a, a + s))
}

/// Chart coordinate of a map on `S_1` or `S_2`.
pub fn chart_coordinate(p: u32, map: &CubicMap) -> Result<C64, NumericError> {
    match p {
        1 => Ok(map.a),
        2 => Ok((3.0 * (map.v - map.a)).inv()),
        _ => Err(NumericError::ChartUnavailable(p)),
    }
}

pub fn chart_map(p: u32, t: C64) -> Result<CubicMap, NumericError> {
    match p {
        1 => Ok(s1_map(t)),
        2 => s2_map(t),
        _ => Err(NumericError::ChartUnavailable(p)),
    }
}

/// `F^{p-1}(v) - a`, which vanishes when `a` has period dividing `p`.
pub fn curve_equation<T: Scalar>(p: u32, a: T, v: T) -> T {
    let (c1, c0) = coefficients(a, v);
    let mut w = v;
    for _ in 1..p {
        w = step(c1, c0, w);
    }
    w - a
}

/// Residual of the period-`p` condition relative to the size of the map.
pub fn curve_residual(p: u32, map: &CubicMap) -> f64 {
    let r = curve_equation(p, map.a, map.v).norm();
    r / (1.0 + map.a.norm().powi(3i32.pow(p.saturating_sub(1)).min(27)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum RegionKind {
    S1,
    S2Inner,
    S2Outer,
    /// Identified by the value of `v` at the reference point `a_ref` on the
    /// positive real axis.
    Seeded { a_ref: C64, v_ref: C64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeRegion {
    pub p: u32,
    pub kind: RegionKind,
    pub kneading: KneadingInvariant,
    pub multiplicity: u32,
    /// Which of the `μ` sheets over the `a`-plane is used for angle zero.
    pub anchor: u32,
}

const SEED_G: f64 = 6.0;
const REGION_G: f64 = 3.0;

fn cube_root_four() -> f64 {
    4f64.cbrt()
}

/// `a` with `B(2a) ≈ exp(G + 2πiθ)` for large `|a|`.
fn asymptotic_a(g: f64, theta: f64) -> C64 {
    C64::from_polar(g.exp() / cube_root_four(), 2.0 * PI * theta)
}

impl EscapeRegion {
    pub fn s1() -> Self {
        Self { p: 1, kind: RegionKind::S1, kneading: KneadingInvariant(vec![0]), multiplicity: 1, anchor: 0 }
    }

    pub fn s2_inner() -> Self {
        Self { p: 2, kind: RegionKind::S2Inner, kneading: KneadingInvariant(vec![1, 0]), multiplicity: 1, anchor: 0 }
    }

    pub fn s2_outer() -> Self {
        Self { p: 2, kind: RegionKind::S2Outer, kneading: KneadingInvariant(vec![0, 0]), multiplicity: 1, anchor: 0 }
    }

    /// Parses `s1`, `inner`, `outer` (or the kneading words `10`, `00`).
    pub fn named(p: u32, name: &str) -> Option<Self> {
        match (p, name) {
            (1, "s1" | "0" | "outer") => Some(Self::s1()),
            (2, "inner" | "10") => Some(Self::s2_inner()),
            (2, "outer" | "basilica" | "00") => Some(Self::s2_outer()),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            RegionKind::S1 => "s1".into(),
            RegionKind::S2Inner => "inner".into(),
            RegionKind::S2Outer => "outer".into(),
            RegionKind::Seeded { .. } => format!("{}", self.kneading),
        }
    }

    /// A map of this region near the parameter ray of cocritical angle
    /// `theta` at large potential `g`.
    pub fn seed(&self, g: f64, theta: f64) -> Result<CubicMap, NumericError> {
        if self.multiplicity != 1 {
            return Err(NumericError::Multiplicity(self.multiplicity));
        }
        let a = asymptotic_a(g, theta);
        match &self.kind {
            RegionKind::S1 => Ok(s1_map(a)),
            RegionKind::S2Inner | RegionKind::S2Outer => {
                let disc = (9.0 * a * a - 4.0).sqrt();
                let (r1, r2) = ((-3.0 * a + disc) / 2.0, (-3.0 * a - disc) / 2.0);
                let (big, small) = if r1.norm() >= r2.norm() { (r1, r2) } else { (r2, r1) };
                let s = if self.kind == RegionKind::S2Inner { big } else { small };
                Ok(CubicMap::new(a, a + s))
            }
            RegionKind::Seeded { a_ref, v_ref } => {
                let v = continue_v_on_circle(self.p, *a_ref, *v_ref, a)?;
                Ok(CubicMap::new(a, v))
            }
        }
    }
}

fn newton_v(p: u32, a: C64, v: C64) -> Option<C64> {
    let mut v = v;
    for _ in 0..60 {
        let r = curve_equation(p, Jet::constant(a), Jet::<1>::var(v, 0));
        let dv = r.v / r.d[0];
        if !dv.is_finite() {
            return None;
        }
        v -= dv;
        if dv.norm() <= 1e-13 * v.norm().max(1.0) {
            return Some(v);
        }
    }
    None
}

/// `dv/da` along `F^{p-1}(v) = a`.
fn v_tangent(p: u32, a: C64, v: C64) -> C64 {
    let r = curve_equation(p, Jet::<2>::var(a, 0), Jet::<2>::var(v, 1));
    -r.d[0] / r.d[1]
}

/// Follows a solution of `F^{p-1}(v) = a` as `a` moves along `path(τ)`,
/// `τ ∈ [0, 1]`, with a tangent predictor and adaptive steps.
fn track_v<P: Fn(f64) -> C64>(p: u32, path: P, v0: C64) -> Result<C64, NumericError> {
    let mut tau = 0.0f64;
    let mut v = v0;
    let mut h = 1.0 / 256.0;
    while tau < 1.0 {
        let t1 = (tau + h).min(1.0);
        let (a0, a1) = (path(tau), path(t1));
        let guess = v + v_tangent(p, a0, v) * (a1 - a0);
        match newton_v(p, a1, guess) {
            Some(v1) if (v1 - guess).norm() <= 0.05 * (a1 - a0).norm() + 1e-12 * v.norm().max(1.0) => {
                v = v1;
                tau = t1;
                h = (h * 1.5).min(1.0 / 64.0);
            }
            _ => {
                h *= 0.5;
                if h < 1e-9 {
                    return Err(NumericError::ContinuationLost);
                }
            }
        }
    }
    Ok(v)
}

/// Continues a solution `v` of `F^{p-1}(v) = a` as `a` moves from `a0` to
/// `a1` along the circle `|a| = |a0|` and then radially.
fn continue_v_on_circle(p: u32, a0: C64, v0: C64, a1: C64) -> Result<C64, NumericError> {
    let turn = (a1.arg() - a0.arg()).rem_euclid(2.0 * PI);
    let (r0, arg0) = (a0.norm(), a0.arg());
    let v = track_v(p, |t| C64::from_polar(r0, arg0 + turn * t), v0)?;
    let ratio = a1.norm() / r0;
    track_v(p, |t| C64::from_polar(r0 * ratio.powf(t), a1.arg()), v)
}

/// `v` to avoid the cancellation in `F(a)` for large `a`.
fn marked_period(map: &CubicMap, p: u32, tol: f64) -> u32 {
    let scale = map.a.norm().max(1.0);
    (1..=p)
        .filter(|d| p % d == 0)
        .find(|&d| (map.iterate(map.v, d as usize - 1) - map.a).norm() <= tol * scale)
        .unwrap_or(0)
}

/// Kneading bits for a map far out in an escape region: the marked orbit
/// clusters near `a` (bit 0) or near `-2a` (bit 1).
pub fn asymptotic_kneading(map: &CubicMap, p: u32) -> KneadingInvariant {
    let orbit = map.orbit(map.v, p as usize - 1);
    KneadingInvariant(
        orbit
            .iter()
            .map(|z| u8::from((z - map.a).norm() > (z + 2.0 * map.a).norm()))
            .collect(),
    )
}

/// All escape regions of `S_p` found from the `d_p` solutions over a large
/// reference value of `a`. Multiplicity is detected from the monodromy of a
/// loop around infinity.
pub fn enumerate_regions(p: u32) -> Result<Vec<EscapeRegion>, NumericError> {
    match p {
        0 => return Err(NumericError::RootFindingFailure("p must be positive".into())),
        1 => return Ok(vec![EscapeRegion::s1()]),
        2 => return Ok(vec![EscapeRegion::s2_inner(), EscapeRegion::s2_outer()]),
        _ if p > 6 => return Err(NumericError::DegreeTooLarge(3usize.pow(p - 1))),
        _ => {}
    }
    let a_ref = asymptotic_a(REGION_G, 0.0);
    let degree = 3usize.pow(p - 1);
    let ratio = |v: C64| {
        let r = curve_equation(p, Jet::constant(a_ref), Jet::<1>::var(v, 0));
        r.v / r.d[0]
    };
    let roots = aberth(degree, 3.0 * a_ref.norm(), ratio, 3000)?;
    let mut sols: Vec<C64> = Vec::new();
    for v in roots {
        let Some(v) = newton_v(p, a_ref, v) else { continue };
        let map = CubicMap::new(a_ref, v);
        if marked_period(&map, p, 1e-9) == p && !sols.iter().any(|s| (s - v).norm() < 1e-8 * v.norm().max(1.0)) {
            sols.push(v);
        }
    }
    sols.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let mut regions: Vec<EscapeRegion> = Vec::new();
    let mut used = vec![false; sols.len()];
    for i in 0..sols.len() {
        if used[i] {
            continue;
        }
        // Follow the loop around infinity until it closes.
        let mut sheet = vec![i];
        let mut v = sols[i];
        loop {
            v = continue_full_loop(p, a_ref, v)?;
            let j = sols
                .iter()
                .position(|s| (s - v).norm() < 1e-6 * v.norm().max(1.0))
                .ok_or(NumericError::ContinuationLost)?;
            if j == i {
                break;
            }
            if sheet.contains(&j) {
                return Err(NumericError::ContinuationLost);
            }
            sheet.push(j);
        }
        for &j in &sheet {
            used[j] = true;
        }
        let map = CubicMap::new(a_ref, sols[i]);
        regions.push(EscapeRegion {
            p,
            kind: RegionKind::Seeded { a_ref, v_ref: sols[i] },
            kneading: asymptotic_kneading(&map, p),
            multiplicity: sheet.len() as u32,
            anchor: 0,
        });
    }
    Ok(regions)
}

fn continue_full_loop(p: u32, a0: C64, v0: C64) -> Result<C64, NumericError> {
    let (r0, arg0) = (a0.norm(), a0.arg());
    track_v(p, |t| C64::from_polar(r0, arg0 + 2.0 * PI * t), v0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParamSample {
    #[serde(rename = "G")]
    pub g: f64,
    pub map: CubicMap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Landing {
    Parabolic {
        ray_period: u32,
        /// Refined parabolic map.
        map: CubicMap,
        /// A point of the parabolic cycle.
        point: C64,
        /// `|(F^q)'(z) - 1|` at the centroid `z` of the near-parabolic
        /// cluster of the ray endpoint.
        multiplier_gap: f64,
    },
    Misiurewicz {
        preperiod: u32,
        period: u32,
        map: CubicMap,
        point: C64,
    },
    Unknown,
}

impl Landing {
    pub fn map(&self) -> Option<CubicMap> {
        match self {
            Landing::Parabolic { map, .. } | Landing::Misiurewicz { map, .. } => Some(*map),
            Landing::Unknown => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterRay {
    pub region: EscapeRegion,
    pub phi: Angle,
    pub samples: Vec<ParamSample>,
    pub landing: Landing,
}

impl ParameterRay {
    pub fn endpoint(&self) -> CubicMap {
        self.samples.last().expect("rays have samples").map
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRayOptions {
    pub g_start: f64,
    pub g_min: f64,
    pub step_factor: f64,
}

impl Default for ParamRayOptions {
    fn default() -> Self {
        Self { g_start: SEED_G, g_min: 1e-5, step_factor: 3f64.powf(-1.0 / 8.0) }
    }
}

/// Newton's method for the map of region curve `p` whose co-critical point
/// has Böttcher coordinate `exp(g + 2πiθ)`, where `angle_k = 3^k θ mod 1`.
fn param_ray_point(p: u32, seed: CubicMap, g: f64, angles: &[f64]) -> Option<CubicMap> {
    param_ray_point_with(p, seed, g, |k| angles.get(k as usize).copied())
}

fn param_ray_point_with<A: Fn(u32) -> Option<f64>>(p: u32, seed: CubicMap, g: f64, angle_at: A) -> Option<CubicMap> {
    let mut x = [seed.a, seed.v];
    let level = series_level(seed.c1(), seed.c0());
    let k = depth_for(g, level);
    let angle_k = angle_at(k)?;
    let eval = |x: [C64; 2]| -> Option<[Jet<2>; 2]> {
        let a = Jet::<2>::var(x[0], 0);
        let v = Jet::<2>::var(x[1], 1);
        let e1 = curve_equation(p, a, v);
        let (c1, c0) = coefficients(a, v);
        let mut w = a + a;
        for _ in 0..k {
            w = step(c1, c0, w);
        }
        let lb = log_bottcher_series(c1, c0, w).ok()?;
        let target = c(g * 3f64.powi(k as i32), 2.0 * PI * angle_k);
        let raw = lb - Jet::constant(target);
        let e2 = raw + Jet::constant(wrap_im(raw.v) - raw.v);
        Some([e1, e2])
    };
    let mut last = f64::INFINITY;
    for _ in 0..50 {
        let f = eval(x)?;
        let scale = 1.0 + x[0].norm() + x[1].norm();
        let e1n = f[0].v.norm() / (1.0 + x[0].norm().powi(3i32.pow(p.saturating_sub(1)).min(27)));
        let res = e1n.max(f[1].v.norm());
        if res > 4.0 * last && res > 1e-6 {
            return None;
        }
        last = res;
        let m = [[f[0].d[0], f[0].d[1]], [f[1].d[0], f[1].d[1]]];
        let mut dx = solve_linear(m, [f[0].v, f[1].v])?;
        let step_n = dx[0].norm().max(dx[1].norm());
        if step_n > 0.2 * scale {
            let k = 0.2 * scale / step_n;
            dx = [dx[0] * k, dx[1] * k];
        }
        x = [x[0] - dx[0], x[1] - dx[1]];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return None;
        }
        if step_n <= 1e-11 * scale || (res < 1e-14 && step_n <= 1e-9 * scale) {
            let map = CubicMap::new(x[0], x[1]);
            let f = eval(x)?;
            let sk = 3f64.powi(k as i32);
            let ok = curve_residual(p, &map) < 1e-10 && f[1].v.norm() < 1e-10 * sk * (1.0 + g * sk);
            return ok.then_some(map);
        }
    }
    None
}

pub fn trace_parameter_ray(region: &EscapeRegion, phi: &Angle, opts: &ParamRayOptions) -> Result<ParameterRay, Error> {
    let samples = trace_parameter_samples(region, phi, opts, None)?;
    let mut ray = ParameterRay { region: region.clone(), phi: phi.clone(), samples, landing: Landing::Unknown };
    // Parabolic landing is slow in G; deepen the ray before giving up.
    let mut deepen = 4;
    loop {
        match classify_landing(&ray) {
            Ok(landing) => {
                ray.landing = landing;
                return Ok(ray);
            }
            Err(NumericError::VerificationFailed(_)) if deepen > 0 && matches!(phi.co_period(), Ok(Some(_))) => {
                deepen -= 1;
                let last = *ray.samples.last().expect("rays have samples");
                let more = ParamRayOptions { g_start: last.g, g_min: last.g * 1e-10, ..*opts };
                let tail = trace_parameter_samples(region, phi, &more, Some(last.map))?;
                ray.samples.extend(tail.into_iter().skip(1));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Samples of the `phi` ray from `opts.g_start` down to `opts.g_min`,
/// optionally starting from an explicit seed map.
pub fn trace_parameter_samples(
    region: &EscapeRegion,
    phi: &Angle,
    opts: &ParamRayOptions,
    seed: Option<CubicMap>,
) -> Result<Vec<ParamSample>, NumericError> {
    if region.multiplicity != 1 {
        return Err(NumericError::Multiplicity(region.multiplicity));
    }
    let p = region.p;
    let theta = phi.to_f64();
    let mut angles = Vec::new();
    let mut x = phi.clone();
    for _ in 0..160 {
        angles.push(x.to_f64());
        x = x.triple();
    }
    let mut g = opts.g_start;
    let seed = match seed {
        Some(s) => s,
        None => {
            if matches!(region.kind, RegionKind::Seeded { .. }) {
                g = g.min(REGION_G);
            }
            let s = region.seed(g, theta)?;
            settle_seed(p, s, g, theta).ok_or(NumericError::NewtonDivergence { potential: g })?
        }
    };
    let mut map = param_ray_point(p, seed, g, &angles).ok_or(NumericError::NewtonDivergence { potential: g })?;
    let mut samples = vec![ParamSample { g, map }];
    let mut factor = opts.step_factor;
    let mut last_move = f64::INFINITY;
    while g > opts.g_min {
        let g_next = (g * factor).max(opts.g_min);
        let moved = param_ray_point(p, map, g_next, &angles).filter(|m| {
            let d = (m.a - map.a).norm() + (m.v - map.v).norm();
            d <= 4.0 * last_move + 1e-9 * (1.0 + map.a.norm())
        });
        match moved {
            Some(m) => {
                last_move = (m.a - map.a).norm() + (m.v - map.v).norm();
                map = m;
                g = g_next;
                samples.push(ParamSample { g, map });
                factor = (factor * factor).max(opts.step_factor);
            }
            None => {
                factor = factor.sqrt();
                if factor > 1.0 - 1e-9 {
                    return Err(NumericError::NewtonDivergence { potential: g });
                }
            }
        }
    }
    Ok(samples)
}

/// Moves a map of the curve onto the ray point `(g, theta)` by a homotopy
/// in the Böttcher target, which keeps Newton on the seed's sheet.
fn settle_seed(p: u32, seed: CubicMap, g: f64, theta: f64) -> Option<CubicMap> {
    let lb = crate::dynamics::log_bottcher(&seed, 2.0 * seed.a).ok()?;
    let (g0, t0) = (lb.re, lb.im / (2.0 * PI));
    let dt = (theta - t0 + 0.5).rem_euclid(1.0) - 0.5;
    let steps = 32;
    let mut m = seed;
    for i in 1..=steps {
        let s = i as f64 / steps as f64;
        let (gs, ts) = (g0 + s * (g - g0), t0 + s * dt);
        m = param_ray_point_with(p, m, gs, |k| Some((ts * 3f64.powi(k as i32)).rem_euclid(1.0)))?;
    }
    Some(m)
}

/// Newton's method for a parabolic map on `S_p`: a point `z` of period `r`
/// whose multiplier equals the root of unity `omega`.
pub fn refine_parabolic(p: u32, seed: CubicMap, z: C64, r: u32, omega: C64) -> Option<(CubicMap, C64)> {
    let mut x = [seed.a, seed.v, z];
    for _ in 0..60 {
        let a = Jet::<3>::var(x[0], 0);
        let v = Jet::<3>::var(x[1], 1);
        let mut w = Jet::<3>::var(x[2], 2);
        let (c1, c0) = coefficients(a, v);
        let three = Jet::constant(c(3.0, 0.0));
        let mut mult = Jet::constant(c(1.0, 0.0));
        for _ in 0..r {
            mult = mult * three * (w * w - a * a);
            w = step(c1, c0, w);
        }
        let e = [curve_equation(p, a, v), w - Jet::var(x[2], 2), mult - Jet::constant(omega)];
        let m = [
            [e[0].d[0], e[0].d[1], e[0].d[2]],
            [e[1].d[0], e[1].d[1], e[1].d[2]],
            [e[2].d[0], e[2].d[1], e[2].d[2]],
        ];
        let dx = solve_linear(m, [e[0].v, e[1].v, e[2].v])?;
        for i in 0..3 {
            x[i] -= dx[i];
        }
        let size = 1.0 + x.iter().map(|y| y.norm()).fold(0.0, f64::max);
        if dx.iter().map(|d| d.norm()).fold(0.0, f64::max) <= 1e-14 * size {
            let map = CubicMap::new(x[0], x[1]);
            let (fz, m) = map.iterate_with_derivative(x[2], r as usize);
            let ok = curve_residual(p, &map) < 1e-10 && (fz - x[2]).norm() < 1e-10 && (m - omega).norm() < 1e-8;
            return ok.then_some((map, x[2]));
        }
    }
    None
}

/// Newton's method for a map on `S_p` whose co-critical point satisfies
/// `F^{l+n}(2a) = F^l(2a)`.
pub fn refine_misiurewicz(p: u32, seed: CubicMap, l: u32, n: u32) -> Option<CubicMap> {
    struct Sys {
        p: u32,
        l: u32,
        n: u32,
    }
    impl System2 for Sys {
        fn degrees(&self) -> [u32; 2] {
            [3u32.pow(self.p.saturating_sub(1)), 3u32.pow(self.l + self.n)]
        }
        fn eval(&self, x: [C64; 2]) -> [Jet<2>; 2] {
            let (a, v) = (Jet::var(x[0], 0), Jet::var(x[1], 1));
            let (c1, c0) = coefficients(a, v);
            let mut w = a + a;
            for _ in 0..self.l {
                w = step(c1, c0, w);
            }
            let head = w;
            for _ in 0..self.n {
                w = step(c1, c0, w);
            }
            [curve_equation(self.p, a, v), w - head]
        }
    }
    let sys = Sys { p, l, n };
    let (x, res) = crate::numeric::newton2(&sys, [seed.a, seed.v], 80, 1e-15)?;
    (res < 1e-9).then_some(CubicMap::new(x[0], x[1]))
}

fn nearest_root_of_unity(m: C64, order: u32) -> C64 {
    let k = (m.arg() / (2.0 * PI) * order as f64).round();
    C64::from_polar(1.0, 2.0 * PI * k / order as f64)
}

/// Decides the landing type of a traced ray from its angle, and refines the
/// landing map algebraically.
pub fn classify_landing(ray: &ParameterRay) -> Result<Landing, NumericError> {
    let p = ray.region.p;
    let end = ray.endpoint();
    let scale = 1.0 + end.a.norm() + end.v.norm();
    if let Some(q) = ray.phi.co_period().map_err(|e| NumericError::VerificationFailed(e.to_string()))? {
        // The near-parabolic cycle is the fixed point of F^q whose multiplier
        // is closest to 1. At finite potential it is split into q/r + 1
        // nearby fixed points; the derivative of F^q at their centroid
        // estimates the limiting parabolic multiplier.
        let pts = periodic_points_of_iterate(&end, q)?;
        let full = |&(_, r, m): &(C64, u32, C64)| m.powu(q / r);
        let &(z, r, m) = pts
            .iter()
            .min_by(|x, y| (full(x) - 1.0).norm().total_cmp(&(full(y) - 1.0).norm()))
            .ok_or_else(|| NumericError::VerificationFailed("no periodic points".into()))?;
        // The marked critical cycle is superattracting and never part of the
        // cluster.
        let mut near: Vec<&(C64, u32, C64)> = pts.iter().filter(|x| full(x).norm() > 1e-6).collect();
        near.sort_by(|x, y| (x.0 - z).norm().total_cmp(&(y.0 - z).norm()));
        let k = (q / r + 1) as usize;
        let centroid = near.iter().take(k).map(|x| x.0).sum::<C64>() / k as f64;
        let (_, gate) = end.iterate_with_derivative(centroid, q as usize);
        let gap = (gate - 1.0).norm();
        let omega = nearest_root_of_unity(m, q / r);
        let (map, point) = refine_parabolic(p, end, z, r, omega)
            .ok_or_else(|| NumericError::VerificationFailed("parabolic refinement did not converge".into()))?;
        let dist = (map.a - end.a).norm() + (map.v - end.v).norm();
        if gap > 0.1 || dist > 0.1 * scale {
            return Err(NumericError::VerificationFailed(format!(
                "parabolic landing check failed: multiplier gap {gap:.3e}, distance {dist:.3e}"
            )));
        }
        return Ok(Landing::Parabolic { ray_period: q, map, point, multiplier_gap: gap });
    }
    let (l, n) = ray.phi.preperiod_and_period().map_err(|e| NumericError::VerificationFailed(e.to_string()))?;
    let map = refine_misiurewicz(p, end, l, n)
        .ok_or_else(|| NumericError::VerificationFailed("Misiurewicz refinement did not converge".into()))?;
    let dist = (map.a - end.a).norm() + (map.v - end.v).norm();
    let point = map.iterate(2.0 * map.a, l as usize);
    let (_, lambda) = map.iterate_with_derivative(point, n as usize);
    if dist > 0.05 * scale || lambda.norm() <= 1.0 {
        return Err(NumericError::VerificationFailed(format!(
            "Misiurewicz landing check failed: distance {dist:.3e}, |multiplier| {:.3e}",
            lambda.norm()
        )));
    }
    Ok(Landing::Misiurewicz { preperiod: l.max(1), period: n, map, point })
}

/// Fixed points of `F^q` as `(z, exact period, multiplier of F^period)`.
fn periodic_points_of_iterate(map: &CubicMap, q: u32) -> Result<Vec<(C64, u32, C64)>, NumericError> {
    let mut out = Vec::new();
    for r in (1..=q).filter(|r| q % r == 0) {
        for pp in periodic_points(map, r)? {
            out.push((pp.z, r, pp.multiplier));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CenterKind {
    A,
    B(u32, u32),
    D(u32),
}

impl std::str::FromStr for CenterKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("bad center kind {s:?}; expected A, B:m,n or D:q");
        match s.split_once(':') {
            None if s == "A" => Ok(CenterKind::A),
            Some(("B", rest)) => {
                let (m, n) = rest.split_once(',').ok_or_else(bad)?;
                Ok(CenterKind::B(m.trim().parse().map_err(|_| bad())?, n.trim().parse().map_err(|_| bad())?))
            }
            Some(("D", q)) => Ok(CenterKind::D(q.trim().parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

struct CenterSystem {
    kind: CenterKind,
    p: u32,
}

impl System2 for CenterSystem {
    fn degrees(&self) -> [u32; 2] {
        match self.kind {
            CenterKind::B(m, n) => [3u32.pow(m - 1), 3u32.pow(n)],
            CenterKind::D(q) => [3u32.pow(self.p - 1), 3u32.pow(q)],
            CenterKind::A => [1, 1],
        }
    }

    fn eval(&self, x: [C64; 2]) -> [Jet<2>; 2] {
        let (a, v) = (Jet::var(x[0], 0), Jet::var(x[1], 1));
        let (c1, c0) = coefficients(a, v);
        match self.kind {
            CenterKind::B(m, n) => {
                let mut w = v;
                for _ in 1..m {
                    w = step(c1, c0, w);
                }
                let mut u = -a;
                for _ in 0..n {
                    u = step(c1, c0, u);
                }
                [w + a, u - a]
            }
            CenterKind::D(q) => {
                let mut u = -a;
                for _ in 0..q {
                    u = step(c1, c0, u);
                }
                [curve_equation(self.p, a, v), u + a]
            }
            CenterKind::A => [a, v],
        }
    }
}

fn first_hit(map: &CubicMap, from: C64, to: C64, max: u32, tol: f64) -> Option<u32> {
    let mut w = from;
    let scale = to.norm().max(1.0);
    for j in 1..=max {
        w = map.eval(w);
        if (w - to).norm() <= tol * scale {
            return Some(j);
        }
    }
    None
}

fn is_valid_center(map: &CubicMap, kind: CenterKind, p: u32) -> bool {
    let tol = 1e-8;
    match kind {
        CenterKind::A => first_hit(map, C64::new(0.0, 0.0), C64::new(0.0, 0.0), p, tol) == Some(p),
        CenterKind::B(m, n) => {
            map.a.norm() > 1e-6
                && first_hit(map, map.a, -map.a, m + n, tol) == Some(m)
                && first_hit(map, -map.a, map.a, m + n, tol) == Some(n)
        }
        CenterKind::D(q) => {
            if map.a.norm() <= 1e-6
                || first_hit(map, map.a, map.a, p, tol) != Some(p)
                || first_hit(map, -map.a, -map.a, q, tol) != Some(q)
            {
                return false;
            }
            let orbit = map.orbit(map.a, p as usize);
            let free = map.orbit(-map.a, q as usize);
            orbit.iter().all(|x| free.iter().all(|y| (x - y).norm() > 1e-6))
        }
    }
}

/// Centers of hyperbolic components of the given type in `S_p` (for `B(m,n)`
/// the curve is `S_{m+n}`), sorted by `(re a, im a)`.
pub fn find_centers(p: u32, kind: CenterKind) -> Result<Vec<CubicMap>, NumericError> {
    let mut maps: Vec<CubicMap> = match kind {
        CenterKind::A => {
            if p > 7 {
                return Err(NumericError::DegreeTooLarge(3usize.pow(p - 1)));
            }
            let ratio = |v: C64| {
                let mut w = Jet::<1>::constant(c(0.0, 0.0));
                let vj = Jet::<1>::var(v, 0);
                for _ in 0..p {
                    w = w * w * w + vj;
                }
                w.v / w.d[0]
            };
            let roots = aberth(3usize.pow(p - 1), 2.5, ratio, 3000)?;
            roots.into_iter().map(|v| CubicMap::new(c(0.0, 0.0), v)).collect()
        }
        CenterKind::B(m, n) => {
            if m == 0 || n == 0 {
                return Err(NumericError::RootFindingFailure("B(m, n) needs m, n > 0".into()));
            }
            if m + n > 5 {
                return Err(NumericError::DegreeTooLarge(3usize.pow(m + n - 1)));
            }
            solve_centers(&CenterSystem { kind, p: m + n })
        }
        CenterKind::D(q) => {
            if q == 0 || p + q > 6 {
                return Err(NumericError::DegreeTooLarge(3usize.pow(p + q - 1)));
            }
            solve_centers(&CenterSystem { kind, p })
        }
    };
    let p_eff = if let CenterKind::B(m, n) = kind { m + n } else { p };
    maps.retain(|m| m.a.is_finite() && m.v.is_finite() && is_valid_center(m, kind, p_eff));
    let mut out: Vec<CubicMap> = Vec::new();
    for m in maps {
        if !out.iter().any(|o| (o.a - m.a).norm() + (o.v - m.v).norm() < 1e-8) {
            out.push(m);
        }
    }
    out.sort_by(|x, y| {
        x.a.re
            .total_cmp(&y.a.re)
            .then(x.a.im.total_cmp(&y.a.im))
            .then(x.v.re.total_cmp(&y.v.re))
            .then(x.v.im.total_cmp(&y.v.im))
    });
    Ok(out)
}

fn solve_centers(sys: &CenterSystem) -> Vec<CubicMap> {
    let mut all: Vec<CubicMap> = Vec::new();
    // Union over a few random-phase homotopies guards against path jumping.
    for gamma in [2.1737, 0.8419, 4.3321] {
        for x in total_degree_homotopy_with(sys, C64::from_polar(1.0, gamma)) {
            // Center sets are closed under z -> -z conjugacy and complex conjugation.
            for (a, v) in [(x[0], x[1]), (-x[0], -x[1]), (x[0].conj(), x[1].conj()), (-x[0].conj(), -x[1].conj())] {
                all.push(CubicMap::new(a, v));
            }
        }
    }
    all
}

/// `(a', v') = (-a, F(-a))`: the center obtained by marking the other
/// critical point. Requires `a` of period `p` and `-a` of period `q`.
pub fn dual_point(map: &CubicMap, p: u32, q: u32) -> Result<CubicMap, NumericError> {
    let tol = 1e-8;
    let a_ok = (map.iterate(map.a, p as usize) - map.a).norm() <= tol * map.a.norm().max(1.0);
    let b_ok = (map.iterate(-map.a, q as usize) + map.a).norm() <= tol * map.a.norm().max(1.0);
    if !(a_ok && b_ok) {
        return Err(NumericError::NotACenter);
    }
    Ok(map.swap_critical())
}

/// Smallest `(l, n)` with `F^{l+n}(2a) = F^l(2a)`.
pub fn cocritical_preperiod(map: &CubicMap, max: u32, tol: f64) -> Option<(u32, u32)> {
    let orbit = map.orbit(2.0 * map.a, 2 * max as usize);
    for l in 0..=max {
        for n in 1..=max {
            let (x, y) = (orbit[l as usize], orbit[(l + n) as usize]);
            if (x - y).norm() <= tol * x.norm().max(1.0) {
                return Some((l, n));
            }
        }
    }
    None
}

/// `s(F) = 2a_F - z(F)`, where `z(F)` continues the preperiodic point
/// `z(F0) = 2a_{F0}` of the Misiurewicz map `F0`.
pub fn misiurewicz_coordinate(f0: &CubicMap, f: &CubicMap) -> Result<C64, NumericError> {
    let (l, n) = cocritical_preperiod(f0, 8, 1e-5).ok_or(NumericError::ContinuationLost)?;
    let z0 = 2.0 * f0.a;
    let z = crate::rays::refine_preperiodic(f, z0, l, n).ok_or(NumericError::ContinuationLost)?;
    if (z - z0).norm() > 0.25 * (1.0 + z0.norm()) {
        return Err(NumericError::ContinuationLost);
    }
    Ok(2.0 * f.a - z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn charts() {
        let f = s1_map(c(0.0, 0.0));
        assert_eq!((f.a, f.v), (c(0.0, 0.0), c(0.0, 0.0)));
        assert!(matches!(s2_map(c(0.0, 0.0)), Err(NumericError::ZeroParameter)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let m = s2_map(t).unwrap();
            assert!((m.iterate(m.a, 2) - m.a).norm() < 1e-12 * (1.0 + m.a.norm().powi(9)));
            assert!((m.v - m.a).norm() > 0.0);
            assert!((chart_coordinate(2, &m).unwrap() - t).norm() < 1e-12 * (1.0 + t.norm()));
        }
    }

    #[test]
    fn a_centers() {
        assert_eq!(find_centers(1, CenterKind::A).unwrap().len(), 1);
        assert_eq!(find_centers(2, CenterKind::A).unwrap().len(), 2);
        assert_eq!(find_centers(3, CenterKind::A).unwrap().len(), 8);
    }

    #[test]
    fn b11_centers() {
        let cs = find_centers(2, CenterKind::B(1, 1)).unwrap();
        assert_eq!(cs.len(), 2);
        let r = 0.5f64.sqrt();
        assert!((cs[0].a - c(-r, 0.0)).norm() < 1e-10 && (cs[0].v - c(r, 0.0)).norm() < 1e-10);
        assert!((cs[1].a - c(r, 0.0)).norm() < 1e-10 && (cs[1].v - c(-r, 0.0)).norm() < 1e-10);
        let d = dual_point(&cs[1], 2, 2).unwrap();
        assert!((d.a - cs[0].a).norm() < 1e-10 && (d.v - cs[0].v).norm() < 1e-10);
    }

    #[test]
    fn d2_in_s1() {
        assert_eq!(find_centers(1, CenterKind::D(2)).unwrap().len(), 6);
    }

    #[test]
    fn duality_involution() {
        let f = CubicMap::new(c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(dual_point(&f, 1, 1).unwrap(), f);
        assert!(matches!(dual_point(&s1_map(c(0.3, 0.0)), 1, 1), Err(NumericError::NotACenter)));
    }

    #[test]
    fn center_kind_parsing() {
        assert_eq!("A".parse::<CenterKind>().unwrap(), CenterKind::A);
        assert_eq!("B:1,2".parse::<CenterKind>().unwrap(), CenterKind::B(1, 2));
        assert_eq!("D:3".parse::<CenterKind>().unwrap(), CenterKind::D(3));
        assert!("C".parse::<CenterKind>().is_err());
    }

    #[test]
    fn s1_zero_ray() {
        let ray = trace_parameter_ray(&EscapeRegion::s1(), &Angle::zero(), &ParamRayOptions::default());
        let ray = ray.unwrap();
        for s in &ray.samples {
            assert!(curve_residual(1, &s.map) < 1e-10);
        }
        // φ = 0 has no co-period: 0 ± 1/3 are not periodic.
        assert!(matches!(ray.landing, Landing::Misiurewicz { .. }));
    }

    fn frac(n: u64, d: u64) -> Angle {
        Angle::frac(n, d)
    }

    #[test]
    fn inner_five_sixths_is_parabolic() {
        let ray = trace_parameter_ray(&EscapeRegion::s2_inner(), &frac(5, 6), &ParamRayOptions::default()).unwrap();
        match ray.landing {
            Landing::Parabolic { ray_period, multiplier_gap, .. } => {
                assert_eq!(ray_period, 1);
                assert!(multiplier_gap < 0.1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn outer_one_ninth_is_misiurewicz() {
        let ray = trace_parameter_ray(&EscapeRegion::s2_outer(), &frac(1, 9), &ParamRayOptions::default()).unwrap();
        let Landing::Misiurewicz { preperiod, period, map, .. } = ray.landing else { panic!() };
        assert_eq!((preperiod, period), (2, 1));
        let end = ray.endpoint();
        let z = end.iterate(2.0 * end.a, 2);
        let fixed = periodic_points(&end, 1).unwrap();
        let nearest = fixed.iter().map(|p| (p.z - z).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-4, "{nearest}");
        assert!((map.iterate(2.0 * map.a, 3) - map.iterate(2.0 * map.a, 2)).norm() < 1e-10);
    }

    #[test]
    fn outer_zero_ray_lands_where_2a_is_fixed() {
        let ray = trace_parameter_ray(&EscapeRegion::s2_outer(), &Angle::zero(), &ParamRayOptions::default()).unwrap();
        let Landing::Misiurewicz { preperiod, period, .. } = ray.landing else { panic!() };
        assert_eq!((preperiod, period), (1, 1));
        let end = ray.endpoint();
        let t = chart_coordinate(2, &end).unwrap();
        let s = (3.0 * t).inv();
        // Elimination of 4a³ + v = 2a against the period-2 condition.
        let s2 = s * s;
        let oracle = -4.0 * (s2 + 1.0).powi(3) + 9.0 * s2 * (s2 + 1.0) + 27.0 * s2 * s2;
        assert!(oracle.norm() / (1.0 + s.norm().powi(6)) < 1e-5, "{oracle}");
        assert!((end.eval(2.0 * end.a) - 2.0 * end.a).norm() < 1e-5);
    }

    #[test]
    fn samples_stay_on_curve_with_constant_angle() {
        let phi = frac(11, 24);
        let ray = trace_parameter_ray(&EscapeRegion::s2_inner(), &phi, &ParamRayOptions::default()).unwrap();
        for s in ray.samples.iter().filter(|s| s.g > 1e-3) {
            assert!(curve_residual(2, &s.map) < 1e-10);
            let th = crate::dynamics::cocritical_angle(&s.map).unwrap();
            let d = (th - phi.to_f64()).rem_euclid(1.0);
            assert!(d.min(1.0 - d) < 1e-8, "G={} angle {th}", s.g);
        }
    }

    #[test]
    fn misiurewicz_coordinate_base_and_holomorphy() {
        let f0 = CubicMap::new(c(-0.185084, -0.358121), c(-0.629660, -0.752726));
        assert_eq!(cocritical_preperiod(&f0, 4, 1e-4), Some((0, 1)));
        let f0 = refine_misiurewicz(4, f0, 0, 1).unwrap();
        assert!(misiurewicz_coordinate(&f0, &f0).unwrap().norm() < 1e-12);
        // Holomorphy along S_2 near the φ = 0 landing map.
        let ray = trace_parameter_ray(&EscapeRegion::s2_outer(), &Angle::zero(), &ParamRayOptions::default()).unwrap();
        let base = ray.landing.map().unwrap();
        let t0 = chart_coordinate(2, &base).unwrap();
        let h = 1e-4;
        let s_at = |dt: C64| misiurewicz_coordinate(&base, &s2_map(t0 + dt).unwrap()).unwrap();
        let dx = (s_at(c(h, 0.0)) - s_at(c(-h, 0.0))) / (2.0 * h);
        let dy = (s_at(c(0.0, h)) - s_at(c(0.0, -h))) / (2.0 * h);
        assert!((dy - c(0.0, 1.0) * dx).norm() < 1e-6 * (1.0 + dx.norm()));
    }

    #[test]
    fn low_co_period_landings_match_the_angle_dichotomy() {
        let mut angles = Vec::new();
        for d in [8, 24] {
            for n in 0..d {
                let a = frac(n, d);
                if a.co_period().unwrap().is_some() && !angles.contains(&a) {
                    angles.push(a);
                }
            }
        }
        for region in [EscapeRegion::s2_inner(), EscapeRegion::s2_outer()] {
            for phi in &angles {
                let ray = trace_parameter_ray(&region, phi, &ParamRayOptions::default()).unwrap();
                let q = phi.co_period().unwrap().unwrap();
                assert!(matches!(ray.landing, Landing::Parabolic { ray_period, .. } if ray_period == q), "{} {phi}", region.label());
            }
        }
    }
}
