//! A single cubic map `F(z) = z³ - 3a²z + (2a³ + v)`: orbits, Green's
//! function, Böttcher coordinate, periodic points and the fate of the free
//! critical point.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::NumericError;
use crate::numeric::{aberth, cluster, wrap_im, Jet, Scalar};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicMap {
    pub a: C64,
    pub v: C64,
}

/// One step of the centered cubic `z³ + c1 z + c0`.
#[inline]
pub fn step<T: Scalar>(c1: T, c0: T, z: T) -> T {
    z * (z * z + c1) + c0
}

/// Centered coefficients `(c1, c0) = (-3a², 2a³ + v)` as generic scalars.
#[inline]
pub fn coefficients<T: Scalar>(a: T, v: T) -> (T, T) {
    let a2 = a * a;
    (-(a2 + a2 + a2), a2 * a + a2 * a + v)
}

impl CubicMap {
    pub fn new(a: C64, v: C64) -> Self {
        Self { a, v }
    }

    /// The map `z³ + c1 z + c0`, with `a` the principal square root of
    /// `-c1/3`.
    pub fn from_centered(c1: C64, c0: C64) -> Self {
        let a = (-c1 / 3.0).sqrt();
        Self { a, v: c0 - 2.0 * a * a * a }
    }

    /// Centers `z³ + b z² + c z + d` by `w = z + b/3`. Returns the centered
    /// map and the shift `b/3`.
    pub fn from_monic(b: C64, c: C64, d: C64) -> (Self, C64) {
        let h = b / 3.0;
        let c1 = c - b * b / 3.0;
        let c0 = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d + h;
        (Self::from_centered(c1, c0), h)
    }

    pub fn c1(&self) -> C64 {
        -3.0 * self.a * self.a
    }

    pub fn c0(&self) -> C64 {
        2.0 * self.a * self.a * self.a + self.v
    }

    pub fn eval(&self, z: C64) -> C64 {
        step(self.c1(), self.c0(), z)
    }

    pub fn deriv(&self, z: C64) -> C64 {
        3.0 * (z * z - self.a * self.a)
    }

    pub fn iterate(&self, z: C64, n: usize) -> C64 {
        let (c1, c0) = (self.c1(), self.c0());
        (0..n).fold(z, |w, _| step(c1, c0, w))
    }

    /// `F^n(z)` and `(F^n)'(z)`.
    pub fn iterate_with_derivative(&self, z: C64, n: usize) -> (C64, C64) {
        let j = self.iterate_jet(Jet::<1>::var(z, 0), n);
        (j.v, j.d[0])
    }

    pub fn iterate_jet<const N: usize>(&self, z: Jet<N>, n: usize) -> Jet<N> {
        let c1 = Jet::constant(self.c1());
        let c0 = Jet::constant(self.c0());
        (0..n).fold(z, |w, _| step(c1, c0, w))
    }

    pub fn orbit(&self, z: C64, n: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(n + 1);
        let mut w = z;
        out.push(w);
        for _ in 0..n {
            w = self.eval(w);
            out.push(w);
        }
        out
    }

    /// Radius outside of which every orbit escapes.
    pub fn escape_radius(&self) -> f64 {
        4.0 + 2.0 * self.a.norm() + 2.0 * self.c0().norm().cbrt()
    }

    /// Potential above which the Böttcher series converges on its own.
    pub fn series_level(&self) -> f64 {
        series_level(self.c1(), self.c0())
    }

    pub fn critical_points(&self) -> [C64; 2] {
        [self.a, -self.a]
    }

    /// `(-a, F(-a))`, the dual map obtained by marking the other critical
    /// point.
    pub fn swap_critical(&self) -> Self {
        Self { a: -self.a, v: self.eval(-self.a) }
    }
}

pub fn series_level(c1: C64, c0: C64) -> f64 {
    let scale = c1.norm().sqrt() + c0.norm().cbrt() + 1.0;
    (1e6f64).ln().max((100.0 * scale).ln())
}

/// `log B(w)` from the convergent product formula, valid when every
/// correction factor along the orbit of `w` is close to one.
pub fn log_bottcher_series<T: Scalar>(c1: T, c0: T, w: T) -> Result<T, NumericError> {
    let one = T::lift(C64::new(1.0, 0.0));
    let mut acc = w.ln();
    let mut w = w;
    let mut weight = 1.0 / 3.0;
    for _ in 0..80 {
        let w2 = w * w;
        let u = c1 / w2 + c0 / (w2 * w);
        let un = u.value().norm();
        if !(un < 0.5) {
            return Err(NumericError::TooDeep);
        }
        acc += (one + u).ln().scale(weight);
        if un < 1e-18 || w.value().norm() > 1e60 {
            return Ok(acc);
        }
        w = step(c1, c0, w);
        weight /= 3.0;
    }
    Ok(acc)
}

/// Smallest `k` with `3^k g ≥ level`.
pub fn depth_for(g: f64, level: f64) -> u32 {
    let mut k = 0;
    let mut x = g;
    while x < level && k < 200 {
        x *= 3.0;
        k += 1;
    }
    k
}

/// Residual of the ray equation at depth `k`:
/// `log B(F^k(z)) - 3^k (g + 2πiθ)` with the imaginary part wrapped, where
/// `angle_k = 3^k θ mod 1` is supplied exactly by the caller.
pub fn ray_residual<T: Scalar>(c1: T, c0: T, z: T, k: u32, g: f64, angle_k: f64) -> Result<T, NumericError> {
    let mut w = z;
    for _ in 0..k {
        w = step(c1, c0, w);
    }
    let lb = log_bottcher_series(c1, c0, w)?;
    let target = C64::new(g * 3f64.powi(k as i32), 2.0 * PI * angle_k);
    let raw = lb - T::lift(target);
    let wrapped = wrap_im(raw.value());
    Ok(raw + T::lift(wrapped - raw.value()))
}

/// Newton's method for the point of potential `g` whose depth-`k` image has
/// angle `angle_k`, starting from `seed`. Steps far out are taken in
/// `log z`, which keeps large iterates on the correct branch.
pub fn ray_point(map: &CubicMap, seed: C64, k: u32, g: f64, angle_k: f64) -> Option<C64> {
    let (c1, c0) = (Jet::constant(map.c1()), Jet::constant(map.c0()));
    let mut z = seed;
    let mut last = f64::INFINITY;
    for _ in 0..40 {
        let r = ray_residual(c1, c0, Jet::<1>::var(z, 0), k, g, angle_k).ok()?;
        let dz = r.v / r.d[0];
        if !dz.is_finite() {
            return None;
        }
        let rn = r.v.norm();
        if rn > 4.0 * last && rn > 1e-6 {
            return None;
        }
        last = rn;
        // Plain steps near the origin, which rays may cross.
        let rel = if z.norm() > 1.0 {
            let dlog = dz / z;
            z *= (-dlog.max_abs_step(1.0)).exp();
            dlog.norm()
        } else {
            z -= dz.max_abs_step(0.5);
            dz.norm()
        };
        if rel <= 1e-13 {
            // Rounding in F^k grows like 3^k, so the residual test is relative.
            let r = ray_residual(map.c1(), map.c0(), z, k, g, angle_k).ok()?;
            let scale = 3f64.powi(k as i32);
            return (r.norm() < 1e-12 * scale * (1.0 + g * scale)).then_some(z);
        }
    }
    None
}

trait StepLimit {
    fn max_abs_step(self, cap: f64) -> Self;
}

impl StepLimit for C64 {
    fn max_abs_step(self, cap: f64) -> Self {
        let n = self.norm();
        if n > cap {
            self * (cap / n)
        } else {
            self
        }
    }
}

/// Green's function of the filled Julia set, zero on bounded orbits.
pub fn green(map: &CubicMap, z: C64) -> Result<f64, NumericError> {
    green_with_budget(map, z, DEFAULT_BUDGET)
}

pub fn green_with_budget(map: &CubicMap, z: C64, budget: usize) -> Result<f64, NumericError> {
    if !z.is_finite() {
        return Err(NumericError::IterationBudgetExceeded(0));
    }
    let (c1, c0) = (map.c1(), map.c0());
    let big = map.series_level().exp();
    let r = map.escape_radius();
    let mut w = z;
    let mut scale = 1.0;
    let mut escaped = false;
    for _ in 0..budget {
        if w.norm() >= big {
            let lb = log_bottcher_series(c1, c0, w)?;
            return Ok(lb.re * scale);
        }
        if w.norm() > r {
            escaped = true;
        }
        w = step(c1, c0, w);
        scale /= 3.0;
    }
    if escaped {
        Err(NumericError::IterationBudgetExceeded(budget))
    } else {
        Ok(0.0)
    }
}

/// Largest potential among the escaping critical points (0 if none escape).
pub fn critical_level(map: &CubicMap) -> f64 {
    map.critical_points()
        .iter()
        .map(|&c| green(map, c).unwrap_or(0.0))
        .fold(0.0, f64::max)
}

/// `log B(z)`, with imaginary part in `[0, 2π)`. Points below the Böttcher
/// level are continued outward along their external ray.
pub fn log_bottcher(map: &CubicMap, z: C64) -> Result<C64, NumericError> {
    let (c1, c0) = (map.c1(), map.c0());
    if let Ok(lb) = log_bottcher_series(c1, c0, z) {
        if green(map, z)? >= map.series_level() * 0.5 {
            return Ok(normalize_angle(lb));
        }
    }
    let g = green(map, z)?;
    if g <= 0.0 {
        return Err(NumericError::NotEscaping);
    }
    if g < critical_level(map) * (1.0 - 1e-9) {
        return Err(NumericError::TooDeep);
    }
    let theta = angle_by_ascent(map, z, g)?;
    Ok(C64::new(g, 2.0 * PI * theta))
}

fn normalize_angle(lb: C64) -> C64 {
    let t = (lb.im / (2.0 * PI)).rem_euclid(1.0);
    C64::new(lb.re, 2.0 * PI * t)
}

pub fn bottcher(map: &CubicMap, z: C64) -> Result<C64, NumericError> {
    Ok(log_bottcher(map, z)?.exp())
}

/// External angle of an escaping point, found by climbing its ray until the
/// Böttcher series applies directly.
pub fn angle_by_ascent(map: &CubicMap, z: C64, g: f64) -> Result<f64, NumericError> {
    let (c1, c0) = (map.c1(), map.c0());
    let level = map.series_level();
    let ratio = 3f64.powf(1.0 / 8.0);
    let mut z = z;
    let mut g = g;
    let mut k = depth_for(g, level);
    let im_at = |z: C64, k: u32| -> Result<f64, NumericError> {
        let w = map.iterate(z, k as usize);
        Ok((log_bottcher_series(c1, c0, w)?.im / (2.0 * PI)).rem_euclid(1.0))
    };
    let mut angle_k = im_at(z, k)?;
    let mut factor = ratio;
    let mut guard = 0;
    while k > 0 {
        guard += 1;
        if guard > 5000 || factor < 1.0 + 1e-9 {
            return Err(NumericError::TooDeep);
        }
        let g_next = g * factor;
        match ray_point(map, z, k, g_next, angle_k) {
            Some(z1) => {
                z = z1;
                g = g_next;
                factor = (factor * factor).min(ratio);
                while k > 0 && g * 3f64.powi(k as i32 - 1) >= level {
                    k -= 1;
                    angle_k = im_at(z, k)?;
                }
            }
            None => factor = factor.sqrt(),
        }
    }
    Ok((log_bottcher_series(c1, c0, z)?.im / (2.0 * PI)).rem_euclid(1.0))
}

/// `G(F) = γ(2a)`, the potential of the free critical point `-a`.
pub fn parameter_green(map: &CubicMap) -> Result<f64, NumericError> {
    let g = green(map, -map.a)?;
    if g > 0.0 {
        Ok(g)
    } else {
        Err(NumericError::NotEscaping)
    }
}

/// External angle of the co-critical point `2a`, in turns.
pub fn cocritical_angle(map: &CubicMap) -> Result<f64, NumericError> {
    let g = parameter_green(map)?;
    let t = angle_by_ascent(map, 2.0 * map.a, g)?;
    Ok(t)
}

/// An escaping critical point, its potential and the angles of the two
/// rays that run into it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapingCritical {
    pub point: C64,
    pub potential: f64,
    pub crash_angles: [f64; 2],
}

pub fn escaping_critical_points(map: &CubicMap) -> Result<Vec<EscapingCritical>, NumericError> {
    let mut out = Vec::new();
    if map.a.norm() < 1e-12 {
        return Ok(out);
    }
    for c in map.critical_points() {
        let g = green(map, c)?;
        if g > 0.0 {
            let co = angle_by_ascent(map, -2.0 * c, g)?;
            out.push(EscapingCritical {
                point: c,
                potential: g,
                crash_angles: [(co + 1.0 / 3.0).rem_euclid(1.0), (co - 1.0 / 3.0).rem_euclid(1.0)],
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Attracting,
    Repelling,
    ParabolicLike,
    Indifferent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub z: C64,
    pub period: u32,
    pub multiplier: C64,
    pub kind: PointKind,
    /// Tolerance used to decide the kind.
    pub kind_tol: f64,
    /// Number of raw roots merged into this point.
    pub multiplicity: u32,
}

pub fn classify_multiplier(lambda: C64, tol: f64) -> PointKind {
    let r = lambda.norm();
    if r < 1.0 - tol {
        PointKind::Attracting
    } else if r > 1.0 + tol {
        PointKind::Repelling
    } else if (1..=24).any(|m| (lambda.powi(m) - 1.0).norm() < tol * m as f64) {
        PointKind::ParabolicLike
    } else {
        PointKind::Indifferent
    }
}

fn newton_ratio_fixed(map: &CubicMap, z: C64, n: usize) -> C64 {
    let (c1, c0) = (map.c1(), map.c0());
    let mut w = z;
    let mut d = C64::new(1.0, 0.0);
    for k in 0..n {
        if w.norm() > 1e50 {
            return w / d / 3f64.powi((n - k) as i32);
        }
        d *= 3.0 * w * w + c1;
        w = step(c1, c0, w);
    }
    (w - z) / (d - 1.0)
}

/// All `3^n` roots of `F^n(z) = z`, with multiplicity.
pub fn iterate_fixed_points(map: &CubicMap, n: u32) -> Result<Vec<C64>, NumericError> {
    if n > 9 {
        return Err(NumericError::DegreeTooLarge(3usize.pow(n)));
    }
    let degree = 3usize.pow(n);
    let roots = aberth(degree, map.escape_radius() * 1.1, |z| newton_ratio_fixed(map, z, n as usize), 2000)?;
    Ok(roots
        .into_iter()
        .map(|z| {
            let mut z = z;
            for _ in 0..3 {
                let r = newton_ratio_fixed(map, z, n as usize);
                if r.is_finite() && r.norm() < 1e-6 {
                    z -= r;
                }
            }
            z
        })
        .collect())
}

fn divisors(n: u32) -> impl Iterator<Item = u32> {
    (1..=n).filter(move |d| n % d == 0)
}

fn exact_period(map: &CubicMap, z: C64, n: u32, tol: f64) -> u32 {
    divisors(n)
        .find(|&m| (map.iterate(z, m as usize) - z).norm() <= tol * z.norm().max(1.0))
        .unwrap_or(n)
}

/// Points of exact period `n`, deduplicated within `dedup`.
pub fn periodic_points(map: &CubicMap, n: u32) -> Result<Vec<PeriodicPoint>, NumericError> {
    periodic_points_with(map, n, 1e-8, 1e-6)
}

pub fn periodic_points_with(map: &CubicMap, n: u32, dedup: f64, kind_tol: f64) -> Result<Vec<PeriodicPoint>, NumericError> {
    let roots = iterate_fixed_points(map, n)?;
    let mut out = Vec::new();
    for (z, count) in cluster(&roots, dedup) {
        if exact_period(map, z, n, 1e-7) != n {
            continue;
        }
        let (_, m) = map.iterate_with_derivative(z, n as usize);
        out.push(PeriodicPoint {
            z,
            period: n,
            multiplier: m,
            kind: classify_multiplier(m, kind_tol),
            kind_tol,
            multiplicity: count as u32,
        });
    }
    Ok(out)
}

/// Refines a point of period dividing `n` by Newton's method.
pub fn refine_periodic(map: &CubicMap, z: C64, n: u32) -> Option<C64> {
    let mut z = z;
    for _ in 0..60 {
        let r = newton_ratio_fixed(map, z, n as usize);
        if !r.is_finite() {
            return None;
        }
        z -= r;
        if r.norm() <= 1e-15 * z.norm().max(1.0) {
            return Some(z);
        }
    }
    let (w, _) = map.iterate_with_derivative(z, n as usize);
    ((w - z).norm() < 1e-10).then_some(z)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FreeOrbit {
    Escape(f64),
    Cycle(Vec<PeriodicPoint>),
    Undecided,
}

/// Fate of the free critical point `-a` within `budget` iterations.
pub fn free_orbit_limit(map: &CubicMap, budget: usize) -> FreeOrbit {
    orbit_limit_of(map, -map.a, budget)
}

pub fn orbit_limit_of(map: &CubicMap, z0: C64, budget: usize) -> FreeOrbit {
    let r = map.escape_radius();
    let (c1, c0) = (map.c1(), map.c0());
    let mut z = z0;
    for _ in 0..budget {
        if z.norm() > r {
            return match green(map, z0) {
                Ok(g) if g > 0.0 => FreeOrbit::Escape(g),
                _ => FreeOrbit::Undecided,
            };
        }
        z = step(c1, c0, z);
    }
    let scale = z.norm().max(1.0);
    let mut w = z;
    for m in 1..=64u32 {
        w = step(c1, c0, w);
        if (w - z).norm() < 1e-6 * scale {
            let Some(p) = refine_periodic(map, z, m) else { break };
            let period = exact_period(map, p, m, 1e-9);
            let (_, lambda) = map.iterate_with_derivative(p, period as usize);
            if lambda.norm() >= 1.0 {
                break;
            }
            let cycle = map
                .orbit(p, period as usize - 1)
                .into_iter()
                .map(|q| PeriodicPoint {
                    z: q,
                    period,
                    multiplier: lambda,
                    kind: PointKind::Attracting,
                    kind_tol: 0.0,
                    multiplicity: 1,
                })
                .collect();
            return FreeOrbit::Cycle(cycle);
        }
    }
    FreeOrbit::Undecided
}
