//! Numerical building blocks: forward-mode jets, simultaneous root finding,
//! small dense solves and a total-degree homotopy tracker.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::NumericError;

/// Arithmetic shared by plain complex numbers and jets.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn lift(c: C64) -> Self;
    fn value(&self) -> C64;
    fn ln(self) -> Self;
    fn scale(self, k: f64) -> Self;
}

impl Scalar for C64 {
    fn lift(c: C64) -> Self {
        c
    }
    fn value(&self) -> C64 {
        *self
    }
    fn ln(self) -> Self {
        C64::ln(self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// A complex value with its derivatives along `N` complex directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub v: C64,
    pub d: [C64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: C64) -> Self {
        Self { v, d: [C64::new(0.0, 0.0); N] }
    }

    pub fn var(v: C64, i: usize) -> Self {
        let mut j = Self::constant(v);
        j.d[i] = C64::new(1.0, 0.0);
        j
    }

    fn map_d(self, k: C64) -> [C64; N] {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= k;
        }
        d
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl<const N: usize> AddAssign for Jet<N> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d: self.map_d(C64::new(-1.0, 0.0)) }
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [C64::new(0.0, 0.0); N];
        for (i, x) in d.iter_mut().enumerate() {
            *x = self.d[i] * o.v + self.v * o.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.inv();
        let v = self.v * inv;
        let mut d = [C64::new(0.0, 0.0); N];
        for (i, x) in d.iter_mut().enumerate() {
            *x = (self.d[i] - v * o.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl<const N: usize> Scalar for Jet<N> {
    fn lift(c: C64) -> Self {
        Self::constant(c)
    }
    fn value(&self) -> C64 {
        self.v
    }
    fn ln(self) -> Self {
        Self { v: self.v.ln(), d: self.map_d(self.v.inv()) }
    }
    fn scale(self, k: f64) -> Self {
        Self { v: self.v * k, d: self.map_d(C64::new(k, 0.0)) }
    }
}

/// Reduces the imaginary part into `(-π, π]`.
pub fn wrap_im(z: C64) -> C64 {
    let tau = 2.0 * PI;
    let mut im = z.im - tau * (z.im / tau).round();
    if im <= -PI {
        im += tau;
    }
    C64::new(z.re, im)
}

/// Solves the dense complex system `m x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when the matrix is numerically singular.
pub fn solve_linear<const N: usize>(mut m: [[C64; N]; N], mut b: [C64; N]) -> Option<[C64; N]> {
    let scale = m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .expect("nonempty range");
        if m[piv][col].norm() <= 1e-300_f64.max(scale * 1e-15) {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..N {
            let f = m[r][col] / m[col][col];
            for c in col..N {
                let t = m[col][c];
                m[r][c] -= f * t;
            }
            let t = b[col];
            b[r] -= f * t;
        }
    }
    let mut x = [C64::new(0.0, 0.0); N];
    for r in (0..N).rev() {
        let mut acc = b[r];
        for c in r + 1..N {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

/// Simultaneous (Aberth–Ehrlich) iteration for the `degree` roots of a
/// polynomial given only through its Newton ratio `p(z)/p'(z)`.
pub fn aberth<F>(degree: usize, radius: f64, newton_ratio: F, max_iter: usize) -> Result<Vec<C64>, NumericError>
where
    F: Fn(C64) -> C64 + Sync,
{
    if degree == 0 {
        return Ok(Vec::new());
    }
    let mut z: Vec<C64> = (0..degree)
        .map(|k| C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.25) / degree as f64 + 0.4))
        .collect();
    let mut done = vec![false; degree];
    for _ in 0..max_iter {
        let mut moved = false;
        for i in 0..degree {
            if done[i] {
                continue;
            }
            let r = newton_ratio(z[i]);
            if !r.is_finite() {
                return Err(NumericError::RootFindingFailure("non-finite Newton ratio".into()));
            }
            let mut s = C64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    s += (z[i] - zj).inv();
                }
            }
            let step = r / (C64::new(1.0, 0.0) - r * s);
            let step = if step.is_finite() { step } else { r };
            z[i] -= step;
            if step.norm() <= 1e-15 * z[i].norm().max(1.0) {
                done[i] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            return Ok(z);
        }
    }
    // Clusters of multiple roots converge only linearly; accept if every
    // approximation is at least stationary to moderate precision.
    let worst = z.iter().map(|&x| newton_ratio(x).norm()).fold(0.0, f64::max);
    if worst < 1e-6 {
        Ok(z)
    } else {
        Err(NumericError::RootFindingFailure(format!(
            "Aberth iteration did not settle (largest Newton step {worst:e})"
        )))
    }
}

/// Groups points closer than `radius` (single linkage), returning cluster
/// means and sizes in first-appearance order.
pub fn cluster(points: &[C64], radius: f64) -> Vec<(C64, usize)> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut order: Vec<usize> = Vec::new();
    let mut sums: Vec<(C64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match order.iter().position(|&x| x == r) {
            Some(k) => {
                sums[k].0 += points[i];
                sums[k].1 += 1;
            }
            None => {
                order.push(r);
                sums.push((points[i], 1));
            }
        }
    }
    sums.into_iter().map(|(s, c)| (s / c as f64, c)).collect()
}

/// A square polynomial system in two complex unknowns, evaluated with
/// first derivatives.
pub trait System2: Sync {
    fn degrees(&self) -> [u32; 2];
    fn eval(&self, x: [C64; 2]) -> [Jet<2>; 2];
}

/// Newton's method on a two-unknown system from `x`. Returns the refined
/// point and final residual norm.
pub fn newton2<S: System2 + ?Sized>(sys: &S, mut x: [C64; 2], iters: usize, tol: f64) -> Option<([C64; 2], f64)> {
    for _ in 0..iters {
        let f = sys.eval(x);
        let res = f[0].v.norm().max(f[1].v.norm());
        let m = [[f[0].d[0], f[0].d[1]], [f[1].d[0], f[1].d[1]]];
        let dx = solve_linear(m, [f[0].v, f[1].v])?;
        x = [x[0] - dx[0], x[1] - dx[1]];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return None;
        }
        let step = dx[0].norm().max(dx[1].norm());
        if step <= tol * (1.0 + x[0].norm().max(x[1].norm())) && res.is_finite() {
            let f = sys.eval(x);
            return Some((x, f[0].v.norm().max(f[1].v.norm())));
        }
    }
    None
}

/// Solutions reached by tracking every start point of the total-degree
/// homotopy `(1 - s) γ G + s F`, with `G_i = x_i^{d_i} - 1`.
pub fn total_degree_homotopy<S: System2>(sys: &S) -> Vec<[C64; 2]> {
    total_degree_homotopy_with(sys, C64::from_polar(1.0, 2.1737))
}

pub fn total_degree_homotopy_with<S: System2>(sys: &S, gamma: C64) -> Vec<[C64; 2]> {
    let [d0, d1] = sys.degrees();
    let mut starts = Vec::new();
    for i in 0..d0 {
        for j in 0..d1 {
            starts.push([
                C64::from_polar(1.0, 2.0 * PI * i as f64 / d0 as f64),
                C64::from_polar(1.0, 2.0 * PI * j as f64 / d1 as f64),
            ]);
        }
    }
    let track = |x0: [C64; 2]| track_path(sys, gamma, [d0, d1], x0);
    crate::exec::map_collect(&starts, |x| track(*x)).into_iter().flatten().collect()
}

fn homotopy_eval<S: System2 + ?Sized>(
    sys: &S,
    gamma: C64,
    deg: [u32; 2],
    x: [C64; 2],
    s: f64,
) -> ([C64; 2], [[C64; 2]; 2], [C64; 2]) {
    let f = sys.eval(x);
    let mut h = [C64::new(0.0, 0.0); 2];
    let mut jac = [[C64::new(0.0, 0.0); 2]; 2];
    let mut ds = [C64::new(0.0, 0.0); 2];
    for i in 0..2 {
        let d = deg[i] as i32;
        let g = x[i].powi(d) - 1.0;
        let dg = x[i].powi(d - 1) * d as f64;
        h[i] = gamma * g * (1.0 - s) + f[i].v * s;
        ds[i] = f[i].v - gamma * g;
        for k in 0..2 {
            jac[i][k] = f[i].d[k] * s;
        }
        jac[i][i] += gamma * dg * (1.0 - s);
    }
    (h, jac, ds)
}

fn track_path<S: System2 + ?Sized>(sys: &S, gamma: C64, deg: [u32; 2], mut x: [C64; 2]) -> Option<[C64; 2]> {
    let mut s = 0.0f64;
    let mut h = 0.02f64;
    let mut steps = 0;
    while s < 1.0 {
        steps += 1;
        if steps > 20_000 || h < 1e-12 {
            return None;
        }
        let h_try = h.min(1.0 - s);
        // Euler predictor.
        let (_, jac, ds) = homotopy_eval(sys, gamma, deg, x, s);
        let dx = solve_linear(jac, [-ds[0], -ds[1]]);
        let Some(dx) = dx else {
            h *= 0.5;
            continue;
        };
        let mut y = [x[0] + dx[0] * h_try, x[1] + dx[1] * h_try];
        let s1 = s + h_try;
        let mut ok = false;
        for it in 0..6 {
            let (r, jac, _) = homotopy_eval(sys, gamma, deg, y, s1);
            let Some(c) = solve_linear(jac, r) else { break };
            y = [y[0] - c[0], y[1] - c[1]];
            let size = 1.0 + y[0].norm().max(y[1].norm());
            let cn = c[0].norm().max(c[1].norm());
            if !cn.is_finite() {
                break;
            }
            if cn <= 1e-10 * size {
                ok = it <= 3;
                break;
            }
        }
        if ok {
            x = y;
            s = s1;
            h = (h * 1.5).min(0.1);
            if x[0].norm().max(x[1].norm()) > 1e8 {
                return None;
            }
        } else {
            h *= 0.5;
        }
    }
    newton2(sys, x, 50, 1e-15).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn jet_derivatives() {
        let z = Jet::<1>::var(c(0.3, -0.7), 0);
        let f = z * z * z + z.ln().scale(2.0) - Jet::constant(c(1.0, 1.0)) / z;
        let zv = c(0.3, -0.7);
        let expected = zv * zv * 3.0 + zv.inv() * 2.0 + (zv * zv).inv() * c(1.0, 1.0);
        assert!((f.d[0] - expected).norm() < 1e-12);
    }

    #[test]
    fn wrapping() {
        let w = wrap_im(c(1.0, 7.0));
        assert!((w.im - (7.0 - 2.0 * PI)).abs() < 1e-15);
        assert!((wrap_im(c(0.0, -PI)).im - PI).abs() < 1e-15);
    }

    #[test]
    fn linear_solve() {
        let m = [[c(2.0, 0.0), c(1.0, 1.0)], [c(0.0, -1.0), c(3.0, 0.0)]];
        let x = [c(1.0, 2.0), c(-1.0, 0.5)];
        let b = [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]];
        let y = solve_linear(m, b).unwrap();
        assert!((y[0] - x[0]).norm() < 1e-14 && (y[1] - x[1]).norm() < 1e-14);
        assert!(solve_linear([[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]], b).is_none());
    }

    #[test]
    fn aberth_roots_of_unity() {
        let roots = aberth(7, 2.0, |z| (z.powi(7) - 1.0) / (z.powi(6) * 7.0), 500).unwrap();
        for r in &roots {
            assert!((r.powi(7) - 1.0).norm() < 1e-12);
        }
        assert_eq!(cluster(&roots, 1e-6).len(), 7);
    }

    struct Circle;
    impl System2 for Circle {
        fn degrees(&self) -> [u32; 2] {
            [2, 1]
        }
        fn eval(&self, x: [C64; 2]) -> [Jet<2>; 2] {
            let (u, v) = (Jet::var(x[0], 0), Jet::var(x[1], 1));
            let one = Jet::constant(c(1.0, 0.0));
            [u * u + v * v - one, u - v]
        }
    }

    #[test]
    fn homotopy_finds_all_intersections() {
        let mut sols = total_degree_homotopy(&Circle);
        sols.sort_by(|a, b| a[0].re.total_cmp(&b[0].re));
        assert_eq!(sols.len(), 2);
        let r = 0.5f64.sqrt();
        assert!((sols[0][0] - c(-r, 0.0)).norm() < 1e-12);
        assert!((sols[1][1] - c(r, 0.0)).norm() < 1e-12);
    }
}
