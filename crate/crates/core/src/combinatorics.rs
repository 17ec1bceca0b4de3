//! Exact counts attached to the curves `S_p` and their tessellations.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::CountError;

/// Number of escape regions of `S_p`, `p = 1..=9`, from the DeMarco–Schiff
/// census.
const ESCAPE_REGIONS: [u64; 9] = [1, 2, 8, 20, 56, 144, 404, 1112, 3120];

fn pow3(n: u32) -> BigUint {
    BigUint::from(3u32).pow(n)
}

/// Degree `d_p` of `S_p`, defined by `3^(n-1) = Σ_{p | n} d_p`.
pub fn degree(p: u32) -> Result<BigUint, CountError> {
    if p == 0 {
        return Err(CountError::NonPositive);
    }
    let mut d: Vec<BigUint> = vec![BigUint::zero(); p as usize + 1];
    for n in 1..=p {
        let mut v = pow3(n - 1);
        for k in 1..n {
            if n % k == 0 {
                v -= &d[k as usize];
            }
        }
        d[n as usize] = v;
    }
    Ok(d.swap_remove(p as usize))
}

pub fn escape_region_count(p: u32) -> Result<BigUint, CountError> {
    match p {
        0 => Err(CountError::NonPositive),
        1..=9 => Ok(BigUint::from(ESCAPE_REGIONS[p as usize - 1])),
        _ => Err(CountError::OutOfTable(p)),
    }
}

/// Numbers of period-`q` and co-period-`q` angles.
pub fn angle_counts(q: u32) -> Result<(BigUint, BigUint), CountError> {
    let periodic = if q == 1 { BigUint::from(2u32) } else { degree(q)? * 3u32 };
    let coperiodic = &periodic * 2u32;
    Ok((periodic, coperiodic))
}

/// Edges of `Tes_q(S̄_p)`: one per co-periodic angle in each region, counted
/// with multiplicity.
pub fn edge_count(q: u32, p: u32) -> Result<BigUint, CountError> {
    let dp = degree(p)?;
    Ok(if q == 1 { dp * 4u32 } else { degree(q)? * dp * 6u32 })
}

/// A count together with whether it relies on an unproven conjecture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Flagged<T> {
    pub value: T,
    pub conjectural: bool,
}

/// Parabolic vertices of `Tes_q(S̄_p)`. Assumes every Type D component has
/// exactly one root point.
pub fn parabolic_vertex_count(q: u32, p: u32) -> Result<Flagged<BigUint>, CountError> {
    let dp = degree(p)?;
    let value = if p == q {
        &dp * &dp * 3u32 - &dp * p
    } else {
        degree(q)? * dp * 3u32
    };
    Ok(Flagged { value, conjectural: true })
}

/// Components of Type `B(m, n)` in `S_{m+n}`.
pub fn b_component_count(m: u32, n: u32) -> Result<BigUint, CountError> {
    if m == 0 || n == 0 {
        return Err(CountError::NonPositive);
    }
    degree(m + n)
}

/// Points where `S_p` meets the line `a = 0` counted in the ambient plane.
pub fn ambient_intersection_count(p: u32) -> Result<BigUint, CountError> {
    if p == 0 {
        return Err(CountError::NonPositive);
    }
    Ok(pow3(p - 1))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CurveStats {
    pub p: u32,
    pub d_p: BigUint,
    pub n_p: BigUint,
    pub chi: BigInt,
    pub genus: BigInt,
}

pub fn curve_stats(p: u32) -> Result<CurveStats, CountError> {
    let d = BigInt::from(degree(p)?);
    let n = BigInt::from(escape_region_count(p)?);
    let chi = &n + (2 - i64::from(p)) * &d;
    let twice = (i64::from(p) - 2) * &d - &n;
    if (&twice % 2u32) != BigInt::zero() {
        return Err(CountError::Inconsistent(format!("odd genus numerator for p = {p}")));
    }
    let genus = BigInt::one() + twice / 2;
    Ok(CurveStats {
        p,
        d_p: d.to_biguint().expect("degree is positive"),
        n_p: n.to_biguint().expect("count is positive"),
        chi,
        genus,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaceCount {
    /// Faces from `v - e + f = χ + rank H1`.
    pub euler: BigInt,
    /// `3 d_p² + 2 d_p`, reported only for `p = q > 1`.
    pub closed_form: Option<BigUint>,
    pub conjectural: bool,
}

pub fn face_count(q: u32, p: u32, h1_rank: u64) -> Result<FaceCount, CountError> {
    let stats = curve_stats(p)?;
    let v = BigInt::from(stats.n_p.clone()) + BigInt::from(parabolic_vertex_count(q, p)?.value);
    let e = BigInt::from(edge_count(q, p)?);
    let euler = &stats.chi + BigInt::from(h1_rank) - v + e;
    if euler <= BigInt::zero() {
        return Err(CountError::Inconsistent(format!("non-positive face count {euler}")));
    }
    let closed_form = (p == q && p > 1).then(|| {
        let d = &stats.d_p;
        d * d * 3u32 + d * 2u32
    });
    Ok(FaceCount { euler, closed_form, conjectural: true })
}

/// One row of the tessellation statistics table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TessStats {
    pub q: u32,
    pub p: u32,
    pub v_ideal: BigUint,
    pub v_par: BigUint,
    pub e: BigUint,
    pub f: BigInt,
    pub chi: BigInt,
    pub h1_kernel_rank: u64,
    pub h1_image_rank: u64,
    pub conjectural: bool,
}

impl TessStats {
    pub fn euler_holds(&self) -> bool {
        BigInt::from(self.v_ideal.clone()) + BigInt::from(self.v_par.clone())
            - BigInt::from(self.e.clone())
            + &self.f
            == &self.chi + BigInt::from(self.h1_kernel_rank + self.h1_image_rank)
    }
}

/// Known ranks of `H1` of the union of faces, split into the kernel and
/// image of the map to `H1(S̄_p)`.
pub fn known_h1_ranks(q: u32, p: u32) -> Option<(u64, u64)> {
    match (q, p) {
        (1..=3, 1) | (2, 2) | (3, 3) => Some((0, 0)),
        (1, 2) | (3, 2) => Some((1, 0)),
        (1, 3) => Some((7, 2)),
        (2, 3) => Some((2, 0)),
        _ => None,
    }
}

pub fn tess_stats(q: u32, p: u32, h1: (u64, u64)) -> Result<TessStats, CountError> {
    let stats = curve_stats(p)?;
    let faces = face_count(q, p, h1.0 + h1.1)?;
    Ok(TessStats {
        q,
        p,
        v_ideal: stats.n_p,
        v_par: parabolic_vertex_count(q, p)?.value,
        e: edge_count(q, p)?,
        f: faces.euler,
        chi: stats.chi,
        h1_kernel_rank: h1.0,
        h1_image_rank: h1.1,
        conjectural: true,
    })
}

/// All rows with `q, p ≤ 3`.
pub fn table4() -> Vec<TessStats> {
    let mut rows = Vec::new();
    for p in 1..=3 {
        for q in 1..=3 {
            let h1 = known_h1_ranks(q, p).expect("row is tabulated");
            rows.push(tess_stats(q, p, h1).expect("row is consistent"));
        }
    }
    rows
}

/// Genus of the complementary piece when a closed surface of Euler
/// characteristic `chi_total` is cut along `n_circles` circles into a piece
/// of characteristic `chi_piece` and a connected remainder.
pub fn split_genus(chi_total: i64, chi_piece: i64, n_circles: u64) -> Result<u64, CountError> {
    let chi_other = chi_total - chi_piece;
    if n_circles == 0 && chi_other == 0 {
        return Ok(0);
    }
    let twice = 2 - n_circles as i64 - chi_other;
    if twice < 0 || twice % 2 != 0 {
        return Err(CountError::Inconsistent(format!(
            "χ = {chi_other} with {n_circles} boundary circles has no genus"
        )));
    }
    Ok((twice / 2) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LefschetzRanks {
    pub kernel: u64,
    pub total: Option<u64>,
}

/// Kernel rank of `H1(F^∪) → H1(S̄_p)` from the number of components of the
/// 1-skeleton; the total when the image rank is known. The image and the
/// image for the dual skeleton have ranks summing to `2g`.
pub fn lefschetz_ranks(
    components: u64,
    genus: u64,
    image_rank: Option<u64>,
    dual_image_rank: Option<u64>,
) -> Result<LefschetzRanks, CountError> {
    if components == 0 {
        return Err(CountError::NonPositive);
    }
    if let Some(r) = image_rank {
        if r > 2 * genus {
            return Err(CountError::Inconsistent(format!("image rank {r} exceeds 2g = {}", 2 * genus)));
        }
        if let Some(s) = dual_image_rank {
            if r + s != 2 * genus {
                return Err(CountError::Inconsistent(format!(
                    "image ranks {r} + {s} differ from 2g = {}",
                    2 * genus
                )));
            }
        }
    }
    let kernel = components - 1;
    Ok(LefschetzRanks { kernel, total: image_rank.map(|r| kernel + r) })
}

pub fn average_multiplicity(p: u32) -> Result<BigRational, CountError> {
    Ok(BigRational::new(
        BigInt::from(degree(p)?),
        BigInt::from(escape_region_count(p)?),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn degrees() {
        let table = [1u64, 2, 8, 24, 80, 232, 728, 2160, 6552];
        for (i, &d) in table.iter().enumerate() {
            assert_eq!(degree(i as u32 + 1).unwrap(), u(d));
        }
        assert!(degree(0).is_err());
    }

    #[test]
    fn degree_recursion_sums() {
        for n in 1..=20u32 {
            let sum: BigUint = (1..=n).filter(|p| n % p == 0).map(|p| degree(p).unwrap()).sum();
            assert_eq!(sum, pow3(n - 1));
        }
    }

    #[test]
    fn angle_count_table() {
        let periodic = [2u64, 6, 24, 72, 240, 696, 2184, 6480];
        for (i, &c) in periodic.iter().enumerate() {
            assert_eq!(angle_counts(i as u32 + 1).unwrap(), (u(c), u(2 * c)));
        }
    }

    #[test]
    fn edges_and_vertices() {
        assert_eq!(edge_count(3, 3).unwrap(), u(384));
        assert_eq!(edge_count(1, 3).unwrap(), u(32));
        assert_eq!(edge_count(5, 5).unwrap(), u(38400));
        assert_eq!(parabolic_vertex_count(3, 3).unwrap().value, u(168));
        assert_eq!(parabolic_vertex_count(2, 1).unwrap().value, u(6));
        assert_eq!(parabolic_vertex_count(3, 2).unwrap().value, u(48));
        assert!(parabolic_vertex_count(1, 1).unwrap().conjectural);
    }

    #[test]
    fn b_counts() {
        assert_eq!(b_component_count(1, 1).unwrap(), u(2));
        assert_eq!(b_component_count(2, 2).unwrap(), u(24));
        assert_eq!(ambient_intersection_count(3).unwrap(), u(9));
    }

    #[test]
    fn euler_characteristics() {
        assert_eq!(curve_stats(3).unwrap().chi, BigInt::from(0));
        assert_eq!(curve_stats(4).unwrap().chi, BigInt::from(-28));
        assert_eq!(curve_stats(4).unwrap().genus, BigInt::from(15));
        assert_eq!(face_count(2, 2, 0).unwrap().euler, BigInt::from(16));
        assert!(matches!(escape_region_count(10), Err(CountError::OutOfTable(10))));
        for p in 1..=9 {
            let s = curve_stats(p).unwrap();
            let d = BigInt::from(s.d_p.clone());
            assert!(BigInt::from(2) * &s.genus > (i64::from(p) - 3) * &d);
            let minus_chi = -s.chi;
            assert!((i64::from(p) - 3) * &d <= minus_chi);
            assert!(minus_chi < (i64::from(p) - 2) * &d);
        }
    }

    #[test]
    fn table_rows() {
        let expected: [(u32, u32, u64, u64, u64, i64, i64); 9] = [
            (1, 1, 1, 2, 4, 3, 2),
            (2, 1, 1, 6, 12, 7, 2),
            (3, 1, 1, 24, 48, 25, 2),
            (1, 2, 2, 6, 8, 3, 2),
            (2, 2, 2, 8, 24, 16, 2),
            (3, 2, 2, 48, 96, 49, 2),
            (1, 3, 8, 24, 32, 9, 0),
            (2, 3, 8, 48, 96, 42, 0),
            (3, 3, 8, 168, 384, 208, 0),
        ];
        let rows = table4();
        for (q, p, vi, vp, e, f, chi) in expected {
            let row = rows.iter().find(|r| r.q == q && r.p == p).unwrap();
            assert_eq!(
                (&row.v_ideal, &row.v_par, &row.e, &row.f, &row.chi),
                (&u(vi), &u(vp), &u(e), &BigInt::from(f), &BigInt::from(chi))
            );
            assert!(row.euler_holds());
        }
        for p in 2..=3 {
            let fc = face_count(p, p, 0).unwrap();
            assert_eq!(BigInt::from(fc.closed_form.unwrap()), fc.euler);
        }
    }

    #[test]
    fn splitting() {
        assert_eq!(split_genus(-28, -2, 4).unwrap(), 12);
        assert_eq!(split_genus(2, 2, 0).unwrap(), 0);
        assert_eq!(split_genus(0, -1, 1).unwrap(), 0);
        assert!(split_genus(0, 0, 1).is_err());
    }

    #[test]
    fn lefschetz() {
        assert_eq!(lefschetz_ranks(1, 0, Some(0), None).unwrap().kernel, 0);
        let r = lefschetz_ranks(8, 1, Some(2), Some(0)).unwrap();
        assert_eq!((r.kernel, r.total), (7, Some(9)));
        assert_eq!(lefschetz_ranks(3, 1, None, None).unwrap().kernel, 2);
        assert!(lefschetz_ranks(2, 1, Some(1), Some(0)).is_err());
    }

    #[test]
    fn multiplicities() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(average_multiplicity(2).unwrap(), r(1, 1));
        assert_eq!(average_multiplicity(4).unwrap(), r(6, 5));
        assert_eq!(average_multiplicity(9).unwrap(), r(6552, 3120));
    }
}
