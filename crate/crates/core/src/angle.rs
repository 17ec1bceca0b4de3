//! Exact angles in R/Z under the tripling map.
//!
//! Angles are reduced fractions `num/den` with `0 <= num < den`, stored with
//! arbitrary-precision integers so that periods, co-periods and grand orbits
//! are decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::AngleError;

/// Largest period examined when iterating the tripling map.
pub const PERIOD_BOUND: u32 = 64;

/// An exact rational angle in `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Angle {
    num: BigUint,
    den: BigUint,
}

impl Angle {
    /// Builds `num/den mod 1`, reduced to lowest terms.
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self, AngleError> {
        let num = num.into();
        let den = den.into();
        if den.is_zero() {
            return Err(AngleError::ZeroDenominator);
        }
        Ok(Self::reduced(num % &den, den))
    }

    /// Convenience constructor for small literals; panics on a zero denominator.
    pub fn frac(num: u64, den: u64) -> Self {
        Self::new(num, den).expect("nonzero denominator")
    }

    pub fn zero() -> Self {
        Self {
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    fn reduced(num: BigUint, den: BigUint) -> Self {
        let g = num.gcd(&den);
        if g.is_one() {
            Self { num, den }
        } else if num.is_zero() {
            Self::zero()
        } else {
            Self {
                num: num / &g,
                den: den / g,
            }
        }
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    pub fn den(&self) -> &BigUint {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Nearest `f64` in `[0, 1)`.
    pub fn to_f64(&self) -> f64 {
        // Shift both parts down so the quotient survives very large denominators.
        let bits = self.den.bits();
        let shift = bits.saturating_sub(60);
        let n = (&self.num >> shift).to_f64().unwrap_or(0.0);
        let d = (&self.den >> shift).to_f64().unwrap_or(1.0);
        if d == 0.0 {
            0.0
        } else {
            n / d
        }
    }

    /// Numerator of this angle written over `den`, if `den` is a multiple of
    /// the reduced denominator.
    pub fn numerator_over(&self, den: &BigUint) -> Option<BigUint> {
        if (den % &self.den).is_zero() {
            Some(&self.num * (den / &self.den))
        } else {
            None
        }
    }

    /// `self + other mod 1`.
    pub fn add(&self, other: &Angle) -> Angle {
        let den = self.den.lcm(&other.den);
        let n = &self.num * (&den / &self.den) + &other.num * (&den / &other.den);
        Self::reduced(n % &den, den)
    }

    /// `self - other mod 1`.
    pub fn sub(&self, other: &Angle) -> Angle {
        let den = self.den.lcm(&other.den);
        let a = &self.num * (&den / &self.den);
        let b = &other.num * (&den / &other.den);
        let n = (a + &den - b) % &den;
        Self::reduced(n, den)
    }

    /// `k * self mod 1`.
    pub fn scale(&self, k: u64) -> Angle {
        Self::reduced((&self.num * k) % &self.den, self.den.clone())
    }

    /// The angle `(self + other)/2` on the counterclockwise arc from `self`
    /// to `other`.
    pub fn ccw_midpoint(&self, other: &Angle) -> Angle {
        let width = other.sub(self);
        let den = &width.den * 2u32;
        let half = Self::reduced(width.num.clone(), den);
        self.add(&half)
    }

    /// Multiplication by three modulo one.
    pub fn triple(&self) -> Angle {
        self.scale(3)
    }

    /// Smallest `q >= 1` with `3^q θ = θ`, or `None` when θ is not periodic
    /// under tripling.
    pub fn period(&self) -> Result<Option<u32>, AngleError> {
        if (&self.den % 3u32).is_zero() {
            return Ok(None);
        }
        let mut x = self.triple();
        for q in 1..=PERIOD_BOUND {
            if x == *self {
                return Ok(Some(q));
            }
            x = x.triple();
        }
        Err(AngleError::PeriodBound(PERIOD_BOUND))
    }

    /// Co-period of θ: the period of whichever of `θ ± 1/3` is periodic, when
    /// exactly one of them is.
    pub fn co_period(&self) -> Result<Option<u32>, AngleError> {
        let third = Angle::frac(1, 3);
        let up = self.add(&third).period()?;
        let down = self.sub(&third).period()?;
        Ok(match (up, down) {
            (Some(q), None) | (None, Some(q)) => Some(q),
            _ => None,
        })
    }

    /// Denominator test for co-periodicity: divisible by three but not by nine.
    pub fn has_coperiodic_denominator(&self) -> bool {
        (&self.den % 3u32).is_zero() && !(&self.den % 9u32).is_zero()
    }

    /// Preperiod and period of θ under tripling (`preperiod = 0` for periodic
    /// angles).
    pub fn preperiod_and_period(&self) -> Result<(u32, u32), AngleError> {
        let mut x = self.clone();
        for l in 0..=PERIOD_BOUND {
            if let Some(q) = x.period()? {
                return Ok((l, q));
            }
            x = x.triple();
        }
        Err(AngleError::PeriodBound(PERIOD_BOUND))
    }

    fn co_period_required(&self) -> Result<u32, AngleError> {
        self.co_period()?
            .ok_or_else(|| AngleError::NotCoperiodic(self.to_string()))
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Angle {
    type Err = AngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || AngleError::Parse(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigUint = n.trim().parse().map_err(|_| bad())?;
                let d: BigUint = d.trim().parse().map_err(|_| bad())?;
                Angle::new(n, d)
            }
            None => {
                let n: BigUint = s.parse().map_err(|_| bad())?;
                Angle::new(n, 1u32)
            }
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `d(q) = 3^q - 1`.
pub fn cycle_denominator(q: u32) -> BigUint {
    BigUint::from(3u32).pow(q) - 1u32
}

/// `3 d(q)`, the common denominator of co-period `q` angles.
pub fn coperiodic_denominator(q: u32) -> BigUint {
    cycle_denominator(q) * 3u32
}

/// The evenly spaced triple `(θ, θ_q, θ̂)` attached to a co-periodic angle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triad {
    pub theta: Angle,
    pub theta_q: Angle,
    pub theta_hat: Angle,
}

/// Canonical label of a grand orbit of period-`q` cycles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GrandOrbitId {
    pub q: u32,
    /// Smallest numerator over `3^q - 1` among the cycle's angles.
    pub label: BigUint,
}

pub fn triple(theta: &Angle) -> Angle {
    theta.triple()
}

pub fn period_under_tripling(theta: &Angle) -> Result<Option<u32>, AngleError> {
    theta.period()
}

pub fn co_period(theta: &Angle) -> Result<Option<u32>, AngleError> {
    theta.co_period()
}

pub fn triad_of(theta: &Angle) -> Result<Triad, AngleError> {
    theta.co_period_required()?;
    let third = Angle::frac(1, 3);
    let up = theta.add(&third);
    let down = theta.sub(&third);
    let (theta_q, theta_hat) = if up.period()?.is_some() {
        (up, down)
    } else {
        (down, up)
    };
    Ok(Triad {
        theta: theta.clone(),
        theta_q,
        theta_hat,
    })
}

/// The other co-periodic angle with the same image under tripling.
pub fn twin(theta: &Angle) -> Result<Angle, AngleError> {
    Ok(triad_of(theta)?.theta_hat)
}

/// The ordered cycle `θ_j = 3^j θ`, `1 <= j <= q`.
pub fn cycle_of(theta: &Angle, q: u32) -> Result<Vec<Angle>, AngleError> {
    let matches = theta.period()? == Some(q) || theta.co_period()? == Some(q);
    if !matches {
        return Err(AngleError::PeriodMismatch {
            angle: theta.to_string(),
            q,
        });
    }
    let mut out = Vec::with_capacity(q as usize);
    let mut x = theta.triple();
    for _ in 0..q {
        out.push(x.clone());
        x = x.triple();
    }
    Ok(out)
}

pub fn grand_orbit_id(theta: &Angle, q: u32) -> Result<GrandOrbitId, AngleError> {
    let cycle = cycle_of(theta, q)?;
    let d = cycle_denominator(q);
    let label = cycle
        .iter()
        .map(|a| a.numerator_over(&d).expect("cycle angle has denominator dividing 3^q-1"))
        .min()
        .expect("nonempty cycle");
    Ok(GrandOrbitId { q, label })
}

/// All angles of co-period exactly `q`, sorted.
pub fn coperiodic_angles(q: u32) -> Result<Vec<Angle>, AngleError> {
    assert!(q >= 1, "co-period must be positive");
    let den = coperiodic_denominator(q);
    let den_u64 = den.to_u64().ok_or(AngleError::PeriodBound(q))?;
    let mut out = Vec::new();
    for m in 1..den_u64 {
        if m % 3 == 0 {
            continue;
        }
        let a = Angle::new(m, den.clone())?;
        if a.co_period()? == Some(q) {
            out.push(a);
        }
    }
    Ok(out)
}

/// All angles of period exactly `q`, sorted.
pub fn periodic_angles(q: u32) -> Result<Vec<Angle>, AngleError> {
    let d = cycle_denominator(q);
    let d_u64 = d.to_u64().ok_or(AngleError::PeriodBound(q))?;
    let mut out = Vec::new();
    for m in 0..d_u64 {
        let a = Angle::new(m, d.clone())?;
        if a.period()? == Some(q) {
            out.push(a);
        }
    }
    Ok(out)
}

/// Integer `Δ` with `0 <= Δ < 3d` and `Δ ≡ (η - θ)·3d`, `d = 3^q - 1`.
pub fn angular_distance(theta: &Angle, eta: &Angle, q: u32) -> Result<BigUint, AngleError> {
    let den = coperiodic_denominator(q);
    let (Some(a), Some(b)) = (theta.numerator_over(&den), eta.numerator_over(&den)) else {
        return Err(AngleError::DenominatorMismatch(q));
    };
    Ok((b + &den - a) % &den)
}
