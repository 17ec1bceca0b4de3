//! Orbit portraits: partitions of the period-`q` angles into classes whose
//! dynamic rays share a landing point.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::angle::{
    angular_distance, cycle_denominator, cycle_of, grand_orbit_id, twin, Angle, GrandOrbitId,
};
use crate::error::PortraitError;

/// A period-`q` orbit portrait. Only classes with two or more angles are
/// stored; the trivial portrait has no classes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OrbitPortrait {
    q: u32,
    classes: Vec<Vec<Angle>>,
}

impl OrbitPortrait {
    pub fn new(q: u32, classes: Vec<Vec<Angle>>) -> Result<Self, PortraitError> {
        let mut seen = std::collections::BTreeSet::new();
        for class in &classes {
            for a in class {
                if a.period()? != Some(q) {
                    return Err(PortraitError::NotPeriodic(a.to_string(), q));
                }
                if !seen.insert(a.clone()) {
                    return Err(PortraitError::Overlapping);
                }
            }
        }
        Ok(Self::normalized(q, classes))
    }

    /// Builds a portrait from numerators over `3^q - 1`.
    pub fn from_numerators(q: u32, classes: &[&[u64]]) -> Result<Self, PortraitError> {
        let d = cycle_denominator(q);
        let classes = classes
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&n| Angle::new(n, d.clone()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(q, classes)
    }

    pub fn trivial(q: u32) -> Self {
        Self { q, classes: Vec::new() }
    }

    fn normalized(q: u32, classes: Vec<Vec<Angle>>) -> Self {
        let mut classes: Vec<Vec<Angle>> = classes
            .into_iter()
            .map(|mut c| {
                c.sort();
                c.dedup();
                c
            })
            .filter(|c| c.len() >= 2)
            .collect();
        classes.sort();
        Self { q, classes }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn classes(&self) -> &[Vec<Angle>] {
        &self.classes
    }

    pub fn is_trivial(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class containing `a`, if `a` is in a nontrivial class.
    pub fn class_of(&self, a: &Angle) -> Option<&[Angle]> {
        self.classes
            .iter()
            .find(|c| c.binary_search(a).is_ok())
            .map(|c| c.as_slice())
    }

    /// True when every relation of `self` also holds in `other`.
    pub fn is_refined_by(&self, other: &OrbitPortrait) -> bool {
        self.classes.iter().all(|c| {
            other
                .class_of(&c[0])
                .is_some_and(|big| c.iter().all(|a| big.binary_search(a).is_ok()))
        })
    }

    /// Numerators over `3^q - 1`, class by class.
    pub fn numerators(&self) -> Vec<Vec<BigUint>> {
        let d = cycle_denominator(self.q);
        self.classes
            .iter()
            .map(|c| c.iter().map(|a| a.numerator_over(&d).expect("period-q angle")).collect())
            .collect()
    }

    pub fn to_json(&self) -> PortraitJson {
        PortraitJson {
            q: self.q,
            den: cycle_denominator(self.q).to_string(),
            classes: self
                .numerators()
                .into_iter()
                .map(|c| c.into_iter().map(|n| n.to_string()).collect())
                .collect(),
        }
    }
}

impl fmt::Display for OrbitPortrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .numerators()
            .iter()
            .map(|c| c.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("≃"))
            .collect();
        write!(f, "{{{}}}/{}", parts.join(", "), cycle_denominator(self.q))
    }
}

impl fmt::Debug for OrbitPortrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Wire form of a portrait. Numerators are decimal strings so that large
/// periods survive JSON round trips.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortraitJson {
    pub q: u32,
    pub den: String,
    pub classes: Vec<Vec<String>>,
}

impl TryFrom<PortraitJson> for OrbitPortrait {
    type Error = PortraitError;

    fn try_from(j: PortraitJson) -> Result<Self, Self::Error> {
        let den: BigUint = j
            .den
            .parse()
            .map_err(|_| PortraitError::Inconsistent(format!("bad denominator {}", j.den)))?;
        let classes = j
            .classes
            .iter()
            .map(|c| {
                c.iter()
                    .map(|n| {
                        let n: BigUint = n.parse().map_err(|_| {
                            PortraitError::Inconsistent(format!("bad numerator {n}"))
                        })?;
                        Ok(Angle::new(n, den.clone())?)
                    })
                    .collect::<Result<Vec<_>, PortraitError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        OrbitPortrait::new(j.q, classes)
    }
}

/// Union-find over a growing set of angles.
#[derive(Default)]
struct Partition {
    index: BTreeMap<Angle, usize>,
    parent: Vec<usize>,
}

impl Partition {
    fn id(&mut self, a: &Angle) -> usize {
        if let Some(&i) = self.index.get(a) {
            return i;
        }
        let i = self.parent.len();
        self.index.insert(a.clone(), i);
        self.parent.push(i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: &Angle, b: &Angle) -> bool {
        let (i, j) = (self.id(a), self.id(b));
        let (ri, rj) = (self.find(i), self.find(j));
        if ri == rj {
            false
        } else {
            self.parent[ri.max(rj)] = ri.min(rj);
            true
        }
    }

    fn classes(&mut self) -> Vec<Vec<Angle>> {
        let entries: Vec<(Angle, usize)> =
            self.index.iter().map(|(a, &i)| (a.clone(), i)).collect();
        let mut groups: BTreeMap<usize, Vec<Angle>> = BTreeMap::new();
        for (a, i) in entries {
            let r = self.find(i);
            groups.entry(r).or_default().push(a);
        }
        groups.into_values().collect()
    }
}

/// True when the two classes interleave on the circle.
fn linked(a: &[Angle], b: &[Angle]) -> bool {
    // `a` is sorted; b is unlinked from a iff all of b lies in one gap of a.
    let gap = |x: &Angle| a.partition_point(|y| y < x) % a.len();
    let first = gap(&b[0]);
    b.iter().any(|x| gap(x) != first)
}

pub fn is_unlinked(p: &OrbitPortrait) -> bool {
    let cs = &p.classes;
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            if linked(&cs[i], &cs[j]) {
                return false;
            }
        }
    }
    true
}

fn image(class: &[Angle], times: u32) -> Vec<Angle> {
    class
        .iter()
        .map(|a| {
            let mut x = a.clone();
            for _ in 0..times {
                x = x.triple();
            }
            x
        })
        .collect()
}

fn sorted(mut v: Vec<Angle>) -> Vec<Angle> {
    v.sort();
    v
}

/// Unlinked, tripling maps classes onto classes, and the return map of each
/// class preserves its cyclic order.
pub fn is_formal(p: &OrbitPortrait) -> bool {
    if !is_unlinked(p) {
        return false;
    }
    for class in &p.classes {
        let img = sorted(image(class, 1));
        if !p.classes.iter().any(|c| *c == img) {
            return false;
        }
        // Return map: smallest r with 3^r C = C as sets.
        let mut r = 1;
        while sorted(image(class, r)) != *class {
            r += 1;
            if r > p.q {
                return false;
            }
        }
        let mapped = image(class, r);
        let n = class.len();
        let start = class.iter().position(|a| *a == mapped[0]).expect("class is invariant");
        if (0..n).any(|i| mapped[i] != class[(start + i) % n]) {
            return false;
        }
    }
    true
}

/// Smallest relation containing both portraits that is invariant under
/// tripling and has no linked classes.
pub fn amalgamate(p1: &OrbitPortrait, p2: &OrbitPortrait) -> Result<OrbitPortrait, PortraitError> {
    if p1.q != p2.q {
        return Err(PortraitError::PeriodMismatch(p1.q, p2.q));
    }
    let mut part = Partition::default();
    for class in p1.classes.iter().chain(&p2.classes) {
        for a in &class[1..] {
            part.union(&class[0], a);
        }
    }
    loop {
        let mut changed = false;
        let classes: Vec<Vec<Angle>> = part.classes().into_iter().filter(|c| c.len() > 1).collect();
        for class in &classes {
            let img = image(class, 1);
            for a in &img[1..] {
                changed |= part.union(&img[0], a);
            }
        }
        let mut classes: Vec<Vec<Angle>> =
            part.classes().into_iter().filter(|c| c.len() > 1).collect();
        for c in classes.iter_mut() {
            c.sort();
        }
        for i in 0..classes.len() {
            for j in i + 1..classes.len() {
                if linked(&classes[i], &classes[j]) {
                    changed |= part.union(&classes[i][0], &classes[j][0]);
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(OrbitPortrait::normalized(p1.q, part.classes()))
}

pub fn compatible(p1: &OrbitPortrait, p2: &OrbitPortrait) -> Result<bool, PortraitError> {
    Ok(is_formal(&amalgamate(p1, p2)?))
}

/// Number of unordered pairs of distinct equivalent angles.
pub fn size(p: &OrbitPortrait) -> usize {
    p.classes.iter().map(|c| c.len() * (c.len() - 1) / 2).sum()
}

/// Grand orbit whose dynamic rays jump when crossing the `psi` parameter ray.
pub fn jump_set(psi: &Angle) -> Result<GrandOrbitId, PortraitError> {
    let q = psi
        .co_period()?
        .ok_or_else(|| crate::error::AngleError::NotCoperiodic(psi.to_string()))?;
    Ok(grand_orbit_id(psi, q)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Inactive,
    Primary,
    Secondary,
}

pub fn classify_edge(side1: &OrbitPortrait, side2: &OrbitPortrait) -> EdgeKind {
    if side1 == side2 {
        EdgeKind::Inactive
    } else if side1.is_refined_by(side2) || side2.is_refined_by(side1) {
        EdgeKind::Primary
    } else {
        EdgeKind::Secondary
    }
}

fn require_coperiod(a: &Angle, q: u32) -> Result<Vec<Angle>, PortraitError> {
    match a.co_period()? {
        Some(c) if c == q => Ok(cycle_of(a, q)?),
        _ => Err(crate::error::AngleError::PeriodMismatch { angle: a.to_string(), q }.into()),
    }
}

/// Joins the `j`-th members of each cycle, for every `j`.
fn join_cycles(q: u32, cycles: &[&[Angle]]) -> OrbitPortrait {
    let mut part = Partition::default();
    for j in 0..q as usize {
        for c in cycles {
            part.id(&c[j]);
        }
        for c in &cycles[1..] {
            part.union(&cycles[0][j], &c[j]);
        }
    }
    OrbitPortrait::normalized(q, part.classes())
}

fn distinct(angles: &[&Angle]) -> Result<(), PortraitError> {
    for i in 0..angles.len() {
        for j in i + 1..angles.len() {
            if angles[i] == angles[j] {
                return Err(PortraitError::Degenerate);
            }
        }
    }
    Ok(())
}

/// Faces around a parabolic vertex, numbered counterclockwise from the face
/// holding the Type D component rooted there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalModel {
    pub q: u32,
    pub angles: Vec<Angle>,
    pub faces: Vec<OrbitPortrait>,
    pub background: OrbitPortrait,
}

impl LocalModel {
    fn with_background(mut self, background: Option<&OrbitPortrait>) -> Result<Self, PortraitError> {
        if let Some(bg) = background {
            for f in self.faces.iter_mut() {
                *f = amalgamate(f, bg)?;
            }
            self.background = bg.clone();
        }
        Ok(self)
    }
}

pub fn two_ray_faces(
    alpha: &Angle,
    beta: &Angle,
    q: u32,
    background: Option<&OrbitPortrait>,
) -> Result<LocalModel, PortraitError> {
    distinct(&[alpha, beta])?;
    let ca = require_coperiod(alpha, q)?;
    let cb = require_coperiod(beta, q)?;
    LocalModel {
        q,
        angles: vec![alpha.clone(), beta.clone()],
        faces: vec![join_cycles(q, &[&ca, &cb]), OrbitPortrait::trivial(q)],
        background: OrbitPortrait::trivial(q),
    }
    .with_background(background)
}

pub fn three_ray_faces(
    alpha: &Angle,
    beta: &Angle,
    gamma: &Angle,
    q: u32,
    background: Option<&OrbitPortrait>,
) -> Result<LocalModel, PortraitError> {
    distinct(&[alpha, beta, gamma])?;
    let (ca, cb, cg) = (
        require_coperiod(alpha, q)?,
        require_coperiod(beta, q)?,
        require_coperiod(gamma, q)?,
    );
    let (ga, gb, gg) = (
        grand_orbit_id(alpha, q)?,
        grand_orbit_id(beta, q)?,
        grand_orbit_id(gamma, q)?,
    );
    if ga == gb || gb == gg || ga == gg {
        return Err(PortraitError::GrandOrbitClash(
            "three-ray case needs three distinct grand orbits".into(),
        ));
    }
    let f1 = join_cycles(q, &[&ca, &cb, &cg]);
    let f2 = join_cycles(q, &[&ca, &cg]);
    let f3 = join_cycles(q, &[&cb, &cg]);
    if amalgamate(&f2, &f3)? != f1 {
        return Err(PortraitError::Inconsistent(
            "number one face is not the amalgamation of the side faces".into(),
        ));
    }
    LocalModel {
        q,
        angles: vec![alpha.clone(), beta.clone(), gamma.clone()],
        faces: vec![f1, f2, f3],
        background: OrbitPortrait::trivial(q),
    }
    .with_background(background)
}

/// Four-ray model together with every shift `k` realizing the cycle
/// identities `γ_j = α_{j+k}`, `β_j = δ_{j+k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourRayModel {
    pub model: LocalModel,
    pub shifts: Vec<u32>,
}

pub fn four_ray_faces(
    alpha: &Angle,
    beta: &Angle,
    gamma: &Angle,
    delta: &Angle,
    q: u32,
    background: Option<&OrbitPortrait>,
) -> Result<FourRayModel, PortraitError> {
    distinct(&[alpha, beta, gamma, delta])?;
    let (ca, cb, cg, cd) = (
        require_coperiod(alpha, q)?,
        require_coperiod(beta, q)?,
        require_coperiod(gamma, q)?,
        require_coperiod(delta, q)?,
    );
    let (ga, gb, gg, gd) = (
        grand_orbit_id(alpha, q)?,
        grand_orbit_id(beta, q)?,
        grand_orbit_id(gamma, q)?,
        grand_orbit_id(delta, q)?,
    );
    if !(ga == gg && gb == gd && ga != gb) {
        return Err(PortraitError::GrandOrbitClash(
            "four-ray case needs ((α)) = ((γ)) ≠ ((β)) = ((δ))".into(),
        ));
    }
    let qs = q as usize;
    let shifts: Vec<u32> = (1..qs)
        .filter(|&k| (0..qs).all(|j| cg[j] == ca[(j + k) % qs] && cb[j] == cd[(j + k) % qs]))
        .map(|k| k as u32)
        .collect();
    if shifts.is_empty() {
        return Err(PortraitError::NoShift);
    }
    let f1 = join_cycles(q, &[&ca, &cb, &cg, &cd]);
    let f2 = join_cycles(q, &[&ca, &cg]);
    let f4 = join_cycles(q, &[&cb, &cd]);
    let f3 = amalgamate(&join_cycles(q, &[&ca, &cd]), &join_cycles(q, &[&cb, &cg]))?;
    if amalgamate(&f2, &f4)? != f1 {
        return Err(PortraitError::Inconsistent(
            "number one face is not the amalgamation of the side faces".into(),
        ));
    }
    let model = LocalModel {
        q,
        angles: vec![alpha.clone(), beta.clone(), gamma.clone(), delta.clone()],
        faces: vec![f1, f2, f3, f4],
        background: OrbitPortrait::trivial(q),
    }
    .with_background(background)?;
    Ok(FourRayModel { model, shifts })
}

/// Predicted angles at the opposite root of a Type A component, with the
/// angular-width bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ACentered {
    pub alpha: Angle,
    pub beta: Angle,
    pub gamma: Angle,
    pub width: BigUint,
    pub width_prime: BigUint,
    /// `Δ(γ, α)`, which must equal `d - w - w'`.
    pub gap: BigUint,
}

pub fn a_centered_check(
    alpha: &Angle,
    beta: &Angle,
    gamma: &Angle,
    q: u32,
) -> Result<ACentered, PortraitError> {
    three_ray_faces(alpha, beta, gamma, q, None)?;
    let (a2, b2, g2) = (twin(beta)?, twin(gamma)?, twin(alpha)?);
    let w = angular_distance(alpha, beta, q)?;
    let w2 = angular_distance(&a2, &b2, q)?;
    let gap = angular_distance(gamma, alpha, q)?;
    let d = cycle_denominator(q);
    if &w + &w2 > d || gap != &d - &w - &w2 {
        return Err(PortraitError::Inconsistent(format!(
            "width identity fails: Δ(γ,α) = {gap}, d - w - w' = {d} - {w} - {w2}"
        )));
    }
    Ok(ACentered {
        alpha: a2,
        beta: b2,
        gamma: g2,
        width: w,
        width_prime: w2,
        gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjacentCondition {
    Condition1,
    Condition2,
    Condition3,
}

pub fn adjacent_three_ray_condition(
    left: (&Angle, &Angle, &Angle),
    right: (&Angle, &Angle, &Angle),
    q: u32,
) -> Result<AdjacentCondition, PortraitError> {
    let g = |a: &Angle| grand_orbit_id(a, q);
    let (a, b, c) = (g(left.0)?, g(left.1)?, g(left.2)?);
    let (a2, b2, c2) = (g(right.0)?, g(right.1)?, g(right.2)?);
    if a == c2 && c == b2 && a != c {
        Ok(AdjacentCondition::Condition1)
    } else if c == c2 && a == b2 && c != a {
        Ok(AdjacentCondition::Condition2)
    } else if c == c2 && (a == a2 || b == b2) {
        Ok(AdjacentCondition::Condition3)
    } else {
        Err(PortraitError::NoCondition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(q: u32, classes: &[&[u64]]) -> OrbitPortrait {
        OrbitPortrait::from_numerators(q, classes).unwrap()
    }

    fn a(n: u64, d: u64) -> Angle {
        Angle::frac(n, d)
    }

    #[test]
    fn construction_checks() {
        assert!(matches!(
            OrbitPortrait::from_numerators(2, &[&[1, 3], &[3, 6]]),
            Err(PortraitError::Overlapping)
        ));
        assert!(matches!(
            OrbitPortrait::from_numerators(2, &[&[0, 4]]),
            Err(PortraitError::NotPeriodic(..))
        ));
        assert_eq!(p(2, &[&[6, 2], &[3]]).to_string(), "{2≃6}/8");
    }

    #[test]
    fn unlinked_examples() {
        assert!(!is_unlinked(&p(2, &[&[1, 3], &[2, 6]])));
        assert!(is_unlinked(&p(2, &[&[1, 2], &[3, 6]])));
        assert!(is_unlinked(&OrbitPortrait::trivial(2)));
    }

    #[test]
    fn formal_examples() {
        assert!(is_formal(&p(2, &[&[1, 2, 3, 6]])));
        assert!(!is_formal(&p(2, &[&[1, 2, 3, 5, 6, 7]])));
        assert!(is_formal(&p(2, &[&[2, 7], &[5, 6]])));
        // Onto-a-class failure: 1/8 ≃ 3/8 maps to itself, 2/8 alone is fine,
        // but {1≃2} maps to {3≃6} which is absent.
        assert!(!is_formal(&p(2, &[&[1, 2]])));
    }

    #[test]
    fn amalgamation_examples() {
        let o1 = p(2, &[&[1, 3]]);
        let o2 = p(2, &[&[2, 6]]);
        let o3 = p(2, &[&[5, 7]]);
        let j12 = amalgamate(&o1, &o2).unwrap();
        assert_eq!(j12, p(2, &[&[1, 2, 3, 6]]));
        assert!(compatible(&o1, &o2).unwrap());
        assert!(compatible(&o1, &o3).unwrap());
        assert!(compatible(&o2, &o3).unwrap());
        assert!(!is_formal(&amalgamate(&j12, &o3).unwrap()));
        assert_eq!(amalgamate(&o1, &OrbitPortrait::trivial(2)).unwrap(), o1);
        assert!(matches!(
            amalgamate(&o1, &OrbitPortrait::trivial(3)),
            Err(PortraitError::PeriodMismatch(2, 3))
        ));
    }

    #[test]
    fn sizes() {
        assert_eq!(size(&p(2, &[&[1, 2, 3, 6]])), 6);
        assert_eq!(size(&p(2, &[&[1, 2], &[3, 6]])), 2);
        assert_eq!(size(&OrbitPortrait::trivial(2)), 0);
    }

    #[test]
    fn jump_sets() {
        assert_eq!(jump_set(&a(11, 24)).unwrap(), grand_orbit_id(&a(1, 8), 2).unwrap());
        assert_eq!(jump_set(&a(7, 12)).unwrap(), grand_orbit_id(&a(1, 4), 2).unwrap());
        assert_eq!(jump_set(&a(19, 24)).unwrap(), jump_set(&a(11, 24)).unwrap());
        assert!(jump_set(&a(1, 8)).is_err());
    }

    #[test]
    fn edge_kinds() {
        assert_eq!(
            classify_edge(&OrbitPortrait::trivial(1), &p(1, &[&[0, 1]])),
            EdgeKind::Primary
        );
        let x = p(2, &[&[1, 3], &[5, 7]]);
        assert_eq!(classify_edge(&x, &x), EdgeKind::Inactive);
        assert_eq!(classify_edge(&p(2, &[&[2, 6]]), &p(2, &[&[1, 3]])), EdgeKind::Secondary);
    }

    #[test]
    fn two_ray_examples() {
        let m = two_ray_faces(&a(53, 78), &a(55, 78), 3, None).unwrap();
        assert_eq!(m.faces[0], p(3, &[&[1, 3, 9]]));
        assert!(m.faces[1].is_trivial());
        let m = two_ray_faces(&a(56, 78), &a(61, 78), 3, None).unwrap();
        assert_eq!(m.faces[0].classes().len(), 3);
        assert!(m.faces[0].classes().iter().all(|c| c.len() == 2));
        assert!(matches!(
            two_ray_faces(&a(53, 78), &a(53, 78), 3, None),
            Err(PortraitError::Degenerate)
        ));
    }

    #[test]
    fn three_ray_examples() {
        let m = three_ray_faces(&a(20, 78), &a(22, 78), &a(17, 78), 3, None).unwrap();
        assert_eq!(m.faces[0].classes().len(), 3);
        assert!(m.faces[0].class_of(&a(20, 26)).is_some());
        let m = three_ray_faces(&a(82, 240), &a(83, 240), &a(28, 240), 4, None).unwrap();
        assert_eq!(m.faces[0], p(4, &[&[3, 28, 2], &[9, 4, 6], &[27, 12, 18], &[1, 36, 54]]));
        // 61/726 and 65/726 share a grand orbit.
        assert!(matches!(
            three_ray_faces(&a(61, 726), &a(65, 726), &a(574, 726), 5, None),
            Err(PortraitError::GrandOrbitClash(_))
        ));
    }

    #[test]
    fn four_ray_examples() {
        let f = four_ray_faces(&a(10, 24), &a(11, 24), &a(14, 24), &a(17, 24), 2, None).unwrap();
        assert_eq!(f.shifts, vec![1]);
        let faces = &f.model.faces;
        assert_eq!(faces[0], p(2, &[&[1, 2, 3, 6]]));
        assert_eq!(faces[1], p(2, &[&[2, 6]]));
        assert_eq!(faces[2], p(2, &[&[1, 2], &[3, 6]]));
        assert_eq!(faces[3], p(2, &[&[1, 3]]));
        let kinds: Vec<EdgeKind> =
            (0..4).map(|i| classify_edge(&faces[i], &faces[(i + 1) % 4])).collect();
        assert_eq!(
            kinds,
            vec![EdgeKind::Primary, EdgeKind::Secondary, EdgeKind::Secondary, EdgeKind::Primary]
        );

        let g = four_ray_faces(&a(91, 240), &a(92, 240), &a(19, 240), &a(28, 240), 4, None).unwrap();
        let quad = g.model.faces[0].class_of(&a(11, 80)).unwrap().to_vec();
        for n in [11, 12, 19, 28] {
            assert!(quad.contains(&a(n, 80)));
        }
        assert!(matches!(
            four_ray_faces(&a(10, 24), &a(14, 24), &a(10, 24).add(&a(1, 24)), &a(17, 24), 2, None),
            Err(PortraitError::GrandOrbitClash(_))
        ));
    }

    #[test]
    fn a_centered_examples() {
        let r = a_centered_check(&a(43, 78), &a(44, 78), &a(19, 78), 3).unwrap();
        assert_eq!((r.alpha, r.beta, r.gamma), (a(70, 78), a(71, 78), a(17, 78)));
        assert_eq!(r.gap, BigUint::from(24u32));
        let r = a_centered_check(&a(64, 726), &a(65, 726), &a(568, 726), 5).unwrap();
        assert_eq!(
            (twin(&a(64, 726)).unwrap(), twin(&a(65, 726)).unwrap(), twin(&a(568, 726)).unwrap()),
            (a(548, 726), a(307, 726), a(326, 726))
        );
        assert_eq!((r.alpha, r.beta, r.gamma), (a(307, 726), a(326, 726), a(548, 726)));
    }

    #[test]
    fn adjacency_conditions() {
        let f = |n: u64, d| a(n, d);
        assert_eq!(
            adjacent_three_ray_condition(
                (&f(70, 78), &f(71, 78), &f(17, 78)),
                (&f(76, 78), &f(77, 78), &f(2, 78)),
                3
            )
            .unwrap(),
            AdjacentCondition::Condition1
        );
        assert_eq!(
            adjacent_three_ray_condition(
                (&f(46, 78), &f(47, 78), &f(22, 78)),
                (&f(49, 78), &f(50, 78), &f(68, 78)),
                3
            )
            .unwrap(),
            AdjacentCondition::Condition2
        );
        assert_eq!(
            adjacent_three_ray_condition(
                (&f(518, 726), &f(520, 726), &f(515, 726)),
                (&f(548, 726), &f(568, 726), &f(521, 726)),
                5
            )
            .unwrap(),
            AdjacentCondition::Condition3
        );
    }

    #[test]
    fn json_round_trip() {
        let x = p(2, &[&[1, 2, 3, 6]]);
        let j = serde_json::to_string(&x.to_json()).unwrap();
        assert_eq!(j, r#"{"q":2,"den":"8","classes":[["1","2","3","6"]]}"#);
        let back: PortraitJson = serde_json::from_str(&j).unwrap();
        assert_eq!(OrbitPortrait::try_from(back).unwrap(), x);
    }
}
