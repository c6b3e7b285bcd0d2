//! Growth profiles, doubling ratios, greedy packings and orbit enumeration.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::displacement::Isometry;
use crate::error::{Error, Result};
use crate::graph::{CayleySpace, Word};
use crate::hplane::golden_section_min;
use crate::metric::MetricSpace;
use crate::report::{BoundReport, Direction, FORMULA_TOL};

/// Upper limit on the number of words an orbit enumeration may visit.
pub const ORBIT_WORD_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProfile {
    pub points: Vec<(f64, u64)>,
    /// Least-squares slope of ln count against R over the top half of the grid.
    pub slope_estimate: f64,
    /// ln count(R_max) / R_max.
    pub last_point_estimate: f64,
}

impl GrowthProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,count\n");
        for (r, c) in &self.points {
            let _ = writeln!(s, "{r},{c}");
        }
        s
    }
}

/// Builds a profile from a counting function evaluated on an increasing grid.
pub fn growth_profile<F>(count: F, grid: &[f64]) -> Result<GrowthProfile>
where
    F: Fn(f64) -> Result<u64> + Sync,
{
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("growth profile needs at least two grid points".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("growth grid must be strictly increasing".into()));
    }
    let counts: Vec<u64> = grid.par_iter().map(|&r| count(r)).collect::<Result<_>>()?;
    let points: Vec<(f64, u64)> = grid.iter().copied().zip(counts).collect();
    let tail = &points[(points.len() / 2).min(points.len() - 2)..];
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| (p.1 as f64).ln()).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * ((p.1 as f64).ln() - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let &(r_max, c_max) = points.last().expect("nonempty");
    Ok(GrowthProfile { slope_estimate: sxy / sxx, last_point_estimate: (c_max as f64).ln() / r_max, points })
}

/// Closed-ball profile of a Cayley graph at the identity for R = 0..=r_max.
pub fn cayley_profile(space: &CayleySpace, r_max: u64) -> Result<GrowthProfile> {
    let grid: Vec<f64> = (0..=r_max).map(|r| r as f64).collect();
    let e = Word::identity();
    growth_profile(|r| space.ball_count(&e, r as u64), &grid)
}

/// count(2R) / count(R) for a counting function of closed balls.
pub fn doubling_ratio<F>(count: F, radius: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<u64>,
{
    let den = count(radius)?;
    if den == 0 {
        return Err(Error::Domain(format!("empty ball at radius {radius}")));
    }
    Ok(count(2.0 * radius)? as f64 / den as f64)
}

/// Closed-ball count of a Cayley graph, radius floored.
pub fn closed_count(space: &CayleySpace, x: &Word, r: f64) -> Result<u64> {
    if r < 0.0 {
        return Ok(0);
    }
    space.ball_count(x, r.floor() as u64)
}

/// Open-ball count of a Cayley graph: vertices at distance < r.
pub fn open_count(space: &CayleySpace, x: &Word, r: f64) -> Result<u64> {
    if r <= 0.0 {
        return Ok(0);
    }
    space.ball_count(x, (r.ceil() - 1.0) as u64)
}

/// Doubling ratio count(2R)/count(R) ≤ 3⁴·e^{(13/2)HR}, guarded by R ≥ 10(D+2δ).
pub fn check_cocompact_doubling(ratio: f64, radius: f64, entropy: f64, diameter: f64, delta: f64) -> BoundReport {
    let rhs = 81.0 * (6.5 * entropy * radius).exp();
    let anchor = "count(2R)/count(R) <= 3^4 exp(13 H R / 2) for R >= 10 (D + 2 delta)";
    let guard = radius >= 10.0 * (diameter + 2.0 * delta);
    let report = if guard {
        BoundReport::evaluate("cocompact-doubling", anchor, ratio, rhs, Direction::Le, false, FORMULA_TOL)
    } else {
        BoundReport::vacuous("cocompact-doubling", anchor, ratio, rhs, Direction::Le, false)
    };
    report.with_inputs([("R", radius), ("H", entropy), ("D", diameter), ("delta", delta)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    pub centers: Vec<Word>,
}

impl Packing {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

/// Greedy maximal packing of B(x, k·r0/2) by disjoint balls of radius r0/2
/// centred at vertices. A ball B(c, r0/2) fits when d(x,c) ≤ (k−1)r0/2 and
/// two balls are disjoint when their centres are at distance ≥ r0. Vertices
/// are scanned in BFS order.
pub fn packing_number(space: &CayleySpace, x: &Word, r0: f64, k: u32) -> Result<Packing> {
    if k < 5 {
        return Err(Error::InvalidParameter(format!("packing factor k = {k} must be at least 5")));
    }
    if !(r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("packing scale must be positive, got {r0}")));
    }
    let reach = (k as f64 - 1.0) * r0 / 2.0;
    let ball = space.freeze(x, reach.floor() as u64)?;
    let mut centers: Vec<Word> = Vec::new();
    for (v, _) in &ball.vertices {
        let mut free = true;
        for c in &centers {
            if (space.word_distance(v, c)? as f64) < r0 {
                free = false;
                break;
            }
        }
        if free {
            centers.push(v.clone());
        }
    }
    Ok(Packing { centers })
}

/// count(B̄(x,(k−1)r/2)) / count(B(x,r)) ≤ N ≤ count(B(x,kr/2)) / count(B(x,r/2))
/// for the greedy packing number N, as a lower and an upper report.
pub fn check_packing_doubling_sandwich(space: &CayleySpace, x: &Word, r: f64, k: u32) -> Result<[BoundReport; 2]> {
    let n = packing_number(space, x, r, k)?.count() as f64;
    let kf = k as f64;
    let lower = closed_count(space, x, (kf - 1.0) * r / 2.0)? as f64 / open_count(space, x, r)? as f64;
    let upper = open_count(space, x, kf * r / 2.0)? as f64 / open_count(space, x, r / 2.0)? as f64;
    let inputs = [("r", r), ("k", kf), ("N", n)];
    Ok([
        BoundReport::evaluate(
            "packing-lower",
            "#B'(x,(k-1)r/2) / #B(x,r) <= N",
            lower,
            n,
            Direction::Le,
            false,
            FORMULA_TOL,
        )
        .with_inputs(inputs),
        BoundReport::evaluate(
            "packing-upper",
            "N <= #B(x,kr/2) / #B(x,r/2)",
            n,
            upper,
            Direction::Le,
            false,
            FORMULA_TOL,
        )
        .with_inputs(inputs),
    ])
}

/// Radii r0 + i·step up to r1 inclusive.
fn radius_grid(r0: f64, r1: f64, step: f64) -> Vec<f64> {
    let n = ((r1 - r0) / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| r0 + i as f64 * step).collect();
    if g.last().is_some_and(|&r| r < r1) {
        g.push(r1);
    }
    g
}

/// Doubling of a sub-orbit: if the full orbit is C-doubling (open balls) on
/// [r0/2, 5r1/4], then #B̄'(x,2r) / #B'(x,r) ≤ C³ for r ∈ [r0, r1].
///
/// When `c` is `None` the smallest C valid on a grid of step `step` is used.
/// The sub-orbit is enumerated with word-length cap `w`; a truncated
/// enumeration is a precondition error.
#[allow(clippy::too_many_arguments)]
pub fn check_subgroup_doubling(
    space: &CayleySpace,
    x: &Word,
    subgroup: &[Word],
    r0: f64,
    r1: f64,
    c: Option<f64>,
    w: usize,
    step: f64,
) -> Result<BoundReport> {
    if !(r0 > 0.0) || r1 < r0 {
        return Err(Error::InvalidParameter(format!("need 0 < r0 <= r1, got r0 = {r0}, r1 = {r1}")));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidParameter("grid step must be positive".into()));
    }
    let full_ratio = |r: f64| -> Result<f64> { Ok(open_count(space, x, 2.0 * r)? as f64 / open_count(space, x, r)? as f64) };
    let measured_c = radius_grid(r0 / 2.0, 1.25 * r1, step)
        .into_iter()
        .map(full_ratio)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let c = c.unwrap_or(measured_c);
    let action = GroupAction::new(subgroup.iter().cloned().map(crate::displacement::Translation).collect(), None)?;
    let orbit = orbit_enumerate(space, &action, x, 2.0 * r1, w)?;
    if orbit.truncated {
        return Err(Error::Precondition(format!("sub-orbit enumeration truncated at word length {w}")));
    }
    let sub_count = |r: f64, closed: bool| {
        orbit.entries.iter().filter(|e| if closed { e.displacement <= r } else { e.displacement < r }).count() as f64
    };
    let sub_ratio =
        radius_grid(r0, r1, step).into_iter().map(|r| sub_count(2.0 * r, true) / sub_count(r, false)).fold(0.0, f64::max);
    let anchor = "sub-orbit #B'(x,2r)/#B(x,r) <= C^3 on [r0, r1] given C-doubling on [r0/2, 5 r1/4]";
    let guard = measured_c <= c;
    let report = if guard {
        BoundReport::evaluate("subgroup-doubling", anchor, sub_ratio, c.powi(3), Direction::Le, false, FORMULA_TOL)
    } else {
        BoundReport::vacuous("subgroup-doubling", anchor, sub_ratio, c.powi(3), Direction::Le, false)
    };
    Ok(report.with_inputs([("r0", r0), ("r1", r1), ("C", c), ("C_full_measured", measured_c)]))
}

/// Generators of a group acting on a space, with labels for reports.
#[derive(Debug, Clone)]
pub struct GroupAction<I> {
    pub generators: Vec<I>,
    pub labels: Vec<String>,
    /// Set when reduced word length equals displacement (the standard
    /// generators of a free group on its tree); the enumeration is then exact.
    pub word_metric: bool,
}

impl<I> GroupAction<I> {
    /// Labels default to a, b, c, ...
    pub fn new(generators: Vec<I>, labels: Option<Vec<String>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidParameter("a group action needs at least one generator".into()));
        }
        let labels = labels.unwrap_or_else(|| crate::graph::generator_letters(generators.len()).step_by(2).map(|g| Word::letter(g).to_string()).collect());
        if labels.len() != generators.len() {
            return Err(Error::InvalidParameter("one label per generator".into()));
        }
        Ok(GroupAction { generators, labels, word_metric: false })
    }
}

impl GroupAction<crate::displacement::Translation> {
    /// The standard generators of a free group acting on its own tree.
    pub fn free_tree(space: &CayleySpace) -> Result<Self> {
        if !space.is_free() {
            return Err(Error::InvalidParameter("free_tree needs a free group".into()));
        }
        let gens = (1..=space.rank() as i32).map(|g| crate::displacement::Translation(Word::letter(g))).collect();
        let mut action = GroupAction::new(gens, None)?;
        action.word_metric = true;
        Ok(action)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitEntry<P> {
    /// Reduced word in the action's generators (letter ±(i+1) for generator i).
    pub word: Word,
    pub point: P,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitEnumeration<P> {
    pub radius: f64,
    pub cap: usize,
    /// Length-lexicographic order with a < a⁻¹ < b < b⁻¹ < ...
    pub entries: Vec<OrbitEntry<P>>,
    /// Some orbit point within the radius may be missing.
    pub truncated: bool,
}

impl<P> OrbitEnumeration<P> {
    pub fn count_within(&self, r: f64) -> usize {
        self.entries.iter().filter(|e| e.displacement <= r).count()
    }
}

/// Visits every reduced word of length ≤ w and keeps those with d(x, γx) ≤ R.
///
/// The result is flagged as truncated when a word of length w still has
/// displacement ≤ R + max_i d(x, s_i x), since longer words may then land in
/// the ball. For word-metric actions the flag is exact: set iff w < R.
pub fn orbit_enumerate<S, I>(space: &S, action: &GroupAction<I>, x: &S::Point, radius: f64, w: usize) -> Result<OrbitEnumeration<S::Point>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    if w == 0 {
        return Err(Error::InvalidParameter("word-length cap must be at least 1".into()));
    }
    let k = action.generators.len() as f64;
    let words_total = if k == 1.0 { 2.0 * w as f64 + 1.0 } else { 1.0 + 2.0 * k * ((2.0 * k - 1.0).powi(w as i32) - 1.0) / (2.0 * k - 2.0) };
    if words_total > ORBIT_WORD_BUDGET as f64 {
        return Err(Error::Budget(format!("{words_total:.0} words exceed the orbit budget of {ORBIT_WORD_BUDGET}")));
    }
    let mut letters: Vec<(i32, I)> = Vec::new();
    for (i, g) in action.generators.iter().enumerate() {
        letters.push((i as i32 + 1, g.clone()));
        letters.push((-(i as i32 + 1), g.inverse(space)));
    }
    let max_gen = action
        .generators
        .iter()
        .map(|g| space.distance(x, &g.apply(space, x)?))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut entries = vec![OrbitEntry { word: Word::identity(), point: x.clone(), displacement: 0.0 }];
    let mut layer: Vec<(Word, I)> = vec![(Word::identity(), I::identity(space))];
    let mut truncated = false;
    for len in 1..=w {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for (word, g) in &layer {
            for (l, s) in &letters {
                if word.letters().last() == Some(&-l) {
                    continue;
                }
                let mut nw = word.clone();
                nw.0.push(*l);
                next.push((nw, g.compose(space, s)));
            }
        }
        let measured: Vec<Result<(S::Point, f64)>> = next
            .par_iter()
            .map(|(_, g)| {
                let p = g.apply(space, x)?;
                let d = space.distance(x, &p)?;
                Ok((p, d))
            })
            .collect();
        for ((word, _), m) in next.iter().zip(measured) {
            let (point, displacement) = m?;
            if len == w && !action.word_metric && displacement <= radius + max_gen {
                truncated = true;
            }
            if displacement <= radius {
                entries.push(OrbitEntry { word: word.clone(), point, displacement });
            }
        }
        layer = next;
    }
    if action.word_metric {
        truncated = (w as f64) < radius;
    }
    Ok(OrbitEnumeration { radius, cap: w, entries, truncated })
}

/// Smallest displacement over nontrivial words of length ≤ w, first in
/// length-lexicographic order on ties. Words acting as the identity are
/// skipped. An upper bound on the systole at x.
pub fn systole_estimate<S, I>(space: &S, action: &GroupAction<I>, x: &S::Point, w: usize) -> Result<(f64, Word)>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    let orbit = orbit_enumerate(space, action, x, f64::INFINITY, w)?;
    let mut best: Option<(f64, Word)> = None;
    for e in orbit.entries.iter().skip(1) {
        if best.as_ref().is_some_and(|b| e.displacement >= b.0) {
            continue;
        }
        let g = e.word.letters().iter().fold(I::identity(space), |acc, &l| {
            let s = &action.generators[(l.unsigned_abs() - 1) as usize];
            acc.compose(space, &if l > 0 { s.clone() } else { s.inverse(space) })
        });
        if !g.is_identity(space) {
            best = Some((e.displacement, e.word.clone()));
        }
    }
    best.ok_or_else(|| Error::Domain("every enumerated word acts trivially".into()))
}

/// sup over a > 0 of Max[1/(l1 + a·l2), 1/(l2 + a·l1)]·((1+a)ln(1+a) − a·ln a),
/// a lower bound on the entropy of a free semigroup whose generators displace
/// a point by l1 and l2.
pub fn free_semigroup_entropy_lower(l1: f64, l2: f64) -> Result<f64> {
    if !(l1 > 0.0 && l2 > 0.0) || !l1.is_finite() || !l2.is_finite() {
        return Err(Error::InvalidParameter(format!("lengths must be positive and finite, got {l1}, {l2}")));
    }
    let g = |a: f64| (1.0 + a) * a.ln_1p() - a * a.ln();
    let branch = |p: f64, q: f64| {
        // a = e^t
        let f = move |t: f64| {
            let a = t.exp();
            -(g(a) / (p + a * q))
        };
        let n = 4000;
        let (lo, hi) = (-60.0, 60.0);
        let h = (hi - lo) / n as f64;
        let best = (0..=n).map(|i| lo + i as f64 * h).min_by(|a, b| f(*a).total_cmp(&f(*b))).expect("grid");
        let (_, v) = golden_section_min(f, best - h, best + h, 1e-12);
        -v
    };
    Ok(branch(l1, l2).max(branch(l2, l1)))
}

/// H·Max[l1,l2] ≥ ln 2 and Min[l1,l2] > e^{−H·Max[l1,l2]}/H for a free
/// semigroup with displacements l1, l2 under entropy bound H.
pub fn check_entropy_action(l1: f64, l2: f64, entropy: f64) -> Result<[BoundReport; 2]> {
    if !(entropy > 0.0) {
        return Err(Error::InvalidParameter(format!("entropy bound must be positive, got {entropy}")));
    }
    let (mx, mn) = (l1.max(l2), l1.min(l2));
    let inputs = [("l1", l1), ("l2", l2), ("H", entropy)];
    Ok([
        BoundReport::evaluate(
            "entropy-action-max",
            "H Max[l1, l2] >= ln 2",
            entropy * mx,
            std::f64::consts::LN_2,
            Direction::Ge,
            false,
            FORMULA_TOL,
        )
        .with_inputs(inputs),
        BoundReport::evaluate(
            "entropy-action-min",
            "Min[l1, l2] > exp(-H Max[l1, l2]) / H",
            mn,
            (-entropy * mx).exp() / entropy,
            Direction::Ge,
            true,
            FORMULA_TOL,
        )
        .with_inputs(inputs),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::Translation;
    use crate::hplane::{hdistance, HPoint, HalfPlane, MobiusMap};
    use std::f64::consts::LN_2;

    #[test]
    fn free_profile() {
        let p = cayley_profile(&CayleySpace::free(2), 12).unwrap();
        for (r, c) in &p.points {
            assert_eq!(*c, 2 * 3u64.pow(*r as u32) - 1);
        }
        assert!((p.slope_estimate - 3f64.ln()).abs() < 1e-3);
        assert!(p.last_point_estimate > p.slope_estimate);
        assert!(p.to_csv().starts_with("R,count\n0,1\n1,5\n"));
    }

    #[test]
    fn abelian_profile_is_subexponential() {
        let z2 = CayleySpace::abelian(2);
        let a = cayley_profile(&z2, 20).unwrap().slope_estimate;
        let b = cayley_profile(&z2, 40).unwrap().slope_estimate;
        assert!(a <= 0.2 && b < a, "{a} {b}");
        assert!(growth_profile(|_| Ok(1), &[1.0]).is_err());
        assert!(growth_profile(|_| Ok(1), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn doubling_examples() {
        let f2 = CayleySpace::free(2);
        let e = Word::identity();
        let r = doubling_ratio(|r| closed_count(&f2, &e, r), 5.0).unwrap();
        assert!((r - 118097.0 / 485.0).abs() < 1e-12);
        let z = CayleySpace::abelian(1);
        assert_eq!(doubling_ratio(|r| closed_count(&z, &e, r), 5.0).unwrap(), 21.0 / 11.0);
        assert_eq!(doubling_ratio(|r| closed_count(&z, &e, r), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn cocompact_examples() {
        let ln3 = 3f64.ln();
        let rep = check_cocompact_doubling(3f64.powi(10), 10.0, ln3, 1.0, 0.0);
        assert!(rep.guard_met && rep.holds);
        let rep = check_cocompact_doubling(1e300, 5.0, ln3, 1.0, 0.0);
        assert!(!rep.guard_met && rep.holds);
        let z2 = CayleySpace::abelian(2);
        let ratio = doubling_ratio(|r| closed_count(&z2, &Word::identity(), r), 10.0).unwrap();
        let rep = check_cocompact_doubling(ratio, 10.0, 0.01, 1.0, 0.0);
        assert!((ratio - 4.0).abs() < 0.2 && rep.holds);
        assert!((rep.rhs - 81.0 * 0.65f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn packing_matches_exhaustive_scan() {
        let f2 = CayleySpace::free(2);
        let e = Word::identity();
        let n = packing_number(&f2, &e, 2.0, 5).unwrap();
        // independent greedy over the sorted list of all reduced words
        let ball = f2.freeze(&e, 4).unwrap();
        let mut chosen: Vec<Word> = Vec::new();
        for (v, _) in &ball.vertices {
            if chosen.iter().all(|c| f2.word_distance(v, c).unwrap() >= 2) {
                chosen.push(v.clone());
            }
        }
        assert_eq!(n.centers, chosen);
        // maximality: every point of the ball lies within distance < 2 of a centre
        for (v, _) in &ball.vertices {
            assert!(n.centers.iter().any(|c| f2.word_distance(v, c).unwrap() < 2));
        }
        let z = CayleySpace::abelian(1);
        assert_eq!(packing_number(&z, &e, 2.0, 5).unwrap().count(), 5);
        assert_eq!(packing_number(&z, &e, 0.4, 5).unwrap().count(), 1);
        assert!(packing_number(&z, &e, 2.0, 4).is_err());
    }

    #[test]
    fn sandwich_holds() {
        for s in [CayleySpace::free(2), CayleySpace::abelian(1), CayleySpace::abelian(2)] {
            for r in [1.0, 2.0, 3.0] {
                for k in [5, 6, 7] {
                    if (k as f64 - 1.0) * r / 2.0 > 6.0 {
                        continue;
                    }
                    for rep in check_packing_doubling_sandwich(&s, &Word::identity(), r, k).unwrap() {
                        assert!(rep.holds, "{} r={r} k={k}: {rep:?}", s.descriptor());
                    }
                }
            }
        }
    }

    #[test]
    fn subgroup_doubling_in_free_group() {
        let f2 = CayleySpace::free(2);
        let e = Word::identity();
        let rep = check_subgroup_doubling(&f2, &e, &[Word::letter(1)], 2.0, 4.0, None, 10, 0.25).unwrap();
        assert!(rep.guard_met && rep.holds, "{rep:?}");
        let whole = [Word::letter(1), Word::letter(2)];
        let rep = check_subgroup_doubling(&f2, &e, &whole, 2.0, 4.0, None, 10, 0.25).unwrap();
        assert!(rep.holds);
        assert!(check_subgroup_doubling(&f2, &e, &whole, 4.0, 2.0, None, 10, 0.25).is_err());
        assert!(matches!(check_subgroup_doubling(&f2, &e, &whole, 2.0, 4.0, None, 3, 0.25), Err(Error::Precondition(_))));
    }

    #[test]
    fn tree_orbit_is_exact() {
        let f2 = CayleySpace::free(2);
        let action = GroupAction::free_tree(&f2).unwrap();
        let orbit = orbit_enumerate(&f2, &action, &Word::identity(), 5.0, 5).unwrap();
        assert!(!orbit.truncated);
        assert_eq!(orbit.entries.len() as u64, f2.ball_count(&Word::identity(), 5).unwrap());
        assert!(orbit_enumerate(&f2, &action, &Word::identity(), 6.0, 5).unwrap().truncated);
        let gens = orbit_enumerate(&f2, &action, &Word::identity(), 10.0, 1).unwrap();
        assert_eq!(gens.entries.len(), 5);
        assert_eq!(systole_estimate(&f2, &action, &Word::parse("ab").unwrap(), 3).unwrap().0, 1.0);
    }

    fn sanov() -> GroupAction<MobiusMap> {
        let a = MobiusMap::new(1.0, 2.0, 0.0, 1.0).unwrap();
        let b = MobiusMap::new(1.0, 0.0, 2.0, 1.0).unwrap();
        GroupAction::new(vec![a, b], None).unwrap()
    }

    /// Reduced words by explicit matrix products, no incremental composition.
    fn direct_scan(w: usize) -> Vec<(Vec<i32>, f64)> {
        let m = |l: i32| match l {
            1 => [1.0, 2.0, 0.0, 1.0],
            -1 => [1.0, -2.0, 0.0, 1.0],
            2 => [1.0, 0.0, 2.0, 1.0],
            _ => [1.0, 0.0, -2.0, 1.0],
        };
        let mut words: Vec<Vec<i32>> = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..w {
            let mut next = Vec::new();
            for u in &frontier {
                for l in [1, -1, 2, -2] {
                    if u.last() != Some(&-l) {
                        let mut v: Vec<i32> = u.clone();
                        v.push(l);
                        next.push(v);
                    }
                }
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        words
            .into_iter()
            .map(|u| {
                let [a, b, c, d] = u.iter().fold([1.0, 0.0, 0.0, 1.0], |p: [f64; 4], &l| {
                    let q = m(l);
                    [p[0] * q[0] + p[1] * q[2], p[0] * q[1] + p[1] * q[3], p[2] * q[0] + p[3] * q[2], p[2] * q[1] + p[3] * q[3]]
                });
                // image of i
                let den = c * c + d * d;
                let z = HPoint::new((a * c + b * d) / den, 1.0 / den).unwrap();
                (u, hdistance(&HPoint::i(), &z).unwrap())
            })
            .collect()
    }

    #[test]
    fn sanov_orbit_matches_direct_scan() {
        let scan = direct_scan(6);
        let orbit = orbit_enumerate(&HalfPlane, &sanov(), &HPoint::i(), 6.0, 6).unwrap();
        let expected = scan.iter().filter(|(_, d)| *d <= 6.0).count();
        assert_eq!(orbit.entries.len(), expected);
        let (sys, witness) = systole_estimate(&HalfPlane, &sanov(), &HPoint::i(), 6).unwrap();
        let direct = scan.iter().skip(1).map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
        assert!((sys - direct).abs() < 1e-12);
        assert_eq!(witness.to_string(), "a");
    }

    #[test]
    fn diagonal_systole() {
        let g = GroupAction::new(vec![MobiusMap::diag(2.0).unwrap()], None).unwrap();
        let (v, w) = systole_estimate(&HalfPlane, &g, &HPoint::i(), 4).unwrap();
        assert!((v - 2.0 * LN_2).abs() < 1e-12);
        assert_eq!(w.len(), 1);
        let t = GroupAction::new(vec![Translation(Word::letter(1))], None).unwrap();
        assert!(orbit_enumerate(&CayleySpace::free(2), &t, &Word::identity(), 3.0, 0).is_err());
    }

    /// Root of the first-order condition ln((1+a)/a)(p + a q) = q·g(a) by bisection.
    fn foc_oracle(p: f64, q: f64) -> f64 {
        let g = |a: f64| (1.0 + a) * (1.0 + a).ln() - a * a.ln();
        let phi = |t: f64| {
            let a = t.exp();
            ((1.0 + a) / a).ln() * (p + a * q) - q * g(a)
        };
        let (mut lo, mut hi) = (-60.0, 60.0);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = (0.5 * (lo + hi)).exp();
        g(a) / (p + a * q)
    }

    #[test]
    fn entropy_lower_examples() {
        assert!((free_semigroup_entropy_lower(1.0, 1.0).unwrap() - LN_2).abs() < 1e-9);
        for l in [0.1, 10.0] {
            assert!((free_semigroup_entropy_lower(l, l).unwrap() * l - LN_2).abs() < 1e-9);
        }
        let v = free_semigroup_entropy_lower(1.0, 1e6).unwrap();
        assert!(v > 0.0);
        assert!((v - foc_oracle(1.0, 1e6)).abs() < 1e-8 * v.max(1.0));
        assert!((free_semigroup_entropy_lower(2.0, 3.0).unwrap() - foc_oracle(2.0, 3.0)).abs() < 1e-9);
        assert!(free_semigroup_entropy_lower(0.0, 1.0).is_err());
    }

    #[test]
    fn entropy_action_examples() {
        let [i, ii] = check_entropy_action(1.0, 1.0, LN_2).unwrap();
        assert!(i.holds && ii.holds);
        let [i, _] = check_entropy_action(1.0, 1.0, 0.5).unwrap();
        assert!(!i.holds);
        let [i, ii] = check_entropy_action(3.0, 0.001, 1.0).unwrap();
        assert!(i.holds && !ii.holds);
        assert!((ii.rhs - (-3f64).exp()).abs() < 1e-15);
        assert!(check_entropy_action(1.0, 1.0, 0.0).is_err());
    }
}
