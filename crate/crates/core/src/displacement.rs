//! Displacement functions of isometries: stable translation length with
//! certified brackets, displacement radius R_γ(x), Margulis domains
//! M_R(γ) = {x : R_γ(x) ≤ R} and the Margulis constant L(a, b).

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{CayleySpace, GroupKind, Word};
use crate::hplane::{hdistance, HLine, HPoint, HalfPlane, IsometryClass, MobiusMap};
use crate::metric::MetricSpace;
use crate::report::{BoundReport, Direction, GEOMETRY_TOL};

/// Largest power index a displacement radius scan may visit.
pub const MAX_POWER_SCAN: u64 = 10_000_000;

/// An isometry of a metric space `S`.
pub trait Isometry<S: MetricSpace>: Clone + Debug + Send + Sync {
    fn apply(&self, space: &S, p: &S::Point) -> Result<S::Point>;

    fn compose(&self, space: &S, other: &Self) -> Self;

    fn inverse(&self, space: &S) -> Self;

    fn identity(space: &S) -> Self;

    fn is_identity(&self, space: &S) -> bool;

    /// γⁿ by repeated squaring.
    fn power(&self, space: &S, n: i64) -> Self {
        let mut base = if n < 0 { self.inverse(space) } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::identity(space);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(space, &base);
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(space, &base);
            }
        }
        acc
    }

    /// d(x, γⁿx).
    fn power_displacement(&self, space: &S, x: &S::Point, n: u64) -> Result<f64> {
        let g = self.power(space, n as i64);
        space.distance(x, &g.apply(space, x)?)
    }

    /// ℓ(γ) when it has a closed form on this backend.
    fn exact_length(&self, _space: &S) -> Option<f64> {
        None
    }

    /// s(γ) = inf d(x, γx) when it is known exactly and attained.
    fn exact_min_displacement(&self, _space: &S) -> Option<f64> {
        None
    }
}

impl Isometry<HalfPlane> for MobiusMap {
    fn apply(&self, _space: &HalfPlane, p: &HPoint) -> Result<HPoint> {
        MobiusMap::apply(self, p)
    }

    fn compose(&self, _space: &HalfPlane, other: &Self) -> Self {
        MobiusMap::compose(self, other)
    }

    fn inverse(&self, _space: &HalfPlane) -> Self {
        MobiusMap::inverse(self)
    }

    fn identity(_space: &HalfPlane) -> Self {
        MobiusMap::identity()
    }

    fn is_identity(&self, _space: &HalfPlane) -> bool {
        matches!(self.classify(), IsometryClass::Identity)
    }

    fn power(&self, _space: &HalfPlane, n: i64) -> Self {
        MobiusMap::power(self, n)
    }

    /// Computed in log scale, so large n never overflows.
    fn power_displacement(&self, _space: &HalfPlane, x: &HPoint, n: u64) -> Result<f64> {
        log_scaled_power_displacement(self, x, n)
    }

    fn exact_length(&self, _space: &HalfPlane) -> Option<f64> {
        match self.classify() {
            IsometryClass::Hyperbolic { .. } => self.closed_form_length().ok(),
            _ => Some(0.0),
        }
    }

    fn exact_min_displacement(&self, _space: &HalfPlane) -> Option<f64> {
        match self.classify() {
            IsometryClass::Hyperbolic { .. } => self.closed_form_length().ok(),
            IsometryClass::Identity | IsometryClass::Elliptic { .. } => Some(0.0),
            // the infimum 0 is not attained
            IsometryClass::Parabolic { .. } => None,
        }
    }
}

/// Matrix with entries scaled by e^log_scale.
#[derive(Clone, Copy)]
struct ScaledMatrix {
    m: [f64; 4],
    log_scale: f64,
}

impl ScaledMatrix {
    fn mul(&self, o: &ScaledMatrix) -> ScaledMatrix {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = o.m;
        let m = [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h];
        let norm = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if norm == 0.0 || !norm.is_finite() {
            return ScaledMatrix { m, log_scale: self.log_scale + o.log_scale };
        }
        ScaledMatrix { m: m.map(|v| v / norm), log_scale: self.log_scale + o.log_scale + norm.ln() }
    }
}

/// d(x, Mⁿx) through the conjugate N = A⁻¹MA with A·i = x, using
/// sinh(d/2) = ½·√((a−d)² + (b+c)²) for the determinant-1 matrix Nⁿ.
pub fn log_scaled_power_displacement(m: &MobiusMap, x: &HPoint, n: u64) -> Result<f64> {
    HPoint::new(x.x, x.y)?;
    let sy = x.y.sqrt();
    let a = MobiusMap { a: sy, b: x.x / sy, c: 0.0, d: sy.recip() };
    let conj = a.inverse().compose(m).compose(&a);
    let mut base = ScaledMatrix { m: conj.entries(), log_scale: 0.0 };
    let mut acc = ScaledMatrix { m: [1.0, 0.0, 0.0, 1.0], log_scale: 0.0 };
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    let [p, q, r, s] = acc.m;
    let h = 0.5 * (p - s).hypot(q + r);
    if h == 0.0 {
        return Ok(0.0);
    }
    let log_h = h.ln() + acc.log_scale;
    if log_h < 600.0 {
        Ok(2.0 * log_h.exp().asinh())
    } else {
        // asinh(y) = ln 2y up to O(y⁻²)
        Ok(2.0 * (log_h + std::f64::consts::LN_2))
    }
}

/// Left translation x ↦ g·x of a Cayley graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Translation(pub Word);

impl Isometry<CayleySpace> for Translation {
    fn apply(&self, space: &CayleySpace, p: &Word) -> Result<Word> {
        Ok(space.multiply(&space.canonical(&self.0)?, &space.canonical(p)?))
    }

    fn compose(&self, space: &CayleySpace, other: &Self) -> Self {
        Translation(space.multiply(&self.0, &other.0))
    }

    fn inverse(&self, space: &CayleySpace) -> Self {
        Translation(space.inverse(&self.0))
    }

    fn identity(_space: &CayleySpace) -> Self {
        Translation(Word::identity())
    }

    fn is_identity(&self, space: &CayleySpace) -> bool {
        space.multiply(&self.0, &Word::identity()).is_empty()
    }

    fn exact_length(&self, space: &CayleySpace) -> Option<f64> {
        let g = space.multiply(&self.0, &Word::identity());
        match space.kind() {
            GroupKind::Free => Some(cyclic_reduction(&g).len() as f64),
            GroupKind::Abelian => Some(g.len() as f64),
            // finite order
            GroupKind::Table(_) => Some(0.0),
        }
    }

    fn exact_min_displacement(&self, space: &CayleySpace) -> Option<f64> {
        match space.kind() {
            GroupKind::Free | GroupKind::Abelian => self.exact_length(space),
            GroupKind::Table(_) => None,
        }
    }
}

/// Strips letters g…g⁻¹ from both ends of a reduced word.
pub fn cyclic_reduction(w: &Word) -> Word {
    let l = w.letters();
    let (mut i, mut j) = (0, l.len());
    while j > i + 1 && l[i] == -l[j - 1] {
        i += 1;
        j -= 1;
    }
    Word(l[i..j].to_vec())
}

/// A closed interval certified to contain a limit quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub n_used: u64,
    pub delta_used: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lo - tol <= v && v <= self.hi + tol
    }
}

/// Power indices examined by [`stable_length_bracket`]: 1, 2, 4, … and n_max.
pub fn bracket_indices(n_max: u64) -> Vec<u64> {
    let mut ns: Vec<u64> = std::iter::successors(Some(1u64), |n| n.checked_mul(2)).take_while(|n| *n <= n_max).collect();
    if ns.last() != Some(&n_max) {
        ns.push(n_max);
    }
    ns
}

/// Two-sided bracket for ℓ(γ) = lim d(x,γⁿx)/n.
///
/// hi = min d(x,γⁿx)/n by subadditivity; lo = max over n ≥ 2 of
/// (d(x,γⁿx) − d(x,γx) − 4δ·log₂ n)/(n−1), clamped at 0.
pub fn stable_length_bracket<S, I>(space: &S, gamma: &I, x: &S::Point, n_max: u64, delta: f64) -> Result<Bracket>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!("n_max must be at least 2, got {n_max}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
    }
    let ns = bracket_indices(n_max);
    let ds: Vec<f64> = ns
        .par_iter()
        .map(|&n| gamma.power_displacement(space, x, n))
        .collect::<Result<_>>()?;
    let d1 = ds[0];
    let mut hi = f64::INFINITY;
    let mut lo = 0.0f64;
    for (&n, &d) in ns.iter().zip(&ds) {
        hi = hi.min(d / n as f64);
        if n >= 2 {
            let nf = n as f64;
            lo = lo.max((d - d1 - 4.0 * delta * nf.log2()) / (nf - 1.0));
        }
    }
    Ok(Bracket { lo: lo.min(hi), hi, n_used: n_max, delta_used: delta })
}

/// Minimum of d(x, γx) over a finite domain: an upper bound on s(γ).
#[derive(Debug, Clone, PartialEq)]
pub struct MinDisplacement<P> {
    pub value: f64,
    pub argmin: P,
    /// s(γ) itself when it has a closed form (hyperbolic maps of the
    /// half-plane, where it equals ℓ(γ)).
    pub exact: Option<f64>,
}

/// Ties resolve to the first point in scan order.
pub fn min_displacement<S, I>(space: &S, gamma: &I, domain: &[S::Point]) -> Result<MinDisplacement<S::Point>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    if domain.is_empty() {
        return Err(Error::Precondition("empty displacement domain".into()));
    }
    let values: Vec<f64> = domain
        .par_iter()
        .map(|x| space.distance(x, &gamma.apply(space, x)?))
        .collect::<Result<_>>()?;
    let (idx, value) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
    Ok(MinDisplacement { value, argmin: domain[idx].clone(), exact: gamma.exact_min_displacement(space) })
}

/// Grid of points x + iy with x evenly spaced and y geometrically spaced.
pub fn hplane_grid(x0: f64, x1: f64, nx: usize, y0: f64, y1: f64, ny: usize) -> Result<Vec<HPoint>> {
    if nx == 0 || ny == 0 || !(y0 > 0.0 && y1 >= y0 && x1 >= x0) {
        return Err(Error::InvalidParameter("grid needs nx, ny ≥ 1, x0 ≤ x1 and 0 < y0 ≤ y1".into()));
    }
    let step = |lo: f64, hi: f64, n: usize, k: usize| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = step(y0.ln(), y1.ln(), ny, j).exp();
        for i in 0..nx {
            pts.push(HPoint::new(step(x0, x1, nx, i), y)?);
        }
    }
    Ok(pts)
}

/// R_γ(x) and membership of x in M_R(γ).
#[derive(Debug, Clone, PartialEq)]
pub struct MargulisQuery {
    pub radius: f64,
    pub k_max: u64,
    /// R_γ(x) = min over 1 ≤ k ≤ k_max of d(x, γᵏx).
    pub value: f64,
    pub k_attained: u64,
    pub member: bool,
}

/// Since d(x,γᵏx) ≥ kℓ(γ), powers with k > R/ℓ cannot bring R_γ(x) below
/// R, so k_max = ⌊R/ℓ_lo⌋ + 1 decides membership exactly.
pub fn displacement_radius<S, I>(space: &S, gamma: &I, x: &S::Point, ell_lo: f64, radius: f64) -> Result<MargulisQuery>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    if !(ell_lo > 0.0) {
        return Err(Error::Unsupported(format!(
            "displacement radius needs a positive lower bound on the translation length, got {ell_lo}"
        )));
    }
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be nonnegative, got {radius}")));
    }
    let k_max = (radius / ell_lo).floor() as u64 + 1;
    if k_max > MAX_POWER_SCAN {
        return Err(Error::Budget(format!("displacement radius would scan {k_max} powers")));
    }
    let mut g = gamma.clone();
    let mut best = (f64::INFINITY, 0u64);
    for k in 1..=k_max {
        let d = space.distance(x, &g.apply(space, x)?)?;
        if d < best.0 {
            best = (d, k);
        }
        g = g.compose(space, gamma);
    }
    Ok(MargulisQuery { radius, k_max, value: best.0, k_attained: best.1, member: best.0 <= radius })
}

/// Distance from the axis of a hyperbolic isometry of translation length ℓ
/// to the boundary of M_R: arccosh(sinh(R/2)/sinh(ℓ/2)), or None when
/// M_R is empty (R < ℓ).
///
/// A point at distance u from the axis is moved by d with
/// sinh(d/2) = cosh(u)·sinh(ℓ/2), and the k = 1 power is the closest.
pub fn collar_radius(ell: f64, radius: f64) -> Option<f64> {
    if radius < ell {
        return None;
    }
    Some(((radius / 2.0).sinh() / (ell / 2.0).sinh()).max(1.0).acosh())
}

fn hyperbolic_data(gamma: &MobiusMap) -> Result<(f64, HLine)> {
    Ok((gamma.closed_form_length()?, gamma.axis()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeCheck {
    /// Distance to the axis of every accepted sample against the tube bound.
    pub report: BoundReport,
    /// Sampled membership against the closed-form collar.
    pub membership: BoundReport,
    pub collar_radius: Option<f64>,
    pub proposals: usize,
    pub accepted: usize,
    pub disagreements: usize,
    pub in_band: usize,
}

/// Half-width of the band around the collar boundary excluded from the
/// membership comparison.
pub const COLLAR_BAND: f64 = 1e-7;

/// Samples M_R(γ) by rejection and checks
/// d(x, axis) ≤ ½(7δ/ℓ + 1)R + 7δ/2 for every accepted x.
///
/// Proposals are uniform in axis parameter over one period and in signed
/// distance to the axis over [−ρ−1, ρ+1], ρ the collar radius.
pub fn check_tube(gamma: &MobiusMap, radius: f64, delta: f64, proposals: usize, seed: u64) -> Result<TubeCheck> {
    let (ell, axis) = hyperbolic_data(gamma)?;
    let rho = collar_radius(ell, radius);
    let spread = rho.unwrap_or(1.0) + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, f64)> =
        (0..proposals).map(|_| (rng.random_range(0.0..ell), rng.random_range(-spread..spread))).collect();
    let evaluated: Vec<(f64, bool, f64)> = draws
        .par_iter()
        .map(|&(t, u)| {
            let x = axis.offset_point(t, u);
            let q = displacement_radius(&HalfPlane, gamma, &x, ell, radius)?;
            Ok((u, q.member, axis.distance_to(&x)?))
        })
        .collect::<Result<_>>()?;
    let (mut accepted, mut disagreements, mut in_band) = (0, 0, 0);
    let mut worst = 0.0f64;
    for &(u, member, dist) in &evaluated {
        if member {
            accepted += 1;
            worst = worst.max(dist);
        }
        match rho {
            Some(r) if (u.abs() - r).abs() < COLLAR_BAND => in_band += 1,
            Some(r) => disagreements += usize::from(member != (u.abs() <= r)),
            None => disagreements += usize::from(member),
        }
    }
    let rhs = 0.5 * (7.0 * delta / ell + 1.0) * radius + 3.5 * delta;
    let anchor = "d(x, axis) <= (7 delta / l + 1) R / 2 + 7 delta / 2 for x in M_R";
    let report = if accepted == 0 {
        BoundReport::vacuous("tube", anchor, worst, rhs, Direction::Le, false)
    } else {
        BoundReport::evaluate("tube", anchor, worst, rhs, Direction::Le, false, GEOMETRY_TOL)
    };
    let inputs = [
        ("R", radius),
        ("delta", delta),
        ("length", ell),
        ("collar_radius", rho.unwrap_or(f64::NAN)),
        ("accepted", accepted as f64),
        ("proposals", proposals as f64),
    ];
    let report = report.with_inputs(inputs);
    let membership = BoundReport::evaluate(
        "collar-membership",
        "sampled membership in M_R disagrees with the closed-form collar",
        disagreements as f64,
        0.0,
        Direction::Le,
        false,
        0.0,
    )
    .with_inputs(inputs)
    .with_input("in_band", in_band as f64);
    Ok(TubeCheck { report, membership, collar_radius: rho, proposals, accepted, disagreements, in_band })
}

/// d(x, axis) ≤ ½(d(x,γx) − ℓ) + 3δ, guarded by ℓ > 3δ.
pub fn check_distance_to_axis(gamma: &MobiusMap, x: &HPoint, delta: f64) -> Result<BoundReport> {
    let (ell, axis) = hyperbolic_data(gamma)?;
    let lhs = axis.distance_to(x)?;
    let rhs = 0.5 * (hdistance(x, &gamma.apply(x)?)? - ell) + 3.0 * delta;
    let anchor = "d(x, axis) <= (d(x, g x) - l(g)) / 2 + 3 delta when l(g) > 3 delta";
    let report = if ell > 3.0 * delta {
        BoundReport::evaluate("distance-to-axis", anchor, lhs, rhs, Direction::Le, false, GEOMETRY_TOL)
    } else {
        BoundReport::vacuous("distance-to-axis", anchor, lhs, rhs, Direction::Le, false)
    };
    Ok(report.with_inputs([("delta", delta), ("length", ell), ("x", x.x), ("y", x.y)]))
}

/// d(x, M_r(γ)) ≥ ½(R − r) for x outside the interior of M_R(γ), using
/// the exact collar of radius r.
pub fn check_domain_separation(gamma: &MobiusMap, r: f64, radius: f64, x: &HPoint) -> Result<BoundReport> {
    if !(r < radius) {
        return Err(Error::InvalidParameter(format!("need r < R, got r = {r}, R = {radius}")));
    }
    let (ell, axis) = hyperbolic_data(gamma)?;
    let q = displacement_radius(&HalfPlane, gamma, x, ell, radius)?;
    if q.value < radius - GEOMETRY_TOL {
        return Err(Error::Precondition(format!("R_g(x) = {} is inside M_R with R = {radius}", q.value)));
    }
    let anchor = "d(x, M_r) >= (R - r) / 2 for x outside M_R";
    let rhs = 0.5 * (radius - r);
    let inputs = [("r", r), ("R", radius), ("length", ell), ("R_gamma", q.value)];
    Ok(match collar_radius(ell, r) {
        Some(rho) => {
            let lhs = (axis.distance_to(x)? - rho).max(0.0);
            BoundReport::evaluate("domain-separation", anchor, lhs, rhs, Direction::Ge, false, GEOMETRY_TOL)
                .with_inputs(inputs)
        }
        // M_r empty: the hypothesis fails
        None => BoundReport::vacuous("domain-separation", anchor, f64::INFINITY, rhs, Direction::Ge, false)
            .with_inputs(inputs),
    })
}

/// Upper estimate of L(a,b) over a finite sample of base points.
#[derive(Debug, Clone, PartialEq)]
pub struct MargulisEstimate<P> {
    pub value: f64,
    pub x: P,
    pub p: i64,
    pub q: i64,
    pub samples: usize,
    pub range: u64,
}

/// min over sampled x and 1 ≤ |p|,|q| ≤ P of Max[d(x,aᵖx), d(x,b^q x)],
/// skipping trivial powers. Ties resolve to the first sample.
pub fn margulis_constant<S, I>(space: &S, a: &I, b: &I, samples: &[S::Point], range: u64) -> Result<MargulisEstimate<S::Point>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    if range == 0 {
        return Err(Error::InvalidParameter("power range must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::Precondition("empty sample set".into()));
    }
    let powers = |g: &I| -> Vec<(i64, I)> {
        (1..=range as i64)
            .map(|p| (p, g.power(space, p)))
            .filter(|(_, h)| !h.is_identity(space))
            .collect()
    };
    let (pa, pb) = (powers(a), powers(b));
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::Precondition("no nontrivial powers in range".into()));
    }
    // d(x, g⁻ᵖx) = d(x, gᵖx), so positive powers suffice
    let best_at = |x: &S::Point| -> Result<(f64, i64, i64)> {
        let min_over = |ps: &[(i64, I)]| -> Result<(f64, i64)> {
            let mut best = (f64::INFINITY, 0);
            for (p, h) in ps {
                let d = space.distance(x, &h.apply(space, x)?)?;
                if d < best.0 {
                    best = (d, *p);
                }
            }
            Ok(best)
        };
        let (da, p) = min_over(&pa)?;
        let (db, q) = min_over(&pb)?;
        Ok((da.max(db), p, q))
    };
    let per_sample: Vec<(f64, i64, i64)> = samples.par_iter().map(best_at).collect::<Result<_>>()?;
    let (idx, &(value, p, q)) = per_sample
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, &(f64, i64, i64))>, (i, v)| match best {
            Some((_, b)) if b.0 <= v.0 => best,
            _ => Some((i, v)),
        })
        .expect("nonempty samples");
    Ok(MargulisEstimate { value, x: samples[idx].clone(), p, q, samples: samples.len(), range })
}

fn length_for_checks<S, I>(space: &S, g: &I, x: &S::Point, delta: f64) -> Result<(f64, f64)>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    match g.exact_length(space) {
        Some(l) => Ok((l, l)),
        None => {
            let b = stable_length_bracket(space, g, x, 1024, delta)?;
            Ok((b.lo, b.hi))
        }
    }
}

/// With m the midpoint of [x, gx] and A = Max[0, d(x,g²x) − d(x,gx)]:
/// A ≤ d(m,gm), d(m,gm) ≤ A + δ, and A + δ ≤ ℓ(g) + 3δ.
pub fn check_midpoint<S, I>(space: &S, g: &I, x: &S::Point, delta: f64) -> Result<Vec<BoundReport>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    let gx = g.apply(space, x)?;
    let d1 = space.distance(x, &gx)?;
    let d2 = space.distance(x, &g.apply(space, &gx)?)?;
    let m = space.geodesic_point(x, &gx, d1 / 2.0)?;
    let dm = space.distance(&m, &g.apply(space, &m)?)?;
    let a = (d2 - d1).max(0.0);
    // upper estimate of ℓ when no closed form exists
    let (_, ell_hi) = length_for_checks(space, g, x, delta)?;
    let inputs = [("delta", delta), ("d(x,gx)", d1), ("d(x,g2x)", d2), ("length", ell_hi)];
    Ok(vec![
        BoundReport::evaluate(
            "midpoint-lower",
            "max(0, d(x,g^2x) - d(x,gx)) <= d(m, g m)",
            a,
            dm,
            Direction::Le,
            false,
            GEOMETRY_TOL,
        )
        .with_inputs(inputs),
        BoundReport::evaluate(
            "midpoint-upper",
            "d(m, g m) <= max(0, d(x,g^2x) - d(x,gx)) + delta",
            dm,
            a + delta,
            Direction::Le,
            false,
            GEOMETRY_TOL,
        )
        .with_inputs(inputs),
        BoundReport::evaluate(
            "midpoint-length",
            "max(0, d(x,g^2x) - d(x,gx)) + delta <= l(g) + 3 delta",
            a + delta,
            ell_hi + 3.0 * delta,
            Direction::Le,
            false,
            GEOMETRY_TOL,
        )
        .with_inputs(inputs),
    ])
}

/// ℓ_lo ≤ s and s ≤ ℓ_hi + δ for a given bracket and displacement estimate.
pub fn check_quasi_geodesic_with(bracket: &Bracket, s_est: f64, delta: f64) -> Vec<BoundReport> {
    let inputs = [("delta", delta), ("length_lo", bracket.lo), ("length_hi", bracket.hi), ("s", s_est)];
    vec![
        BoundReport::evaluate("quasi-geodesic-lower", "l(g) <= s(g)", bracket.lo, s_est, Direction::Le, false, GEOMETRY_TOL)
            .with_inputs(inputs),
        BoundReport::evaluate(
            "quasi-geodesic-upper",
            "s(g) <= l(g) + delta",
            s_est,
            bracket.hi + delta,
            Direction::Le,
            false,
            GEOMETRY_TOL,
        )
        .with_inputs(inputs),
    ]
}

/// ℓ(g) ≤ s(g) ≤ ℓ(g) + δ. Closed forms for ℓ and s are used when the
/// backend has them; otherwise ℓ is bracketed at the first sample and s is
/// estimated by the sampled minimum.
pub fn check_quasi_geodesic<S, I>(space: &S, g: &I, samples: &[S::Point], delta: f64) -> Result<Vec<BoundReport>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    let first = samples.first().ok_or_else(|| Error::Precondition("empty sample set".into()))?;
    let (lo, hi) = length_for_checks(space, g, first, delta)?;
    let s = match g.exact_min_displacement(space) {
        Some(s) => s,
        None => min_displacement(space, g, samples)?.value,
    };
    Ok(check_quasi_geodesic_with(&Bracket { lo, hi, n_used: 1024, delta_used: delta }, s, delta))
}
