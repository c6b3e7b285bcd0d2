//! Ping-pong freeness tests: Schottky and demi-Schottky positions, the
//! large-displacement criterion, the Margulis-constant case dispatch, and an
//! exact brute-force relation search over SL(2,ℚ).

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::displacement::{Bracket, Isometry};
use crate::error::{Error, Result};
use crate::graph::Word;
use crate::hplane::{BoundaryPoint, HPoint, HalfPlane, IsometryClass, MobiusMap, RationalMobius};
use crate::metric::MetricSpace;
use crate::report::json_f64;

/// Power range used by the displacement criteria when selecting a pair.
pub const DEFAULT_PINGPONG_RANGE: u64 = 3;

/// Longest word the relation oracle enumerates.
pub const MAX_ORACLE_LEN: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PingPongMode {
    /// All (p, q) with p, q ≠ 0.
    Schottky,
    /// (p, q) with p, q ≠ 0, not both negative.
    DemiSchottky,
}

impl PingPongMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PingPongMode::Schottky => "schottky",
            PingPongMode::DemiSchottky => "demi-schottky",
        }
    }

    /// Index pairs in scan order: p ascending, then q ascending.
    pub fn pairs(self, range: u64) -> Vec<(i64, i64)> {
        let r = range as i64;
        let nz = || (-r..=r).filter(|v| *v != 0);
        nz().flat_map(|p| nz().map(move |q| (p, q)))
            .filter(|&(p, q)| self == PingPongMode::Schottky || p > 0 || q > 0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub p: i64,
    pub q: i64,
    /// d(aᵖx, b^q x) − Max[d(x,aᵖx), d(x,b^q x)] − 2δ.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// Every examined margin is strictly positive.
    PassRange,
    /// The pair with the smallest margin (first in scan order on ties).
    Fail { p: i64, q: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PingPongReport<P> {
    pub mode: PingPongMode,
    pub base: P,
    pub range: u64,
    pub delta: f64,
    pub margins: Vec<Margin>,
    pub verdict: Verdict,
}

impl<P> PingPongReport<P> {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::PassRange
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Value {
        let verdict = match self.verdict {
            Verdict::PassRange => json!({"status": "PASS-range"}),
            Verdict::Fail { p, q } => json!({"status": "FAIL", "witness": [p, q]}),
        };
        json!({
            "mode": self.mode.as_str(),
            "range": self.range,
            "delta": json_f64(self.delta),
            "verdict": verdict,
            "min_margin": json_f64(self.min_margin()),
            "margins": self.margins.iter().map(|m| json!({"p": m.p, "q": m.q, "margin": json_f64(m.margin)})).collect::<Vec<_>>(),
        })
    }
}

/// Evaluates the ping-pong inequality
/// d(aᵖx, b^q x) > Max[d(x,aᵖx), d(x,b^q x)] + 2δ over the mode's index set.
pub fn pingpong_test<S, I>(
    space: &S,
    mode: PingPongMode,
    a: &I,
    b: &I,
    x: &S::Point,
    delta: f64,
    range: u64,
) -> Result<PingPongReport<S::Point>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    if range == 0 {
        return Err(Error::InvalidParameter("ping-pong range must be at least 1".into()));
    }
    let r = range as i64;
    let orbit = |g: &I| -> Result<BTreeMap<i64, (S::Point, f64)>> {
        (-r..=r)
            .filter(|k| *k != 0)
            .map(|k| {
                let gx = g.power(space, k).apply(space, x)?;
                let d = space.distance(x, &gx)?;
                Ok((k, (gx, d)))
            })
            .collect()
    };
    let (oa, ob) = (orbit(a)?, orbit(b)?);
    let margins: Vec<Margin> = mode
        .pairs(range)
        .into_iter()
        .map(|(p, q)| {
            let (ax, da) = &oa[&p];
            let (bx, db) = &ob[&q];
            Ok(Margin { p, q, margin: space.distance(ax, bx)? - da.max(*db) - 2.0 * delta })
        })
        .collect::<Result<_>>()?;
    let worst = margins
        .iter()
        .fold(None, |acc: Option<&Margin>, m| match acc {
            Some(w) if w.margin <= m.margin => acc,
            _ => Some(m),
        })
        .expect("range ≥ 1 gives at least one pair");
    let verdict = if worst.margin > 0.0 { Verdict::PassRange } else { Verdict::Fail { p: worst.p, q: worst.q } };
    Ok(PingPongReport { mode, base: x.clone(), range, delta, margins, verdict })
}

pub fn schottky_test<S, I>(space: &S, a: &I, b: &I, x: &S::Point, delta: f64, range: u64) -> Result<PingPongReport<S::Point>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    pingpong_test(space, PingPongMode::Schottky, a, b, x, delta, range)
}

pub fn demi_schottky_test<S, I>(
    space: &S,
    a: &I,
    b: &I,
    x: &S::Point,
    delta: f64,
    range: u64,
) -> Result<PingPongReport<S::Point>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    pingpong_test(space, PingPongMode::DemiSchottky, a, b, x, delta, range)
}

/// Midpoint of the common perpendicular of the axes of a and b, their
/// crossing point when the axes meet, or the point equidistant from both
/// axes on the geodesic joining their free endpoints when they are
/// asymptotic. Falls back to i when either map is not hyperbolic.
pub fn pingpong_base_point(a: &MobiusMap, b: &MobiusMap) -> HPoint {
    let (Ok(axis_a), Ok(axis_b)) = (a.axis(), b.axis()) else {
        return HPoint::i();
    };
    let to_std = axis_a.to_std();
    let u = to_std.apply_boundary(axis_b.start());
    let v = to_std.apply_boundary(axis_b.end());
    let finite_nonzero = |p: BoundaryPoint| p.finite().filter(|x| *x != 0.0);
    let std_point = match (finite_nonzero(u), finite_nonzero(v)) {
        (Some(u), Some(v)) if u * v < 0.0 => HPoint { x: 0.0, y: (-u * v).sqrt() },
        (Some(u), Some(v)) => {
            // both feet lie on the circle |z| = r orthogonal to both axes
            let r = (u * v).sqrt();
            let c = 0.5 * (u + v);
            let s_mid = 0.5 * (r / c).atanh();
            HPoint { x: r * s_mid.tanh(), y: r / s_mid.cosh() }
        }
        _ => return asymptotic_base_point(&axis_a, &axis_b),
    };
    axis_a.from_std().apply(&std_point).unwrap_or_else(|_| HPoint::i())
}

fn asymptotic_base_point(axis_a: &crate::hplane::HLine, axis_b: &crate::hplane::HLine) -> HPoint {
    let ends_a = [axis_a.start(), axis_a.end()];
    let ends_b = [axis_b.start(), axis_b.end()];
    let free_a = ends_a.iter().find(|p| !ends_b.iter().any(|q| q.approx_eq(p, 1e-12)));
    let free_b = ends_b.iter().find(|p| !ends_a.iter().any(|q| q.approx_eq(p, 1e-12)));
    let (Some(&fa), Some(&fb)) = (free_a, free_b) else {
        return axis_a.point(0.0);
    };
    let Ok(bridge) = crate::hplane::HLine::from_endpoints(fa, fb) else {
        return axis_a.point(0.0);
    };
    // d(c(t), axis_a) − d(c(t), axis_b) decreases from +∞ to −∞ along the bridge
    let gap = |t: f64| {
        let p = bridge.point(t);
        axis_a.distance_to(&p).unwrap_or(f64::INFINITY) - axis_b.distance_to(&p).unwrap_or(f64::INFINITY)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while gap(lo) < 0.0 && lo > -700.0 {
        lo *= 2.0;
    }
    while gap(hi) > 0.0 && hi < 700.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    bridge.point(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateStatus {
    /// The semigroup generated by the named pair is free.
    CertifiedFreeSemigroup { pair: [String; 2] },
    CertifiedFreeGroup,
    /// Finite tests up to this power range were all that could be run.
    RangeLimited { range: u64 },
    RelationFound { w1: Word, w2: Word },
}

impl CertificateStatus {
    pub fn name(&self) -> &'static str {
        match self {
            CertificateStatus::CertifiedFreeSemigroup { .. } => "CertifiedFreeSemigroup",
            CertificateStatus::CertifiedFreeGroup => "CertifiedFreeGroup",
            CertificateStatus::RangeLimited { .. } => "RangeLimited",
            CertificateStatus::RelationFound { .. } => "RelationFound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreenessCertificate {
    pub status: CertificateStatus,
    /// Which criterion fired and why, in order.
    pub trail: Vec<String>,
    pub measured: BTreeMap<String, f64>,
}

impl FreenessCertificate {
    fn new(status: CertificateStatus) -> Self {
        FreenessCertificate { status, trail: Vec::new(), measured: BTreeMap::new() }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "status": self.status.name(),
            "trail": self.trail,
            "measured": self.measured.iter().map(|(k, v)| (k.clone(), json_f64(*v))).collect::<serde_json::Map<_, _>>(),
        });
        match &self.status {
            CertificateStatus::CertifiedFreeSemigroup { pair } => v["pair"] = json!(pair),
            CertificateStatus::RangeLimited { range } => v["range"] = json!(range),
            CertificateStatus::RelationFound { w1, w2 } => v["relation"] = json!([w1.to_string(), w2.to_string()]),
            CertificateStatus::CertifiedFreeGroup => {}
        }
        v
    }
}

/// Runs demi-Schottky on {a', b'} and {a', b'⁻¹} and, when both have exact
/// minimal displacement above 13δ, certifies the first pair that passes.
#[allow(clippy::too_many_arguments)]
fn select_semigroup_pair<S, I>(
    space: &S,
    first: (&I, &str),
    second: (&I, &str),
    second_inv_label: &str,
    x: &S::Point,
    delta: f64,
    range: u64,
    cert: &mut FreenessCertificate,
) -> Result<Option<[String; 2]>>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    let inv = second.0.inverse(space);
    for (b, label) in [(second.0, second.1), (&inv, second_inv_label)] {
        let rep = demi_schottky_test(space, first.0, b, x, delta, range)?;
        cert.measured.insert(format!("demi_margin[{},{}]", first.1, label), rep.min_margin());
        cert.trail.push(format!(
            "demi-schottky on {{{}, {}}} with range {range}: {}",
            first.1,
            label,
            if rep.passed() { "PASS-range" } else { "FAIL" }
        ));
        if rep.passed() {
            return Ok(Some([first.1.to_string(), label.to_string()]));
        }
    }
    Ok(None)
}

fn shares_fixed_point(a: &IsometryClass, b: &IsometryClass) -> bool {
    let fb = b.boundary_fixed_points();
    a.boundary_fixed_points().iter().any(|p| fb.iter().any(|q| p.approx_eq(q, 1e-9)))
}

/// Large-displacement criterion on the half-plane, where s = ℓ exactly:
/// if s(a), s(b) > 13δ then {a,b} or {a,b⁻¹} generates a free semigroup.
/// The pair is selected by a finite demi-Schottky test at the ping-pong
/// base point; when neither passes the status is range-limited.
pub fn free_semigroup_by_displacement(a: &MobiusMap, b: &MobiusMap, delta: f64) -> Result<FreenessCertificate> {
    let (ca, cb) = (a.classify(), b.classify());
    if !ca.is_hyperbolic() || !cb.is_hyperbolic() {
        return Err(Error::Class(format!("both maps must be hyperbolic, got {} and {}", ca.name(), cb.name())));
    }
    if shares_fixed_point(&ca, &cb) {
        return Err(Error::Elementary("the axes share a fixed point, so <a, b> is elementary or not discrete".into()));
    }
    let (la, lb) = (a.closed_form_length()?, b.closed_form_length()?);
    let threshold = 13.0 * delta;
    if la.min(lb) <= threshold {
        let mut cert = FreenessCertificate::new(CertificateStatus::RangeLimited { range: 0 });
        cert.trail.push(format!("s <= 13 delta: min(s(a), s(b)) = {} <= {threshold}", la.min(lb)));
        cert.measured.extend([("s(a)".to_string(), la), ("s(b)".to_string(), lb), ("13delta".to_string(), threshold)]);
        return Ok(cert);
    }
    let x = pingpong_base_point(a, b);
    let mut cert = FreenessCertificate::new(CertificateStatus::RangeLimited { range: DEFAULT_PINGPONG_RANGE });
    cert.measured.extend([
        ("s(a)".to_string(), la),
        ("s(b)".to_string(), lb),
        ("13delta".to_string(), threshold),
        ("base_x".to_string(), x.x),
        ("base_y".to_string(), x.y),
    ]);
    cert.trail.push(format!("s(a), s(b) > 13 delta = {threshold}: one of {{a, b}}, {{a, b^-1}} generates a free semigroup"));
    match select_semigroup_pair(&HalfPlane, (a, "a"), (b, "b"), "b^-1", &x, delta, DEFAULT_PINGPONG_RANGE, &mut cert)? {
        Some(pair) => cert.status = CertificateStatus::CertifiedFreeSemigroup { pair },
        None => cert.trail.push("no finite test selected a pair; the free one exists but is not identified".into()),
    }
    Ok(cert)
}

/// Smallest integer p with p > 13δ/ε₁.
pub fn min_power(eps1: f64, delta: f64) -> Result<u64> {
    if !(eps1 > 0.0) {
        return Err(Error::InvalidParameter(format!("eps1 must be positive, got {eps1}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
    }
    Ok((13.0 * delta / eps1).floor() as u64 + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowersResult {
    pub p_min: u64,
    /// [`free_semigroup_by_displacement`] applied to (a^p_min, b^p_min).
    pub certificate: Result<FreenessCertificate>,
}

/// For ℓ(a), ℓ(b) ≥ ε₁, powers p, q > 13δ/ε₁ have displacement above 13δ.
pub fn free_semigroup_powers(a: &MobiusMap, b: &MobiusMap, eps1: f64, delta: f64) -> Result<PowersResult> {
    let p_min = min_power(eps1, delta)?;
    for (g, name) in [(a, "a"), (b, "b")] {
        let l = g.closed_form_length()?;
        if l < eps1 {
            return Err(Error::Precondition(format!("l({name}) = {l} is below eps1 = {eps1}")));
        }
    }
    let p = p_min as i64;
    let certificate = free_semigroup_by_displacement(&a.power(p), &b.power(p), delta);
    Ok(PowersResult { p_min, certificate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MargulisCase {
    /// ℓ(a), ℓ(b) ≤ 13δ: {a, b} generates a free group.
    BothShort,
    /// ℓ(a), ℓ(b) > 13δ: {a, b} or {a, b⁻¹} generates a free semigroup.
    BothLong,
    /// ℓ(a) ≤ 13δ < ℓ(b): {b, aba⁻¹} or {b, ab⁻¹a⁻¹}.
    ShortLong,
    /// ℓ(b) ≤ 13δ < ℓ(a): {a, bab⁻¹} or {a, ba⁻¹b⁻¹}.
    LongShort,
}

impl MargulisCase {
    pub fn label(self) -> &'static str {
        match self {
            MargulisCase::BothShort => "(i)",
            MargulisCase::BothLong => "(ii)",
            MargulisCase::ShortLong => "(iii)",
            MargulisCase::LongShort => "(iv)",
        }
    }
}

/// Case dispatch for L(a,b) > 23δ. `l_estimate` is a measured upper
/// estimate of L(a,b); the brackets decide each ℓ against 13δ.
///
/// Since the estimate only bounds L(a,b) from above, the finite tests give
/// range-limited evidence, except when exact displacements above 13δ let
/// the large-displacement criterion certify a semigroup pair.
#[allow(clippy::too_many_arguments)]
pub fn margulis_free_dispatch<S, I>(
    space: &S,
    a: &I,
    b: &I,
    x: &S::Point,
    l_estimate: f64,
    ell_a: &Bracket,
    ell_b: &Bracket,
    delta: f64,
    range: u64,
) -> Result<(MargulisCase, FreenessCertificate)>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    let threshold = 13.0 * delta;
    if !(l_estimate > 23.0 * delta) {
        return Err(Error::Precondition(format!("L(a,b) estimate {l_estimate} is not above 23 delta = {}", 23.0 * delta)));
    }
    let side = |br: &Bracket, name: &str| -> Result<bool> {
        if br.hi <= threshold {
            Ok(false)
        } else if br.lo > threshold {
            Ok(true)
        } else {
            Err(Error::Precondition(format!("bracket [{}, {}] for l({name}) straddles 13 delta = {threshold}", br.lo, br.hi)))
        }
    };
    let case = match (side(ell_a, "a")?, side(ell_b, "b")?) {
        (false, false) => MargulisCase::BothShort,
        (true, true) => MargulisCase::BothLong,
        (false, true) => MargulisCase::ShortLong,
        (true, false) => MargulisCase::LongShort,
    };
    let mut cert = FreenessCertificate::new(CertificateStatus::RangeLimited { range });
    cert.measured.extend([
        ("L_estimate".to_string(), l_estimate),
        ("23delta".to_string(), 23.0 * delta),
        ("13delta".to_string(), threshold),
        ("l(a)_lo".to_string(), ell_a.lo),
        ("l(a)_hi".to_string(), ell_a.hi),
        ("l(b)_lo".to_string(), ell_b.lo),
        ("l(b)_hi".to_string(), ell_b.hi),
    ]);
    cert.trail.push(format!("case {} selected; L(a,b) estimate {l_estimate} > 23 delta", case.label()));
    cert.trail.push("the L(a,b) estimate is an upper bound, so the hypothesis L > 23 delta is not certified".into());
    let conj = |g: &I, h: &I| g.compose(space, h).compose(space, &g.inverse(space));
    let (first, second, labels): (I, I, [&str; 3]) = match case {
        MargulisCase::BothShort => {
            let rep = schottky_test(space, a, b, x, delta, range)?;
            cert.measured.insert("schottky_margin".into(), rep.min_margin());
            cert.trail.push(format!(
                "schottky on {{a, b}} with range {range}: {}",
                if rep.passed() { "PASS-range" } else { "FAIL" }
            ));
            return Ok((case, cert));
        }
        MargulisCase::BothLong => (a.clone(), b.clone(), ["a", "b", "b^-1"]),
        MargulisCase::ShortLong => (b.clone(), conj(a, b), ["b", "a b a^-1", "a b^-1 a^-1"]),
        MargulisCase::LongShort => (a.clone(), conj(b, a), ["a", "b a b^-1", "b a^-1 b^-1"]),
    };
    let selected =
        select_semigroup_pair(space, (&first, labels[0]), (&second, labels[1]), labels[2], x, delta, range, &mut cert)?;
    let exact = first.exact_min_displacement(space).zip(second.exact_min_displacement(space));
    match (selected, exact) {
        (Some(pair), Some((s1, s2))) if s1 > threshold && s2 > threshold => {
            cert.trail.push(format!("exact displacements {s1} and {s2} exceed 13 delta: large-displacement criterion applies"));
            cert.status = CertificateStatus::CertifiedFreeSemigroup { pair };
        }
        (Some(pair), _) => cert.trail.push(format!("candidate pair {{{}, {}}} passed the finite test", pair[0], pair[1])),
        (None, _) => cert.trail.push("no candidate pair passed the finite test".into()),
    }
    Ok((case, cert))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Reduced words in a, a⁻¹, b, b⁻¹, including the empty word.
    Group,
    /// Positive words in a, b.
    Semigroup,
}

impl OracleMode {
    fn letters(self) -> &'static [u8] {
        match self {
            OracleMode::Group => &[0, 1, 2, 3],
            OracleMode::Semigroup => &[0, 2],
        }
    }
}

// Letters: 0 = a, 1 = a⁻¹, 2 = b, 3 = b⁻¹. Packed words hold the length in
// bits 28..32 and letter i in bits 26−2i..28−2i, so numeric order is
// length-lexicographic with a < a⁻¹ < b < b⁻¹.
fn pack(letters: &[u8]) -> u32 {
    let mut w = (letters.len() as u32) << 28;
    for (i, &l) in letters.iter().enumerate() {
        w |= (l as u32) << (26 - 2 * i);
    }
    w
}

fn unpack(w: u32) -> Vec<u8> {
    let len = (w >> 28) as usize;
    (0..len).map(|i| ((w >> (26 - 2 * i)) & 3) as u8).collect()
}

fn letters_to_word(letters: &[u8]) -> Word {
    Word(letters.iter().map(|&l| [1, -1, 2, -2][l as usize]).collect())
}

/// Integer matrix arithmetic with a primitive, sign-normalized key: two
/// integer matrices act identically iff their keys agree.
trait IntMatrix: Clone + Send + Sync + Hash + Eq {
    fn mul(&self, o: &Self) -> Option<Self>;
    fn key(&self) -> Self;
}

impl IntMatrix for [i128; 4] {
    fn mul(&self, o: &Self) -> Option<Self> {
        let [a, b, c, d] = *self;
        let [e, f, g, h] = *o;
        let dot = |x: i128, y: i128, z: i128, w: i128| x.checked_mul(y)?.checked_add(z.checked_mul(w)?);
        Some([dot(a, e, b, g)?, dot(a, f, b, h)?, dot(c, e, d, g)?, dot(c, f, d, h)?])
    }

    fn key(&self) -> Self {
        let g = self.iter().fold(0i128, |acc, v| acc.gcd(v));
        let mut k = if g == 0 { *self } else { self.map(|v| v / g) };
        if k.iter().find(|v| **v != 0).is_some_and(|v| *v < 0) {
            k = k.map(|v| -v);
        }
        k
    }
}

impl IntMatrix for [BigInt; 4] {
    fn mul(&self, o: &Self) -> Option<Self> {
        let [a, b, c, d] = self;
        let [e, f, g, h] = o;
        Some([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    fn key(&self) -> Self {
        let g = self.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        let mut k = if g.is_zero() { self.clone() } else { self.clone().map(|v| v / &g) };
        if k.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative()) {
            k = k.map(|v| -v);
        }
        k
    }
}

/// Scales a rational matrix to integers by the lcm of its denominators.
fn integer_form(m: &RationalMobius) -> [BigInt; 4] {
    let l = m.entries.iter().fold(BigInt::from(1), |acc, e| acc.lcm(e.denom()));
    m.entries.clone().map(|e: BigRational| (e * BigRational::from_integer(l.clone())).to_integer())
}

fn hash_key<M: Hash>(m: &M) -> u64 {
    let mut h = DefaultHasher::new();
    m.hash(&mut h);
    h.finish()
}

struct Overflow;

fn shard<M: IntMatrix>(
    gens: &[M; 4],
    identity: &M,
    letters: &[u8],
    mode: OracleMode,
    first: u8,
    max_len: usize,
) -> std::result::Result<Vec<(u64, u32)>, Overflow> {
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<u8>, M)> = vec![(vec![first], identity.mul(&gens[first as usize]).ok_or(Overflow)?)];
    while let Some((word, m)) = stack.pop() {
        out.push((hash_key(&m.key()), pack(&word)));
        if word.len() == max_len {
            continue;
        }
        let last = *word.last().expect("nonempty");
        for &l in letters {
            // a·a⁻¹ and b·b⁻¹ cancel
            if mode == OracleMode::Group && l ^ 1 == last {
                continue;
            }
            let next = m.mul(&gens[l as usize]).ok_or(Overflow)?;
            let mut w = word.clone();
            w.push(l);
            stack.push((w, next));
        }
    }
    Ok(out)
}

fn evaluate<M: IntMatrix>(gens: &[M; 4], identity: &M, letters: &[u8]) -> Option<M> {
    letters.iter().try_fold(identity.clone(), |acc, &l| acc.mul(&gens[l as usize])).map(|m| m.key())
}

fn search<M: IntMatrix>(gens: [M; 4], identity: M, max_len: usize, mode: OracleMode) -> std::result::Result<Option<(Word, Word)>, Overflow> {
    let letters = mode.letters();
    let shards: Vec<std::result::Result<Vec<(u64, u32)>, Overflow>> = letters
        .par_iter()
        .map(|&first| shard(&gens, &identity, letters, mode, first, max_len))
        .collect();
    let mut all: Vec<(u64, u32)> = Vec::new();
    if mode == OracleMode::Group {
        all.push((hash_key(&identity.key()), pack(&[])));
    }
    for s in shards {
        all.extend(s?);
    }
    all.par_sort_unstable();
    // best = (second member, first member) of the earliest collision
    let mut best: Option<(u32, u32)> = None;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        if j - i > 1 {
            // equal hashes: confirm by exact keys, in packed order
            let mut classes: Vec<(M, Vec<u32>)> = Vec::new();
            for &(_, w) in &all[i..j] {
                let key = evaluate(&gens, &identity, &unpack(w)).ok_or(Overflow)?;
                match classes.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, ws)) => ws.push(w),
                    None => classes.push((key, vec![w])),
                }
            }
            for (_, ws) in classes.iter().filter(|(_, ws)| ws.len() > 1) {
                let cand = (ws[1], ws[0]);
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        i = j;
    }
    Ok(best.map(|(w2, w1)| (letters_to_word(&unpack(w1)), letters_to_word(&unpack(w2)))))
}

/// Exhaustive search for two distinct words with the same action.
///
/// Enumerates all reduced words (group mode) or positive words (semigroup
/// mode) of length ≤ `max_len`, compares exact matrices up to sign, and
/// returns the collision whose later word comes first in length-lexicographic
/// order, paired with the earliest word of its class.
pub fn relation_oracle(a: &RationalMobius, b: &RationalMobius, max_len: usize, mode: OracleMode) -> Result<Option<(Word, Word)>> {
    if max_len > MAX_ORACLE_LEN {
        return Err(Error::Budget(format!("max_len {max_len} exceeds the enumeration budget of {MAX_ORACLE_LEN}")));
    }
    if max_len == 0 {
        return Ok(None);
    }
    let big = [integer_form(a), integer_form(&a.inverse()), integer_form(b), integer_form(&b.inverse())];
    let one = [1, 0, 0, 1].map(BigInt::from);
    let to_small = |m: &[BigInt; 4]| -> Option<[i128; 4]> {
        Some([m[0].to_i128()?, m[1].to_i128()?, m[2].to_i128()?, m[3].to_i128()?])
    };
    let small: Option<Vec<[i128; 4]>> = big.iter().map(to_small).collect();
    if let Some(small) = small {
        let small = [small[0], small[1], small[2], small[3]];
        if let Ok(found) = search(small, [1, 0, 0, 1], max_len, mode) {
            return Ok(found);
        }
    }
    match search(big, one, max_len, mode) {
        Ok(found) => Ok(found),
        Err(Overflow) => unreachable!("big integers do not overflow"),
    }
}

/// Evaluates a word in a, b exactly.
pub fn evaluate_word(a: &RationalMobius, b: &RationalMobius, w: &Word) -> RationalMobius {
    let (ai, bi) = (a.inverse(), b.inverse());
    w.letters().iter().fold(RationalMobius::identity(), |acc, &l| {
        acc.compose(match l {
            1 => a,
            -1 => &ai,
            2 => b,
            _ => &bi,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attraction {
    /// The k minimizing d(y, γᵏx) over |k| ≤ k_range.
    pub k: i64,
    pub distance: f64,
}

impl Attraction {
    /// y ∈ U⁺_γ(x) within range.
    pub fn in_plus(&self) -> bool {
        self.k >= 1
    }

    /// y ∈ U⁻_γ(x) within range.
    pub fn in_minus(&self) -> bool {
        self.k <= -1
    }
}

/// Nearest orbit point γᵏx to y over |k| ≤ k_range, scanning k = 0, 1, −1,
/// 2, −2, … and keeping the first strict minimum.
pub fn attraction_membership<S, I>(space: &S, gamma: &I, x: &S::Point, y: &S::Point, k_range: u64) -> Result<Attraction>
where
    S: MetricSpace,
    I: Isometry<S>,
{
    if k_range == 0 {
        return Err(Error::InvalidParameter("k_range must be at least 1".into()));
    }
    let mut best = Attraction { k: 0, distance: space.distance(y, x)? };
    let inv = gamma.inverse(space);
    let (mut fwd, mut back) = (x.clone(), x.clone());
    for k in 1..=k_range as i64 {
        fwd = gamma.apply(space, &fwd)?;
        back = inv.apply(space, &back)?;
        for (kk, p) in [(k, &fwd), (-k, &back)] {
            let d = space.distance(y, p)?;
            if d < best.distance {
                best = Attraction { k: kk, distance: d };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::displacement::{stable_length_bracket, Translation};
    use crate::graph::CayleySpace;
    use crate::hplane::hdistance;

    fn ln3() -> f64 {
        3f64.ln()
    }

    fn sanov(m: i64) -> (RationalMobius, RationalMobius) {
        (RationalMobius::from_integers(1, m, 0, 1).unwrap(), RationalMobius::from_integers(1, 0, m, 1).unwrap())
    }

    #[test]
    fn index_sets() {
        assert_eq!(PingPongMode::DemiSchottky.pairs(1), vec![(-1, 1), (1, -1), (1, 1)]);
        assert_eq!(PingPongMode::Schottky.pairs(3).len(), 36);
        assert_eq!(PingPongMode::DemiSchottky.pairs(3).len(), 27);
    }

    #[test]
    fn equal_maps_fail_schottky() {
        let a = MobiusMap::diag(3.0).unwrap();
        let rep = schottky_test(&HalfPlane, &a, &a, &HPoint::i(), ln3(), 2).unwrap();
        assert!(!rep.passed());
        let rep = demi_schottky_test(&HalfPlane, &a, &a.inverse(), &HPoint::i(), ln3(), 2).unwrap();
        assert!(!rep.passed());
        assert!(rep.margins.iter().any(|m| (m.p, m.q) == (1, -1) && m.margin < 0.0));
    }

    #[test]
    fn margins_match_direct_evaluation() {
        let (a, b) = sanov(2);
        let (a, b) = (a.to_float(), b.to_float());
        let x = HPoint::i();
        let rep = demi_schottky_test(&HalfPlane, &a, &b, &x, ln3(), 3).unwrap();
        for m in &rep.margins {
            let ap = a.power(m.p).apply(&x).unwrap();
            let bq = b.power(m.q).apply(&x).unwrap();
            let direct = hdistance(&ap, &bq).unwrap()
                - hdistance(&x, &ap).unwrap().max(hdistance(&x, &bq).unwrap())
                - 2.0 * ln3();
            assert!((direct - m.margin).abs() < 1e-9);
        }
    }

    #[test]
    fn sanov_ten_passes_demi_schottky() {
        let (a, b) = sanov(10);
        let rep = demi_schottky_test(&HalfPlane, &a.to_float(), &b.to_float(), &HPoint::i(), ln3(), 3).unwrap();
        assert!(rep.passed(), "min margin {}", rep.min_margin());
        let rep = schottky_test(&HalfPlane, &a.to_float(), &b.to_float(), &HPoint::i(), ln3(), 3).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn base_point_for_crossing_and_disjoint_axes() {
        let a = MobiusMap::diag(2.0).unwrap();
        let b = MobiusMap::rotation(std::f64::consts::FRAC_PI_4).compose(&a).compose(&MobiusMap::rotation(-std::f64::consts::FRAC_PI_4));
        let x = pingpong_base_point(&a, &b);
        assert!(hdistance(&x, &HPoint::i()).unwrap() < 1e-12);
        // axes over [1,2] and [-2,-1]: perpendicular midpoint on the imaginary axis
        let p = crate::hplane::HLine::from_endpoints(BoundaryPoint::Finite(1.0), BoundaryPoint::Finite(2.0)).unwrap();
        let q = crate::hplane::HLine::from_endpoints(BoundaryPoint::Finite(-2.0), BoundaryPoint::Finite(-1.0)).unwrap();
        let hyp_on = |l: &crate::hplane::HLine| {
            let d = MobiusMap::diag(3.0).unwrap();
            l.from_std().compose(&d).compose(l.to_std())
        };
        let x = pingpong_base_point(&hyp_on(&p), &hyp_on(&q));
        assert!(x.x.abs() < 1e-9 && (x.y - 2f64.sqrt()).abs() < 1e-9, "{x:?}");
        assert!((p.distance_to(&x).unwrap() - q.distance_to(&x).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn displacement_criterion_crossing_axes() {
        let lambda = 8f64.exp();
        let a = MobiusMap::diag(lambda).unwrap();
        let r = MobiusMap::rotation(std::f64::consts::FRAC_PI_4);
        let b = r.compose(&a).compose(&r.inverse());
        let cert = free_semigroup_by_displacement(&a, &b, ln3());
        let cert = cert.unwrap_or_else(|e| panic!("{e:?}"));
        assert!(matches!(cert.status, CertificateStatus::CertifiedFreeSemigroup { .. }), "{cert:?}");
    }

    #[test]
    fn displacement_criterion_guards() {
        let a = MobiusMap::diag(0.5f64.exp()).unwrap();
        let r = MobiusMap::rotation(0.3);
        let b = r.compose(&a).compose(&r.inverse());
        let cert = free_semigroup_by_displacement(&a, &b, ln3()).unwrap();
        assert_eq!(cert.status, CertificateStatus::RangeLimited { range: 0 });
        assert!(cert.trail[0].contains("s <= 13 delta"));
        assert!(matches!(free_semigroup_by_displacement(&a, &a.power(2), ln3()), Err(Error::Elementary(_))));
        let shifted = MobiusMap::translation(1.0).compose(&a).compose(&MobiusMap::translation(-1.0));
        assert!(matches!(free_semigroup_by_displacement(&a, &shifted, ln3()), Err(Error::Elementary(_))));
    }

    #[test]
    fn power_threshold() {
        assert_eq!(min_power(2f64.acosh(), ln3()).unwrap(), 11);
        assert_eq!(min_power(14.0 * ln3(), ln3()).unwrap(), 1);
        assert_eq!(min_power(13.0 * ln3(), ln3()).unwrap(), 2);
        assert!(min_power(0.0, ln3()).is_err());
    }

    #[test]
    fn dispatch_cases() {
        let f2 = CayleySpace::free(2);
        let a = Translation(Word::parse("a").unwrap());
        let b = Translation(Word::parse("b").unwrap());
        let e = Word::identity();
        let ba = stable_length_bracket(&f2, &a, &e, 64, 0.0).unwrap();
        let bb = stable_length_bracket(&f2, &b, &e, 64, 0.0).unwrap();
        // δ = 0 puts both lengths above 13δ
        let (case, cert) = margulis_free_dispatch(&f2, &a, &b, &e, 1.0, &ba, &bb, 0.0, 3).unwrap();
        assert_eq!(case, MargulisCase::BothLong);
        assert!(matches!(cert.status, CertificateStatus::CertifiedFreeSemigroup { .. }));
        let (case, _) = margulis_free_dispatch(&f2, &a, &b, &e, 100.0, &ba, &bb, 0.1, 3).unwrap();
        assert_eq!(case, MargulisCase::BothShort);
        let long = Bracket { lo: 5.0, hi: 5.0, n_used: 1, delta_used: 0.1 };
        let (case, _) = margulis_free_dispatch(&f2, &a, &b, &e, 100.0, &ba, &long, 0.1, 3).unwrap();
        assert_eq!(case, MargulisCase::ShortLong);
        let (case, _) = margulis_free_dispatch(&f2, &a, &b, &e, 100.0, &long, &bb, 0.1, 3).unwrap();
        assert_eq!(case, MargulisCase::LongShort);
        assert!(margulis_free_dispatch(&f2, &a, &b, &e, 1.0, &ba, &bb, 0.1, 3).is_err());
    }

    #[test]
    fn oracle_sanov_is_free() {
        let (a, b) = sanov(2);
        assert_eq!(relation_oracle(&a, &b, 10, OracleMode::Group).unwrap(), None);
    }

    #[test]
    fn oracle_finds_modular_relation() {
        let (a, b) = sanov(1);
        let (w1, w2) = relation_oracle(&a, &b, 6, OracleMode::Group).unwrap().expect("relation");
        assert_ne!(w1, w2);
        assert_eq!(evaluate_word(&a, &b, &w1), evaluate_word(&a, &b, &w2));
        let abia = evaluate_word(&a, &b, &Word::parse("aBa").unwrap());
        assert!(abia.compose(&abia).is_identity());
        assert_eq!(relation_oracle(&a, &b, 0, OracleMode::Group).unwrap(), None);
        assert!(matches!(relation_oracle(&a, &b, 15, OracleMode::Group), Err(Error::Budget(_))));
    }

    #[test]
    fn oracle_brute_force_cross_check() {
        // naive quadratic scan over all words as the oracle
        let (a, b) = sanov(1);
        let mut words: Vec<Word> = vec![Word::identity()];
        let mut frontier = vec![Word::identity()];
        for _ in 0..4 {
            let mut next = Vec::new();
            for w in &frontier {
                for g in [1, -1, 2, -2] {
                    if w.letters().last() != Some(&-g) {
                        let mut v = w.clone();
                        v.0.push(g);
                        next.push(v);
                    }
                }
            }
            words.extend(next.iter().cloned());
            frontier = next;
        }
        let found = relation_oracle(&a, &b, 4, OracleMode::Group).unwrap().unwrap();
        let mut first: Option<(Word, Word)> = None;
        'outer: for (j, w2) in words.iter().enumerate() {
            for w1 in &words[..j] {
                if evaluate_word(&a, &b, w1) == evaluate_word(&a, &b, w2) {
                    first = Some((w1.clone(), w2.clone()));
                    break 'outer;
                }
            }
        }
        let first = first.unwrap();
        assert_eq!(first.1.len(), found.1.len());
        assert_eq!(evaluate_word(&a, &b, &found.0), evaluate_word(&a, &b, &found.1));
    }

    #[test]
    fn oracle_big_integer_fallback() {
        // entries near 2⁶⁰ overflow i128 within a few products
        let big = 1i64 << 60;
        let a = RationalMobius::from_integers(1, big, 0, 1).unwrap();
        let b = RationalMobius::from_integers(1, 0, big, 1).unwrap();
        assert_eq!(relation_oracle(&a, &b, 5, OracleMode::Semigroup).unwrap(), None);
    }

    #[test]
    fn semigroup_mode_positive_words_only() {
        let (a, b) = sanov(1);
        // a b⁻¹ a type relations need inverses; the positive monoid of the
        // m = 1 pair is free
        assert_eq!(relation_oracle(&a, &b, 8, OracleMode::Semigroup).unwrap(), None);
        let a = RationalMobius::from_integers(1, 1, 0, 1).unwrap();
        let (w1, w2) = relation_oracle(&a, &a, 2, OracleMode::Semigroup).unwrap().unwrap();
        assert_eq!((w1.to_string(), w2.to_string()), ("a".to_string(), "b".to_string()));
    }

    #[test]
    fn attraction_examples() {
        let g = MobiusMap::diag(3.0).unwrap();
        let x = HPoint::new(1.0, 1.0).unwrap();
        let gx = g.apply(&x).unwrap();
        let at = attraction_membership(&HalfPlane, &g, &x, &gx, 4).unwrap();
        assert!(at.in_plus() && at.k == 1 && at.distance == 0.0);
        let at = attraction_membership(&HalfPlane, &g, &x, &x, 4).unwrap();
        assert!(!at.in_plus() && at.k == 0);
        let y = g.power(-3).apply(&x).unwrap();
        let at = attraction_membership(&HalfPlane, &g, &x, &y, 4).unwrap();
        assert!(!at.in_plus() && at.in_minus());
    }

    #[test]
    fn pack_order_is_length_lex() {
        let words: Vec<Vec<u8>> = vec![vec![], vec![0], vec![3], vec![0, 0], vec![0, 3], vec![2, 0]];
        let packed: Vec<u32> = words.iter().map(|w| pack(w)).collect();
        assert!(packed.windows(2).all(|p| p[0] < p[1]));
        for w in words {
            assert_eq!(unpack(pack(&w)), w);
        }
    }
}
