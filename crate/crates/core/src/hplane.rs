//! The upper half-plane model of the hyperbolic plane and its orientation
//! preserving isometries, z ↦ (az+b)/(cz+d) with ad − bc = 1.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::{Backend, GeodesicProjection, MetricSpace, PointSampler, Projection};
use crate::report::{BoundReport, Direction, GEOMETRY_TOL};

/// Half-width of the trace band classified as parabolic.
pub const TRACE_BAND: f64 = 1e-9;

/// Arclength tolerance of the golden-section projection.
pub const PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("({x}, {y}) is not in the upper half-plane")));
        }
        Ok(HPoint { x, y })
    }

    /// The point i.
    pub fn i() -> Self {
        HPoint { x: 0.0, y: 1.0 }
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.x, self.y).map(|_| ())
    }

    /// Parses `x,y`.
    pub fn parse(s: &str) -> Result<Self> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("expected 'x,y', got '{s}'")))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coordinate '{t}'")));
        Self::new(num(x)?, num(y)?)
    }
}

impl fmt::Display for HPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}i", self.x, self.y)
    }
}

/// d(p,q) = arccosh(1 + |p−q|²/(2 y₁y₂)), evaluated as 2·asinh(|p−q|/(2√(y₁y₂)))
/// which keeps full precision for nearby points.
pub fn hdistance(p: &HPoint, q: &HPoint) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    let chord = (p.x - q.x).hypot(p.y - q.y);
    Ok(2.0 * (chord / (2.0 * (p.y * q.y).sqrt())).asinh())
}

/// A point of ℝ ∪ {∞}, the boundary of the half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    Finite(f64),
    Infinity,
}

impl BoundaryPoint {
    pub fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        match (self, other) {
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => true,
            (BoundaryPoint::Finite(a), BoundaryPoint::Finite(b)) => (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs())),
            _ => false,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            BoundaryPoint::Finite(x) => Some(*x),
            BoundaryPoint::Infinity => None,
        }
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Finite(x) => write!(f, "{x}"),
            BoundaryPoint::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsometryClass {
    Identity,
    /// Fixes one interior point.
    Elliptic { center: HPoint },
    Parabolic { fixed: BoundaryPoint },
    /// Fixed points γ⁻ (repelling) and γ⁺ (attracting).
    Hyperbolic { repelling: BoundaryPoint, attracting: BoundaryPoint },
}

impl IsometryClass {
    pub fn name(&self) -> &'static str {
        match self {
            IsometryClass::Identity => "Identity",
            IsometryClass::Elliptic { .. } => "Elliptic",
            IsometryClass::Parabolic { .. } => "Parabolic",
            IsometryClass::Hyperbolic { .. } => "Hyperbolic",
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, IsometryClass::Hyperbolic { .. })
    }

    /// Boundary fixed points (empty for identity and elliptic maps).
    pub fn boundary_fixed_points(&self) -> Vec<BoundaryPoint> {
        match *self {
            IsometryClass::Parabolic { fixed } => vec![fixed],
            IsometryClass::Hyperbolic { repelling, attracting } => vec![repelling, attracting],
            _ => Vec::new(),
        }
    }
}

/// An element of PSL(2,ℝ): a real matrix of determinant 1 up to sign.
///
/// Stored sign-normalized: the first nonzero entry of (a, b, c, d) is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusMap {
    /// Scales to determinant 1 and sign-normalizes. The determinant must be positive.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !det.is_finite() || !(det > 0.0) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("matrix ({a},{b};{c},{d}) must have positive finite determinant, got {det}")));
        }
        let s = det.sqrt().recip();
        Ok(Self::raw(a * s, b * s, c * s, d * s))
    }

    fn raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        let first = [a, b, c, d].into_iter().find(|v| *v != 0.0).unwrap_or(1.0);
        if first < 0.0 {
            MobiusMap { a: -a, b: -b, c: -c, d: -d }
        } else {
            MobiusMap { a, b, c, d }
        }
    }

    pub fn identity() -> Self {
        MobiusMap { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// z ↦ λ²z.
    pub fn diag(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0, 0.0, lambda.recip())
    }

    /// z ↦ z + t.
    pub fn translation(t: f64) -> Self {
        MobiusMap { a: 1.0, b: t, c: 0.0, d: 1.0 }
    }

    /// Rotation about i by angle 2θ, ((cos θ, sin θ), (−sin θ, cos θ)).
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::raw(c, s, -s, c)
    }

    /// Parses `a,b;c,d`; entries are decimals or `p/q` rationals.
    pub fn parse(s: &str) -> Result<Self> {
        let e = parse_entries(s)?;
        let f: Vec<f64> = e.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
        Self::new(f[0], f[1], f[2], f[3])
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn compose(&self, o: &MobiusMap) -> MobiusMap {
        Self::raw(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> MobiusMap {
        Self::raw(self.d, -self.b, -self.c, self.a)
    }

    /// γⁿ by repeated squaring; negative n powers the inverse.
    pub fn power(&self, n: i64) -> MobiusMap {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = MobiusMap::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// Equality in PSL(2,ℝ) up to `tol` per entry.
    pub fn approx_eq(&self, o: &MobiusMap, tol: f64) -> bool {
        let same = self.entries().iter().zip(o.entries()).all(|(x, y)| (x - y).abs() <= tol);
        let flipped = self.entries().iter().zip(o.entries()).all(|(x, y)| (x + y).abs() <= tol);
        same || flipped
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&MobiusMap::identity(), tol)
    }

    pub fn apply_complex(&self, z: Complex64) -> Result<Complex64> {
        let den = self.c * z + self.d;
        if den.norm() == 0.0 {
            return Err(Error::Domain(format!("{z} is sent to infinity")));
        }
        Ok((self.a * z + self.b) / den)
    }

    pub fn apply(&self, p: &HPoint) -> Result<HPoint> {
        p.validate()?;
        let z = p.to_complex();
        let w = self.apply_complex(z)?;
        // Im w = y/|cz+d|² avoids cancellation in the quotient
        HPoint::new(w.re, p.y / (self.c * z + self.d).norm_sqr())
    }

    pub fn apply_boundary(&self, p: BoundaryPoint) -> BoundaryPoint {
        match p {
            BoundaryPoint::Infinity if self.c == 0.0 => BoundaryPoint::Infinity,
            BoundaryPoint::Infinity => BoundaryPoint::Finite(self.a / self.c),
            BoundaryPoint::Finite(x) => {
                let den = self.c * x + self.d;
                if den == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a * x + self.b) / den)
                }
            }
        }
    }

    /// Classification by |trace| with a ±[`TRACE_BAND`] parabolic band.
    /// Hyperbolic maps inside the band are reported as parabolic.
    pub fn classify(&self) -> IsometryClass {
        let MobiusMap { a, b, c, d } = *self;
        let t = (a + d).abs();
        if (t - 2.0).abs() <= TRACE_BAND {
            if b.abs() <= TRACE_BAND && c.abs() <= TRACE_BAND && (a - d).abs() <= TRACE_BAND {
                return IsometryClass::Identity;
            }
            let fixed = if c == 0.0 {
                BoundaryPoint::Infinity
            } else {
                BoundaryPoint::Finite((a - d) / (2.0 * c))
            };
            return IsometryClass::Parabolic { fixed };
        }
        if t < 2.0 {
            // c ≠ 0 whenever |trace| < 2
            let disc = (4.0 - t * t).sqrt();
            let z = Complex64::new(a - d, disc) / (2.0 * c);
            let z = if z.im > 0.0 { z } else { z.conj() };
            return IsometryClass::Elliptic { center: HPoint { x: z.re, y: z.im } };
        }
        if c == 0.0 {
            let finite = BoundaryPoint::Finite(b / (d - a));
            return if a.abs() > 1.0 {
                IsometryClass::Hyperbolic { repelling: finite, attracting: BoundaryPoint::Infinity }
            } else {
                IsometryClass::Hyperbolic { repelling: BoundaryPoint::Infinity, attracting: finite }
            };
        }
        // roots of cz² + (d−a)z − b = 0
        let disc = ((a + d) * (a + d) - 4.0).sqrt();
        let z1 = (a - d + disc) / (2.0 * c);
        let z2 = (a - d - disc) / (2.0 * c);
        // attracting iff |γ'(z)| = 1/(cz+d)² < 1
        if (c * z1 + d).abs() > 1.0 {
            IsometryClass::Hyperbolic { repelling: BoundaryPoint::Finite(z2), attracting: BoundaryPoint::Finite(z1) }
        } else {
            IsometryClass::Hyperbolic { repelling: BoundaryPoint::Finite(z1), attracting: BoundaryPoint::Finite(z2) }
        }
    }

    /// ℓ(γ) = 2·arccosh(|trace|/2) for hyperbolic γ.
    pub fn closed_form_length(&self) -> Result<f64> {
        match self.classify() {
            IsometryClass::Hyperbolic { .. } => Ok(2.0 * (self.trace().abs() / 2.0).acosh()),
            other => Err(Error::Class(format!("translation length needs a hyperbolic map, got {}", other.name()))),
        }
    }

    /// The axis, oriented from γ⁻ to γ⁺ and parameterized by arclength.
    pub fn axis(&self) -> Result<HLine> {
        match self.classify() {
            IsometryClass::Hyperbolic { repelling, attracting } => HLine::from_endpoints(repelling, attracting),
            other => Err(Error::Class(format!("axis needs a hyperbolic map, got {}", other.name()))),
        }
    }
}

impl fmt::Display for MobiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{};{},{}", self.a, self.b, self.c, self.d)
    }
}

impl FromStr for MobiusMap {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Parses one matrix entry: `p/q`, or a decimal with optional sign and
/// exponent, converted exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad matrix entry '{s}'"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let numer: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(numer);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

fn parse_entries(s: &str) -> Result<[BigRational; 4]> {
    let rows: Vec<&str> = s.split(';').collect();
    if rows.len() != 2 {
        return Err(Error::Parse(format!("matrix must be 'a,b;c,d', got '{s}'")));
    }
    let mut out = Vec::with_capacity(4);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!("matrix must be 'a,b;c,d', got '{s}'")));
        }
        for c in cols {
            out.push(parse_rational(c)?);
        }
    }
    Ok(out.try_into().expect("four entries"))
}

/// A Möbius map with exact rational entries and determinant exactly 1,
/// sign-normalized like [`MobiusMap`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalMobius {
    pub entries: [BigRational; 4],
}

impl RationalMobius {
    /// Accepts any matrix whose determinant is the square of a positive
    /// rational, and scales it to determinant 1.
    pub fn new(entries: [BigRational; 4]) -> Result<Self> {
        let [a, b, c, d] = &entries;
        let det = a * d - b * c;
        if !det.is_positive() {
            return Err(Error::Domain(format!("determinant {det} must be positive")));
        }
        let root = rational_sqrt(&det)
            .ok_or_else(|| Error::Domain(format!("determinant {det} is not a rational square; exact mode needs det 1")))?;
        let mut e = entries.map(|x| x / &root);
        if e.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
            e = e.map(|x| -x);
        }
        Ok(RationalMobius { entries: e })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_entries(s)?)
    }

    pub fn from_integers(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new([a, b, c, d].map(|x| BigRational::from_integer(x.into())))
    }

    pub fn identity() -> Self {
        RationalMobius { entries: [1, 0, 0, 1].map(|x: i64| BigRational::from_integer(x.into())) }
    }

    pub fn compose(&self, o: &RationalMobius) -> RationalMobius {
        let [a, b, c, d] = &self.entries;
        let [e, f, g, h] = &o.entries;
        let mut m = [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h];
        if m.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
            m = m.map(|x| -x);
        }
        RationalMobius { entries: m }
    }

    pub fn inverse(&self) -> RationalMobius {
        let [a, b, c, d] = self.entries.clone();
        let mut m = [d, -b, -c, a];
        if m.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
            m = m.map(|x| -x);
        }
        RationalMobius { entries: m }
    }

    /// Equal to ±I exactly.
    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn to_float(&self) -> MobiusMap {
        let f = self.entries.clone().map(|x| x.to_f64().unwrap_or(f64::NAN));
        MobiusMap::raw(f[0], f[1], f[2], f[3])
    }
}

impl fmt::Display for RationalMobius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.entries;
        write!(f, "{a},{b};{c},{d}")
    }
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| BigRational::new(n, d))
}

/// An oriented geodesic line with unit-speed parameterization.
///
/// Stored as the pair of isometries exchanging it with the imaginary axis
/// oriented from 0 to ∞: `point(t) = from_std(i·eᵗ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HLine {
    from_std: MobiusMap,
    to_std: MobiusMap,
}

impl HLine {
    pub fn imaginary_axis() -> Self {
        HLine { from_std: MobiusMap::identity(), to_std: MobiusMap::identity() }
    }

    fn from_to_std(to_std: MobiusMap) -> Self {
        HLine { from_std: to_std.inverse(), to_std }
    }

    /// The line from boundary point `u` to boundary point `v`.
    pub fn from_endpoints(u: BoundaryPoint, v: BoundaryPoint) -> Result<Self> {
        use BoundaryPoint::*;
        let t = match (u, v) {
            (Finite(u), Infinity) => MobiusMap::raw(1.0, -u, 0.0, 1.0),
            (Infinity, Finite(v)) => MobiusMap::raw(0.0, -1.0, 1.0, -v),
            (Finite(u), Finite(v)) if u < v => MobiusMap::new(1.0, -u, -1.0, v)?,
            (Finite(u), Finite(v)) if u > v => MobiusMap::new(1.0, -u, 1.0, -v)?,
            _ => return Err(Error::Domain(format!("line endpoints {u} and {v} must differ"))),
        };
        Ok(Self::from_to_std(t))
    }

    /// The line through `p` and `q`, with `point(0) = p` and `point(d(p,q)) = q`.
    pub fn through(p: &HPoint, q: &HPoint) -> Result<Self> {
        p.validate()?;
        q.validate()?;
        if p == q {
            return Err(Error::Domain("a line through two points needs distinct points".into()));
        }
        let sy = p.y.sqrt();
        let a_p = MobiusMap::raw(sy, p.x / sy, 0.0, sy.recip());
        let q1 = a_p.inverse().apply_complex(q.to_complex())?;
        let i = Complex64::i();
        let phi = ((q1 - i) / (q1 + i)).arg();
        let from_std = a_p.compose(&MobiusMap::rotation(phi / 2.0));
        Ok(HLine { from_std, to_std: from_std.inverse() })
    }

    pub fn point(&self, t: f64) -> HPoint {
        let w = self.from_std.apply_complex(Complex64::new(0.0, t.exp())).expect("interior points stay finite");
        HPoint { x: w.re, y: w.im }
    }

    pub fn start(&self) -> BoundaryPoint {
        self.from_std.apply_boundary(BoundaryPoint::Finite(0.0))
    }

    pub fn end(&self) -> BoundaryPoint {
        self.from_std.apply_boundary(BoundaryPoint::Infinity)
    }

    fn standard_coords(&self, z: &HPoint) -> Result<Complex64> {
        self.to_std.apply_complex(z.to_complex())
    }

    /// Arclength parameter of the orthogonal projection of `z`.
    pub fn param(&self, z: &HPoint) -> Result<f64> {
        Ok(self.standard_coords(z)?.norm().ln())
    }

    /// Exact distance to the line, asinh(|Re w|/Im w) in standard position.
    pub fn distance_to(&self, z: &HPoint) -> Result<f64> {
        z.validate()?;
        let w = self.standard_coords(z)?;
        Ok((w.re.abs() / w.im).asinh())
    }

    /// Signed distance: positive on the right of the oriented line.
    pub fn signed_distance(&self, z: &HPoint) -> Result<f64> {
        z.validate()?;
        let w = self.standard_coords(z)?;
        Ok((w.re / w.im).asinh())
    }

    /// Orthogonal projection onto the line.
    pub fn foot(&self, z: &HPoint) -> Result<HPoint> {
        Ok(self.point(self.param(z)?))
    }

    /// The point at arclength `t` along the line and signed distance `u`
    /// from it, following the orthogonal geodesic through `point(t)`.
    pub fn offset_point(&self, t: f64, u: f64) -> HPoint {
        let w = Complex64::new(u.tanh(), u.cosh().recip()) * t.exp();
        let z = self.from_std.apply_complex(w).expect("interior points stay finite");
        HPoint { x: z.re, y: z.im }
    }

    /// The same line with the opposite orientation.
    pub fn reversed(&self) -> Self {
        // z ↦ −1/z reverses the imaginary axis and fixes i
        let flip = MobiusMap::raw(0.0, -1.0, 1.0, 0.0);
        Self::from_to_std(flip.compose(&self.to_std))
    }

    pub fn from_std(&self) -> &MobiusMap {
        &self.from_std
    }

    pub fn to_std(&self) -> &MobiusMap {
        &self.to_std
    }
}

/// A closed piece c([t0, t1]) of a line; t0 or t1 may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HGeodesic {
    pub line: HLine,
    pub t0: f64,
    pub t1: f64,
}

impl HGeodesic {
    pub fn segment(p: &HPoint, q: &HPoint) -> Result<Self> {
        let d = hdistance(p, q)?;
        if d == 0.0 {
            return Ok(HGeodesic { line: HLine::through(p, &HPoint { x: p.x, y: p.y * 2.0 })?, t0: 0.0, t1: 0.0 });
        }
        Ok(HGeodesic { line: HLine::through(p, q)?, t0: 0.0, t1: d })
    }

    pub fn full(line: HLine) -> Self {
        HGeodesic { line, t0: f64::NEG_INFINITY, t1: f64::INFINITY }
    }

    pub fn ray(line: HLine) -> Self {
        HGeodesic { line, t0: 0.0, t1: f64::INFINITY }
    }
}

/// Minimizes a unimodal `f` on [lo, hi] to arclength tolerance `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        if x1 == x2 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let ft = f(t);
    [(t, ft), (x1, f1), (x2, f2)].into_iter().fold((t, ft), |best, c| if c.1 < best.1 { c } else { best })
}

/// The hyperbolic plane as a metric space.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfPlane;

impl MetricSpace for HalfPlane {
    type Point = HPoint;

    fn backend(&self) -> Backend {
        Backend::HalfPlane
    }

    fn distance(&self, p: &HPoint, q: &HPoint) -> Result<f64> {
        hdistance(p, q)
    }

    fn geodesic_point(&self, p: &HPoint, q: &HPoint, t: f64) -> Result<HPoint> {
        let d = hdistance(p, q)?;
        if !(t >= -1e-9 && t <= d + 1e-9 * (1.0 + d)) {
            return Err(Error::Domain(format!("arclength {t} outside [0, {d}]")));
        }
        if d == 0.0 {
            return Ok(*p);
        }
        Ok(HLine::through(p, q)?.point(t.clamp(0.0, d)))
    }
}

impl GeodesicProjection for HalfPlane {
    type Geodesic = HGeodesic;

    /// Golden-section minimization of t ↦ d(x, c(t)), which is unimodal.
    /// The bracket shrinks to 1e-10, but since the minimum is quadratic the
    /// foot itself is only resolved to about 1e-8 in arclength; the distance
    /// is accurate to rounding.
    fn project(&self, x: &HPoint, g: &HGeodesic) -> Result<Projection<HPoint>> {
        x.validate()?;
        if !(g.t0 <= g.t1) {
            return Err(Error::Precondition("empty geodesic".into()));
        }
        let f = |t: f64| hdistance(x, &g.line.point(t)).unwrap_or(f64::INFINITY);
        // the minimizer lies within 2·d(x, c(0)) of any base point on the line
        let base = if g.t0.is_finite() { g.t0 } else if g.t1.is_finite() { g.t1 } else { 0.0 };
        let reach = 2.0 * f(base) + 1.0;
        let lo = g.t0.max(base - reach);
        let hi = g.t1.min(base + reach);
        let (t, dist) = golden_section_min(f, lo, hi, PROJECTION_TOL);
        Ok(Projection { foot: g.line.point(t), dist })
    }
}

/// Uniform points of the box [x0,x1] × [y0,y1].
#[derive(Debug, Clone, Copy)]
pub struct BoxSampler {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BoxSampler {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 <= x1 && 0.0 < y0 && y0 <= y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad sampling box [{x0},{x1}]x[{y0},{y1}]")));
        }
        Ok(BoxSampler { x0, x1, y0, y1 })
    }

    /// Parses `x0,x1,y0,y1`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad box coordinate '{t}'"))))
            .collect::<Result<_>>()?;
        if v.len() != 4 {
            return Err(Error::Parse(format!("box must be x0,x1,y0,y1, got '{s}'")));
        }
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl Default for BoxSampler {
    fn default() -> Self {
        BoxSampler { x0: -5.0, x1: 5.0, y0: 0.1, y1: 10.0 }
    }
}

impl PointSampler<HPoint> for BoxSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> HPoint {
        let x = if self.x0 < self.x1 { rng.random_range(self.x0..self.x1) } else { self.x0 };
        let y = if self.y0 < self.y1 { rng.random_range(self.y0..self.y1) } else { self.y0 };
        HPoint { x, y }
    }
}

/// Samples d(c(t), γ c(t)) for t ∈ [T, T+10] along a ray c ending at the
/// fixed point of the parabolic γ, against the bound 7δ.
pub fn check_busemann_displacement(gamma: &MobiusMap, ray: &HLine, t_start: f64, delta: f64) -> Result<BoundReport> {
    let fixed = match gamma.classify() {
        IsometryClass::Parabolic { fixed } => fixed,
        other => return Err(Error::Class(format!("expected a parabolic map, got {}", other.name()))),
    };
    if !ray.end().approx_eq(&fixed, 1e-9) {
        return Err(Error::Precondition(format!("ray ends at {} but the fixed point is {fixed}", ray.end())));
    }
    let c0 = ray.point(0.0);
    let d0 = hdistance(&c0, &gamma.apply(&c0)?)?;
    if t_start < d0 - GEOMETRY_TOL {
        return Err(Error::Precondition(format!("T = {t_start} is below d(c(0), g c(0)) = {d0}")));
    }
    let mut worst = 0.0f64;
    for k in 0..=200 {
        let c = ray.point(t_start + 10.0 * k as f64 / 200.0);
        worst = worst.max(hdistance(&c, &gamma.apply(&c)?)?);
    }
    Ok(BoundReport::evaluate(
        "busemann-displacement",
        "d(c(t), g c(t)) <= 7 delta for t >= T along a ray to the parabolic fixed point",
        worst,
        7.0 * delta,
        Direction::Le,
        false,
        GEOMETRY_TOL,
    )
    .with_inputs([("T", t_start), ("delta", delta), ("d0", d0)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> HPoint {
        HPoint::new(x, y).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hdistance(&HPoint::i(), &HPoint::i()).unwrap(), 0.0);
        assert!(close(hdistance(&pt(0.0, 1.0), &pt(0.0, 2.0)).unwrap(), 2f64.ln(), 1e-15));
        assert!(close(hdistance(&pt(0.0, 1.0), &pt(1.0, 1.0)).unwrap(), 1.5f64.acosh(), 1e-15));
        assert!(HPoint::new(0.0, 0.0).is_err());
        assert!(hdistance(&HPoint { x: 0.0, y: -1.0 }, &HPoint::i()).is_err());
    }

    #[test]
    fn apply_examples() {
        let m = MobiusMap::new(2.0, 0.0, 0.0, 0.5).unwrap();
        let w = m.apply(&HPoint::i()).unwrap();
        assert!(close(w.x, 0.0, 1e-15) && close(w.y, 4.0, 1e-15));
        let t = MobiusMap::parse("1,1;0,1").unwrap().apply(&HPoint::i()).unwrap();
        assert_eq!((t.x, t.y), (1.0, 1.0));
    }

    #[test]
    fn parse_normalizes() {
        let m = MobiusMap::parse("-2,0;0,-1/2").unwrap();
        assert_eq!(m.entries(), [2.0, 0.0, 0.0, 0.5]);
        let m = MobiusMap::parse("4,0;0,1").unwrap();
        assert_eq!(m.entries(), [2.0, 0.0, 0.0, 0.5]);
        assert!(MobiusMap::parse("1,2;3").is_err());
        assert!(MobiusMap::parse("0,1;1,0").is_err(), "negative determinant");
        assert!(MobiusMap::parse("1,x;0,1").is_err());
        assert_eq!(parse_rational("-1.25e1").unwrap(), BigRational::new((-25).into(), 2.into()));
    }

    #[test]
    fn classification_examples() {
        let para = MobiusMap::parse("1,1;0,1").unwrap().classify();
        assert_eq!(para, IsometryClass::Parabolic { fixed: BoundaryPoint::Infinity });
        let hyp = MobiusMap::parse("2,0;0,0.5").unwrap().classify();
        assert_eq!(
            hyp,
            IsometryClass::Hyperbolic { repelling: BoundaryPoint::Finite(0.0), attracting: BoundaryPoint::Infinity }
        );
        let ell = MobiusMap::parse("0,1;-1,0").unwrap().classify();
        match ell {
            IsometryClass::Elliptic { center } => assert!(close(center.x, 0.0, 1e-12) && close(center.y, 1.0, 1e-12)),
            other => panic!("{other:?}"),
        }
        assert_eq!(MobiusMap::parse("-1,0;0,-1").unwrap().classify(), IsometryClass::Identity);
    }

    #[test]
    fn fixed_points_are_fixed_and_attracting() {
        let m = MobiusMap::parse("3,1;5,2").unwrap();
        let IsometryClass::Hyperbolic { repelling, attracting } = m.classify() else { panic!() };
        for p in [repelling, attracting] {
            assert!(m.apply_boundary(p).approx_eq(&p, 1e-9));
        }
        // forward iterates converge to the attracting point
        let z = m.power(30).apply(&pt(0.3, 0.7)).unwrap();
        assert!(close(z.x, attracting.finite().unwrap(), 1e-9));
    }

    #[test]
    fn closed_form_lengths() {
        let m = MobiusMap::diag(2.0).unwrap();
        assert!(close(m.closed_form_length().unwrap(), 4f64.ln(), 1e-12));
        let e = MobiusMap::diag(1f64.exp()).unwrap();
        assert!(close(e.closed_form_length().unwrap(), 2.0, 1e-12));
        assert!(matches!(MobiusMap::translation(1.0).closed_form_length(), Err(Error::Class(_))));
    }

    #[test]
    fn closed_form_matches_iterated_displacement() {
        // oracle: d(x, γⁿ x)/n → ℓ(γ), here up to n = 2⁸ before the entries overflow
        let m = MobiusMap::diag(2.0).unwrap();
        let p = pt(1.0, 1.0);
        let mut last = f64::INFINITY;
        for k in 0..=8 {
            let n = 1i64 << k;
            let r = hdistance(&p, &m.power(n).apply(&p).unwrap()).unwrap() / n as f64;
            assert!(r <= last + 1e-12);
            last = r;
        }
        assert!(close(last, m.closed_form_length().unwrap(), 0.01));
    }

    #[test]
    fn axes() {
        let diag = MobiusMap::diag(2.0).unwrap().axis().unwrap();
        assert!(close(diag.point(0.0).x, 0.0, 1e-15) && close(diag.point(1.0).y, 1f64.exp(), 1e-12));
        // fixed points ±1
        let m = MobiusMap::new(2.0f64.cosh(), 2.0f64.sinh(), 2.0f64.sinh(), 2.0f64.cosh()).unwrap();
        let axis = m.axis().unwrap();
        for t in [-2.0, 0.0, 1.5] {
            let p = axis.point(t);
            assert!(close(p.x * p.x + p.y * p.y, 1.0, 1e-12));
        }
        let conj = MobiusMap::translation(1.0)
            .compose(&MobiusMap::diag(2.0).unwrap())
            .compose(&MobiusMap::translation(-1.0));
        let axis = conj.axis().unwrap();
        assert!(close(axis.point(0.7).x, 1.0, 1e-12));
        assert_eq!(axis.end(), BoundaryPoint::Infinity);
    }

    #[test]
    fn axis_is_translated_by_the_length() {
        let m = MobiusMap::parse("3,1;5,2").unwrap();
        let axis = m.axis().unwrap();
        let l = m.closed_form_length().unwrap();
        for t in [-1.0, 0.0, 0.5, 2.0] {
            let moved = m.apply(&axis.point(t)).unwrap();
            assert!(hdistance(&moved, &axis.point(t + l)).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn line_through_two_points() {
        let p = pt(0.3, 0.8);
        let q = pt(-2.0, 3.5);
        let line = HLine::through(&p, &q).unwrap();
        let d = hdistance(&p, &q).unwrap();
        assert!(hdistance(&line.point(0.0), &p).unwrap() < 1e-12);
        assert!(hdistance(&line.point(d), &q).unwrap() < 1e-9);
        let mid = HalfPlane.geodesic_point(&p, &q, d / 3.0).unwrap();
        assert!(close(hdistance(&p, &mid).unwrap(), d / 3.0, 1e-9));
    }

    #[test]
    fn reversed_line_has_swapped_ends() {
        let line = HLine::from_endpoints(BoundaryPoint::Finite(-1.0), BoundaryPoint::Finite(2.0)).unwrap();
        let r = line.reversed();
        assert!(r.start().approx_eq(&BoundaryPoint::Finite(2.0), 1e-12));
        assert!(r.end().approx_eq(&BoundaryPoint::Finite(-1.0), 1e-12));
    }

    #[test]
    fn projection_onto_imaginary_axis() {
        let x = pt(1.0, 1.0);
        let proj = HalfPlane.project(&x, &HGeodesic::full(HLine::imaginary_axis())).unwrap();
        assert!(close(proj.dist, 1f64.asinh(), 1e-12));
        // value comparisons resolve a quadratic minimum to about √ε in arclength
        assert!(close(proj.foot.x, 0.0, 1e-7) && close(proj.foot.y, 2f64.sqrt(), 1e-7));
        let on = HalfPlane.project(&pt(0.0, 3.0), &HGeodesic::full(HLine::imaginary_axis())).unwrap();
        assert!(on.dist < 1e-12);
        let closed = HLine::imaginary_axis().distance_to(&x).unwrap();
        assert!(close(closed, proj.dist, 1e-12));
        let empty = HGeodesic { line: HLine::imaginary_axis(), t0: 1.0, t1: 0.0 };
        assert!(HalfPlane.project(&x, &empty).is_err());
    }

    #[test]
    fn offset_points_have_the_requested_distance() {
        let line = HLine::from_endpoints(BoundaryPoint::Finite(-3.0), BoundaryPoint::Finite(0.5)).unwrap();
        let z = line.offset_point(0.4, -1.3);
        assert!(close(line.signed_distance(&z).unwrap(), -1.3, 1e-12));
        assert!(close(line.param(&z).unwrap(), 0.4, 1e-12));
    }

    #[test]
    fn rational_mode() {
        let a = RationalMobius::parse("1,2;0,1").unwrap();
        let b = RationalMobius::parse("1,0;2,1").unwrap();
        assert!(a.compose(&a.inverse()).is_identity());
        assert!(!a.compose(&b).is_identity());
        let half = RationalMobius::parse("4,0;0,1").unwrap();
        assert_eq!(half.to_float().entries(), [2.0, 0.0, 0.0, 0.5]);
        assert!(RationalMobius::parse("2,0;0,1").is_err());
        let neg = RationalMobius::parse("-1,0;0,-1").unwrap();
        assert!(neg.is_identity());
    }

    #[test]
    fn busemann_examples() {
        let g = MobiusMap::translation(1.0);
        let ray = HLine::imaginary_axis();
        let d0 = 1.5f64.acosh();
        let r = check_busemann_displacement(&g, &ray, d0, 3f64.ln()).unwrap();
        assert!(r.holds);
        assert!(r.lhs <= d0);
        let far = check_busemann_displacement(&g, &ray, 20.0, 3f64.ln()).unwrap();
        assert!(far.lhs < 1e-8);
        assert!(check_busemann_displacement(&g, &ray.reversed(), 5.0, 3f64.ln()).is_err());
        assert!(check_busemann_displacement(&g, &ray, 0.1, 3f64.ln()).is_err());
    }
}
