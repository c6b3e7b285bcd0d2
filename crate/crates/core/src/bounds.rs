//! Closed-form constants and the checks that pair them with measurements.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::sync::Mutex;

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One, ToPrimitive};
use serde_json::{json, Value};

use crate::entropy::{check_cocompact_doubling, check_entropy_action};
use crate::error::{Error, Result};
use crate::report::{json_f64, BoundReport, Direction, FORMULA_TOL};

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and positive, got {v}")))
    }
}

/// ln2/(L + 14δ + 4D) and its simplification ln2/(16D + 26δ).
pub fn entropy_lower_cocompact(delta: f64, diameter: f64, min_length: f64) -> Result<(f64, f64)> {
    nonneg("delta", delta)?;
    nonneg("D", diameter)?;
    nonneg("L", min_length)?;
    let (d1, d2) = (min_length + 14.0 * delta + 4.0 * diameter, 16.0 * diameter + 26.0 * delta);
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::Domain("zero denominator: delta and D both vanish".into()));
    }
    Ok((LN_2 / d1, LN_2 / d2))
}

/// ln2/(26δ + 16).
pub fn entropy_lower_group(delta: f64) -> Result<f64> {
    nonneg("delta", delta)?;
    Ok(LN_2 / (26.0 * delta + 16.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TitsThresholds {
    /// 1/(750δ).
    pub entropy: f64,
    /// 3⁻³⁴·δ·M₀·e^{−4M₀/29}; may underflow, see `ln_length`.
    pub length: f64,
    pub ln_length: f64,
    pub m0: f64,
}

pub fn tits_dichotomy(delta: f64, diameter: f64) -> Result<TitsThresholds> {
    positive("delta", delta)?;
    nonneg("D", diameter)?;
    let m0 = (20.0 * (diameter / delta + 2.0)).max(720.0);
    let ln_length = -34.0 * 3f64.ln() + delta.ln() + m0.ln() - 4.0 * m0 / 29.0;
    Ok(TitsThresholds { entropy: 1.0 / (750.0 * delta), length: ln_length.exp(), ln_length, m0 })
}

/// The non-explicit function p ↦ N(p) bounding the index of a virtually
/// nilpotent subgroup; supplied by the caller.
pub trait IndexBound: Sync {
    fn eval(&self, p: &BigUint) -> Result<BigUint>;
}

impl<F> IndexBound for F
where
    F: Fn(&BigUint) -> Result<BigUint> + Sync,
{
    fn eval(&self, p: &BigUint) -> Result<BigUint> {
        self(p)
    }
}

/// Mock N ≡ c.
#[derive(Debug, Clone, Copy)]
pub struct ConstantIndexBound(pub u64);

impl IndexBound for ConstantIndexBound {
    fn eval(&self, _p: &BigUint) -> Result<BigUint> {
        Ok(BigUint::from(self.0))
    }
}

/// Wraps a user function and rejects values below 1 or queries that
/// contradict monotonicity with earlier ones.
pub struct MonotoneIndexBound<F> {
    inner: F,
    seen: Mutex<BTreeMap<BigUint, BigUint>>,
}

impl<F: IndexBound> MonotoneIndexBound<F> {
    pub fn new(inner: F) -> Self {
        MonotoneIndexBound { inner, seen: Mutex::new(BTreeMap::new()) }
    }
}

impl<F: IndexBound> IndexBound for MonotoneIndexBound<F> {
    fn eval(&self, p: &BigUint) -> Result<BigUint> {
        let v = self.inner.eval(p)?;
        if v < BigUint::one() {
            return Err(Error::Domain(format!("N({p}) = {v} is below 1")));
        }
        let mut seen = self.seen.lock().expect("poisoned");
        let below = seen.range(..p.clone()).next_back().map(|(_, n)| n.clone());
        let above = seen.range(p.clone()..).next().map(|(_, n)| n.clone());
        if below.is_some_and(|b| b > v) || above.is_some_and(|a| a < v) {
            return Err(Error::Domain(format!("N is not monotone at {p}")));
        }
        seen.insert(p.clone(), v.clone());
        Ok(v)
    }
}

/// ⌊e^{ln_v}⌋ as an integer, exact to 53 significant bits.
fn floor_exp(ln_v: f64) -> BigUint {
    if ln_v < 700.0 {
        return BigUint::from_f64(ln_v.exp().floor()).unwrap_or_default();
    }
    let bits = ln_v / LN_2;
    let shift = bits.floor() - 52.0;
    let mantissa = (bits - shift).exp2().floor() as u64;
    BigUint::from(mantissa) << (shift as usize)
}

fn big_ln(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map_or(f64::INFINITY, f64::ln);
    }
    let shift = bits - 64;
    (n >> shift).to_f64().expect("64 bits").ln() + shift as f64 * LN_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct MargulisConstants {
    /// 20(D + 2δ).
    pub r0: f64,
    /// ⌊3¹²e^{490H(D+2δ)}⌋ + 1, the argument handed to N.
    pub argument: BigUint,
    /// False when the floor was taken of a rounded exponential (H > 0).
    pub argument_exact: bool,
    pub n0: BigUint,
    /// R₀/N₀.
    pub eps0: f64,
    /// 2·3⁻¹²·e^{−½(N₀+10)(13HR₀+3)}·R₀.
    pub s0: f64,
    pub ln_eps0: f64,
    pub ln_s0: f64,
}

impl MargulisConstants {
    pub fn to_json(&self) -> Value {
        json!({
            "R0": json_f64(self.r0),
            "argument": self.argument.to_string(),
            "argument_exact": self.argument_exact,
            "N0": self.n0.to_string(),
            "eps0": json_f64(self.eps0),
            "s0": json_f64(self.s0),
            "ln_eps0": json_f64(self.ln_eps0),
            "ln_s0": json_f64(self.ln_s0),
        })
    }
}

pub fn margulis_constants(delta: f64, entropy: f64, diameter: f64, n: &dyn IndexBound) -> Result<MargulisConstants> {
    nonneg("delta", delta)?;
    nonneg("H", entropy)?;
    nonneg("D", diameter)?;
    let r0 = 20.0 * (diameter + 2.0 * delta);
    if r0 == 0.0 {
        return Err(Error::Domain("R0 = 20(D + 2 delta) vanishes".into()));
    }
    let argument_exact = entropy == 0.0;
    let argument = if argument_exact {
        BigUint::from(3u32).pow(12)
    } else {
        floor_exp(12.0 * 3f64.ln() + 490.0 * entropy * (diameter + 2.0 * delta))
    } + 1u32;
    let n0 = n.eval(&argument)?;
    if n0 < BigUint::one() {
        return Err(Error::Domain(format!("N returned {n0}, below 1")));
    }
    let ln_n0 = big_ln(&n0);
    let n0f = n0.to_f64().unwrap_or(f64::INFINITY);
    let ln_eps0 = r0.ln() - ln_n0;
    let ln_s0 = LN_2 - 12.0 * 3f64.ln() + r0.ln() - 0.5 * (n0f + 10.0) * (13.0 * entropy * r0 + 3.0);
    Ok(MargulisConstants { r0, argument, argument_exact, n0, eps0: ln_eps0.exp(), s0: ln_s0.exp(), ln_eps0, ln_s0 })
}

/// N₁ = 1 + ⌊13δ/α⌋.
pub fn n1(delta: f64, alpha: f64) -> Result<u64> {
    nonneg("delta", delta)?;
    positive("alpha", alpha)?;
    Ok(1 + (13.0 * delta / alpha).floor() as u64)
}

/// (1/(N₁H))·Max[ln 2, ln(1/(N₁·H·sys))].
pub fn collar_lower(delta: f64, alpha: f64, entropy: f64, sys: f64) -> Result<f64> {
    positive("H", entropy)?;
    positive("sys", sys)?;
    let n = n1(delta, alpha)? as f64;
    Ok(LN_2.max(-(n * entropy * sys).ln()) / (n * entropy))
}

/// (1/(N₁H))·e^{−2N₁HD}.
pub fn systole_global_lower(delta: f64, alpha: f64, entropy: f64, diameter: f64) -> Result<f64> {
    positive("H", entropy)?;
    nonneg("D", diameter)?;
    let n = n1(delta, alpha)? as f64;
    Ok((-2.0 * n * entropy * diameter).exp() / (n * entropy))
}

/// ε₁ = ln2/(H(⌊13δ/α⌋ + 1)).
pub fn diastole_lower(delta: f64, alpha: f64, entropy: f64) -> Result<f64> {
    positive("H", entropy)?;
    Ok(LN_2 / (entropy * n1(delta, alpha)? as f64))
}

/// ε₀ = α/(2H(13δ + α)) and R_ε = ε₀·ln(2ε₀/ε) for 0 < ε ≤ ε₀.
pub fn tube_radii(delta: f64, alpha: f64, entropy: f64, eps: f64) -> Result<(f64, f64)> {
    nonneg("delta", delta)?;
    positive("alpha", alpha)?;
    positive("H", entropy)?;
    positive("eps", eps)?;
    let eps0 = alpha / (2.0 * entropy * (13.0 * delta + alpha));
    if eps > eps0 {
        return Err(Error::Precondition(format!("eps = {eps} exceeds eps0 = {eps0}")));
    }
    Ok((eps0, eps0 * (2.0 * eps0 / eps).ln()))
}

/// 21δ/(N(20δ) + 2).
pub fn ht_constant_from_acylindrical(delta: f64, n_20delta: u64) -> Result<f64> {
    nonneg("delta", delta)?;
    Ok(21.0 * delta / (n_20delta as f64 + 2.0))
}

/// Catalog formula names accepted by [`evaluate_formula`].
pub const FORMULAS: &[&str] = &[
    "entropy_lower_cocompact",
    "entropy_lower_group",
    "tits_dichotomy",
    "margulis_constants",
    "collar_lower",
    "systole_global_lower",
    "diastole_lower",
    "tube_radii",
    "ht_constant",
];

/// Check names accepted by [`check_named_bound`].
pub const CHECKS: &[&str] = &[
    "entropy-lower-group",
    "entropy-lower-cocompact",
    "tits-dichotomy",
    "cocompact-doubling",
    "systole-global",
    "diastole",
    "collar",
    "entropy-action-max",
    "entropy-action-min",
    "ht-length",
];

struct Params<'a>(&'a BTreeMap<String, f64>);

impl Params<'_> {
    fn get(&self, k: &str) -> Result<f64> {
        self.0.get(k).copied().ok_or_else(|| Error::InvalidParameter(format!("missing parameter {k}")))
    }

    fn or(&self, k: &str, default: f64) -> f64 {
        self.0.get(k).copied().unwrap_or(default)
    }

    fn count(&self, k: &str) -> Result<u64> {
        let v = self.get(k)?;
        if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
            Ok(v as u64)
        } else {
            Err(Error::InvalidParameter(format!("{k} must be a nonnegative integer, got {v}")))
        }
    }
}

/// Evaluates a catalog formula from named parameters.
pub fn evaluate_formula(name: &str, params: &BTreeMap<String, f64>) -> Result<Value> {
    let p = Params(params);
    Ok(match name {
        "entropy_lower_cocompact" => {
            let (full, simple) = entropy_lower_cocompact(p.get("delta")?, p.get("D")?, p.or("L", 0.0))?;
            json!({"value": json_f64(full), "simplified": json_f64(simple)})
        }
        "entropy_lower_group" => json!({"value": json_f64(entropy_lower_group(p.get("delta")?)?)}),
        "tits_dichotomy" => {
            let t = tits_dichotomy(p.get("delta")?, p.get("D")?)?;
            json!({"entropy_threshold": json_f64(t.entropy), "length_threshold": json_f64(t.length),
                   "ln_length_threshold": json_f64(t.ln_length), "M0": json_f64(t.m0)})
        }
        "margulis_constants" => {
            let n = MonotoneIndexBound::new(ConstantIndexBound(p.count("N")?));
            margulis_constants(p.get("delta")?, p.get("H")?, p.get("D")?, &n)?.to_json()
        }
        "collar_lower" => json!({
            "value": json_f64(collar_lower(p.get("delta")?, p.get("alpha")?, p.get("H")?, p.get("sys")?)?),
            "N1": n1(p.get("delta")?, p.get("alpha")?)?,
        }),
        "systole_global_lower" => json!({
            "value": json_f64(systole_global_lower(p.get("delta")?, p.get("alpha")?, p.get("H")?, p.get("D")?)?),
            "N1": n1(p.get("delta")?, p.get("alpha")?)?,
        }),
        "diastole_lower" => json!({"value": json_f64(diastole_lower(p.get("delta")?, p.get("alpha")?, p.get("H")?)?)}),
        "tube_radii" => {
            let (eps0, r) = tube_radii(p.get("delta")?, p.get("alpha")?, p.get("H")?, p.get("eps")?)?;
            json!({"eps0": json_f64(eps0), "R_eps": json_f64(r)})
        }
        "ht_constant" => json!({"value": json_f64(ht_constant_from_acylindrical(p.get("delta")?, p.count("N")?)?)}),
        _ => return Err(Error::InvalidParameter(format!("unknown formula {name}"))),
    })
}

/// Pairs a catalog formula with measured quantities.
///
/// | name | measured | inequality |
/// |---|---|---|
/// | entropy-lower-group | slope | slope ≥ ln2/(26δ+16) |
/// | entropy-lower-cocompact | slope | slope ≥ ln2/(L+14δ+4D) |
/// | tits-dichotomy | slope, ell | slope > 1/(750δ) or ell > length threshold |
/// | cocompact-doubling | ratio | ratio ≤ 81·e^{6.5HR} when R ≥ 10(D+2δ) |
/// | systole-global | sys | sys ≥ (1/(N₁H))e^{−2N₁HD} |
/// | diastole | dias | dias ≥ ε₁ |
/// | collar | d, sys | d > collar_lower(sys) |
/// | entropy-action-max, -min | l1, l2 | as in [`check_entropy_action`] |
/// | ht-length | ell | ell ≥ 21δ/(N+2) |
pub fn check_named_bound(name: &str, params: &BTreeMap<String, f64>) -> Result<BoundReport> {
    let p = Params(params);
    let echo = |r: BoundReport| -> BoundReport {
        let inputs: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        r.with_inputs(inputs)
    };
    let report = match name {
        "entropy-lower-group" => BoundReport::evaluate(
            name,
            "Ent >= ln 2 / (26 delta + 16)",
            p.get("slope")?,
            entropy_lower_group(p.get("delta")?)?,
            Direction::Ge,
            false,
            FORMULA_TOL,
        ),
        "entropy-lower-cocompact" => BoundReport::evaluate(
            name,
            "Ent >= ln 2 / (L + 14 delta + 4 D)",
            p.get("slope")?,
            entropy_lower_cocompact(p.get("delta")?, p.get("D")?, p.or("L", 0.0))?.0,
            Direction::Ge,
            false,
            FORMULA_TOL,
        ),
        "tits-dichotomy" => {
            let t = tits_dichotomy(p.get("delta")?, p.get("D")?)?;
            let by_entropy = p.get("slope")? / t.entropy;
            let by_length = (p.get("ell")?.ln() - t.ln_length).exp();
            BoundReport::evaluate(
                name,
                "consistent: Ent > 1/(750 delta) or ell > 3^-34 delta M0 exp(-4 M0/29)",
                by_entropy.max(by_length),
                1.0,
                Direction::Ge,
                true,
                FORMULA_TOL,
            )
        }
        "cocompact-doubling" => {
            check_cocompact_doubling(p.get("ratio")?, p.get("R")?, p.get("H")?, p.get("D")?, p.get("delta")?)
        }
        "systole-global" => BoundReport::evaluate(
            name,
            "Sys >= exp(-2 N1 H D) / (N1 H)",
            p.get("sys")?,
            systole_global_lower(p.get("delta")?, p.get("alpha")?, p.get("H")?, p.get("D")?)?,
            Direction::Ge,
            false,
            FORMULA_TOL,
        ),
        "diastole" => BoundReport::evaluate(
            name,
            "Dias >= ln 2 / (H N1)",
            p.get("dias")?,
            diastole_lower(p.get("delta")?, p.get("alpha")?, p.get("H")?)?,
            Direction::Ge,
            false,
            FORMULA_TOL,
        ),
        "collar" => BoundReport::evaluate(
            name,
            "d(y, gamma y) > Max[ln 2, ln(1/(N1 H sys))] / (N1 H) for gamma not commuting with the systole",
            p.get("d")?,
            collar_lower(p.get("delta")?, p.get("alpha")?, p.get("H")?, p.get("sys")?)?,
            Direction::Ge,
            true,
            FORMULA_TOL,
        ),
        "entropy-action-max" | "entropy-action-min" => {
            let [max, min] = check_entropy_action(p.get("l1")?, p.get("l2")?, p.get("H")?)?;
            if name == "entropy-action-max" {
                max
            } else {
                min
            }
        }
        "ht-length" => BoundReport::evaluate(
            name,
            "ell >= 21 delta / (N(20 delta) + 2)",
            p.get("ell")?,
            ht_constant_from_acylindrical(p.get("delta")?, p.count("N")?)?,
            Direction::Ge,
            false,
            FORMULA_TOL,
        ),
        _ => return Err(Error::InvalidParameter(format!("unknown bound {name}"))),
    };
    Ok(echo(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln3() -> f64 {
        3f64.ln()
    }

    fn alpha() -> f64 {
        2f64.acosh()
    }

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn entropy_lower_values() {
        let (a, b) = entropy_lower_cocompact(0.0, 1.0, 0.0).unwrap();
        assert!((a - LN_2 / 4.0).abs() < 1e-15 && (b - LN_2 / 16.0).abs() < 1e-15);
        assert!((entropy_lower_cocompact(1.0, 1.0, 12.0).unwrap().0 - LN_2 / 30.0).abs() < 1e-15);
        assert!(entropy_lower_cocompact(0.0, 0.0, 0.0).is_err());
        assert_eq!(entropy_lower_group(0.0).unwrap(), LN_2 / 16.0);
        assert_eq!(entropy_lower_group(1.0).unwrap(), LN_2 / 42.0);
        assert!(entropy_lower_group(2.0).unwrap() < entropy_lower_group(1.0).unwrap());
    }

    #[test]
    fn tits_values() {
        let t = tits_dichotomy(1.0, 1.0).unwrap();
        assert_eq!(t.m0, 720.0);
        assert_eq!(t.entropy, 1.0 / 750.0);
        let expected = 720.0 * 3f64.powi(-34) * (-2880.0f64 / 29.0).exp();
        assert!((t.length / expected - 1.0).abs() < 1e-12);
        assert_eq!(tits_dichotomy(1.0, 100.0).unwrap().m0, 2040.0);
        assert_eq!(tits_dichotomy(1.0, 0.0).unwrap().m0, 720.0);
        assert!(tits_dichotomy(0.0, 1.0).is_err());
        assert!(tits_dichotomy(1.0, 1e6).unwrap().ln_length.is_finite());
    }

    #[test]
    fn margulis_values() {
        let c = margulis_constants(1.0, 0.0, 1.0, &ConstantIndexBound(100)).unwrap();
        assert_eq!(c.r0, 60.0);
        assert_eq!(c.n0, BigUint::from(100u32));
        assert!((c.eps0 - 0.6).abs() < 1e-12);
        let expected = 2.0 * 3f64.powi(-12) * (-165.0f64).exp() * 60.0;
        assert!((c.s0 / expected - 1.0).abs() < 1e-12);
        assert_eq!(c.argument, BigUint::from(531442u32));
        assert!(c.argument_exact);
        assert!(margulis_constants(0.0, 0.0, 0.0, &ConstantIndexBound(1)).is_err());
        // huge argument still reaches N as an exact integer
        let c = margulis_constants(1.0, 1.0, 1.0, &|p: &BigUint| Ok(p.clone())).unwrap();
        assert!(c.argument.bits() > 2000);
        assert!(!c.argument_exact);
        assert!(c.ln_eps0 < -1000.0 && c.eps0 == 0.0);
    }

    #[test]
    fn margulis_antitone_in_n() {
        for (lo, hi) in [(1u64, 2u64), (5, 50), (100, 1000)] {
            let a = margulis_constants(0.5, 0.1, 1.0, &ConstantIndexBound(lo)).unwrap();
            let b = margulis_constants(0.5, 0.1, 1.0, &ConstantIndexBound(hi)).unwrap();
            assert!(a.eps0 >= b.eps0 && a.ln_s0 >= b.ln_s0);
        }
    }

    #[test]
    fn monotone_wrapper() {
        let bad = MonotoneIndexBound::new(|p: &BigUint| Ok(if p.bits() > 3 { BigUint::from(1u32) } else { BigUint::from(9u32) }));
        assert!(bad.eval(&BigUint::from(2u32)).is_ok());
        assert!(bad.eval(&BigUint::from(100u32)).is_err());
        let zero = MonotoneIndexBound::new(ConstantIndexBound(0));
        assert!(zero.eval(&BigUint::from(1u32)).is_err());
    }

    #[test]
    fn ht_values() {
        assert_eq!(n1(ln3(), alpha()).unwrap(), 11);
        let c = collar_lower(ln3(), alpha(), 1.0, 0.01).unwrap();
        assert!((c - (100.0f64 / 11.0).ln() / 11.0).abs() < 1e-12);
        assert!((c - 0.2007).abs() < 1e-4);
        assert!((collar_lower(ln3(), alpha(), 1.0, 10.0).unwrap() - LN_2 / 11.0).abs() < 1e-15);
        assert!((systole_global_lower(ln3(), alpha(), 1.0, 1.0).unwrap() - (-22f64).exp() / 11.0).abs() < 1e-20);
        assert_eq!(systole_global_lower(ln3(), alpha(), 1.0, 0.0).unwrap(), 1.0 / 11.0);
        assert!((diastole_lower(ln3(), alpha(), 1.0).unwrap() - LN_2 / 11.0).abs() < 1e-15);
        assert_eq!(diastole_lower(1.0, 13.5, 1.0).unwrap(), LN_2);
        assert_eq!(diastole_lower(1.0, 13.0, 1.0).unwrap(), LN_2 / 2.0);
        assert!((diastole_lower(ln3(), alpha(), 2.0).unwrap() * 2.0 - diastole_lower(ln3(), alpha(), 1.0).unwrap()).abs() < 1e-15);
        assert!(collar_lower(ln3(), alpha(), 1.0, 0.0).is_err());
    }

    #[test]
    fn tube_values() {
        let (eps0, r) = tube_radii(ln3(), alpha(), 1.0, 0.01).unwrap();
        assert!((eps0 - 0.04221).abs() < 1e-5);
        assert!(r > eps0 * LN_2);
        let (_, r0) = tube_radii(ln3(), alpha(), 1.0, eps0).unwrap();
        assert!((r0 - eps0 * LN_2).abs() < 1e-15 && (r0 - 0.02926).abs() < 1e-5);
        let (_, re) = tube_radii(ln3(), alpha(), 1.0, eps0 / std::f64::consts::E).unwrap();
        assert!((re - eps0 * (1.0 + LN_2)).abs() < 1e-12);
        assert!(matches!(tube_radii(ln3(), alpha(), 1.0, 1.0), Err(Error::Precondition(_))));
        assert_eq!(ht_constant_from_acylindrical(1.0, 19).unwrap(), 1.0);
        assert_eq!(ht_constant_from_acylindrical(0.0, 19).unwrap(), 0.0);
    }

    #[test]
    fn named_checks() {
        let r = check_named_bound("entropy-lower-group", &params(&[("delta", 0.0), ("slope", ln3())])).unwrap();
        assert!(r.holds && r.inputs["slope"] == ln3());
        let r = check_named_bound(
            "cocompact-doubling",
            &params(&[("ratio", 3f64.powi(10)), ("R", 10.0), ("H", ln3()), ("D", 1.0), ("delta", 0.0)]),
        )
        .unwrap();
        assert!(r.holds && r.guard_met);
        let r = check_named_bound("tits-dichotomy", &params(&[("delta", 1.0), ("D", 1.0), ("slope", 0.0), ("ell", 1.0)])).unwrap();
        assert!(r.holds);
        assert!(check_named_bound("nope", &params(&[])).is_err());
        assert!(check_named_bound("entropy-lower-group", &params(&[])).is_err());
        for name in FORMULAS {
            let p = params(&[("delta", 1.0), ("D", 1.0), ("H", 0.1), ("N", 10.0), ("alpha", 1.0), ("sys", 0.1), ("eps", 0.01)]);
            assert!(evaluate_formula(name, &p).is_ok(), "{name}");
        }
    }
}
