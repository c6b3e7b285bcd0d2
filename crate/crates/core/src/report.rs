//! Inequality reports shared by every check in the crate.
//!
//! A [`BoundReport`] pairs a measured left-hand side with a formula right-hand
//! side, records the direction and strictness of the inequality, and whether
//! the inequality's guard (its hypothesis) was met. A report whose guard is
//! not met always has `holds == true`; it is a vacuous pass.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

/// Default slack for floating comparisons in formula checks.
pub const FORMULA_TOL: f64 = 1e-12;

/// Slack used by the geometric checks (projection, quadrilateral, ...).
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// lhs ≤ rhs (or lhs < rhs when strict).
    Le,
    /// lhs ≥ rhs (or lhs > rhs when strict).
    Ge,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Le => "le",
            Direction::Ge => "ge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub direction: Direction,
    pub strict: bool,
    pub holds: bool,
    pub guard_met: bool,
    /// Human-readable statement of the inequality being checked.
    pub anchor: String,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    /// Evaluates `lhs (direction) rhs` with slack `tol`. Strict inequalities
    /// are compared without slack.
    pub fn evaluate(
        name: &str,
        anchor: &str,
        lhs: f64,
        rhs: f64,
        direction: Direction,
        strict: bool,
        tol: f64,
    ) -> Self {
        let holds = compare(lhs, rhs, direction, strict, tol);
        BoundReport {
            name: name.to_string(),
            lhs,
            rhs,
            direction,
            strict,
            holds,
            guard_met: true,
            anchor: anchor.to_string(),
            inputs: BTreeMap::new(),
        }
    }

    /// A report whose hypothesis is not satisfied: vacuously holds.
    pub fn vacuous(name: &str, anchor: &str, lhs: f64, rhs: f64, direction: Direction, strict: bool) -> Self {
        BoundReport {
            name: name.to_string(),
            lhs,
            rhs,
            direction,
            strict,
            holds: true,
            guard_met: false,
            anchor: anchor.to_string(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, key: &str, value: f64) -> Self {
        self.inputs.insert(key.to_string(), value);
        self
    }

    pub fn with_inputs<'a>(mut self, inputs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        for (k, v) in inputs {
            self.inputs.insert(k.to_string(), v);
        }
        self
    }

    /// True when the guard was met and the inequality failed.
    pub fn violated(&self) -> bool {
        !self.holds
    }

    pub fn to_json(&self) -> Value {
        let inputs: serde_json::Map<String, Value> =
            self.inputs.iter().map(|(k, v)| (k.clone(), json_f64(*v))).collect();
        json!({
            "name": self.name,
            "lhs": json_f64(self.lhs),
            "rhs": json_f64(self.rhs),
            "direction": self.direction.as_str(),
            "strict": self.strict,
            "holds": self.holds,
            "guard_met": self.guard_met,
            "anchor": self.anchor,
            "inputs": Value::Object(inputs),
        })
    }
}

fn compare(lhs: f64, rhs: f64, direction: Direction, strict: bool, tol: f64) -> bool {
    match (direction, strict) {
        (Direction::Ge, false) => lhs >= rhs - tol,
        (Direction::Ge, true) => lhs > rhs,
        (Direction::Le, false) => lhs <= rhs + tol,
        (Direction::Le, true) => lhs < rhs,
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

/// JSON encoding of a float: 12 significant digits, non-finite values as strings.
pub fn json_f64(x: f64) -> Value {
    if x.is_nan() {
        Value::String("nan".into())
    } else if x.is_infinite() {
        Value::String(if x > 0.0 { "inf" } else { "-inf" }.into())
    } else {
        let r = round_sig(x);
        // -0.0 and 0.0 serialize identically
        let r = if r == 0.0 { 0.0 } else { r };
        serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
    }
}
