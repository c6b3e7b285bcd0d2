use std::collections::BTreeMap;

use gromolab::bounds::{check_named_bound, entropy_lower_group, evaluate_formula};
use gromolab::displacement::stable_length_bracket;
use gromolab::entropy::{cayley_profile, free_semigroup_entropy_lower};
use gromolab::freeness::{demi_schottky_test, pingpong_base_point, relation_oracle, schottky_test, OracleMode};
use gromolab::graph::{CayleySpace, Word, WordSampler};
use gromolab::hplane::{hdistance, BoxSampler, HPoint, HalfPlane, MobiusMap, RationalMobius};
use gromolab::metric::four_point_delta;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::Value;

fn err(e: gromolab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

fn point(p: (f64, f64)) -> PyResult<HPoint> {
    HPoint::new(p.0, p.1).map_err(err)
}

/// An orientation-preserving isometry of the upper half-plane.
#[pyclass(name = "Mobius", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMobius(MobiusMap);

#[pymethods]
impl PyMobius {
    #[new]
    fn new(a: f64, b: f64, c: f64, d: f64) -> PyResult<Self> {
        MobiusMap::new(a, b, c, d).map(PyMobius).map_err(err)
    }

    /// Parses "a,b;c,d" with decimal or p/q entries.
    #[staticmethod]
    fn parse(s: &str) -> PyResult<Self> {
        MobiusMap::parse(s).map(PyMobius).map_err(err)
    }

    fn entries(&self) -> [f64; 4] {
        self.0.entries()
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn classify(&self) -> &'static str {
        self.0.classify().name()
    }

    /// Boundary fixed points; infinity is reported as `None`.
    fn fixed_points(&self) -> Vec<Option<f64>> {
        self.0.classify().boundary_fixed_points().iter().map(|p| p.finite()).collect()
    }

    fn translation_length(&self) -> PyResult<f64> {
        self.0.closed_form_length().map_err(err)
    }

    fn apply(&self, p: (f64, f64)) -> PyResult<(f64, f64)> {
        let q = self.0.apply(&point(p)?).map_err(err)?;
        Ok((q.x, q.y))
    }

    fn compose(&self, other: &PyMobius) -> PyMobius {
        PyMobius(self.0.compose(&other.0))
    }

    fn inverse(&self) -> PyMobius {
        PyMobius(self.0.inverse())
    }

    fn power(&self, n: i64) -> PyMobius {
        PyMobius(self.0.power(n))
    }

    /// Two-sided bracket (lo, hi) for the translation length.
    #[pyo3(signature = (base=(0.0, 1.0), nmax=1024, delta=3f64.ln()))]
    fn length_bracket(&self, base: (f64, f64), nmax: u64, delta: f64) -> PyResult<(f64, f64)> {
        let br = stable_length_bracket(&HalfPlane, &self.0, &point(base)?, nmax, delta).map_err(err)?;
        Ok((br.lo, br.hi))
    }

    fn __repr__(&self) -> String {
        let [a, b, c, d] = self.0.entries();
        format!("Mobius({a}, {b}, {c}, {d})")
    }
}

#[pyfunction]
fn distance(p: (f64, f64), q: (f64, f64)) -> PyResult<f64> {
    hdistance(&point(p)?, &point(q)?).map_err(err)
}

/// Maximum four-point defect over seeded quadruples. `space` is "hplane"
/// or a Cayley graph descriptor such as "free:2".
#[pyfunction]
#[pyo3(signature = (space, samples=1000, seed=0, max_len=8, bbox=None))]
fn delta(space: &str, samples: usize, seed: u64, max_len: usize, bbox: Option<(f64, f64, f64, f64)>) -> PyResult<f64> {
    let spec = space.strip_prefix("tree:").unwrap_or(space);
    if spec == "hplane" {
        let sampler = match bbox {
            Some((x0, x1, y0, y1)) => BoxSampler::new(x0, x1, y0, y1).map_err(err)?,
            None => BoxSampler::default(),
        };
        return four_point_delta(&HalfPlane, &sampler, samples, seed).map(|e| e.value).map_err(err);
    }
    let g = CayleySpace::parse(spec).map_err(err)?;
    four_point_delta(&g, &WordSampler { space: &g, max_len }, samples, seed).map(|e| e.value).map_err(err)
}

#[pyfunction]
fn ball_count(group: &str, radius: u64) -> PyResult<u64> {
    CayleySpace::parse(group).map_err(err)?.ball_count(&Word::identity(), radius).map_err(err)
}

type Profile = (Vec<(f64, u64)>, f64, f64);

/// Returns (rows, slope_estimate, last_point_estimate).
#[pyfunction]
fn growth(group: &str, rmax: u64) -> PyResult<Profile> {
    let g = CayleySpace::parse(group).map_err(err)?;
    let p = cayley_profile(&g, rmax).map_err(err)?;
    Ok((p.points, p.slope_estimate, p.last_point_estimate))
}

#[pyfunction]
#[pyo3(signature = (a, b, mode="demi", base=None, range=3, delta=3f64.ln()))]
fn pingpong<'py>(
    py: Python<'py>,
    a: &PyMobius,
    b: &PyMobius,
    mode: &str,
    base: Option<(f64, f64)>,
    range: u64,
    delta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let x = match base {
        Some(p) => point(p)?,
        None => pingpong_base_point(&a.0, &b.0),
    };
    let rep = match mode {
        "schottky" => schottky_test(&HalfPlane, &a.0, &b.0, &x, delta, range),
        "demi" => demi_schottky_test(&HalfPlane, &a.0, &b.0, &x, delta, range),
        other => return Err(PyValueError::new_err(format!("mode must be schottky or demi, got {other}"))),
    }
    .map_err(err)?;
    to_py(py, &rep.to_json())
}

/// Shortest pair of distinct reduced words with equal value, or `None`.
#[pyfunction]
#[pyo3(signature = (a, b, max_len, semigroup=false))]
fn find_relation(a: &str, b: &str, max_len: usize, semigroup: bool) -> PyResult<Option<(String, String)>> {
    let a = RationalMobius::parse(a).map_err(err)?;
    let b = RationalMobius::parse(b).map_err(err)?;
    let mode = if semigroup { OracleMode::Semigroup } else { OracleMode::Group };
    Ok(relation_oracle(&a, &b, max_len, mode).map_err(err)?.map(|(u, v)| (u.to_string(), v.to_string())))
}

#[pyfunction]
fn entropy_lower(l1: f64, l2: f64) -> PyResult<f64> {
    free_semigroup_entropy_lower(l1, l2).map_err(err)
}

#[pyfunction(name = "entropy_lower_group")]
fn py_entropy_lower_group(delta: f64) -> PyResult<f64> {
    entropy_lower_group(delta).map_err(err)
}

/// Evaluates a catalog formula (snake_case name) or a named check (kebab-case).
#[pyfunction]
fn bound<'py>(py: Python<'py>, name: &str, params: BTreeMap<String, f64>) -> PyResult<Bound<'py, PyAny>> {
    let v = if name.contains('-') {
        check_named_bound(name, &params).map_err(err)?.to_json()
    } else {
        evaluate_formula(name, &params).map_err(err)?
    };
    to_py(py, &v)
}

/// Runs the acceptance suite; one dict per criterion.
#[pyfunction]
#[pyo3(signature = (seed=0))]
fn verify<'py>(py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let criteria: Vec<Value> = py.detach(|| gromolab::acceptance::run_all(seed).iter().map(|c| c.to_json()).collect());
    to_py(py, &Value::Array(criteria))
}

/// Runs the command-line front end in-process: (exit code, stdout, stderr).
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    gromolab::cli::run(args)
}

#[pymodule]
fn gromolab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMobius>()?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(ball_count, m)?)?;
    m.add_function(wrap_pyfunction!(growth, m)?)?;
    m.add_function(wrap_pyfunction!(pingpong, m)?)?;
    m.add_function(wrap_pyfunction!(find_relation, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_lower, m)?)?;
    m.add_function(wrap_pyfunction!(py_entropy_lower_group, m)?)?;
    m.add_function(wrap_pyfunction!(bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
