//! The desk-scale acceptance suite run by `gromolab verify`.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::bounds::{collar_lower, margulis_constants, n1, tube_radii, ConstantIndexBound};
use crate::displacement::{
    check_distance_to_axis, check_domain_separation, check_quasi_geodesic_with, check_tube, collar_radius, hplane_grid,
    min_displacement, stable_length_bracket, Isometry,
};
use crate::entropy::{
    cayley_profile, check_cocompact_doubling, check_entropy_action, check_packing_doubling_sandwich,
    check_subgroup_doubling, closed_count, doubling_ratio, free_semigroup_entropy_lower,
};
use crate::error::{Error, Result};
use crate::freeness::{
    demi_schottky_test, evaluate_word, free_semigroup_by_displacement, free_semigroup_powers, relation_oracle,
    CertificateStatus, OracleMode,
};
use crate::graph::{CayleySpace, Word, WordSampler};
use crate::hplane::{hdistance, BoxSampler, HPoint, HalfPlane, MobiusMap, RationalMobius};
use crate::metric::four_point_delta;
use crate::report::{json_f64, BoundReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: Value,
}

impl Criterion {
    pub fn to_json(&self) -> Value {
        json!({"id": self.id, "name": self.name, "passed": self.passed, "detail": self.detail})
    }

    pub fn summary_line(&self) -> String {
        format!("criterion {:>2} {:<28} {}", self.id, self.name, if self.passed { "PASS" } else { "FAIL" })
    }
}

fn failed_reports(reports: &[BoundReport]) -> Vec<Value> {
    reports.iter().filter(|r| !r.holds).map(BoundReport::to_json).collect()
}

/// Hyperbolic matrix P·diag(λ,1/λ)·P⁻¹ with |trace| uniform in [2.1, 10] and
/// P a random SL(2,ℝ) matrix with entries of moderate size.
pub fn random_hyperbolic(rng: &mut ChaCha8Rng) -> MobiusMap {
    let t: f64 = rng.random_range(2.1..10.0);
    let lambda = 0.5 * (t + (t * t - 4.0).sqrt());
    let a: f64 = rng.random_range(0.5..2.0);
    let b: f64 = rng.random_range(-2.0..2.0);
    let c: f64 = rng.random_range(-2.0..2.0);
    let p = MobiusMap::new(a, b, c, (1.0 + b * c) / a).expect("det 1");
    let d = MobiusMap::new(lambda, 0.0, 0.0, 1.0 / lambda).expect("det 1");
    p.compose(&d).compose(&p.inverse())
}

fn random_point(rng: &mut ChaCha8Rng) -> HPoint {
    HPoint { x: rng.random_range(-2.0..2.0), y: rng.random_range(0.3..3.0) }
}

fn tree_delta(seed: u64) -> Result<Criterion> {
    let f2 = CayleySpace::free(2);
    let est = four_point_delta(&f2, &WordSampler { space: &f2, max_len: 8 }, 1000, seed)?;
    Ok(Criterion {
        id: 1,
        name: "tree-delta",
        passed: est.value == 0.0,
        detail: json!({"delta": json_f64(est.value), "quadruples": est.quadruple_count}),
    })
}

fn hplane_delta(seed: u64) -> Result<Criterion> {
    let est = four_point_delta(&HalfPlane, &BoxSampler::default(), 10_000, seed)?;
    let bound = 3f64.ln() + 1e-9;
    Ok(Criterion {
        id: 2,
        name: "half-plane-delta",
        passed: est.value <= bound,
        detail: json!({"delta": json_f64(est.value), "bound": json_f64(bound), "quadruples": est.quadruple_count}),
    })
}

fn translation_length(seed: u64) -> Result<Criterion> {
    let delta = 3f64.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3);
    let (mut worst_width, mut worst_min_err, mut misses) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..50 {
        let g = random_hyperbolic(&mut rng);
        let x = random_point(&mut rng);
        let ell = g.closed_form_length()?;
        let br = stable_length_bracket(&HalfPlane, &g, &x, 1024, delta)?;
        worst_width = worst_width.max(br.width());
        misses += usize::from(!br.contains(ell, 1e-9));
        let axis = g.axis()?;
        let mut grid = hplane_grid(-3.0, 3.0, 13, 0.1, 10.0, 13)?;
        grid.extend((0..=20).map(|i| axis.point(-2.0 + 0.2 * i as f64)));
        let m = min_displacement(&HalfPlane, &g, &grid)?;
        worst_min_err = worst_min_err.max((m.value - ell).abs());
    }
    Ok(Criterion {
        id: 3,
        name: "translation-length",
        passed: misses == 0 && worst_width <= 0.06 && worst_min_err <= 1e-6,
        detail: json!({"misses": misses, "max_width": json_f64(worst_width), "max_min_displacement_error": json_f64(worst_min_err)}),
    })
}

fn power_growth(seed: u64) -> Result<Criterion> {
    let delta = 3f64.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
    let (mut violations, mut checks) = (0usize, 0usize);
    let mut failures = Vec::new();
    for _ in 0..50 {
        let g = random_hyperbolic(&mut rng);
        let x = random_point(&mut rng);
        let br = stable_length_bracket(&HalfPlane, &g, &x, 1024, delta)?;
        let d1 = g.power_displacement(&HalfPlane, &x, 1)?;
        for n in 2..=64u64 {
            let dn = g.power_displacement(&HalfPlane, &x, n)?;
            let rhs = d1 + (n - 1) as f64 * br.hi + 4.0 * delta * (n as f64).log2();
            checks += 1;
            if dn > rhs + 1e-9 {
                violations += 1;
            }
        }
        let s = g.exact_min_displacement(&HalfPlane).ok_or_else(|| Error::Class("not hyperbolic".into()))?;
        let reps = check_quasi_geodesic_with(&br, s, delta);
        checks += reps.len();
        violations += reps.iter().filter(|r| !r.holds).count();
        failures.extend(failed_reports(&reps));
    }
    Ok(Criterion {
        id: 4,
        name: "power-growth",
        passed: violations == 0,
        detail: json!({"checks": checks, "violations": violations, "failed": failures}),
    })
}

fn free_growth() -> Result<Criterion> {
    let f2 = CayleySpace::free(2);
    let profile = cayley_profile(&f2, 12)?;
    let exact = profile.points.iter().all(|&(r, c)| c == 2 * 3u64.pow(r as u32) - 1);
    let ln3 = 3f64.ln();
    let slope_ok = (profile.slope_estimate - ln3).abs() <= 1e-3;
    let params = [("delta".to_string(), 0.0), ("slope".to_string(), ln3)].into_iter().collect();
    let report = crate::bounds::check_named_bound("entropy-lower-group", &params)?;
    Ok(Criterion {
        id: 5,
        name: "free-group-entropy",
        passed: exact && slope_ok && report.holds,
        detail: json!({
            "counts_exact": exact,
            "slope_estimate": json_f64(profile.slope_estimate),
            "last_point_estimate": json_f64(profile.last_point_estimate),
            "entropy_lower_group": report.to_json(),
        }),
    })
}

fn doubling() -> Result<Criterion> {
    let f2 = CayleySpace::free(2);
    let z = CayleySpace::abelian(1);
    let e = Word::identity();
    let mut reports = Vec::new();
    for r in 10..=14 {
        let ratio = doubling_ratio(|t| closed_count(&f2, &e, t), r as f64)?;
        reports.push(check_cocompact_doubling(ratio, r as f64, 3f64.ln(), 1.0, 0.0));
    }
    let cocompact_guarded = reports.iter().all(|r| r.guard_met);
    for s in [&f2, &z] {
        reports.extend(check_packing_doubling_sandwich(s, &e, 2.0, 5)?);
    }
    reports.push(check_subgroup_doubling(&f2, &e, &[Word::letter(1)], 2.0, 4.0, None, 10, 0.25)?);
    let failed = failed_reports(&reports);
    Ok(Criterion {
        id: 6,
        name: "doubling",
        passed: failed.is_empty() && cocompact_guarded,
        detail: json!({"reports": reports.len(), "failed": failed, "cocompact_guard_met": cocompact_guarded}),
    })
}

fn margulis_domains(seed: u64) -> Result<Criterion> {
    let delta = 3f64.ln();
    let gamma = MobiusMap::diag(0.5f64.exp())?;
    let radius = 2.0;
    let tube = check_tube(&gamma, radius, delta, 1000, seed ^ 0x7)?;
    let axis = gamma.axis()?;
    let near = axis.offset_point(0.3, 0.8);
    let far = axis.offset_point(0.3, 2.5);
    let reports = vec![
        tube.report.clone(),
        tube.membership.clone(),
        check_distance_to_axis(&gamma, &near, delta)?,
        check_domain_separation(&gamma, 1.5, radius, &far)?,
    ];
    let failed = failed_reports(&reports);
    Ok(Criterion {
        id: 7,
        name: "margulis-domains",
        passed: failed.is_empty() && tube.disagreements == 0 && tube.accepted > 0,
        detail: json!({
            "collar_radius": tube.collar_radius.map_or(Value::Null, json_f64),
            "closed_form": json_f64(collar_radius(1.0, radius).unwrap_or(f64::NAN)),
            "accepted": tube.accepted,
            "disagreements": tube.disagreements,
            "in_band": tube.in_band,
            "failed": failed,
        }),
    })
}

fn freeness_oracle() -> Result<Criterion> {
    let sanov = |m: i64| -> Result<(RationalMobius, RationalMobius)> {
        Ok((RationalMobius::from_integers(1, m, 0, 1)?, RationalMobius::from_integers(1, 0, m, 1)?))
    };
    let (a2, b2) = sanov(2)?;
    let free = relation_oracle(&a2, &b2, 10, OracleMode::Group)?;
    let (a1, b1) = sanov(1)?;
    let rel = relation_oracle(&a1, &b1, 6, OracleMode::Group)?;
    let rel_ok = rel.as_ref().is_some_and(|(w1, w2)| evaluate_word(&a1, &b1, w1) == evaluate_word(&a1, &b1, w2));
    let m = evaluate_word(&a1, &b1, &Word::parse("aBa")?);
    let square_ok = m.compose(&m).is_identity();
    let (fa, fb) = (a2.to_float(), b2.to_float());
    let x = HPoint::i();
    let delta = 3f64.ln();
    let rep = demi_schottky_test(&HalfPlane, &fa, &fb, &x, delta, 3)?;
    let mut worst = 0.0f64;
    for mg in &rep.margins {
        let ap = fa.power(mg.p).apply(&x)?;
        let bq = fb.power(mg.q).apply(&x)?;
        let direct = hdistance(&ap, &bq)? - hdistance(&x, &ap)?.max(hdistance(&x, &bq)?) - 2.0 * delta;
        worst = worst.max((direct - mg.margin).abs());
    }
    Ok(Criterion {
        id: 8,
        name: "freeness-oracle",
        passed: free.is_none() && rel_ok && square_ok && worst <= 1e-9,
        detail: json!({
            "sanov2_relation": free.map(|(u, v)| json!([u.to_string(), v.to_string()])),
            "sanov1_relation": rel.map(|(u, v)| json!([u.to_string(), v.to_string()])),
            "square_is_identity": square_ok,
            "max_margin_error": json_f64(worst),
            "demi_schottky": rep.to_json()["verdict"].clone(),
        }),
    })
}

fn displacement_criterion() -> Result<Criterion> {
    let delta = 3f64.ln();
    let a = MobiusMap::diag(15f64.exp())?;
    let t = MobiusMap::translation(1.0);
    let b = t.compose(&a).compose(&t.inverse());
    let (certified, first) = match free_semigroup_by_displacement(&a, &b, delta) {
        Ok(cert) => (
            matches!(cert.status, CertificateStatus::CertifiedFreeSemigroup { .. }),
            json!({"status": cert.status.name(), "certificate": cert.to_json()}),
        ),
        Err(e) => (false, json!({"error": e.to_string()})),
    };
    let powers = free_semigroup_powers(&a, &b, 2f64.acosh(), delta)?;
    Ok(Criterion {
        id: 9,
        name: "displacement-criterion",
        passed: certified && powers.p_min == 11,
        detail: json!({"conjugate_pair": first, "p_min": powers.p_min}),
    })
}

fn entropy_coupling() -> Result<Criterion> {
    let mut errors = vec![(free_semigroup_entropy_lower(1.0, 1.0)? - LN_2).abs()];
    let mut ok = errors[0] <= 1e-6;
    for l in [0.1, 10.0] {
        let err = (free_semigroup_entropy_lower(l, l)? - LN_2 / l).abs();
        ok &= err <= 1e-6 / l;
        errors.push(err);
    }
    let [i1, ii1] = check_entropy_action(1.0, 1.0, LN_2)?;
    let [i2, _] = check_entropy_action(1.0, 1.0, 0.5)?;
    let [i3, ii3] = check_entropy_action(3.0, 0.001, 1.0)?;
    let flags_ok = i1.holds && ii1.holds && !i2.holds && i3.holds && !ii3.holds;
    Ok(Criterion {
        id: 10,
        name: "entropy-freeness",
        passed: ok && flags_ok,
        detail: json!({
            "entropy_lower_errors": errors.into_iter().map(json_f64).collect::<Vec<_>>(),
            "flags": [i1.holds, ii1.holds, i2.holds, i3.holds, ii3.holds],
        }),
    })
}

fn bounds_catalog() -> Result<Criterion> {
    let (delta, alpha) = (3f64.ln(), 2f64.acosh());
    let sys: Vec<f64> = (1..=200).map(|i| 0.001 * 1.05f64.powi(i)).collect();
    let collar: Vec<f64> = sys.iter().map(|&s| collar_lower(delta, alpha, 1.0, s)).collect::<Result<_>>()?;
    let collar_mono = collar.windows(2).all(|w| w[0] >= w[1]);
    let (eps0, r_eps0) = tube_radii(delta, alpha, 1.0, tube_radii(delta, alpha, 1.0, 1e-9)?.0)?;
    let eps: Vec<f64> = (0..100).map(|i| eps0 * 0.9f64.powi(i)).collect();
    let radii: Vec<f64> = eps.iter().map(|&e| tube_radii(delta, alpha, 1.0, e).map(|p| p.1)).collect::<Result<_>>()?;
    let tube_mono = radii.windows(2).all(|w| w[0] < w[1]) && (r_eps0 - eps0 * LN_2).abs() <= 1e-15;
    let mut margulis_mono = true;
    for (lo, hi) in [(1u64, 2u64), (2, 10), (10, 1000), (1000, 1_000_000)] {
        let a = margulis_constants(0.5, 0.05, 1.0, &ConstantIndexBound(lo))?;
        let b = margulis_constants(0.5, 0.05, 1.0, &ConstantIndexBound(hi))?;
        margulis_mono &= a.eps0 >= b.eps0 && a.ln_s0 >= b.ln_s0;
    }
    let n = n1(delta, alpha)?;
    let c = collar_lower(delta, alpha, 1.0, 0.01)?;
    let spot = (eps0 - 0.04221).abs() <= 1e-4 && n == 11 && (c - 0.2007).abs() <= 1e-4;
    Ok(Criterion {
        id: 11,
        name: "bounds-catalog",
        passed: collar_mono && tube_mono && margulis_mono && spot,
        detail: json!({
            "collar_monotone": collar_mono,
            "tube_monotone": tube_mono,
            "margulis_antitone": margulis_mono,
            "eps0": json_f64(eps0),
            "N1": n,
            "collar_lower_sys_0.01": json_f64(c),
        }),
    })
}

fn guard(id: u32, name: &'static str, r: Result<Criterion>) -> Criterion {
    r.unwrap_or_else(|e| Criterion { id, name, passed: false, detail: json!({"error": e.to_string()}) })
}

/// Criteria 1 to 11 in order, each a pure function of the seed.
pub fn run_criteria(seed: u64) -> Vec<Criterion> {
    vec![
        guard(1, "tree-delta", tree_delta(seed)),
        guard(2, "half-plane-delta", hplane_delta(seed)),
        guard(3, "translation-length", translation_length(seed)),
        guard(4, "power-growth", power_growth(seed)),
        guard(5, "free-group-entropy", free_growth()),
        guard(6, "doubling", doubling()),
        guard(7, "margulis-domains", margulis_domains(seed)),
        guard(8, "freeness-oracle", freeness_oracle()),
        guard(9, "displacement-criterion", displacement_criterion()),
        guard(10, "entropy-freeness", entropy_coupling()),
        guard(11, "bounds-catalog", bounds_catalog()),
    ]
}

/// All twelve criteria; the last reruns 1 to 11 and compares serialized output.
pub fn run_all(seed: u64) -> Vec<Criterion> {
    let mut first = run_criteria(seed);
    let again = run_criteria(seed);
    let ser = |v: &[Criterion]| Value::Array(v.iter().map(Criterion::to_json).collect()).to_string();
    let identical = ser(&first) == ser(&again);
    first.push(Criterion { id: 12, name: "determinism", passed: identical, detail: json!({"identical_rerun": identical}) });
    first
}
