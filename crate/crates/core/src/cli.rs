//! Command-line front end. Reports go to standard output as JSON (or CSV),
//! a short human summary goes to standard error.
//!
//! Exit codes: 0 success, 1 a check failed, 2 parse or domain error,
//! 3 the relation oracle found a relation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance;
use crate::bounds::{check_named_bound, evaluate_formula, CHECKS, FORMULAS};
use crate::displacement::{
    check_distance_to_axis, check_domain_separation, check_tube, collar_radius, displacement_radius, hplane_grid,
    margulis_constant, stable_length_bracket, Isometry,
};
use crate::entropy::{cayley_profile, GrowthProfile};
use crate::error::{Error, Result};
use crate::freeness::{
    demi_schottky_test, free_semigroup_by_displacement, free_semigroup_powers, margulis_free_dispatch, pingpong_base_point,
    relation_oracle, schottky_test, OracleMode,
};
use crate::graph::{CayleySpace, WordSampler};
use crate::hplane::{BoxSampler, HPoint, HalfPlane, IsometryClass, MobiusMap, RationalMobius};
use crate::metric::four_point_delta;
use crate::report::{json_f64, round_sig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_RELATION: i32 = 3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "gromolab", version, about = "Quantitative experiments on Gromov-hyperbolic spaces")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Allow `--delta empirical` to feed a measured delta into certified checks.
    #[arg(long, global = true)]
    pub accept_empirical_delta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Empirical four-point delta.
    Delta(DeltaArgs),
    /// Ball growth profile and entropy estimates.
    Growth(GrowthArgs),
    /// Isometry type, fixed points and translation length of a matrix.
    Classify(ClassifyArgs),
    /// Two-sided bracket for the translation length.
    Length(LengthArgs),
    /// Displacement radius, Margulis domain membership and tube checks.
    Margulis(MargulisArgs),
    /// Schottky and demi-Schottky tests and the freeness dispatchers.
    Pingpong(PingpongArgs),
    /// Exact search for a relation between two rational matrices.
    Oracle(OracleArgs),
    /// Evaluate a catalog formula or a named check.
    Bounds(BoundsArgs),
    /// Run the acceptance suite.
    Verify,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaArgs {
    /// tree:free:K, free:K, abelian:K, table:PATH or hplane.
    #[arg(long)]
    pub space: String,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Sampling box x0,x1,y0,y1 for the half-plane.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub bbox: Option<String>,
    /// Longest random word for graph spaces.
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GrowthArgs {
    /// free:K, abelian:K or table:PATH.
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub rmax: u64,
    /// Also write the CSV profile to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    /// Matrix "a,b;c,d" with decimal or p/q entries.
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
}

#[derive(Debug, Args, Serialize)]
pub struct LengthArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
    /// Base point x,y.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    pub base: String,
    #[arg(long, default_value_t = 1024)]
    pub nmax: u64,
    /// Hyperbolicity constant, or `empirical`.
    #[arg(long, default_value = "1.0986122886681098")]
    pub delta: DeltaArg,
}

#[derive(Debug, Args, Serialize)]
pub struct MargulisArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
    #[arg(long = "R")]
    pub radius: f64,
    /// Hyperbolicity constant, or `empirical`.
    #[arg(long, default_value = "1.0986122886681098")]
    pub delta: DeltaArg,
    /// Base point x,y for R_gamma(x).
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    pub base: String,
    /// Membership grid x0,x1,nx,y0,y1,ny.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Rejection-sampling proposals for the tube check.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Inner radius r < R for the separation check.
    #[arg(long)]
    pub inner: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PingpongMode {
    Schottky,
    Demi,
    Dispatch,
}

#[derive(Debug, Args, Serialize)]
pub struct PingpongArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, default_value_t = 3)]
    pub range: u64,
    /// Hyperbolicity constant, or `empirical`.
    #[arg(long, default_value = "1.0986122886681098")]
    pub delta: DeltaArg,
    #[arg(long, value_enum, default_value_t = PingpongMode::Demi)]
    pub mode: PingpongMode,
    /// Base point x,y; defaults to the ping-pong base point of the axes.
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    /// Lower bound on translation lengths for the power threshold.
    #[arg(long)]
    pub eps1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleModeArg {
    Group,
    Semigroup,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long)]
    pub maxlen: usize,
    #[arg(long, value_enum, default_value_t = OracleModeArg::Group)]
    pub mode: OracleModeArg,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    /// A formula (entropy_lower_group, ...) or a check (entropy-lower-group, ...).
    #[arg(long)]
    pub name: String,
    /// Comma-separated k=v pairs.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub params: String,
}

/// A δ supplied by the user, or `empirical` to measure the four-point
/// constant of the half-plane and feed it back into the certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DeltaArg {
    Value(f64),
    #[serde(serialize_with = "empirical_tag")]
    Empirical,
}

fn empirical_tag<S: serde::Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("empirical")
}

impl std::str::FromStr for DeltaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "empirical" {
            return Ok(DeltaArg::Empirical);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(DeltaArg::Value(v)),
            _ => Err(format!("delta must be a nonnegative number or 'empirical', got {s}")),
        }
    }
}

const EMPIRICAL_DELTA_SAMPLES: usize = 10_000;

impl GlobalArgs {
    fn resolve_delta(&self, d: DeltaArg) -> Result<f64> {
        match d {
            DeltaArg::Value(v) => Ok(v),
            DeltaArg::Empirical if self.accept_empirical_delta => {
                Ok(four_point_delta(&HalfPlane, &BoxSampler::default(), EMPIRICAL_DELTA_SAMPLES, self.seed)?.value)
            }
            DeltaArg::Empirical => Err(Error::InvalidParameter(
                "a measured four-point delta is only a lower bound; pass --accept-empirical-delta to use it".into(),
            )),
        }
    }
}

/// Output of one command: the payload, the exit code and a summary line.
pub struct Outcome {
    pub payload: Value,
    pub csv: Option<String>,
    pub code: i32,
    pub summary: String,
}

impl Outcome {
    fn ok(payload: Value, summary: String) -> Self {
        Outcome { payload, csv: None, code: EXIT_OK, summary }
    }

    fn checked(payload: Value, holds: bool, summary: String) -> Self {
        Outcome { payload, csv: None, code: if holds { EXIT_OK } else { EXIT_CHECK_FAILED }, summary }
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map_or(Value::Null, |f| {
            let r = round_sig(f);
            serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r }).map_or(Value::Null, Value::Number)
        }),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn parse_point(s: &str) -> Result<HPoint> {
    HPoint::parse(s)
}

pub fn parse_params(s: &str) -> Result<BTreeMap<String, f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|kv| !kv.is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected k=v, got {kv}")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad number in {kv}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn class_json(c: &IsometryClass) -> Value {
    let fixed: Vec<Value> = c
        .boundary_fixed_points()
        .iter()
        .map(|p| p.finite().map_or(Value::String("inf".into()), json_f64))
        .collect();
    let mut v = json!({"class": c.name(), "fixed": fixed});
    if let IsometryClass::Elliptic { center } = c {
        v["center"] = json!([json_f64(center.x), json_f64(center.y)]);
    }
    v
}

fn cmd_delta(args: &DeltaArgs, seed: u64) -> Result<Outcome> {
    let spec = args.space.strip_prefix("tree:").unwrap_or(&args.space);
    let (value, count, witness) = if spec == "hplane" {
        let sampler = match &args.bbox {
            Some(b) => BoxSampler::parse(b)?,
            None => BoxSampler::default(),
        };
        let est = four_point_delta(&HalfPlane, &sampler, args.samples, seed)?;
        let w = est.witness.map(|q| q.iter().map(|p| json!([json_f64(p.x), json_f64(p.y)])).collect::<Vec<_>>());
        (est.value, est.quadruple_count, json!(w))
    } else {
        let space = CayleySpace::parse(spec)?;
        let est = four_point_delta(&space, &WordSampler { space: &space, max_len: args.max_len }, args.samples, seed)?;
        let w = est.witness.map(|q| q.iter().map(|p| p.to_string()).collect::<Vec<_>>());
        (est.value, est.quadruple_count, json!(w))
    };
    Ok(Outcome::ok(
        json!({"delta": json_f64(value), "quadruple_count": count, "witness": witness, "seed": seed}),
        format!("four-point delta estimate {value:.6} over {count} quadruples"),
    ))
}

fn profile_json(p: &GrowthProfile) -> Value {
    json!({
        "rows": p.points.iter().map(|(r, c)| json!([json_f64(*r), c])).collect::<Vec<_>>(),
        "slope_estimate": json_f64(p.slope_estimate),
        "last_point_estimate": json_f64(p.last_point_estimate),
    })
}

fn cmd_growth(args: &GrowthArgs) -> Result<Outcome> {
    let space = CayleySpace::parse(&args.group)?;
    let profile = cayley_profile(&space, args.rmax)?;
    let csv = profile.to_csv();
    if let Some(path) = &args.csv {
        std::fs::write(path, &csv).map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut out = Outcome::ok(
        json!({"group": space.descriptor(), "profile": profile_json(&profile)}),
        format!(
            "growth of {}: slope estimate {:.6}, last-point estimate {:.6}",
            space.descriptor(),
            profile.slope_estimate,
            profile.last_point_estimate
        ),
    );
    out.csv = Some(csv);
    Ok(out)
}

fn cmd_classify(args: &ClassifyArgs) -> Result<Outcome> {
    let m = MobiusMap::parse(&args.matrix)?;
    let class = m.classify();
    let mut v = class_json(&class);
    v["trace"] = json_f64(m.trace());
    if class.is_hyperbolic() {
        v["length"] = json_f64(m.closed_form_length()?);
    }
    Ok(Outcome::ok(v, format!("{} isometry", class.name())))
}

fn cmd_length(args: &LengthArgs, g: &GlobalArgs) -> Result<Outcome> {
    let delta = g.resolve_delta(args.delta)?;
    let m = MobiusMap::parse(&args.matrix)?;
    let x = parse_point(&args.base)?;
    let br = stable_length_bracket(&HalfPlane, &m, &x, args.nmax, delta)?;
    let exact = m.exact_length(&HalfPlane);
    Ok(Outcome::ok(
        json!({
            "bracket": {"lo": json_f64(br.lo), "hi": json_f64(br.hi), "width": json_f64(br.width())},
            "nmax": br.n_used,
            "delta": json_f64(br.delta_used),
            "closed_form": exact.map(json_f64),
            "class": m.classify().name(),
        }),
        format!("translation length in [{:.6}, {:.6}]", br.lo, br.hi),
    ))
}

fn cmd_margulis(args: &MargulisArgs, g: &GlobalArgs) -> Result<Outcome> {
    let delta = g.resolve_delta(args.delta)?;
    let m = MobiusMap::parse(&args.matrix)?;
    let ell = m.closed_form_length()?;
    let x = parse_point(&args.base)?;
    let q = displacement_radius(&HalfPlane, &m, &x, ell, args.radius)?;
    let tube = check_tube(&m, args.radius, delta, args.samples, g.seed)?;
    let mut reports = vec![tube.report.clone(), tube.membership.clone(), check_distance_to_axis(&m, &x, delta)?];
    if let Some(r) = args.inner {
        match check_domain_separation(&m, r, args.radius, &x) {
            Ok(rep) => reports.push(rep),
            Err(Error::Precondition(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut payload = json!({
        "length": json_f64(ell),
        "collar_radius": collar_radius(ell, args.radius).map(json_f64),
        "R_gamma": json_f64(q.value),
        "k_attained": q.k_attained,
        "member": q.member,
        "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
    });
    if let Some(g) = &args.grid {
        let parts: Vec<&str> = g.split(',').map(str::trim).collect();
        let bad = || Error::Parse(format!("grid must be x0,x1,nx,y0,y1,ny, got {g}"));
        if parts.len() != 6 {
            return Err(bad());
        }
        let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
        let n = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
        let pts = hplane_grid(f(0)?, f(1)?, n(2)?, f(3)?, f(4)?, n(5)?)?;
        let members = pts
            .iter()
            .map(|p| displacement_radius(&HalfPlane, &m, p, ell, args.radius).map(|q| q.member))
            .collect::<Result<Vec<_>>>()?;
        payload["grid"] = json!({"points": pts.len(), "members": members.iter().filter(|b| **b).count()});
    }
    let holds = reports.iter().all(|r| r.holds);
    Ok(Outcome::checked(payload, holds, format!("R_gamma(x) = {:.6}, member of M_R: {}", q.value, q.member)))
}

fn cmd_pingpong(args: &PingpongArgs, g: &GlobalArgs) -> Result<Outcome> {
    let delta = g.resolve_delta(args.delta)?;
    let a = MobiusMap::parse(&args.a)?;
    let b = MobiusMap::parse(&args.b)?;
    let x = match &args.base {
        Some(s) => parse_point(s)?,
        None => pingpong_base_point(&a, &b),
    };
    let base = json!([json_f64(x.x), json_f64(x.y)]);
    match args.mode {
        PingpongMode::Schottky | PingpongMode::Demi => {
            let rep = if args.mode == PingpongMode::Schottky {
                schottky_test(&HalfPlane, &a, &b, &x, delta, args.range)?
            } else {
                demi_schottky_test(&HalfPlane, &a, &b, &x, delta, args.range)?
            };
            let mut payload = rep.to_json();
            payload["base"] = base;
            let passed = rep.passed();
            Ok(Outcome::checked(
                payload,
                passed,
                format!("{} test: {}", rep.mode.as_str(), if passed { "PASS-range" } else { "FAIL" }),
            ))
        }
        PingpongMode::Dispatch => {
            let samples = hplane_grid(x.x - 2.0, x.x + 2.0, 9, x.y / 8.0, x.y * 8.0, 9)?;
            let est = margulis_constant(&HalfPlane, &a, &b, &samples, args.range)?;
            let ba = stable_length_bracket(&HalfPlane, &a, &x, 1024, delta)?;
            let bb = stable_length_bracket(&HalfPlane, &b, &x, 1024, delta)?;
            let mut payload = json!({
                "base": base,
                "L_estimate": json_f64(est.value),
                "brackets": {"a": [json_f64(ba.lo), json_f64(ba.hi)], "b": [json_f64(bb.lo), json_f64(bb.hi)]},
            });
            payload["dispatch"] = match margulis_free_dispatch(&HalfPlane, &a, &b, &x, est.value, &ba, &bb, delta, args.range) {
                Ok((case, cert)) => json!({"case": case.label(), "certificate": cert.to_json()}),
                Err(e) => json!({"error": e.to_string()}),
            };
            payload["displacement_criterion"] = match free_semigroup_by_displacement(&a, &b, delta) {
                Ok(cert) => cert.to_json(),
                Err(e) => json!({"error": e.to_string()}),
            };
            if let Some(eps1) = args.eps1 {
                payload["powers"] = match free_semigroup_powers(&a, &b, eps1, delta) {
                    Ok(p) => json!({
                        "p_min": p.p_min,
                        "certificate": match p.certificate {
                            Ok(c) => c.to_json(),
                            Err(e) => json!({"error": e.to_string()}),
                        },
                    }),
                    Err(e) => json!({"error": e.to_string()}),
                };
            }
            Ok(Outcome::ok(payload, format!("Margulis constant estimate {:.6}", est.value)))
        }
    }
}

fn cmd_oracle(args: &OracleArgs) -> Result<Outcome> {
    let a = RationalMobius::parse(&args.a)?;
    let b = RationalMobius::parse(&args.b)?;
    let mode = match args.mode {
        OracleModeArg::Group => OracleMode::Group,
        OracleModeArg::Semigroup => OracleMode::Semigroup,
    };
    Ok(match relation_oracle(&a, &b, args.maxlen, mode)? {
        None => Outcome::ok(json!({"status": "None", "maxlen": args.maxlen}), format!("no relation up to length {}", args.maxlen)),
        Some((w1, w2)) => Outcome {
            payload: json!({"status": "RelationFound", "relation": [w1.to_string(), w2.to_string()], "maxlen": args.maxlen}),
            csv: None,
            code: EXIT_RELATION,
            summary: format!("relation {w1} = {w2}"),
        },
    })
}

fn cmd_bounds(args: &BoundsArgs) -> Result<Outcome> {
    let params = parse_params(&args.params)?;
    if FORMULAS.contains(&args.name.as_str()) {
        let v = evaluate_formula(&args.name, &params)?;
        return Ok(Outcome::ok(json!({"name": args.name, "values": v}), format!("evaluated {}", args.name)));
    }
    if CHECKS.contains(&args.name.as_str()) {
        let r = check_named_bound(&args.name, &params)?;
        let holds = r.holds;
        return Ok(Outcome::checked(r.to_json(), holds, format!("{}: {}", args.name, if holds { "holds" } else { "violated" })));
    }
    Err(Error::InvalidParameter(format!("unknown bound {}; formulas: {}; checks: {}", args.name, FORMULAS.join(", "), CHECKS.join(", "))))
}

fn cmd_verify(seed: u64) -> Result<Outcome> {
    let criteria = acceptance::run_all(seed);
    let passed = criteria.iter().all(|c| c.passed);
    let summary = criteria.iter().map(|c| c.summary_line()).collect::<Vec<_>>().join("\n");
    Ok(Outcome::checked(
        json!({"criteria": criteria.iter().map(|c| c.to_json()).collect::<Vec<_>>(), "passed": passed}),
        passed,
        summary,
    ))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let seed = cli.global.seed;
    match &cli.command {
        Command::Delta(a) => cmd_delta(a, seed),
        Command::Growth(a) => cmd_growth(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Length(a) => cmd_length(a, &cli.global),
        Command::Margulis(a) => cmd_margulis(a, &cli.global),
        Command::Pingpong(a) => cmd_pingpong(a, &cli.global),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Verify => cmd_verify(seed),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Delta(_) => "delta",
        Command::Growth(_) => "growth",
        Command::Classify(_) => "classify",
        Command::Length(_) => "length",
        Command::Margulis(_) => "margulis",
        Command::Pingpong(_) => "pingpong",
        Command::Oracle(_) => "oracle",
        Command::Bounds(_) => "bounds",
        Command::Verify => "verify",
    }
}

/// Runs a parsed command and renders the bytes for standard output.
pub fn execute(cli: &Cli) -> (i32, String, String) {
    let config = serde_json::to_value(cli).unwrap_or(Value::Null);
    match dispatch(cli) {
        Ok(out) => {
            let body = match (cli.global.format, &out.csv) {
                (Format::Csv, Some(csv)) => csv.clone(),
                _ => {
                    let report = json!({
                        "command": command_name(&cli.command),
                        "config": config,
                        "result": out.payload,
                        "exit_code": out.code,
                    });
                    format!("{}\n", serde_json::to_string_pretty(&normalize(report)).unwrap_or_default())
                }
            };
            (out.code, body, out.summary)
        }
        Err(e) => {
            let report = json!({
                "command": command_name(&cli.command),
                "config": config,
                "error": e.to_string(),
                "exit_code": EXIT_ERROR,
            });
            (EXIT_ERROR, format!("{}\n", serde_json::to_string_pretty(&normalize(report)).unwrap_or_default()), format!("error: {e}"))
        }
    }
}

/// Parses `args` (without the program name) and runs them in-process.
pub fn run<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("gromolab")).chain(args.into_iter().map(Into::into));
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(&cli),
        Err(e) => (if e.use_stderr() { EXIT_ERROR } else { EXIT_OK }, String::new(), e.to_string()),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("GROMOLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let (code, body, summary) = execute(&cli);
    let written = match &cli.global.output {
        Some(path) => std::fs::write(path, &body).map_err(|e| e.to_string()),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    eprintln!("{summary}");
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return EXIT_ERROR;
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, Value) {
        let cli = Cli::try_parse_from(std::iter::once("gromolab").chain(args.iter().copied())).unwrap();
        let (code, body, _) = execute(&cli);
        (code, serde_json::from_str(&body).unwrap_or(Value::String(body)))
    }

    #[test]
    fn classify_diag() {
        let (code, v) = run(&["classify", "--matrix", "2,0;0,0.5"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["class"], "Hyperbolic");
        assert_eq!(v["result"]["fixed"], json!([0.0, "inf"]));
        assert_eq!(v["result"]["length"], json!(1.38629436112));
        assert_eq!(run(&["classify", "--matrix", "2,0;0"]).0, EXIT_ERROR);
    }

    #[test]
    fn growth_csv() {
        let cli = Cli::try_parse_from(["gromolab", "growth", "--group", "free:2", "--rmax", "6", "--format", "csv"]).unwrap();
        let (code, body, _) = execute(&cli);
        assert_eq!(code, 0);
        let rows: Vec<&str> = body.lines().collect();
        assert_eq!(rows[0], "R,count");
        assert_eq!(rows[1], "0,1");
        assert_eq!(rows[7], "6,1457");
    }

    #[test]
    fn oracle_exit_codes() {
        assert_eq!(run(&["oracle", "--a", "1,2;0,1", "--b", "1,0;2,1", "--maxlen", "6"]).0, EXIT_OK);
        let (code, v) = run(&["oracle", "--a", "1,1;0,1", "--b", "1,0;1,1", "--maxlen", "6"]);
        assert_eq!(code, EXIT_RELATION);
        assert_eq!(v["result"]["status"], "RelationFound");
    }

    #[test]
    fn bounds_and_params() {
        let (code, v) = run(&["bounds", "--name", "entropy-lower-group", "--params", "delta=0,slope=1.0986"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["holds"], true);
        let (code, _) = run(&["bounds", "--name", "entropy-lower-group", "--params", "delta=0,slope=0.01"]);
        assert_eq!(code, EXIT_CHECK_FAILED);
        assert_eq!(run(&["bounds", "--name", "nothing"]).0, EXIT_ERROR);
        let (_, v) = run(&["bounds", "--name", "margulis_constants", "--params", "delta=1,H=0,D=1,N=100"]);
        assert_eq!(v["result"]["values"]["eps0"], json!(0.6));
        assert!(parse_params("a=1,b").is_err());
    }

    #[test]
    fn identical_runs_identical_bytes() {
        let args = ["gromolab", "delta", "--space", "hplane", "--samples", "200", "--seed", "7"];
        let a = execute(&Cli::try_parse_from(args).unwrap()).1;
        let b = execute(&Cli::try_parse_from(args).unwrap()).1;
        assert_eq!(a, b);
        assert!(a.contains("\"config\""));
    }

    #[test]
    fn pingpong_modes() {
        let (code, v) = run(&["pingpong", "--a", "1,10;0,1", "--b", "1,0;10,1", "--base", "0,1"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["verdict"]["status"], "PASS-range");
        let (code, _) = run(&["pingpong", "--a", "1,2;0,1", "--b", "1,0;2,1", "--base", "0,1"]);
        assert_eq!(code, EXIT_CHECK_FAILED);
        let (code, v) = run(&["pingpong", "--a", "3,0;0,0.3333333333333333", "--b", "1.5,0.5;0.5,1.5", "--mode", "dispatch", "--eps1", "0.5"]);
        assert_eq!(code, 0, "{v}");
        assert!(v["result"]["L_estimate"].is_number());
    }

    #[test]
    fn empirical_delta_needs_opt_in() {
        let (code, v) = run(&["length", "--matrix", "2,0;0,0.5", "--delta", "empirical"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(v["error"].as_str().unwrap().contains("--accept-empirical-delta"));
        let (code, v) = run(&["length", "--matrix", "2,0;0,0.5", "--delta", "empirical", "--accept-empirical-delta"]);
        assert_eq!(code, 0);
        let d = v["result"]["delta"].as_f64().unwrap();
        assert!(d > 0.0 && d <= 3f64.ln());
        assert_eq!(v["config"]["command"]["length"]["delta"], "empirical");
        assert!(Cli::try_parse_from(["gromolab", "length", "--matrix", "1,0;0,1", "--delta", "-1"]).is_err());
    }

    #[test]
    fn margulis_and_length() {
        let (code, v) = run(&["margulis", "--matrix", "1.6487212707001282,0;0,0.6065306597126334", "--R", "2", "--grid", "-1,1,5,0.5,2,5", "--samples", "200"]);
        assert_eq!(code, 0, "{v}");
        assert!(v["result"]["grid"]["members"].as_u64().unwrap() > 0);
        let (code, v) = run(&["length", "--matrix", "2,0;0,0.5", "--base", "1,1"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["closed_form"], json!(1.38629436112));
    }
}
