//! Batch front-end for the `sphere-robin` solvers and verification
//! pipelines. [`execute`] turns a [`RunConfig`] into report text; the binary
//! only handles flags, files and exit codes.

pub mod config;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sphere_robin::body::{corpus_body, CapBody};
use sphere_robin::bodyfile::parse_body;
use sphere_robin::curvature::{alexandrov_fenchel_gap, compute_measures, outer_parallel_volume_mc, steiner_volume};
use sphere_robin::discrete::{calibrated_estimate, mesh_body, solve_body};
use sphere_robin::hyperbolic::{cylinder_convexity_violations, nonconvexity_witness};
use sphere_robin::parallel::{
    ode_inequality_check, perimeter_profile, thm1_verify, thm2_verify, Check, FemComparison, VerificationReport,
    DEFAULT_PROFILE_STEPS,
};
use sphere_robin::radial::{first_eigenvalue, RobinBallProblem};
use sphere_robin::spaceform::radius_from_perimeter;

pub use config::{Command, RandomBodies, Real, RunConfig};

pub const SCHEMA: u32 = 1;

pub const THM1_COLUMNS: [&str; 16] = [
    "body", "beta", "perimeter", "area", "inradius", "ball_radius", "lambda_ball", "rq", "lambda_h", "res_area",
    "res_inradius", "res_profile", "res_gradient", "res_quotient", "pass", "equality",
];
pub const THM2_COLUMNS: [&str; 19] = [
    "body", "beta", "perimeter", "area", "inradius", "ball_radius", "lambda_ball", "rq", "lambda_h", "c",
    "area_deficit", "bound", "corrected_bound", "res_nonnegative", "res_guard", "res_bound", "res_corrected",
    "res_fem", "pass",
];
pub const BALL_EIG_COLUMNS: [&str; 3] = ["rho", "phi", "dphi"];
pub const PROFILE_COLUMNS: [&str; 4] = ["body", "t", "perimeter", "ball_perimeter"];
pub const STEINER_COLUMNS: [&str; 8] = ["body", "s", "steiner", "monte_carlo", "std_err", "z", "samples", "pass"];
pub const AF_COLUMNS: [&str; 7] = ["body", "phi0", "phi1", "phi2", "gap", "ball", "pass"];
pub const HYP_COLUMNS: [&str; 6] = ["delta", "dim", "s_star", "margin", "cylinder_violations", "pass"];

pub const STEINER_SIGMAS: f64 = 3.0;
pub const AF_TOL: f64 = 1e-9;
const DEFAULT_SAMPLES: usize = 1_000_000;
const DEFAULT_BALL_SAMPLES: usize = 64;
const DEFAULT_PAIRS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, config, files, or geometry. Exit code 2.
    Input(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sphere_robin::Error> for CliError {
    fn from(e: sphere_robin::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Human-readable summary.
    pub summary: String,
    pub json: String,
    pub csv: String,
    /// Mesh text, for `mesh` only.
    pub mesh: Option<String>,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::BallEig => ball_eig(cfg),
        Command::VerifyThm1 => verify_thm1(cfg),
        Command::VerifyThm2 => verify_thm2(cfg),
        Command::Profile => profile(cfg),
        Command::SteinerCheck => steiner_check(cfg),
        Command::AfCheck => af_check(cfg),
        Command::HypWitness => hyp_witness(cfg),
        Command::Mesh => mesh(cfg),
    }
}

struct NamedBody {
    name: String,
    body: CapBody,
}

fn load_bodies(cfg: &RunConfig) -> Result<Vec<NamedBody>, CliError> {
    if let Some(path) = &cfg.body {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let body = parse_body(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        return Ok(vec![NamedBody { name: body_name(path), body }]);
    }
    let RandomBodies { seed, count } = cfg.random.expect("validated");
    if count == 0 {
        return Err(CliError::Input("--random needs a positive count".into()));
    }
    (seed..seed + count as u64)
        .into_par_iter()
        .map(|s| Ok(NamedBody { name: format!("seed-{s}"), body: corpus_body(s)? }))
        .collect()
}

fn body_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn betas(cfg: &RunConfig, default: f64) -> Result<Vec<f64>, CliError> {
    match &cfg.beta {
        Some(list) if list.is_empty() => Err(CliError::Input("empty beta list".into())),
        Some(list) => config::reals(list),
        None => Ok(vec![default]),
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 fields"))
}

fn document(command: Command, pass: bool, payload: Value) -> String {
    let mut doc = json!({ "schema": SCHEMA, "command": command.name(), "pass": pass });
    if let (Value::Object(d), Value::Object(p)) = (&mut doc, payload) {
        d.extend(p);
    }
    serde_json::to_string_pretty(&doc).expect("json") + "\n"
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn ball_eig(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.n.unwrap_or(2);
    let r = cfg.r.as_ref().ok_or_else(|| CliError::Input("ball-eig needs --r".into()))?.value()?;
    let beta = match betas(cfg, 0.0)?.as_slice() {
        [b] => *b,
        _ => return Err(CliError::Input("ball-eig takes a single beta".into())),
    };
    let samples = cfg.steps.unwrap_or(DEFAULT_BALL_SAMPLES);
    if samples < 2 {
        return Err(CliError::Input("ball-eig needs at least 2 samples".into()));
    }
    let problem = RobinBallProblem::new(n, r, beta)?;
    let pair = first_eigenvalue(&problem)?;
    let rows: Vec<Vec<String>> = (0..samples)
        .map(|i| {
            let rho = r * i as f64 / (samples - 1) as f64;
            vec![num(rho), num(pair.phi_at(rho)), num(pair.dphi_at(rho))]
        })
        .collect();
    let json = document(
        Command::BallEig,
        true,
        json!({ "n": n, "radius": r, "beta": beta, "lambda": pair.lambda, "phi_boundary": pair.phi_at(0.0) }),
    );
    Ok(Outcome {
        summary: format!("lambda = {}\n", pair.lambda),
        json,
        csv: csv_text(&BALL_EIG_COLUMNS, &rows)?,
        mesh: None,
        pass: true,
    })
}

fn profile_steps(cfg: &RunConfig) -> usize {
    cfg.steps.unwrap_or(DEFAULT_PROFILE_STEPS)
}

/// Runs `f` on every (body, beta) pair concurrently, keeping input order.
fn corpus_map<T: Send>(
    bodies: &[NamedBody],
    betas: &[f64],
    f: impl Fn(&NamedBody, f64) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    let jobs: Vec<(&NamedBody, f64)> = bodies.iter().flat_map(|b| betas.iter().map(move |&beta| (b, beta))).collect();
    jobs.into_par_iter().map(|(b, beta)| f(b, beta)).collect()
}

fn residual(report: &VerificationReport, i: usize) -> String {
    report.checks.get(i).map(|c| num(c.residual)).unwrap_or_default()
}

fn value(report: &VerificationReport, key: &str) -> String {
    opt_num(report.values.get(key).copied())
}

struct Verified {
    body: String,
    beta: f64,
    report: VerificationReport,
    fem: Option<Value>,
}

fn verify_summary(items: &[Verified]) -> String {
    let mut s = String::new();
    for it in items {
        let rq = it.report.values.get("rq").copied().unwrap_or(f64::NAN);
        let lam = it.report.values.get("lambda_ball").copied().unwrap_or(f64::NAN);
        let eq = if it.report.equality_case { " (equality)" } else { "" };
        let _ = writeln!(
            s,
            "{} {} beta={} rq={rq:.10} lambda(D)={lam:.10}{eq}",
            verdict(it.report.overall),
            it.body,
            it.beta
        );
    }
    let passed = items.iter().filter(|i| i.report.overall).count();
    let _ = writeln!(s, "{passed}/{} passed", items.len());
    s
}

fn verify_json(command: Command, items: &[Verified], pass: bool) -> String {
    let list: Vec<Value> = items
        .iter()
        .map(|i| {
            let mut v = json!({ "body": i.body, "beta": i.beta, "report": to_value(&i.report) });
            if let Some(f) = &i.fem {
                v["fem"] = f.clone();
            }
            v
        })
        .collect();
    document(command, pass, json!({ "items": list }))
}

fn verify_thm1(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bodies = load_bodies(cfg)?;
    let betas = betas(cfg, -1.0)?;
    let k = profile_steps(cfg);
    let items = corpus_map(&bodies, &betas, |b, beta| {
        let report = thm1_verify(&b.body, beta, k)?;
        let fem = cfg.fem_level.map(|level| solve_body(&b.body, beta, level)).transpose()?;
        Ok(Verified { body: b.name.clone(), beta, report, fem: fem.as_ref().map(to_value) })
    })?;
    let pass = items.iter().all(|i| i.report.overall);
    let rows: Vec<Vec<String>> = items
        .iter()
        .map(|i| {
            let r = &i.report;
            let lambda_h = i.fem.as_ref().and_then(|f| f["lambda_h"].as_f64());
            vec![
                i.body.clone(),
                num(i.beta),
                value(r, "perimeter"),
                value(r, "area"),
                value(r, "inradius"),
                value(r, "ball_radius"),
                value(r, "lambda_ball"),
                value(r, "rq"),
                opt_num(lambda_h),
                residual(r, 0),
                residual(r, 1),
                residual(r, 2),
                residual(r, 3),
                residual(r, 4),
                r.overall.to_string(),
                r.equality_case.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        summary: verify_summary(&items),
        json: verify_json(Command::VerifyThm1, &items, pass),
        csv: csv_text(&THM1_COLUMNS, &rows)?,
        mesh: None,
        pass,
    })
}

fn verify_thm2(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bodies = load_bodies(cfg)?;
    let betas = betas(cfg, -1.0)?;
    let k = profile_steps(cfg);
    let items = corpus_map(&bodies, &betas, |b, beta| {
        let est = cfg.fem_level.map(|level| calibrated_estimate(&b.body, beta, level)).transpose()?;
        let fem = est.as_ref().map(|e| FemComparison {
            lambda_h: e.result.lambda_h,
            tolerance: e.epsilon / e.result.lambda_h.abs(),
        });
        let report = thm2_verify(&b.body, beta, k, fem)?;
        Ok(Verified { body: b.name.clone(), beta, report, fem: est.as_ref().map(to_value) })
    })?;
    let pass = items.iter().all(|i| i.report.overall);
    let rows: Vec<Vec<String>> = items
        .iter()
        .map(|i| {
            let r = &i.report;
            vec![
                i.body.clone(),
                num(i.beta),
                value(r, "perimeter"),
                value(r, "area"),
                value(r, "inradius"),
                value(r, "ball_radius"),
                value(r, "lambda_ball"),
                value(r, "rq"),
                value(r, "lambda_h"),
                value(r, "c"),
                value(r, "area_deficit"),
                value(r, "bound"),
                value(r, "corrected_bound"),
                residual(r, 0),
                residual(r, 1),
                residual(r, 2),
                residual(r, 3),
                residual(r, 4),
                r.overall.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        summary: verify_summary(&items),
        json: verify_json(Command::VerifyThm2, &items, pass),
        csv: csv_text(&THM2_COLUMNS, &rows)?,
        mesh: None,
        pass,
    })
}

fn profile(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bodies = load_bodies(cfg)?;
    let k = profile_steps(cfg);
    let results = corpus_map(&bodies, &[0.0], |b, _| {
        let profile = perimeter_profile(&b.body, k)?;
        let radius = radius_from_perimeter(2, profile.ps[0])?;
        let ball: Vec<f64> = profile.ts.iter().map(|t| std::f64::consts::TAU * (radius - t).sin()).collect();
        let mut report = ode_inequality_check(&profile);
        let excess = profile.ps.iter().zip(&ball).skip(1).map(|(p, d)| p - d).fold(f64::NEG_INFINITY, f64::max);
        report.push(Check::le("max_t [P(body_t) - P(D_t)] <= 0", excess, 0.0, profile.tol_grid()));
        Ok((b.name.clone(), profile, ball, report))
    })?;
    let pass = results.iter().all(|r| r.3.overall);
    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut items = Vec::new();
    for (name, profile, ball, report) in &results {
        for ((t, p), d) in profile.ts.iter().zip(&profile.ps).zip(ball) {
            rows.push(vec![name.clone(), num(*t), num(*p), num(*d)]);
        }
        let _ = writeln!(
            summary,
            "{} {name} inradius={} P(0)={} cells={}",
            verdict(report.overall),
            profile.inradius,
            profile.ps[0],
            profile.ts.len() - 1
        );
        items.push(json!({ "body": name, "report": to_value(report) }));
    }
    Ok(Outcome {
        summary,
        json: document(Command::Profile, pass, json!({ "steps": k, "items": items })),
        csv: csv_text(&PROFILE_COLUMNS, &rows)?,
        mesh: None,
        pass,
    })
}

fn steiner_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bodies = load_bodies(cfg)?;
    let s_list = match &cfg.s {
        Some(list) if list.is_empty() => return Err(CliError::Input("empty s list".into())),
        Some(list) => config::reals(list)?,
        None => vec![0.05, 0.1, 0.2],
    };
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples < 2 {
        return Err(CliError::Input("--samples must be at least 2".into()));
    }
    let seed = cfg.seed.unwrap_or(1);
    let results = corpus_map(&bodies, &s_list, |b, s| {
        let m = compute_measures(&b.body)?;
        let formula = steiner_volume(&m, s)?;
        let mc = outer_parallel_volume_mc(&b.body, s, samples, seed)?;
        let z = (mc.estimate - formula) / mc.std_err;
        let pass = (mc.estimate - formula).abs() <= STEINER_SIGMAS * mc.std_err;
        Ok((b.name.clone(), s, formula, mc, z, pass))
    })?;
    let pass = results.iter().all(|r| r.5);
    let mut summary = String::new();
    let mut rows = Vec::new();
    let mut items = Vec::new();
    for (name, s, formula, mc, z, ok) in &results {
        let _ = writeln!(summary, "{} {name} s={s} steiner={formula:.8} mc={:.8} z={z:.3}", verdict(*ok), mc.estimate);
        rows.push(vec![
            name.clone(),
            num(*s),
            num(*formula),
            num(mc.estimate),
            num(mc.std_err),
            num(*z),
            mc.samples.to_string(),
            ok.to_string(),
        ]);
        items.push(json!({
            "body": name, "s": s, "steiner": formula, "monte_carlo": to_value(mc), "z": z, "pass": ok
        }));
    }
    Ok(Outcome {
        summary,
        json: document(
            Command::SteinerCheck,
            pass,
            json!({ "samples": samples, "seed": seed, "sigmas": STEINER_SIGMAS, "items": items }),
        ),
        csv: csv_text(&STEINER_COLUMNS, &rows)?,
        mesh: None,
        pass,
    })
}

fn af_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bodies = load_bodies(cfg)?;
    let results = corpus_map(&bodies, &[0.0], |b, _| {
        let m = compute_measures(&b.body)?;
        let gap = alexandrov_fenchel_gap(&m);
        let ball = b.body.is_ball()?;
        let pass = gap >= -AF_TOL && (!ball || gap.abs() <= AF_TOL);
        Ok((b.name.clone(), m, gap, ball, pass))
    })?;
    let pass = results.iter().all(|r| r.4);
    let mut summary = String::new();
    let mut rows = Vec::new();
    let mut items = Vec::new();
    for (name, m, gap, ball, ok) in &results {
        let _ = writeln!(summary, "{} {name} gap={gap:e}{}", verdict(*ok), if *ball { " (ball)" } else { "" });
        rows.push(vec![
            name.clone(),
            num(m.phi0),
            num(m.phi1),
            num(m.phi2),
            num(*gap),
            ball.to_string(),
            ok.to_string(),
        ]);
        items.push(json!({ "body": name, "measures": to_value(m), "gap": gap, "ball": ball, "pass": ok }));
    }
    Ok(Outcome {
        summary,
        json: document(Command::AfCheck, pass, json!({ "tolerance": AF_TOL, "items": items })),
        csv: csv_text(&AF_COLUMNS, &rows)?,
        mesh: None,
        pass,
    })
}

fn hyp_witness(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let deltas = match &cfg.delta {
        Some(list) if list.is_empty() => return Err(CliError::Input("empty delta list".into())),
        Some(list) => config::reals(list)?,
        None => vec![0.05, 0.1, 0.5],
    };
    let dim = cfg.dim.unwrap_or(2);
    let pairs = cfg.pairs.unwrap_or(DEFAULT_PAIRS);
    let seed = cfg.seed.unwrap_or(1);
    let violations = cylinder_convexity_violations(pairs, seed, dim)?;
    let witnesses: Vec<_> = deltas.par_iter().map(|&d| nonconvexity_witness(d, dim)).collect::<Result<_, _>>()?;
    let pass = violations == 0 && witnesses.iter().all(|w| w.margin > 0.0);
    let mut summary = format!("{} cylinder geodesics: {violations} violations over {pairs} pairs\n", verdict(violations == 0));
    let mut rows = Vec::new();
    for w in &witnesses {
        let ok = w.margin > 0.0 && violations == 0;
        let _ = writeln!(summary, "{} delta={} s*={:.6} margin={:e}", verdict(w.margin > 0.0), w.delta, w.s_star, w.margin);
        rows.push(vec![
            num(w.delta),
            w.dim.to_string(),
            num(w.s_star),
            num(w.margin),
            violations.to_string(),
            ok.to_string(),
        ]);
    }
    let json = document(
        Command::HypWitness,
        pass,
        json!({
            "dim": dim, "pairs": pairs, "seed": seed, "cylinder_violations": violations,
            "witnesses": witnesses.iter().map(to_value).collect::<Vec<_>>()
        }),
    );
    Ok(Outcome { summary, json, csv: csv_text(&HYP_COLUMNS, &rows)?, mesh: None, pass })
}

fn mesh(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bodies = load_bodies(cfg)?;
    let [b] = bodies.as_slice() else {
        return Err(CliError::Input("mesh takes a single body".into()));
    };
    let level = cfg.level.unwrap_or(0);
    let m = mesh_body(&b.body, level)?;
    let summary = format!(
        "{}: {} vertices, {} triangles, {} boundary edges, h = {}\n",
        b.name,
        m.vertices.len(),
        m.triangles.len(),
        m.boundary_edges.len(),
        m.h
    );
    let json = document(
        Command::Mesh,
        true,
        json!({
            "body": b.name, "level": level, "vertices": m.vertices.len(), "triangles": m.triangles.len(),
            "boundary_edges": m.boundary_edges.len(), "h": m.h, "area": m.area(), "boundary_length": m.boundary_length()
        }),
    );
    Ok(Outcome { summary, json, csv: String::new(), mesh: Some(m.to_text()), pass: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let mut o = Outcome { summary: String::new(), json: String::new(), csv: String::new(), mesh: None, pass: true };
        assert_eq!(o.exit_code(), 0);
        o.pass = false;
        assert_eq!(o.exit_code(), 1);
    }

    #[test]
    fn csv_quotes_awkward_names() {
        let text = csv_text(&["body", "x"], &[vec!["a,b".into(), "1".into()]]).unwrap();
        assert_eq!(text, "body,x\n\"a,b\",1\n");
    }

    #[test]
    fn ball_eig_through_execute() {
        let mut cfg = RunConfig::new(Command::BallEig);
        cfg.r = Some(Real::Expr("0.4".into()));
        cfg.beta = Some(vec![Real::Expr("tan(0.4)".into())]);
        let out = execute(&cfg).unwrap();
        let v: Value = serde_json::from_str(&out.json).unwrap();
        assert_eq!(v["schema"], 1);
        assert!((v["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-8);
        cfg.beta = Some(vec![Real::Number(0.0), Real::Number(1.0)]);
        assert!(execute(&cfg).is_err());
    }
}
