//! Inner parallel profiles, the perimeter differential inequality, the
//! comparison lemma, and the transplanted Rayleigh quotient behind the
//! Faber–Krahn type comparison with the equal-perimeter ball.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::body::CapBody;
use crate::error::{invalid, Error, Result};
use crate::quadrature::simpson_weights;
use crate::radial::{first_eigenvalue, u_min_and_l2, RadialEigenpair, RobinBallProblem};
use crate::spaceform::{ball_geometry, radius_from_perimeter};

pub const MIN_PROFILE_STEPS: usize = 64;
pub const DEFAULT_PROFILE_STEPS: usize = 2048;
/// The grid stops short of the inradius, where the inner parallel set
/// collapses to a point.
pub const PROFILE_END_FRACTION: f64 = 1.0 - 1e-6;
pub const EQUALITY_TOL: f64 = 1e-8;
pub const QUOTIENT_TOL: f64 = 1e-6;
/// Flagged cells tolerated by the differential inequality check, provided
/// no two are adjacent.
pub const MAX_ISOLATED_FLAGS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerimeterProfile {
    pub inradius: f64,
    pub ts: Vec<f64>,
    pub ps: Vec<f64>,
    /// Exact perimeters at cell midpoints, when known.
    pub ps_mid: Option<Vec<f64>>,
}

impl PerimeterProfile {
    /// Profile from samples alone; midpoint values are neighbour averages.
    pub fn from_samples(ts: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if ts.len() != ps.len() || ts.len() < 2 {
            return Err(invalid("profile needs matching t and P samples, at least two"));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("profile grid must be strictly increasing"));
        }
        let inradius = *ts.last().unwrap();
        Ok(PerimeterProfile { inradius, ts, ps, ps_mid: None })
    }

    pub fn step(&self) -> f64 {
        self.ts[1] - self.ts[0]
    }

    pub fn tol_grid(&self) -> f64 {
        grid_tolerance(self.step())
    }

    fn mid(&self, k: usize) -> f64 {
        match &self.ps_mid {
            Some(m) => m[k],
            None => 0.5 * (self.ps[k] + self.ps[k + 1]),
        }
    }
}

/// Tolerance for first-differences of an exact profile: centred
/// differences carry an O(Δt²) error.
pub fn grid_tolerance(dt: f64) -> f64 {
    10.0 * (dt * dt).max(1e-10)
}

/// `P(Ω_t)` on a uniform grid of `K + 1` points over
/// `[0, R_Ω (1 - 1e-6)]`, from exact inner parallel geometry.
pub fn perimeter_profile(body: &CapBody, k: usize) -> Result<PerimeterProfile> {
    if k < MIN_PROFILE_STEPS {
        return Err(invalid(format!("profile needs at least {MIN_PROFILE_STEPS} steps, got {k}")));
    }
    let r = body.inradius();
    let end = r * PROFILE_END_FRACTION;
    let h = end / k as f64;
    let perimeter_at = |t: f64| body.inner_parallel(t)?.perimeter();
    let ts: Vec<f64> = (0..=k).map(|i| i as f64 * h).collect();
    let ps = ts.par_iter().map(|&t| perimeter_at(t)).collect::<Result<Vec<_>>>()?;
    let ps_mid = (0..k).into_par_iter().map(|i| perimeter_at((i as f64 + 0.5) * h)).collect::<Result<Vec<_>>>()?;
    Ok(PerimeterProfile { inradius: r, ts, ps, ps_mid: Some(ps_mid) })
}

/// One inequality `lhs <= rhs` within `tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; nonnegative when the inequality holds exactly.
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// Both sides agree to the equality tolerance.
    pub equality: bool,
    /// Reported, but excluded from the overall verdict.
    pub informational: bool,
}

impl Check {
    pub fn le(description: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = rhs - lhs;
        Check {
            description: description.into(),
            lhs,
            rhs,
            residual,
            tol,
            pass: residual >= -tol,
            equality: residual.abs() <= EQUALITY_TOL * rhs.abs().max(1.0),
            informational: false,
        }
    }

    fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub overall: bool,
    pub equality_case: bool,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>) -> Self {
        VerificationReport {
            name: name.into(),
            checks: Vec::new(),
            overall: true,
            equality_case: false,
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
        self.finish();
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    fn finish(&mut self) {
        let counted: Vec<&Check> = self.checks.iter().filter(|c| !c.informational).collect();
        self.overall = counted.iter().all(|c| c.pass);
        self.equality_case = !counted.is_empty() && counted.iter().all(|c| c.equality);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "report,description,lhs,rhs,residual,tol,pass,equality,informational";

    pub fn csv_rows(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{},{},{:e},{:e},{:e},{:e},{},{},{}",
                    csv_field(&self.name),
                    csv_field(&c.description),
                    c.lhs,
                    c.rhs,
                    c.residual,
                    c.tol,
                    c.pass,
                    c.equality,
                    c.informational
                )
            })
            .collect()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Checks `-(P_{k+1} - P_k)/Δt >= sqrt(4π² - P_mid²)` on every cell.
pub fn ode_inequality_check(profile: &PerimeterProfile) -> VerificationReport {
    let mut report = VerificationReport::new("perimeter differential inequality");
    let tol = profile.tol_grid();
    let mut worst = f64::INFINITY;
    let mut worst_rhs = 0.0;
    let mut worst_lhs = 0.0;
    let mut flagged = Vec::new();
    for k in 0..profile.ts.len() - 1 {
        let dt = profile.ts[k + 1] - profile.ts[k];
        let lhs = -(profile.ps[k + 1] - profile.ps[k]) / dt;
        let p = profile.mid(k);
        let rhs = (TAU * TAU - p * p).max(0.0).sqrt();
        let r = lhs - rhs;
        if r < -tol {
            flagged.push(k);
        }
        if r < worst {
            worst = r;
            worst_lhs = lhs;
            worst_rhs = rhs;
        }
    }
    let isolated = flagged.len() <= MAX_ISOLATED_FLAGS && flagged.windows(2).all(|w| w[1] > w[0] + 1);
    let mut check = Check::le("-dP/dt >= sqrt(4 pi^2 - P^2), worst cell", worst_rhs, worst_lhs, tol);
    check.pass = flagged.is_empty() || isolated;
    report.push(check);
    report.value("flagged_cells", flagged.len() as f64);
    report.value("tol_grid", tol);
    if !flagged.is_empty() {
        let kind = if isolated { "isolated" } else { "non-isolated" };
        report.notes.push(format!("{kind} flagged cells: {flagged:?}"));
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonOutcome {
    pub g: Vec<f64>,
    pub verdict: bool,
    /// `max_k (f_k - g_k)`.
    pub max_excess: f64,
    /// True when the field had to be clamped to 0 somewhere.
    pub clamped: bool,
}

/// `F(x) = -sqrt(4π² - x²)`; NaN outside `|x| <= 2π`.
pub fn isoperimetric_field(x: f64) -> f64 {
    -(TAU * TAU - x * x).sqrt()
}

/// Integrates `g' = F(g)` from `g0` by RK4 on the grid of `f` and checks
/// `f <= g + tol` at every node. Non-finite field values are clamped to 0.
pub fn comparison_solve(
    ts: &[f64],
    f: &[f64],
    field: impl Fn(f64) -> f64,
    g0: f64,
    tol: f64,
) -> Result<ComparisonOutcome> {
    if ts.len() != f.len() || ts.is_empty() {
        return Err(invalid("comparison needs matching nonempty samples"));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("comparison grid must be strictly increasing"));
    }
    if f.windows(2).any(|w| w[1] > w[0] + 1e-12 * w[0].abs().max(1.0)) {
        return Err(invalid("compared function must be nonincreasing"));
    }
    if !(g0 >= f[0]) {
        return Err(invalid(format!("initial value {g0} below f(a) = {}", f[0])));
    }
    let mut clamped = false;
    let mut field = |x: f64| {
        let v = field(x);
        if v.is_finite() {
            v
        } else {
            clamped = true;
            0.0
        }
    };
    let mut g = Vec::with_capacity(ts.len());
    g.push(g0);
    for w in ts.windows(2) {
        let h = w[1] - w[0];
        let y = *g.last().unwrap();
        let k1 = field(y);
        let k2 = field(y + 0.5 * h * k1);
        let k3 = field(y + 0.5 * h * k2);
        let k4 = field(y + h * k3);
        g.push(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    let max_excess = f.iter().zip(&g).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    Ok(ComparisonOutcome { verdict: max_excess <= tol, g, max_excess, clamped })
}

/// The ball with the body's perimeter and its Robin eigenpair.
#[derive(Debug, Clone)]
pub struct ComparisonBall {
    pub radius: f64,
    pub area: f64,
    pub problem: RobinBallProblem,
    pub pair: RadialEigenpair,
}

impl ComparisonBall {
    pub fn for_perimeter(perimeter: f64, beta: f64) -> Result<Self> {
        let radius = radius_from_perimeter(2, perimeter)?;
        let area = ball_geometry(2, radius)?.volume;
        let problem = RobinBallProblem::new(2, radius, beta)?;
        let pair = first_eigenvalue(&problem)?;
        Ok(ComparisonBall { radius, area, problem, pair })
    }

    pub fn lambda(&self) -> f64 {
        self.pair.lambda
    }

    /// `P(D_t) = 2π sin(R - t)`.
    pub fn parallel_perimeter(&self, t: f64) -> f64 {
        TAU * (self.radius - t).max(0.0).sin()
    }
}

/// Integrals of the transplanted test function `v = φ(d(·, ∂Ω))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transplant {
    pub rq: f64,
    pub gradient: f64,
    pub boundary: f64,
    pub l2: f64,
    /// The same integrals with `P(D_t)` in place of `P(Ω_t)`, over `[0, R_Ω]`.
    pub gradient_ball: f64,
    pub l2_ball: f64,
}

fn transplant_integrals(profile: &PerimeterProfile, ball: &ComparisonBall, beta: f64) -> Transplant {
    let w = simpson_weights(profile.step(), profile.ts.len());
    let (mut grad, mut l2, mut grad_d, mut l2_d) = (0.0, 0.0, 0.0, 0.0);
    for ((&t, &p), &wk) in profile.ts.iter().zip(&profile.ps).zip(&w) {
        let phi = ball.pair.phi_at(t);
        let dphi = ball.pair.dphi_at(t);
        let pd = ball.parallel_perimeter(t);
        grad += wk * dphi * dphi * p;
        l2 += wk * phi * phi * p;
        grad_d += wk * dphi * dphi * pd;
        l2_d += wk * phi * phi * pd;
    }
    let phi0 = ball.pair.phi_at(0.0);
    // Same value as the boundary integral of u over ∂D, since P(Ω) = P(D).
    let boundary = phi0 * phi0 * profile.ps[0];
    Transplant {
        rq: (grad + beta * boundary) / l2,
        gradient: grad,
        boundary,
        l2,
        gradient_ball: grad_d,
        l2_ball: l2_d,
    }
}

/// Rayleigh quotient of the transplanted ball eigenfunction.
pub fn transplant_rayleigh(body: &CapBody, beta: f64, k: usize) -> Result<(Transplant, ComparisonBall, PerimeterProfile)> {
    let profile = perimeter_profile(body, k)?;
    let ball = ComparisonBall::for_perimeter(profile.ps[0], beta)?;
    Ok((transplant_integrals(&profile, &ball, beta), ball, profile))
}

fn require_negative(beta: f64) -> Result<()> {
    if beta < 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("beta = {beta} must be negative")))
    }
}

fn common_values(report: &mut VerificationReport, body: &CapBody, area: f64, beta: f64, ball: &ComparisonBall, tr: &Transplant) {
    report.value("beta", beta);
    report.value("perimeter", tr.boundary / ball.pair.phi_at(0.0).powi(2));
    report.value("area", area);
    report.value("inradius", body.inradius());
    report.value("ball_radius", ball.radius);
    report.value("ball_area", ball.area);
    report.value("lambda_ball", ball.lambda());
    report.value("rq", tr.rq);
}

/// Pipeline for `λ_β(Ω) <= λ_β(D)` with `P(D) = P(Ω)`.
pub fn thm1_verify(body: &CapBody, beta: f64, k: usize) -> Result<VerificationReport> {
    require_negative(beta)?;
    let (tr, ball, profile) = transplant_rayleigh(body, beta, k)?;
    let area = body.area()?;
    let tol = profile.tol_grid();
    let mut report = VerificationReport::new("eigenvalue comparison with the equal-perimeter ball");
    report.push(Check::le("area(body) <= area(D)", area, ball.area, EQUALITY_TOL));
    report.push(Check::le("inradius(body) <= radius(D)", body.inradius(), ball.radius, EQUALITY_TOL));
    // t = 0 is equal by construction; the comparison concerns t in (0, R_Ω).
    let excess = profile
        .ts
        .iter()
        .zip(&profile.ps)
        .skip(1)
        .map(|(&t, &p)| p - ball.parallel_perimeter(t))
        .fold(f64::NEG_INFINITY, f64::max);
    report.push(Check::le("max_t [P(body_t) - P(D_t)] <= 0", excess, 0.0, tol));
    report.push(Check::le(
        "gradient integral of v <= same integral against P(D_t)",
        tr.gradient,
        tr.gradient_ball,
        tol * tr.gradient_ball.abs().max(1.0),
    ));
    report.push(Check::le("transplanted quotient <= lambda(D)", tr.rq, ball.lambda(), QUOTIENT_TOL));
    common_values(&mut report, body, area, beta, &ball, &tr);
    report.value("tol_grid", tol);
    Ok(report)
}

/// Discrete estimate of `λ_β(Ω)` with its error allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FemComparison {
    pub lambda_h: f64,
    /// Relative accuracy of `lambda_h`.
    pub tolerance: f64,
}

/// Pipeline for the quantitative bound
/// `(λ_β(D) - λ_β(Ω)) / |λ_β(Ω)| >= c (|D| - |Ω|)`, `c = u_m² / ‖u‖²`.
pub fn thm2_verify(body: &CapBody, beta: f64, k: usize, fem: Option<FemComparison>) -> Result<VerificationReport> {
    require_negative(beta)?;
    let (tr, ball, _profile) = transplant_rayleigh(body, beta, k)?;
    let area = body.area()?;
    let (u_m, l2sq) = u_min_and_l2(&ball.pair, &ball.problem)?;
    let c = u_m * u_m / l2sq;
    let dv = ball.area - area;
    let cdv = c * dv;
    let lambda = ball.lambda();
    let mut report = VerificationReport::new("quantitative eigenvalue bound");
    report.push(Check::le("0 <= c * (|D| - |body|)", 0.0, cdv, EQUALITY_TOL));
    report.push(Check::le("c * (|D| - |body|) < 1", cdv, 1.0 - f64::EPSILON, 0.0));
    if cdv >= 1.0 {
        return Err(Error::Solver(format!("guard failure: c * dV = {cdv} >= 1")));
    }
    let bound = lambda / (1.0 - cdv);
    report.push(Check::le("transplanted quotient <= lambda(D) / (1 - c dV)", tr.rq, bound, QUOTIENT_TOL));

    // The estimate that does follow from the coarea computation removes the
    // ball of radius R - R_Ω from ‖u‖², not the area deficit.
    let gap = ball.radius - body.inradius();
    let removed = if gap > 0.0 { ball_geometry(2, gap)?.volume } else { 0.0 };
    let corrected = lambda / (1.0 - u_m * u_m * removed / l2sq);
    report.push(
        Check::le("transplanted quotient <= lambda(D) / (1 - u_m^2 |B(R - R_body)| / |u|^2)", tr.rq, corrected, QUOTIENT_TOL)
            .informational(),
    );

    if let Some(f) = fem {
        let ratio = (lambda - f.lambda_h) / f.lambda_h.abs();
        report.push(Check::le(
            "discrete stability ratio (lambda(D) - lambda_h)/|lambda_h| >= c dV",
            cdv - 2.0 * f.tolerance,
            ratio,
            0.0,
        ));
        report.value("lambda_h", f.lambda_h);
        report.value("stability_ratio_fem", ratio);
    }
    common_values(&mut report, body, area, beta, &ball, &tr);
    report.value("u_min", u_m);
    report.value("u_l2_squared", l2sq);
    report.value("c", c);
    report.value("area_deficit", dv);
    report.value("stability_lower_bound", cdv);
    report.value("bound", bound);
    report.value("corrected_bound", corrected);
    Ok(report)
}
