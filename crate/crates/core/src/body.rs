//! Strongly convex bodies on S² given as finite intersections of geodesic
//! caps.
//!
//! The representation is closed under inner parallels: shrinking every cap
//! radius by `t` gives exactly `{p : d(p, ∂Ω) >= t}`, so profiles of inner
//! parallel sets are computed from exact geometry.
//!
//! Boundary extraction parameterizes each cap's boundary circle as
//! `c(θ) = cos ρ a + sin ρ (cos θ u + sin θ v)` with `u × v = a`, which
//! traverses the circle with the cap on the left. Another constraint `j`
//! restricts `θ` to `A cos θ + B sin θ >= C`, an arc solved in closed form.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

pub type Vec3 = Vector3<f64>;

/// Slack for closed-set membership tests.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Circle configurations closer than this to tangency are rejected.
pub const TANGENCY_TOL: f64 = 1e-10;
const MIN_ARC_ANGLE: f64 = 1e-9;
const LINK_TOL: f64 = 1e-7;
const LINK_RATIO: f64 = 1e-3;
const MIN_WITNESS_MARGIN: f64 = 1e-9;

/// Angle between two unit vectors, accurate near 0 and π.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Geodesic midpoint via the normalized chord midpoint.
pub fn geodesic_midpoint(a: &Vec3, b: &Vec3) -> Vec3 {
    (a + b).normalize()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapConstraint {
    pub pole: Vec3,
    pub rho: f64,
}

impl CapConstraint {
    /// Normalizes `pole`; `rho` must lie in `(0, π/2]`.
    pub fn new(pole: Vec3, rho: f64) -> Result<Self> {
        let norm = pole.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(invalid("cap pole must be a finite nonzero vector"));
        }
        if !(rho > 0.0 && rho <= FRAC_PI_2) {
            return Err(invalid(format!("cap radius {rho} outside (0, pi/2]")));
        }
        let pole = if (norm - 1.0).abs() > 4.0 * f64::EPSILON { pole / norm } else { pole };
        Ok(CapConstraint { pole, rho })
    }

    fn frame(&self) -> (Vec3, Vec3) {
        let a = self.pole;
        let e = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
            Vec3::x()
        } else if a.y.abs() <= a.z.abs() {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let u = e.cross(&a).normalize();
        let v = a.cross(&u);
        (u, v)
    }

    fn circle_point(&self, frame: &(Vec3, Vec3), theta: f64) -> Vec3 {
        let (s, c) = self.rho.sin_cos();
        c * self.pole + s * (theta.cos() * frame.0 + theta.sin() * frame.1)
    }

    fn circle_tangent(frame: &(Vec3, Vec3), theta: f64) -> Vec3 {
        -theta.sin() * frame.0 + theta.cos() * frame.1
    }
}

#[derive(Debug, Clone)]
pub struct CapBody {
    constraints: Vec<CapConstraint>,
    incenter: Vec3,
    inradius: f64,
}

impl CapBody {
    /// Builds a body, certifying a nonempty interior by its incenter.
    pub fn new(constraints: Vec<CapConstraint>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(invalid("a body needs at least one cap"));
        }
        let (incenter, inradius) = chebyshev_center(&constraints);
        if !(inradius > 1e-12) {
            return Err(Error::EmptyInterior);
        }
        Ok(CapBody { constraints, incenter, inradius })
    }

    /// Single geodesic ball.
    pub fn ball(center: Vec3, radius: f64) -> Result<Self> {
        Self::new(vec![CapConstraint::new(center, radius)?])
    }

    /// The octant `x, y, z >= 0`: three hemisphere constraints.
    pub fn octant() -> Self {
        let caps = [Vec3::x(), Vec3::y(), Vec3::z()]
            .into_iter()
            .map(|p| CapConstraint { pole: p, rho: FRAC_PI_2 })
            .collect();
        Self::new(caps).expect("octant has interior")
    }

    pub fn constraints(&self) -> &[CapConstraint] {
        &self.constraints
    }

    pub fn incenter(&self) -> Vec3 {
        self.incenter
    }

    /// Largest `d(p, ∂Ω)` over the body.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.constraints.iter().all(|c| p.dot(&c.pole) >= c.rho.cos() - BOUNDARY_TOL)
    }

    fn signed_depth(&self, p: &Vec3) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.rho - angle_between(p, &c.pole))
            .fold(f64::INFINITY, f64::min)
    }

    /// Geodesic distance from a point of the body to its boundary. Each cap
    /// contains the ball of radius `ρ_i - d(p, pole_i)` around `p`, and the
    /// minimizing cap's touching point lies on `∂Ω`.
    pub fn distance_to_boundary(&self, p: &Vec3) -> Result<f64> {
        if !self.contains(p) {
            return Err(invalid("point lies outside the body"));
        }
        Ok(self.signed_depth(p).max(0.0))
    }

    /// `{p : d(p, ∂Ω) >= t}`, the same caps with radii reduced by `t`.
    pub fn inner_parallel(&self, t: f64) -> Result<CapBody> {
        if !(t >= 0.0) {
            return Err(invalid(format!("parallel distance {t} must be >= 0")));
        }
        if t >= self.inradius {
            return Err(Error::EmptyInterior);
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| CapConstraint { pole: c.pole, rho: c.rho - t })
            .collect();
        Ok(CapBody { constraints, incenter: self.incenter, inradius: self.inradius - t })
    }

    pub fn boundary_structure(&self) -> Result<BoundaryStructure> {
        boundary_structure(self)
    }

    pub fn perimeter(&self) -> Result<f64> {
        Ok(self.boundary_structure()?.perimeter())
    }

    pub fn area(&self) -> Result<f64> {
        Ok(self.boundary_structure()?.area())
    }

    pub fn hemisphere_witness(&self) -> Result<HemisphereWitness> {
        hemisphere_witness(self)
    }

    /// Exterior distance `d(p, Ω)`; zero inside.
    pub fn distance_to_body(&self, boundary: &BoundaryStructure, p: &Vec3) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        let mut best = boundary
            .vertices
            .iter()
            .map(|v| angle_between(p, &v.point))
            .fold(f64::INFINITY, f64::min);
        for arc in &boundary.arcs {
            let cap = &self.constraints[arc.constraint];
            let (u, v) = cap.frame();
            let foot = p.dot(&v).atan2(p.dot(&u));
            if arc.contains_angle(foot) {
                best = best.min((angle_between(p, &cap.pole) - cap.rho).abs());
            }
        }
        best
    }

    /// Uniform samples from the body by rejection inside a cap that
    /// contains it.
    pub fn sample_points(&self, rng: &mut impl Rng, count: usize) -> Vec<Vec3> {
        let (axis, max_angle) = self.enclosing_cap();
        let frame = CapConstraint { pole: axis, rho: max_angle.min(PI) }.frame();
        let zmin = max_angle.cos();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let z = zmin + (1.0 - zmin) * rng.random::<f64>();
            let phi = TAU * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            let p = z * axis + s * (phi.cos() * frame.0 + phi.sin() * frame.1);
            if self.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// A cap `(axis, angular radius)` containing the body.
    pub fn enclosing_cap(&self) -> (Vec3, f64) {
        let axis = self.incenter;
        // Each boundary point is within min_i(d(incenter, pole_i) + ρ_i).
        let bound = self
            .constraints
            .iter()
            .map(|c| angle_between(&axis, &c.pole) + c.rho)
            .fold(f64::INFINITY, f64::min);
        (axis, (bound + 1e-9).min(PI))
    }

    /// Counts pairs of sampled points whose geodesic midpoint leaves the body.
    pub fn midpoint_violations(&self, seed: u64, pairs: usize) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = self.sample_points(&mut rng, 2 * pairs);
        pts.chunks(2).filter(|pq| !self.contains(&geodesic_midpoint(&pq[0], &pq[1]))).count()
    }

    /// True when only one cap contributes to the boundary.
    pub fn is_ball(&self) -> Result<bool> {
        Ok(self.boundary_structure()?.vertices.is_empty())
    }
}

/// Maximizer of `min_i (ρ_i - d(p, pole_i))`, by enumerating the possible
/// active sets: a single pole, the balanced point on the geodesic between
/// two poles, and the point equidistant (in depth) from three circles.
fn chebyshev_center(caps: &[CapConstraint]) -> (Vec3, f64) {
    let depth = |p: &Vec3| {
        caps.iter().map(|c| c.rho - angle_between(p, &c.pole)).fold(f64::INFINITY, f64::min)
    };
    let mut best = (caps[0].pole, depth(&caps[0].pole));
    let mut consider = |p: Vec3| {
        if p.iter().all(|x| x.is_finite()) {
            let d = depth(&p);
            if d > best.1 {
                best = (p, d);
            }
        }
    };
    for c in caps {
        consider(c.pole);
    }
    for (i, ci) in caps.iter().enumerate() {
        for cj in &caps[i + 1..] {
            let gamma = angle_between(&ci.pole, &cj.pole);
            if !(1e-14..=PI - 1e-9).contains(&gamma) {
                continue;
            }
            let di = (0.5 * (gamma + ci.rho - cj.rho)).clamp(0.0, gamma);
            consider(slerp(&ci.pole, &cj.pole, gamma, di));
        }
    }
    for i in 0..caps.len() {
        for j in i + 1..caps.len() {
            for k in j + 1..caps.len() {
                for p in triple_centers([&caps[i], &caps[j], &caps[k]]) {
                    consider(p);
                }
            }
        }
    }
    best
}

fn slerp(a: &Vec3, b: &Vec3, gamma: f64, along: f64) -> Vec3 {
    ((gamma - along).sin() * a + along.sin() * b) / gamma.sin()
}

/// Points `p` with `⟨p, pole_m⟩ = cos(ρ_m - r)` for all three caps and
/// `0 < r <= min ρ_m`.
fn triple_centers(caps: [&CapConstraint; 3]) -> Vec<Vec3> {
    let m = Matrix3::from_rows(&[caps[0].pole.transpose(), caps[1].pole.transpose(), caps[2].pole.transpose()]);
    let Some(inv) = m.try_inverse() else {
        return Vec::new();
    };
    if m.determinant().abs() < 1e-12 {
        return Vec::new();
    }
    let point = |r: f64| inv * Vec3::new((caps[0].rho - r).cos(), (caps[1].rho - r).cos(), (caps[2].rho - r).cos());
    let h = |r: f64| point(r).norm_squared() - 1.0;
    let r_max = caps.iter().map(|c| c.rho).fold(f64::INFINITY, f64::min);
    let samples = 64;
    let mut out = Vec::new();
    let mut prev_r = 0.0;
    let mut prev_h = h(0.0);
    for s in 1..=samples {
        let r = r_max * s as f64 / samples as f64;
        let hr = h(r);
        if hr == 0.0 {
            out.push(point(r).normalize());
        } else if prev_h * hr < 0.0 {
            let (mut a, mut b, mut ha) = (prev_r, r, prev_h);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                let hm = h(mid);
                if hm * ha <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    ha = hm;
                }
            }
            out.push(point(0.5 * (a + b)).normalize());
        }
        prev_r = r;
        prev_h = hr;
    }
    out
}

/// A boundary piece on one cap's circle: `θ ∈ [theta_start, theta_end]`,
/// with `theta_end > theta_start` (unwrapped).
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub constraint: usize,
    pub theta_start: f64,
    pub theta_end: f64,
    pub length: f64,
    /// `cot ρ`.
    pub geodesic_curvature: f64,
    /// `cos ρ (θ_end - θ_start)`, the integral of the geodesic curvature.
    pub turning: f64,
    pub start: Vec3,
    pub end: Vec3,
}

impl Arc {
    pub fn angle(&self) -> f64 {
        self.theta_end - self.theta_start
    }

    fn contains_angle(&self, theta: f64) -> bool {
        if self.angle() >= TAU - 1e-15 {
            return true;
        }
        let off = (theta - self.theta_start).rem_euclid(TAU);
        off <= self.angle()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Vec3,
    pub exterior_angle: f64,
}

/// Boundary of a body as a closed curve: `vertices[k]` joins the end of
/// `arcs[k]` to the start of `arcs[(k + 1) % len]`. A single full circle has
/// no vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryStructure {
    pub arcs: Vec<Arc>,
    pub vertices: Vec<Vertex>,
}

impl BoundaryStructure {
    pub fn perimeter(&self) -> f64 {
        self.arcs.iter().map(|a| a.length).sum()
    }

    /// Gauss–Bonnet: `2π - ∫ k_g ds - Σ exterior angles`.
    pub fn area(&self) -> f64 {
        TAU - self.total_turning() - self.total_exterior_angle()
    }

    pub fn total_turning(&self) -> f64 {
        self.arcs.iter().map(|a| a.turning).sum()
    }

    pub fn total_exterior_angle(&self) -> f64 {
        self.vertices.iter().map(|v| v.exterior_angle).sum()
    }

    /// Point at arc parameter `theta` of arc `k`.
    pub fn arc_point(&self, body: &CapBody, k: usize, theta: f64) -> Vec3 {
        let cap = &body.constraints[self.arcs[k].constraint];
        cap.circle_point(&cap.frame(), theta)
    }
}

type Intervals = Vec<(f64, f64)>;

fn intersect(a: &Intervals, b: &Intervals) -> Intervals {
    let mut out = Vec::new();
    for &(s1, e1) in a {
        for &(s2, e2) in b {
            let s = s1.max(s2);
            let e = e1.min(e2);
            if e > s {
                out.push((s, e));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Arc `[center - half, center + half]` as intervals inside `[0, 2π)`.
fn arc_intervals(center: f64, half: f64) -> Intervals {
    let s = (center - half).rem_euclid(TAU);
    let e = s + 2.0 * half;
    if e <= TAU {
        vec![(s, e)]
    } else {
        vec![(0.0, e - TAU), (s, TAU)]
    }
}

enum Restriction {
    None,
    Empty,
    Arc(f64, f64),
}

fn restriction(ci: &CapConstraint, frame: &(Vec3, Vec3), cj: &CapConstraint) -> Result<Restriction> {
    let (si, co) = ci.rho.sin_cos();
    let a = si * frame.0.dot(&cj.pole);
    let b = si * frame.1.dot(&cj.pole);
    let c = cj.rho.cos() - co * ci.pole.dot(&cj.pole);
    let m = a.hypot(b);
    if m < 1e-14 {
        if c.abs() <= TANGENCY_TOL {
            return Err(Error::Degenerate("coincident cap circles".into()));
        }
        return Ok(if c < 0.0 { Restriction::None } else { Restriction::Empty });
    }
    let ratio = c / m;
    if (ratio.abs() - 1.0).abs() <= TANGENCY_TOL {
        return Err(Error::Degenerate("tangent cap circles".into()));
    }
    Ok(if ratio <= -1.0 {
        Restriction::None
    } else if ratio >= 1.0 {
        Restriction::Empty
    } else {
        Restriction::Arc(b.atan2(a), ratio.acos())
    })
}

pub fn boundary_structure(body: &CapBody) -> Result<BoundaryStructure> {
    let caps = &body.constraints;
    let frames: Vec<_> = caps.iter().map(|c| c.frame()).collect();
    let mut arcs = Vec::new();
    let mut full_circles = 0usize;

    for (i, ci) in caps.iter().enumerate() {
        let mut allowed: Intervals = vec![(0.0, TAU)];
        for (j, cj) in caps.iter().enumerate() {
            if i == j || allowed.is_empty() {
                continue;
            }
            match restriction(ci, &frames[i], cj)? {
                Restriction::None => {}
                Restriction::Empty => allowed.clear(),
                Restriction::Arc(center, half) => allowed = intersect(&allowed, &arc_intervals(center, half)),
            }
        }
        if allowed.len() == 1 && allowed[0] == (0.0, TAU) {
            full_circles += 1;
        }
        // Join pieces split at θ = 0.
        if allowed.len() >= 2 && allowed[0].0 == 0.0 && allowed.last().unwrap().1 == TAU {
            let first = allowed.remove(0);
            allowed.last_mut().unwrap().1 = TAU + first.1;
        }
        for (s, e) in allowed {
            if e - s < MIN_ARC_ANGLE {
                continue;
            }
            let (sr, cr) = ci.rho.sin_cos();
            arcs.push(Arc {
                constraint: i,
                theta_start: s,
                theta_end: e,
                length: sr * (e - s),
                geodesic_curvature: cr / sr,
                turning: cr * (e - s),
                start: ci.circle_point(&frames[i], s),
                end: ci.circle_point(&frames[i], e),
            });
        }
    }

    if arcs.is_empty() {
        return Err(Error::EmptyInterior);
    }
    if full_circles > 0 {
        if full_circles == 1 && arcs.len() == 1 {
            return Ok(BoundaryStructure { arcs, vertices: Vec::new() });
        }
        return Err(Error::Degenerate("full boundary circle alongside other arcs".into()));
    }

    // Link each arc end to the unique arc start at the same point.
    let n = arcs.len();
    let mut next = vec![usize::MAX; n];
    for k in 0..n {
        let mut dists: Vec<(f64, usize)> =
            (0..n).filter(|&l| l != k).map(|l| ((arcs[k].end - arcs[l].start).norm(), l)).collect();
        dists.sort_by(|x, y| x.0.total_cmp(&y.0));
        match dists.as_slice() {
            [(d, l), rest @ ..] if *d < LINK_TOL => {
                // Near a constraint dropout a short arc leaves two starts within
                // LINK_TOL; the shared intersection point is still much closer.
                if rest.first().is_some_and(|(d2, _)| *d2 < LINK_TOL && *d > LINK_RATIO * d2) {
                    return Err(Error::Degenerate("three boundary circles meet at one point".into()));
                }
                next[k] = *l;
            }
            _ => return Err(Error::Degenerate("boundary arcs do not close up".into())),
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut k = 0;
    for _ in 0..n {
        order.push(k);
        k = next[k];
    }
    if k != 0 || {
        let mut seen = order.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len() != n
    } {
        return Err(Error::Degenerate("boundary is not a single closed curve".into()));
    }

    let arcs: Vec<Arc> = order.into_iter().map(|k| arcs[k].clone()).collect();
    let mut vertices = Vec::with_capacity(n);
    for k in 0..n {
        let (a_in, a_out) = (&arcs[k], &arcs[(k + 1) % n]);
        let t_in = CapConstraint::circle_tangent(&frames[a_in.constraint], a_in.theta_end);
        let t_out = CapConstraint::circle_tangent(&frames[a_out.constraint], a_out.theta_start);
        let point = (a_in.end + a_out.start).normalize();
        let ext = point.dot(&t_in.cross(&t_out)).atan2(t_in.dot(&t_out));
        if !(ext > 0.0 && ext < PI) {
            return Err(Error::Degenerate(format!("exterior angle {ext} outside (0, pi)")));
        }
        vertices.push(Vertex { point, exterior_angle: ext });
    }
    Ok(BoundaryStructure { arcs, vertices })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemisphereWitness {
    pub direction: Vec3,
    /// `min_{p ∈ Ω} ⟨p, direction⟩`.
    pub margin: f64,
}

/// Exact minimum of `⟨p, w⟩` over the body (attained on the boundary unless
/// `-w` lies inside).
fn min_dot(body: &CapBody, boundary: &BoundaryStructure, w: &Vec3) -> f64 {
    if body.contains(&(-w)) {
        return -1.0;
    }
    let mut best = f64::INFINITY;
    for arc in &boundary.arcs {
        let cap = &body.constraints[arc.constraint];
        let (u, v) = cap.frame();
        let (s, c) = cap.rho.sin_cos();
        let base = c * cap.pole.dot(w);
        let (a, b) = (s * u.dot(w), s * v.dot(w));
        let at = |th: f64| base + a * th.cos() + b * th.sin();
        best = best.min(at(arc.theta_start)).min(at(arc.theta_end));
        let crit = b.atan2(a) + PI;
        if arc.contains_angle(crit) {
            best = best.min(base - a.hypot(b));
        }
    }
    best
}

pub fn hemisphere_witness(body: &CapBody) -> Result<HemisphereWitness> {
    let boundary = body.boundary_structure()?;
    let sum: Vec3 = body.constraints.iter().map(|c| c.pole).sum();
    let mut candidates = Vec::new();
    if sum.norm() > 1e-12 {
        candidates.push(sum.normalize());
    }
    candidates.push(body.incenter);
    for w in &candidates {
        let margin = min_dot(body, &boundary, w);
        if margin > MIN_WITNESS_MARGIN {
            return Ok(HemisphereWitness { direction: *w, margin });
        }
    }
    // Fibonacci-sphere search.
    let m = 4000;
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut best = HemisphereWitness { direction: Vec3::z(), margin: f64::NEG_INFINITY };
    for i in 0..m {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
        let r = (1.0 - z * z).sqrt();
        let th = golden * i as f64;
        let w = Vec3::new(r * th.cos(), r * th.sin(), z);
        let margin = min_dot(body, &boundary, &w);
        if margin > best.margin {
            best = HemisphereWitness { direction: w, margin };
        }
    }
    if best.margin > MIN_WITNESS_MARGIN {
        Ok(best)
    } else {
        Err(Error::NoHemisphereWitness(format!(
            "best margin {:.3e}; the body is not inside an open hemisphere",
            best.margin
        )))
    }
}

/// Deterministic generator: `k` caps with poles within angular distance
/// `spread` of the north pole and radii in `[0.6, π/2]`. Candidates are
/// redrawn until the interior is nonempty, the boundary is regular, at least
/// two caps are active (so the body is not a ball), and a hemisphere witness
/// exists.
pub fn random_body(seed: u64, k: usize, spread: f64) -> Result<CapBody> {
    if !(3..=12).contains(&k) {
        return Err(invalid(format!("cap count {k} outside 3..=12")));
    }
    if !(spread > 0.0 && spread < FRAC_PI_2) {
        return Err(invalid(format!("spread {spread} outside (0, pi/2)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let north = CapConstraint { pole: Vec3::z(), rho: spread };
    let frame = north.frame();
    let zmin = spread.cos();
    for _ in 0..1000 {
        let caps: Vec<CapConstraint> = (0..k)
            .map(|_| {
                let z = zmin + (1.0 - zmin) * rng.random::<f64>();
                let phi = TAU * rng.random::<f64>();
                let s = (1.0 - z * z).max(0.0).sqrt();
                let pole = z * Vec3::z() + s * (phi.cos() * frame.0 + phi.sin() * frame.1);
                let rho = rng.random_range(0.6..=FRAC_PI_2);
                CapConstraint { pole: pole.normalize(), rho }
            })
            .collect();
        let Ok(body) = CapBody::new(caps) else { continue };
        let Ok(boundary) = body.boundary_structure() else { continue };
        if boundary.vertices.len() < 2 || body.hemisphere_witness().is_err() {
            continue;
        }
        return Ok(body);
    }
    Err(Error::Solver(format!("random_body(seed = {seed}) found no valid body")))
}

/// Cap count cycles through 3..=8 with the seed.
pub fn corpus_body(seed: u64) -> Result<CapBody> {
    random_body(seed, 3 + ((seed.max(1) - 1) % 6) as usize, 0.4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn octant() -> CapBody {
        CapBody::octant()
    }

    fn unit(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z).normalize()
    }

    #[test]
    fn contains_examples() {
        let o = octant();
        assert!(o.contains(&unit(1.0, 1.0, 1.0)));
        assert!(!o.contains(&Vec3::new(-1.0, 0.0, 0.0)));
        assert!(o.contains(&Vec3::x()));
    }

    #[test]
    fn distance_to_boundary_examples() {
        let o = octant();
        let d = o.distance_to_boundary(&unit(1.0, 1.0, 1.0)).unwrap();
        assert!((d - (1.0 / 3f64.sqrt()).asin()).abs() < 1e-14);
        let b = CapBody::ball(Vec3::z(), 0.7).unwrap();
        assert!((b.distance_to_boundary(&Vec3::z()).unwrap() - 0.7).abs() < 1e-15);
        assert!(o.distance_to_boundary(&unit(1.0, 1.0, 0.0)).unwrap().abs() < 1e-15);
        assert!(o.distance_to_boundary(&Vec3::new(-1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn distance_matches_dense_boundary_sampling() {
        // Oracle: minimum distance to 10^4 sampled boundary points.
        for body in [octant(), corpus_body(7).unwrap()] {
            let bs = body.boundary_structure().unwrap();
            let per_arc = 10_000 / bs.arcs.len();
            let mut samples = Vec::new();
            for (k, arc) in bs.arcs.iter().enumerate() {
                for s in 0..=per_arc {
                    let th = arc.theta_start + arc.angle() * s as f64 / per_arc as f64;
                    samples.push((k, th, bs.arc_point(&body, k, th)));
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for p in body.sample_points(&mut rng, 100) {
                let (k, th) = samples
                    .iter()
                    .min_by(|a, b| angle_between(&p, &a.2).total_cmp(&angle_between(&p, &b.2)))
                    .map(|s| (s.0, s.1))
                    .unwrap();
                // Golden-section polish around the nearest sample.
                let arc = &bs.arcs[k];
                let step = arc.angle() / per_arc as f64;
                let f = |t: f64| angle_between(&p, &bs.arc_point(&body, k, t));
                let (mut a, mut b) = ((th - step).max(arc.theta_start), (th + step).min(arc.theta_end));
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..100 {
                    let (c, d) = (b - g * (b - a), a + g * (b - a));
                    if f(c) < f(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                let oracle = f(0.5 * (a + b)).min(f(arc.theta_start)).min(f(arc.theta_end));
                let d = body.distance_to_boundary(&p).unwrap();
                assert!((d - oracle).abs() < 1e-6, "{d} vs {oracle}");
            }
        }
    }

    #[test]
    fn inner_parallel_examples() {
        let b = CapBody::ball(Vec3::z(), 1.0).unwrap();
        let bt = b.inner_parallel(0.3).unwrap();
        assert!((bt.constraints()[0].rho - 0.7).abs() < 1e-15);
        let o = octant().inner_parallel(0.1).unwrap();
        assert!(o.constraints().iter().all(|c| (c.rho - (FRAC_PI_2 - 0.1)).abs() < 1e-15));
        let r = octant().inradius();
        assert!(matches!(octant().inner_parallel(r + 0.01), Err(Error::EmptyInterior)));
        assert!(octant().inner_parallel(-0.1).is_err());
    }

    #[test]
    fn inner_parallel_is_distance_superlevel_set() {
        let body = corpus_body(11).unwrap();
        let t = 0.3 * body.inradius();
        let inner = body.inner_parallel(t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in body.sample_points(&mut rng, 500) {
            let d = body.distance_to_boundary(&p).unwrap();
            if (d - t).abs() > 1e-9 {
                assert_eq!(inner.contains(&p), d >= t);
            }
        }
    }

    #[test]
    fn boundary_of_hemisphere() {
        let h = CapBody::ball(Vec3::z(), FRAC_PI_2).unwrap();
        let bs = h.boundary_structure().unwrap();
        assert_eq!(bs.arcs.len(), 1);
        assert!(bs.vertices.is_empty());
        assert!((bs.arcs[0].angle() - TAU).abs() < 1e-15);
    }

    #[test]
    fn boundary_of_octant() {
        let bs = octant().boundary_structure().unwrap();
        assert_eq!(bs.arcs.len(), 3);
        assert_eq!(bs.vertices.len(), 3);
        for a in &bs.arcs {
            assert!((a.angle() - FRAC_PI_2).abs() < 1e-12);
            assert!(a.geodesic_curvature.abs() < 1e-15);
        }
        for v in &bs.vertices {
            assert!((v.exterior_angle - FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_of_lens() {
        // Poles at angular separation γ = 0.8, equal radii 0.7 > γ/2.
        let g: f64 = 0.8;
        let caps = vec![
            CapConstraint::new(Vec3::new(0.0, (-g / 2.0).sin(), (-g / 2.0).cos()), 0.7).unwrap(),
            CapConstraint::new(Vec3::new(0.0, (g / 2.0).sin(), (g / 2.0).cos()), 0.7).unwrap(),
        ];
        let lens = CapBody::new(caps).unwrap();
        let bs = lens.boundary_structure().unwrap();
        assert_eq!(bs.arcs.len(), 2);
        assert_eq!(bs.vertices.len(), 2);
        // Vertices from the closed-form circle intersection: on x with
        // cos d = cos 0.7 / cos(γ/2) from the midpoint.
        let d = (0.7f64.cos() / (g / 2.0).cos()).acos();
        for v in &bs.vertices {
            assert!((v.point.x.abs() - d.sin()).abs() < 1e-12);
            assert!(v.point.y.abs() < 1e-12);
        }
        assert!((lens.inradius() - (0.7 - g / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn perimeter_and_area_examples() {
        let h = CapBody::ball(Vec3::z(), FRAC_PI_2).unwrap();
        assert!((h.perimeter().unwrap() - TAU).abs() < 1e-14);
        assert!((h.area().unwrap() - TAU).abs() < 1e-14);
        let o = octant();
        assert!((o.perimeter().unwrap() - 1.5 * PI).abs() < 1e-12);
        assert!((o.area().unwrap() - FRAC_PI_2).abs() < 1e-12);
        let b = CapBody::ball(unit(1.0, -2.0, 0.5), 0.5).unwrap();
        assert!((b.perimeter().unwrap() - TAU * 0.5f64.sin()).abs() < 1e-14);
        assert!((b.area().unwrap() - TAU * (1.0 - 0.5f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn cap_area_by_monte_carlo() {
        let b = CapBody::ball(Vec3::z(), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let z = 2.0 * rng.random::<f64>() - 1.0;
            let phi = TAU * rng.random::<f64>();
            let s = (1.0 - z * z).sqrt();
            if b.contains(&Vec3::new(s * phi.cos(), s * phi.sin(), z)) {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let est = 4.0 * PI * p;
        let se = 4.0 * PI * (p * (1.0 - p) / n as f64).sqrt();
        assert!((est - b.area().unwrap()).abs() < 3.0 * se);
    }

    #[test]
    fn inradius_examples() {
        assert!((CapBody::ball(Vec3::y(), 0.9).unwrap().inradius() - 0.9).abs() < 1e-15);
        assert!((octant().inradius() - (1.0 / 3f64.sqrt()).asin()).abs() < 1e-12);
        assert!((octant().incenter() - unit(1.0, 1.0, 1.0)).norm() < 1e-10);
        assert!((CapBody::ball(Vec3::z(), FRAC_PI_2).unwrap().inradius() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn inradius_dominates_sampled_depth() {
        for seed in 1..=10 {
            let body = corpus_body(seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let best = body
                .sample_points(&mut rng, 20_000)
                .iter()
                .map(|p| body.distance_to_boundary(p).unwrap())
                .fold(0.0, f64::max);
            assert!(best <= body.inradius() + 1e-12);
            assert!(body.inradius() - best < 2e-2, "seed {seed}");
        }
    }

    #[test]
    fn empty_bodies_rejected() {
        let caps = vec![
            CapConstraint::new(Vec3::z(), 0.3).unwrap(),
            CapConstraint::new(-Vec3::z(), 0.3).unwrap(),
        ];
        assert!(matches!(CapBody::new(caps), Err(Error::EmptyInterior)));
        assert!(CapBody::new(vec![]).is_err());
        assert!(CapConstraint::new(Vec3::zeros(), 0.3).is_err());
        assert!(CapConstraint::new(Vec3::z(), 1.7).is_err());
    }

    #[test]
    fn tangency_rejected() {
        // Cap of radius 0.5 inside a cap of radius 0.8 whose boundary it touches.
        let caps = vec![
            CapConstraint::new(Vec3::z(), 0.8).unwrap(),
            CapConstraint::new(Vec3::new(0.0, 0.3f64.sin(), 0.3f64.cos()), 0.5).unwrap(),
        ];
        let body = CapBody::new(caps).unwrap();
        assert!(matches!(body.boundary_structure(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn inner_parallels_through_constraint_dropout() {
        let caps = [
            ([-0.1724865143474871, 0.625753083332664, 0.7607111679658175], 0.6599493543465789),
            ([-0.3427019908915124, 0.3671822784266524, 0.8647152825343184], 1.4051864808964174),
            ([0.666399014621745, -0.19369133399698224, 0.7199972364152775], 0.7602797106061622),
            ([-0.19058447272906426, 0.5510120291550222, 0.8124427995133254], 0.8618825146707392),
            ([-0.6593851440889233, 0.28009357900819465, 0.6976810293774729], 0.8178701905979555),
        ];
        let caps = caps.iter().map(|&([x, y, z], r)| CapConstraint::new(Vec3::new(x, y, z), r).unwrap()).collect();
        let body = CapBody::new(caps).unwrap();
        // The grid of a 64-step perimeter profile, midpoints included.
        let h = body.inradius() * (1.0 - 1e-6) / 128.0;
        let mut last = f64::INFINITY;
        for i in 0..=128 {
            let p = body.inner_parallel(i as f64 * h).unwrap().perimeter().unwrap();
            assert!(p <= last + 1e-12, "step {i}");
            last = p;
        }
    }

    #[test]
    fn hemisphere_witness_examples() {
        let w = octant().hemisphere_witness().unwrap();
        assert!((w.direction - unit(1.0, 1.0, 1.0)).norm() < 1e-12);
        assert!((w.margin - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        let c = CapBody::ball(Vec3::x(), 1.2).unwrap().hemisphere_witness().unwrap();
        assert!((c.direction - Vec3::x()).norm() < 1e-15);
        assert!((c.margin - 1.2f64.cos()).abs() < 1e-12);
        // A lune of two hemispheres contains ±e3.
        let lune = CapBody::new(vec![
            CapConstraint::new(Vec3::x(), FRAC_PI_2).unwrap(),
            CapConstraint::new(Vec3::y(), FRAC_PI_2).unwrap(),
        ])
        .unwrap();
        assert!(lune.contains(&Vec3::z()) && lune.contains(&-Vec3::z()));
        assert!(matches!(lune.hemisphere_witness(), Err(Error::NoHemisphereWitness(_))));
    }

    #[test]
    fn random_body_contract() {
        let b = random_body(1, 3, 0.4).unwrap();
        assert!(b.contains(&b.incenter()));
        assert!(b.hemisphere_witness().is_ok());
        assert!(!b.is_ball().unwrap());
        assert_eq!(b.midpoint_violations(17, 1000), 0);
        let again = random_body(1, 3, 0.4).unwrap();
        assert_eq!(b.constraints(), again.constraints());
        assert!(random_body(1, 2, 0.4).is_err());
        assert!(random_body(1, 13, 0.4).is_err());
    }

    #[test]
    fn corpus_bodies_are_convex_and_valid() {
        for seed in 1..=50 {
            let b = corpus_body(seed).unwrap();
            assert!(b.contains(&b.incenter()));
            assert_eq!(b.midpoint_violations(seed, 1000), 0, "seed {seed}");
        }
    }

    #[test]
    fn isoperimetric_gap() {
        use crate::spaceform::radius_from_perimeter;
        for body in std::iter::once(octant()).chain((1..=20).map(|s| corpus_body(s).unwrap())) {
            let area = body.area().unwrap();
            // Ball of the same area: 2π(1 - cos r) = area.
            let r = (1.0 - area / TAU).acos();
            let ball_perimeter = TAU * r.sin();
            let p = body.perimeter().unwrap();
            assert!(p > ball_perimeter, "{p} vs {ball_perimeter}");
            let _ = radius_from_perimeter(2, p).unwrap();
        }
    }

    #[test]
    fn perimeter_monotone_under_inner_parallels() {
        for seed in 1..=10 {
            let body = corpus_body(seed).unwrap();
            let mut prev = body.perimeter().unwrap();
            for k in 1..20 {
                let t = body.inradius() * k as f64 / 20.0;
                let p = body.inner_parallel(t).unwrap().perimeter().unwrap();
                assert!(p < prev);
                prev = p;
            }
        }
    }

    #[test]
    fn exterior_distance_to_octant() {
        let o = octant();
        let bs = o.boundary_structure().unwrap();
        // Below the equator along the x-z meridian: distance to the x-y arc.
        let p = Vec3::new(0.3f64.cos(), 0.0, -(0.3f64.sin()));
        assert!((o.distance_to_body(&bs, &p) - 0.3).abs() < 1e-12);
        // Outside the corner e1 in the direction away from the octant.
        let q = unit(1.0, -0.1, -0.1);
        assert!((o.distance_to_body(&bs, &q) - angle_between(&q, &Vec3::x())).abs() < 1e-12);
        assert_eq!(o.distance_to_body(&bs, &unit(1.0, 2.0, 3.0)), 0.0);
    }
}
