//! Piecewise-linear Rayleigh–Ritz estimate of the first Robin eigenvalue of
//! a cap body, on a flat-faceted triangulation with vertices on the sphere.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::Serialize;
use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::body::{angle_between, BoundaryStructure, CapBody, Vec3};
use crate::error::{invalid, Error, Result};
use crate::radial::{first_eigenvalue, RobinBallProblem};

pub const MAX_LEVEL: usize = 6;
pub const BASE_SPACING: f64 = 0.2;
pub const MIN_BOUNDARY_POINTS: usize = 16;
pub const EIG_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Longest edge, as a geodesic length.
    pub h: f64,
}

/// Boundary edge lying on arc `arc` between parameters `t0` and `t1`.
#[derive(Debug, Clone, Copy)]
struct ArcEdge {
    a: usize,
    b: usize,
    arc: usize,
    t0: f64,
    t1: f64,
}

struct Builder<'a> {
    body: &'a CapBody,
    boundary: &'a BoundaryStructure,
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<ArcEdge>,
}

impl Builder<'_> {
    fn arc_length(&self, e: &ArcEdge) -> f64 {
        let rho = self.body.constraints()[self.boundary.arcs[e.arc].constraint].rho;
        rho.sin() * (e.t1 - e.t0).abs()
    }

    fn refine(&mut self) {
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_edges = Vec::with_capacity(2 * self.edges.len());
        for e in self.edges.clone() {
            let tm = 0.5 * (e.t0 + e.t1);
            let m = self.vertices.len();
            self.vertices.push(self.boundary.arc_point(self.body, e.arc, tm));
            mids.insert((e.a.min(e.b), e.a.max(e.b)), m);
            new_edges.push(ArcEdge { a: e.a, b: m, arc: e.arc, t0: e.t0, t1: tm });
            new_edges.push(ArcEdge { a: m, b: e.b, arc: e.arc, t0: tm, t1: e.t1 });
        }
        self.edges = new_edges;

        let mut midpoint = |vs: &mut Vec<Vec3>, i: usize, j: usize| {
            *mids.entry((i.min(j), i.max(j))).or_insert_with(|| {
                vs.push((vs[i] + vs[j]).normalize());
                vs.len() - 1
            })
        };
        let mut tris = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(&mut self.vertices, a, b);
            let bc = midpoint(&mut self.vertices, b, c);
            let ca = midpoint(&mut self.vertices, c, a);
            tris.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        self.triangles = tris;
    }
}

/// Fan triangulation from the incenter to a corner-preserving boundary
/// polyline with spacing at most 0.2, then `level` rounds of midpoint
/// subdivision. Boundary midpoints are placed on their arc.
pub fn mesh_body(body: &CapBody, level: usize) -> Result<GeodesicMesh> {
    if level > MAX_LEVEL {
        return Err(invalid(format!("refinement level {level} exceeds {MAX_LEVEL}")));
    }
    let boundary = body.boundary_structure()?;
    let perimeter = boundary.perimeter();
    let spacing = BASE_SPACING.min(perimeter / MIN_BOUNDARY_POINTS as f64);
    let mut b = Builder { body, boundary: &boundary, vertices: vec![body.incenter()], triangles: Vec::new(), edges: Vec::new() };

    // Arc k contributes its start point (a corner, unless the boundary is a
    // full circle) and interior samples; its end is the next arc's start.
    let mut ring = Vec::new();
    for (k, arc) in boundary.arcs.iter().enumerate() {
        let pieces = ((arc.length / spacing).ceil() as usize).max(1);
        for j in 0..pieces {
            let t = arc.theta_start + arc.angle() * j as f64 / pieces as f64;
            ring.push((k, t));
        }
    }
    let n = ring.len();
    for &(k, t) in &ring {
        b.vertices.push(boundary.arc_point(body, k, t));
    }
    for j in 0..n {
        let (k, t0) = ring[j];
        let next = (j + 1) % n;
        let t1 = if ring[next].0 == k && next != 0 { ring[next].1 } else { boundary.arcs[k].theta_end };
        b.edges.push(ArcEdge { a: j + 1, b: next + 1, arc: k, t0, t1 });
        b.triangles.push([0, j + 1, next + 1]);
    }
    for _ in 0..level {
        b.refine();
    }

    let boundary_edges =
        b.edges.iter().map(|e| BoundaryEdge { a: e.a, b: e.b, length: b.arc_length(e) }).collect();
    let mut h: f64 = 0.0;
    for t in &b.triangles {
        for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            h = h.max(angle_between(&b.vertices[i], &b.vertices[j]));
        }
    }
    let mesh = GeodesicMesh {
        vertices: b.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
        triangles: b.triangles,
        boundary_edges,
        h,
    };
    mesh.validate()?;
    Ok(mesh)
}

impl GeodesicMesh {
    fn vertex(&self, i: usize) -> Vec3 {
        Vec3::from(self.vertices[i])
    }

    /// Index ranges, unit vertices, and positively oriented facets.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for v in &self.vertices {
            if (Vec3::from(*v).norm() - 1.0).abs() > 1e-9 {
                return Err(invalid("mesh vertex off the unit sphere"));
            }
        }
        for t in &self.triangles {
            if t.iter().any(|&i| i >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(invalid(format!("bad triangle {t:?}")));
            }
            let (a, b, c) = (self.vertex(t[0]), self.vertex(t[1]), self.vertex(t[2]));
            if (b - a).cross(&(c - a)).dot(&(a + b + c)) <= 0.0 {
                return Err(Error::Degenerate(format!("triangle {t:?} is not positively oriented")));
            }
        }
        for e in &self.boundary_edges {
            if e.a >= nv || e.b >= nv || e.a == e.b || !(e.length > 0.0) {
                return Err(invalid(format!("bad boundary edge {e:?}")));
            }
        }
        Ok(())
    }

    fn facet_area(&self, t: &[usize; 3]) -> f64 {
        let (a, b, c) = (self.vertex(t[0]), self.vertex(t[1]), self.vertex(t[2]));
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| self.facet_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    /// `v x y z`, `f i j k`, `b i j` lines with 1-based indices.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "b {} {}", e.a + 1, e.b + 1);
        }
        s
    }

    /// Inverse of [`GeodesicMesh::to_text`]. Boundary edge lengths become
    /// great-circle lengths, since the arcs are not recorded.
    pub fn parse(text: &str) -> Result<GeodesicMesh> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut edges = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line, msg };
            let mut parts = content.split_whitespace();
            let tag = parts.next().unwrap_or("");
            let rest: Vec<&str> = parts.collect();
            match tag {
                "v" => {
                    let xs = parse_fields::<f64>(&rest, 3).map_err(err)?;
                    let v = Vec3::new(xs[0], xs[1], xs[2]);
                    if !v.iter().all(|x| x.is_finite()) || (v.norm() - 1.0).abs() > 1e-6 {
                        return Err(err("vertex must be a finite unit vector".into()));
                    }
                    let v = if (v.norm() - 1.0).abs() > 1e-12 { v.normalize() } else { v };
                    vertices.push([v.x, v.y, v.z]);
                }
                "f" => {
                    let ix = parse_fields::<usize>(&rest, 3).map_err(err)?;
                    triangles.push([one_based(ix[0], line)?, one_based(ix[1], line)?, one_based(ix[2], line)?]);
                }
                "b" => {
                    let ix = parse_fields::<usize>(&rest, 2).map_err(err)?;
                    edges.push((one_based(ix[0], line)?, one_based(ix[1], line)?));
                }
                other => return Err(err(format!("unknown record '{other}'"))),
            }
        }
        let nv = vertices.len();
        if triangles.iter().flatten().chain(edges.iter().flat_map(|(a, b)| [a, b])).any(|&i| i >= nv) {
            return Err(invalid("mesh index out of range"));
        }
        let boundary_edges = edges
            .into_iter()
            .map(|(a, b)| BoundaryEdge {
                a,
                b,
                length: angle_between(&Vec3::from(vertices[a]), &Vec3::from(vertices[b])),
            })
            .collect();
        let mut mesh = GeodesicMesh { vertices, triangles, boundary_edges, h: 0.0 };
        for t in &mesh.triangles {
            for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                mesh.h = mesh.h.max(angle_between(&mesh.vertex(i), &mesh.vertex(j)));
            }
        }
        mesh.validate()?;
        Ok(mesh)
    }
}

fn parse_fields<T: std::str::FromStr>(parts: &[&str], n: usize) -> std::result::Result<Vec<T>, String> {
    if parts.len() != n {
        return Err(format!("expected {n} fields, found {}", parts.len()));
    }
    parts.iter().map(|p| p.parse::<T>().map_err(|_| format!("cannot parse '{p}'"))).collect()
}

fn one_based(i: usize, line: usize) -> Result<usize> {
    i.checked_sub(1).ok_or(Error::Parse { line, msg: "indices are 1-based".into() })
}

/// Stiffness, mass and boundary-mass matrices.
pub struct Assembled {
    pub stiffness: CsMat<f64>,
    pub mass: CsMat<f64>,
    pub boundary_mass: CsMat<f64>,
}

pub fn assemble(mesh: &GeodesicMesh) -> Assembled {
    let n = mesh.vertices.len();
    let mut k = TriMat::new((n, n));
    let mut m = TriMat::new((n, n));
    let mut b = TriMat::new((n, n));
    for t in &mesh.triangles {
        let p = [mesh.vertex(t[0]), mesh.vertex(t[1]), mesh.vertex(t[2])];
        let area = mesh.facet_area(t);
        for i in 0..3 {
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            // Cotangent of the angle at vertex i, opposite edge (j, l).
            let (u, v) = (p[j] - p[i], p[l] - p[i]);
            let w = 0.5 * u.dot(&v) / u.cross(&v).norm();
            k.add_triplet(t[j], t[l], -w);
            k.add_triplet(t[l], t[j], -w);
            k.add_triplet(t[j], t[j], w);
            k.add_triplet(t[l], t[l], w);
            m.add_triplet(t[i], t[i], area / 6.0);
            m.add_triplet(t[j], t[l], area / 12.0);
            m.add_triplet(t[l], t[j], area / 12.0);
        }
    }
    for e in &mesh.boundary_edges {
        b.add_triplet(e.a, e.a, e.length / 3.0);
        b.add_triplet(e.b, e.b, e.length / 3.0);
        b.add_triplet(e.a, e.b, e.length / 6.0);
        b.add_triplet(e.b, e.a, e.length / 6.0);
    }
    Assembled { stiffness: k.to_csc(), mass: m.to_csc(), boundary_mass: b.to_csc() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteEigResult {
    pub lambda_h: f64,
    pub refinement_level: Option<usize>,
    /// `‖A x - λ M x‖ / ((‖A‖ + |λ| ‖M‖) ‖x‖)` in the max-row-sum norm.
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
    pub vertices: usize,
}

fn mat_vec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for (v, (i, j)) in a.iter() {
        y[i] += v * x[j];
    }
    y
}

fn row_sum_norm(a: &CsMat<f64>) -> f64 {
    let mut s = vec![0.0; a.rows()];
    for (v, (i, _)) in a.iter() {
        s[i] += v.abs();
    }
    s.into_iter().fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn positive_definite_factor(a: &CsMat<f64>) -> Option<LdlNumeric<f64, usize>> {
    let f = Ldl::new().numeric(a.view()).ok()?;
    f.d().iter().all(|&d| d > 0.0).then_some(f)
}

/// Smallest eigenvalue of `(K + βB) x = λ M x` by shifted inverse
/// iteration from the constant vector. The shift starts at
/// `min(0, β P/|Ω|) - 1` and is lowered until `A - σM` is positive
/// definite, which places it below the smallest eigenvalue.
pub fn assemble_and_solve(mesh: &GeodesicMesh, beta: f64) -> Result<DiscreteEigResult> {
    if !beta.is_finite() {
        return Err(invalid("beta must be finite"));
    }
    let asm = assemble(mesh);
    let a = &asm.stiffness + &asm.boundary_mass.map(|v| beta * v);
    let m = &asm.mass;
    let n = mesh.vertices.len();

    let mut sigma = (beta * mesh.boundary_length() / mesh.area()).min(0.0) - 1.0;
    let factor = loop {
        let shifted = &a - &m.map(|v| sigma * v);
        if let Some(f) = positive_definite_factor(&shifted) {
            break f;
        }
        sigma -= sigma.abs() + 1.0;
        if sigma < -1e12 {
            return Err(Error::Solver("no positive definite shift found".into()));
        }
    };

    let scale = row_sum_norm(&a);
    let m_norm = row_sum_norm(m);
    let mut x = vec![1.0; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mx = mat_vec(m, &x);
        let mut y = factor.solve(&mx);
        let nrm = dot(&y, &mat_vec(m, &y)).sqrt();
        y.iter_mut().for_each(|v| *v /= nrm);
        x = y;
        let ax = mat_vec(&a, &x);
        let mx = mat_vec(m, &x);
        lambda = dot(&x, &ax) / dot(&x, &mx);
        let r: Vec<f64> = ax.iter().zip(&mx).map(|(p, q)| p - lambda * q).collect();
        residual = norm_inf(&r) / ((scale + lambda.abs() * m_norm) * norm_inf(&x));
        if residual < EIG_TOL {
            return Ok(DiscreteEigResult { lambda_h: lambda, refinement_level: None, residual, iterations: it, shift: sigma, vertices: n });
        }
    }
    Err(Error::Solver(format!(
        "inverse iteration stalled at lambda = {lambda}, residual {residual:.3e}"
    )))
}

/// Meshes the body at `level` and solves.
pub fn solve_body(body: &CapBody, beta: f64, level: usize) -> Result<DiscreteEigResult> {
    let mesh = mesh_body(body, level)?;
    let mut r = assemble_and_solve(&mesh, beta)?;
    r.refinement_level = Some(level);
    Ok(r)
}

/// Discrete estimate with an error allowance calibrated on the ball of the
/// same perimeter at the same level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibratedEstimate {
    pub result: DiscreteEigResult,
    pub ball_lambda: f64,
    pub ball_lambda_h: f64,
    /// `|λ_h(D) - λ(D)| / |λ(D)|`.
    pub ball_relative_error: f64,
    /// Twice the relative ball error, scaled by `|λ_h|`.
    pub epsilon: f64,
}

pub fn calibrated_estimate(body: &CapBody, beta: f64, level: usize) -> Result<CalibratedEstimate> {
    let result = solve_body(body, beta, level)?;
    let perimeter = body.perimeter()?;
    let radius = crate::spaceform::radius_from_perimeter(2, perimeter)?;
    let ball_lambda = first_eigenvalue(&RobinBallProblem::new(2, radius, beta)?)?.lambda;
    let ball = CapBody::ball(body.incenter(), radius)?;
    let ball_lambda_h = solve_body(&ball, beta, level)?.lambda_h;
    let ball_relative_error = (ball_lambda_h - ball_lambda).abs() / ball_lambda.abs().max(1e-12);
    let epsilon = 2.0 * ball_relative_error * result.lambda_h.abs();
    Ok(CalibratedEstimate { result, ball_lambda, ball_lambda_h, ball_relative_error, epsilon })
}

/// Area of a spherical triangle, for mesh diagnostics.
pub fn spherical_excess(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    2.0 * a.dot(&b.cross(c)).abs().atan2(1.0 + a.dot(b) + b.dot(c) + c.dot(a))
}

/// Total spherical area of the mesh facets' geodesic triangles.
pub fn geodesic_area(mesh: &GeodesicMesh) -> f64 {
    mesh.triangles
        .iter()
        .map(|t| spherical_excess(&mesh.vertex(t[0]), &mesh.vertex(t[1]), &mesh.vertex(t[2])))
        .sum::<f64>()
        .min(2.0 * TAU)
}
