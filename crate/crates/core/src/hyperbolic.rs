//! Half-space model of hyperbolic space and an explicit witness that inner
//! parallel sets of a convex cylinder need not be convex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Slack for closed-set membership.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
const SCAN_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpacePoint {
    pub xhat: Vec<f64>,
    pub xn: f64,
}

impl HalfSpacePoint {
    pub fn new(xhat: Vec<f64>, xn: f64) -> Result<Self> {
        if !(xn > 0.0 && xn.is_finite()) || xhat.iter().any(|x| !x.is_finite()) {
            return Err(invalid(format!("half-space point needs finite coordinates and x_n > 0, got x_n = {xn}")));
        }
        Ok(HalfSpacePoint { xhat, xn })
    }

    /// Point of the upper half-plane.
    pub fn planar(x: f64, y: f64) -> Result<Self> {
        Self::new(vec![x], y)
    }

    pub fn dim(&self) -> usize {
        self.xhat.len() + 1
    }

    fn horizontal_norm(&self) -> f64 {
        norm(&self.xhat)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn same_dim(x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<()> {
    if x.xhat.len() == y.xhat.len() {
        Ok(())
    } else {
        Err(invalid("points live in different dimensions"))
    }
}

/// `2 asinh(‖x - y‖ / (2 sqrt(x_n y_n)))`.
pub fn hyp_distance(x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    same_dim(x, y)?;
    let dh: f64 = x.xhat.iter().zip(&y.xhat).map(|(a, b)| (a - b) * (a - b)).sum();
    let dn = x.xn - y.xn;
    let e = (dh + dn * dn).sqrt();
    Ok(2.0 * (e / (2.0 * (x.xn * y.xn).sqrt())).asinh())
}

/// Point at fraction `s` of hyperbolic arclength along the geodesic from
/// `p` to `q`: a vertical segment when the horizontal parts agree, else an
/// arc of a circle centred on `{x_n = 0}`. On such a circle the polar angle
/// `φ` relates to arclength by `ds = dφ / sin φ`, so `ln tan(φ/2)` is
/// interpolated linearly.
pub fn geodesic_point(p: &HalfSpacePoint, q: &HalfSpacePoint, s: f64) -> Result<HalfSpacePoint> {
    same_dim(p, q)?;
    if p == q {
        return Err(Error::Degenerate("geodesic between identical points".into()));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("geodesic parameter {s} outside [0, 1]")));
    }
    if s == 0.0 {
        return Ok(p.clone());
    }
    if s == 1.0 {
        return Ok(q.clone());
    }
    let diff: Vec<f64> = q.xhat.iter().zip(&p.xhat).map(|(a, b)| a - b).collect();
    let d = norm(&diff);
    if d == 0.0 {
        let h = p.xn.powf(1.0 - s) * q.xn.powf(s);
        return HalfSpacePoint::new(p.xhat.clone(), h);
    }
    // Coordinate ξ along the line from p̂ towards q̂.
    let xi0 = (d * d + q.xn * q.xn - p.xn * p.xn) / (2.0 * d);
    let r = xi0.hypot(p.xn);
    let phi_p = p.xn.atan2(-xi0);
    let phi_q = q.xn.atan2(d - xi0);
    let to_u = |phi: f64| (0.5 * phi).tan().ln();
    let u = (1.0 - s) * to_u(phi_p) + s * to_u(phi_q);
    let phi = 2.0 * u.exp().atan();
    let xi = xi0 + r * phi.cos();
    let xhat = p.xhat.iter().zip(&diff).map(|(a, e)| a + xi * e / d).collect();
    HalfSpacePoint::new(xhat, r * phi.sin())
}

/// The closed `t`-neighbourhood of the vertical geodesic over `x0hat`:
/// `‖x̂ - x̂₀‖ <= sinh(t) x_n`.
pub fn tube_contains(x0hat: &[f64], t: f64, x: &HalfSpacePoint) -> Result<bool> {
    if !(t >= 0.0) {
        return Err(invalid(format!("tube radius {t} must be >= 0")));
    }
    if x0hat.len() != x.xhat.len() {
        return Err(invalid("axis and point live in different dimensions"));
    }
    let dist: f64 = x.xhat.iter().zip(x0hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let bound = t.sinh() * x.xn;
    Ok(dist <= bound + MEMBERSHIP_TOL * bound.max(1.0))
}

/// Inner parallel set at distance `delta` of the cylinder `{‖x̂‖ <= 1}`:
/// `‖x̂‖ <= 1 - sinh(δ) x_n`.
pub fn cone_contains(delta: f64, x: &HalfSpacePoint) -> Result<bool> {
    if !(delta > 0.0) {
        return Err(invalid(format!("delta = {delta} must be positive")));
    }
    Ok(cone_violation(delta, x) <= MEMBERSHIP_TOL)
}

fn cone_violation(delta: f64, x: &HalfSpacePoint) -> f64 {
    x.horizontal_norm() - (1.0 - delta.sinh() * x.xn)
}

pub fn cylinder_contains(x: &HalfSpacePoint) -> bool {
    x.horizontal_norm() <= 1.0 + MEMBERSHIP_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonconvexityWitness {
    pub delta: f64,
    pub dim: usize,
    pub p: HalfSpacePoint,
    pub q: HalfSpacePoint,
    /// Where `q` sits; recorded for reproducibility.
    pub q_choice: String,
    pub s_star: f64,
    pub violating_point: HalfSpacePoint,
    /// `‖ĝ(s*)‖ - (1 - sinh(δ) g_n(s*))`, positive when `g(s*)` leaves the set.
    pub margin: f64,
}

impl NonconvexityWitness {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }
}

/// Joins the apex `p = (0, 1/sinh δ)` of the inner parallel cone to the
/// boundary point `q` at half the apex height with `‖q̂‖ = 1/2`, and locates
/// the point of the geodesic furthest outside the cone.
pub fn nonconvexity_witness(delta: f64, dim: usize) -> Result<NonconvexityWitness> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta = {delta} must be positive")));
    }
    if !(2..=3).contains(&dim) {
        return Err(invalid(format!("dimension {dim} not supported; use 2 or 3")));
    }
    let sh = delta.sinh();
    let p = HalfSpacePoint::new(vec![0.0; dim - 1], 1.0 / sh)?;
    let mut qhat = vec![0.0; dim - 1];
    qhat[0] = 0.5;
    let q = HalfSpacePoint::new(qhat, 0.5 / sh)?;
    if !cone_contains(delta, &p)? || !cone_contains(delta, &q)? {
        return Err(Error::Solver("witness endpoints are not in the cone".into()));
    }
    let v = |s: f64| geodesic_point(&p, &q, s).map(|g| cone_violation(delta, &g));
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 1..SCAN_POINTS {
        let s = i as f64 / SCAN_POINTS as f64;
        let val = v(s)?;
        if val > best.1 {
            best = (s, val);
        }
    }
    // Golden-section polish within the neighbouring scan cells.
    let h = 1.0 / SCAN_POINTS as f64;
    let (mut a, mut b) = ((best.0 - h).max(h * 0.5), (best.0 + h).min(1.0 - h * 0.5));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if v(c)? > v(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let s_mid = 0.5 * (a + b);
    let m_mid = v(s_mid)?;
    let (s_star, margin) = if m_mid > best.1 { (s_mid, m_mid) } else { best };
    if !(margin > 0.0) {
        return Err(Error::Solver(format!("no violation found for delta = {delta}; best margin {margin:e}")));
    }
    Ok(NonconvexityWitness {
        delta,
        dim,
        violating_point: geodesic_point(&p, &q, s_star)?,
        p,
        q,
        q_choice: "|q_hat| = 1/2, q_n = 1/(2 sinh delta)".into(),
        s_star,
        margin,
    })
}

/// Samples geodesics between random pairs of the cylinder `{‖x̂‖ <= 1}` and
/// counts sampled points that leave it.
pub fn cylinder_convexity_violations(pairs: usize, seed: u64, dim: usize) -> Result<usize> {
    if !(2..=3).contains(&dim) {
        return Err(invalid(format!("dimension {dim} not supported; use 2 or 3")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| loop {
        let xhat: Vec<f64> = (0..dim - 1).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if norm(&xhat) <= 1.0 {
            let xn = 10f64.powf(rng.random_range(-1.0..=1.0));
            return HalfSpacePoint::new(xhat, xn).expect("valid sample");
        }
    };
    let mut violations = 0;
    for _ in 0..pairs {
        let (a, b) = (point(&mut rng), point(&mut rng));
        for k in 1..20 {
            if !cylinder_contains(&geodesic_point(&a, &b, k as f64 / 20.0)?) {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn pt(x: f64, y: f64) -> HalfSpacePoint {
        HalfSpacePoint::planar(x, y).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert!((hyp_distance(&pt(0.0, 1.0), &pt(0.0, E)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hyp_distance(&pt(0.3, 2.0), &pt(0.3, 2.0)).unwrap(), 0.0);
        assert!(HalfSpacePoint::planar(0.0, 0.0).is_err());
        assert!(HalfSpacePoint::planar(0.0, -1.0).is_err());
    }

    #[test]
    fn distance_symmetric_and_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut r = || pt(rng.random_range(-3.0..3.0), 10f64.powf(rng.random_range(-1.0..1.0)));
        for _ in 0..200 {
            let (a, b, c) = (r(), r(), r());
            let ab = hyp_distance(&a, &b).unwrap();
            assert_eq!(ab, hyp_distance(&b, &a).unwrap());
            assert!(ab <= hyp_distance(&a, &c).unwrap() + hyp_distance(&c, &b).unwrap() + 1e-12);
        }
    }

    #[test]
    fn geodesic_examples() {
        let (p, q) = (pt(0.0, 1.0), pt(0.0, E));
        assert_eq!(geodesic_point(&p, &q, 0.0).unwrap(), p);
        assert_eq!(geodesic_point(&p, &q, 1.0).unwrap(), q);
        let m = geodesic_point(&p, &q, 0.5).unwrap();
        assert!(m.xhat[0] == 0.0 && (m.xn - E.sqrt()).abs() < 1e-15);
        assert!(geodesic_point(&p, &p, 0.5).is_err());
        assert!(geodesic_point(&p, &q, 1.5).is_err());
    }

    #[test]
    fn geodesic_is_arclength_parameterized() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let p = pt(rng.random_range(-2.0..2.0), 10f64.powf(rng.random_range(-1.0..1.0)));
            let q = pt(rng.random_range(-2.0..2.0), 10f64.powf(rng.random_range(-1.0..1.0)));
            let d = hyp_distance(&p, &q).unwrap();
            for s in [0.25, 0.5, 0.9] {
                let g = geodesic_point(&p, &q, s).unwrap();
                assert!((hyp_distance(&p, &g).unwrap() - s * d).abs() < 1e-10 * d.max(1.0));
                assert!((hyp_distance(&g, &q).unwrap() - (1.0 - s) * d).abs() < 1e-10 * d.max(1.0));
            }
        }
    }

    #[test]
    fn geodesic_in_three_dimensions() {
        let p = HalfSpacePoint::new(vec![0.1, -0.4], 0.7).unwrap();
        let q = HalfSpacePoint::new(vec![-0.5, 0.3], 1.9).unwrap();
        let d = hyp_distance(&p, &q).unwrap();
        let m = geodesic_point(&p, &q, 0.5).unwrap();
        assert!((hyp_distance(&p, &m).unwrap() - 0.5 * d).abs() < 1e-12);
    }

    #[test]
    fn tube_examples() {
        let axis = [0.2];
        assert!(tube_contains(&axis, 0.0, &pt(0.2, 3.0)).unwrap());
        let t: f64 = 0.7;
        assert!(tube_contains(&axis, t, &pt(0.2 + t.sinh() * 2.0, 2.0)).unwrap());
        assert!(!tube_contains(&axis, t, &pt(0.2 + t.sinh() * 2.0 * 1.001, 2.0)).unwrap());
        assert!(tube_contains(&axis, -0.1, &pt(0.0, 1.0)).is_err());
    }

    #[test]
    fn tube_is_distance_neighbourhood() {
        // Oracle: distance to a dense log-spaced sample of the axis.
        let axis = [0.0];
        let hs: Vec<f64> = (0..=40_000).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 40_000.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let x = pt(rng.random_range(-2.0..2.0), 10f64.powf(rng.random_range(-1.0..1.0)));
            let t = rng.random_range(0.05..2.0);
            let d = hs.iter().map(|&h| hyp_distance(&x, &pt(0.0, h)).unwrap()).fold(f64::INFINITY, f64::min);
            if (d - t).abs() > 1e-3 {
                assert_eq!(tube_contains(&axis, t, &x).unwrap(), d <= t, "x {x:?} t {t} d {d}");
            }
        }
    }

    #[test]
    fn cone_examples() {
        let delta: f64 = 0.3;
        assert!(cone_contains(delta, &pt(0.0, 0.5 / delta.sinh())).unwrap());
        assert!(cone_contains(delta, &pt(0.0, 1.0 / delta.sinh())).unwrap());
        assert!(!cone_contains(delta, &pt(1.0, 1e-3)).unwrap());
        assert!(cone_contains(0.0, &pt(0.0, 1.0)).is_err());
    }

    #[test]
    fn witness_examples() {
        for delta in [0.05, 0.1, 0.5] {
            let w = nonconvexity_witness(delta, 2).unwrap();
            assert!(w.margin > 0.0);
            assert!(w.s_star > 0.0 && w.s_star < 1.0);
            assert!(cone_contains(delta, &w.p).unwrap() && cone_contains(delta, &w.q).unwrap());
            assert!(!cone_contains(delta, &w.violating_point).unwrap());
        }
        assert!(nonconvexity_witness(0.1, 3).unwrap().margin > 0.0);
        assert!(nonconvexity_witness(0.0, 2).is_err());
        assert!(nonconvexity_witness(0.1, 4).is_err());
    }

    #[test]
    fn witness_margin_positive_on_log_grid() {
        for k in 0..=30 {
            let delta = 10f64.powf(-3.0 + 3.0 * k as f64 / 30.0);
            assert!(nonconvexity_witness(delta, 2).unwrap().margin > 0.0, "delta {delta}");
        }
    }

    #[test]
    fn witness_json() {
        let v: serde_json::Value = serde_json::from_str(&nonconvexity_witness(0.1, 2).unwrap().to_json()).unwrap();
        for key in ["delta", "p", "q", "s_star", "violating_point", "margin"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn cylinder_is_convex() {
        assert_eq!(cylinder_convexity_violations(1000, 7, 2).unwrap(), 0);
        assert_eq!(cylinder_convexity_violations(200, 8, 3).unwrap(), 0);
    }
}
