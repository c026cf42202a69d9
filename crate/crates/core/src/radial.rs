//! First Robin eigenpair of a geodesic ball in `S^n` by shooting on the
//! radial equation
//!
//! ```text
//! ψ'' + (n-1) cot(r) ψ' + λ ψ = 0,   ψ(0) = 1, ψ'(0) = 0,
//! F(λ) = ψ'(R) + β ψ(R).
//! ```
//!
//! The regular singular point at `r = 0` is stepped over with the two-term
//! series `ψ = 1 - λ r²/(2n)` started at `r = ε`; cells where the `cot`
//! coefficient is stiff relative to the step are sub-stepped so the
//! classical RK4 stays inside its stability region.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature;
use crate::spaceform::{check_ball_radius, sigma};

pub const DEFAULT_STEPS: usize = 4096;
pub const SERIES_START: f64 = 1e-6;
const LAMBDA_BOUND: f64 = 1e6;
const BISECTION_TOL: f64 = 1e-10;
const OVERFLOW: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobinBallProblem {
    pub dim: usize,
    pub radius: f64,
    pub beta: f64,
}

impl RobinBallProblem {
    pub fn new(dim: usize, radius: f64, beta: f64) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("dimension {dim} < 2")));
        }
        check_ball_radius(radius)?;
        if !beta.is_finite() {
            return Err(invalid(format!("beta = {beta} is not finite")));
        }
        Ok(RobinBallProblem { dim, radius, beta })
    }
}

/// Sampled solution of the radial initial value problem.
#[derive(Debug, Clone)]
struct Trajectory {
    grid: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    /// Sign of the boundary residual when |ψ| blew past the overflow guard.
    saturated: Option<f64>,
}

fn rhs(n1: f64, lambda: f64, r: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -n1 * y[1] / r.tan() - lambda * y[0]]
}

fn rk4(n1: f64, lambda: f64, r: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = rhs(n1, lambda, r, y);
    let k2 = rhs(n1, lambda, r + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = rhs(n1, lambda, r + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = rhs(n1, lambda, r + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn integrate(problem: &RobinBallProblem, lambda: f64, steps: usize) -> Trajectory {
    let n = problem.dim as f64;
    let n1 = n - 1.0;
    let big_r = problem.radius;
    let h = big_r / steps as f64;
    let eps = SERIES_START.min(0.5 * h);

    let mut grid = Vec::with_capacity(steps + 1);
    let mut psi = Vec::with_capacity(steps + 1);
    let mut dpsi = Vec::with_capacity(steps + 1);
    grid.push(0.0);
    psi.push(1.0);
    dpsi.push(0.0);

    let mut r = eps;
    let mut y = [1.0 - lambda * eps * eps / (2.0 * n), -lambda * eps / n];
    let mut saturated = None;

    for i in 1..=steps {
        let target = if i == steps { big_r } else { i as f64 * h };
        while r < target {
            // Keep h (n-1) cot(r) <= 1/2 near the origin.
            let dr = (0.5 * r / n1).min(target - r);
            let dr = if target - r - dr < 1e-3 * dr { target - r } else { dr };
            y = rk4(n1, lambda, r, y, dr);
            r += dr;
        }
        r = target;
        if saturated.is_none() && (y[0].abs() > OVERFLOW || !y[0].is_finite()) {
            let s = y[1] + problem.beta * y[0];
            saturated = Some(if s.is_nan() { 1.0 } else { s.signum() });
        }
        if saturated.is_some() {
            // Keep the arrays full length; values past saturation are meaningless.
            y = [y[0].clamp(-OVERFLOW, OVERFLOW), y[1].clamp(-OVERFLOW, OVERFLOW)];
        }
        grid.push(target);
        psi.push(y[0]);
        dpsi.push(y[1]);
    }
    Trajectory { grid, psi, dpsi, saturated }
}

fn residual(problem: &RobinBallProblem, traj: &Trajectory) -> f64 {
    if let Some(sign) = traj.saturated {
        return sign * f64::MAX;
    }
    let m = traj.psi.len() - 1;
    traj.dpsi[m] + problem.beta * traj.psi[m]
}

/// Boundary residual `F(λ) = ψ'(R) + β ψ(R)` with the default step count.
pub fn shoot(problem: &RobinBallProblem, lambda: f64) -> f64 {
    shoot_with(problem, lambda, DEFAULT_STEPS)
}

pub fn shoot_with(problem: &RobinBallProblem, lambda: f64, steps: usize) -> f64 {
    residual(problem, &integrate(problem, lambda, steps))
}

/// First Robin eigenvalue of a ball with its radial eigenfunction sampled on
/// a uniform grid. `psi` is normalized by `ψ(0) = 1`; `phi` is the same
/// profile as a function of the distance to the boundary.
#[derive(Debug, Clone, Serialize)]
pub struct RadialEigenpair {
    pub dim: usize,
    pub radius: f64,
    pub lambda: f64,
    pub grid: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub phi: Vec<f64>,
}

impl RadialEigenpair {
    fn ddpsi(&self, i: usize) -> f64 {
        let n1 = self.dim as f64 - 1.0;
        if i == 0 {
            -self.lambda / self.dim as f64
        } else {
            -n1 * self.dpsi[i] / self.grid[i].tan() - self.lambda * self.psi[i]
        }
    }

    fn locate(&self, r: f64) -> (usize, f64, f64) {
        let m = self.grid.len() - 1;
        let h = self.radius / m as f64;
        let r = r.clamp(0.0, self.radius);
        let i = ((r / h).floor() as usize).min(m - 1);
        let h_cell = self.grid[i + 1] - self.grid[i];
        (i, (r - self.grid[i]) / h_cell, h_cell)
    }

    /// Cubic Hermite interpolant of ψ.
    pub fn psi_at(&self, r: f64) -> f64 {
        let (i, s, h) = self.locate(r);
        hermite(s, h, self.psi[i], self.psi[i + 1], self.dpsi[i], self.dpsi[i + 1])
    }

    /// Cubic Hermite interpolant of ψ', using ψ'' from the equation.
    pub fn dpsi_at(&self, r: f64) -> f64 {
        let (i, s, h) = self.locate(r);
        hermite(s, h, self.dpsi[i], self.dpsi[i + 1], self.ddpsi(i), self.ddpsi(i + 1))
    }

    /// `φ(ρ) = ψ(R - ρ)`.
    pub fn phi_at(&self, rho: f64) -> f64 {
        self.psi_at(self.radius - rho)
    }

    /// `φ'(ρ) = -ψ'(R - ρ)`.
    pub fn dphi_at(&self, rho: f64) -> f64 {
        -self.dpsi_at(self.radius - rho)
    }

    pub fn boundary_value(&self) -> f64 {
        *self.psi.last().unwrap()
    }
}

fn hermite(s: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

pub fn first_eigenvalue(problem: &RobinBallProblem) -> Result<RadialEigenpair> {
    first_eigenvalue_with(problem, DEFAULT_STEPS)
}

/// Smallest root of `F`: a lower point with `F > 0` and a positive
/// trajectory is found by stepping down from 0, then the first strict sign
/// change scanning upward in unit steps is bisected.
pub fn first_eigenvalue_with(problem: &RobinBallProblem, steps: usize) -> Result<RadialEigenpair> {
    let eval = |lambda: f64| {
        let t = integrate(problem, lambda, steps);
        (residual(problem, &t), t)
    };
    let positive = |t: &Trajectory| t.saturated.is_none() && t.psi.iter().all(|&p| p > 0.0);

    let mut lo = 0.0;
    let (mut f_lo, mut t_lo) = eval(lo);
    while !(f_lo > 0.0 && positive(&t_lo)) {
        lo -= 1.0;
        if lo < -LAMBDA_BOUND {
            return Err(Error::Solver("no lower bracket for the first eigenvalue".into()));
        }
        (f_lo, t_lo) = eval(lo);
    }

    let mut hi = lo;
    let root_traj;
    let (mut a, mut b) = loop {
        let next = hi + 1.0;
        if next > LAMBDA_BOUND {
            return Err(Error::Solver("no sign change of the boundary residual".into()));
        }
        let (f_next, t_next) = eval(next);
        if f_next == 0.0 {
            root_traj = Some((next, t_next));
            break (next, next);
        }
        if f_next < 0.0 {
            root_traj = None;
            break (hi, next);
        }
        hi = next;
    };

    let (lambda, traj) = match root_traj {
        Some(found) => found,
        None => {
            while b - a > BISECTION_TOL {
                let mid = 0.5 * (a + b);
                let f_mid = eval(mid).0;
                if f_mid == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if f_mid > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let lambda = 0.5 * (a + b);
            (lambda, eval(lambda).1)
        }
    };

    if !positive(&traj) {
        return Err(Error::Solver(format!("eigenfunction at lambda = {lambda} changes sign")));
    }
    let phi = traj.psi.iter().rev().copied().collect();
    Ok(RadialEigenpair {
        dim: problem.dim,
        radius: problem.radius,
        lambda,
        grid: traj.grid,
        psi: traj.psi,
        dpsi: traj.dpsi,
        phi,
    })
}

/// Minimum of the eigenfunction and its squared L² norm over the ball.
pub fn u_min_and_l2(pair: &RadialEigenpair, problem: &RobinBallProblem) -> Result<(f64, f64)> {
    let s = sigma(problem.dim)?;
    let u_m = pair.psi.iter().copied().fold(f64::INFINITY, f64::min);
    let dens: Vec<f64> = pair
        .grid
        .iter()
        .zip(&pair.psi)
        .map(|(&r, &p)| p * p * s * r.sin().powi(problem.dim as i32 - 1))
        .collect();
    Ok((u_m, quadrature::trapezoid(&pair.grid, &dens)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaceform::ball_geometry;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn shoot_constant_solution() {
        let p = RobinBallProblem::new(2, 0.8, 0.0).unwrap();
        assert_eq!(shoot(&p, 0.0), 0.0);
    }

    #[test]
    fn shoot_cosine_family() {
        let p = RobinBallProblem::new(2, 0.8, 0.8_f64.tan()).unwrap();
        assert!(shoot(&p, 2.0).abs() < 1e-10);
    }

    #[test]
    fn shoot_negative_beta_at_zero() {
        let p = RobinBallProblem::new(2, 1.0, -1.0).unwrap();
        assert!((shoot(&p, 0.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn shoot_saturates_with_sign() {
        let p = RobinBallProblem::new(2, 1.5, -1.0).unwrap();
        let f = shoot(&p, -1e6);
        assert!(f > 0.0 && f.is_finite());
    }

    #[test]
    fn eigenvalue_neumann_zero() {
        let p = RobinBallProblem::new(2, 0.8, 0.0).unwrap();
        let e = first_eigenvalue(&p).unwrap();
        assert_eq!(e.lambda, 0.0);
    }

    #[test]
    fn eigenvalue_cosine_family() {
        for (n, r) in [(2usize, 0.8), (3, 0.5)] {
            let p = RobinBallProblem::new(n, r, r.tan()).unwrap();
            let e = first_eigenvalue(&p).unwrap();
            assert!((e.lambda - n as f64).abs() < 1e-8, "n = {n}: {}", e.lambda);
            for (&ri, &psi) in e.grid.iter().zip(&e.psi) {
                assert!((psi - ri.cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eigenvalue_matches_dense_scan_oracle() {
        // Independent oracle: dense scan of F with step 1e-3 from well below,
        // then plain bisection on the first sign change.
        let p = RobinBallProblem::new(2, 1.0, -1.0).unwrap();
        let f = |l: f64| shoot(&p, l);
        let mut l = -10.0;
        assert!(f(l) > 0.0);
        while f(l + 1e-3) > 0.0 {
            l += 1e-3;
        }
        let (mut a, mut b) = (l, l + 1e-3);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                a = m
            } else {
                b = m
            }
        }
        let e = first_eigenvalue(&p).unwrap();
        assert!(e.lambda < 0.0);
        assert!((e.lambda - 0.5 * (a + b)).abs() < 1e-9);
    }

    #[test]
    fn eigen_residual_is_small() {
        for beta in [-5.0, -1.0, -0.1, 0.3, 2.0] {
            let p = RobinBallProblem::new(2, 1.1, beta).unwrap();
            let e = first_eigenvalue(&p).unwrap();
            assert!(shoot(&p, e.lambda).abs() <= 1e-8 * (1.0 + beta.abs()));
            assert!(e.psi.iter().all(|&v| v > 0.0));
            assert_eq!(e.phi[0], *e.psi.last().unwrap());
        }
    }

    #[test]
    fn grid_halving_is_stable() {
        for (n, r, beta) in [(2usize, 1.0, -1.0), (3, 0.7, -5.0), (2, FRAC_PI_2, -0.5)] {
            let p = RobinBallProblem::new(n, r, beta).unwrap();
            let a = first_eigenvalue_with(&p, 4096).unwrap().lambda;
            let b = first_eigenvalue_with(&p, 8192).unwrap().lambda;
            assert!((a - b).abs() < 1e-8, "{n} {r} {beta}: {a} vs {b}");
        }
    }

    #[test]
    fn monotone_in_beta_and_radius() {
        let mut prev = f64::NEG_INFINITY;
        for beta in [-3.0, -2.0, -1.0, -0.5, -0.1] {
            let l = first_eigenvalue(&RobinBallProblem::new(2, 0.9, beta).unwrap()).unwrap().lambda;
            assert!(l > prev + 1e-8);
            prev = l;
        }
        let mut prev = f64::NEG_INFINITY;
        for r in [0.3, 0.6, 0.9, 1.2, 1.5] {
            let l = first_eigenvalue(&RobinBallProblem::new(2, r, -1.0).unwrap()).unwrap().lambda;
            assert!(l > prev - 1e-8);
            prev = l;
        }
    }

    #[test]
    fn interpolation_reproduces_cosine() {
        let p = RobinBallProblem::new(2, 0.8, 0.8_f64.tan()).unwrap();
        let e = first_eigenvalue(&p).unwrap();
        for k in 0..97 {
            let r = 0.8 * k as f64 / 96.0 * 0.999_3;
            assert!((e.psi_at(r) - r.cos()).abs() < 1e-9);
            assert!((e.dpsi_at(r) + r.sin()).abs() < 1e-8);
            assert!((e.phi_at(0.8 - r) - r.cos()).abs() < 1e-9);
            assert!((e.dphi_at(0.8 - r) - r.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn u_min_and_l2_examples() {
        let p = RobinBallProblem::new(2, 0.8, 0.0).unwrap();
        let e = first_eigenvalue(&p).unwrap();
        let (um, l2) = u_min_and_l2(&e, &p).unwrap();
        assert_eq!(um, 1.0);
        assert!((l2 - ball_geometry(2, 0.8).unwrap().volume).abs() < 1e-6);

        let p = RobinBallProblem::new(2, 0.8, 0.8_f64.tan()).unwrap();
        let e = first_eigenvalue(&p).unwrap();
        let (um, _) = u_min_and_l2(&e, &p).unwrap();
        assert!((um - 0.8_f64.cos()).abs() < 1e-9);

        let p = RobinBallProblem::new(3, 1.2, -2.0).unwrap();
        let e = first_eigenvalue(&p).unwrap();
        let (um, l2) = u_min_and_l2(&e, &p).unwrap();
        assert!(um > 0.0 && e.psi.iter().all(|&v| v >= um));
        assert!(l2 > 0.0);
    }

    #[test]
    fn invalid_problems() {
        assert!(RobinBallProblem::new(2, 2.0, -1.0).is_err());
        assert!(RobinBallProblem::new(1, 1.0, -1.0).is_err());
        assert!(RobinBallProblem::new(2, 1.0, f64::NAN).is_err());
    }
}
