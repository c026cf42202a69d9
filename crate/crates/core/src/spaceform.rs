//! Scalar primitives of the unit-curvature space forms and closed-form
//! geodesic-ball geometry on the round sphere.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Sectional curvature of a simply connected space form, normalized to
/// {-1, 0, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Curvature {
    Hyperbolic,
    Flat,
    Spherical,
}

impl Curvature {
    pub fn value(self) -> f64 {
        match self {
            Curvature::Hyperbolic => -1.0,
            Curvature::Flat => 0.0,
            Curvature::Spherical => 1.0,
        }
    }
}

impl TryFrom<f64> for Curvature {
    type Error = Error;

    fn try_from(kappa: f64) -> Result<Self> {
        if kappa == -1.0 {
            Ok(Curvature::Hyperbolic)
        } else if kappa == 0.0 {
            Ok(Curvature::Flat)
        } else if kappa == 1.0 {
            Ok(Curvature::Spherical)
        } else {
            Err(invalid(format!("curvature {kappa} not in {{-1, 0, 1}}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceFormParams {
    pub kappa: Curvature,
    pub dim: usize,
}

impl SpaceFormParams {
    pub fn new(kappa: Curvature, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("dimension {dim} < 2")));
        }
        Ok(SpaceFormParams { kappa, dim })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        Self::new(Curvature::Spherical, dim)
    }
}

pub fn sn(kappa: Curvature, t: f64) -> f64 {
    match kappa {
        Curvature::Hyperbolic => t.sinh(),
        Curvature::Flat => t,
        Curvature::Spherical => t.sin(),
    }
}

pub fn cn(kappa: Curvature, t: f64) -> f64 {
    match kappa {
        Curvature::Hyperbolic => t.cosh(),
        Curvature::Flat => 1.0,
        Curvature::Spherical => t.cos(),
    }
}

/// `L_j(t) = ∫_0^t cn^{n-j} sn^{j-1}`, with `L_0 = 1`. These are the
/// coefficients of the curvature measures in the parallel-volume expansion.
pub fn steiner_l(j: usize, params: SpaceFormParams, t: f64) -> Result<f64> {
    let n = params.dim;
    if j > n {
        return Err(invalid(format!("steiner index j = {j} outside 0..={n}")));
    }
    if t.is_nan() || t < 0.0 {
        return Err(invalid(format!("steiner parameter t = {t} must be >= 0")));
    }
    if j == 0 {
        return Ok(1.0);
    }
    if params.kappa == Curvature::Spherical && n == 2 {
        return Ok(if j == 1 { t.sin() } else { 1.0 - t.cos() });
    }
    let kappa = params.kappa;
    let (pc, ps) = ((n - j) as i32, (j - 1) as i32);
    Ok(quadrature::integrate(
        |x| cn(kappa, x).powi(pc) * sn(kappa, x).powi(ps),
        0.0,
        t,
        1e-12,
    ))
}

fn gamma_half_integer(twice: usize) -> f64 {
    // Γ(twice / 2) for twice >= 1.
    let (mut x, mut g) = if twice.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = twice as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Measure of the boundary of a hemisphere of `S^n`, i.e. of the unit
/// `(n-1)`-sphere: `2 π^{n/2} / Γ(n/2)`.
pub fn sigma(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("sigma_n needs n >= 2, got {n}")));
    }
    Ok(2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallGeometry {
    pub dim: usize,
    pub radius: f64,
    pub perimeter: f64,
    pub volume: f64,
}

pub(crate) fn check_ball_radius(r: f64) -> Result<()> {
    if r.is_nan() || r <= 0.0 || r > FRAC_PI_2 {
        return Err(Error::NotStronglyConvex(r));
    }
    Ok(())
}

pub fn ball_perimeter(n: usize, r: f64) -> Result<f64> {
    Ok(sigma(n)? * r.sin().powi(n as i32 - 1))
}

pub fn ball_geometry(n: usize, r: f64) -> Result<BallGeometry> {
    check_ball_radius(r)?;
    let s = sigma(n)?;
    let volume = s * steiner_l(n, SpaceFormParams::sphere(n)?, r)?;
    Ok(BallGeometry { dim: n, radius: r, perimeter: s * r.sin().powi(n as i32 - 1), volume })
}

/// Radius of the strongly convex geodesic ball in `S^n` with the given
/// perimeter, by bisection on the increasing map `R ↦ σ_n sin^{n-1} R`.
pub fn radius_from_perimeter(n: usize, perimeter: f64) -> Result<f64> {
    let s = sigma(n)?;
    if perimeter.is_nan() || perimeter <= 0.0 {
        return Err(invalid(format!("perimeter {perimeter} must be positive")));
    }
    if perimeter > s {
        return Err(Error::PerimeterTooLarge { perimeter, sigma: s });
    }
    let f = |r: f64| s * r.sin().powi(n as i32 - 1) - perimeter;
    let (mut lo, mut hi) = (0.0_f64, FRAC_PI_2);
    if f(hi) >= 0.0 && perimeter == s {
        return Ok(FRAC_PI_2);
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
