//! Total curvature measures of cap bodies on S², Steiner formulas for
//! outer parallel sets, and the Alexandrov–Fenchel gap.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::body::{BoundaryStructure, CapBody, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureMeasures {
    /// Total geodesic curvature of the boundary, corners included.
    pub phi0: f64,
    /// Boundary length.
    pub phi1: f64,
    /// Area.
    pub phi2: f64,
}

impl CurvatureMeasures {
    pub fn from_boundary(b: &BoundaryStructure) -> Self {
        let phi0 = b.total_turning() + b.total_exterior_angle();
        CurvatureMeasures { phi0, phi1: b.perimeter(), phi2: TAU - phi0 }
    }
}

pub fn compute_measures(body: &CapBody) -> Result<CurvatureMeasures> {
    Ok(CurvatureMeasures::from_boundary(&body.boundary_structure()?))
}

fn reach_guard(s: f64) -> Result<()> {
    if (0.0..FRAC_PI_2).contains(&s) {
        Ok(())
    } else {
        Err(Error::OutsideReach(s))
    }
}

/// Area of the outer parallel set at distance `s`.
pub fn steiner_volume(m: &CurvatureMeasures, s: f64) -> Result<f64> {
    reach_guard(s)?;
    Ok(m.phi2 + s.sin() * m.phi1 + (1.0 - s.cos()) * m.phi0)
}

/// Boundary length of the outer parallel set at distance `s`.
pub fn steiner_boundary(m: &CurvatureMeasures, s: f64) -> Result<f64> {
    reach_guard(s)?;
    Ok(s.cos() * m.phi1 + s.sin() * m.phi0)
}

/// `(phi0/2π)² - 1 + (phi1/2π)²`; zero exactly for geodesic balls.
pub fn alexandrov_fenchel_gap(m: &CurvatureMeasures) -> f64 {
    let a = m.phi0 / TAU;
    let b = m.phi1 / TAU;
    a * a - 1.0 + b * b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub estimate: f64,
    pub std_err: f64,
    pub samples: usize,
}

const CHUNK: usize = 1 << 14;

/// Fraction of uniform samples in the cap `(axis, theta)` satisfying
/// `pred`, scaled by the cap area. Chunks use independent ChaCha streams so
/// the result does not depend on the thread count.
pub fn cap_monte_carlo(
    axis: Vec3,
    theta: f64,
    samples: usize,
    seed: u64,
    pred: impl Fn(&Vec3) -> bool + Sync,
) -> MonteCarlo {
    let axis = axis.normalize();
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = helper.cross(&axis).normalize();
    let v = axis.cross(&u);
    let zmin = theta.min(PI).cos();
    let chunks = samples.div_ceil(CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            (0..count)
                .filter(|_| {
                    let z = zmin + (1.0 - zmin) * rng.random::<f64>();
                    let phi = TAU * rng.random::<f64>();
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    pred(&(z * axis + r * (phi.cos() * u + phi.sin() * v)))
                })
                .count()
        })
        .sum();
    let cap_area = TAU * (1.0 - zmin);
    let p = hits as f64 / samples as f64;
    MonteCarlo {
        estimate: cap_area * p,
        std_err: cap_area * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    }
}

fn sampling_cap(body: &CapBody, s: f64) -> Result<(Vec3, f64)> {
    let w = body.hemisphere_witness()?;
    Ok((w.direction, (w.margin.clamp(-1.0, 1.0).acos() + s + 0.01).min(PI)))
}

/// Monte Carlo area of `{p : d(p, Ω) <= s}`.
pub fn outer_parallel_volume_mc(body: &CapBody, s: f64, samples: usize, seed: u64) -> Result<MonteCarlo> {
    reach_guard(s)?;
    let boundary = body.boundary_structure()?;
    let (axis, theta) = sampling_cap(body, s)?;
    Ok(cap_monte_carlo(axis, theta, samples, seed, |p| body.distance_to_body(&boundary, p) <= s))
}

/// Monte Carlo area of the shell `{p : 0 < d(p, Ω) <= s}`.
pub fn outer_shell_volume_mc(body: &CapBody, s: f64, samples: usize, seed: u64) -> Result<MonteCarlo> {
    reach_guard(s)?;
    let boundary = body.boundary_structure()?;
    let (axis, theta) = sampling_cap(body, s)?;
    Ok(cap_monte_carlo(axis, theta, samples, seed, |p| {
        !body.contains(p) && body.distance_to_body(&boundary, p) <= s
    }))
}
