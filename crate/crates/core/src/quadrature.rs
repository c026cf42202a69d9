//! Composite Gauss–Legendre quadrature with deterministic panel doubling,
//! plus the trapezoid and Simpson rules on sampled data.

use std::sync::OnceLock;

const GL_ORDER: usize = 8;
const MAX_DOUBLINGS: u32 = 20;

fn gauss_legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_nodes(GL_ORDER))
}

/// Nodes and weights on [-1, 1], by Newton iteration on P_n.
fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn composite(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre_rule();
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in rule {
            sum += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * sum
}

/// Integrates `f` over `[a, b]`, doubling the panel count until two
/// successive values differ by less than `tol` (absolute, scaled by the
/// magnitude when that exceeds one).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut panels = 1usize;
    let mut prev = composite(&f, a, b, panels);
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let next = composite(&f, a, b, panels);
        if (next - prev).abs() < tol * next.abs().max(1.0) {
            return next;
        }
        prev = next;
    }
    prev
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Composite Simpson on a uniform grid with spacing `h`. An odd number of
/// intervals closes with a 3/8 panel on the last three.
pub fn simpson_uniform(h: f64, ys: &[f64]) -> f64 {
    let m = ys.len().saturating_sub(1);
    match m {
        0 => 0.0,
        1 => 0.5 * h * (ys[0] + ys[1]),
        2 => h / 3.0 * (ys[0] + 4.0 * ys[1] + ys[2]),
        _ => {
            let (even_end, tail) = if m.is_multiple_of(2) { (m, 0.0) } else { (m - 3, three_eighths(h, &ys[m - 3..])) };
            let mut s = ys[0] + ys[even_end];
            for (i, y) in ys.iter().enumerate().take(even_end).skip(1) {
                s += if i % 2 == 1 { 4.0 * y } else { 2.0 * y };
            }
            h / 3.0 * s + tail
        }
    }
}

fn three_eighths(h: f64, y: &[f64]) -> f64 {
    3.0 * h / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3])
}

/// Quadrature weights matching [`simpson_uniform`]; all positive, so a
/// pointwise inequality between integrands carries over to the sums.
pub fn simpson_weights(h: f64, len: usize) -> Vec<f64> {
    let m = len.saturating_sub(1);
    let mut w = vec![0.0; len];
    match m {
        0 => {}
        1 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
        }
        _ => {
            let even_end = if m.is_multiple_of(2) || m == 2 { m } else { m - 3 };
            if even_end > 0 {
                w[0] += h / 3.0;
                w[even_end] += h / 3.0;
                for (i, wi) in w.iter_mut().enumerate().take(even_end).skip(1) {
                    *wi += if i % 2 == 1 { 4.0 * h / 3.0 } else { 2.0 * h / 3.0 };
                }
            }
            if even_end < m {
                for (k, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                    w[m - 3 + k] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        // 8-point rule is exact through degree 15.
        let v = composite(&|x: f64| x.powi(14), -1.0, 1.0, 1);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn integrate_sin() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_odd_and_even_intervals() {
        for n in [2usize, 3, 4, 7, 10] {
            let h = 1.0 / n as f64;
            let ys: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3)).collect();
            assert!((simpson_uniform(h, &ys) - 0.25).abs() < 1e-14, "n = {n}");
            let w = simpson_weights(h, n + 1);
            assert!(w.iter().all(|&x| x > 0.0));
            let via_w: f64 = w.iter().zip(&ys).map(|(a, b)| a * b).sum();
            assert!((via_w - simpson_uniform(h, &ys)).abs() < 1e-14);
        }
    }
}
