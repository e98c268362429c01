use std::f64::consts::PI;

use crate::{Error, Result};

/// Evaluates `(P_m(x), P'_m(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let dp = if m == 0 {
        0.0
    } else {
        m as f64 * (x * p - p0) / (x * x - 1.0)
    };
    (p, dp)
}

/// Gauss–Legendre rule with `m` points on `[-1, 1]`, nodes ascending.
///
/// Nodes are the roots of `P_m`, found by Newton's method from the asymptotic
/// guess `cos(π (i - 1/4) / (m + 1/2))`; weights are `2 / ((1 - x²) P'_m(x)²)`.
pub fn gauss_legendre(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::invalid("Gauss-Legendre rule needs at least one point"));
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // symmetric pair; the middle node of an odd rule is exactly zero
        if 2 * i + 1 == m {
            x = 0.0;
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(m: usize, f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = gauss_legendre(m).unwrap();
        x.iter().zip(&w).map(|(&x, &w)| w * f(x)).sum()
    }

    #[test]
    fn one_and_two_point_rules() {
        let (x, w) = gauss_legendre(1).unwrap();
        assert_eq!((x[0], w[0]), (0.0, 2.0));
        let (x, w) = gauss_legendre(2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_points_is_an_error() {
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn nodes_are_legendre_roots_and_weights_sum_to_two() {
        for m in [3, 7, 16, 32, 64] {
            let (x, w) = gauss_legendre(m).unwrap();
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for &xi in &x {
                let (p, dp) = legendre(m, xi);
                // |P_m(x)| / |P'_m(x)| bounds the distance to the nearest root
                assert!((p / dp).abs() < 1e-14, "m = {m}");
            }
            assert!(w.iter().all(|&w| w > 0.0));
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_degree_2m_minus_1() {
        let v = integrate(32, |x| x.powi(62));
        assert!((v - 2.0 / 63.0).abs() < 1e-13, "{v}");
        assert!(integrate(32, |x| x.powi(63)).abs() < 1e-15);
        for m in 1..12 {
            for d in 0..2 * m {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((integrate(m, |x| x.powi(d as i32)) - exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn exponential_error_decays_superalgebraically() {
        let exact = 1f64.exp() - (-1f64).exp();
        let errs: Vec<f64> = [2, 4, 8].iter().map(|&m| (integrate(m, f64::exp) - exact).abs()).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0] * 1e-2 || w[1] < 1e-15);
        }
        assert!((integrate(16, f64::exp) - exact).abs() < 1e-15 * 8.0);
    }
}
