//! Orthonormal Hermite polynomials and the Gauss-Hermite rule.
//!
//! All evaluations use the orthonormal three-term recurrence with respect
//! to the weight `e^{-x²}`, which stays well scaled at high order where
//! the physicists' polynomials overflow.

use crate::{Error, Result};

/// Value of the orthonormal Hermite polynomial `h_n(x)`
/// (`∫ h_m h_n e^{-x²} dx = δ_mn`).
pub fn hermite_orthonormal(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    for k in 0..n {
        let next = x * (2.0 / (k as f64 + 1.0)).sqrt() * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Values `h_0(x), ..., h_{n_max}(x)` in one recurrence pass.
pub fn hermite_orthonormal_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    out.push(cur);
    for k in 0..n_max {
        let next = x * (2.0 / (k as f64 + 1.0)).sqrt() * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Nodes and weights of the n-point Gauss-Hermite rule:
/// `∫ f(x) e^{-x²} dx ≈ Σ w_i f(x_i)`, exact for polynomials of degree
/// `≤ 2n - 1`.
///
/// Nodes are found by Newton iteration on the orthonormal polynomial,
/// walking in from the largest root with the usual asymptotic starting
/// guesses. Returned sorted ascending.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 1 {
        return Err(Error::InvalidParameter("Gauss-Hermite order must be >= 1".into()));
    }
    if n > 256 {
        return Err(Error::Quadrature(format!(
            "Gauss-Hermite order {n} exceeds the stable range of the node recurrence"
        )));
    }
    let nf = n as f64;
    let m = (n + 1) / 2;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut roots = Vec::with_capacity(m);
    for i in 0..m {
        let mut z: f64 = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => roots[0] - 1.14 * nf.powf(0.426) / roots[0],
            2 => 1.86 * roots[1] - 0.86 * roots[0],
            3 => 1.91 * roots[2] - 0.91 * roots[1],
            _ => 2.0 * roots[i - 1] - roots[i - 2],
        };
        for iter in 0.. {
            let p = hermite_orthonormal(n, z);
            // d/dx h_n = sqrt(2n) h_{n-1}
            let dp = (2.0 * nf).sqrt() * hermite_orthonormal(n - 1, z);
            let step = p / dp;
            z -= step;
            if step.abs() < 1e-15 * (1.0 + z.abs()) {
                break;
            }
            if iter > 100 {
                return Err(Error::Quadrature(format!(
                    "Newton iteration for Gauss-Hermite node {i} of order {n} stalled"
                )));
            }
        }
        roots.push(z);
        let dp = (2.0 * nf).sqrt() * hermite_orthonormal(n - 1, z);
        let w = 2.0 / (dp * dp);
        // Roots come out descending; mirror into a sorted array.
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn low_order_rules_match_closed_forms() {
        let (x, w) = gauss_hermite(1).unwrap();
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[0], PI.sqrt(), epsilon = 1e-14);

        let (x, w) = gauss_hermite(2).unwrap();
        assert_abs_diff_eq!(x[1], 0.5f64.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(w[0], PI.sqrt() / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn order_two_integrates_x_squared() {
        // The second-moment oracle: ∫ x² e^{-x²} dx = √π / 2.
        let (x, w) = gauss_hermite(2).unwrap();
        let total: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
        assert_abs_diff_eq!(total, PI.sqrt() / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn high_order_moments_are_exact() {
        let (x, w) = gauss_hermite(40).unwrap();
        // ∫ x^{2m} e^{-x²} dx = √π (2m-1)!! / 2^m
        let mut exact = PI.sqrt();
        for m in 1..=10usize {
            exact *= (2 * m - 1) as f64 / 2.0;
            let got: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| wi * xi.powi(2 * m as i32))
                .sum();
            assert!((got - exact).abs() <= 1e-12 * exact.max(1.0), "moment {m}");
        }
    }

    #[test]
    fn weights_positive_nodes_sorted() {
        let (x, w) = gauss_hermite(64).unwrap();
        assert!(w.iter().all(|&wi| wi > 0.0));
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn orthonormal_values_consistent() {
        // h_1(x) = sqrt(2) x / pi^{1/4}
        let x = 0.7;
        assert_abs_diff_eq!(
            hermite_orthonormal(1, x),
            2f64.sqrt() * x * PI.powf(-0.25),
            epsilon = 1e-14
        );
        let all = hermite_orthonormal_all(10, x);
        for (n, v) in all.iter().enumerate() {
            assert_abs_diff_eq!(*v, hermite_orthonormal(n, x), epsilon = 1e-13);
        }
    }
}
