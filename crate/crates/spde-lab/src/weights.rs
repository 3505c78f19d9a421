//! Admissible weights, weighted inner products and quadrature.
//!
//! A weight ρ is admissible when it is positive, integrable, bounded, and
//! the heat kernel convolution satisfies `G(t,·)*ρ ≤ C(T)ρ` on bounded
//! time intervals. The three families implemented here are
//! `e^{-γ|x|}`, `(1+|x|^n)^{-1}` with `n > d`, and the Gaussian
//! `e^{-|x|²}`.

use crate::hermite::gauss_hermite;
use crate::{Error, Field, Result};

/// Weight family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// `ρ(x) = e^{-γ|x|}`, `γ > 0`.
    ExpDecay { gamma: f64 },
    /// `ρ(x) = (1 + |x|^n)^{-1}`, `n > d`.
    PolyDecay { n: u32 },
    /// `ρ(x) = e^{-|x|²}`.
    Gaussian,
}

/// An admissible weight on ℝ^d or the upper half-space `x_d > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    pub kind: WeightKind,
    pub dim: usize,
    pub half_space: bool,
}

impl WeightFunction {
    pub fn new(kind: WeightKind, dim: usize, half_space: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        match kind {
            WeightKind::ExpDecay { gamma } if gamma <= 0.0 => {
                return Err(Error::InvalidParameter(format!(
                    "exponential weight needs gamma > 0, got {gamma}"
                )))
            }
            WeightKind::PolyDecay { n } if (n as usize) <= dim => {
                return Err(Error::WeightExponentTooSmall { n, d: dim });
            }
            _ => {}
        }
        Ok(Self { kind, dim, half_space })
    }

    /// Weight value at a point. The formula extends smoothly outside the
    /// half-space; the `half_space` flag only restricts integration
    /// domains.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self.kind {
            WeightKind::ExpDecay { gamma } => (-gamma * r2.sqrt()).exp(),
            WeightKind::PolyDecay { n } => 1.0 / (1.0 + r2.sqrt().powi(n as i32)),
            WeightKind::Gaussian => (-r2).exp(),
        }
    }

    /// `‖ρ‖_{L¹}` estimated with the given rule.
    pub fn l1_norm(&self, q: &Quadrature) -> f64 {
        q.nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * self.eval(x))
            .sum()
    }

    /// `‖ρ‖_{L∞}`. All three families peak at the origin with value 1
    /// (the half-space supremum is approached at the boundary).
    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    /// Plain-text `key=value` block for run manifests.
    pub fn to_config_block(&self) -> String {
        let kind = match self.kind {
            WeightKind::ExpDecay { gamma } => format!("exp_decay\nweight.gamma={gamma}"),
            WeightKind::PolyDecay { n } => format!("poly_decay\nweight.n={n}"),
            WeightKind::Gaussian => "gaussian".to_string(),
        };
        format!(
            "weight.kind={kind}\nweight.dim={}\nweight.half_space={}",
            self.dim, self.half_space
        )
    }
}

/// Integration domain of a quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainTag {
    FullSpace,
    HalfSpace,
    TorusTruncation { r: f64 },
}

/// A quadrature rule with Lebesgue weights: `∫ f dx ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub domain: DomainTag,
    pub dim: usize,
    /// Gauss-Hermite order or torus resolution, echoed into manifests.
    pub order: usize,
}

impl Quadrature {
    /// Tensorized Gauss-Hermite rule over ℝ^d with the `e^{-x²}` factor
    /// absorbed into the weights, so that `Σ w_i f(x_i) ≈ ∫ f dx` for
    /// integrands decaying like a Gaussian times a polynomial.
    pub fn gauss_full(dim: usize, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(
                "full-space rule needs order >= 2".into(),
            ));
        }
        let (x1, w1) = gauss_hermite(order)?;
        let lebesgue: Vec<f64> = x1
            .iter()
            .zip(&w1)
            .map(|(x, w)| w * (x * x).exp())
            .collect();
        let (nodes, weights) = tensorize(&x1, &lebesgue, dim);
        Ok(Self { nodes, weights, domain: DomainTag::FullSpace, dim, order })
    }

    /// Rule for the upper half-space `x_d > 0`, built by odd reflection:
    /// the last coordinate of every full-line node is folded to `|x_d|`
    /// and the weight halved, so `Σ w_i f(x_i) ≈ ∫_{x_d>0} f dx` whenever
    /// `f(·, x_d)` extends evenly.
    pub fn gauss_half(dim: usize, order: usize) -> Result<Self> {
        let mut q = Self::gauss_full(dim, order)?;
        for (node, w) in q.nodes.iter_mut().zip(q.weights.iter_mut()) {
            let last = node.last_mut().expect("dim >= 1");
            *last = last.abs();
            *w *= 0.5;
        }
        q.domain = DomainTag::HalfSpace;
        Ok(q)
    }

    /// Uniform grid on the torus `[-r, r)^d` with spacing `2r/resolution`,
    /// node layout matching the FFT grid of the heat backend.
    pub fn torus(dim: usize, r: f64, resolution: usize) -> Result<Self> {
        if r <= 0.0 || resolution < 2 {
            return Err(Error::InvalidParameter(
                "torus rule needs r > 0 and resolution >= 2".into(),
            ));
        }
        let h = 2.0 * r / resolution as f64;
        let x1: Vec<f64> = (0..resolution).map(|j| -r + j as f64 * h).collect();
        let w1 = vec![h; resolution];
        let (nodes, weights) = tensorize(&x1, &w1, dim);
        Ok(Self {
            nodes,
            weights,
            domain: DomainTag::TorusTruncation { r },
            dim,
            order: resolution,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn to_config_block(&self) -> String {
        let domain = match self.domain {
            DomainTag::FullSpace => "full_space".to_string(),
            DomainTag::HalfSpace => "half_space".to_string(),
            DomainTag::TorusTruncation { r } => format!("torus\nquadrature.r={r}"),
        };
        format!(
            "quadrature.domain={domain}\nquadrature.dim={}\nquadrature.order={}",
            self.dim, self.order
        )
    }
}

fn tensorize(x1: &[f64], w1: &[f64], dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x1.len();
    let total = n.pow(dim as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = flat;
        let mut node = Vec::with_capacity(dim);
        let mut w = 1.0;
        for _ in 0..dim {
            let i = idx % n;
            idx /= n;
            node.push(x1[i]);
            w *= w1[i];
        }
        node.reverse();
        nodes.push(node);
        weights.push(w);
    }
    (nodes, weights)
}

/// Weighted inner product `∫ u v ρ dx` over the rule's domain.
pub fn weighted_inner(u: &Field, v: &Field, rho: &WeightFunction, q: &Quadrature) -> Result<f64> {
    if u.len() != q.len() {
        return Err(Error::NodeCountMismatch { field: u.len(), rule: q.len() });
    }
    if v.len() != q.len() {
        return Err(Error::NodeCountMismatch { field: v.len(), rule: q.len() });
    }
    Ok(q.nodes
        .iter()
        .zip(&q.weights)
        .zip(u.iter().zip(v))
        .map(|((x, w), (ui, vi))| w * ui * vi * rho.eval(x))
        .sum())
}

/// `‖u‖_H = (∫ u² ρ dx)^{1/2}`.
pub fn weighted_norm(u: &Field, rho: &WeightFunction, q: &Quadrature) -> Result<f64> {
    weighted_inner(u, u, rho, q).map(|v| v.max(0.0).sqrt())
}

/// Certificate for the admissibility condition `G(t,·)*ρ ≤ C(T)ρ`.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    /// Smallest constant observed over the sampled `(t, x)`.
    pub c_hat: f64,
    pub admissible: bool,
    /// `(t, sample index, ratio)` where the ratio peaked.
    pub worst: (f64, usize, f64),
    pub t_samples: usize,
}

/// Sampled admissibility check on `t ∈ [0, T]`.
///
/// The convolution is computed by the substitution `y = x - 2√t s`, which
/// turns `G(t,·)*ρ` into a Gauss-Hermite integral in `s`. The `t = 0`
/// slice is the identity and contributes ratio 1 exactly.
pub fn check_admissible(
    rho: &WeightFunction,
    t_max: f64,
    x_samples: &[Vec<f64>],
    n_t: usize,
    conv_order: usize,
) -> Result<AdmissibilityReport> {
    if t_max <= 0.0 {
        return Err(Error::InvalidParameter("T must be positive".into()));
    }
    if x_samples.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample point".into()));
    }
    let (s1, w1) = gauss_hermite(conv_order)?;
    let (s_nodes, s_weights) = tensorize(&s1, &w1, rho.dim);
    let norm = std::f64::consts::PI.powf(-(rho.dim as f64) / 2.0);

    let mut c_hat = 1.0f64; // t = 0 slice
    let mut worst = (0.0, 0, 1.0);
    let mut shifted = vec![0.0; rho.dim];
    for j in 1..=n_t {
        let t = t_max * j as f64 / n_t as f64;
        let scale = 2.0 * t.sqrt();
        for (xi, x) in x_samples.iter().enumerate() {
            let mut conv = 0.0;
            for (s, w) in s_nodes.iter().zip(&s_weights) {
                for k in 0..rho.dim {
                    shifted[k] = x[k] - scale * s[k];
                }
                conv += w * rho.eval(&shifted);
            }
            conv *= norm;
            let ratio = conv / rho.eval(x);
            if !ratio.is_finite() {
                return Err(Error::Quadrature(format!(
                    "convolution ratio not finite at t = {t}, sample {xi}"
                )));
            }
            if ratio > c_hat {
                c_hat = ratio;
                worst = (t, xi, ratio);
            }
        }
    }
    Ok(AdmissibilityReport { c_hat, admissible: true, worst, t_samples: n_t })
}

/// Result of the weight-pair integrability check `∫ ζ/ρ dx < ∞`.
#[derive(Debug, Clone)]
pub struct WeightPairReport {
    /// Numeric estimate of the integral over the rule's domain.
    pub estimate: f64,
    pub finite: bool,
    /// Ratio of successive dyadic tail integrals; < 1 means geometric
    /// tail decay.
    pub tail_ratio: f64,
    /// Nodes excluded because ρ underflowed.
    pub excluded: usize,
}

/// Estimates `∫ ζ/ρ` with the given rule and classifies convergence by a
/// dyadic tail-slope test on the (radial) integrand.
pub fn check_weight_pair(
    zeta: &WeightFunction,
    rho: &WeightFunction,
    q: &Quadrature,
) -> Result<WeightPairReport> {
    if zeta.dim != rho.dim || zeta.half_space != rho.half_space {
        return Err(Error::InvalidParameter(
            "weight pair must share dimension and domain".into(),
        ));
    }
    let mut estimate = 0.0;
    let mut excluded = 0usize;
    for (x, w) in q.nodes.iter().zip(&q.weights) {
        let r = rho.eval(x);
        if r < 1e-290 {
            excluded += 1;
            continue;
        }
        estimate += w * zeta.eval(x) / r;
    }

    // Dyadic tail test on the radial profile: both families are radial, so
    // ∫_{2^k ≤ |x| ≤ 2^{k+1}} ζ/ρ = ω_{d-1} ∫ h(r) r^{d-1} dr.
    let d = zeta.dim;
    let surface = {
        let full = 2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d);
        if zeta.half_space { full / 2.0 } else { full }
    };
    let radial = |r: f64| -> f64 {
        let mut x = vec![0.0; d];
        x[d - 1] = r;
        let denom = rho.eval(&x);
        if denom < 1e-290 {
            return f64::INFINITY;
        }
        zeta.eval(&x) / denom * r.powi(d as i32 - 1)
    };
    let mut prev = simpson(&radial, 4.0, 8.0, 512) * surface;
    let mut tail_ratio = 0.0;
    let mut finite = true;
    for k in 3..=11 {
        let a = 2f64.powi(k);
        let cur = simpson(&radial, a, 2.0 * a, 512) * surface;
        if !cur.is_finite() {
            finite = false;
            tail_ratio = f64::INFINITY;
            break;
        }
        // A tail window already negligible against the estimate settles
        // convergence; scanning further only runs into underflow.
        if cur < 1e-16 * (estimate.abs() + 1.0) {
            tail_ratio = if prev > 0.0 { (cur / prev).min(tail_ratio.max(0.0)) } else { 0.0 };
            break;
        }
        tail_ratio = if prev > 0.0 { cur / prev } else { 0.0 };
        prev = cur;
    }
    if finite {
        finite = tail_ratio < 0.95;
    }
    Ok(WeightPairReport { estimate, finite, tail_ratio, excluded })
}

pub(crate) fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let coeff = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += coeff * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Γ(d/2) for integer d ≥ 1.
fn gamma_half(d: usize) -> f64 {
    let mut z = d as f64 / 2.0;
    let mut acc = 1.0;
    while z > 1.0 + 1e-9 {
        z -= 1.0;
        acc *= z;
    }
    // z is now 1 or 1/2
    if (z - 1.0).abs() < 1e-12 {
        acc
    } else {
        acc * std::f64::consts::PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn make_weight_examples() {
        let g = WeightFunction::new(WeightKind::Gaussian, 1, false).unwrap();
        assert_abs_diff_eq!(g.eval(&[0.0]), 1.0);
        let e = WeightFunction::new(WeightKind::ExpDecay { gamma: 1.0 }, 1, false).unwrap();
        assert_abs_diff_eq!(e.eval(&[1.0]), (-1.0f64).exp(), epsilon = 1e-12);
        assert!(matches!(
            WeightFunction::new(WeightKind::PolyDecay { n: 1 }, 3, false),
            Err(Error::WeightExponentTooSmall { n: 1, d: 3 })
        ));
        assert!(WeightFunction::new(WeightKind::ExpDecay { gamma: -0.5 }, 1, false).is_err());
    }

    #[test]
    fn gaussian_mass_is_exact_at_order_32() {
        let rho = WeightFunction::new(WeightKind::Gaussian, 1, false).unwrap();
        let q = Quadrature::gauss_full(1, 32).unwrap();
        assert_abs_diff_eq!(rho.l1_norm(&q), PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn weighted_inner_constant_against_gaussian() {
        let rho = WeightFunction::new(WeightKind::Gaussian, 1, false).unwrap();
        let q = Quadrature::gauss_full(1, 32).unwrap();
        let ones = vec![1.0; q.len()];
        // Analytic Gaussian integral oracle: ∫ 1 · e^{-x²} dx = √π.
        assert_abs_diff_eq!(
            weighted_inner(&ones, &ones, &rho, &q).unwrap(),
            PI.sqrt(),
            epsilon = 1e-10
        );
        let zeros = vec![0.0; q.len()];
        assert_abs_diff_eq!(weighted_inner(&zeros, &zeros, &rho, &q).unwrap(), 0.0);
    }

    #[test]
    fn inner_rejects_mismatched_lengths() {
        let rho = WeightFunction::new(WeightKind::Gaussian, 1, false).unwrap();
        let q = Quadrature::gauss_full(1, 8).unwrap();
        let short = vec![1.0; 3];
        let ok = vec![1.0; q.len()];
        assert!(weighted_inner(&short, &ok, &rho, &q).is_err());
    }

    #[test]
    fn order_two_rule_second_moment() {
        // Analytic moment oracle: ∫ x² e^{-x²} dx = √π/2.
        let q = Quadrature::gauss_full(1, 2).unwrap();
        let got: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * x[0] * x[0] * (-x[0] * x[0]).exp())
            .sum();
        assert_abs_diff_eq!(got, PI.sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn order_one_full_space_rejected() {
        assert!(Quadrature::gauss_full(1, 1).is_err());
    }

    #[test]
    fn half_space_moments() {
        let q = Quadrature::gauss_half(1, 16).unwrap();
        // Even extensions are handled exactly: ∫_0^∞ x² e^{-x²} dx = √π/4.
        let second: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * x[0] * x[0] * (-x[0] * x[0]).exp())
            .sum();
        assert_abs_diff_eq!(second, PI.sqrt() / 4.0, epsilon = 1e-12);
        // The folded rule sees |x|, so odd-order moments converge but are
        // not exact: ∫_0^∞ x e^{-x²} dx = 1/2.
        let first: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(x, w)| w * x[0] * (-x[0] * x[0]).exp())
            .sum();
        assert_abs_diff_eq!(first, 0.5, epsilon = 0.02);
    }

    #[test]
    fn quadrature_weights_positive() {
        for q in [
            Quadrature::gauss_full(2, 8).unwrap(),
            Quadrature::gauss_half(1, 12).unwrap(),
            Quadrature::torus(1, 4.0, 32).unwrap(),
        ] {
            assert!(q.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn admissible_exp_weight() {
        let rho = WeightFunction::new(WeightKind::ExpDecay { gamma: 1.0 }, 1, false).unwrap();
        let xs: Vec<Vec<f64>> = (-10..=10).map(|i| vec![i as f64 * 0.5]).collect();
        let rep = check_admissible(&rho, 1.0, &xs, 8, 48).unwrap();
        assert!(rep.admissible);
        assert!(rep.c_hat.is_finite());
        assert!(rep.c_hat >= 1.0);
        // e^{-γ|x|} satisfies G(t)*ρ ≤ 2e^{γ²t}ρ, so Ĉ ≤ 2e at T = 1.
        assert!(rep.c_hat <= 2.0 * std::f64::consts::E);
    }

    #[test]
    fn admissible_poly_weight() {
        let rho = WeightFunction::new(WeightKind::PolyDecay { n: 2 }, 1, false).unwrap();
        let xs: Vec<Vec<f64>> = (-8..=8).map(|i| vec![i as f64]).collect();
        let rep = check_admissible(&rho, 1.0, &xs, 8, 48).unwrap();
        assert!(rep.admissible && rep.c_hat.is_finite());
    }

    #[test]
    fn weight_pair_exp_over_exp() {
        let zeta = WeightFunction::new(WeightKind::ExpDecay { gamma: 2.0 }, 1, false).unwrap();
        let rho = WeightFunction::new(WeightKind::ExpDecay { gamma: 1.0 }, 1, false).unwrap();
        let q = Quadrature::torus(1, 40.0, 8000).unwrap();
        let rep = check_weight_pair(&zeta, &rho, &q).unwrap();
        // ∫ e^{-|x|} dx = 2.
        assert!(rep.finite);
        assert_abs_diff_eq!(rep.estimate, 2.0, epsilon = 1e-4);
    }

    #[test]
    fn weight_pair_identical_diverges() {
        let rho = WeightFunction::new(WeightKind::ExpDecay { gamma: 1.0 }, 1, false).unwrap();
        let q = Quadrature::torus(1, 40.0, 1000).unwrap();
        let rep = check_weight_pair(&rho, &rho, &q).unwrap();
        assert!(!rep.finite);
    }

    #[test]
    fn weight_pair_poly_over_poly() {
        let zeta = WeightFunction::new(WeightKind::PolyDecay { n: 4 }, 1, false).unwrap();
        let rho = WeightFunction::new(WeightKind::PolyDecay { n: 2 }, 1, false).unwrap();
        let q = Quadrature::torus(1, 60.0, 12000).unwrap();
        let rep = check_weight_pair(&zeta, &rho, &q).unwrap();
        assert!(rep.finite);
        // 1D numeric oracle: ∫ (1+x²)/(1+x⁴) dx = π√2.
        assert_abs_diff_eq!(rep.estimate, PI * 2f64.sqrt(), epsilon = 0.05);
    }

    #[test]
    fn gamma_half_values() {
        assert_abs_diff_eq!(gamma_half(1), PI.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_half(2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_half(3), PI.sqrt() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_half(4), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_half(6), 2.0, epsilon = 1e-12);
    }
}
