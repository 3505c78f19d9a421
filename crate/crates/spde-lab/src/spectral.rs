//! Spectral theory of the Gaussian-weight operator
//! `Au = ρ⁻¹ div(ρ∇u)`, `ρ = e^{-|x|²}`, on the upper half-space with a
//! Dirichlet boundary.
//!
//! Separation of variables gives Hermite-polynomial eigenfunctions: free
//! coordinates contribute levels `λ = -2p`, while the Dirichlet condition
//! on the last coordinate admits only odd levels, `λ = -2 - 4p`. The
//! semigroup is applied exactly by scaling coefficients with `e^{μt}`.

use crate::hermite::hermite_orthonormal_all;
use crate::weights::{Quadrature, WeightFunction, WeightKind};
use crate::{Error, Field, Result};

/// Multi-index of an eigenfunction. The first `d-1` entries index
/// full-line Hermite levels; the last indexes odd levels `2p+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeIndex {
    pub p: Vec<u32>,
}

impl ModeIndex {
    pub fn new(p: Vec<u32>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter("mode index needs d >= 1".into()));
        }
        Ok(Self { p })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }
}

/// Eigenvalue `μ = -2(p_1 + ... + p_{d-1}) - (2 + 4 p_d)`, always < 0.
pub fn eigenvalue(index: &ModeIndex) -> f64 {
    let d = index.dim();
    let free: u32 = index.p[..d - 1].iter().sum();
    -2.0 * free as f64 - (2.0 + 4.0 * index.p[d - 1] as f64)
}

/// Eigenfunction value with the analytic normalization: orthonormal
/// full-line Hermite factors and a `√2` factor for the half-line one.
/// Vanishes at `x_d = 0`.
pub fn eigenfunction_eval(index: &ModeIndex, x: &[f64]) -> f64 {
    let d = index.dim();
    let mut value = 1.0;
    for i in 0..d - 1 {
        let h = hermite_orthonormal_all(index.p[i] as usize, x[i]);
        value *= h[index.p[i] as usize];
    }
    let level = 2 * index.p[d - 1] as usize + 1;
    let h = hermite_orthonormal_all(level, x[d - 1]);
    value * 2f64.sqrt() * h[level]
}

/// Spectral coefficients of a field in the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub coeffs: Vec<f64>,
    pub dim: usize,
    pub cutoff: usize,
}

impl CoeffVector {
    pub fn zeros(basis: &EigenBasis) -> Self {
        Self { coeffs: vec![0.0; basis.len()], dim: basis.dim, cutoff: basis.cutoff }
    }

    /// `‖·‖_H` via Parseval.
    pub fn h_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Precomputed eigenbasis tables: modes sorted by decreasing eigenvalue
/// (slowest decay first), values at half-space quadrature nodes, and the
/// analysis weights `w_i ρ(x_i)`.
pub struct EigenBasis {
    pub dim: usize,
    /// Levels per dimension.
    pub cutoff: usize,
    pub modes: Vec<ModeIndex>,
    pub eigenvalues: Vec<f64>,
    pub quad: Quadrature,
    /// `table[j][i]` = normalized mode `j` at node `i`.
    table: Vec<Vec<f64>>,
    /// `w_i ρ(x_i)` per node.
    analysis_weights: Vec<f64>,
}

impl EigenBasis {
    pub fn new(dim: usize, cutoff: usize, quad_order: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidParameter("cutoff must be >= 1".into()));
        }
        if cutoff > quad_order / 2 {
            return Err(Error::InvalidParameter(format!(
                "cutoff {cutoff} exceeds quadrature order {quad_order} / 2"
            )));
        }
        let quad = Quadrature::gauss_half(dim, quad_order)?;
        let rho = WeightFunction::new(WeightKind::Gaussian, dim, true)?;
        let analysis_weights: Vec<f64> = quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .map(|(x, w)| w * rho.eval(x))
            .collect();

        // Enumerate the cutoff^d box and sort by decreasing eigenvalue,
        // ties broken by lexicographic index for determinism.
        let mut modes: Vec<ModeIndex> = Vec::with_capacity(cutoff.pow(dim as u32));
        let total = cutoff.pow(dim as u32);
        for flat in 0..total {
            let mut idx = flat;
            let mut p = vec![0u32; dim];
            for axis in (0..dim).rev() {
                p[axis] = (idx % cutoff) as u32;
                idx /= cutoff;
            }
            modes.push(ModeIndex { p });
        }
        modes.sort_by(|a, b| {
            eigenvalue(b)
                .partial_cmp(&eigenvalue(a))
                .unwrap()
                .then_with(|| a.p.cmp(&b.p))
        });
        let eigenvalues: Vec<f64> = modes.iter().map(eigenvalue).collect();

        // Tabulate and renormalize through the quadrature itself so the
        // discrete H-norm of every mode is exactly one.
        let mut table = Vec::with_capacity(modes.len());
        for mode in &modes {
            let raw: Vec<f64> = quad.nodes.iter().map(|x| eigenfunction_eval(mode, x)).collect();
            let norm_sq: f64 = raw
                .iter()
                .zip(&analysis_weights)
                .map(|(v, w)| w * v * v)
                .sum();
            let inv = 1.0 / norm_sq.sqrt();
            table.push(raw.into_iter().map(|v| v * inv).collect());
        }
        Ok(Self { dim, cutoff, modes, eigenvalues, quad, table, analysis_weights })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Normalized mode values at the quadrature nodes.
    pub fn mode_values(&self, j: usize) -> &[f64] {
        &self.table[j]
    }

    /// Analysis weights `w_i ρ(x_i)` per quadrature node; summing
    /// `node_weights[i] · u_i · v_i` gives the H inner product.
    pub fn node_weights(&self) -> &[f64] {
        &self.analysis_weights
    }

    /// Projects a field sampled at the quadrature nodes onto the basis.
    pub fn to_coeffs(&self, u: &Field) -> Result<CoeffVector> {
        if u.len() != self.quad.len() {
            return Err(Error::NodeCountMismatch { field: u.len(), rule: self.quad.len() });
        }
        let coeffs = self
            .table
            .iter()
            .map(|phi| {
                phi.iter()
                    .zip(u)
                    .zip(&self.analysis_weights)
                    .map(|((p, v), w)| w * p * v)
                    .sum()
            })
            .collect();
        Ok(CoeffVector { coeffs, dim: self.dim, cutoff: self.cutoff })
    }

    /// Evaluates the expansion at the quadrature nodes.
    pub fn from_coeffs(&self, c: &CoeffVector) -> Result<Field> {
        if c.coeffs.len() != self.len() {
            return Err(Error::BackendMismatch { state: c.coeffs.len(), backend: self.len() });
        }
        let mut out = vec![0.0; self.quad.len()];
        for (phi, &cj) in self.table.iter().zip(&c.coeffs) {
            if cj == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(phi) {
                *o += cj * p;
            }
        }
        Ok(out)
    }

    /// `S(t)` in coefficient space: each coefficient scaled by `e^{μ_j t}`.
    /// Exact in time; `t < 0` is rejected.
    pub fn apply_semigroup(&self, c: &CoeffVector, t: f64) -> Result<CoeffVector> {
        if t < 0.0 {
            return Err(Error::InvalidParameter("semigroup time must be nonnegative".into()));
        }
        if c.coeffs.len() != self.len() {
            return Err(Error::BackendMismatch { state: c.coeffs.len(), backend: self.len() });
        }
        let coeffs = c
            .coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(cj, mu)| cj * (mu * t).exp())
            .collect();
        Ok(CoeffVector { coeffs, dim: c.dim, cutoff: c.cutoff })
    }

    /// CSV dump `index,eigenvalue`.
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (j, mu) in self.eigenvalues.iter().enumerate() {
            let tag: Vec<String> = self.modes[j].p.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("({}),{mu}\n", tag.join(" ")));
        }
        out
    }
}

/// Leading eigenvalues (largest first) of the dense finite-difference
/// discretization of the 1-D eigenproblem on `[0, x_max]` with Dirichlet
/// ends, mesh `x_max / n`.
///
/// The self-adjoint form is discretized symmetrically; with
/// `c = x + h/2` the off-diagonal reduces to `e^{h²/4}/h²` and the
/// diagonal to `-2 cosh(xh) e^{-h²/4}/h²`, which avoids forming the
/// weight ratios directly.
pub fn fd_leading_eigenvalues(x_max: f64, n: usize, count: usize) -> Result<Vec<f64>> {
    if x_max <= 0.0 || n < 4 || count == 0 || count >= n {
        return Err(Error::InvalidParameter("bad finite-difference parameters".into()));
    }
    let h = x_max / n as f64;
    let m = n - 1; // interior points
    let off = (h * h / 4.0).exp() / (h * h);
    let diag: Vec<f64> = (1..n)
        .map(|i| {
            let x = i as f64 * h;
            -2.0 * (x * h).cosh() * (-h * h / 4.0).exp() / (h * h)
        })
        .collect();

    // Sturm-sequence count of eigenvalues strictly below lambda.
    let count_below = |lambda: f64| -> usize {
        let mut negatives = 0usize;
        let mut q = diag[0] - lambda;
        if q < 0.0 {
            negatives += 1;
        }
        for d in diag.iter().skip(1) {
            if q.abs() < 1e-300 {
                q = -1e-300;
            }
            q = d - lambda - off * off / q;
            if q < 0.0 {
                negatives += 1;
            }
        }
        negatives
    };

    // Gershgorin bounds.
    let lo0 = diag.iter().fold(f64::INFINITY, |a, &d| a.min(d)) - 2.0 * off;
    let hi0 = diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d)) + 2.0 * off;
    let mut out = Vec::with_capacity(count);
    for j in 1..=count {
        // j-th largest = smallest x with count_below(x) >= m - j + 1.
        let target = m - j + 1;
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-11 * (1.0 + mid.abs()) {
                break;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn eigenvalue_examples() {
        let p0 = ModeIndex::new(vec![0]).unwrap();
        assert_abs_diff_eq!(eigenvalue(&p0), -2.0);
        let p1 = ModeIndex::new(vec![1]).unwrap();
        assert_abs_diff_eq!(eigenvalue(&p1), -6.0);
        let p2 = ModeIndex::new(vec![1, 0]).unwrap();
        assert_abs_diff_eq!(eigenvalue(&p2), -4.0);
    }

    #[test]
    fn eigenfunction_dirichlet_boundary() {
        let p = ModeIndex::new(vec![0]).unwrap();
        assert_abs_diff_eq!(eigenfunction_eval(&p, &[0.0]), 0.0);
        let p2 = ModeIndex::new(vec![2, 1]).unwrap();
        assert_abs_diff_eq!(eigenfunction_eval(&p2, &[0.7, 0.0]), 0.0);
    }

    #[test]
    fn modes_sorted_with_leading_gap() {
        let basis = EigenBasis::new(1, 6, 24).unwrap();
        assert_abs_diff_eq!(basis.eigenvalues[0], -2.0);
        assert_abs_diff_eq!(basis.eigenvalues[1], -6.0);
        assert!(basis.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
        let basis2 = EigenBasis::new(2, 4, 16).unwrap();
        assert_abs_diff_eq!(basis2.eigenvalues[0], -2.0);
        assert!(basis2.eigenvalues.iter().all(|&mu| mu < 0.0));
    }

    #[test]
    fn discrete_orthonormality() {
        // Gauss-Hermite quadrature oracle at high order.
        let basis = EigenBasis::new(1, 5, 40).unwrap();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let dot: f64 = basis
                    .mode_values(i)
                    .iter()
                    .zip(basis.mode_values(j))
                    .zip(&basis.analysis_weights)
                    .map(|((a, b), w)| w * a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn analytic_normalization_matches_quadrature() {
        // The half-line factor carries √2; the quadrature-normalized
        // table should agree with the analytic values.
        let basis = EigenBasis::new(1, 3, 24).unwrap();
        for j in 0..3 {
            for (i, x) in basis.quad.nodes.iter().enumerate().step_by(5) {
                assert_abs_diff_eq!(
                    basis.mode_values(j)[i],
                    eigenfunction_eval(&basis.modes[j], x),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn coeff_round_trip() {
        let basis = EigenBasis::new(1, 8, 40).unwrap();
        // First mode projects to the first unit vector.
        let phi0: Field = basis.mode_values(0).to_vec();
        let c = basis.to_coeffs(&phi0).unwrap();
        assert_abs_diff_eq!(c.coeffs[0], 1.0, epsilon = 1e-10);
        for other in &c.coeffs[1..] {
            assert_abs_diff_eq!(*other, 0.0, epsilon = 1e-10);
        }
        // Zero field -> zero vector.
        let z = basis.to_coeffs(&vec![0.0; basis.quad.len()]).unwrap();
        assert!(z.coeffs.iter().all(|&v| v == 0.0));
        // Random 5-mode combination round-trips.
        let mut rng = crate::rng::substream(3, &[55]);
        let mut c = CoeffVector::zeros(&basis);
        for coeff in c.coeffs.iter_mut().take(5) {
            *coeff = rng.gen_range(-1.0..1.0);
        }
        let u = basis.from_coeffs(&c).unwrap();
        let back = basis.to_coeffs(&u).unwrap();
        for (a, b) in c.coeffs.iter().zip(&back.coeffs) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn semigroup_scaling_and_contraction() {
        let basis = EigenBasis::new(1, 8, 40).unwrap();
        let mut rng = crate::rng::substream(4, &[56]);
        let mut c = CoeffVector::zeros(&basis);
        for coeff in c.coeffs.iter_mut() {
            *coeff = rng.gen_range(-1.0..1.0);
        }
        // t = 0 identity.
        assert_eq!(basis.apply_semigroup(&c, 0.0).unwrap(), c);
        // Single leading mode decays by e^{-2t}.
        let mut single = CoeffVector::zeros(&basis);
        single.coeffs[0] = 1.0;
        let after = basis.apply_semigroup(&single, 0.5).unwrap();
        assert_abs_diff_eq!(after.coeffs[0], (-1.0f64).exp(), epsilon = 1e-14);
        // Norm contraction at the spectral-gap rate.
        for t in [0.1, 0.5, 1.0, 2.0] {
            let out = basis.apply_semigroup(&c, t).unwrap();
            assert!(out.h_norm() <= (-2.0 * t).exp() * c.h_norm() * (1.0 + 1e-10));
            assert!(out.h_norm().powi(2) <= (-4.0 * t).exp() * c.h_norm().powi(2) * (1.0 + 1e-10));
        }
        // Negative time rejected.
        assert!(basis.apply_semigroup(&c, -0.1).is_err());
    }

    #[test]
    fn cutoff_validation() {
        assert!(EigenBasis::new(1, 20, 24).is_err());
        assert!(EigenBasis::new(1, 12, 24).is_ok());
    }

    #[test]
    fn fd_spectrum_coarse() {
        // Coarse mesh sanity check; the acceptance suite runs the fine one.
        let eigs = fd_leading_eigenvalues(8.0, 800, 3).unwrap();
        assert_abs_diff_eq!(eigs[0], -2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(eigs[1], -6.0, epsilon = 5e-3);
        assert_abs_diff_eq!(eigs[2], -10.0, epsilon = 2e-2);
    }
}
