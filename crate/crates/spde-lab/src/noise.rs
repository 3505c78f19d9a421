//! Truncated Q-Wiener processes.
//!
//! The driving noise is `W(t,x) = Σ_k √a_k β_k(t) e_k(x)` with summable
//! mode variances and a uniformly bounded orthonormal basis of windowed
//! trigonometric functions. Paths are sampled on one-sided or two-sided
//! time grids from per-mode RNG substreams, so increments are
//! reproducible and independent across modes, trajectories, and sign
//! branches.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::substream;
use crate::weights::simpson;
use crate::{Error, Result};

const STREAM_NOISE: u64 = 0x4e4f;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Sin,
    Cos,
}

/// One tensor factor of a basis function: `sin(n x_i)` or `cos(n x_i)`
/// windowed to `[0, 2π]`.
#[derive(Debug, Clone, Copy)]
pub struct ModeComponent {
    pub n: u32,
    pub kind: TrigKind,
}

/// Windowed trigonometric basis with sup-norm ≤ 1 and unit L² norm per
/// mode. Each factor carries the prefactor `1/√π`, which normalizes the
/// L² norm on a `2π` window to one.
#[derive(Debug, Clone)]
pub struct BasisSpec {
    pub modes: Vec<Vec<ModeComponent>>,
    pub dim: usize,
    pub window_length: f64,
    pub normalization: f64,
}

impl BasisSpec {
    /// First `k` basis functions in dimension `d`. Modes are enumerated
    /// along the first coordinate (`sin x, cos x, sin 2x, cos 2x, ...`)
    /// with the remaining factors fixed to `sin x`, which keeps distinct
    /// modes orthogonal.
    pub fn build(k: usize, d: usize) -> Result<Self> {
        if k < 1 || d < 1 {
            return Err(Error::InvalidParameter("need K >= 1 and d >= 1".into()));
        }
        let modes = (0..k)
            .map(|j| {
                let mut comps = vec![ModeComponent { n: 1, kind: TrigKind::Sin }; d];
                comps[0] = ModeComponent {
                    n: (j / 2 + 1) as u32,
                    kind: if j % 2 == 0 { TrigKind::Sin } else { TrigKind::Cos },
                };
                comps
            })
            .collect();
        Ok(Self {
            modes,
            dim: d,
            window_length: 2.0 * std::f64::consts::PI,
            normalization: std::f64::consts::PI.powf(-0.5),
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Value of mode `j` at `x`; zero outside the window `[0, 2π]^d`.
    pub fn eval(&self, j: usize, x: &[f64]) -> f64 {
        let mut value = 1.0;
        for (comp, &xi) in self.modes[j].iter().zip(x) {
            if !(0.0..=self.window_length).contains(&xi) {
                return 0.0;
            }
            let arg = comp.n as f64 * xi;
            let trig = match comp.kind {
                TrigKind::Sin => arg.sin(),
                TrigKind::Cos => arg.cos(),
            };
            value *= self.normalization * trig;
        }
        value
    }
}

/// A trace-class covariance: mode variances `a_k` with `Σ a_k < ∞`,
/// a basis, and the base seed all samples derive from.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub a: Vec<f64>,
    pub basis: BasisSpec,
    pub seed: u64,
}

impl NoiseSpec {
    /// Default covariance `a_k = 2^{-k}`; the truncation tail after `K`
    /// modes is exactly `2^{-K}`.
    pub fn geometric(k: usize, d: usize, seed: u64) -> Result<Self> {
        let a = (1..=k).map(|i| 2f64.powi(-(i as i32))).collect();
        Ok(Self { a, basis: BasisSpec::build(k, d)?, seed })
    }

    pub fn with_variances(a: Vec<f64>, d: usize, seed: u64) -> Result<Self> {
        if a.is_empty() || a.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParameter("mode variances must be positive".into()));
        }
        let k = a.len();
        Ok(Self { a, basis: BasisSpec::build(k, d)?, seed })
    }

    /// `Σ a_k`.
    pub fn trace(&self) -> f64 {
        self.a.iter().sum()
    }
}

/// Sampled per-mode Wiener increments on a time grid.
#[derive(Debug, Clone)]
pub struct NoisePath {
    pub times: Vec<f64>,
    /// `increments[k][i]` is `β_k(t_{i+1}) - β_k(t_i)`, unscaled by `√a_k`.
    pub increments: Vec<Vec<f64>>,
    pub two_sided: bool,
}

impl NoisePath {
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    /// Values of `β_k` on the grid, anchored to zero at `t = 0` for
    /// two-sided paths and at the first grid point otherwise.
    pub fn mode_values(&self, k: usize) -> Vec<f64> {
        let anchor = if self.two_sided {
            self.times.iter().position(|&t| t == 0.0).unwrap_or(0)
        } else {
            0
        };
        let incs = &self.increments[k];
        let mut values = vec![0.0; self.times.len()];
        for i in anchor..incs.len() {
            values[i + 1] = values[i] + incs[i];
        }
        for i in (0..anchor).rev() {
            values[i] = values[i + 1] - incs[i];
        }
        values
    }

    /// CSV dump with columns `t,mode,increment` (increment over
    /// `[t_i, t_{i+1}]` reported at `t_i`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mode,increment\n");
        for (k, incs) in self.increments.iter().enumerate() {
            for (i, dv) in incs.iter().enumerate() {
                out.push_str(&format!("{:.17e},{k},{:.17e}\n", self.times[i], dv));
            }
        }
        out
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("grid needs at least two points".into()));
    }
    if grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::NonMonotoneGrid);
    }
    Ok(())
}

/// Samples increments for every mode on a one-sided grid. `traj` labels
/// the trajectory substream; identical `(spec, grid, traj)` triples
/// produce bit-identical paths.
pub fn sample_path(spec: &NoiseSpec, grid: &[f64], traj: u64) -> Result<NoisePath> {
    check_grid(grid)?;
    let steps = grid.len() - 1;
    let mut increments = Vec::with_capacity(spec.a.len());
    for k in 0..spec.a.len() {
        let mut rng = substream(spec.seed, &[STREAM_NOISE, k as u64, traj, 0]);
        let incs = (0..steps)
            .map(|i| {
                let dt = grid[i + 1] - grid[i];
                let z: f64 = rng.sample(StandardNormal);
                z * dt.sqrt()
            })
            .collect();
        increments.push(incs);
    }
    Ok(NoisePath { times: grid.to_vec(), increments, two_sided: false })
}

/// Two-sided path on a grid containing 0, glued from two independent
/// one-sided streams. Negative-time increments are drawn outward from 0,
/// so extending the grid further into the past leaves existing
/// increments untouched.
pub fn extend_two_sided(spec: &NoiseSpec, grid: &[f64], traj: u64) -> Result<NoisePath> {
    extend_two_sided_with(spec, grid, traj, 1)
}

/// Same as [`extend_two_sided`] with an explicit label for the negative
/// branch; changing it re-randomizes only `t < 0`.
pub fn extend_two_sided_with(
    spec: &NoiseSpec,
    grid: &[f64],
    traj: u64,
    neg_label: u64,
) -> Result<NoisePath> {
    check_grid(grid)?;
    let origin = grid
        .iter()
        .position(|&t| t == 0.0)
        .ok_or(Error::MissingOrigin)?;
    let steps = grid.len() - 1;
    let mut increments = Vec::with_capacity(spec.a.len());
    for k in 0..spec.a.len() {
        let mut incs = vec![0.0; steps];
        let mut pos = substream(spec.seed, &[STREAM_NOISE, k as u64, traj, 0]);
        for i in origin..steps {
            let dt = grid[i + 1] - grid[i];
            let z: f64 = pos.sample(StandardNormal);
            incs[i] = z * dt.sqrt();
        }
        let mut neg = substream(spec.seed, &[STREAM_NOISE, k as u64, traj, neg_label]);
        for i in (0..origin).rev() {
            let dt = grid[i + 1] - grid[i];
            let z: f64 = neg.sample(StandardNormal);
            incs[i] = z * dt.sqrt();
        }
        increments.push(incs);
    }
    Ok(NoisePath { times: grid.to_vec(), increments, two_sided: true })
}

/// Monte-Carlo and analytic sides of the isometry
/// `E|∫₀ᵀ Σ √a_k g_k dβ_k|² = Σ a_k ∫₀ᵀ g_k² ds`.
#[derive(Debug, Clone)]
pub struct IsometryProbe {
    pub mc_lhs: f64,
    pub mc_stderr: f64,
    pub analytic_rhs: f64,
}

/// Estimates the left side with `m` independent samples on `steps`
/// midpoint-sampled subintervals of `[0, T]`; `g(k, s)` is the
/// deterministic integrand of mode `k`.
pub fn ito_isometry_probe(
    g: &dyn Fn(usize, f64) -> f64,
    spec: &NoiseSpec,
    t_max: f64,
    steps: usize,
    m: usize,
    seed: u64,
) -> Result<IsometryProbe> {
    if m < 100 {
        return Err(Error::EnsembleTooSmall(m));
    }
    if t_max <= 0.0 || steps < 1 {
        return Err(Error::InvalidParameter("need T > 0 and steps >= 1".into()));
    }
    let dt = t_max / steps as f64;
    let sqrt_dt = dt.sqrt();
    // Precompute g at interval midpoints.
    let g_mid: Vec<Vec<f64>> = (0..spec.a.len())
        .map(|k| (0..steps).map(|i| g(k, (i as f64 + 0.5) * dt)).collect())
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for traj in 0..m {
        let mut x = 0.0;
        for (k, &ak) in spec.a.iter().enumerate() {
            let mut rng = substream(seed, &[STREAM_NOISE ^ 0x50, k as u64, traj as u64]);
            let mut acc = 0.0;
            for &gv in &g_mid[k] {
                let z: f64 = rng.sample(StandardNormal);
                acc += gv * z * sqrt_dt;
            }
            x += ak.sqrt() * acc;
        }
        let v = x * x;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / m as f64;
    let var = (sum_sq / m as f64 - mean * mean).max(0.0);
    let stderr = (var / m as f64).sqrt();
    let analytic: f64 = spec
        .a
        .iter()
        .enumerate()
        .map(|(k, &ak)| ak * simpson(&|s| g(k, s) * g(k, s), 0.0, t_max, 2 * steps.max(64)))
        .sum();
    Ok(IsometryProbe { mc_lhs: mean, mc_stderr: stderr, analytic_rhs: analytic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn fine_l2(basis: &BasisSpec, i: usize, j: usize) -> f64 {
        // 1D fine-grid quadrature on the window.
        let n = 20000;
        let h = basis.window_length / n as f64;
        (0..n)
            .map(|m| {
                let x = [(m as f64 + 0.5) * h];
                basis.eval(i, &x) * basis.eval(j, &x) * h
            })
            .sum()
    }

    #[test]
    fn basis_sup_norm_and_window() {
        let basis = BasisSpec::build(4, 1).unwrap();
        for j in 0..4 {
            let sup = (0..5000)
                .map(|i| basis.eval(j, &[i as f64 * 2.0 * PI / 5000.0]).abs())
                .fold(0.0, f64::max);
            assert!(sup <= 1.0);
        }
        // Supported on one window only.
        assert_eq!(basis.eval(0, &[-0.1]), 0.0);
        assert_eq!(basis.eval(0, &[2.0 * PI + 0.1]), 0.0);
    }

    #[test]
    fn basis_orthonormal_under_fine_quadrature() {
        let basis = BasisSpec::build(5, 1).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(fine_l2(&basis, i, j), expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn geometric_trace() {
        let spec = NoiseSpec::geometric(10, 1, 1).unwrap();
        assert_abs_diff_eq!(spec.trace(), 1.0 - 2f64.powi(-10), epsilon = 1e-15);
    }

    #[test]
    fn sample_path_deterministic() {
        let spec = NoiseSpec::geometric(3, 1, 42).unwrap();
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.02).collect();
        let a = sample_path(&spec, &grid, 0).unwrap();
        let b = sample_path(&spec, &grid, 0).unwrap();
        assert_eq!(a.increments, b.increments);
        let c = sample_path(&spec, &grid, 1).unwrap();
        assert_ne!(a.increments, c.increments);
    }

    #[test]
    fn sample_path_rejects_bad_grid() {
        let spec = NoiseSpec::geometric(1, 1, 0).unwrap();
        assert!(sample_path(&spec, &[0.0, 0.5, 0.4], 0).is_err());
    }

    #[test]
    fn increment_variance_within_three_sigma() {
        // Gaussian moment oracle: one Δt = 0.01 increment has variance
        // 0.01 with sampling error 0.01·√2/√M.
        let spec = NoiseSpec::geometric(1, 1, 7).unwrap();
        let m = 100_000;
        let grid = [0.0, 0.01];
        let mut sum_sq = 0.0;
        for traj in 0..m {
            let p = sample_path(&spec, &grid, traj).unwrap();
            sum_sq += p.increments[0][0] * p.increments[0][0];
        }
        let var = sum_sq / m as f64;
        let tol = 3.0 * 0.01 * 2f64.sqrt() / (m as f64).sqrt();
        assert!((var - 0.01).abs() <= tol, "var = {var}, tol = {tol}");
    }

    #[test]
    fn two_sided_anchored_at_zero() {
        let spec = NoiseSpec::geometric(2, 1, 3).unwrap();
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.1).collect();
        let p = extend_two_sided(&spec, &grid, 0).unwrap();
        for k in 0..2 {
            let vals = p.mode_values(k);
            assert_eq!(vals[10], 0.0);
        }
    }

    #[test]
    fn two_sided_requires_origin() {
        let spec = NoiseSpec::geometric(1, 1, 3).unwrap();
        let grid = [-0.95, -0.45, 0.05, 0.55];
        assert!(matches!(extend_two_sided(&spec, &grid, 0), Err(Error::MissingOrigin)));
    }

    #[test]
    fn negative_branch_reseeding_leaves_positive_side() {
        let spec = NoiseSpec::geometric(2, 1, 9).unwrap();
        let grid: Vec<f64> = (-5..=5).map(|i| i as f64 * 0.2).collect();
        let a = extend_two_sided_with(&spec, &grid, 0, 1).unwrap();
        let b = extend_two_sided_with(&spec, &grid, 0, 2).unwrap();
        for k in 0..2 {
            assert_eq!(a.increments[k][5..], b.increments[k][5..]);
            assert_ne!(a.increments[k][..5], b.increments[k][..5]);
        }
    }

    #[test]
    fn burn_in_extension_shares_increments() {
        let spec = NoiseSpec::geometric(2, 1, 9).unwrap();
        let short: Vec<f64> = (-5..=5).map(|i| i as f64 * 0.2).collect();
        let long: Vec<f64> = (-10..=5).map(|i| i as f64 * 0.2).collect();
        let a = extend_two_sided(&spec, &short, 0).unwrap();
        let b = extend_two_sided(&spec, &long, 0).unwrap();
        for k in 0..2 {
            assert_eq!(a.increments[k][..], b.increments[k][5..]);
        }
    }

    #[test]
    fn disjoint_increments_uncorrelated() {
        // MC correlation oracle: sample correlation decays like M^{-1/2}.
        let spec = NoiseSpec::geometric(1, 1, 11).unwrap();
        let grid = [-1.0, 0.0, 1.0];
        let m = 20_000;
        let (mut sxy, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for traj in 0..m {
            let p = extend_two_sided(&spec, &grid, traj).unwrap();
            let (x, y) = (p.increments[0][0], p.increments[0][1]);
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let mf = m as f64;
        let corr = (sxy / mf - sx * sy / mf / mf)
            / ((sxx / mf - (sx / mf).powi(2)).sqrt() * (syy / mf - (sy / mf).powi(2)).sqrt());
        assert!(corr.abs() <= 3.0 / mf.sqrt(), "corr = {corr}");
    }

    #[test]
    fn isometry_constant_integrand() {
        // E|β(1)|² = 1.
        let spec = NoiseSpec::with_variances(vec![1.0], 1, 0).unwrap();
        let probe = ito_isometry_probe(&|_, _| 1.0, &spec, 1.0, 200, 10_000, 5).unwrap();
        assert_abs_diff_eq!(probe.analytic_rhs, 1.0, epsilon = 1e-10);
        assert!((probe.mc_lhs - 1.0).abs() <= 3.0 * probe.mc_stderr);
    }

    #[test]
    fn isometry_linear_integrand() {
        // Analytic oracle: a₁ ∫₀¹ s² ds = 2/3.
        let spec = NoiseSpec::with_variances(vec![2.0], 1, 0).unwrap();
        let probe = ito_isometry_probe(&|_, s| s, &spec, 1.0, 200, 10_000, 6).unwrap();
        assert_abs_diff_eq!(probe.analytic_rhs, 2.0 / 3.0, epsilon = 1e-9);
        assert!((probe.mc_lhs - probe.analytic_rhs).abs() <= 3.0 * probe.mc_stderr);
    }

    #[test]
    fn isometry_zero_integrand() {
        let spec = NoiseSpec::with_variances(vec![1.0], 1, 0).unwrap();
        let probe = ito_isometry_probe(&|_, _| 0.0, &spec, 1.0, 50, 200, 0).unwrap();
        assert_eq!(probe.mc_lhs, 0.0);
        assert_eq!(probe.analytic_rhs, 0.0);
    }

    #[test]
    fn isometry_rejects_small_ensembles() {
        let spec = NoiseSpec::with_variances(vec![1.0], 1, 0).unwrap();
        assert!(ito_isometry_probe(&|_, _| 1.0, &spec, 1.0, 10, 99, 0).is_err());
    }
}
