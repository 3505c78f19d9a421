//! Whole-space heat semigroup on a periodic truncation, plus the explicit
//! constants of the uniform second-moment bound.
//!
//! Whole-space dynamics are approximated on the torus `[-r, r)^d`, where
//! the Gaussian-kernel semigroup becomes the exact Fourier multiplier
//! `e^{-|k|²t}` of the truncated operator. The truncation radius is chosen
//! by callers so the weight's excluded mass is negligible.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::weights::Quadrature;
use crate::{Error, Field, Result};

/// Gaussian heat kernel `G(t,x) = (4πt)^{-d/2} e^{-|x|²/(4t)}`.
pub fn green_kernel(t: f64, x: &[f64]) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(format!("kernel time must be positive, got {t}")));
    }
    let d = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((4.0 * std::f64::consts::PI * t).powf(-d / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// `∫ G²(t,y) dy = (8πt)^{-d/2}`.
pub fn kernel_l2sq(t: f64, d: usize) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(format!("kernel time must be positive, got {t}")));
    }
    Ok((8.0 * std::f64::consts::PI * t).powf(-(d as f64) / 2.0))
}

/// `∫₁^∞ τ^{-d/2} dτ`, the tail integral that separates d ≥ 3 from lower
/// dimensions. Returns `None` when it diverges.
pub fn kernel_tail_integral(d: usize) -> Option<f64> {
    if d >= 3 {
        Some(2.0 / (d as f64 - 2.0))
    } else {
        None
    }
}

/// Inputs echoed into a [`BoundReport`].
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub phi_sup: f64,
    pub phi_l1: f64,
    pub rho_sup: f64,
    pub rho_l1: f64,
    pub sigma0: f64,
    pub trace_a: f64,
    pub dim: usize,
    pub init_l2_sq: f64,
}

/// Assembled constants of the uniform bound
/// `sup_t E‖u(t)‖²_H ≤ 3(I₁ + I₂ + I₃)`.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub term_i1: f64,
    pub term_i2: f64,
    pub term_i3: f64,
    pub total: f64,
    /// False when d < 3 and the kernel tail integral diverges.
    pub bounded: bool,
    pub inputs: BoundInputs,
}

impl BoundReport {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.term_i1, self.term_i2, self.term_i3, self.total, self.bounded
        )
    }

    pub fn to_text(&self) -> String {
        format!(
            "I1 = {:.6}\nI2 = {:.6}\nI3 = {:.6}\ntotal = 3(I1+I2+I3) = {:.6}\nbounded = {}\n",
            self.term_i1, self.term_i2, self.term_i3, self.total, self.bounded
        )
    }
}

/// Assembles the three moment-bound terms from the norms of the reaction
/// envelope φ, the weight ρ, the noise trace, and the initial energy.
/// The factor-2 splittings of the derivation are kept, which makes the
/// assembled constant the conservative (larger) of the two printed
/// readings.
pub fn uniform_moment_bound(inputs: BoundInputs) -> BoundReport {
    let d = inputs.dim;
    let i1 = inputs.rho_sup * inputs.init_l2_sq;
    match kernel_tail_integral(d) {
        Some(tail) => {
            let i2 = 2.0 * inputs.phi_sup.powi(2) * inputs.rho_l1
                + 2.0
                    * (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0)
                    * inputs.rho_l1
                    * inputs.phi_l1.powi(2)
                    * tail.powi(2);
            let i3 = inputs.rho_l1 * inputs.trace_a * inputs.sigma0.powi(2) * (tail + 1.0);
            let total = 3.0 * (i1 + i2 + i3);
            BoundReport { term_i1: i1, term_i2: i2, term_i3: i3, total, bounded: true, inputs }
        }
        None => BoundReport {
            term_i1: i1,
            term_i2: f64::INFINITY,
            term_i3: f64::INFINITY,
            total: f64::INFINITY,
            bounded: false,
            inputs,
        },
    }
}

/// Periodic grid `[-r, r)^d` with `res` points per dimension, laid out
/// row-major with the last coordinate fastest (matching
/// [`Quadrature::torus`]).
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    pub r: f64,
    pub res: usize,
    pub dim: usize,
}

impl TorusGrid {
    pub fn new(r: f64, res: usize, dim: usize) -> Result<Self> {
        if r <= 0.0 || res < 2 || dim == 0 {
            return Err(Error::InvalidParameter("torus grid needs r > 0, res >= 2, d >= 1".into()));
        }
        Ok(Self { r, res, dim })
    }

    pub fn len(&self) -> usize {
        self.res.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.r / self.res as f64
    }

    /// Cell volume of one grid point.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinates of the flat index.
    pub fn node(&self, mut flat: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut out = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            out[axis] = -self.r + (flat % self.res) as f64 * h;
            flat /= self.res;
        }
        out
    }

    /// Quadrature rule over the same nodes in the same order.
    pub fn quadrature(&self) -> Quadrature {
        Quadrature::torus(self.dim, self.r, self.res).expect("validated grid")
    }
}

/// The heat semigroup `S(t)` realized as the Fourier multiplier
/// `e^{-|k|²t}` on a torus grid.
pub struct TorusHeat {
    pub grid: TorusGrid,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    /// `|k|²` per flat spectral index.
    ksq: Vec<f64>,
}

impl TorusHeat {
    pub fn new(grid: TorusGrid) -> Result<Self> {
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(grid.res);
        let fft_inv = planner.plan_fft_inverse(grid.res);
        let base = std::f64::consts::PI / grid.r;
        let freq: Vec<f64> = (0..grid.res)
            .map(|m| {
                let m = if m <= grid.res / 2 { m as i64 } else { m as i64 - grid.res as i64 };
                (base * m as f64).powi(2)
            })
            .collect();
        let mut ksq = vec![0.0; grid.len()];
        for (flat, v) in ksq.iter_mut().enumerate() {
            let mut idx = flat;
            let mut total = 0.0;
            for _ in 0..grid.dim {
                total += freq[idx % grid.res];
                idx /= grid.res;
            }
            *v = total;
        }
        Ok(Self { grid, fft_fwd, fft_inv, ksq })
    }

    /// Largest resolved `|k|²`.
    pub fn ksq_max(&self) -> f64 {
        self.grid.dim as f64 * (std::f64::consts::PI / self.grid.spacing()).powi(2)
    }

    /// Errors when the continuum kernel at time `t` is narrower than a
    /// grid cell (`4t < h²`), the regime where the multiplier no longer
    /// tracks the whole-space convolution.
    pub fn check_resolution(&self, t: f64) -> Result<()> {
        let h = self.grid.spacing();
        if t > 0.0 && 4.0 * t < h * h {
            return Err(Error::GridTooCoarse { t, tail: h * h / 4.0, limit: t });
        }
        Ok(())
    }

    /// `S(t)u` for `t ≥ 0`; `t = 0` is the identity.
    pub fn apply(&self, u: &Field, t: f64) -> Result<Field> {
        if u.len() != self.grid.len() {
            return Err(Error::BackendMismatch { state: u.len(), backend: self.grid.len() });
        }
        if t < 0.0 {
            return Err(Error::InvalidParameter("semigroup time must be nonnegative".into()));
        }
        if t == 0.0 {
            return Ok(u.clone());
        }
        let mut data: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        for (c, &k2) in data.iter_mut().zip(&self.ksq) {
            *c *= (-k2 * t).exp();
        }
        self.transform(&mut data, true);
        let norm = 1.0 / self.grid.len() as f64;
        Ok(data.iter().map(|c| c.re * norm).collect())
    }

    /// In-place FFT along every axis.
    fn transform(&self, data: &mut [Complex<f64>], inverse: bool) {
        let n = self.grid.res;
        let d = self.grid.dim;
        let fft = if inverse { &self.fft_inv } else { &self.fft_fwd };
        let mut line = vec![Complex::new(0.0, 0.0); n];
        // Axis `a` has stride n^(d-1-a); gather, transform, scatter.
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            let lines = data.len() / n;
            for l in 0..lines {
                // Base offset for the l-th line along this axis.
                let block = l / stride;
                let offset = block * stride * n + l % stride;
                for i in 0..n {
                    line[i] = data[offset + i * stride];
                }
                fft.process(&mut line);
                for i in 0..n {
                    data[offset + i * stride] = line[i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::PI;

    #[test]
    fn kernel_value_at_origin() {
        let v = green_kernel(1.0, &[0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, (4.0 * PI).powf(-1.5), epsilon = 1e-12);
        assert!((v - 0.022449).abs() < 1e-6);
    }

    #[test]
    fn kernel_symmetric_and_positive() {
        let a = green_kernel(0.3, &[0.7, -0.2]).unwrap();
        let b = green_kernel(0.3, &[-0.7, 0.2]).unwrap();
        assert_abs_diff_eq!(a, b);
        assert!(a > 0.0);
        assert!(green_kernel(0.0, &[0.0]).is_err());
    }

    #[test]
    fn kernel_mass_one_by_quadrature() {
        // Quadrature oracle: ∫ G(t,·) dx = 1 for several t, d = 1.
        for t in [0.1f64, 1.0, 10.0] {
            let n = 20000;
            let l = 40.0f64.max(20.0 * t.sqrt());
            let h = 2.0 * l / n as f64;
            let mass: f64 = (0..n)
                .map(|i| h * green_kernel(t, &[-l + (i as f64 + 0.5) * h]).unwrap())
                .sum();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn kernel_l2sq_matches_quadrature() {
        let n = 40000;
        let h = 40.0 / n as f64;
        let direct: f64 = (0..n)
            .map(|i| {
                let x = -20.0 + (i as f64 + 0.5) * h;
                h * green_kernel(1.0, &[x]).unwrap().powi(2)
            })
            .sum();
        assert_abs_diff_eq!(kernel_l2sq(1.0, 1).unwrap(), direct, epsilon = 1e-10);
        assert_abs_diff_eq!(kernel_l2sq(1.0, 3).unwrap(), (8.0 * PI).powf(-1.5), epsilon = 1e-12);
    }

    #[test]
    fn tail_integral_dimension_split() {
        // Analytic tail oracle: ∫₁^∞ τ^{-3/2} dτ = 2; diverges for d = 2.
        assert_abs_diff_eq!(kernel_tail_integral(3).unwrap(), 2.0);
        assert!(kernel_tail_integral(2).is_none());
    }

    #[test]
    fn moment_bound_reference_point() {
        // Independent symbolic evaluation of the constant chain with all
        // inputs equal to one, d = 3.
        let report = uniform_moment_bound(BoundInputs {
            phi_sup: 1.0,
            phi_l1: 1.0,
            rho_sup: 1.0,
            rho_l1: 1.0,
            sigma0: 1.0,
            trace_a: 1.0,
            dim: 3,
            init_l2_sq: 1.0,
        });
        assert_abs_diff_eq!(report.term_i1, 1.0);
        assert_abs_diff_eq!(report.term_i2, 2.0 + 2.0 * (4.0 * PI).powf(-1.5) * 4.0, epsilon = 1e-12);
        assert!((report.term_i2 - 2.17959).abs() < 1e-5);
        assert_abs_diff_eq!(report.term_i3, 3.0);
        assert!((report.total - 18.5388).abs() < 1e-3);
        assert!(report.bounded);
    }

    #[test]
    fn moment_bound_degenerate_cases() {
        let mut inputs = BoundInputs {
            phi_sup: 1.0,
            phi_l1: 1.0,
            rho_sup: 1.0,
            rho_l1: 1.0,
            sigma0: 0.0,
            trace_a: 1.0,
            dim: 3,
            init_l2_sq: 1.0,
        };
        assert_eq!(uniform_moment_bound(inputs.clone()).term_i3, 0.0);
        inputs.dim = 2;
        let report = uniform_moment_bound(inputs);
        assert!(!report.bounded);
        assert!(report.total.is_infinite());
    }

    fn heat_1d(res: usize) -> TorusHeat {
        TorusHeat::new(TorusGrid::new(8.0, res, 1).unwrap()).unwrap()
    }

    #[test]
    fn identity_at_time_zero() {
        let heat = heat_1d(64);
        let u: Field = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(heat.apply(&u, 0.0).unwrap(), u);
    }

    #[test]
    fn single_mode_scaling() {
        let heat = heat_1d(64);
        let k = PI / 8.0 * 3.0; // wavenumber of mode 3
        let u: Field = (0..64).map(|i| (k * heat.grid.node(i)[0]).cos()).collect();
        let t = 0.4;
        let v = heat.apply(&u, t).unwrap();
        let scale = (-k * k * t).exp();
        for (ui, vi) in u.iter().zip(&v) {
            assert_abs_diff_eq!(*vi, scale * ui, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_direct_periodized_convolution() {
        // Direct convolution oracle with the periodized Gaussian kernel.
        let heat = heat_1d(64);
        let g = &heat.grid;
        let u: Field = (0..g.len())
            .map(|i| {
                let x = g.node(i)[0];
                (-x * x / 2.0).exp()
            })
            .collect();
        let t = 0.5;
        let v = heat.apply(&u, t).unwrap();
        let h = g.spacing();
        for i in (0..g.len()).step_by(7) {
            let xi = g.node(i)[0];
            let mut direct = 0.0;
            for (j, &uj) in u.iter().enumerate() {
                let xj = g.node(j)[0];
                for image in -3i32..=3 {
                    direct +=
                        h * uj * green_kernel(t, &[xi - xj + image as f64 * 2.0 * g.r]).unwrap();
                }
            }
            assert_abs_diff_eq!(v[i], direct, epsilon = 1e-8);
        }
    }

    #[test]
    fn semigroup_law_and_mass_conservation() {
        let heat = heat_1d(64);
        let mut rng = crate::rng::substream(1, &[99]);
        let u: Field = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = heat.apply(&heat.apply(&u, 0.3).unwrap(), 0.7).unwrap();
        let b = heat.apply(&u, 1.0).unwrap();
        for (ai, bi) in a.iter().zip(&b) {
            assert_abs_diff_eq!(*ai, bi, epsilon = 1e-8);
        }
        let mean_u: f64 = u.iter().sum::<f64>() / 64.0;
        let mean_b: f64 = b.iter().sum::<f64>() / 64.0;
        assert_abs_diff_eq!(mean_u, mean_b, epsilon = 1e-10);
    }

    #[test]
    fn l2_contraction_and_positivity() {
        let heat = heat_1d(32);
        let mut rng = crate::rng::substream(2, &[98]);
        for t in [0.1, 1.0, 5.0] {
            let u: Field = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v = heat.apply(&u, t).unwrap();
            let nu: f64 = u.iter().map(|x| x * x).sum();
            let nv: f64 = v.iter().map(|x| x * x).sum();
            assert!(nv <= nu * (1.0 + 1e-12));
        }
        let positive: Field = (0..32).map(|i| (i as f64 * 0.4).sin().abs()).collect();
        let v = heat.apply(&positive, 0.7).unwrap();
        assert!(v.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn three_dimensional_multiplier() {
        let heat = TorusHeat::new(TorusGrid::new(4.0, 8, 3).unwrap()).unwrap();
        let g = &heat.grid;
        let k = PI / 4.0;
        let u: Field = (0..g.len())
            .map(|i| {
                let x = g.node(i);
                (k * x[0]).sin() * (k * x[1]).cos() * (2.0 * k * x[2]).sin()
            })
            .collect();
        let t = 0.3;
        let scale = (-(k * k + k * k + 4.0 * k * k) * t).exp();
        let v = heat.apply(&u, t).unwrap();
        for (ui, vi) in u.iter().zip(&v) {
            assert_abs_diff_eq!(*vi, scale * ui, epsilon = 1e-10);
        }
    }

    #[test]
    fn resolution_check() {
        let heat = heat_1d(16); // spacing 1
        assert!(heat.check_resolution(0.05).is_err());
        assert!(heat.check_resolution(0.5).is_ok());
        assert!(heat.check_resolution(0.0).is_ok());
    }
}
