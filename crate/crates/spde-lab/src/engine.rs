//! Mild-solution time stepping.
//!
//! The scheme is exponential Euler: the linear semigroup is applied
//! exactly over each step (Fourier multiplier on the torus, eigenvalue
//! scaling in the Hermite basis) while reaction and noise terms are
//! frozen at the left endpoint,
//! `u⁺ = S(dt)[u + dt·f(u) + σ(u)·ΔW]`.
//! On top of the stepper sit the Picard fixed-point iteration, the
//! two-sided stochastic convolution, the stationary-solution iteration,
//! and common-noise stability pairs.

use std::sync::Arc;

use rand::Rng;

use crate::heat::TorusHeat;
use crate::noise::{extend_two_sided_with, sample_path, BasisSpec, NoisePath, NoiseSpec};
use crate::rng::substream;
use crate::spectral::EigenBasis;
use crate::stats::{moment_series, DecaySeries};
use crate::weights::WeightFunction;
use crate::{Error, Field, Result};

type PointFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type EnvelopeFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Reaction and diffusion coefficients with their declared constants.
///
/// The declared Lipschitz constant, envelopes, uniform σ bound and the
/// norm cutoff are contracts, not derived quantities; [`ReactionSpec::probe`]
/// spot-checks them on random samples.
#[derive(Clone)]
pub struct ReactionSpec {
    pub f: PointFn,
    pub sigma: PointFn,
    /// Declared Lipschitz constant for both `f` and `σ` in `u`.
    pub lipschitz: f64,
    /// Optional envelope `|f(x,u)| ≤ φ(x)`.
    pub f_envelope: Option<EnvelopeFn>,
    /// Optional envelope `|σ(x,u)| ≤ ψ(x)`.
    pub sigma_envelope: Option<EnvelopeFn>,
    /// Optional uniform bound `|σ| ≤ σ₀`.
    pub sigma_sup: Option<f64>,
    /// Optional norm cutoff: the reaction is ramped to zero as
    /// `‖u‖_{L²}` approaches this value.
    pub cutoff: Option<f64>,
}

impl ReactionSpec {
    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_, _| 0.0),
            sigma: Arc::new(|_, _| 0.0),
            lipschitz: 0.0,
            f_envelope: None,
            sigma_envelope: None,
            sigma_sup: Some(0.0),
            cutoff: None,
        }
    }

    /// Pure additive noise: `f = 0`, `σ ≡ scale`.
    pub fn additive(scale: f64) -> Self {
        Self {
            f: Arc::new(|_, _| 0.0),
            sigma: Arc::new(move |_, _| scale),
            lipschitz: 0.0,
            f_envelope: None,
            sigma_envelope: None,
            sigma_sup: Some(scale.abs()),
            cutoff: None,
        }
    }

    /// `f(u) = L sin u`, `σ(u) = L sin u`: both Lipschitz with constant
    /// `L`, both vanishing at zero.
    pub fn lipschitz_pair(l: f64) -> Self {
        Self {
            f: Arc::new(move |_, u| l * u.sin()),
            sigma: Arc::new(move |_, u| l * u.sin()),
            lipschitz: l,
            f_envelope: None,
            sigma_envelope: None,
            sigma_sup: Some(l.abs()),
            cutoff: None,
        }
    }

    /// Gaussian-envelope reaction `f(x,u) = e^{-|x|²} sin u` with a
    /// uniformly bounded diffusion `σ(u) = σ₀ cos u`.
    pub fn bounded_gaussian(sigma0: f64) -> Self {
        let envelope: EnvelopeFn =
            Arc::new(|x: &[f64]| (-x.iter().map(|v| v * v).sum::<f64>()).exp());
        let env_f = envelope.clone();
        Self {
            f: Arc::new(move |x, u| env_f(x) * u.sin()),
            sigma: Arc::new(move |_, u| sigma0 * u.cos()),
            lipschitz: 1.0f64.max(sigma0.abs()),
            f_envelope: Some(envelope),
            sigma_envelope: None,
            sigma_sup: Some(sigma0.abs()),
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, n: f64) -> Self {
        self.cutoff = Some(n);
        self
    }

    /// Smooth indicator ramping `1 → 0` over `[0.9N, N]` in `‖u‖_{L²}`;
    /// a hard indicator would break the Lipschitz contract.
    pub fn cutoff_factor(&self, l2_norm: f64) -> f64 {
        match self.cutoff {
            None => 1.0,
            Some(n) => {
                let lo = 0.9 * n;
                if l2_norm <= lo {
                    1.0
                } else if l2_norm >= n {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * (l2_norm - lo) / (n - lo)).cos())
                }
            }
        }
    }

    /// Spot-checks the declared constants on random probes: Lipschitz
    /// quotients for `f` and `σ`, and any active envelopes.
    pub fn probe(&self, dim: usize, seed: u64, trials: usize) -> Result<()> {
        let mut rng = substream(seed, &[0x7072, dim as u64]);
        let slack = 1.0 + 1e-9;
        for trial in 0..trials {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let u1: f64 = rng.gen_range(-5.0..5.0);
            let u2: f64 = rng.gen_range(-5.0..5.0);
            let df = ((self.f)(&x, u1) - (self.f)(&x, u2)).abs();
            let ds = ((self.sigma)(&x, u1) - (self.sigma)(&x, u2)).abs();
            let allowed = self.lipschitz * (u1 - u2).abs() * slack + 1e-12;
            if df > allowed || ds > allowed {
                return Err(Error::InvalidParameter(format!(
                    "Lipschitz probe {trial} failed: |Δf|={df:.3e}, |Δσ|={ds:.3e}, \
                     allowed {allowed:.3e}"
                )));
            }
            if let Some(phi) = &self.f_envelope {
                if (self.f)(&x, u1).abs() > phi(&x) * slack + 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "envelope probe {trial} failed for f"
                    )));
                }
            }
            if let Some(psi) = &self.sigma_envelope {
                if (self.sigma)(&x, u1).abs() > psi(&x) * slack + 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "envelope probe {trial} failed for sigma"
                    )));
                }
            }
            if let Some(s0) = self.sigma_sup {
                if (self.sigma)(&x, u1).abs() > s0 * slack + 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "uniform sigma bound probe {trial} failed"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The two smallness conditions controlling the nonlinear stationary
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallnessCertificate {
    pub l: f64,
    pub trace: f64,
    /// `L² + L² Σa_k`.
    pub cond1: f64,
    /// `L²/2 + L² Σa_k`.
    pub cond2: f64,
    pub eligible: bool,
}

impl SmallnessCertificate {
    pub fn new(l: f64, trace: f64) -> Self {
        let l2 = l * l;
        let cond1 = l2 + l2 * trace;
        let cond2 = l2 / 2.0 + l2 * trace;
        Self { l, trace, cond1, cond2, eligible: cond1 < 1.0 && cond2 < 2.0 / 3.0 }
    }
}

/// Theoretical Picard contraction factor `γ = L²T/2 · (1 + ½ Σa_k)`.
pub fn picard_gamma(l: f64, t: f64, trace: f64) -> f64 {
    l * l * t / 2.0 * (1.0 + 0.5 * trace)
}

/// Contraction ratio of the stationary iteration, `L²/2 · (1 + Σa_k)`.
pub fn iteration_ratio(l: f64, trace: f64) -> f64 {
    l * l / 2.0 * (1.0 + trace)
}

/// Decay rate of the nonlinear stability envelope,
/// `r = 2 − 3(L²/2 + L² Σa_k)`.
pub fn gronwall_rate(l: f64, trace: f64) -> f64 {
    2.0 - 3.0 * (l * l / 2.0 + l * l * trace)
}

/// Stationary variance of the single-mode linear response,
/// `a / (2|μ|)`.
pub fn ou_stationary_variance(a: f64, mu: f64) -> f64 {
    a / (2.0 * mu.abs())
}

/// Spatial discretization backing the stepper: node set, norms, exact
/// semigroup, and the noise basis sampled at the nodes.
pub trait Backend: Send + Sync {
    fn tag(&self) -> &'static str;
    fn n_nodes(&self) -> usize;
    fn node(&self, i: usize) -> &[f64];
    /// Exact application of `S(dt)` to nodal values.
    fn semigroup(&self, u: Field, dt: f64) -> Result<Field>;
    /// Squared weighted norm `‖u‖²_H`.
    fn h_norm_sq(&self, u: &Field) -> Result<f64>;
    /// Squared unweighted norm `‖u‖²_{L²}` (used by the cutoff).
    fn l2_norm_sq(&self, u: &Field) -> Result<f64>;
    /// Noise basis functions at the nodes, one field per mode.
    fn noise_modes(&self) -> &[Field];
    /// Rejects step sizes the discretization cannot resolve.
    fn check_dt(&self, _dt: f64) -> Result<()> {
        Ok(())
    }
}

/// Periodic Fourier discretization with the heat semigroup as a
/// multiplier; the weight enters only through the norm.
pub struct TorusBackend {
    pub heat: TorusHeat,
    nodes: Vec<Vec<f64>>,
    h_weights: Vec<f64>,
    cell: f64,
    modes: Vec<Field>,
}

impl TorusBackend {
    pub fn new(heat: TorusHeat, rho: &WeightFunction, basis: &BasisSpec) -> Result<Self> {
        let grid = &heat.grid;
        if basis.dim != grid.dim {
            return Err(Error::InvalidParameter("noise basis dimension mismatch".into()));
        }
        if grid.r < basis.window_length {
            return Err(Error::InvalidParameter(format!(
                "torus half-length {} cannot contain the noise window {}",
                grid.r, basis.window_length
            )));
        }
        let cell = grid.cell();
        let nodes: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.node(i)).collect();
        let h_weights: Vec<f64> = nodes.iter().map(|x| cell * rho.eval(x)).collect();
        let modes: Vec<Field> = (0..basis.len())
            .map(|k| nodes.iter().map(|x| basis.eval(k, x)).collect())
            .collect();
        Ok(Self { heat, nodes, h_weights, cell, modes })
    }
}

impl Backend for TorusBackend {
    fn tag(&self) -> &'static str {
        "heat-torus"
    }

    fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i]
    }

    fn semigroup(&self, u: Field, dt: f64) -> Result<Field> {
        self.heat.apply(&u, dt)
    }

    fn h_norm_sq(&self, u: &Field) -> Result<f64> {
        if u.len() != self.nodes.len() {
            return Err(Error::BackendMismatch { state: u.len(), backend: self.nodes.len() });
        }
        Ok(u.iter().zip(&self.h_weights).map(|(v, w)| w * v * v).sum())
    }

    fn l2_norm_sq(&self, u: &Field) -> Result<f64> {
        if u.len() != self.nodes.len() {
            return Err(Error::BackendMismatch { state: u.len(), backend: self.nodes.len() });
        }
        Ok(self.cell * u.iter().map(|v| v * v).sum::<f64>())
    }

    fn noise_modes(&self) -> &[Field] {
        &self.modes
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        self.heat.check_resolution(dt)
    }
}

/// How noise basis functions are represented on the spectral backend.
pub enum NoiseForcing {
    /// Windowed trigonometric basis sampled at the quadrature nodes.
    Window(BasisSpec),
    /// The operator's own leading eigenfunctions — single-mode dynamics
    /// become scalar Ornstein-Uhlenbeck processes, which makes this the
    /// calibration configuration.
    EigenModes(usize),
}

/// Hermite eigenbasis discretization on the half-space; the semigroup
/// is exact eigenvalue scaling.
pub struct SpectralBackend {
    pub basis: EigenBasis,
    modes: Vec<Field>,
}

impl SpectralBackend {
    pub fn new(basis: EigenBasis, forcing: NoiseForcing) -> Result<Self> {
        let modes: Vec<Field> = match forcing {
            NoiseForcing::Window(spec) => {
                if spec.dim != basis.dim {
                    return Err(Error::InvalidParameter(
                        "noise basis dimension mismatch".into(),
                    ));
                }
                (0..spec.len())
                    .map(|k| basis.quad.nodes.iter().map(|x| spec.eval(k, x)).collect())
                    .collect()
            }
            NoiseForcing::EigenModes(count) => {
                if count > basis.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{count} eigenmode forcings requested, basis has {}",
                        basis.len()
                    )));
                }
                (0..count).map(|k| basis.mode_values(k).to_vec()).collect()
            }
        };
        Ok(Self { basis, modes })
    }

    /// Leading spectral coefficient of a nodal state.
    pub fn leading_coeff(&self, u: &Field) -> Result<f64> {
        Ok(self.basis.to_coeffs(u)?.coeffs[0])
    }
}

impl Backend for SpectralBackend {
    fn tag(&self) -> &'static str {
        "gauss-spectral"
    }

    fn n_nodes(&self) -> usize {
        self.basis.quad.len()
    }

    fn node(&self, i: usize) -> &[f64] {
        &self.basis.quad.nodes[i]
    }

    fn semigroup(&self, u: Field, dt: f64) -> Result<Field> {
        let c = self.basis.to_coeffs(&u)?;
        let c = self.basis.apply_semigroup(&c, dt)?;
        self.basis.from_coeffs(&c)
    }

    fn h_norm_sq(&self, u: &Field) -> Result<f64> {
        if u.len() != self.n_nodes() {
            return Err(Error::BackendMismatch { state: u.len(), backend: self.n_nodes() });
        }
        Ok(u.iter()
            .zip(self.basis.node_weights())
            .map(|(v, w)| w * v * v)
            .sum())
    }

    fn l2_norm_sq(&self, u: &Field) -> Result<f64> {
        if u.len() != self.n_nodes() {
            return Err(Error::BackendMismatch { state: u.len(), backend: self.n_nodes() });
        }
        Ok(u.iter()
            .zip(&self.basis.quad.weights)
            .map(|(v, w)| w * v * v)
            .sum())
    }

    fn noise_modes(&self) -> &[Field] {
        &self.modes
    }
}

/// One exponential-Euler step with the reaction evaluated at a
/// reference state `v` (the Picard iteration advances `w` along a
/// frozen previous iterate; plain stepping passes `v = w`).
fn psi_step(
    backend: &dyn Backend,
    w: &Field,
    v: &Field,
    reaction: &ReactionSpec,
    dt: f64,
    dw_scaled: &[f64],
) -> Result<Field> {
    let n = backend.n_nodes();
    if w.len() != n {
        return Err(Error::BackendMismatch { state: w.len(), backend: n });
    }
    if v.len() != n {
        return Err(Error::BackendMismatch { state: v.len(), backend: n });
    }
    if dt <= 0.0 {
        return Err(Error::InvalidParameter("step size must be positive".into()));
    }
    let modes = backend.noise_modes();
    if dw_scaled.len() != modes.len() {
        return Err(Error::InvalidParameter(format!(
            "{} noise increments for {} modes",
            dw_scaled.len(),
            modes.len()
        )));
    }
    let mut acc = vec![0.0; n];
    for (mode, &dw) in modes.iter().zip(dw_scaled) {
        if dw != 0.0 {
            for (a, &e) in acc.iter_mut().zip(mode) {
                *a += dw * e;
            }
        }
    }
    let cut = if reaction.cutoff.is_some() {
        reaction.cutoff_factor(backend.l2_norm_sq(v)?.sqrt())
    } else {
        1.0
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = backend.node(i);
        let drift = if cut != 0.0 { cut * (reaction.f)(x, v[i]) } else { 0.0 };
        out.push(w[i] + dt * drift + (reaction.sigma)(x, v[i]) * acc[i]);
    }
    backend.semigroup(out, dt)
}

/// Single mild step `u⁺ = S(dt)[u + dt·f(u) + σ(u)·ΔW]`.
/// `dw_scaled[k]` must already carry the `√a_k` factor.
pub fn step(
    backend: &dyn Backend,
    u: &Field,
    reaction: &ReactionSpec,
    dt: f64,
    dw_scaled: &[f64],
) -> Result<Field> {
    psi_step(backend, u, u, reaction, dt, dw_scaled)
}

/// A solved path: states on the time grid, tagged with the backend and
/// the noise substream that drove it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub backend_tag: &'static str,
    pub noise_seed: u64,
    pub traj: u64,
}

impl Trajectory {
    pub fn h_norm_sq_series(&self, backend: &dyn Backend) -> Result<Vec<f64>> {
        self.states.iter().map(|u| backend.h_norm_sq(u)).collect()
    }

    /// CSV snapshot `t,node,value`, keeping every `stride`-th time.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = String::from("t,node,value\n");
        for (i, t) in self.times.iter().enumerate() {
            if i % stride != 0 && i != self.times.len() - 1 {
                continue;
            }
            for (j, v) in self.states[i].iter().enumerate() {
                out.push_str(&format!("{t:.17e},{j},{v:.17e}\n"));
            }
        }
        out
    }
}

fn check_finite(u: &Field, step_idx: usize, t: f64) -> Result<()> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { step: step_idx, t });
    }
    Ok(())
}

/// Steps along a prebuilt noise path (common-noise experiments reuse
/// one path across runs). `a` are the mode variances.
pub fn solve_with_path(
    backend: &dyn Backend,
    u0: &Field,
    reaction: &ReactionSpec,
    a: &[f64],
    path: &NoisePath,
    noise_seed: u64,
    traj: u64,
) -> Result<Trajectory> {
    let grid = &path.times;
    if grid.len() >= 2 {
        backend.check_dt(grid[1] - grid[0])?;
    }
    let mut states = Vec::with_capacity(grid.len());
    check_finite(u0, 0, grid[0])?;
    states.push(u0.clone());
    let mut dw = vec![0.0; a.len()];
    for i in 0..path.steps() {
        let dt = grid[i + 1] - grid[i];
        for (k, &ak) in a.iter().enumerate() {
            dw[k] = ak.sqrt() * path.increments[k][i];
        }
        let next = step(backend, &states[i], reaction, dt, &dw)?;
        check_finite(&next, i + 1, grid[i + 1])?;
        states.push(next);
    }
    Ok(Trajectory {
        times: grid.clone(),
        states,
        backend_tag: backend.tag(),
        noise_seed,
        traj,
    })
}

/// Solves on `[t0, t1]` with step `dt`, drawing the noise for
/// trajectory label `traj` from the spec's substream.
pub fn solve(
    backend: &dyn Backend,
    u0: &Field,
    t0: f64,
    t1: f64,
    dt: f64,
    reaction: &ReactionSpec,
    noise: &NoiseSpec,
    traj: u64,
) -> Result<Trajectory> {
    if !(t1 > t0) || dt <= 0.0 {
        return Err(Error::InvalidParameter("bad time window".into()));
    }
    let steps = ((t1 - t0) / dt).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| t0 + i as f64 * dt).collect();
    let path = sample_path(noise, &grid, traj)?;
    solve_with_path(backend, u0, reaction, &noise.a, &path, noise.seed, traj)
}

/// Fixed-point iteration outcome: the final ensemble and the measured
/// contraction diagnostics.
pub struct PicardOutcome {
    pub grid: Vec<f64>,
    /// `ensemble[j][i]` = path `j` at time `i`.
    pub ensemble: Vec<Vec<Field>>,
    /// Squared B-norm of successive differences, one entry per sweep.
    pub diff_series: Vec<f64>,
    /// Ratios of successive entries of `diff_series`.
    pub gamma_series: Vec<f64>,
    pub iterations: usize,
}

/// Pathwise Picard iteration `v^{m+1} = Ψ[v^m]` with common noise
/// across sweeps. The B-norm is the grid sup of the Monte-Carlo mean
/// squared H-norm. Fails if the measured ratio stays ≥ 1 for three
/// consecutive sweeps.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve(
    backend: &dyn Backend,
    u0: &Field,
    t_max: f64,
    dt: f64,
    reaction: &ReactionSpec,
    noise: &NoiseSpec,
    m: usize,
    max_iters: usize,
    tol: f64,
) -> Result<PicardOutcome> {
    if m == 0 || max_iters == 0 {
        return Err(Error::InvalidParameter("empty Picard configuration".into()));
    }
    let steps = (t_max / dt).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let paths: Vec<NoisePath> = (0..m)
        .map(|j| sample_path(noise, &grid, j as u64))
        .collect::<Result<_>>()?;

    // v⁰: frozen at the initial state.
    let mut ensemble: Vec<Vec<Field>> = vec![vec![u0.clone(); grid.len()]; m];
    let mut diff_series = Vec::new();
    let mut gamma_series = Vec::new();
    let mut stalls = 0usize;
    let mut iterations = 0usize;
    let mut dw = vec![0.0; noise.a.len()];
    for sweep in 1..=max_iters {
        iterations = sweep;
        let mut sup_diff = 0.0f64;
        let mut diff_sums = vec![0.0f64; grid.len()];
        for (j, prev) in ensemble.iter_mut().enumerate() {
            let path = &paths[j];
            let mut next: Vec<Field> = Vec::with_capacity(grid.len());
            next.push(u0.clone());
            for i in 0..steps {
                for (k, &ak) in noise.a.iter().enumerate() {
                    dw[k] = ak.sqrt() * path.increments[k][i];
                }
                let w = psi_step(backend, &next[i], &prev[i], reaction, dt, &dw)?;
                check_finite(&w, i + 1, grid[i + 1])?;
                next.push(w);
            }
            for i in 0..grid.len() {
                let delta: Field = next[i]
                    .iter()
                    .zip(&prev[i])
                    .map(|(a, b)| a - b)
                    .collect();
                diff_sums[i] += backend.h_norm_sq(&delta)?;
            }
            *prev = next;
        }
        for s in &diff_sums {
            sup_diff = sup_diff.max(s / m as f64);
        }
        if let Some(&last) = diff_series.last() {
            if last > 0.0 {
                let ratio = sup_diff / last;
                gamma_series.push(ratio);
                if ratio >= 1.0 {
                    stalls += 1;
                    if stalls >= 3 {
                        return Err(Error::NonContracting { ratio, sweep });
                    }
                } else {
                    stalls = 0;
                }
            }
        }
        diff_series.push(sup_diff);
        if sup_diff <= tol {
            break;
        }
    }
    Ok(PicardOutcome { grid, ensemble, diff_series, gamma_series, iterations })
}

/// Two-sided convolution along a prebuilt path: starts from zero at the
/// left end of the grid and steps
/// `u⁺ = S(dt)[u + dt·α(t) + φ(t)·ΔW]` with prescribed, time-indexed
/// fields `α`, `φ`.
pub fn convolution_with_path(
    backend: &dyn Backend,
    alpha: Option<&[Field]>,
    phi: Option<&[Field]>,
    a: &[f64],
    path: &NoisePath,
) -> Result<Trajectory> {
    let grid = &path.times;
    let n = backend.n_nodes();
    for series in [alpha, phi].into_iter().flatten() {
        if series.len() != grid.len() {
            return Err(Error::InvalidParameter(
                "prescribed coefficient series does not match the time grid".into(),
            ));
        }
    }
    let mut states: Vec<Field> = Vec::with_capacity(grid.len());
    states.push(vec![0.0; n]);
    let mut dw = vec![0.0; a.len()];
    for i in 0..path.steps() {
        let dt = grid[i + 1] - grid[i];
        for (k, &ak) in a.iter().enumerate() {
            dw[k] = ak.sqrt() * path.increments[k][i];
        }
        let modes = backend.noise_modes();
        let mut v = states[i].clone();
        if let Some(alpha) = alpha {
            for (vi, &ai) in v.iter_mut().zip(&alpha[i]) {
                *vi += dt * ai;
            }
        }
        if let Some(phi) = phi {
            let mut acc = vec![0.0; n];
            for (mode, &dwk) in modes.iter().zip(&dw) {
                if dwk != 0.0 {
                    for (av, &e) in acc.iter_mut().zip(mode) {
                        *av += dwk * e;
                    }
                }
            }
            for ((vi, &pi), &av) in v.iter_mut().zip(&phi[i]).zip(&acc) {
                *vi += pi * av;
            }
        }
        let next = backend.semigroup(v, dt)?;
        check_finite(&next, i + 1, grid[i + 1])?;
        states.push(next);
    }
    Ok(Trajectory {
        times: grid.clone(),
        states,
        backend_tag: backend.tag(),
        noise_seed: 0,
        traj: 0,
    })
}

/// Approximates the stationary two-sided integrals
/// `∫_{-∞}^t S(t-s)α ds + ∫_{-∞}^t S(t-s)φ dW` by starting from zero at
/// `-T₀`; the truncation error decays like `e^{-4(t+T₀)}` thanks to the
/// spectral gap, so it needs the spectral backend.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_convolution(
    backend: &dyn Backend,
    alpha: Option<&[Field]>,
    phi: Option<&[Field]>,
    t_burn: f64,
    t_end: f64,
    dt: f64,
    noise: &NoiseSpec,
    traj: u64,
    burn_label: u64,
) -> Result<Trajectory> {
    if t_burn <= 0.0 {
        return Err(Error::InvalidParameter("burn-in must be positive".into()));
    }
    if backend.tag() != "gauss-spectral" {
        return Err(Error::InvalidParameter(
            "two-sided convolution requires the spectral backend's uniform contraction".into(),
        ));
    }
    let n_neg = (t_burn / dt).round().max(1.0) as usize;
    let n_pos = (t_end / dt).round() as usize;
    let grid: Vec<f64> = (0..=(n_neg + n_pos))
        .map(|i| (i as f64 - n_neg as f64) * dt)
        .collect();
    let path = extend_two_sided_with(noise, &grid, traj, burn_label)?;
    let mut out = convolution_with_path(backend, alpha, phi, &noise.a, &path)?;
    out.noise_seed = noise.seed;
    out.traj = traj;
    Ok(out)
}

/// Ensemble of stationary-solution paths on a common grid.
pub struct StationaryEnsemble {
    pub grid: Vec<f64>,
    /// `paths[j][i]` = path `j` at time `i`.
    pub paths: Vec<Vec<Field>>,
}

/// Stationary construction: starting from `u⁰ ≡ 0`, each sweep solves
/// the linear equation with coefficients frozen at the previous
/// iterate, `α = f(u^n)`, `φ = σ(u^n)`, reusing one noise realization
/// per path. Returns the ensemble and the sup-in-time mean squared
/// differences per sweep.
#[allow(clippy::too_many_arguments)]
pub fn build_stationary(
    backend: &dyn Backend,
    reaction: &ReactionSpec,
    noise: &NoiseSpec,
    t_burn: f64,
    t_end: f64,
    dt: f64,
    iters: usize,
    m: usize,
) -> Result<(StationaryEnsemble, Vec<f64>)> {
    let cert = SmallnessCertificate::new(reaction.lipschitz, noise.trace());
    if !cert.eligible {
        return Err(Error::IneligibleCertificate(format!(
            "L²+L²Σa = {:.4}, L²/2+L²Σa = {:.4}",
            cert.cond1, cert.cond2
        )));
    }
    if t_burn <= 0.0 {
        return Err(Error::InvalidParameter("burn-in must be positive".into()));
    }
    let n_neg = (t_burn / dt).round().max(1.0) as usize;
    let n_pos = (t_end / dt).round() as usize;
    let grid: Vec<f64> = (0..=(n_neg + n_pos))
        .map(|i| (i as f64 - n_neg as f64) * dt)
        .collect();
    let paths_noise: Vec<NoisePath> = (0..m)
        .map(|j| extend_two_sided_with(noise, &grid, j as u64, 1))
        .collect::<Result<_>>()?;

    let n = backend.n_nodes();
    let mut iterates: Vec<Vec<Field>> = vec![vec![vec![0.0; n]; grid.len()]; m];
    let mut diff_series = Vec::with_capacity(iters);
    let mut stalls = 0usize;
    for sweep in 1..=iters {
        let mut diff_sums = vec![0.0f64; grid.len()];
        for (j, prev) in iterates.iter_mut().enumerate() {
            let alpha: Vec<Field> = prev
                .iter()
                .map(|u| {
                    let cut = if reaction.cutoff.is_some() {
                        reaction.cutoff_factor(backend.l2_norm_sq(u)?.sqrt())
                    } else {
                        1.0
                    };
                    Ok((0..n)
                        .map(|i| cut * (reaction.f)(backend.node(i), u[i]))
                        .collect())
                })
                .collect::<Result<_>>()?;
            let phi: Vec<Field> = prev
                .iter()
                .map(|u| {
                    (0..n)
                        .map(|i| (reaction.sigma)(backend.node(i), u[i]))
                        .collect()
                })
                .collect();
            let next = convolution_with_path(
                backend,
                Some(&alpha),
                Some(&phi),
                &noise.a,
                &paths_noise[j],
            )?;
            for i in 0..grid.len() {
                let delta: Field = next.states[i]
                    .iter()
                    .zip(&prev[i])
                    .map(|(a, b)| a - b)
                    .collect();
                diff_sums[i] += backend.h_norm_sq(&delta)?;
            }
            *prev = next.states;
        }
        let sup_diff = diff_sums.iter().fold(0.0f64, |a, &s| a.max(s / m as f64));
        if let Some(&last) = diff_series.last() {
            if last > 1e-30 && sup_diff / last >= 1.0 {
                stalls += 1;
                if stalls >= 3 {
                    return Err(Error::NonContracting { ratio: sup_diff / last, sweep });
                }
            } else {
                stalls = 0;
            }
        }
        diff_series.push(sup_diff);
    }
    Ok((StationaryEnsemble { grid, paths: iterates }, diff_series))
}

/// Mean squared gap between two solutions driven by identical noise,
/// one series entry per grid time.
#[allow(clippy::too_many_arguments)]
pub fn stability_pair(
    backend: &dyn Backend,
    u0_a: &Field,
    u0_b: &Field,
    reaction: &ReactionSpec,
    noise: &NoiseSpec,
    t_max: f64,
    dt: f64,
    m: usize,
) -> Result<DecaySeries> {
    let steps = (t_max / dt).round().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let path = sample_path(noise, &grid, j as u64)?;
        let ta = solve_with_path(backend, u0_a, reaction, &noise.a, &path, noise.seed, j as u64)?;
        let tb = solve_with_path(backend, u0_b, reaction, &noise.a, &path, noise.seed, j as u64)?;
        let series: Vec<f64> = ta
            .states
            .iter()
            .zip(&tb.states)
            .map(|(a, b)| {
                let delta: Field = a.iter().zip(b).map(|(x, y)| x - y).collect();
                backend.h_norm_sq(&delta)
            })
            .collect::<Result<_>>()?;
        samples.push(series);
    }
    let ms = moment_series(&samples, &grid, "h-gap")?;
    Ok(DecaySeries { times: ms.times, estimates: ms.estimates, stderrs: ms.stderrs })
}
