//! Named experiments: each one exercises a single claim end to end and
//! emits a reproducible artifact set (manifest, CSV series, verdict
//! block, SVG plots) into its output directory.
//!
//! Configuration is flat `key=value` text with optional `[section]`
//! headers; unknown keys are rejected so manifests stay exact echoes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::engine::{
    self, Backend, NoiseForcing, ReactionSpec, SmallnessCertificate, SpectralBackend,
    TorusBackend,
};
use crate::heat::{uniform_moment_bound, BoundInputs, TorusGrid, TorusHeat};
use crate::noise::{ito_isometry_probe, BasisSpec, NoiseSpec};
use crate::rng::substream;
use crate::spectral::{fd_leading_eigenvalues, EigenBasis};
use crate::stats::{
    self, doob_probe, energy_distance, fit_decay, mann_kendall, moment_series, sup_verdict,
    EmpiricalMeasure,
};
use crate::weights::{WeightFunction, WeightKind};
use crate::{Error, Field, Result};

pub const EXPERIMENTS: [&str; 10] = [
    "spectrum",
    "lemma1",
    "lemma2",
    "thm1",
    "thm2",
    "picard",
    "thm4lin",
    "thm5",
    "uniqueness",
    "doob",
];

/// Fully resolved experiment parameters. Every field is echoed into the
/// run manifest.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// `gauss` (half-space Hermite) or `heat` (periodic torus).
    pub backend: String,
    pub dim: usize,
    pub weight_kind: String,
    pub weight_gamma: f64,
    pub weight_n: u32,
    pub reaction_kind: String,
    /// Lipschitz constant / additive level, depending on the kind.
    pub reaction_scale: f64,
    pub reaction_sigma0: f64,
    /// Norm cutoff for the reaction; 0 disables it.
    pub reaction_cutoff: f64,
    pub noise_modes: usize,
    /// Explicit mode variances; empty means geometric `2^{-k}`.
    pub noise_variances: Vec<f64>,
    /// `window` or `eigen` (spectral backend only).
    pub noise_forcing: String,
    pub grid_r: f64,
    pub grid_res: usize,
    pub spectral_cutoff: usize,
    pub spectral_order: usize,
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub iters: usize,
    pub m: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for a named experiment, sized so every run finishes at
    /// desk scale.
    pub fn for_experiment(name: &str) -> Result<Self> {
        if !EXPERIMENTS.contains(&name) {
            return Err(Error::Config(format!(
                "unknown experiment '{name}'; expected one of {}",
                EXPERIMENTS.join(", ")
            )));
        }
        let mut cfg = Self {
            experiment: name.to_string(),
            backend: "gauss".into(),
            dim: 1,
            weight_kind: "gaussian".into(),
            weight_gamma: 1.0,
            weight_n: 4,
            reaction_kind: "zero".into(),
            reaction_scale: 0.0,
            reaction_sigma0: 0.5,
            reaction_cutoff: 0.0,
            noise_modes: 8,
            noise_variances: Vec::new(),
            noise_forcing: "window".into(),
            grid_r: 8.0,
            grid_res: 16,
            spectral_cutoff: 8,
            spectral_order: 32,
            dt: 0.05,
            horizon: 2.0,
            burn_in: 7.0,
            iters: 8,
            m: 100,
            seed: 42,
            out: PathBuf::from(format!("runs/{name}")),
        };
        match name {
            "spectrum" => {}
            "lemma1" => cfg.m = 100,
            "lemma2" => {
                cfg.reaction_kind = "additive".into();
                cfg.reaction_scale = 0.5;
                cfg.m = 10_000;
            }
            "thm1" => {
                cfg.backend = "heat".into();
                cfg.dim = 3;
                cfg.reaction_kind = "bounded".into();
                cfg.dt = 0.25;
                cfg.horizon = 50.0;
                cfg.m = 512;
            }
            "thm2" => {
                cfg.backend = "heat".into();
                cfg.dim = 3;
                cfg.reaction_kind = "bounded_env".into();
                cfg.reaction_cutoff = 50.0;
                cfg.dt = 0.25;
                cfg.horizon = 50.0;
                cfg.m = 512;
            }
            "picard" => {
                cfg.reaction_kind = "lipschitz".into();
                cfg.reaction_scale = 0.1;
                cfg.noise_variances = vec![0.5, 0.25, 0.125, 0.125];
                cfg.noise_modes = 4;
                cfg.horizon = 1.0;
                cfg.m = 64;
            }
            "thm4lin" => {
                cfg.reaction_kind = "additive".into();
                cfg.reaction_scale = 1.0;
                cfg.noise_forcing = "eigen".into();
                cfg.noise_variances = vec![0.5];
                cfg.noise_modes = 1;
                cfg.spectral_cutoff = 4;
                cfg.spectral_order = 16;
                cfg.dt = 0.005;
                cfg.horizon = 1.0;
                cfg.m = 10_000;
            }
            "thm5" => {
                cfg.reaction_kind = "lipschitz_cos".into();
                cfg.reaction_scale = 0.2;
                cfg.noise_variances = vec![0.5, 0.25, 0.125, 0.125];
                cfg.noise_modes = 4;
                cfg.spectral_cutoff = 4;
                cfg.spectral_order = 16;
                cfg.iters = 6;
                cfg.m = 128;
            }
            "uniqueness" => {
                cfg.reaction_kind = "lipschitz_cos".into();
                cfg.reaction_scale = 0.2;
                cfg.noise_variances = vec![0.5, 0.25, 0.125, 0.125];
                cfg.noise_modes = 4;
                cfg.spectral_cutoff = 4;
                cfg.spectral_order = 16;
                cfg.dt = 0.02;
                cfg.horizon = 6.0;
                cfg.m = 256;
            }
            "doob" => cfg.m = 2000,
            _ => unreachable!(),
        }
        Ok(cfg)
    }

    /// Applies a flat `key=value` config file. `#` starts a comment and
    /// `[section]` headers prefix subsequent keys with `section.`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let key = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            self.apply_kv(&key, value.trim())?;
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value '{value}' for {key}")))
        }
        match key {
            "experiment" => {
                if !EXPERIMENTS.contains(&value) {
                    return Err(Error::Config(format!("unknown experiment '{value}'")));
                }
                self.experiment = value.into();
            }
            "backend" => {
                if value != "gauss" && value != "heat" {
                    return Err(Error::Config(format!("unknown backend '{value}'")));
                }
                self.backend = value.into();
            }
            "dim" => self.dim = num(key, value)?,
            "weight.kind" => self.weight_kind = value.into(),
            "weight.gamma" => self.weight_gamma = num(key, value)?,
            "weight.n" => self.weight_n = num(key, value)?,
            "reaction.kind" => self.reaction_kind = value.into(),
            "reaction.scale" => self.reaction_scale = num(key, value)?,
            "reaction.sigma0" => self.reaction_sigma0 = num(key, value)?,
            "reaction.cutoff" => self.reaction_cutoff = num(key, value)?,
            "noise.modes" => self.noise_modes = num(key, value)?,
            "noise.variances" => {
                self.noise_variances = if value.is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| num("noise.variances", v.trim()))
                        .collect::<Result<_>>()?
                };
            }
            "noise.forcing" => {
                if value != "window" && value != "eigen" {
                    return Err(Error::Config(format!("unknown noise forcing '{value}'")));
                }
                self.noise_forcing = value.into();
            }
            "grid.r" => self.grid_r = num(key, value)?,
            "grid.res" => self.grid_res = num(key, value)?,
            "spectral.cutoff" => self.spectral_cutoff = num(key, value)?,
            "spectral.order" => self.spectral_order = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "burn_in" => self.burn_in = num(key, value)?,
            "iters" => self.iters = num(key, value)?,
            "m" => self.m = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Manifest text: every field, the seed, and the code version.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "experiment={}", self.experiment);
        let _ = writeln!(s, "backend={}", self.backend);
        let _ = writeln!(s, "dim={}", self.dim);
        let _ = writeln!(s, "weight.kind={}", self.weight_kind);
        let _ = writeln!(s, "weight.gamma={}", self.weight_gamma);
        let _ = writeln!(s, "weight.n={}", self.weight_n);
        let _ = writeln!(s, "reaction.kind={}", self.reaction_kind);
        let _ = writeln!(s, "reaction.scale={}", self.reaction_scale);
        let _ = writeln!(s, "reaction.sigma0={}", self.reaction_sigma0);
        let _ = writeln!(s, "reaction.cutoff={}", self.reaction_cutoff);
        let _ = writeln!(s, "noise.modes={}", self.noise_modes);
        let _ = writeln!(
            s,
            "noise.variances={}",
            self.noise_variances
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(s, "noise.forcing={}", self.noise_forcing);
        let _ = writeln!(s, "grid.r={}", self.grid_r);
        let _ = writeln!(s, "grid.res={}", self.grid_res);
        let _ = writeln!(s, "spectral.cutoff={}", self.spectral_cutoff);
        let _ = writeln!(s, "spectral.order={}", self.spectral_order);
        let _ = writeln!(s, "dt={}", self.dt);
        let _ = writeln!(s, "horizon={}", self.horizon);
        let _ = writeln!(s, "burn_in={}", self.burn_in);
        let _ = writeln!(s, "iters={}", self.iters);
        let _ = writeln!(s, "m={}", self.m);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "out={}", self.out.display());
        s
    }

    fn weight(&self) -> Result<WeightFunction> {
        let kind = match self.weight_kind.as_str() {
            "gaussian" => WeightKind::Gaussian,
            "exp_decay" => WeightKind::ExpDecay { gamma: self.weight_gamma },
            "poly_decay" => WeightKind::PolyDecay { n: self.weight_n },
            other => return Err(Error::Config(format!("unknown weight kind '{other}'"))),
        };
        WeightFunction::new(kind, self.dim, self.backend == "gauss")
    }

    fn reaction(&self) -> Result<ReactionSpec> {
        let mut r = match self.reaction_kind.as_str() {
            "zero" => ReactionSpec::zero(),
            "additive" => ReactionSpec::additive(self.reaction_scale),
            "lipschitz" => ReactionSpec::lipschitz_pair(self.reaction_scale),
            // Like `lipschitz`, but σ(·,0) ≠ 0 so the zero state is not
            // an absorbing fixed point of the stationary iteration.
            "lipschitz_cos" => {
                let l = self.reaction_scale;
                ReactionSpec {
                    f: std::sync::Arc::new(move |_, u| l * u.sin()),
                    sigma: std::sync::Arc::new(move |_, u| l * u.cos()),
                    lipschitz: l,
                    f_envelope: None,
                    sigma_envelope: None,
                    sigma_sup: Some(l.abs()),
                    cutoff: None,
                }
            }
            "bounded" => ReactionSpec::bounded_gaussian(self.reaction_sigma0),
            "bounded_env" => {
                // Gaussian envelopes on both coefficients: |f| ≤ e^{-|x|²},
                // |σ| ≤ σ₀ e^{-|x|²} ∈ L².
                let sigma0 = self.reaction_sigma0;
                let env = std::sync::Arc::new(|x: &[f64]| {
                    (-x.iter().map(|v| v * v).sum::<f64>()).exp()
                });
                let (ef, es, ee) = (env.clone(), env.clone(), env.clone());
                ReactionSpec {
                    f: std::sync::Arc::new(move |x, u| ef(x) * u.sin()),
                    sigma: std::sync::Arc::new(move |x, u| sigma0 * es(x) * u.cos()),
                    lipschitz: 1.0f64.max(sigma0.abs()),
                    f_envelope: Some(env.clone()),
                    sigma_envelope: Some(std::sync::Arc::new(move |x: &[f64]| {
                        sigma0.abs() * ee(x)
                    })),
                    sigma_sup: Some(sigma0.abs()),
                    cutoff: None,
                }
            }
            other => return Err(Error::Config(format!("unknown reaction kind '{other}'"))),
        };
        if self.reaction_cutoff > 0.0 {
            r = r.with_cutoff(self.reaction_cutoff);
        }
        Ok(r)
    }

    fn noise(&self) -> Result<NoiseSpec> {
        if self.noise_variances.is_empty() {
            NoiseSpec::geometric(self.noise_modes, self.dim, self.seed)
        } else {
            if self.noise_variances.len() != self.noise_modes {
                return Err(Error::Config(format!(
                    "{} variances for {} modes",
                    self.noise_variances.len(),
                    self.noise_modes
                )));
            }
            NoiseSpec::with_variances(self.noise_variances.clone(), self.dim, self.seed)
        }
    }

    fn spectral_backend(&self) -> Result<SpectralBackend> {
        let basis = EigenBasis::new(self.dim, self.spectral_cutoff, self.spectral_order)?;
        let forcing = match self.noise_forcing.as_str() {
            "eigen" => NoiseForcing::EigenModes(self.noise_modes),
            _ => NoiseForcing::Window(BasisSpec::build(self.noise_modes, self.dim)?),
        };
        SpectralBackend::new(basis, forcing)
    }

    fn torus_backend(&self) -> Result<TorusBackend> {
        let grid = TorusGrid::new(self.grid_r, self.grid_res, self.dim)?;
        let heat = TorusHeat::new(grid)?;
        let rho = self.weight()?;
        let basis = BasisSpec::build(self.noise_modes, self.dim)?;
        TorusBackend::new(heat, &rho, &basis)
    }
}

/// One named check inside an experiment.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// Positive distance to the failure boundary.
    pub margin: f64,
    pub seed: u64,
}

impl Verdict {
    fn new(name: &str, pass: bool, margin: f64, seed: u64) -> Self {
        Self { name: name.into(), pass, margin, seed }
    }
}

/// Everything a run leaves on disk.
#[derive(Debug)]
pub struct ArtifactSet {
    pub dir: PathBuf,
    pub verdicts: Vec<Verdict>,
    pub files: Vec<String>,
}

impl ArtifactSet {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), content)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(
        mut self,
        cfg: &ExperimentConfig,
        verdicts: Vec<Verdict>,
    ) -> Result<ArtifactSet> {
        self.write("manifest.txt", &cfg.manifest())?;
        let mut block = String::new();
        for v in &verdicts {
            let _ = writeln!(
                block,
                "[verdict]\nname={}\npass={}\nmargin={:.6e}\nseed={}\n",
                v.name, v.pass, v.margin, v.seed
            );
        }
        self.write("verdicts.txt", &block)?;
        Ok(ArtifactSet { dir: self.dir, verdicts, files: self.files })
    }
}

/// Minimal static line plot.
fn svg_line_plot(title: &str, series: &[(&str, &[(f64, f64)])]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (_, pts) in series {
        for &(x, y) in *pts {
            xs.push(x);
            ys.push(y);
        }
    }
    let (x0, x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
        (a.min(v), b.max(v))
    });
    let (y0, y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
        (a.min(v), b.max(v))
    });
    let (xs_span, ys_span) = ((x1 - x0).max(1e-300), (y1 - y0).max(1e-300));
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"25\" text-anchor=\"middle\" font-size=\"16\">{title}</text>\n",
        w / 2.0
    );
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let mut path = String::new();
        for &(x, y) in *pts {
            let px = pad + (x - x0) / xs_span * (w - 2.0 * pad);
            let py = h - pad - (y - y0) / ys_span * (h - 2.0 * pad);
            let _ = write!(path, "{:.2},{:.2} ", px, py);
        }
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             points=\"{}\"/>\n<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" \
             fill=\"{color}\">{label}</text>\n",
            path.trim_end(),
            pad + 5.0,
            pad + 15.0 * (i as f64 + 1.0)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn csv_f(v: f64) -> String {
    format!("{v:.17e}")
}

/// Runs the experiment named in the config and writes its artifacts.
/// The run is deterministic given the config and seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    match cfg.experiment.as_str() {
        "spectrum" => run_spectrum(cfg),
        "lemma1" => run_lemma1(cfg),
        "lemma2" => run_lemma2(cfg),
        "thm1" => run_thm1(cfg),
        "thm2" => run_thm2(cfg),
        "picard" => run_picard(cfg),
        "thm4lin" => run_thm4lin(cfg),
        "thm5" => run_thm5(cfg),
        "uniqueness" => run_uniqueness(cfg),
        "doob" => run_doob(cfg),
        other => Err(Error::Config(format!("unknown experiment '{other}'"))),
    }
}

fn run_spectrum(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let basis = EigenBasis::new(1, cfg.spectral_cutoff.max(5), cfg.spectral_order.max(16))?;
    em.write("spectrum.csv", &basis.spectrum_csv())?;

    let expected = [-2.0, -6.0, -10.0, -14.0, -18.0];
    let exact = basis.eigenvalues[..5]
        .iter()
        .zip(&expected)
        .all(|(a, b)| a == b);

    // Independent validation: dense finite differences on [0, 8].
    let fd = fd_leading_eigenvalues(8.0, 8000, 3)?;
    let mut csv = String::from("index,fd,formula,rel_err\n");
    let mut worst = 0.0f64;
    for (i, &lam) in fd.iter().enumerate() {
        let formula = expected[i];
        let rel = (lam - formula).abs() / formula.abs();
        worst = worst.max(rel);
        csv.push_str(&format!("{i},{},{},{}\n", csv_f(lam), csv_f(formula), csv_f(rel)));
    }
    em.write("fd_spectrum.csv", &csv)?;
    let pts: Vec<(f64, f64)> = basis
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &mu)| (i as f64, mu))
        .collect();
    em.write("spectrum.svg", &svg_line_plot("eigenvalues", &[("mu_j", &pts)]))?;

    let verdicts = vec![
        Verdict::new("eigenvalue-formula", exact, if exact { 1.0 } else { -1.0 }, cfg.seed),
        Verdict::new("fd-spectrum", worst <= 1e-4, 1e-4 - worst, cfg.seed),
    ];
    em.finish(cfg, verdicts)
}

fn run_lemma1(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let basis = EigenBasis::new(cfg.dim, cfg.spectral_cutoff, cfg.spectral_order)?;
    let mut rng = substream(cfg.seed, &[0x6c31]);
    let ts = [0.1, 0.5, 1.0, 2.0];
    let mut max_ratio = vec![0.0f64; ts.len()];
    let mut max_sq_ratio = vec![0.0f64; ts.len()];
    for _ in 0..cfg.m.max(100) {
        let mut c = crate::spectral::CoeffVector::zeros(&basis);
        for v in c.coeffs.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let norm = c.h_norm();
        for (i, &t) in ts.iter().enumerate() {
            let out = basis.apply_semigroup(&c, t)?;
            max_ratio[i] = max_ratio[i].max(out.h_norm() / norm);
            max_sq_ratio[i] = max_sq_ratio[i].max(out.h_norm().powi(2) / norm.powi(2));
        }
    }
    let mut csv = String::from("t,max_ratio,bound,max_sq_ratio,sq_bound\n");
    let mut margin = f64::INFINITY;
    let mut sq_margin = f64::INFINITY;
    for (i, &t) in ts.iter().enumerate() {
        let bound = (-2.0 * t).exp() * (1.0 + 1e-10);
        let sq_bound = (-4.0 * t).exp() * (1.0 + 1e-10);
        margin = margin.min(bound - max_ratio[i]);
        sq_margin = sq_margin.min(sq_bound - max_sq_ratio[i]);
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_f(t),
            csv_f(max_ratio[i]),
            csv_f(bound),
            csv_f(max_sq_ratio[i]),
            csv_f(sq_bound)
        ));
    }
    em.write("lemma1.csv", &csv)?;
    let verdicts = vec![
        Verdict::new("contraction", margin >= 0.0, margin, cfg.seed),
        Verdict::new("squared-contraction", sq_margin >= 0.0, sq_margin, cfg.seed),
    ];
    em.finish(cfg, verdicts)
}

fn run_lemma2(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let mut verdicts = Vec::new();

    // Part 1: Itô isometry against analytic oracles.
    let spec1 = NoiseSpec::with_variances(vec![1.0], 1, cfg.seed)?;
    let probes: Vec<(&str, Box<dyn Fn(usize, f64) -> f64>)> = vec![
        ("constant", Box::new(|_, _| 1.0)),
        ("sqrt_t", Box::new(|_, s: f64| s.sqrt())),
        ("zero", Box::new(|_, _| 0.0)),
    ];
    let mut csv = String::from("name,mc,stderr,analytic\n");
    for (name, g) in &probes {
        let probe = ito_isometry_probe(g.as_ref(), &spec1, 1.0, 256, cfg.m, cfg.seed)?;
        let gap = (probe.mc_lhs - probe.analytic_rhs).abs();
        let margin = 3.0 * probe.mc_stderr + 1e-12 - gap;
        csv.push_str(&format!(
            "{name},{},{},{}\n",
            csv_f(probe.mc_lhs),
            csv_f(probe.mc_stderr),
            csv_f(probe.analytic_rhs)
        ));
        verdicts.push(Verdict::new(
            &format!("isometry-{name}"),
            margin >= 0.0,
            margin,
            cfg.seed,
        ));
    }
    em.write("isometry.csv", &csv)?;

    // Part 2: the convolution bound
    // E‖∫S(t-s)σ dW‖² ≤ Σa_k ∫ e^{-4(t-s)} E‖σ‖² ds for constant σ.
    let backend = cfg.spectral_backend()?;
    let noise = cfg.noise()?;
    let sigma0 = cfg.reaction_scale;
    let reaction = ReactionSpec::additive(sigma0);
    let u0 = vec![0.0; backend.n_nodes()];
    let ones = vec![1.0; backend.n_nodes()];
    let sigma_h_sq = sigma0 * sigma0 * backend.h_norm_sq(&ones)?;
    let m_conv = cfg.m.min(4000).max(2);
    let samples: Vec<Vec<f64>> = (0..m_conv as u64)
        .into_par_iter()
        .map(|j| {
            let t = engine::solve(
                &backend, &u0, 0.0, cfg.horizon, cfg.dt, &reaction, &noise, j,
            )?;
            t.h_norm_sq_series(&backend)
        })
        .collect::<Result<_>>()?;
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.dt).collect();
    let series = moment_series(&samples, &grid, "h")?;
    let mut csv = String::from("t,estimate,stderr,bound\n");
    let mut margin = f64::INFINITY;
    for (i, &t) in grid.iter().enumerate() {
        let bound = noise.trace() * sigma_h_sq * (1.0 - (-4.0 * t).exp()) / 4.0;
        margin = margin.min(bound + 3.0 * series.stderrs[i] - series.estimates[i]);
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_f(t),
            csv_f(series.estimates[i]),
            csv_f(series.stderrs[i]),
            csv_f(bound)
        ));
    }
    em.write("convolution_bound.csv", &csv)?;
    let pts_est: Vec<(f64, f64)> = grid.iter().zip(&series.estimates).map(|(&t, &e)| (t, e)).collect();
    em.write(
        "convolution_bound.svg",
        &svg_line_plot("convolution second moment", &[("estimate", &pts_est)]),
    )?;
    verdicts.push(Verdict::new("convolution-bound", margin >= 0.0, margin, cfg.seed));
    em.finish(cfg, verdicts)
}

/// Shared torus moment-series machinery for the two boundedness
/// experiments: the weighted and plain squared-norm ensemble means on
/// the time grid.
fn torus_moments(
    cfg: &ExperimentConfig,
    backend: &TorusBackend,
    reaction: &ReactionSpec,
    noise: &NoiseSpec,
    u0: &Field,
) -> Result<(Vec<f64>, stats::MomentSeries, stats::MomentSeries)> {
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * cfg.dt).collect();
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.m as u64)
        .into_par_iter()
        .map(|j| {
            let t = engine::solve(
                backend, u0, 0.0, cfg.horizon, cfg.dt, reaction, noise, j,
            )?;
            let h = t
                .states
                .iter()
                .map(|u| backend.h_norm_sq(u))
                .collect::<Result<Vec<f64>>>()?;
            let l2 = t
                .states
                .iter()
                .map(|u| backend.l2_norm_sq(u))
                .collect::<Result<Vec<f64>>>()?;
            Ok((h, l2))
        })
        .collect::<Result<_>>()?;
    let h_samples: Vec<Vec<f64>> = samples.iter().map(|(h, _)| h.clone()).collect();
    let l2_samples: Vec<Vec<f64>> = samples.iter().map(|(_, l)| l.clone()).collect();
    let h_series = moment_series(&h_samples, &grid, "h")?;
    let l2_series = moment_series(&l2_samples, &grid, "l2")?;
    Ok((grid, h_series, l2_series))
}

/// Trend test on the second half of the series, subsampled to weaken
/// the serial correlation of the ensemble mean.
fn plateau_verdict(series: &stats::MomentSeries, seed: u64) -> Result<Verdict> {
    let start = 2 * series.estimates.len() / 3;
    let tail = &series.estimates[start..];
    let stride = (tail.len() / 25).max(1);
    let sub: Vec<f64> = tail.iter().step_by(stride).copied().collect();
    let mk = mann_kendall(&sub)?;
    Ok(Verdict::new("plateau", !mk.trend, mk.p_value - 0.05, seed))
}

fn run_thm1(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let backend = cfg.torus_backend()?;
    let reaction = cfg.reaction()?;
    reaction.probe(cfg.dim, cfg.seed, 200)?;
    let noise = cfg.noise()?;

    // Initial state: the Gaussian envelope itself.
    let grid_obj = &backend.heat.grid;
    let u0: Field = (0..grid_obj.len())
        .map(|i| {
            let x = grid_obj.node(i);
            (-x.iter().map(|v| v * v).sum::<f64>()).exp()
        })
        .collect();
    let quad = grid_obj.quadrature();
    let rho = cfg.weight()?;
    let envelope = |x: &[f64]| (-x.iter().map(|v| v * v).sum::<f64>()).exp();
    let phi_l1: f64 = quad
        .nodes
        .iter()
        .zip(&quad.weights)
        .map(|(x, w)| w * envelope(x))
        .sum();
    let inputs = BoundInputs {
        phi_sup: 1.0,
        phi_l1,
        rho_sup: rho.sup_norm(),
        rho_l1: rho.l1_norm(&quad),
        sigma0: cfg.reaction_sigma0,
        trace_a: noise.trace(),
        dim: cfg.dim,
        init_l2_sq: backend.l2_norm_sq(&u0)?,
    };
    let report = uniform_moment_bound(inputs);
    em.write("bound.csv", &report.to_csv_row())?;
    em.write("bound.txt", &report.to_text())?;

    let (grid, series, _) = torus_moments(cfg, &backend, &reaction, &noise, &u0)?;
    em.write("moments.csv", &series.to_csv())?;
    let pts: Vec<(f64, f64)> = grid.iter().zip(&series.estimates).map(|(&t, &e)| (t, e)).collect();
    em.write(
        "moments.svg",
        &svg_line_plot("weighted second moment", &[("estimate", &pts)]),
    )?;

    let sv = sup_verdict(&series, report.total)?;
    let verdicts = vec![
        Verdict::new("bounded", sv.pass, sv.worst_margin, cfg.seed),
        plateau_verdict(&series, cfg.seed)?,
    ];
    em.finish(cfg, verdicts)
}

fn run_thm2(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let backend = cfg.torus_backend()?;
    let reaction = cfg.reaction()?;
    reaction.probe(cfg.dim, cfg.seed, 200)?;
    let noise = cfg.noise()?;
    let grid_obj = &backend.heat.grid;
    let u0: Field = (0..grid_obj.len())
        .map(|i| {
            let x = grid_obj.node(i);
            (-x.iter().map(|v| v * v).sum::<f64>()).exp()
        })
        .collect();

    let (grid, h_series, series) = torus_moments(cfg, &backend, &reaction, &noise, &u0)?;
    em.write("moments.csv", &series.to_csv())?;
    em.write("moments_weighted.csv", &h_series.to_csv())?;
    let pts: Vec<(f64, f64)> = grid.iter().zip(&series.estimates).map(|(&t, &e)| (t, e)).collect();
    em.write(
        "moments.svg",
        &svg_line_plot("plain second moment", &[("estimate", &pts)]),
    )?;

    // The claim asserts finiteness without an explicit constant; the
    // computable surrogate is that the series never leaves a modest
    // multiple of its early range. The plateau is tested on the
    // weighted norm: the periodic truncation leaves the constant
    // Fourier mode undamped, and its slow random walk — an artifact the
    // whole-space dispersion would remove — is visible in the plain
    // norm but suppressed by the weight.
    let half = series.estimates.len() / 2;
    let early_max = series.estimates[..half].iter().cloned().fold(0.0, f64::max);
    let sv = sup_verdict(&series, 1.5 * early_max)?;
    let verdicts = vec![
        Verdict::new("bounded", sv.pass, sv.worst_margin, cfg.seed),
        plateau_verdict(&h_series, cfg.seed)?,
    ];
    em.finish(cfg, verdicts)
}

fn run_picard(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let backend = cfg.spectral_backend()?;
    let reaction = cfg.reaction()?;
    reaction.probe(cfg.dim, cfg.seed, 200)?;
    let noise = cfg.noise()?;
    let u0: Field = backend.basis.mode_values(0).to_vec();
    let tol = 1e-8;
    let out = engine::picard_solve(
        &backend,
        &u0,
        cfg.horizon,
        cfg.dt,
        &reaction,
        &noise,
        cfg.m,
        cfg.iters,
        tol,
    )?;
    let theory = engine::picard_gamma(reaction.lipschitz, cfg.horizon, noise.trace());
    let mut csv = String::from("sweep,diff,gamma\n");
    for (i, &d) in out.diff_series.iter().enumerate() {
        let g = if i == 0 { f64::NAN } else { out.gamma_series[i - 1] };
        csv.push_str(&format!("{},{},{}\n", i + 1, csv_f(d), csv_f(g)));
    }
    em.write("picard.csv", &csv)?;
    let max_gamma = out.gamma_series.iter().cloned().fold(0.0, f64::max);
    let mc_tol = 0.02;
    let reached = *out.diff_series.last().unwrap() <= tol;
    let verdicts = vec![
        Verdict::new(
            "gamma-contraction",
            max_gamma <= theory + mc_tol,
            theory + mc_tol - max_gamma,
            cfg.seed,
        ),
        Verdict::new(
            "iterations",
            reached && out.iterations <= 6,
            6.0 - out.iterations as f64,
            cfg.seed,
        ),
    ];
    em.finish(cfg, verdicts)
}

fn run_thm4lin(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let backend = cfg.spectral_backend()?;
    let noise = cfg.noise()?;
    let a1 = noise.a[0];
    let mu1 = backend.basis.eigenvalues[0];
    let target = engine::ou_stationary_variance(a1, mu1);

    // Stationary variance of the leading coefficient at t = 0, sampled
    // through the two-sided convolution with constant φ ≡ 1.
    let variance_at = |burn: f64| -> Result<(f64, f64)> {
        let stats_pairs: Vec<(f64, f64)> = (0..cfg.m as u64)
            .into_par_iter()
            .map(|j| {
                let n_neg = (burn / cfg.dt).round() as usize;
                let grid_len = n_neg + 1;
                let ones = vec![1.0; backend.n_nodes()];
                let phi: Vec<Field> = vec![ones; grid_len];
                let t = engine::stochastic_convolution(
                    &backend,
                    None,
                    Some(&phi),
                    burn,
                    0.0,
                    cfg.dt,
                    &noise,
                    j,
                    1,
                )?;
                let c = backend.leading_coeff(t.states.last().unwrap())?;
                Ok((c * c, c * c * c * c))
            })
            .collect::<Result<_>>()?;
        let mf = cfg.m as f64;
        let mean = stats_pairs.iter().map(|p| p.0).sum::<f64>() / mf;
        let second = stats_pairs.iter().map(|p| p.1).sum::<f64>() / mf;
        let var = (second - mean * mean).max(0.0);
        Ok((mean, (var / mf).sqrt()))
    };
    let (est, stderr) = variance_at(cfg.burn_in)?;
    let (est2, stderr2) = variance_at(2.0 * cfg.burn_in)?;

    let mut csv = String::from("burn_in,estimate,stderr,target\n");
    csv.push_str(&format!(
        "{},{},{},{}\n",
        csv_f(cfg.burn_in),
        csv_f(est),
        csv_f(stderr),
        csv_f(target)
    ));
    csv.push_str(&format!(
        "{},{},{},{}\n",
        csv_f(2.0 * cfg.burn_in),
        csv_f(est2),
        csv_f(stderr2),
        csv_f(target)
    ));
    em.write("ou_variance.csv", &csv)?;

    // Linear stability: with f = σ-difference = 0 the squared gap decays
    // at exactly rate 4.
    let u0_a: Field = backend.basis.mode_values(0).to_vec();
    let u0_b = vec![0.0; backend.n_nodes()];
    let reaction = ReactionSpec::additive(cfg.reaction_scale);
    let pair = engine::stability_pair(
        &backend,
        &u0_a,
        &u0_b,
        &reaction,
        &noise,
        cfg.horizon.max(1.0),
        cfg.dt.max(0.01),
        cfg.m.min(64),
    )?;
    em.write("stability_linear.csv", &pair.to_csv())?;
    let fit = fit_decay(&pair)?;
    let mut fits = String::from("case,rate,ci,floor\n");
    fits.push_str(&format!("linear,{},{},{}\n", csv_f(fit.rate), csv_f(fit.rate_ci), csv_f(4.0)));
    em.write("fits.csv", &fits)?;

    let verdicts = vec![
        Verdict::new(
            "ou-variance",
            (est - target).abs() <= 3.0 * stderr + 2e-3,
            3.0 * stderr + 2e-3 - (est - target).abs(),
            cfg.seed,
        ),
        Verdict::new(
            "burn-in-stability",
            (est2 - est).abs() <= stderr.max(stderr2),
            stderr.max(stderr2) - (est2 - est).abs(),
            cfg.seed,
        ),
        Verdict::new(
            "linear-decay-rate",
            fit.rate >= 4.0 - fit.rate_ci - 1e-6,
            fit.rate - (4.0 - fit.rate_ci - 1e-6),
            cfg.seed,
        ),
    ];
    em.finish(cfg, verdicts)
}

fn run_thm5(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let backend = cfg.spectral_backend()?;
    let reaction = cfg.reaction()?;
    reaction.probe(cfg.dim, cfg.seed, 200)?;
    let noise = cfg.noise()?;
    let cert = SmallnessCertificate::new(reaction.lipschitz, noise.trace());
    let mut csv = String::from("l,trace,cond1,cond2,eligible\n");
    csv.push_str(&format!(
        "{},{},{},{},{}\n",
        csv_f(cert.l),
        csv_f(cert.trace),
        csv_f(cert.cond1),
        csv_f(cert.cond2),
        cert.eligible
    ));
    em.write("certificate.csv", &csv)?;

    let (ens, diffs) = engine::build_stationary(
        &backend,
        &reaction,
        &noise,
        cfg.burn_in,
        cfg.horizon,
        cfg.dt,
        cfg.iters,
        cfg.m,
    )?;
    let mut csv = String::from("sweep,diff,ratio\n");
    let mut max_ratio = 0.0f64;
    for (i, &d) in diffs.iter().enumerate() {
        let ratio = if i == 0 || diffs[i - 1] <= 1e-300 {
            f64::NAN
        } else {
            let r = d / diffs[i - 1];
            max_ratio = max_ratio.max(r);
            r
        };
        csv.push_str(&format!("{},{},{}\n", i + 1, csv_f(d), csv_f(ratio)));
    }
    em.write("diff_series.csv", &csv)?;

    // Uniform bound via the recursion x_{n+1} ≤ C₂ + b·x_n with
    // b = L²(1 + Σa_k) and C₂ measured from the first sweep.
    let mf = cfg.m as f64;
    // Sup over the grid of the ensemble mean squared H-norm, with the
    // standard error at the sup-attaining time.
    let sweep_sup = |paths: &[Vec<Field>]| -> Result<(f64, f64)> {
        let grid_len = paths[0].len();
        let mut sup = 0.0f64;
        let mut sup_stderr = 0.0f64;
        for i in 0..grid_len {
            let vals = paths
                .iter()
                .map(|p| backend.h_norm_sq(&p[i]))
                .collect::<Result<Vec<f64>>>()?;
            let mean = vals.iter().sum::<f64>() / mf;
            if mean > sup {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / mf;
                sup = mean;
                sup_stderr = (var / mf).sqrt();
            }
        }
        Ok((sup, sup_stderr))
    };
    // Rebuild the first iterate to measure C₂: one sweep from zero.
    let (first, _) = engine::build_stationary(
        &backend,
        &reaction,
        &noise,
        cfg.burn_in,
        cfg.horizon,
        cfg.dt,
        1,
        cfg.m,
    )?;
    let (c2, _) = sweep_sup(&first.paths)?;
    let b = reaction.lipschitz.powi(2) * (1.0 + noise.trace());
    let recursion_bound = c2 / (1.0 - b);
    let (final_sup, final_stderr) = sweep_sup(&ens.paths)?;

    let theory_ratio = engine::iteration_ratio(reaction.lipschitz, noise.trace());
    let mc_tol = 0.02;
    let ratio_bound = theory_ratio.min(0.03) + mc_tol;
    let mut fits = String::from("quantity,value,bound\n");
    fits.push_str(&format!("max_ratio,{},{}\n", csv_f(max_ratio), csv_f(ratio_bound)));
    fits.push_str(&format!("final_sup,{},{}\n", csv_f(final_sup), csv_f(recursion_bound)));
    em.write("uniform_bound.csv", &fits)?;

    // Nonlinear stability from two separated starts under common noise.
    let u0_a: Field = backend.basis.mode_values(0).iter().map(|v| 2.0 * v).collect();
    let u0_b: Field = backend.basis.mode_values(0).iter().map(|v| -2.0 * v).collect();
    let pair = engine::stability_pair(
        &backend,
        &u0_a,
        &u0_b,
        &reaction,
        &noise,
        cfg.horizon,
        cfg.dt,
        cfg.m,
    )?;
    em.write("stability_nonlinear.csv", &pair.to_csv())?;
    let fit = fit_decay(&pair)?;
    let floor = engine::gronwall_rate(reaction.lipschitz, noise.trace());
    let mut fitcsv = String::from("case,rate,ci,floor\n");
    fitcsv.push_str(&format!(
        "nonlinear,{},{},{}\n",
        csv_f(fit.rate),
        csv_f(fit.rate_ci),
        csv_f(floor)
    ));
    em.write("fits.csv", &fitcsv)?;
    let pts: Vec<(f64, f64)> = pair
        .times
        .iter()
        .zip(&pair.estimates)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&t, &e)| (t, e.ln()))
        .collect();
    em.write(
        "stability_nonlinear.svg",
        &svg_line_plot("log squared gap", &[("log estimate", &pts)]),
    )?;

    let verdicts = vec![
        Verdict::new("certificate", cert.eligible, 2.0 / 3.0 - cert.cond2, cfg.seed),
        Verdict::new(
            "iteration-ratio",
            max_ratio <= ratio_bound,
            ratio_bound - max_ratio,
            cfg.seed,
        ),
        Verdict::new(
            "uniform-bound",
            final_sup <= recursion_bound + 3.0 * final_stderr,
            recursion_bound + 3.0 * final_stderr - final_sup,
            cfg.seed,
        ),
        Verdict::new(
            "nonlinear-decay-rate",
            fit.rate >= floor - fit.rate_ci,
            fit.rate - (floor - fit.rate_ci),
            cfg.seed,
        ),
    ];
    em.finish(cfg, verdicts)
}

/// Functional family used for distribution comparisons: H-norm plus the
/// three leading spectral coefficients.
fn functionals(backend: &SpectralBackend, u: &Field) -> Result<Vec<f64>> {
    let c = backend.basis.to_coeffs(u)?;
    Ok(vec![
        backend.h_norm_sq(u)?.sqrt(),
        c.coeffs[0],
        c.coeffs[1],
        c.coeffs[2],
    ])
}

fn measure_at(
    backend: &SpectralBackend,
    states: &[Vec<f64>],
) -> Result<EmpiricalMeasure> {
    let mut rows = vec![Vec::with_capacity(states.len()); 4];
    for u in states {
        let f = functionals(backend, u)?;
        for (row, v) in rows.iter_mut().zip(f) {
            row.push(v);
        }
    }
    EmpiricalMeasure::from_samples(rows)
}

fn run_uniqueness(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let backend = cfg.spectral_backend()?;
    let reaction = cfg.reaction()?;
    reaction.probe(cfg.dim, cfg.seed, 200)?;
    let noise = cfg.noise()?;
    let cert = SmallnessCertificate::new(reaction.lipschitz, noise.trace());
    if !cert.eligible {
        return Err(Error::IneligibleCertificate(format!(
            "cond1 = {:.4}, cond2 = {:.4}",
            cert.cond1, cert.cond2
        )));
    }

    // Decay rate from a common-noise pair, then the horizon where the
    // initial separation has shrunk below 10⁻⁴ of itself.
    let u0_a: Field = backend.basis.mode_values(0).iter().map(|v| 0.5 * v).collect();
    let u0_b: Field = backend.basis.mode_values(0).iter().map(|v| -0.5 * v).collect();
    let pair = engine::stability_pair(
        &backend,
        &u0_a,
        &u0_b,
        &reaction,
        &noise,
        2.0,
        cfg.dt,
        cfg.m.min(128),
    )?;
    let fit = fit_decay(&pair)?;
    let r_hat = fit.rate.max(0.1);
    let horizon = ((1e4f64.ln() + 1.0) / r_hat).max(1.0).min(cfg.horizon.max(1.0));
    let mut csv = String::from("r_hat,ci,horizon\n");
    csv.push_str(&format!("{},{},{}\n", csv_f(r_hat), csv_f(fit.rate_ci), csv_f(horizon)));
    em.write("rate.csv", &csv)?;

    // Independent ensembles from the two starts.
    let run_group = |u0: &Field, offset: u64| -> Result<Vec<Vec<Field>>> {
        (0..cfg.m as u64)
            .into_par_iter()
            .map(|j| {
                let t = engine::solve(
                    &backend,
                    u0,
                    0.0,
                    horizon,
                    cfg.dt,
                    &reaction,
                    &noise,
                    offset + j,
                )?;
                Ok(t.states)
            })
            .collect()
    };
    let group_a = run_group(&u0_a, 0)?;
    let group_b = run_group(&u0_b, cfg.m as u64)?;
    let n_times = group_a[0].len();
    let checkpoints = [n_times / 3, 2 * n_times / 3, n_times - 1];
    let mut csv = String::from("t,statistic,p_value\n");
    let mut final_p = 0.0;
    for (ci, &idx) in checkpoints.iter().enumerate() {
        let ma = measure_at(&backend, &group_a.iter().map(|p| p[idx].clone()).collect::<Vec<_>>())?;
        let mb = measure_at(&backend, &group_b.iter().map(|p| p[idx].clone()).collect::<Vec<_>>())?;
        let test = energy_distance(&ma, &mb, cfg.seed.wrapping_add(ci as u64))?;
        let t = idx as f64 * cfg.dt;
        csv.push_str(&format!("{},{},{}\n", csv_f(t), csv_f(test.statistic), csv_f(test.p_value)));
        if ci == checkpoints.len() - 1 {
            final_p = test.p_value;
        }
    }
    em.write("energy_distance.csv", &csv)?;

    // Stationarity of the constructed invariant state: two distinct
    // times of the stationary ensemble share a law.
    let (ens, _) = engine::build_stationary(
        &backend,
        &reaction,
        &noise,
        cfg.burn_in,
        cfg.horizon.min(3.0),
        cfg.dt,
        4,
        cfg.m.min(256),
    )?;
    let origin = ens.grid.iter().position(|&t| t == 0.0).unwrap_or(0);
    let late = ens.grid.len() - 1;
    let m1 = measure_at(&backend, &ens.paths.iter().map(|p| p[origin].clone()).collect::<Vec<_>>())?;
    let m2 = measure_at(&backend, &ens.paths.iter().map(|p| p[late].clone()).collect::<Vec<_>>())?;
    let stat_test = energy_distance(&m1, &m2, cfg.seed.wrapping_add(101))?;
    let mut csv = String::from("t1,t2,statistic,p_value\n");
    csv.push_str(&format!(
        "{},{},{},{}\n",
        csv_f(ens.grid[origin]),
        csv_f(ens.grid[late]),
        csv_f(stat_test.statistic),
        csv_f(stat_test.p_value)
    ));
    em.write("stationarity.csv", &csv)?;

    let verdicts = vec![
        Verdict::new("laws-merge", final_p > 0.05, final_p - 0.05, cfg.seed),
        Verdict::new(
            "stationary-two-time",
            stat_test.p_value > 0.05,
            stat_test.p_value - 0.05,
            cfg.seed,
        ),
    ];
    em.finish(cfg, verdicts)
}

fn run_doob(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let mut em = Emitter::new(&cfg.out)?;
    let spec1 = NoiseSpec::with_variances(vec![1.0], 1, cfg.seed)?;
    let spec_multi = cfg.noise()?;
    let cases: Vec<(&str, &NoiseSpec, Box<dyn Fn(f64, usize) -> f64>)> = vec![
        ("constant", &spec1, Box::new(|_, _| 1.0)),
        ("sqrt_t", &spec1, Box::new(|s: f64, _| s.sqrt())),
        ("multimode", &spec_multi, Box::new(|s: f64, k| (s * (k + 1) as f64).cos())),
    ];
    let mut csv = String::from("name,lhs,lhs_stderr,rhs,pass\n");
    let mut verdicts = Vec::new();
    for (name, spec, g) in &cases {
        let rep = doob_probe(spec, g.as_ref(), 1.0, 256, cfg.m.max(100), cfg.seed)?;
        csv.push_str(&format!(
            "{name},{},{},{},{}\n",
            csv_f(rep.lhs),
            csv_f(rep.lhs_stderr),
            csv_f(rep.rhs),
            rep.pass
        ));
        verdicts.push(Verdict::new(
            &format!("doob-{name}"),
            rep.pass,
            rep.rhs + 3.0 * rep.lhs_stderr - rep.lhs,
            cfg.seed,
        ));
    }
    em.write("doob.csv", &csv)?;
    em.finish(cfg, verdicts)
}

/// Per-column numeric comparison of the CSV artifacts in two run
/// directories.
#[derive(Debug)]
pub struct CompareReport {
    pub pass: bool,
    /// `(file, column, max abs diff, within tolerance)`.
    pub columns: Vec<(String, String, f64, bool)>,
}

/// Compares every CSV in `baseline_dir` against the same file in
/// `run_dir`, column by column; numeric entries must agree within
/// `tol·(1+|baseline|)`, non-numeric entries must match exactly.
pub fn compare_baseline(run_dir: &Path, baseline_dir: &Path, tol: f64) -> Result<CompareReport> {
    let mut columns = Vec::new();
    let mut pass = true;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(baseline_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::Config(format!(
            "no CSV artifacts in baseline {}",
            baseline_dir.display()
        )));
    }
    for base_path in entries {
        let name = base_path.file_name().unwrap().to_string_lossy().to_string();
        let run_path = run_dir.join(&name);
        let base = std::fs::read_to_string(&base_path)?;
        let run = std::fs::read_to_string(&run_path)?;
        let parse = |text: &str| -> Result<(Vec<String>, Vec<Vec<String>>)> {
            let mut lines = text.lines();
            let header: Vec<String> = lines
                .next()
                .ok_or_else(|| Error::Config(format!("{name}: empty CSV")))?
                .split(',')
                .map(str::to_string)
                .collect();
            let rows = lines
                .map(|l| l.split(',').map(str::to_string).collect())
                .collect();
            Ok((header, rows))
        };
        let (bh, brows) = parse(&base)?;
        let (rh, rrows) = parse(&run)?;
        for (ci, col) in bh.iter().enumerate() {
            let Some(rci) = rh.iter().position(|c| c == col) else {
                return Err(Error::Config(format!("{name}: missing column '{col}'")));
            };
            let mut max_diff = 0.0f64;
            let mut ok = brows.len() == rrows.len();
            for (br, rr) in brows.iter().zip(&rrows) {
                let (bv, rv) = (&br[ci], &rr[rci]);
                match (bv.parse::<f64>(), rv.parse::<f64>()) {
                    (Ok(b), Ok(r)) => {
                        let diff = (b - r).abs();
                        max_diff = max_diff.max(diff);
                        if !(diff <= tol * (1.0 + b.abs())) {
                            ok = false;
                        }
                    }
                    _ => {
                        if bv != rv {
                            ok = false;
                            max_diff = f64::INFINITY;
                        }
                    }
                }
            }
            pass &= ok;
            columns.push((name.clone(), col.clone(), max_diff, ok));
        }
    }
    Ok(CompareReport { pass, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let mut cfg = ExperimentConfig::for_experiment("picard").unwrap();
        assert_eq!(cfg.reaction_kind, "lipschitz");
        cfg.apply_text("seed=7\nm=16\n[noise]\nmodes=2\nvariances=0.5,0.5\n")
            .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.m, 16);
        assert_eq!(cfg.noise_variances, vec![0.5, 0.5]);
        assert!(cfg.apply_text("nonsense=1\n").is_err());
        assert!(cfg.apply_text("just a line\n").is_err());
        assert!(ExperimentConfig::for_experiment("nope").is_err());
    }

    #[test]
    fn manifest_echoes_every_field() {
        let cfg = ExperimentConfig::for_experiment("thm5").unwrap();
        let m = cfg.manifest();
        for key in [
            "experiment=",
            "backend=",
            "dim=",
            "weight.kind=",
            "reaction.kind=",
            "noise.modes=",
            "noise.variances=",
            "grid.r=",
            "spectral.cutoff=",
            "dt=",
            "horizon=",
            "burn_in=",
            "m=",
            "seed=",
            "version=",
        ] {
            assert!(m.contains(key), "manifest missing {key}");
        }
    }

    #[test]
    fn spectrum_experiment_end_to_end() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::for_experiment("spectrum").unwrap();
        cfg.out = tmp.path().join("spectrum");
        let arts = run_experiment(&cfg).unwrap();
        assert!(arts.all_pass());
        assert!(arts.dir.join("manifest.txt").exists());
        assert!(arts.dir.join("spectrum.csv").exists());
        assert!(arts.dir.join("verdicts.txt").exists());
        let csv = std::fs::read_to_string(arts.dir.join("spectrum.csv")).unwrap();
        assert!(csv.starts_with("index,eigenvalue\n"));
        assert!(csv.contains(",-2\n"));
    }

    #[test]
    fn lemma1_experiment_passes() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::for_experiment("lemma1").unwrap();
        cfg.out = tmp.path().join("lemma1");
        let arts = run_experiment(&cfg).unwrap();
        assert!(arts.all_pass());
    }

    #[test]
    fn determinism_and_baseline_compare() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::for_experiment("lemma1").unwrap();
        cfg.out = tmp.path().join("a");
        run_experiment(&cfg).unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.out = tmp.path().join("b");
        run_experiment(&cfg2).unwrap();
        // Byte-identical artifacts under identical config and seed.
        let a = std::fs::read(cfg.out.join("lemma1.csv")).unwrap();
        let b = std::fs::read(cfg2.out.join("lemma1.csv")).unwrap();
        assert_eq!(a, b);
        let rep = compare_baseline(&cfg.out, &cfg2.out, 1e-12).unwrap();
        assert!(rep.pass);
        // A different seed perturbs the stochastic columns but not the
        // analytic bound column.
        let mut cfg3 = cfg.clone();
        cfg3.seed = 43;
        cfg3.out = tmp.path().join("c");
        run_experiment(&cfg3).unwrap();
        let rep = compare_baseline(&cfg3.out, &cfg.out, 1e-12).unwrap();
        assert!(!rep.pass);
        for (file, col, _, ok) in &rep.columns {
            if file == "lemma1.csv" && (col == "bound" || col == "sq_bound" || col == "t") {
                assert!(ok, "analytic column {col} should match");
            }
        }
    }
}
