//! Monte-Carlo estimation utilities: moment series with boundedness
//! verdicts, log-linear decay fits, time-averaged empirical measures,
//! two-sample energy-distance tests, a maximal-inequality probe, and a
//! nonparametric trend test.

use rand::Rng;

use crate::noise::{sample_path, NoiseSpec};
use crate::rng::substream;
use crate::{Error, Result};

/// Pointwise mean and standard error of a squared-norm functional over
/// an ensemble sharing one time grid.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub m: usize,
    pub norm_tag: String,
}

impl MomentSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,estimate,stderr\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                self.times[i], self.estimates[i], self.stderrs[i]
            ));
        }
        out
    }
}

/// Mean and stderr at each time of per-trajectory series
/// (`samples[j][i]` = trajectory `j` at time `i`). Requires `M ≥ 2`.
pub fn moment_series(
    samples: &[Vec<f64>],
    times: &[f64],
    norm_tag: &str,
) -> Result<MomentSeries> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::EnsembleTooSmall(m));
    }
    for s in samples {
        if s.len() != times.len() {
            return Err(Error::InvalidParameter("ensemble grids disagree".into()));
        }
    }
    let n = times.len();
    let mut estimates = vec![0.0; n];
    let mut stderrs = vec![0.0; n];
    for i in 0..n {
        let mean = samples.iter().map(|s| s[i]).sum::<f64>() / m as f64;
        let var = samples
            .iter()
            .map(|s| (s[i] - mean).powi(2))
            .sum::<f64>()
            / (m - 1) as f64;
        estimates[i] = mean;
        stderrs[i] = (var / m as f64).sqrt();
    }
    Ok(MomentSeries {
        times: times.to_vec(),
        estimates,
        stderrs,
        m,
        norm_tag: norm_tag.to_string(),
    })
}

/// Boundedness verdict against a fixed constant.
#[derive(Debug, Clone)]
pub struct SupVerdict {
    pub pass: bool,
    /// Smallest `bound + 3σ - estimate` over the series.
    pub worst_margin: f64,
    pub worst_index: usize,
}

/// PASS iff `estimate ≤ bound + 3·stderr` at every time.
pub fn sup_verdict(series: &MomentSeries, bound: f64) -> Result<SupVerdict> {
    if series.times.is_empty() {
        return Err(Error::InvalidParameter("empty moment series".into()));
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst_index = 0;
    for i in 0..series.times.len() {
        let margin = bound + 3.0 * series.stderrs[i] - series.estimates[i];
        if margin < worst_margin {
            worst_margin = margin;
            worst_index = i;
        }
    }
    Ok(SupVerdict { pass: worst_margin >= 0.0, worst_margin, worst_index })
}

/// A decaying expectation series, e.g. `Ê‖u_a(t) − u_b(t)‖²`.
#[derive(Debug, Clone)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
}

impl DecaySeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,estimate,stderr\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                self.times[i], self.estimates[i], self.stderrs[i]
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DecayFit {
    /// Positive decay rate `r̂` in `estimate ≈ C e^{-r̂ t}`.
    pub rate: f64,
    /// `log C`.
    pub intercept: f64,
    /// 95% half-width on the rate from the residual variance.
    pub rate_ci: f64,
    /// True if trailing nonpositive values forced a shorter window.
    pub window_shortened: bool,
}

/// Least-squares fit of `log(estimate)` against `t`. The fit window ends
/// at the first nonpositive value (the series has hit the Monte-Carlo
/// noise floor beyond that point); this is flagged, not an error, unless
/// fewer than three points remain.
pub fn fit_decay(series: &DecaySeries) -> Result<DecayFit> {
    let mut end = series.estimates.len();
    for (i, &v) in series.estimates.iter().enumerate() {
        if v <= 0.0 {
            end = i;
            break;
        }
    }
    let shortened = end < series.estimates.len();
    if end < 3 {
        return Err(Error::InvalidParameter(
            "decay fit needs at least three positive values".into(),
        ));
    }
    let ts = &series.times[..end];
    let ys: Vec<f64> = series.estimates[..end].iter().map(|v| v.ln()).collect();
    let n = end as f64;
    let tbar = ts.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - tbar).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * tbar;
    let rss: f64 = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    let se = if end > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(DecayFit {
        rate: -slope,
        intercept,
        rate_ci: 1.96 * se,
        window_shortened: shortened,
    })
}

/// Samples of a fixed family of functionals, one row per functional.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    /// `samples[f][j]` = functional `f` on sample `j`.
    pub samples: Vec<Vec<f64>>,
    /// Set when sampling had to reuse grid points.
    pub with_replacement: bool,
}

impl EmpiricalMeasure {
    pub fn n_functionals(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample `j` as a point in functional space.
    fn point(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|row| row[j]).collect()
    }

    pub fn from_samples(samples: Vec<Vec<f64>>) -> Result<Self> {
        let n = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter(
                "functional sample counts disagree".into(),
            ));
        }
        Ok(Self { samples, with_replacement: false })
    }
}

/// Time-averaged empirical measure: functional values read off at
/// uniform-random grid times in `[0, T]`. `series[f][i]` holds
/// functional `f` along the trajectory grid `times`.
pub fn kb_average(
    times: &[f64],
    series: &[Vec<f64>],
    t_max: f64,
    sample_count: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    let horizon = *times.last().ok_or(Error::NonMonotoneGrid)?;
    if horizon < t_max {
        return Err(Error::InvalidParameter(format!(
            "trajectory horizon {horizon} shorter than averaging window {t_max}"
        )));
    }
    for row in series {
        if row.len() != times.len() {
            return Err(Error::InvalidParameter("functional grid mismatch".into()));
        }
    }
    let eligible = times.iter().filter(|&&t| t <= t_max).count();
    let with_replacement = sample_count > eligible;
    let mut rng = substream(seed, &[0x6b62, sample_count as u64]);
    let mut samples = vec![Vec::with_capacity(sample_count); series.len()];
    for _ in 0..sample_count {
        let t: f64 = rng.gen_range(0.0..=t_max);
        // Nearest grid index at or below t.
        let idx = times.partition_point(|&g| g <= t).saturating_sub(1);
        for (f, row) in series.iter().enumerate() {
            samples[f].push(row[idx]);
        }
    }
    Ok(EmpiricalMeasure { samples, with_replacement })
}

#[derive(Debug, Clone)]
pub struct EnergyTest {
    pub statistic: f64,
    /// Permutation p-value over 999 label shuffles.
    pub p_value: f64,
}

/// Two-sample energy distance between empirical measures, with a
/// permutation p-value. Samples are points in functional space under the
/// Euclidean metric.
pub fn energy_distance(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    seed: u64,
) -> Result<EnergyTest> {
    if a.n_functionals() != b.n_functionals() || a.n_functionals() == 0 {
        return Err(Error::InvalidParameter(
            "energy distance needs matching functional families".into(),
        ));
    }
    let n = a.len();
    let m = b.len();
    if n < 2 || m < 2 {
        return Err(Error::EnsembleTooSmall(n.min(m)));
    }
    let mut pool: Vec<Vec<f64>> = (0..n).map(|j| a.point(j)).collect();
    pool.extend((0..m).map(|j| b.point(j)));
    let total = n + m;
    let mut dist = vec![0.0; total * total];
    for i in 0..total {
        for j in (i + 1)..total {
            let d = pool[i]
                .iter()
                .zip(&pool[j])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }
    }
    let stat_for = |labels: &[usize]| -> f64 {
        // labels lists pool indices of group A; the rest are group B.
        let mut in_a = vec![false; total];
        for &i in labels {
            in_a[i] = true;
        }
        let (mut within_a, mut within_b, mut between) = (0.0, 0.0, 0.0);
        for i in 0..total {
            for j in (i + 1)..total {
                let d = dist[i * total + j];
                match (in_a[i], in_a[j]) {
                    (true, true) => within_a += d,
                    (false, false) => within_b += d,
                    _ => between += d,
                }
            }
        }
        2.0 * between / (n * m) as f64
            - 2.0 * within_a / (n * n) as f64
            - 2.0 * within_b / (m * m) as f64
    };
    let observed = stat_for(&(0..n).collect::<Vec<_>>());
    let mut rng = substream(seed, &[0x656e, n as u64, m as u64]);
    let mut at_least = 1usize;
    let perms = 999;
    let mut indices: Vec<usize> = (0..total).collect();
    for _ in 0..perms {
        // Partial Fisher-Yates: the first n entries become group A.
        for i in 0..n {
            let j = rng.gen_range(i..total);
            indices.swap(i, j);
        }
        if stat_for(&indices[..n]) >= observed {
            at_least += 1;
        }
    }
    Ok(EnergyTest { statistic: observed, p_value: at_least as f64 / (perms + 1) as f64 })
}

#[derive(Debug, Clone)]
pub struct DoobReport {
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Maximal-inequality probe for the martingale
/// `X_ν = Σ_k √a_k ∫₀^ν g_k(s) dβ_k(s)`:
/// Monte-Carlo `E sup_{ν≤T} X_ν²` against `4 Σ_k a_k ∫₀^T g_k² ds`.
pub fn doob_probe(
    spec: &NoiseSpec,
    g: &dyn Fn(f64, usize) -> f64,
    t_max: f64,
    steps: usize,
    m: usize,
    seed: u64,
) -> Result<DoobReport> {
    if m < 100 {
        return Err(Error::EnsembleTooSmall(m));
    }
    if t_max <= 0.0 || steps == 0 {
        return Err(Error::InvalidParameter("bad probe window".into()));
    }
    let dt = t_max / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    // Midpoint rule on both sides keeps the discretizations consistent.
    let mut rhs = 0.0;
    for (k, &ak) in spec.a.iter().enumerate() {
        for i in 0..steps {
            let s = (grid[i] + grid[i + 1]) / 2.0;
            rhs += ak * g(s, k).powi(2) * dt;
        }
    }
    rhs *= 4.0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for j in 0..m {
        let path = sample_path(spec, &grid, seed.wrapping_add(j as u64))?;
        let mut x = 0.0;
        let mut sup_sq: f64 = 0.0;
        for i in 0..steps {
            let s = (grid[i] + grid[i + 1]) / 2.0;
            for (k, &ak) in spec.a.iter().enumerate() {
                x += ak.sqrt() * g(s, k) * path.increments[k][i];
            }
            sup_sq = sup_sq.max(x * x);
        }
        sum += sup_sq;
        sum_sq += sup_sq * sup_sq;
    }
    let lhs = sum / m as f64;
    let var = (sum_sq / m as f64 - lhs * lhs).max(0.0) * m as f64 / (m - 1) as f64;
    let lhs_stderr = (var / m as f64).sqrt();
    Ok(DoobReport { lhs, lhs_stderr, rhs, pass: lhs <= rhs + 3.0 * lhs_stderr })
}

#[derive(Debug, Clone)]
pub struct MannKendall {
    pub s: i64,
    pub z: f64,
    pub p_value: f64,
    /// Trend detected at the 5% two-sided level.
    pub trend: bool,
}

/// Mann-Kendall trend test. Continuous MC estimates make ties measure
/// zero, so the untied variance formula is used.
pub fn mann_kendall(series: &[f64]) -> Result<MannKendall> {
    let n = series.len();
    if n < 8 {
        return Err(Error::InvalidParameter(
            "trend test needs at least 8 points".into(),
        ));
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            s += (series[j] - series[i]).signum() as i64;
        }
    }
    let nf = n as f64;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let p_value = 2.0 * (1.0 - normal_cdf(z.abs()));
    Ok(MannKendall { s, z, p_value, trend: p_value < 0.05 })
}

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf
/// approximation (|error| < 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize, mean: f64, sd: f64) -> Vec<f64> {
        let mut rng = substream(seed, &[99]);
        (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            })
            .collect()
    }

    #[test]
    fn moment_series_zero_and_deterministic() {
        let times = vec![0.0, 1.0, 2.0];
        let zeros = vec![vec![0.0; 3]; 4];
        let s = moment_series(&zeros, &times, "test").unwrap();
        assert!(s.estimates.iter().all(|&v| v == 0.0));
        assert!(s.stderrs.iter().all(|&v| v == 0.0));
        let constant = vec![vec![2.0; 3]; 4];
        let s = moment_series(&constant, &times, "test").unwrap();
        assert!(s.estimates.iter().all(|&v| v == 2.0));
        assert!(s.stderrs.iter().all(|&v| v == 0.0));
        assert!(moment_series(&zeros[..1], &times, "t").is_err());
    }

    #[test]
    fn stderr_scales_as_inverse_sqrt_m() {
        let times = vec![0.0];
        let draws = normals(7, 4096, 0.0, 1.0);
        let small: Vec<Vec<f64>> = draws[..256].iter().map(|&v| vec![v]).collect();
        let large: Vec<Vec<f64>> = draws[..1024].iter().map(|&v| vec![v]).collect();
        let a = moment_series(&small, &times, "t").unwrap().stderrs[0];
        let b = moment_series(&large, &times, "t").unwrap().stderrs[0];
        let ratio = b / a;
        assert!((ratio - 0.5).abs() < 0.1, "quadrupling M halves stderr, got {ratio}");
    }

    #[test]
    fn sup_verdict_pass_and_spike() {
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mut series = MomentSeries {
            times: times.clone(),
            estimates: vec![0.5; 10],
            stderrs: vec![0.01; 10],
            m: 100,
            norm_tag: "t".into(),
        };
        let v = sup_verdict(&series, 1.0).unwrap();
        assert!(v.pass);
        series.estimates[7] = 1.2;
        let v = sup_verdict(&series, 1.0).unwrap();
        assert!(!v.pass);
        assert_eq!(v.worst_index, 7);
    }

    #[test]
    fn fit_decay_exact_exponential() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let estimates: Vec<f64> = times.iter().map(|t| (-4.0 * t).exp()).collect();
        let series = DecaySeries { times, estimates, stderrs: vec![0.0; 50] };
        let fit = fit_decay(&series).unwrap();
        assert_abs_diff_eq!(fit.rate, 4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-6);
        assert!(!fit.window_shortened);
    }

    #[test]
    fn fit_decay_shortens_at_noise_floor() {
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let mut estimates: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        estimates[15] = 0.0;
        let series = DecaySeries { times, estimates, stderrs: vec![0.0; 20] };
        let fit = fit_decay(&series).unwrap();
        assert!(fit.window_shortened);
        assert_abs_diff_eq!(fit.rate, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn kb_average_point_mass() {
        let times: Vec<f64> = (0..101).map(|i| i as f64 * 0.1).collect();
        let series = vec![vec![3.0; 101]];
        let m = kb_average(&times, &series, 10.0, 50, 5).unwrap();
        assert!(m.samples[0].iter().all(|&v| v == 3.0));
        assert!(!m.with_replacement);
        let m = kb_average(&times, &series, 10.0, 500, 5).unwrap();
        assert!(m.with_replacement);
    }

    #[test]
    fn energy_distance_identical_is_zero() {
        let a = EmpiricalMeasure::from_samples(vec![normals(1, 64, 0.0, 1.0)]).unwrap();
        let t = energy_distance(&a, &a, 11).unwrap();
        assert_abs_diff_eq!(t.statistic, 0.0, epsilon = 1e-12);
        assert!(t.p_value > 0.05);
    }

    #[test]
    fn energy_distance_null_and_power() {
        // Same law: statistic should sit inside the permutation null.
        let a = EmpiricalMeasure::from_samples(vec![normals(21, 128, 0.0, 1.0)]).unwrap();
        let b = EmpiricalMeasure::from_samples(vec![normals(22, 128, 0.0, 1.0)]).unwrap();
        let t = energy_distance(&a, &b, 13).unwrap();
        assert!(t.p_value > 0.05, "p = {}", t.p_value);
        // Variances 0.125 vs 0.5: rejected with plenty of samples.
        let a = EmpiricalMeasure::from_samples(vec![normals(23, 1000, 0.0, 0.125f64.sqrt())])
            .unwrap();
        let b = EmpiricalMeasure::from_samples(vec![normals(24, 1000, 0.0, 0.5f64.sqrt())])
            .unwrap();
        let t = energy_distance(&a, &b, 14).unwrap();
        assert!(t.p_value < 0.05, "p = {}", t.p_value);
    }

    #[test]
    fn energy_distance_family_mismatch() {
        let a = EmpiricalMeasure::from_samples(vec![vec![0.0; 8]]).unwrap();
        let b = EmpiricalMeasure::from_samples(vec![vec![0.0; 8], vec![0.0; 8]]).unwrap();
        assert!(energy_distance(&a, &b, 1).is_err());
    }

    #[test]
    fn doob_probe_oracles() {
        let spec = NoiseSpec::with_variances(vec![1.0], 1, 42).unwrap();
        // g ≡ 0.
        let r = doob_probe(&spec, &|_, _| 0.0, 1.0, 64, 200, 1).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert!(r.pass);
        // g ≡ 1: rhs = 4, lhs ≈ E sup |β|² < 4.
        let r = doob_probe(&spec, &|_, _| 1.0, 1.0, 256, 2000, 2).unwrap();
        assert_abs_diff_eq!(r.rhs, 4.0, epsilon = 1e-12);
        assert!(r.lhs < 4.0 && r.lhs > 1.0, "lhs = {}", r.lhs);
        assert!(r.pass);
        // g = √s: rhs = 4 ∫ s ds = 2 up to the midpoint rule.
        let r = doob_probe(&spec, &|s, _| s.sqrt(), 1.0, 512, 200, 3).unwrap();
        assert_abs_diff_eq!(r.rhs, 2.0, epsilon = 1e-4);
        assert!(doob_probe(&spec, &|_, _| 0.0, 1.0, 64, 50, 1).is_err());
    }

    #[test]
    fn mann_kendall_detects_trend_and_plateau() {
        let up: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let t = mann_kendall(&up).unwrap();
        assert!(t.trend && t.z > 0.0);
        let flat = normals(31, 40, 5.0, 0.01);
        let t = mann_kendall(&flat).unwrap();
        assert!(!t.trend, "p = {}", t.p_value);
        assert!(mann_kendall(&up[..5]).is_err());
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert_abs_diff_eq!(normal_cdf(0.0), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(normal_cdf(1.96), 0.975, epsilon = 1e-3);
        assert_abs_diff_eq!(normal_cdf(-1.96), 0.025, epsilon = 1e-3);
    }
}
