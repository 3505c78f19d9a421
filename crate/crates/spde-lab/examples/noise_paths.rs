//! Sampling a truncated Q-Wiener process: one-sided paths, two-sided
//! extension through the origin, and the Itô isometry as a sanity check.
//!
//!     cargo run --example noise_paths

use spde_lab::noise::{extend_two_sided, ito_isometry_probe, sample_path, NoiseSpec};

fn main() -> spde_lab::Result<()> {
    let spec = NoiseSpec::geometric(4, 1, 7)?;
    println!("mode variances: {:?} (trace {:.4})", spec.a, spec.trace());

    let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    let path = sample_path(&spec, &grid, 0)?;
    let w0 = path.mode_values(0);
    println!(
        "one-sided path, mode 0: W(0) = {}, W(1) = {:.4}, {} steps",
        w0[0],
        w0[w0.len() - 1],
        path.steps()
    );

    let grid2: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.01).collect();
    let path2 = extend_two_sided(&spec, &grid2, 0)?;
    let w = path2.mode_values(0);
    let origin = grid2.iter().position(|&t| t == 0.0).unwrap();
    println!(
        "two-sided path anchored at the origin: W(-0.5) = {:.4}, W(0) = {}, W(0.5) = {:.4}",
        w[0], w[origin], w[w.len() - 1]
    );

    // E (Σ_k √a_k ∫ g dβ_k)² should equal Σ_k a_k ∫ g².
    let probe = ito_isometry_probe(&|_, s| s.sqrt(), &spec, 1.0, 200, 2000, 7)?;
    println!(
        "isometry probe g = sqrt(s): mc = {:.4} ± {:.4}, analytic = {:.4}",
        probe.mc_lhs, probe.mc_stderr, probe.analytic_rhs
    );
    Ok(())
}
