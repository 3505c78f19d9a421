//! Calibration on the linear equation: forcing a single eigenmode turns
//! the dynamics into a scalar Ornstein-Uhlenbeck process whose
//! stationary variance `a / (2|mu|)` is known in closed form.
//!
//!     cargo run --example linear_stationary

use spde_lab::engine::{self, Backend, NoiseForcing, SpectralBackend};
use spde_lab::noise::NoiseSpec;
use spde_lab::spectral::EigenBasis;

fn main() -> spde_lab::Result<()> {
    let basis = EigenBasis::new(1, 4, 16)?;
    let backend = SpectralBackend::new(basis, NoiseForcing::EigenModes(1))?;
    let a = 0.5;
    let noise = NoiseSpec::with_variances(vec![a], 1, 3)?;
    let mu = backend.basis.eigenvalues[0];
    let target = engine::ou_stationary_variance(a, mu);
    println!("mode mu = {mu}, variance target a/(2|mu|) = {target}");

    let (burn, dt, m) = (7.0f64, 0.01, 2000);
    let n_neg = (burn / dt).round() as usize;
    let ones = vec![1.0; backend.n_nodes()];
    let phi = vec![ones; n_neg + 1];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for j in 0..m {
        let t = engine::stochastic_convolution(
            &backend,
            None,
            Some(&phi),
            burn,
            0.0,
            dt,
            &noise,
            j,
            1,
        )?;
        let c = backend.leading_coeff(t.states.last().unwrap())?;
        sum += c * c;
        sum_sq += c * c * c * c;
    }
    let mf = m as f64;
    let est = sum / mf;
    let stderr = ((sum_sq / mf - est * est).max(0.0) / mf).sqrt();
    println!("monte-carlo variance at t = 0: {est:.5} ± {stderr:.5} (m = {m})");
    println!(
        "|estimate - target| = {:.2e} ({:.1} standard errors)",
        (est - target).abs(),
        (est - target).abs() / stderr
    );
    Ok(())
}
