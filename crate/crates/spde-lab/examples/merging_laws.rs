//! Uniqueness surrogate: independent ensembles from two different
//! initial states become statistically indistinguishable, witnessed by
//! an energy-distance permutation test on a family of functionals.
//!
//!     cargo run --example merging_laws

use spde_lab::engine::{self, NoiseForcing, ReactionSpec, SpectralBackend};
use spde_lab::noise::{BasisSpec, NoiseSpec};
use spde_lab::spectral::EigenBasis;
use spde_lab::stats::{energy_distance, EmpiricalMeasure};
use std::sync::Arc;

fn main() -> spde_lab::Result<()> {
    let basis = EigenBasis::new(1, 4, 16)?;
    let backend = SpectralBackend::new(basis, NoiseForcing::Window(BasisSpec::build(4, 1)?))?;
    let noise = NoiseSpec::with_variances(vec![0.5, 0.25, 0.125, 0.125], 1, 21)?;
    let l = 0.2;
    let reaction = ReactionSpec {
        f: Arc::new(move |_, u: f64| l * u.sin()),
        sigma: Arc::new(move |_, u: f64| l * u.cos()),
        lipschitz: l,
        f_envelope: None,
        sigma_envelope: None,
        sigma_sup: Some(l),
        cutoff: None,
    };
    let u0_a: Vec<f64> = backend.basis.mode_values(0).iter().map(|v| 0.5 * v).collect();
    let u0_b: Vec<f64> = backend.basis.mode_values(0).iter().map(|v| -0.5 * v).collect();

    let (m, dt) = (200usize, 0.02);
    let functionals = |states: Vec<Vec<f64>>| -> spde_lab::Result<EmpiricalMeasure> {
        let mut rows = vec![Vec::new(); 2];
        for u in &states {
            let c = backend.basis.to_coeffs(u)?;
            rows[0].push(c.coeffs[0]);
            rows[1].push(c.coeffs[1]);
        }
        EmpiricalMeasure::from_samples(rows)
    };
    for horizon in [0.5, 1.5, 3.5] {
        let mut final_a = Vec::new();
        let mut final_b = Vec::new();
        for j in 0..m as u64 {
            let ta = engine::solve(&backend, &u0_a, 0.0, horizon, dt, &reaction, &noise, j)?;
            let tb = engine::solve(
                &backend, &u0_b, 0.0, horizon, dt, &reaction, &noise, m as u64 + j,
            )?;
            final_a.push(ta.states.last().unwrap().clone());
            final_b.push(tb.states.last().unwrap().clone());
        }
        let test = energy_distance(&functionals(final_a)?, &functionals(final_b)?, 17)?;
        println!(
            "T = {horizon:>3}: energy statistic = {:.4}, permutation p = {:.3} ({})",
            test.statistic,
            test.p_value,
            if test.p_value > 0.05 { "indistinguishable" } else { "distinct" }
        );
    }
    Ok(())
}
