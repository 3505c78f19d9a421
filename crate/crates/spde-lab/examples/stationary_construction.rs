//! Constructing a stationary solution by freezing the nonlinearity at
//! the previous iterate: the sweeps contract fast under the smallness
//! certificate, and the sweep differences report the measured ratio.
//!
//!     cargo run --example stationary_construction

use std::sync::Arc;

use spde_lab::engine::{self, NoiseForcing, ReactionSpec, SmallnessCertificate, SpectralBackend};
use spde_lab::noise::{BasisSpec, NoiseSpec};
use spde_lab::spectral::EigenBasis;

fn main() -> spde_lab::Result<()> {
    let basis = EigenBasis::new(1, 4, 16)?;
    let backend = SpectralBackend::new(basis, NoiseForcing::Window(BasisSpec::build(4, 1)?))?;
    let noise = NoiseSpec::with_variances(vec![0.5, 0.25, 0.125, 0.125], 1, 9)?;
    let l = 0.2;
    // σ(·,0) ≠ 0, otherwise zero is a trivial fixed point.
    let reaction = ReactionSpec {
        f: Arc::new(move |_, u: f64| l * u.sin()),
        sigma: Arc::new(move |_, u: f64| l * u.cos()),
        lipschitz: l,
        f_envelope: None,
        sigma_envelope: None,
        sigma_sup: Some(l),
        cutoff: None,
    };
    let cert = SmallnessCertificate::new(l, noise.trace());
    println!(
        "certificate: L = {l}, trace = {}, cond1 = {:.3} < 1, cond2 = {:.3} < 2/3 -> {}",
        cert.trace,
        cert.cond1,
        cert.cond2,
        if cert.eligible { "eligible" } else { "ineligible" }
    );

    let (ens, diffs) =
        engine::build_stationary(&backend, &reaction, &noise, 7.0, 2.0, 0.05, 6, 64)?;
    for (i, &d) in diffs.iter().enumerate() {
        print!("sweep {}: sup_t mean ||u_n+1 - u_n||^2 = {d:.3e}", i + 1);
        if i > 0 && diffs[i - 1] > 0.0 {
            print!("  (ratio {:.4})", d / diffs[i - 1]);
        }
        println!();
    }
    println!(
        "theoretical ratio L^2/2 (1 + trace) = {:.4}",
        engine::iteration_ratio(l, noise.trace())
    );
    println!(
        "ensemble: {} paths on a grid of {} times spanning [{}, {}]",
        ens.paths.len(),
        ens.grid.len(),
        ens.grid[0],
        ens.grid[ens.grid.len() - 1]
    );
    Ok(())
}
