//! Simulated weighted second moments on the periodic truncation against
//! the explicit uniform bound assembled from the model constants.
//!
//!     cargo run --example moment_bound

use spde_lab::engine::{self, Backend, ReactionSpec, TorusBackend};
use spde_lab::heat::{uniform_moment_bound, BoundInputs, TorusGrid, TorusHeat};
use spde_lab::noise::{BasisSpec, NoiseSpec};
use spde_lab::stats::{moment_series, sup_verdict};
use spde_lab::weights::{WeightFunction, WeightKind};

fn main() -> spde_lab::Result<()> {
    // The closed-form tail constant needs d >= 3.
    let dim = 3;
    let grid = TorusGrid::new(8.0, 16, dim)?;
    let heat = TorusHeat::new(grid)?;
    let rho = WeightFunction::new(WeightKind::Gaussian, dim, false)?;
    let basis = BasisSpec::build(4, dim)?;
    let backend = TorusBackend::new(heat, &rho, &basis)?;
    let noise = NoiseSpec::geometric(4, dim, 11)?;
    let sigma0 = 0.5;
    let reaction = ReactionSpec::bounded_gaussian(sigma0);

    let u0: Vec<f64> = (0..backend.n_nodes())
        .map(|i| (-backend.node(i).iter().map(|v| v * v).sum::<f64>()).exp())
        .collect();
    let quad = backend.heat.grid.quadrature();
    let inputs = BoundInputs {
        phi_sup: 1.0,
        phi_l1: quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .map(|(x, w)| w * (-x.iter().map(|v| v * v).sum::<f64>()).exp())
            .sum(),
        rho_sup: rho.sup_norm(),
        rho_l1: rho.l1_norm(&quad),
        sigma0,
        trace_a: noise.trace(),
        dim,
        init_l2_sq: backend.l2_norm_sq(&u0)?,
    };
    let report = uniform_moment_bound(inputs);
    println!("{}", report.to_text());

    let (t_max, dt, m) = (20.0, 0.25, 64);
    let steps = (t_max / dt) as usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let mut samples = Vec::with_capacity(m);
    for j in 0..m as u64 {
        let t = engine::solve(&backend, &u0, 0.0, t_max, dt, &reaction, &noise, j)?;
        samples.push(t.h_norm_sq_series(&backend)?);
    }
    let series = moment_series(&samples, &times, "h")?;
    let sv = sup_verdict(&series, report.total)?;
    println!(
        "sup_t E||u||^2 estimate = {:.4}, bound = {:.4}, verdict = {}",
        series.estimates.iter().cloned().fold(0.0, f64::max),
        report.total,
        if sv.pass { "PASS" } else { "FAIL" }
    );
    Ok(())
}
