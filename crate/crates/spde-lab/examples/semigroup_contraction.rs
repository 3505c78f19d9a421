//! The spectral gap in action: `‖S(t)u‖_H ≤ e^{-2t} ‖u‖_H` on random
//! states, with equality approached on the ground mode.
//!
//!     cargo run --example semigroup_contraction

use rand::Rng;
use spde_lab::rng::substream;
use spde_lab::spectral::{CoeffVector, EigenBasis};

fn main() -> spde_lab::Result<()> {
    let basis = EigenBasis::new(1, 8, 32)?;
    let mut rng = substream(1, &[0]);
    for t in [0.1, 0.5, 1.0, 2.0] {
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let mut c = CoeffVector::zeros(&basis);
            for v in c.coeffs.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let ratio = basis.apply_semigroup(&c, t)?.h_norm() / c.h_norm();
            worst = worst.max(ratio);
        }
        println!(
            "t = {t:>4}: worst ratio = {worst:.6}, bound e^(-2t) = {:.6}",
            (-2.0 * t).exp()
        );
    }

    // The ground mode saturates the bound exactly.
    let mut ground = CoeffVector::zeros(&basis);
    ground.coeffs[0] = 1.0;
    let ratio = basis.apply_semigroup(&ground, 1.0)?.h_norm();
    println!("ground mode at t = 1: ratio = {ratio:.12} (e^-2 = {:.12})", (-2.0f64).exp());
    Ok(())
}
