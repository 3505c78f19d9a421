//! Martingale maximal inequality: Monte-Carlo `E sup X²` for the
//! stochastic integral against the closed-form right-hand side
//! `4 Σ_k a_k ∫ g_k²`.
//!
//!     cargo run --example doob_probe

use spde_lab::noise::NoiseSpec;
use spde_lab::stats::doob_probe;

fn main() -> spde_lab::Result<()> {
    let spec = NoiseSpec::geometric(8, 1, 29)?;
    let cases: [(&str, fn(f64, usize) -> f64); 3] = [
        ("g = 1", |_, _| 1.0),
        ("g = sqrt(s)", |s, _| s.sqrt()),
        ("g = cos((k+1)s)", |s, k| (s * (k + 1) as f64).cos()),
    ];
    for (name, g) in cases {
        let rep = doob_probe(&spec, &g, 1.0, 256, 2000, 29)?;
        println!(
            "{name:>16}: E sup X^2 = {:.4} ± {:.4}, bound = {:.4} -> {}",
            rep.lhs,
            rep.lhs_stderr,
            rep.rhs,
            if rep.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
