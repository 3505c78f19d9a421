//! Eigenvalues of `Au = ρ⁻¹ div(ρ∇u)` on the half-space against an
//! independent finite-difference discretization.
//!
//!     cargo run --example spectrum

use spde_lab::spectral::{fd_leading_eigenvalues, EigenBasis};

fn main() -> spde_lab::Result<()> {
    let basis = EigenBasis::new(1, 6, 32)?;
    println!("closed-form spectrum (d = 1):");
    for (j, mu) in basis.eigenvalues.iter().enumerate() {
        println!("  mode {j}: mu = {mu}");
    }

    let fd = fd_leading_eigenvalues(8.0, 4000, 3)?;
    println!("\nfinite differences on [0, 8], mesh 2e-3:");
    for (j, lam) in fd.iter().enumerate() {
        let formula = basis.eigenvalues[j];
        println!(
            "  mode {j}: fd = {lam:.8}, formula = {formula}, rel err = {:.2e}",
            (lam - formula).abs() / formula.abs()
        );
    }

    // Two dimensions: eigenvalues are sums of per-axis contributions,
    // with the wall direction contributing the odd (Dirichlet) ladder.
    let basis2 = EigenBasis::new(2, 3, 16)?;
    println!("\nleading spectrum (d = 2):");
    for (j, mu) in basis2.eigenvalues.iter().take(5).enumerate() {
        println!("  mode {j} {:?}: mu = {mu}", basis2.modes[j].p);
    }
    Ok(())
}
