//! Driving a named experiment programmatically: resolve a config,
//! override a few fields, run it, and read the verdicts — the same path
//! the `spde-lab` binary takes.
//!
//!     cargo run --example experiment_runs

use spde_lab::experiments::{run_experiment, ExperimentConfig};

fn main() -> spde_lab::Result<()> {
    let mut cfg = ExperimentConfig::for_experiment("picard")?;
    cfg.apply_text("seed = 7\nm = 32\n")?;
    cfg.out = std::env::temp_dir().join("spde-lab-example").join("picard");
    println!("resolved manifest:\n{}", cfg.manifest());

    let arts = run_experiment(&cfg)?;
    for v in &arts.verdicts {
        println!(
            "{}: {} (margin {:.3e})",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.margin
        );
    }
    println!("artifacts under {}:", arts.dir.display());
    for f in &arts.files {
        println!("  {f}");
    }
    Ok(())
}
