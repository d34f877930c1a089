//! E₁(α) over a handful of angles with certified enclosures. The enclosures
//! of neighbouring angles are disjoint and ordered.
//!
//! ```text
//! cargo run --release --example alpha_scan_monotonicity
//! ```

use sector_spectra::analysis::{scan_alpha, MeshPolicy};

fn main() -> sector_spectra::Result<()> {
    let alphas = [0.3, 0.45, 0.6, 0.8, 1.0, 1.2, 1.4];
    let scan = scan_alpha(&alphas, 1, &MeshPolicy::default())?;
    for e in &scan.entries {
        let (lo, hi) = e.enclosures[0].bounds().unwrap_or((f64::NAN, f64::NAN));
        println!(
            "α = {:.3}  E₁ = {:.8}  exact {:.8}  enclosure [{lo:.10}, {hi:.10}]  converged {}",
            e.alpha,
            e.eigenvalues[0],
            -1.0 / e.alpha.sin().powi(2),
            e.converged
        );
    }
    let ordered = scan.entries.windows(2).all(|w| match (w[0].enclosures[0].bounds(), w[1].enclosures[0].bounds()) {
        (Some((_, hi)), Some((lo, _))) => hi < lo,
        _ => false,
    });
    println!("enclosures disjoint and increasing: {ordered}");
    println!("monotonicity violations: {:?}", scan.monotonicity_violations());
    Ok(())
}
