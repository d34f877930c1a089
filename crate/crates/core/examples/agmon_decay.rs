//! Radial decay of the ground state, fitted from `½ ln ∫|u|² r dθ`, against
//! the rate `√(-1 - E)`.
//!
//! ```text
//! cargo run --release --example agmon_decay
//! ```

use std::f64::consts::PI;

use sector_spectra::analysis::{agmon_decay_rate_within, solve_sector_converged, MeshPolicy};
use sector_spectra::assembly::SectorProblem;

fn main() -> sector_spectra::Result<()> {
    let policy = MeshPolicy::default();
    for alpha in [PI / 4.0, PI / 6.0, 0.3] {
        let p = SectorProblem::even(alpha)?;
        let study = solve_sector_converged(&p, 1, &policy)?;
        let e = study.entry.eigenvalues[0];
        let r_ref = policy.r_max_for(&p, 1);
        let fit = agmon_decay_rate_within(&study.results[0], &study.pencil, (0.4, 0.7), r_ref)?;
        let expected = (-1.0 - e).sqrt();
        println!(
            "α = {alpha:.4}  E = {e:.6}  rate {:.4}  expected {expected:.4}  ratio {:.3}  window [{:.2}, {:.2}]  |corr| {:.6}",
            fit.rate,
            fit.rate / expected,
            fit.window.0,
            fit.window.1,
            fit.goodness
        );
    }
    Ok(())
}
