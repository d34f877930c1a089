//! Ground state of the Robin sector for a few opening angles, compared with
//! the closed form `-1/sin²α`.
//!
//! ```text
//! cargo run --release --example sector_ground_state
//! ```

use sector_spectra::analysis::{solve_sector_converged, MeshPolicy};
use sector_spectra::assembly::SectorProblem;

fn main() -> sector_spectra::Result<()> {
    let policy = MeshPolicy::default();
    for alpha in [0.3, 0.5, std::f64::consts::FRAC_PI_4, 1.0, 1.3] {
        let t = std::time::Instant::now();
        let p = SectorProblem::even(alpha)?;
        let study = solve_sector_converged(&p, 1, &policy)?;
        let e = &study.entry;
        let exact = p.ground_energy();
        println!(
            "α = {alpha:.4}  E₁ ≈ {:.8}  exact {:.8}  rel.err {:.2e}  count {}  levels {}  converged {}  ({:.1?})",
            e.eigenvalues[0],
            exact,
            (e.eigenvalues[0] / exact - 1.0).abs(),
            e.count,
            e.levels.len(),
            e.converged,
            t.elapsed()
        );
        for l in &e.levels {
            println!("    {:>5} x {:<4} dofs {:>7}  E = {:.10}  R = {:?}", l.n_r, l.n_theta, l.dofs, l.eigenvalues[0], l.extrapolated.as_ref().map(|v| v[0]));
        }
    }
    Ok(())
}
