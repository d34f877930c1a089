//! The radial model `H_a = -d²/dr² - 1/(4r²) - 1/(ar)`: finite-element
//! eigenvalues against the exact `-1/((2n-1)²a²)`, and the vertex behaviour of
//! the computed ground state.
//!
//! ```text
//! cargo run --release --example model_operator
//! ```

use sector_spectra::grid::geometric_nodes;
use sector_spectra::model::{discretize_model, exact_eigenvalue, friedrichs_coefficients, ModelProblem};

fn main() -> sector_spectra::Result<()> {
    let a = 1.0;
    let p = ModelProblem::new(a)?;
    let mut nodes = vec![0.0];
    nodes.extend(geometric_nodes(0.0, 60.0, 1200, 1.004).into_iter().skip(1));
    let pencil = discretize_model(&p, &nodes)?;
    for (j, e) in pencil.lowest(4)?.into_iter().enumerate() {
        let exact = exact_eigenvalue(j + 1, a);
        println!("n = {}  E = {e:.8}  exact {exact:.8}  diff {:.2e}", j + 1, e - exact);
    }

    let psi = pencil.eigenfunction(0)?;
    let fit = friedrichs_coefficients(&psi, (1e-3, 5e-2))?;
    println!(
        "ground state near 0: a1 = {:.6}  a2 = {:.3e}  |a2/a1| = {:.3e}  ({} points)",
        fit.a1,
        fit.a2,
        (fit.a2 / fit.a1).abs(),
        fit.points
    );
    if let Some(w) = fit.warning {
        println!("warning: {w}");
    }
    Ok(())
}
