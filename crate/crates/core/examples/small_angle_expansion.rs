//! Small-angle expansion `α²E_n(α) = λ₀ + λ₁α² + …` fitted from converged
//! eigenvalues, next to the first-order coefficient from quadrature.
//!
//! ```text
//! cargo run --release --example small_angle_expansion
//! ```

use sector_spectra::analysis::{fit_expansion, lambda1_quadrature, scan_alpha, MeshPolicy};

fn main() -> sector_spectra::Result<()> {
    let alphas = [0.04, 0.06, 0.08, 0.12];
    let scan = scan_alpha(&alphas, 2, &MeshPolicy::default())?;
    for e in &scan.entries {
        println!(
            "α = {:.2}  α²E₁ = {:.8}  α²E₂ = {:.8}  converged {}",
            e.alpha,
            e.alpha * e.alpha * e.eigenvalues[0],
            e.alpha * e.alpha * e.eigenvalues[1],
            e.converged
        );
    }
    println!("constant C = {:.4}", scan.small_angle_constant());
    for n in 1..=2 {
        let fit = fit_expansion(&scan, n, 2)?;
        let target = -1.0 / ((2 * n - 1) as f64).powi(2);
        println!(
            "n = {n}: λ₀ = {:.7} (leading term {target:.7}), λ₁ = {:.5}, λ₂ = {:.4}, cond {:.1e}, residual {:.1e}",
            fit.coefficients[0], fit.coefficients[1], fit.coefficients[2], fit.condition, fit.residual_norm
        );
        println!("       λ₁ by quadrature = {:.10}", lambda1_quadrature(n)?);
    }
    Ok(())
}
