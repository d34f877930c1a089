//! Number of eigenvalues below the essential threshold as the sector closes.
//!
//! ```text
//! cargo run --release --example eigenvalue_counting
//! ```

use sector_spectra::analysis::{count_growth, scan_alpha, MeshPolicy};

fn main() -> sector_spectra::Result<()> {
    let alphas = [0.05, 0.1, 0.2, 0.4, std::f64::consts::FRAC_PI_6, 1.0, 1.4];
    let scan = scan_alpha(&alphas, 1, &MeshPolicy::default())?;
    let growth = count_growth(&scan);
    println!("{:>8} {:>6} {:>8}", "alpha", "N", "N*alpha");
    for &(a, n, _) in &growth.table {
        println!("{a:>8.4} {n:>6} {:>8.4}", n as f64 * a);
    }
    println!("kappa_hat = {:.4}, non-increasing: {}", growth.kappa_hat, growth.monotone);
    Ok(())
}
