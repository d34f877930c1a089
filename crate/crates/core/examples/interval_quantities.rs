//! The one-dimensional Robin problem on `(-L, L)`: the root of `m tanh m = γL`,
//! the two lowest eigenvalues, the coupling derivative and `φ(γ)`.
//!
//! ```text
//! cargo run --release --example interval_quantities
//! ```

use sector_spectra::interval::{d_e1_d_gamma, e1_interval, e2_interval, phi_of_gamma, solve_m, IntervalProblem};

fn main() -> sector_spectra::Result<()> {
    println!("{:>8} {:>14} {:>16} {:>16} {:>14} {:>12}", "gamma", "m", "E1", "E2", "dE1/dgamma", "phi");
    for gamma in [0.1, 0.5, 1.0, 2.0, 5.0, 20.0] {
        let p = IntervalProblem::new(1.0, gamma)?;
        let m = solve_m(gamma)?;
        println!(
            "{gamma:>8.3} {m:>14.10} {:>16.10} {:>16.10} {:>14.8} {:>12.8}",
            e1_interval(p)?,
            e2_interval(p)?,
            d_e1_d_gamma(p)?,
            phi_of_gamma(gamma)?
        );
    }

    // E₁(L, 1) approaches -1 - 4e^{-2L} with an error of order L e^{-4L}.
    println!("\n{:>4} {:>18} {:>14}", "L", "E1 + 1 + 4e^-2L", "ratio");
    for l in 3..=8 {
        let l = l as f64;
        let gap = e1_interval(IntervalProblem::new(l, 1.0)?)? + 1.0 + 4.0 * (-2.0 * l).exp();
        println!("{l:>4} {gap:>18.6e} {:>14.6}", gap / (l * (-4.0 * l).exp()));
    }
    Ok(())
}
