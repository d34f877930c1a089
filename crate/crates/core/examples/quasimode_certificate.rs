//! Turning a residual into a guaranteed eigenvalue interval. A random SPD
//! matrix is certified with perturbed eigenvectors of growing error, and
//! each interval is checked against the dense spectrum.
//!
//! ```text
//! cargo run --release --example quasimode_certificate
//! ```

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sector_spectra::eigensolver::{certify_quasimode, FactoredMatrix};
use sector_spectra::sparse::CsrMatrix;

fn main() -> sector_spectra::Result<()> {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let a = &b * b.transpose() + DMatrix::identity(n, n) * 0.5;
    let eig = a.clone().symmetric_eigen();
    let mut spectrum: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    spectrum.sort_by(f64::total_cmp);

    let t = FactoredMatrix::new(CsrMatrix::from_dense(&a))?;
    let m = CsrMatrix::identity(n);
    let j = eig.eigenvalues.imin();
    let v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
    for noise in [0.0, 1e-8, 1e-4, 1e-2, 1e-1] {
        let u: Vec<f64> = v.iter().map(|x| x + noise * rng.gen_range(-1.0..1.0)).collect();
        let norm2: f64 = u.iter().map(|x| x * x).sum();
        let lambda = t.matrix.quadratic_form(&u) / norm2;
        let enc = certify_quasimode(&t, &m, &u, lambda)?;
        let hit = spectrum.iter().any(|&s| enc.contains(s));
        match enc.bounds() {
            Some((lo, hi)) => println!("noise {noise:.0e}  ε = {:.3e}  [{lo:.10}, {hi:.10}]  contains eigenvalue {hit}", enc.epsilon()),
            None => println!("noise {noise:.0e}  ε = {:.3e}  no information", enc.epsilon()),
        }
    }
    println!("smallest eigenvalue {:.10}", spectrum[0]);
    Ok(())
}
