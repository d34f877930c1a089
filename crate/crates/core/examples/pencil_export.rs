//! Assembles the sector pencil on a small grid and writes `K` and `M` as
//! sparse triplets, then reads them back.
//!
//! ```text
//! cargo run --release --example pencil_export -- /tmp/pencil
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use sector_spectra::assembly::{assemble_sector, SectorProblem};
use sector_spectra::grid::{build_grid, GridSpec};
use sector_spectra::sparse::CsrMatrix;

fn main() -> sector_spectra::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let p = SectorProblem::even(std::f64::consts::FRAC_PI_4)?;
    let grid = build_grid(GridSpec { r_min: 0.0, r_max: 20.0, n_r: 40, grading: 1.05, n_theta: 6 })?;
    let pencil = assemble_sector(&p, &grid)?;

    let (kp, mp) = (dir.join("pencil_K.txt"), dir.join("pencil_M.txt"));
    pencil.write_triplets(BufWriter::new(File::create(&kp)?), BufWriter::new(File::create(&mp)?))?;
    let k = CsrMatrix::read_triplets(BufReader::new(File::open(&kp)?))?;
    println!(
        "dim {}  nnz(K) {}  bandwidth {}  lower bound {:.4}  round trip exact: {}",
        pencil.dim(),
        k.nnz(),
        k.bandwidth(),
        pencil.lower_bound,
        k == pencil.k
    );
    println!("wrote {} and {}", kp.display(), mp.display());
    Ok(())
}
