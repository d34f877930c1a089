//! δ-interactions on star graphs: eigenvalues below `-γ²/4` from a direct
//! solve, against the bound obtained by cutting the plane into sectors.
//!
//! ```text
//! cargo run --release --example star_graph_bound
//! ```

use std::f64::consts::PI;

use sector_spectra::star::{verify_counting, StarGraph, StarPolicy};

fn main() -> sector_spectra::Result<()> {
    let policy = StarPolicy::default();
    let stars = [
        ("two rays, gap π/2", StarGraph::new(vec![0.0, PI / 2.0], 1.0)?),
        ("three rays, symmetric", StarGraph::symmetric(3, 0.0, 1.0)?),
        ("four rays, cross", StarGraph::symmetric(4, 0.0, 1.0)?),
    ];
    for (name, star) in stars {
        let t = std::time::Instant::now();
        let rep = verify_counting(&star, &policy)?;
        let values: Vec<String> = rep.direct_eigenvalues.iter().map(|e| format!("{:.5}", e.value)).collect();
        println!(
            "{name}: eigenvalues [{}]  count {} ≤ bound {}: {}  sector bottom {:.4}  ({:.1?})",
            values.join(", "),
            rep.direct_count,
            rep.bound,
            rep.holds(),
            rep.lower_bound,
            t.elapsed()
        );
    }
    Ok(())
}
