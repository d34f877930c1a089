//! Randomized invariants of the building blocks.

use std::f64::consts::PI;
use std::io::BufReader;

use nalgebra::DMatrix;
use proptest::prelude::*;

use sector_spectra::assembly::{assemble_sector, sector_bottom, Parity, SectorProblem};
use sector_spectra::cli::config::parse_values;
use sector_spectra::eigensolver::{certify_quasimode, count_below, FactoredMatrix};
use sector_spectra::grid::{build_grid, geometric_nodes, GridSpec};
use sector_spectra::interval::{e1_interval, e2_interval, solve_m, IntervalProblem};
use sector_spectra::sparse::CsrMatrix;
use sector_spectra::star::StarGraph;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn robin_root_solves_its_equation(x in 1e-3f64..1e3) {
        let m = solve_m(x).unwrap();
        prop_assert!(m > 0.0);
        prop_assert!((m * m.tanh() - x).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn interval_ground_state_lies_below_half_line_bottom(l in 0.1f64..10.0, g in 0.05f64..20.0) {
        let p = IntervalProblem::new(l, g).unwrap();
        let e1 = e1_interval(p).unwrap();
        let e2 = e2_interval(p).unwrap();
        // both gaps are of order γ²e^{-2γL} and vanish in double precision
        // for long intervals
        let ulp = 4.0 * f64::EPSILON * g * g;
        prop_assert!(e1 <= -g * g + ulp && e1 <= e2 + ulp);
        if g * l < 15.0 {
            prop_assert!(e1 < -g * g && e1 < e2);
        }
    }

    #[test]
    fn sector_bottom_scales_with_coupling(beta in 0.01f64..PI, g in 0.1f64..10.0) {
        let one = sector_bottom(beta, 1.0);
        prop_assert!((sector_bottom(beta, g) - g * g * one).abs() <= 1e-12 * (g * g * one).abs());
        prop_assert!(one <= -1.0);
    }

    #[test]
    fn geometric_nodes_are_increasing_with_exact_ends(lo in -5.0f64..5.0, span in 0.1f64..100.0, n in 1usize..200, q in 1.0f64..1.2) {
        let nodes = geometric_nodes(lo, lo + span, n, q);
        prop_assert_eq!(nodes.len(), n + 1);
        prop_assert_eq!(nodes[0], lo);
        prop_assert_eq!(nodes[n], lo + span);
        prop_assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn triplet_files_round_trip(seed in any::<u64>(), n in 1usize..30) {
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| next());
        let a = (&a + a.transpose()) * 1e3;
        let csr = CsrMatrix::from_dense(&a);
        let mut buf = Vec::new();
        csr.write_triplets(&mut buf).unwrap();
        let back = CsrMatrix::read_triplets(BufReader::new(&buf[..])).unwrap();
        prop_assert_eq!(back, csr);
    }

    #[test]
    fn diagonal_certificates_enclose(d in prop::collection::vec(0.1f64..10.0, 2..20), noise in 1e-8f64..0.3, j in any::<prop::sample::Index>()) {
        let n = d.len();
        let t = FactoredMatrix::new(CsrMatrix::from_dense(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone())))).unwrap();
        let m = CsrMatrix::identity(n);
        let k = j.index(n);
        let u: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { noise * ((i * 7 + 3) % 5) as f64 / 5.0 }).collect();
        let lambda = t.matrix.quadratic_form(&u) / m.quadratic_form(&u);
        let enc = certify_quasimode(&t, &m, &u, lambda).unwrap();
        if let Some((lo, hi)) = enc.bounds() {
            prop_assert!(d.iter().any(|&x| lo <= x * (1.0 + 1e-12) && x <= hi * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn star_half_gaps_are_rotation_invariant(mut angles in prop::collection::vec(0.0f64..2.0 * PI, 1..6), phi in 0.0f64..2.0 * PI) {
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        prop_assume!(angles.len() == 1 || (angles[0] + 2.0 * PI - angles[angles.len() - 1]) > 1e-3);
        let star = StarGraph::new(angles, 1.0).unwrap();
        let total: f64 = star.half_gaps().iter().sum();
        prop_assert!((total - PI).abs() < 1e-12);
        let mut a = star.half_gaps();
        let mut b = star.rotated(phi).unwrap().half_gaps();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_ranges_hit_both_ends(lo in -10.0f64..10.0, span in 0.1f64..10.0, n in 2usize..50) {
        let hi = lo + span;
        let v = parse_values(&format!("{lo}:{hi}:linear:{n}")).unwrap();
        prop_assert_eq!(v.len(), n);
        prop_assert!((v[0] - lo).abs() < 1e-12 && (v[n - 1] - hi).abs() < 1e-12);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    /// Nothing in the assembled pencil lies below the bottom of the spectrum,
    /// and the pencil is symmetric with a positive mass matrix.
    #[test]
    fn coarse_pencils_respect_the_spectral_bottom(alpha in 0.1f64..1.5, gamma in 0.3f64..3.0, n_theta in 4usize..10) {
        let p = SectorProblem::new(alpha, gamma, Parity::Even).unwrap();
        let grid = build_grid(GridSpec { r_min: 0.0, r_max: 15.0 / gamma, n_r: 30, grading: 1.08, n_theta }).unwrap();
        let pencil = assemble_sector(&p, &grid).unwrap();
        prop_assert!(pencil.k.is_symmetric() && pencil.m.is_symmetric());
        let bottom = p.ground_energy();
        prop_assert_eq!(count_below(&pencil.k, &pencil.m, bottom * (1.0 + 1e-9)).unwrap().count, 0);
        prop_assert_eq!(count_below(&pencil.m, &CsrMatrix::identity(pencil.dim()), 0.0).unwrap().count, 0);
    }
}
