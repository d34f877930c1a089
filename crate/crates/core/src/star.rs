//! δ-interactions supported on star graphs (finitely many rays from the
//! origin) and the sector bound on their number of eigenvalues.
//!
//! Cutting the plane along the rays decouples it into the sectors between
//! consecutive rays; each becomes a Robin sector of half-opening `β_j` (half
//! the gap) and coefficient `γ/2`. Bracketing then bounds the number of
//! eigenvalues below `-γ²/4` by `Σ_j N(T_{β_j}, -1)`, and sectors with
//! `β_j ≥ π/2` contribute nothing.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::MeshPolicy;
use crate::assembly::{assemble_sector, assemble_stargraph_graded, half_gaps, AssembledPencil, Parity, SectorProblem};
use crate::eigensolver::{count_below, solve_lowest, EigenResult, Enclosure, SolverConfig};
use crate::grid::{GridSpec, PolarGrid};
use crate::{Error, Result};

/// Margin below the threshold used in comparisons and counts.
pub const THRESHOLD_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarGraph {
    pub angles: Vec<f64>,
    pub gamma: f64,
}

impl StarGraph {
    pub fn new(angles: Vec<f64>, gamma: f64) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::config("a star graph needs at least one ray"));
        }
        if angles.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("ray angles must be strictly increasing (no duplicates)"));
        }
        if angles[0] < 0.0 || *angles.last().unwrap() >= 2.0 * PI {
            return Err(Error::config("ray angles must lie in [0, 2π)"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config(format!("coupling must be positive, got {gamma}")));
        }
        Ok(Self { angles, gamma })
    }

    /// `M` rays at equal gaps starting from `offset`.
    pub fn symmetric(m: usize, offset: f64, gamma: f64) -> Result<Self> {
        Self::new((0..m).map(|j| offset + 2.0 * PI * j as f64 / m as f64).collect(), gamma)
    }

    pub fn half_gaps(&self) -> Vec<f64> {
        half_gaps(&self.angles)
    }

    /// `-γ²/4`, the bottom of the essential spectrum.
    pub fn threshold(&self) -> f64 {
        -self.gamma * self.gamma / 4.0
    }

    /// The same star turned by `phi` (angles reduced to `[0, 2π)` and sorted).
    pub fn rotated(&self, phi: f64) -> Result<Self> {
        let mut a: Vec<f64> = self.angles.iter().map(|t| (t + phi).rem_euclid(2.0 * PI)).collect();
        a.sort_by(f64::total_cmp);
        Self::new(a, self.gamma)
    }
}

/// Grid choice for the direct periodic solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarPolicy {
    /// Truncation radius in units of `1/γ`.
    pub r_max: f64,
    pub n_r: usize,
    /// Width of the first radial element in units of `1/γ`.
    pub first_width: f64,
    /// Angular elements over the full circle.
    pub n_theta: usize,
    /// Growth factor of the angular elements away from each ray. Weakly bound
    /// states spread far along the rays, where uniform angular elements are
    /// much wider than the transverse profile `e^{-γ|d|/2}`.
    pub ray_grading: f64,
    /// Eigenpairs requested from the iterative solver.
    pub k: usize,
    pub solver: SolverConfig,
    /// Used for the per-gap sector counts.
    pub sector: MeshPolicy,
}

impl Default for StarPolicy {
    fn default() -> Self {
        Self {
            r_max: 150.0,
            n_r: 300,
            first_width: 0.01,
            n_theta: 64,
            ray_grading: 1.2,
            k: 4,
            solver: SolverConfig { max_iterations: 2000, ..SolverConfig::for_count(4) },
            sector: MeshPolicy::default(),
        }
    }
}

impl StarPolicy {
    pub fn grid(&self, gamma: f64) -> Result<PolarGrid> {
        PolarGrid::with_first_width(0.0, self.r_max / gamma, self.n_r, self.first_width / gamma, self.n_theta)
    }
}

/// Count for one gap of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorCount {
    pub half_gap: f64,
    pub count: usize,
    /// Grid of the inertia count; `None` when `β ≥ π/2`.
    pub grid: Option<GridSpec>,
}

/// `Σ_j N(T_{β_j}, -1)` and its terms.
pub fn sector_bound(star: &StarGraph, policy: &MeshPolicy) -> Result<(usize, Vec<SectorCount>)> {
    let counts = star
        .half_gaps()
        .into_par_iter()
        .map(|beta| {
            if beta >= FRAC_PI_2 {
                return Ok(SectorCount { half_gap: beta, count: 0, grid: None });
            }
            let p = SectorProblem::new(beta, 1.0, Parity::Even)?;
            let grid = policy.count_grid(&p, 1)?;
            let pencil = assemble_sector(&p, &grid)?;
            let c = count_below(&pencil.k, &pencil.m, p.threshold())?;
            Ok(SectorCount { half_gap: beta, count: c.count, grid: Some(grid.spec()) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((counts.iter().map(|c| c.count).sum(), counts))
}

/// Eigenvalue below the threshold found by the direct solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarEigenvalue {
    pub value: f64,
    pub residual: f64,
    pub enclosure: Enclosure,
    pub converged: bool,
}

/// Direct solve on the periodic pencil.
#[derive(Debug, Clone)]
pub struct DirectSolve {
    pub pencil: AssembledPencil,
    /// The lowest pairs returned by the solver, including any above the threshold.
    pub results: Vec<EigenResult>,
    /// Inertia count below `-γ²/4 - margin`.
    pub count: usize,
}

impl DirectSolve {
    pub fn below_threshold(&self, threshold: f64) -> Vec<&EigenResult> {
        self.results.iter().filter(|e| e.value < threshold - THRESHOLD_MARGIN).collect()
    }
}

/// Assembles the star pencil on `grid` and returns its lowest `k` pairs and
/// the inertia count below the threshold.
pub fn direct_solve(star: &StarGraph, grid: &PolarGrid, ray_grading: f64, k: usize, cfg: &SolverConfig) -> Result<DirectSolve> {
    let pencil = assemble_stargraph_graded(&star.angles, star.gamma, grid, ray_grading)?;
    let count = count_below(&pencil.k, &pencil.m, star.threshold() - THRESHOLD_MARGIN)?.count;
    let want = k.max(count).max(1);
    let cfg = SolverConfig { block_size: cfg.block_size.max(want + 2), ..*cfg };
    let results = solve_lowest(&pencil, want, &cfg)?;
    Ok(DirectSolve { pencil, results, count })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub star: StarGraph,
    pub threshold: f64,
    pub direct_eigenvalues: Vec<StarEigenvalue>,
    pub direct_count: usize,
    pub sector_counts: Vec<SectorCount>,
    pub bound: usize,
    pub grid: GridSpec,
    pub ray_grading: f64,
    pub lower_bound: f64,
}

impl StarReport {
    pub fn holds(&self) -> bool {
        self.direct_count <= self.bound
    }

    /// Error carrying the full report when the counting inequality fails.
    pub fn check(&self) -> Result<()> {
        if self.holds() {
            Ok(())
        } else {
            let dump = serde_json::to_string_pretty(self).unwrap_or_default();
            Err(Error::InvariantViolation(format!(
                "direct count {} exceeds sector bound {}\n{dump}",
                self.direct_count, self.bound
            )))
        }
    }
}

/// Runs the direct solve and the sector bound.
pub fn verify_counting(star: &StarGraph, policy: &StarPolicy) -> Result<StarReport> {
    let grid = policy.grid(star.gamma)?;
    let direct = direct_solve(star, &grid, policy.ray_grading, policy.k, &policy.solver)?;
    let (bound, sector_counts) = sector_bound(star, &policy.sector)?;
    let threshold = star.threshold();
    let direct_eigenvalues = direct
        .below_threshold(threshold)
        .into_iter()
        .map(|e| StarEigenvalue {
            value: e.value,
            residual: e.residual,
            enclosure: e.enclosure,
            converged: e.converged,
        })
        .collect();
    Ok(StarReport {
        star: star.clone(),
        threshold,
        direct_eigenvalues,
        direct_count: direct.count,
        sector_counts,
        bound,
        grid: grid.spec(),
        ray_grading: policy.ray_grading,
        lower_bound: direct.pencil.lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(StarGraph::new(vec![], 1.0).is_err());
        assert!(StarGraph::new(vec![1.0, 1.0], 1.0).is_err());
        assert!(StarGraph::new(vec![0.0, 7.0], 1.0).is_err());
        assert!(StarGraph::new(vec![0.0], -1.0).is_err());
    }

    #[test]
    fn half_gaps_sum_to_pi() {
        let s = StarGraph::new(vec![0.3, 1.0, 4.0], 1.0).unwrap();
        let total: f64 = s.half_gaps().iter().sum();
        assert!((total - PI).abs() < 1e-14);
    }

    #[test]
    fn degenerate_bounds_are_zero() {
        let pol = MeshPolicy::default();
        let one = StarGraph::new(vec![0.0], 1.0).unwrap();
        assert_eq!(sector_bound(&one, &pol).unwrap().0, 0);
        let line = StarGraph::new(vec![0.0, PI], 1.0).unwrap();
        assert_eq!(sector_bound(&line, &pol).unwrap().0, 0);
    }

    #[test]
    fn right_angle_pair_bound_is_one() {
        let s = StarGraph::new(vec![0.0, FRAC_PI_2], 1.0).unwrap();
        let (bound, counts) = sector_bound(&s, &MeshPolicy::default()).unwrap();
        assert_eq!(bound, 1);
        assert_eq!(counts.iter().map(|c| c.count).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn rotation_sorts_angles() {
        let s = StarGraph::new(vec![0.0, 5.0], 1.0).unwrap();
        let r = s.rotated(2.0).unwrap();
        assert!(r.angles[0] < r.angles[1]);
    }
}
