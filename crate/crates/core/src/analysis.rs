//! Studies over the opening angle: converged eigenvalue curves, counts below
//! the essential threshold, small-angle expansion fits and decay rates.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_sector, AssembledPencil, Parity, SectorProblem};
use crate::eigensolver::{inertia_count, solve_lowest, EigenResult, Enclosure, SolverConfig};
use crate::grid::{build_grid, GridSpec, PolarGrid};
use crate::model::ExactEigenpair;
use crate::quadrature::integrate;
use crate::{Error, Result};

/// How meshes are chosen and refined for a sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshPolicy {
    /// Radial elements on the coarsest level.
    pub n_r: usize,
    /// Angular elements per radian of the half sector on the coarsest level.
    pub n_theta_per_radian: f64,
    pub min_n_theta: usize,
    /// Radial grading of the coarsest level.
    pub grading: f64,
    /// Truncation radius in units of the decay length `1/κ`.
    pub r_max_factor: f64,
    /// Upper limit for the first radial element, in units of the decay
    /// length of the ground state.
    pub first_width_factor: f64,
    /// Upper limit for the truncation radius (times `1/γ`).
    pub r_max_cap: f64,
    /// Overrides the computed truncation radius.
    pub r_max: Option<f64>,
    /// Overrides the computed angular resolution of the coarsest level.
    pub n_theta: Option<usize>,
    pub min_levels: usize,
    pub max_levels: usize,
    /// Relative change between successive extrapolated values.
    pub tolerance: f64,
    /// Radial elements of the grid used for counting.
    pub count_n_r: usize,
    /// Minimal truncation radius (times `1/γ`) of the counting grid.
    pub count_r_max: f64,
    pub solver: SolverConfig,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        Self {
            n_r: 50,
            n_theta_per_radian: 12.0,
            min_n_theta: 4,
            grading: 1.05,
            r_max_factor: 25.0,
            first_width_factor: 0.05,
            r_max_cap: 400.0,
            r_max: None,
            n_theta: None,
            min_levels: 3,
            max_levels: 5,
            tolerance: 1e-4,
            count_n_r: 400,
            count_r_max: 40.0,
            solver: SolverConfig::for_count(1),
        }
    }
}

/// Leading-order guess for the `n`-th eigenvalue of the Robin sector.
pub fn target_energy(alpha: f64, gamma: f64, n: usize) -> f64 {
    if n == 1 {
        -(gamma / alpha.sin()).powi(2)
    } else {
        let s = (2 * n - 1) as f64 * alpha;
        -(gamma / s).powi(2)
    }
}

impl MeshPolicy {
    /// Truncation radius for the lowest `k` modes.
    pub fn r_max_for(&self, p: &SectorProblem, k: usize) -> f64 {
        if let Some(r) = self.r_max {
            return r;
        }
        let g2 = p.gamma * p.gamma;
        let cap = self.r_max_cap / p.gamma;
        (1..=k.max(1))
            .map(|n| target_energy(p.alpha, p.gamma, n))
            .filter(|&e| e < -g2)
            .map(|e| (self.r_max_factor / (-g2 - e).sqrt()).min(cap))
            .fold(0.0, f64::max)
    }

    pub fn n_theta_for(&self, p: &SectorProblem) -> usize {
        if let Some(n) = self.n_theta {
            return n;
        }
        let span = match p.parity {
            Parity::Full => 2.0 * p.alpha,
            _ => p.alpha,
        };
        ((self.n_theta_per_radian * span).ceil() as usize).max(self.min_n_theta)
    }

    /// Coarsest grid of the refinement sequence.
    pub fn base_grid(&self, p: &SectorProblem, k: usize) -> Result<PolarGrid> {
        let spec = GridSpec {
            r_min: 0.0,
            r_max: self.r_max_for(p, k),
            n_r: self.n_r,
            grading: self.grading,
            n_theta: self.n_theta_for(p),
        };
        let graded = build_grid(spec)?;
        let g2 = p.gamma * p.gamma;
        let e1 = target_energy(p.alpha, p.gamma, 1);
        let limit = if e1 < -g2 { self.first_width_factor / (-g2 - e1).sqrt() } else { f64::INFINITY };
        if graded.r_nodes()[1] <= limit {
            return Ok(graded);
        }
        PolarGrid::with_first_width(0.0, spec.r_max, spec.n_r, limit, spec.n_theta)
    }

    /// Grid for inertia counts below the threshold: large enough to hold
    /// modes close to it.
    pub fn count_grid(&self, p: &SectorProblem, k: usize) -> Result<PolarGrid> {
        let r_max = self.r_max_for(p, k).max(self.count_r_max / p.gamma);
        let first = (r_max / self.count_n_r as f64).min(0.02 * p.alpha.sin() / p.gamma);
        PolarGrid::with_first_width(0.0, r_max, self.count_n_r, first, 2 * self.n_theta_for(p))
    }
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub n_r: usize,
    pub n_theta: usize,
    pub grading: f64,
    pub r_max: f64,
    pub dofs: usize,
    pub eigenvalues: Vec<f64>,
    /// Richardson values `(4E_h - E_2h)/3` against the previous level.
    pub extrapolated: Option<Vec<f64>>,
}

/// Converged eigenvalues of one sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub alpha: f64,
    pub gamma: f64,
    /// Extrapolated eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Discrete eigenvalues on the finest level.
    pub discrete: Vec<f64>,
    /// Certificates for the finest discrete eigenvalues.
    pub enclosures: Vec<Enclosure>,
    pub residuals: Vec<f64>,
    /// Inertia count below `-γ²`.
    pub count: usize,
    pub count_grid: GridSpec,
    pub levels: Vec<LevelRecord>,
    /// All eigenvalues below the threshold met the refinement tolerance.
    pub converged: bool,
}

impl ScanEntry {
    /// Combined width of extrapolation uncertainty and certificate for mode `j`.
    pub fn uncertainty(&self, j: usize) -> f64 {
        let last = self.levels.len() - 1;
        let change = match (&self.levels[last].extrapolated, self.levels.get(last.wrapping_sub(1))) {
            (Some(a), Some(prev)) => prev.extrapolated.as_ref().map_or(f64::INFINITY, |b| (a[j] - b[j]).abs()),
            _ => f64::INFINITY,
        };
        change + self.enclosures[j].width()
    }
}

/// A sector solved to convergence, with its finest pencil.
#[derive(Debug, Clone)]
pub struct SectorStudy {
    pub entry: ScanEntry,
    pub pencil: AssembledPencil,
    pub results: Vec<EigenResult>,
}

/// Solves the `k` lowest even-parity eigenpairs on nested refinements until
/// successive Richardson values agree to `policy.tolerance`.
pub fn solve_sector_converged(p: &SectorProblem, k: usize, policy: &MeshPolicy) -> Result<SectorStudy> {
    let threshold = p.threshold();
    let mut grid = policy.base_grid(p, k)?;
    let cfg = SolverConfig {
        block_size: policy.solver.block_size.max(k + 2),
        ..policy.solver
    };
    let mut levels: Vec<LevelRecord> = Vec::new();
    let mut last: Option<(AssembledPencil, Vec<EigenResult>)> = None;
    let mut converged = false;
    for level in 0..policy.max_levels.max(1) {
        if level > 0 {
            grid = grid.refine();
        }
        let pencil = assemble_sector(p, &grid)?;
        let res = solve_lowest(&pencil, k, &cfg)?;
        let vals: Vec<f64> = res.iter().map(|e| e.value).collect();
        let extrapolated = levels
            .last()
            .map(|prev| vals.iter().zip(&prev.eigenvalues).map(|(f, c)| (4.0 * f - c) / 3.0).collect::<Vec<_>>());
        if let (Some(cur), Some(prev)) = (&extrapolated, levels.last().and_then(|l| l.extrapolated.as_ref())) {
            let bound: Vec<usize> = (0..k).filter(|&j| cur[j] < threshold).collect();
            converged = level + 1 >= policy.min_levels
                && res.iter().all(|e| e.converged)
                && bound.iter().all(|&j| (cur[j] - prev[j]).abs() <= policy.tolerance * cur[j].abs());
        }
        levels.push(LevelRecord {
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            grading: grid.grading,
            r_max: grid.r_max,
            dofs: pencil.dim(),
            eigenvalues: vals,
            extrapolated,
        });
        last = Some((pencil, res));
        if converged {
            break;
        }
    }
    let (pencil, results) = last.expect("at least one level");
    let finest = levels.last().unwrap();
    let eigenvalues = finest.extrapolated.clone().unwrap_or_else(|| finest.eigenvalues.clone());

    let cgrid = policy.count_grid(p, k)?;
    let cpencil = assemble_sector(p, &cgrid)?;
    let count = inertia_count(&cpencil, threshold)?;

    let entry = ScanEntry {
        alpha: p.alpha,
        gamma: p.gamma,
        eigenvalues,
        discrete: results.iter().map(|e| e.value).collect(),
        enclosures: results.iter().map(|e| e.enclosure).collect(),
        residuals: results.iter().map(|e| e.residual).collect(),
        count,
        count_grid: cgrid.spec(),
        levels,
        converged,
    };
    Ok(SectorStudy { entry, pencil, results })
}

/// Eigenvalue curves over a list of angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaScan {
    pub alphas: Vec<f64>,
    pub k: usize,
    pub entries: Vec<ScanEntry>,
}

impl AlphaScan {
    pub fn counts(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.count).collect()
    }

    /// Extrapolated `E_n(α)` for every angle (`n` 1-based).
    pub fn curve(&self, n: usize) -> Vec<f64> {
        self.entries.iter().map(|e| e.eigenvalues[n - 1]).collect()
    }

    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.converged)
    }

    /// Adjacent pairs `(i, i+1)` and modes `n` where `E_n(α_i) + δ ≤ E_n(α_{i+1})`
    /// fails for eigenvalues below the threshold; `δ` is the combined uncertainty.
    pub fn monotonicity_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, w) in self.entries.windows(2).enumerate() {
            for j in 0..self.k {
                let (a, b) = (&w[0], &w[1]);
                let t = -(a.gamma * a.gamma);
                if a.eigenvalues[j] < t && b.eigenvalues[j] < t {
                    let delta = a.uncertainty(j) + b.uncertainty(j);
                    if !(a.eigenvalues[j] + delta <= b.eigenvalues[j]) {
                        out.push((i, j + 1));
                    }
                }
            }
        }
        out
    }

    /// `max |α²E_n + 1/(2n-1)²| / α²` over all modes below the threshold.
    pub fn small_angle_constant(&self) -> f64 {
        let mut c: f64 = 0.0;
        for e in &self.entries {
            for (j, &v) in e.eigenvalues.iter().enumerate() {
                if v < -1.0 {
                    let a2 = e.alpha * e.alpha;
                    let lead = 1.0 / ((2 * j + 1) as f64).powi(2);
                    c = c.max((a2 * v + lead).abs() / a2);
                }
            }
        }
        c
    }
}

/// Converged studies for every angle, in parallel; entries keep the input order.
pub fn scan_alpha(alphas: &[f64], k: usize, policy: &MeshPolicy) -> Result<AlphaScan> {
    scan_alpha_gamma(alphas, 1.0, k, policy)
}

pub fn scan_alpha_gamma(alphas: &[f64], gamma: f64, k: usize, policy: &MeshPolicy) -> Result<AlphaScan> {
    if alphas.is_empty() {
        return Err(Error::config("empty angle list"));
    }
    if alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("angles must be strictly increasing"));
    }
    for &a in alphas {
        if !(a > 0.0 && a < FRAC_PI_2) {
            return Err(Error::config(format!("angle {a} outside (0, π/2)")));
        }
    }
    let entries = alphas
        .par_iter()
        .map(|&alpha| {
            let p = SectorProblem::new(alpha, gamma, Parity::Even)?;
            Ok(solve_sector_converged(&p, k, policy)?.entry)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlphaScan { alphas: alphas.to_vec(), k, entries })
}

/// Least-squares coefficients of `α²E_n(α) ≈ Σ_j λ_j α^{2j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub n: usize,
    pub coefficients: Vec<f64>,
    pub condition: f64,
    pub residual_norm: f64,
    pub alphas: Vec<f64>,
}

/// Fits the small-angle expansion of mode `n` through order `α^{2N}`.
pub fn fit_expansion(scan: &AlphaScan, n: usize, order: usize) -> Result<ExpansionFit> {
    if n == 0 || n > scan.k {
        return Err(Error::config(format!("mode {n} not present in a scan of {} modes", scan.k)));
    }
    if let Some(a) = scan.alphas.iter().find(|&&a| a > 0.2) {
        return Err(Error::config(format!("expansion fits need angles ≤ 0.2, got {a}")));
    }
    let alphas = scan.alphas.clone();
    let y: Vec<f64> = scan
        .entries
        .iter()
        .map(|e| e.alpha * e.alpha * e.eigenvalues[n - 1])
        .collect();
    fit_even_powers(&alphas, &y, order).map(|(coefficients, condition, residual_norm)| ExpansionFit {
        n,
        coefficients,
        condition,
        residual_norm,
        alphas,
    })
}

/// Least squares of `y` against `{1, α², …, α^{2N}}`; returns coefficients,
/// condition number of the column-scaled design and residual norm.
pub fn fit_even_powers(alphas: &[f64], y: &[f64], order: usize) -> Result<(Vec<f64>, f64, f64)> {
    let cols = order + 1;
    if alphas.len() < order + 2 {
        return Err(Error::RankDeficient { needed: order + 2, got: alphas.len() });
    }
    let a = DMatrix::from_fn(alphas.len(), cols, |i, j| alphas[i].powi(2 * j as i32));
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let scaled = DMatrix::from_fn(a.nrows(), cols, |i, j| a[(i, j)] / norms[j]);
    let b = DVector::from_column_slice(y);
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-14 * smax) {
        return Err(Error::RankDeficient { needed: order + 2, got: alphas.len() });
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::InvariantViolation(format!("least squares failed: {e}")))?;
    let resid = (&scaled * &sol - &b).norm();
    let coef = (0..cols).map(|j| sol[j] / norms[j]).collect();
    Ok((coef, smax / smin, resid))
}

/// First-order coefficient `λ₁` of the small-angle expansion of mode `n`,
/// from the solvability condition of the first corrector:
///
/// ```text
/// λ₁ = ⟨ -(1/t) f + (1/3) 𝓛₀ f - (λ₀/3) f, u₀ ⟩,   f = t u₀ / 2,
/// ```
///
/// with `𝓛₀ = -d²/dt² - 1/(4t²)`, `u₀` the normalized `n`-th eigenfunction of
/// `H_1` and `λ₀ = -1/(2n-1)²`.
pub fn lambda1_quadrature(n: usize) -> Result<f64> {
    lambda1_with_sign(n, 1.0)
}

fn lambda1_with_sign(n: usize, sign: f64) -> Result<f64> {
    let pair = ExactEigenpair::new(n, 1.0)?;
    let u0 = pair.exp_poly().scaled(sign);
    let lambda0 = pair.energy;
    let f = u0.times_power(1.0).scaled(0.5);
    let l0f = f
        .derivative()
        .derivative()
        .scaled(-1.0)
        .plus(&f.times_power(-2.0).scaled(-0.25));
    let g = f
        .times_power(-1.0)
        .scaled(-1.0)
        .plus(&l0f.scaled(1.0 / 3.0))
        .plus(&f.scaled(-lambda0 / 3.0));
    let s = (2 * n - 1) as f64;
    let split = 4.0 * s * n as f64;
    let q1 = integrate(|t| g.eval(t) * u0.eval(t), 0.0, split, 1e-12, 0.0);
    let q2 = integrate(|t| g.eval(t) * u0.eval(t), split, 40.0 * s.max(n as f64), 1e-12, 0.0);
    Ok(q1.value + q2.value)
}

/// Counts below the threshold over small angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountGrowth {
    /// `min_α N(α)·α`.
    pub kappa_hat: f64,
    /// `(α, N(α), lower estimate ⌊n_α - 1⌋)` rows, `α` ascending.
    pub table: Vec<(f64, usize, i64)>,
    /// Counts are non-increasing in `α`.
    pub monotone: bool,
    /// The constant used for the lower estimate.
    pub constant: f64,
}

/// `κ̂ = min N(α)α` and the monotonicity of counts; the lower estimate uses
/// `n_α = (1/(α√(1+𝒞)) + 1)/2` with `𝒞 = max |E_n + 1/((2n-1)²α²)|`.
pub fn count_growth(scan: &AlphaScan) -> CountGrowth {
    let mut constant: f64 = 0.0;
    for e in &scan.entries {
        for (j, &v) in e.eigenvalues.iter().enumerate() {
            if v < -1.0 {
                let lead = 1.0 / (((2 * j + 1) as f64) * e.alpha).powi(2);
                constant = constant.max((v + lead).abs());
            }
        }
    }
    let table: Vec<(f64, usize, i64)> = scan
        .entries
        .iter()
        .map(|e| {
            let n_alpha = (1.0 / (e.alpha * (1.0 + constant).sqrt()) + 1.0) / 2.0;
            (e.alpha, e.count, (n_alpha - 1.0).floor() as i64)
        })
        .collect();
    let kappa_hat = table
        .iter()
        .map(|&(a, n, _)| n as f64 * a)
        .fold(f64::INFINITY, f64::min);
    let monotone = table.windows(2).all(|w| w[1].1 <= w[0].1);
    CountGrowth { kappa_hat, table, monotone, constant }
}

/// Exponential decay rate fitted to the radial profile of an eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub window: (f64, f64),
    /// `|Pearson correlation|` of the linear fit.
    pub goodness: f64,
    /// The window was shortened because the profile underflowed.
    pub shrunk: bool,
}

/// Fits `½ ln p(r) ≈ c - rate·r` on `[f₀, f₁]·r_max`, where
/// `p(r) = r ∫ |u(r, θ)|² dθ`.
pub fn agmon_decay_rate(result: &EigenResult, pencil: &AssembledPencil, fit_fraction: (f64, f64)) -> Result<DecayFit> {
    let r_max = *pencil.layout.r_nodes.last().unwrap();
    agmon_decay_rate_within(result, pencil, fit_fraction, r_max)
}

/// As [`agmon_decay_rate`] with the window taken relative to `r_ref`
/// instead of the truncation radius. Useful when the grid was sized for a
/// more weakly bound mode and the ground state has long underflowed at
/// `0.4 r_max`.
pub fn agmon_decay_rate_within(
    result: &EigenResult,
    pencil: &AssembledPencil,
    fit_fraction: (f64, f64),
    r_ref: f64,
) -> Result<DecayFit> {
    let profile = pencil.radial_profile(&result.vector);
    fit_decay(&pencil.layout.r_nodes, &profile, (fit_fraction.0 * r_ref, fit_fraction.1 * r_ref))
}

/// Decay fit of a sampled profile on `window`.
pub fn fit_decay(r: &[f64], profile: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, mut hi) = window;
    if !(lo < hi) {
        return Err(Error::config(format!("invalid decay window [{lo}, {hi}]")));
    }
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let mut shrunk = false;
    // Shrink until the profile stays above the underflow floor.
    if let Some(i) = r
        .iter()
        .zip(profile)
        .position(|(&ri, &pi)| ri >= lo && ri <= hi && pi < 1e-14 * peak)
    {
        hi = r[i.saturating_sub(1)];
        shrunk = true;
    }
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(profile)
        .filter(|(&ri, &pi)| ri >= lo && ri <= hi && pi > 0.0)
        .map(|(&ri, &pi)| (ri, 0.5 * pi.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::config(format!(
            "decay window [{lo}, {hi}] holds {} usable samples",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let goodness = if syy > 0.0 { (sxy / (sxx * syy).sqrt()).abs() } else { 1.0 };
    Ok(DecayFit { rate: -slope, window: (lo, hi), goodness, shrunk })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_decay_is_recovered() {
        let r: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let kappa = 1.7;
        let p: Vec<f64> = r.iter().map(|&x| 3.0 * (-2.0 * kappa * x).exp()).collect();
        let fit = fit_decay(&r, &p, (4.0, 7.0)).unwrap();
        assert!((fit.rate - kappa).abs() < 1e-6);
        assert!(fit.goodness > 0.999_999);
        assert!(!fit.shrunk);
    }

    #[test]
    fn decay_window_shrinks_on_underflow() {
        let r: Vec<f64> = (0..400).map(|i| i as f64 * 0.1).collect();
        let p: Vec<f64> = r.iter().map(|&x| (-2.0 * x).exp()).collect();
        let fit = fit_decay(&r, &p, (5.0, 30.0)).unwrap();
        assert!(fit.shrunk && fit.window.1 < 17.0);
        assert!((fit.rate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lambda1_is_sign_invariant() {
        for n in 1..=3 {
            let a = lambda1_with_sign(n, 1.0).unwrap();
            let b = lambda1_with_sign(n, -1.0).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda1_matches_expansion_of_ground_state() {
        // -1/sin²α = -1/α² - 1/3 - α²/15 - …
        let l = lambda1_quadrature(1).unwrap();
        assert!((l + 1.0 / 3.0).abs() < 1e-9, "{l}");
    }

    #[test]
    fn even_power_fit_is_exact_on_polynomials() {
        let alphas = [0.04, 0.06, 0.08, 0.12, 0.16];
        let y: Vec<f64> = alphas.iter().map(|a: &f64| -1.0 - a * a / 3.0 - a.powi(4) / 15.0).collect();
        let (c, cond, res) = fit_even_powers(&alphas, &y, 2).unwrap();
        assert!((c[0] + 1.0).abs() < 1e-12);
        assert!((c[1] + 1.0 / 3.0).abs() < 1e-9);
        assert!(cond.is_finite() && res < 1e-12);
    }

    #[test]
    fn too_few_points_is_rank_deficient() {
        let err = fit_even_powers(&[0.1, 0.2], &[1.0, 2.0], 1).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { needed: 3, got: 2 }));
    }

    #[test]
    fn truncation_radius_follows_decay_length() {
        let pol = MeshPolicy::default();
        let p = SectorProblem::even(std::f64::consts::FRAC_PI_4).unwrap();
        assert!((pol.r_max_for(&p, 1) - 25.0).abs() < 1e-9);
        let q = SectorProblem::new(std::f64::consts::FRAC_PI_4, 2.0, Parity::Even).unwrap();
        assert!((pol.r_max_for(&q, 1) - 12.5).abs() < 1e-9);
    }
}
