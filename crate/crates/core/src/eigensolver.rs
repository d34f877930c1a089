//! Lowest eigenpairs of symmetric pencils `K x = λ M x`.
//!
//! The iterative solver is LOBPCG applied to the shifted pencil
//! `(K + cM, M)`, where `c` comes from the analytic lower bound carried by
//! every [`AssembledPencil`], so `K + cM` is positive definite by
//! construction. Counting uses the inertia of `K - tM`; certificates use
//! the quasimode bound
//!
//! ```text
//! dist(λ, spec T) ≤ ε λ / (1 - ε),   ε = ‖T^{-1/2}(T - λ)u‖ / ‖T^{1/2}u‖
//! ```
//!
//! for positive definite `T`, applied in the `M` geometry.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::AssembledPencil;
use crate::linalg::{band_inertia, generalized_eigen, symmetric_eigen_sorted, BandCholesky, SymBand};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Largest dimension accepted by [`dense_solve`].
pub const DENSE_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    /// Exact band Cholesky factor of `K + cM`.
    BandCholesky,
    /// Zero fill-in incomplete Cholesky, falling back to Jacobi on breakdown.
    IncompleteCholesky,
    Diagonal,
    None,
}

impl std::str::FromStr for Preconditioner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "band-cholesky" => Ok(Self::BandCholesky),
            "incomplete-cholesky" | "ic0" => Ok(Self::IncompleteCholesky),
            "diagonal" => Ok(Self::Diagonal),
            "none" => Ok(Self::None),
            _ => Err(Error::config(format!("unknown preconditioner '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub block_size: usize,
    /// Bound on `‖Kx - λMx‖_{M⁻¹} / (|λ| + 1)` for an `M`-normalized `x`, raised
    /// to the rounding floor of the pair when that is larger.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Shift making `K + cM` positive definite; `None` uses `1 - lower_bound`.
    pub shift_c: Option<f64>,
    pub preconditioner: Preconditioner,
    /// Seed of the random starting block.
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults for `k` wanted eigenpairs.
    pub fn for_count(k: usize) -> Self {
        Self {
            block_size: k + 2,
            tolerance: 1e-8,
            max_iterations: 500,
            shift_c: None,
            preconditioner: Preconditioner::BandCholesky,
            seed: 0x5ec7_0125,
        }
    }
}

/// Interval known to contain a point of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Enclosure {
    Certified { lower: f64, upper: f64, epsilon: f64 },
    /// `ε ≥ 1`: the residual is too large for the bound to say anything.
    Uninformative { epsilon: f64 },
}

impl Enclosure {
    pub fn epsilon(&self) -> f64 {
        match *self {
            Enclosure::Certified { epsilon, .. } | Enclosure::Uninformative { epsilon } => epsilon,
        }
    }

    /// `[lower, upper]` when certified.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Enclosure::Certified { lower, upper, .. } => Some((lower, upper)),
            Enclosure::Uninformative { .. } => None,
        }
    }

    pub fn width(&self) -> f64 {
        self.bounds().map_or(f64::INFINITY, |(a, b)| b - a)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.bounds().is_some_and(|(a, b)| a <= x && x <= b)
    }

    /// The same enclosure for the spectrum moved by `delta`.
    pub fn translated(self, delta: f64) -> Self {
        match self {
            Enclosure::Certified { lower, upper, epsilon } => Enclosure::Certified {
                lower: lower + delta,
                upper: upper + delta,
                epsilon,
            },
            u => u,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub value: f64,
    /// `M`-normalized coefficient vector.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub enclosure: Enclosure,
    pub converged: bool,
}

/// A symmetric positive definite operator with a way to solve against it.
pub trait SpdOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn solve(&self, b: &[f64]) -> Vec<f64>;
}

/// A sparse SPD matrix together with its band Cholesky factor.
#[derive(Debug, Clone)]
pub struct FactoredMatrix {
    pub matrix: CsrMatrix,
    factor: BandCholesky,
}

impl FactoredMatrix {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        let factor = BandCholesky::factor(SymBand::from_csr(&matrix))?;
        Ok(Self { matrix, factor })
    }

    pub fn factor(&self) -> &BandCholesky {
        &self.factor
    }
}

impl SpdOperator for FactoredMatrix {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.factor.solve(b)
    }
}

/// Quasimode enclosure for the pencil `(T, M)` with `T` positive definite.
///
/// `λ` must be positive. With `r = Tu - λMu`, `ε² = rᵀT⁻¹r / uᵀTu`, which is
/// the operator-level `ε` for `M⁻¹T` in the `M` inner product.
pub fn certify_quasimode<T: SpdOperator>(t: &T, m: &CsrMatrix, u: &[f64], lambda: f64) -> Result<Enclosure> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("quasimode value must be positive, got {lambda}")));
    }
    if u.iter().all(|&x| x == 0.0) {
        return Err(Error::domain("quasimode vector is zero"));
    }
    let tu = t.apply(u);
    let mu = m.apply(u);
    let r: Vec<f64> = tu.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
    let tinv_r = t.solve(&r);
    let num = dot(&r, &tinv_r).max(0.0);
    let den = dot(u, &tu);
    let epsilon = (num / den).sqrt();
    if epsilon >= 1.0 {
        return Ok(Enclosure::Uninformative { epsilon });
    }
    let delta = epsilon * lambda / (1.0 - epsilon);
    Ok(Enclosure::Certified {
        lower: (lambda - delta).max(0.0),
        upper: lambda + delta,
        epsilon,
    })
}

/// All eigenvalues and `M`-orthonormal eigenvectors, by dense reduction.
pub fn dense_eigen(k: &CsrMatrix, m: &CsrMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.dim();
    if n > DENSE_LIMIT {
        return Err(Error::DenseTooLarge { n, limit: DENSE_LIMIT });
    }
    generalized_eigen(&k.to_dense(), &m.to_dense())
}

/// All eigenvalues of a small pencil, ascending.
pub fn dense_solve(pencil: &AssembledPencil) -> Result<Vec<f64>> {
    Ok(dense_eigen(&pencil.k, &pencil.m)?.0)
}

/// Result of an inertia count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaCount {
    pub count: usize,
    /// Threshold actually factored; differs from the request after a zero pivot.
    pub threshold_used: f64,
}

/// Number of eigenvalues of `(K, M)` strictly below `threshold`.
pub fn count_below(k: &CsrMatrix, m: &CsrMatrix, threshold: f64) -> Result<InertiaCount> {
    let mut t = threshold;
    for attempt in 0..4 {
        let inertia = band_inertia(SymBand::from_csr_combination(k, -t, Some(m)));
        if inertia.zero == 0 {
            return Ok(InertiaCount { count: inertia.negative, threshold_used: t });
        }
        t = threshold - 1e-9 * threshold.abs().max(1.0) * (attempt + 1) as f64;
    }
    Err(Error::NonConvergence {
        iterations: 4,
        detail: format!("inertia factorization kept meeting zero pivots near {threshold}"),
    })
}

/// `N(pencil, threshold)`.
pub fn inertia_count(pencil: &AssembledPencil, threshold: f64) -> Result<usize> {
    Ok(count_below(&pencil.k, &pencil.m, threshold)?.count)
}

/// Incomplete Cholesky factor with the sparsity of the lower triangle.
#[derive(Debug, Clone)]
struct IncompleteCholesky {
    /// Row `i`: strictly lower entries `(j, L_ij)` sorted by `j`.
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl IncompleteCholesky {
    fn factor(a: &CsrMatrix) -> Option<Self> {
        let n = a.dim();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let mut row: Vec<(usize, f64)> = a.row(i).filter(|&(j, _)| j < i).collect();
            for idx in 0..row.len() {
                let (j, v) = row[idx];
                let s = sparse_dot(&row[..idx], &rows[j]);
                row[idx].1 = (v - s) / diag[j];
            }
            let d = a.get(i, i) - row.iter().map(|(_, l)| l * l).sum::<f64>();
            if !(d > 0.0) {
                return None;
            }
            diag[i] = d.sqrt();
            rows.push(row);
        }
        Some(Self { rows, diag })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = self.rows[i].iter().map(|&(j, l)| l * y[j]).sum();
            y[i] = (y[i] - s) / self.diag[i];
        }
        for i in (0..n).rev() {
            y[i] /= self.diag[i];
            let xi = y[i];
            for &(j, l) in &self.rows[i] {
                y[j] -= l * xi;
            }
        }
        y
    }
}

/// `Σ a_j b_j` over the common columns of two sorted sparse rows.
fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

enum Precond {
    Band(BandCholesky),
    Ic(IncompleteCholesky),
    Jacobi(Vec<f64>),
    Identity,
}

impl Precond {
    fn apply_block(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Precond::Identity => r.clone(),
            Precond::Jacobi(d) => DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] / d[i]),
            Precond::Band(f) => map_columns(r, |c| f.solve(c)),
            Precond::Ic(f) => map_columns(r, |c| f.solve(c)),
        }
    }
}

fn map_columns(r: &DMatrix<f64>, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..r.ncols())
        .into_par_iter()
        .map(|j| f(r.column(j).as_slice()))
        .collect();
    DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| cols[j][i])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `M`-orthonormal basis of the columns of `v` (SVQB), dropping directions
/// whose relative Gram eigenvalue is below `drop_tol`.
fn svqb(m: &CsrMatrix, v: DMatrix<f64>, drop_tol: f64) -> DMatrix<f64> {
    let mut v = v;
    for _ in 0..2 {
        if v.ncols() == 0 {
            return v;
        }
        let g = v.transpose() * m.mul_block(&v);
        let d: Vec<f64> = (0..g.nrows()).map(|i| 1.0 / g[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
        let gs = DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] * d[i] * d[j]);
        let (vals, vecs) = symmetric_eigen_sorted(gs);
        let top = vals[vals.len() - 1];
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > drop_tol * top).collect();
        let z = DMatrix::from_fn(v.ncols(), keep.len(), |i, c| d[i] * vecs[(i, keep[c])] / vals[keep[c]].sqrt());
        v = &v * z;
    }
    v
}

/// `V ← V - X (XᵀMV)` twice, for `M`-orthonormal `X`.
fn m_orthogonalize_against(x: &DMatrix<f64>, mx: &DMatrix<f64>, v: DMatrix<f64>) -> DMatrix<f64> {
    let mut v = v;
    for _ in 0..2 {
        let c = mx.transpose() * &v;
        v -= x * c;
    }
    v
}

fn starting_block(n: usize, b: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, b, |_, _| rng.gen_range(-1.0..1.0))
}

/// Size of the residual `Ax - θMx` that rounding alone produces: the
/// `M⁻¹`-norm of `ε(|A||x| + |θ||M||x|)`, divided by `scale`. Stiff pencils
/// (fine angular meshes close to the vertex) push it above any fixed
/// tolerance, so pairs are accepted at [`FLOOR_FACTOR`] times this value.
pub fn residual_floor(a: &CsrMatrix, m: &CsrMatrix, m_factor: &BandCholesky, x: &[f64], theta: f64, scale: f64) -> f64 {
    let delta: Vec<f64> = (0..x.len())
        .map(|i| {
            let ka: f64 = a.row(i).map(|(j, v)| (v * x[j]).abs()).sum();
            let mb: f64 = m.row(i).map(|(j, v)| (v * x[j]).abs()).sum();
            f64::EPSILON * (ka + theta.abs() * mb)
        })
        .collect();
    dot(&delta, &m_factor.solve(&delta)).max(0.0).sqrt() / scale
}

/// Multiple of [`residual_floor`] below which a residual counts as converged.
pub const FLOOR_FACTOR: f64 = 100.0;

fn residual_norms(
    r: &DMatrix<f64>,
    m_factor: &BandCholesky,
    lambdas: &[f64],
) -> Vec<f64> {
    (0..r.ncols())
        .into_par_iter()
        .map(|j| {
            let col = r.column(j);
            let s = m_factor.solve(col.as_slice());
            dot(col.as_slice(), &s).max(0.0).sqrt() / (lambdas[j].abs() + 1.0)
        })
        .collect()
}

/// The `nev` lowest eigenpairs of `(K, M)` given `xᵀKx ≥ lower_bound·xᵀMx`.
pub fn lobpcg(k: &CsrMatrix, m: &CsrMatrix, lower_bound: f64, nev: usize, cfg: &SolverConfig) -> Result<Vec<EigenResult>> {
    let n = k.dim();
    if nev == 0 {
        return Ok(Vec::new());
    }
    if cfg.block_size < nev + 2 {
        return Err(Error::config(format!(
            "block size {} must be at least the requested count plus two ({})",
            cfg.block_size,
            nev + 2
        )));
    }
    let b = cfg.block_size.min(n);
    if nev > b {
        return Err(Error::config(format!("requested {nev} eigenpairs of a {n}-dimensional pencil")));
    }
    let c = cfg.shift_c.unwrap_or(1.0 - lower_bound);
    if !(c > -lower_bound) {
        return Err(Error::config(format!(
            "shift c = {c} does not exceed minus the analytic lower bound {lower_bound}"
        )));
    }
    let a = k.add_scaled(c, m);
    let a_fact = FactoredMatrix::new(a.clone()).map_err(|e| match e {
        Error::NotPositiveDefinite { row, pivot, .. } => Error::NotPositiveDefinite {
            row,
            pivot,
            context: format!(
                "K + cM with c = {c} is not positive definite; the analytic bound xᵀKx ≥ {lower_bound}·xᵀMx is violated"
            ),
        },
        e => e,
    })?;
    let m_factor = BandCholesky::factor(SymBand::from_csr(m)).map_err(|e| match e {
        Error::NotPositiveDefinite { row, pivot, .. } => Error::NotPositiveDefinite {
            row,
            pivot,
            context: "mass matrix".into(),
        },
        e => e,
    })?;
    let precond = match cfg.preconditioner {
        Preconditioner::BandCholesky => Precond::Band(a_fact.factor().clone()),
        Preconditioner::IncompleteCholesky => match IncompleteCholesky::factor(&a) {
            Some(f) => Precond::Ic(f),
            None => Precond::Jacobi(a.diagonal()),
        },
        Preconditioner::Diagonal => Precond::Jacobi(a.diagonal()),
        Preconditioner::None => Precond::Identity,
    };

    // Small problems: everything fits in the search space.
    if 3 * b >= n {
        let (vals, vecs) = dense_eigen(k, m)?;
        return (0..nev)
            .map(|j| {
                let x: Vec<f64> = vecs.column(j).iter().copied().collect();
                finish(k, m, &a_fact, &m_factor, c, vals[j], x, cfg.tolerance)
            })
            .collect();
    }

    let x0 = precond.apply_block(&starting_block(n, b, cfg.seed));
    let mut x = svqb(m, x0, 1e-14);
    if x.ncols() < b {
        return Err(Error::NonConvergence { iterations: 0, detail: "starting block is rank deficient".into() });
    }
    // Initial Rayleigh–Ritz.
    let ax = a.mul_block(&x);
    let (theta, cvec) = generalized_eigen(&(x.transpose() * &ax), &(x.transpose() * m.mul_block(&x)))?;
    x = &x * cvec;
    let mut theta = theta;
    let mut p: Option<DMatrix<f64>> = None;
    let mut res = vec![f64::INFINITY; b];
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let ax = a.mul_block(&x);
        let mx = m.mul_block(&x);
        let mut r = ax.clone();
        for j in 0..b {
            let t = theta[j];
            r.column_mut(j).axpy(-t, &mx.column(j), 1.0);
        }
        let lambdas: Vec<f64> = theta.iter().map(|t| t - c).collect();
        res = residual_norms(&r, &m_factor, &lambdas);
        let tols: Vec<f64> = (0..b)
            .into_par_iter()
            .map(|j| {
                if res[j] <= cfg.tolerance {
                    return cfg.tolerance;
                }
                let xj: Vec<f64> = x.column(j).iter().copied().collect();
                let floor = residual_floor(&a, m, &m_factor, &xj, theta[j], lambdas[j].abs() + 1.0);
                cfg.tolerance.max(FLOOR_FACTOR * floor)
            })
            .collect();
        if (0..nev).all(|j| res[j] <= tols[j]) {
            break;
        }
        let active: Vec<usize> = (0..b).filter(|&j| res[j] > tols[j]).collect();
        let r_act = r.select_columns(&active);
        let w = precond.apply_block(&r_act);
        let mut q = w;
        if let Some(p_prev) = &p {
            let p_act = p_prev.select_columns(&active);
            q = concat_columns(&q, &p_act);
        }
        let q = m_orthogonalize_against(&x, &mx, q);
        let q = svqb(m, q, 1e-12);
        let q = m_orthogonalize_against(&x, &mx, q);
        let s = concat_columns(&x, &q);
        let as_ = concat_columns(&ax, &a.mul_block(&q));
        let ms = m.mul_block(&s);
        let h = s.transpose() * &as_;
        let h = (&h + h.transpose()) * 0.5;
        let g = s.transpose() * &ms;
        let g = (&g + g.transpose()) * 0.5;
        let (new_theta, coef) = generalized_eigen(&h, &g)?;
        // Rayleigh–Ritz over a space containing X cannot raise a Ritz value
        // beyond the rounding in xᵀAx, which is of order ε|x|ᵀ|A||x|. With
        // the tiny mass entries near the vertex that far exceeds ε|θ|.
        if cfg!(debug_assertions) {
            for j in 0..b {
                let xj: Vec<f64> = x.column(j).iter().copied().collect();
                let slack = 1e-9 * theta[j].abs().max(1.0) + 64.0 * f64::EPSILON * abs_quadratic(&a, &xj);
                assert!(new_theta[j] <= theta[j] + slack, "Ritz value {j} increased: {} -> {}", theta[j], new_theta[j]);
            }
        }
        let cb = coef.columns(0, b).into_owned();
        let cq = cb.rows(b, q.ncols()).into_owned();
        p = Some(&q * cq);
        x = &s * cb;
        theta = new_theta[..b].to_vec();
        if theta[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                row: 0,
                pivot: theta[0],
                context: format!("Ritz value of K + cM (c = {c}) is not positive; analytic bound {lower_bound} violated"),
            });
        }
    }
    let mut out = Vec::with_capacity(nev);
    for j in 0..nev {
        let xj: Vec<f64> = x.column(j).iter().copied().collect();
        out.push(finish(k, m, &a_fact, &m_factor, c, theta[j] - c, xj, cfg.tolerance)?);
    }
    Ok(out)
}

/// Normalizes, recomputes value and residual, and certifies one pair.
#[allow(clippy::too_many_arguments)]
fn finish(
    k: &CsrMatrix,
    m: &CsrMatrix,
    a: &FactoredMatrix,
    m_factor: &BandCholesky,
    c: f64,
    _value: f64,
    mut x: Vec<f64>,
    tol: f64,
) -> Result<EigenResult> {
    let mx = m.apply(&x);
    let nrm = dot(&x, &mx).sqrt();
    x.iter_mut().for_each(|v| *v /= nrm);
    // sign convention: largest component positive
    let imax = (0..x.len()).max_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap_or(0);
    if x[imax] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let kx = k.apply(&x);
    let mx = m.apply(&x);
    let value = dot(&x, &kx);
    let r: Vec<f64> = kx.iter().zip(&mx).map(|(p, q)| p - value * q).collect();
    let residual = dot(&r, &m_factor.solve(&r)).max(0.0).sqrt() / (value.abs() + 1.0);
    let converged = residual <= tol || residual <= FLOOR_FACTOR * residual_floor(k, m, m_factor, &x, value, value.abs() + 1.0);
    let enclosure = certify_quasimode(a, m, &x, value + c)?.translated(-c);
    Ok(EigenResult { value, vector: x, residual, enclosure, converged })
}

/// `|x|ᵀ|A||x|`.
fn abs_quadratic(a: &CsrMatrix, x: &[f64]) -> f64 {
    (0..x.len()).map(|i| x[i].abs() * a.row(i).map(|(j, v)| (v * x[j]).abs()).sum::<f64>()).sum()
}

fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p, q) = (a.nrows(), a.ncols(), b.ncols());
    DMatrix::from_fn(n, p + q, |i, j| if j < p { a[(i, j)] } else { b[(i, j - p)] })
}

/// The `k` lowest eigenpairs of an assembled pencil, ascending.
pub fn solve_lowest(pencil: &AssembledPencil, k: usize, cfg: &SolverConfig) -> Result<Vec<EigenResult>> {
    lobpcg(&pencil.k, &pencil.m, pencil.lower_bound, k, cfg)
}
