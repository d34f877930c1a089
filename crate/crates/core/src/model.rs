//! The radial operator `H_a = -d²/dr² - 1/(4r²) - 1/(ar)` on `(0, ∞)`.
//!
//! Its Friedrichs realization has the eigenvalues `-1/((2n-1)² a²)` with
//! eigenfunctions `√r e^{-r/s} L_{n-1}(2r/s)`, `s = (2n-1)a`. Under
//! `v = √r u` the operator becomes `-u'' - u'/r - u/(ar)` in `L²(r dr)`,
//! whose form `∫ r|u'|² - |u|²/a dr` is what [`discretize_model`] uses.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::quadrature::integrate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelProblem {
    pub a: f64,
}

impl ModelProblem {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::config(format!("coupling a must be positive, got {a}")));
        }
        Ok(Self { a })
    }
}

/// `-1/((2n-1)² a²)`.
pub fn exact_eigenvalue(n: usize, a: f64) -> f64 {
    let s = (2 * n - 1) as f64 * a;
    -1.0 / (s * s)
}

/// Laguerre polynomial `L_m(x)` by the three-term recurrence.
pub fn laguerre(m: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if m == 0 {
        return prev;
    }
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Monomial coefficients of `L_m`: `(-1)^k C(m, k) / k!`.
pub fn laguerre_coefficients(m: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(m + 1);
    let mut binom = 1.0;
    let mut fact = 1.0;
    for k in 0..=m {
        if k > 0 {
            binom *= (m + 1 - k) as f64 / k as f64;
            fact *= k as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        c.push(sign * binom / fact);
    }
    c
}

/// `Σ c_i r^{p_i} e^{-βr}`: closed under differentiation and multiplication
/// by powers of `r`, which is all the eigenfunction calculus here needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    pub beta: f64,
    pub terms: Vec<(f64, f64)>,
}

impl ExpPoly {
    pub fn eval(&self, r: f64) -> f64 {
        let s: f64 = self.terms.iter().map(|&(p, c)| c * r.powf(p)).sum();
        s * (-self.beta * r).exp()
    }

    pub fn derivative(&self) -> ExpPoly {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for &(p, c) in &self.terms {
            if p != 0.0 {
                terms.push((p - 1.0, c * p));
            }
            terms.push((p, -self.beta * c));
        }
        ExpPoly { beta: self.beta, terms }.collect()
    }

    /// `r^q · self`.
    pub fn times_power(&self, q: f64) -> ExpPoly {
        ExpPoly {
            beta: self.beta,
            terms: self.terms.iter().map(|&(p, c)| (p + q, c)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> ExpPoly {
        ExpPoly {
            beta: self.beta,
            terms: self.terms.iter().map(|&(p, c)| (p, c * s)).collect(),
        }
    }

    /// Sum of two expressions with the same exponential rate.
    pub fn plus(&self, other: &ExpPoly) -> ExpPoly {
        assert_eq!(self.beta, other.beta);
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        ExpPoly { beta: self.beta, terms }.collect()
    }

    fn collect(mut self) -> ExpPoly {
        self.terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.terms.len());
        for (p, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == p => last.1 += c,
                _ => out.push((p, c)),
            }
        }
        ExpPoly { beta: self.beta, terms: out }
    }
}

/// Exact eigenpair `n` of `H_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactEigenpair {
    pub n: usize,
    pub a: f64,
    pub energy: f64,
    /// Reciprocal of the `L²(0, ∞)` norm of the unnormalized `ψ_n`.
    pub norm_constant: f64,
}

impl ExactEigenpair {
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("eigenvalue index starts at 1"));
        }
        ModelProblem::new(a)?;
        let s = (2 * n - 1) as f64 * a;
        let upper = 40.0 * s;
        let psi = |r: f64| {
            let v = unnormalized(n, a, r);
            v * v
        };
        // Split where the Laguerre factor oscillates and the tail.
        let q1 = integrate(psi, 0.0, 4.0 * s * n as f64, 1e-13, 0.0);
        let q2 = integrate(psi, 4.0 * s * n as f64, upper.max(8.0 * s * n as f64), 1e-13, 0.0);
        let norm2 = q1.value + q2.value;
        Ok(Self {
            n,
            a,
            energy: exact_eigenvalue(n, a),
            norm_constant: 1.0 / norm2.sqrt(),
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.norm_constant * unnormalized(self.n, self.a, r)
    }

    /// The normalized eigenfunction as an [`ExpPoly`].
    pub fn exp_poly(&self) -> ExpPoly {
        let s = (2 * self.n - 1) as f64 * self.a;
        let coeffs = laguerre_coefficients(self.n - 1);
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| (k as f64 + 0.5, self.norm_constant * c * (2.0 / s).powi(k as i32)))
            .collect();
        ExpPoly { beta: 1.0 / s, terms }
    }

    /// `(H_a - E_n)ψ_n` at `r`, from analytic derivatives.
    pub fn residual(&self, r: f64) -> f64 {
        let psi = self.exp_poly();
        let d2 = psi.derivative().derivative();
        let v = psi.eval(r);
        -d2.eval(r) - v / (4.0 * r * r) - v / (self.a * r) - self.energy * v
    }
}

fn unnormalized(n: usize, a: f64, r: f64) -> f64 {
    let s = (2 * n - 1) as f64 * a;
    r.sqrt() * (-r / s).exp() * laguerre(n - 1, 2.0 * r / s)
}

/// `ψ_n(r)` for `H_a`; divided by its `L²` norm when `normalized`.
pub fn exact_eigenfunction(n: usize, a: f64, r: f64, normalized: bool) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if normalized {
        Ok(ExactEigenpair::new(n, a)?.eval(r))
    } else {
        ModelProblem::new(a)?;
        if n == 0 {
            return Err(Error::domain("eigenvalue index starts at 1"));
        }
        Ok(unnormalized(n, a, r))
    }
}

/// Samples of a function of `r > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGridFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialGridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::config("nodes and values differ in length"));
        }
        if nodes.first().is_some_and(|&r| !(r > 0.0)) {
            return Err(Error::config("radial grid functions live on r > 0"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("nodes must be strictly increasing"));
        }
        Ok(Self { nodes, values })
    }

    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::new(nodes, values)
    }
}

/// Linear finite elements for `H_a` on the nodes `r_0 < … < r_N`.
///
/// The unknown is `u = v/√r`. A Dirichlet condition holds at `r_N`; at `r_0`
/// it holds when `r_0 > 0`, while `r_0 = 0` leaves the vertex value free
/// (the Friedrichs behavior `v ~ √r`). All element integrals are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPencil {
    pub a: f64,
    pub nodes: Vec<f64>,
    /// Node index of the first degree of freedom.
    first: usize,
    k_diag: Vec<f64>,
    k_off: Vec<f64>,
    m_diag: Vec<f64>,
    m_off: Vec<f64>,
}

/// Assembles the tridiagonal pencil of `H_a` on `nodes`.
pub fn discretize_model(p: &ModelProblem, nodes: &[f64]) -> Result<ModelPencil> {
    if nodes.first().is_some_and(|&r| r < 0.0) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("nodes must be nonnegative and strictly increasing"));
    }
    let first = if nodes[0] == 0.0 { 0 } else { 1 };
    let n_dof = nodes.len().saturating_sub(1 + first);
    if n_dof < 8 {
        return Err(Error::config(format!("need at least 8 interior nodes, got {n_dof}")));
    }
    let mut kd = vec![0.0; n_dof];
    let mut ko = vec![0.0; n_dof.saturating_sub(1)];
    let mut md = vec![0.0; n_dof];
    let mut mo = vec![0.0; n_dof.saturating_sub(1)];
    for e in 0..nodes.len() - 1 {
        let (r0, r1) = (nodes[e], nodes[e + 1]);
        let h = r1 - r0;
        let s = (r0 + r1) / (2.0 * h);
        let kl = [[s - h / (3.0 * p.a), -s - h / (6.0 * p.a)], [0.0, s - h / (3.0 * p.a)]];
        let ml = [[h / 12.0 * (3.0 * r0 + r1), h / 12.0 * (r0 + r1)], [0.0, h / 12.0 * (r0 + 3.0 * r1)]];
        let dof = |node: usize| (node >= first && node < nodes.len() - 1).then(|| node - first);
        let (i0, i1) = (dof(e), dof(e + 1));
        if let Some(i) = i0 {
            kd[i] += kl[0][0];
            md[i] += ml[0][0];
        }
        if let Some(i) = i1 {
            kd[i] += kl[1][1];
            md[i] += ml[1][1];
        }
        if let (Some(i), Some(_)) = (i0, i1) {
            ko[i] += kl[0][1];
            mo[i] += ml[0][1];
        }
    }
    Ok(ModelPencil {
        a: p.a,
        nodes: nodes.to_vec(),
        first,
        k_diag: kd,
        k_off: ko,
        m_diag: md,
        m_off: mo,
    })
}

impl ModelPencil {
    pub fn dim(&self) -> usize {
        self.k_diag.len()
    }

    /// Number of eigenvalues strictly below `t` (Sylvester inertia of the
    /// tridiagonal `K - tM`).
    pub fn count_below(&self, t: f64) -> usize {
        let n = self.dim();
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..n {
            let a = self.k_diag[i] - t * self.m_diag[i];
            d = if i == 0 {
                a
            } else {
                let b = self.k_off[i - 1] - t * self.m_off[i - 1];
                a - b * b / d
            };
            if d == 0.0 {
                d = -f64::EPSILON * a.abs().max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue `j` (0-based, ascending) by bisection on inertia counts.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        if j >= self.dim() {
            return Err(Error::domain(format!("index {j} exceeds dimension {}", self.dim())));
        }
        // Conforming: the discrete spectrum lies above the exact ground state.
        let mut lo = exact_eigenvalue(1, self.a) - 1.0;
        let mut hi = 1.0;
        while self.count_below(hi) <= j {
            hi *= 4.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn lowest(&self, k: usize) -> Result<Vec<f64>> {
        (0..k).map(|j| self.eigenvalue(j)).collect()
    }

    /// Eigenvector `j` by inverse iteration, returned as `v = √r u` on the
    /// nodes with `r > 0`, normalized in `L²(dr)` (equivalently `u` in
    /// `L²(r dr)`) and positive near the vertex.
    pub fn eigenfunction(&self, j: usize) -> Result<RadialGridFunction> {
        let lambda = self.eigenvalue(j)?;
        let n = self.dim();
        let shift = lambda - 1e-10 * lambda.abs().max(1.0);
        let mut x = vec![1.0; n];
        for _ in 0..4 {
            let b = self.m_apply(&x);
            x = self.solve_shifted(shift, &b);
            let nrm = dot(&x, &self.m_apply(&x)).sqrt();
            x.iter_mut().for_each(|v| *v /= nrm);
        }
        if x[0] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (i, &r) in self.nodes.iter().enumerate().skip(1) {
            let u = if i < self.nodes.len() - 1 { x[i - self.first] } else { 0.0 };
            nodes.push(r);
            values.push(r.sqrt() * u);
        }
        RadialGridFunction::new(nodes, values)
    }

    fn m_apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = self.m_diag[i] * x[i];
                if i > 0 {
                    s += self.m_off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.m_off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `(K - tM) x = b` by the Thomas algorithm.
    fn solve_shifted(&self, t: f64, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let a: Vec<f64> = (0..n).map(|i| self.k_diag[i] - t * self.m_diag[i]).collect();
        let o: Vec<f64> = (0..n - 1).map(|i| self.k_off[i] - t * self.m_off[i]).collect();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = a[0];
        c[0] = if n > 1 { o[0] / piv } else { 0.0 };
        d[0] = b[0] / piv;
        for i in 1..n {
            piv = a[i] - o[i - 1] * c[i - 1];
            if piv == 0.0 {
                piv = f64::EPSILON;
            }
            if i + 1 < n {
                c[i] = o[i] / piv;
            }
            d[i] = (b[i] - o[i - 1] * d[i - 1]) / piv;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coefficients of `v(r) ≈ a₁√r + a₂√r ln r` near the vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedrichsFit {
    pub a1: f64,
    pub a2: f64,
    /// Ratio of singular values of the scaled design matrix.
    pub condition: f64,
    pub points: usize,
    pub warning: Option<String>,
}

/// Least-squares fit of `u` against `{√r, √r ln r}` on `window`.
pub fn friedrichs_coefficients(u: &RadialGridFunction, window: (f64, f64)) -> Result<FriedrichsFit> {
    let (lo, hi) = window;
    if !(0.0 < lo && lo < hi) {
        return Err(Error::config(format!("invalid fit window [{lo}, {hi}]")));
    }
    let pts: Vec<(f64, f64)> = u
        .nodes
        .iter()
        .zip(&u.values)
        .filter(|(&r, _)| r >= lo && r <= hi)
        .map(|(&r, &v)| (r, v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::RankDeficient { needed: 2, got: pts.len() });
    }
    let a = DMatrix::from_fn(pts.len(), 2, |i, j| {
        let r = pts[i].0;
        if j == 0 {
            r.sqrt()
        } else {
            r.sqrt() * r.ln()
        }
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let norms: Vec<f64> = (0..2).map(|j| a.column(j).norm()).collect();
    let scaled = DMatrix::from_fn(a.nrows(), 2, |i, j| a[(i, j)] / norms[j]);
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let sol = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|e| Error::InvariantViolation(format!("least squares failed: {e}")))?;
    let mut warning = None;
    if pts.len() < 4 || condition > 1e6 {
        warning = Some(format!(
            "fit window [{lo}, {hi}] is poorly conditioned ({} points, condition {condition:.3e})",
            pts.len()
        ));
    }
    Ok(FriedrichsFit {
        a1: sol[0] / norms[0],
        a2: sol[1] / norms[1],
        condition,
        points: pts.len(),
        warning,
    })
}

/// Slope `b` of the fit `ln|f| ≈ c + b r + p ln r + q/r` on `[lo, hi]`.
///
/// The `ln r` and `1/r` columns absorb the algebraic prefactor of an
/// `r^p (1 + O(1/r)) e^{-κr}` profile so that `-b` estimates the rate.
pub fn log_decay_slope(f: &RadialGridFunction, lo: f64, hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = f
        .nodes
        .iter()
        .zip(&f.values)
        .filter(|(&r, &v)| r >= lo && r <= hi && v != 0.0)
        .map(|(&r, &v)| (r, v.abs().ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::RankDeficient { needed: 4, got: pts.len() });
    }
    let a = DMatrix::from_fn(pts.len(), 4, |i, j| match j {
        0 => 1.0,
        1 => pts[i].0,
        2 => pts[i].0.ln(),
        _ => 1.0 / pts[i].0,
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvariantViolation(format!("least squares failed: {e}")))?;
    Ok(sol[1])
}
